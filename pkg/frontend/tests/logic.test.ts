// Unit tests for the pure protocol mirrors.

import { describe, expect, it } from 'vitest';

import { parseRuntimeConfig, requiredSelection } from '../src/config';
import { applyAgeCap, renderableQuestions, validateAnswers } from '../src/personalInfo';
import {
  newSession,
  nextPrompt,
  registerRecording,
  resetSession,
  selectList,
  sessionExpired,
} from '../src/session';
import { defaultStatus, generateNeighborCode, resetCounts, shouldUploadStatus } from '../src/status';
import { configDoc } from './helpers';

describe('config parsing', () => {
  it('classifies guided / free / text-only', () => {
    expect(parseRuntimeConfig(configDoc([[['say a', 5]]]), 3).mode).toBe('guided');
    expect(parseRuntimeConfig('', 1).mode).toBe('free_recording');
    expect(parseRuntimeConfig(JSON.stringify({ lists: [] }), 1).mode).toBe('free_recording');
    expect(
      parseRuntimeConfig(
        configDoc([
          [
            ['no_recording', 0],
            ['how do you feel?', null],
          ],
        ]),
        4
      ).mode
    ).toBe('text_only');
  });

  it('asks for selection only with two or more guided lists', () => {
    const single = parseRuntimeConfig(configDoc([[['a', 5]]]), 3);
    expect(requiredSelection(single)).toBeNull();
    const multi = parseRuntimeConfig(
      configDoc([[['a', 5]], [['b', 6]]], 'Pick one'),
      3
    );
    expect(requiredSelection(multi)).toEqual({ selectorString: 'Pick one', listCount: 2 });
  });
});

describe('session state machine', () => {
  const config = parseRuntimeConfig(
    configDoc([
      [
        ['one', 5],
        ['two', 10],
        ['three', 8],
      ],
    ]),
    3
  );

  it('cycles round-robin and only advances on registration', () => {
    let session = newSession(config, 0);
    for (let k = 0; k < 12; k++) {
      expect(nextPrompt(session, config).text).toBe(['one', 'two', 'three'][k % 3]);
      expect(nextPrompt(session, config).text).toBe(['one', 'two', 'three'][k % 3]); // no advance
      session = registerRecording(session, k);
    }
  });

  it('maps textless pairs to text-only steps and final textless to terminal', () => {
    const cfg = parseRuntimeConfig(
      configDoc([
        [
          ['rec', 5],
          ['talk to us', null],
          ['bye', null],
        ],
      ]),
      3
    );
    let session = newSession(cfg, 0);
    expect(nextPrompt(session, cfg).kind).toBe('record');
    session = registerRecording(session, 1);
    expect(nextPrompt(session, cfg).kind).toBe('text_only');
    session = registerRecording(session, 2);
    expect(nextPrompt(session, cfg).kind).toBe('terminal');
  });

  it('expires strictly after reset_time and clears multi-list selection', () => {
    const multi = parseRuntimeConfig(configDoc([[['a', 5]], [['b', 6]]], 'pick'), 3);
    let session = selectList(newSession(multi, 0), multi, 1);
    expect(sessionExpired(session, 30, 30 * 60_000)).toBe(false); // exactly 30 min
    expect(sessionExpired(session, 30, 30 * 60_000 + 1)).toBe(true);
    session = resetSession(session, multi, 31 * 60_000);
    expect(session.selectedList).toBeNull();
  });
});

describe('status rules', () => {
  it('reset archives current into total', () => {
    const status = { ...defaultStatus(), total_count: 5, current_count: 3 };
    const after = resetCounts(status);
    expect(after.total_count).toBe(8);
    expect(after.current_count).toBe(0);
    expect(after.dirty).toBe(true);
  });

  it('uploads when dirty or strictly idle past reset_time', () => {
    const base = defaultStatus();
    expect(shouldUploadStatus(base, 0)).toBe(false);
    expect(shouldUploadStatus({ ...base, dirty: true }, 0)).toBe(true);
    const stamped = { ...base, last_recording_time: new Date(0).toISOString() };
    expect(shouldUploadStatus(stamped, 30 * 60_000)).toBe(false);
    expect(shouldUploadStatus(stamped, 30 * 60_000 + 1)).toBe(true);
  });

  it('neighbor codes are 6 digits and never repeat', () => {
    const existing = new Set<string>();
    let calls = 0;
    // force a collision on the second draw
    const rand = () => [0.5, 0.5, 0.7][calls++] ?? Math.random();
    const first = generateNeighborCode(existing, rand);
    existing.add(first);
    const second = generateNeighborCode(existing, rand);
    expect(first).toMatch(/^\d{6}$/);
    expect(second).toMatch(/^\d{6}$/);
    expect(second).not.toBe(first);
  });
});

describe('personal info guard', () => {
  const schema = {
    questions: [
      { id: 'country', kind: 'text' as const, label: { en: 'Country' } },
      {
        id: 'age',
        kind: 'pulldown' as const,
        label: { en: 'Age' },
        options: ['1', '89', '90+'],
        constraints: { age_cap: 90 },
      },
    ],
  };

  it('caps ages at 90 into the bucket', () => {
    expect(applyAgeCap(89, 90)).toBe(89);
    expect(applyAgeCap(90, 90)).toBe('90+');
    expect(applyAgeCap(95, 90)).toBe('90+');
    expect(applyAgeCap('17', 90)).toBe(17);
    expect(applyAgeCap('90+', 90)).toBe('90+');
    expect(() => applyAgeCap('soon', 90)).toThrow();
  });

  it('rejects forbidden and unknown keys', () => {
    expect(() => validateAnswers({ name: 'Alice' }, schema)).toThrow(/forbidden/);
    expect(() => validateAnswers({ favorite_color: 'red' }, schema)).toThrow(/unknown/);
    expect(validateAnswers({ country: 'ES', age: 95 }, schema)).toEqual({
      country: 'ES',
      age: '90+',
    });
  });

  it('never renders forbidden questions even if served', () => {
    const hostile = {
      questions: [
        ...schema.questions,
        { id: 'birth_day', kind: 'text' as const, label: { en: 'Birth day' } },
      ],
    };
    expect(renderableQuestions(hostile).map((q) => q.id)).toEqual(['country', 'age']);
  });
});
