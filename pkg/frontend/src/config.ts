// Runtime-config handling on the browser side. The server already
// validated the document at install time, so parsing here only needs to
// classify it and reject shapes the UI cannot drive.

import type { Mode, PromptPair, RuntimeConfig } from './types.js';

export const SENTINEL_TEXT = 'no_recording';
export const DEFAULT_MAX_RECORDING_TIME = 30;
export const DEFAULT_NO_RECORDING_TEXT = 'Recording de-activated, submit text only';

function classify(lists: PromptPair[][]): Mode {
  if (lists.length === 0) return 'free_recording';
  const first = lists[0][0];
  if (first.text === SENTINEL_TEXT && first.seconds === 0) return 'text_only';
  return 'guided';
}

export function parseRuntimeConfig(raw: string, expectedNumber: number): RuntimeConfig {
  if (!raw.trim()) {
    // Zero-length body is the free-recording special case.
    return emptyConfig(expectedNumber);
  }
  const doc = JSON.parse(raw);
  if (typeof doc !== 'object' || doc === null || Array.isArray(doc)) {
    throw new Error('config must be a JSON object');
  }
  const rawLists = doc.lists ?? [];
  if (!Array.isArray(rawLists)) throw new Error('"lists" must be an array');
  const lists: PromptPair[][] = rawLists.map((rl: any, li: number) => {
    const prompts = rl?.prompts;
    if (!Array.isArray(prompts) || prompts.length === 0) {
      throw new Error(`list ${li} holds no prompts`);
    }
    return prompts.map((p: any) => ({
      text: String(p.text ?? ''),
      seconds: p.seconds === null || p.seconds === undefined ? null : Number(p.seconds),
    }));
  });
  return {
    config_number: expectedNumber,
    selector_string: typeof doc.selector_string === 'string' ? doc.selector_string : '',
    lists,
    mode: classify(lists),
    no_recording_text:
      typeof doc.no_recording_text === 'string'
        ? doc.no_recording_text
        : DEFAULT_NO_RECORDING_TEXT,
    max_recording_time:
      typeof doc.max_recording_time === 'number'
        ? doc.max_recording_time
        : DEFAULT_MAX_RECORDING_TIME,
    default_engine_number:
      typeof doc.default_engine_number === 'number' ? doc.default_engine_number : 0,
  };
}

export function emptyConfig(number: number): RuntimeConfig {
  return {
    config_number: number,
    selector_string: '',
    lists: [],
    mode: 'free_recording',
    no_recording_text: DEFAULT_NO_RECORDING_TEXT,
    max_recording_time: DEFAULT_MAX_RECORDING_TIME,
    default_engine_number: 0,
  };
}

// Guided configs with two or more lists pop the selector.
export function requiredSelection(
  config: RuntimeConfig
): { selectorString: string; listCount: number } | null {
  if (config.mode !== 'guided' || config.lists.length <= 1) return null;
  return { selectorString: config.selector_string, listCount: config.lists.length };
}
