// Prompting state machine. Pure functions over plain objects; the cursor
// only advances in registerRecording, never in nextPrompt, so an aborted
// recording shows the same prompt again.

import type { PromptStep, RuntimeConfig, SessionState } from './types.js';

export function newSession(config: RuntimeConfig, nowMs: number): SessionState {
  const session: SessionState = {
    selectedList: null,
    selectedListLength: null,
    cursor: 0,
    lastActivityMs: nowMs,
  };
  if (config.mode === 'guided' && config.lists.length === 1) {
    return selectList(session, config, 0);
  }
  return session;
}

export function selectList(
  session: SessionState,
  config: RuntimeConfig,
  index: number
): SessionState {
  if (index < 0 || index >= config.lists.length) {
    throw new Error(`list index ${index} out of range`);
  }
  return {
    ...session,
    selectedList: index,
    selectedListLength: config.lists[index].length,
    cursor: 0,
  };
}

export function nextPrompt(session: SessionState, config: RuntimeConfig): PromptStep {
  if (config.mode === 'free_recording') {
    return { kind: 'free', text: '', seconds: null };
  }
  if (config.mode === 'text_only') {
    return { kind: 'text_only', text: firstMeaningfulText(config), seconds: null };
  }
  if (session.selectedList === null) {
    throw new Error('guided mode requires a selected list');
  }
  const prompts = config.lists[session.selectedList];
  const pair = prompts[session.cursor];
  if (pair.seconds !== null) {
    return { kind: 'record', text: pair.text, seconds: pair.seconds };
  }
  if (session.cursor === prompts.length - 1) {
    return { kind: 'terminal', text: pair.text, seconds: null };
  }
  return { kind: 'text_only', text: pair.text, seconds: null };
}

function firstMeaningfulText(config: RuntimeConfig): string {
  // Text-only configs start with the sentinel pair; show the first real text.
  for (const pair of config.lists[0].slice(1)) {
    if (pair.text.trim()) return pair.text;
  }
  return '';
}

export function effectiveRecordSeconds(step: PromptStep, config: RuntimeConfig): number {
  if (step.kind === 'record') return step.seconds as number;
  if (step.kind === 'free') return config.max_recording_time;
  throw new Error(`${step.kind} is not a recording step`);
}

export function registerRecording(session: SessionState, nowMs: number): SessionState {
  let cursor = session.cursor;
  if (session.selectedListLength) {
    cursor = (cursor + 1) % session.selectedListLength;
  }
  return { ...session, cursor, lastActivityMs: nowMs };
}

export function sessionExpired(
  session: SessionState,
  resetTimeMinutes: number,
  nowMs: number
): boolean {
  // Strictly more than reset_time minutes since the last activity.
  return nowMs - session.lastActivityMs > resetTimeMinutes * 60_000;
}

export function resetSession(
  session: SessionState,
  config: RuntimeConfig,
  nowMs: number
): SessionState {
  const fresh = { ...session, cursor: 0, lastActivityMs: nowMs };
  if (config.lists.length >= 2) {
    fresh.selectedList = null;
    fresh.selectedListLength = null;
  }
  return fresh;
}

export function startOver(session: SessionState, nowMs: number): SessionState {
  return { ...session, cursor: 0, lastActivityMs: nowMs };
}
