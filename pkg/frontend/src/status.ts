// Local settings/status document plus its decision rules. The document is
// uploaded verbatim, so this object's shape matches what the server checks.

import type { LocalStatus } from './types.js';

export const DEFAULT_RESET_TIME_MINUTES = 30;
export const NEIGHBOR_CODE_DIGITS = 6;

export function defaultStatus(): LocalStatus {
  return {
    language: 'en',
    study_code: null,
    personal_info: {},
    generated_neighbor_codes: [],
    entered_neighbor_codes: [],
    run_time_file_config_number: 0,
    total_count: 0,
    current_count: 0,
    reset_time: DEFAULT_RESET_TIME_MINUTES,
    engine_number: 0,
    vns_number: '',
    dynamic_vns_toggle: true,
    dynamic_vns: null,
    dirty: false,
    ui_color: '',
    last_recording_time: null,
  };
}

// Archive the visible counter: total += current, current = 0.
export function resetCounts(status: LocalStatus): LocalStatus {
  return {
    ...status,
    total_count: status.total_count + status.current_count,
    current_count: 0,
    dirty: true,
  };
}

export function shouldUploadStatus(status: LocalStatus, nowMs: number): boolean {
  if (status.dirty) return true;
  if (status.last_recording_time === null) return false;
  const last = Date.parse(status.last_recording_time);
  return nowMs - last > status.reset_time * 60_000;
}

export function generateNeighborCode(existing: Set<string>, rand: () => number): string {
  // A fresh 6-decimal-digit code, shareable verbally, never a repeat.
  const space = 10 ** NEIGHBOR_CODE_DIGITS;
  if (existing.size >= space) throw new Error('all codes taken');
  for (;;) {
    const code = String(Math.floor(rand() * space)).padStart(NEIGHBOR_CODE_DIGITS, '0');
    if (!existing.has(code)) return code;
  }
}
