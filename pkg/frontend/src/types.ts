// Wire-facing types shared across the app. Field names match the server's
// JSON documents exactly; keep them snake_case.

export type Mode = 'guided' | 'free_recording' | 'text_only';

export interface PromptPair {
  text: string;
  seconds: number | null;
}

export interface RuntimeConfig {
  config_number: number;
  selector_string: string;
  lists: PromptPair[][];
  mode: Mode;
  no_recording_text: string;
  max_recording_time: number;
  default_engine_number: number;
}

export type StepKind = 'record' | 'text_only' | 'terminal' | 'free';

export interface PromptStep {
  kind: StepKind;
  text: string;
  seconds: number | null;
}

export interface SessionState {
  selectedList: number | null;
  selectedListLength: number | null;
  cursor: number;
  lastActivityMs: number;
}

// Mirrors the status document the server accepts at POST /status/{hash}.
export interface LocalStatus {
  language: string;
  study_code: string | null;
  personal_info: Record<string, unknown>;
  generated_neighbor_codes: string[];
  entered_neighbor_codes: string[];
  run_time_file_config_number: number;
  total_count: number;
  current_count: number;
  reset_time: number;
  engine_number: number;
  vns_number: string;
  dynamic_vns_toggle: boolean;
  dynamic_vns: string | null;
  dirty: boolean;
  ui_color: string;
  last_recording_time: string | null;
}

export interface SampleDoc {
  sample_id: string;
  phone_hash: string;
  timestamp: string;
  config_number: number;
  language: string;
  engine_number: number;
  list_index: number | null;
  prompt_index: number | null;
  prompt_text: string | null;
  recorded_seconds: number | null;
  text_input: string | null;
  audio_media_type: string | null;
  text_only: boolean;
}

export interface Question {
  id: string;
  kind: 'text' | 'pulldown' | 'multiple_choice';
  label: Record<string, string>;
  options?: string[];
  constraints?: Record<string, number>;
}

export interface PersonalInfoSchema {
  questions: Question[];
}

export interface EngineResponse {
  text: string | null;
  audio_url: string | null;
}
