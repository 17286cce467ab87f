// The three-screen recording app: Terms (first run only), Main (prompt +
// record + text box + counter), Final (terminal text / engine response,
// start over). Settings hangs off Main. All server traffic is queued or
// best-effort, so every screen stays operable offline.

import { ServerApi } from './api.js';
import { emptyConfig, parseRuntimeConfig, requiredSelection } from './config.js';
import { ensurePhoneHash, newSampleId } from './identity.js';
import { renderableQuestions, validateAnswer } from './personalInfo.js';
import { UploadQueue } from './queue.js';
import type { RecorderFactory } from './recorder.js';
import {
  newSession,
  nextPrompt,
  registerRecording,
  resetSession,
  selectList,
  sessionExpired,
  startOver,
} from './session.js';
import { defaultStatus, generateNeighborCode, resetCounts, shouldUploadStatus } from './status.js';
import type {
  EngineResponse,
  LocalStatus,
  PersonalInfoSchema,
  PromptStep,
  RuntimeConfig,
  SampleDoc,
  SessionState,
} from './types.js';

const TERMS_KEY = 'voicecollect.terms_accepted';
const STATUS_KEY = 'voicecollect.status';
const CONFIG_CACHE_KEY = 'voicecollect.config_cache';

const TERMS_TEXT =
  'Recordings and the answers you provide are collected pseudonymously ' +
  'for research. No name or date of birth is ever requested or stored. ' +
  'By continuing you accept these terms.';

export type Screen = 'terms' | 'main' | 'final' | 'settings';

export interface AppDeps {
  root: HTMLElement;
  storage: Storage;
  api: ServerApi;
  recorderFactory: RecorderFactory;
  nowMs?: () => number;
  rand?: () => number;
}

function h<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text = ''
): HTMLElementTagNameMap[K] {
  const el = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) el.setAttribute(k, v);
  if (text) el.textContent = text;
  return el;
}

export class App {
  screen: Screen = 'main';
  status: LocalStatus;
  config: RuntimeConfig;
  configSource: 'network' | 'cache' | 'bundled' = 'bundled';
  session: SessionState;
  queue: UploadQueue;
  recordingActive = false;
  engineResponse: EngineResponse | null = null;
  engineAudioObjectUrl: string | null = null;
  schema: PersonalInfoSchema | null = null;
  micError = false;

  readonly phoneHash: string;
  private readonly root: HTMLElement;
  private readonly storage: Storage;
  private readonly api: ServerApi;
  private readonly recorderFactory: RecorderFactory;
  private readonly nowMs: () => number;
  private readonly rand: () => number;
  private recorder: ReturnType<RecorderFactory> | null = null;
  private recordStartMs = 0;
  private autoStopTimer: ReturnType<typeof setTimeout> | null = null;
  private elapsedTimer: ReturnType<typeof setInterval> | null = null;

  constructor(deps: AppDeps) {
    this.root = deps.root;
    this.storage = deps.storage;
    this.api = deps.api;
    this.recorderFactory = deps.recorderFactory;
    this.nowMs = deps.nowMs ?? (() => Date.now());
    this.rand = deps.rand ?? Math.random;
    this.phoneHash = ensurePhoneHash(this.storage);
    this.status = this.loadStatus();
    this.config = emptyConfig(this.status.run_time_file_config_number);
    this.session = newSession(this.config, this.nowMs());
    this.queue = new UploadQueue(this.storage, this.rand);
    this.screen = this.termsAccepted() ? 'main' : 'terms';
  }

  async init(): Promise<void> {
    await this.loadConfig(this.status.run_time_file_config_number);
    this.session = newSession(this.config, this.nowMs());
    this.render();
    void this.backgroundSync();
  }

  // --- persistence ----------------------------------------------------

  private loadStatus(): LocalStatus {
    const raw = this.storage.getItem(STATUS_KEY);
    if (!raw) return defaultStatus();
    try {
      return { ...defaultStatus(), ...JSON.parse(raw) };
    } catch {
      return defaultStatus();
    }
  }

  private persistStatus() {
    this.storage.setItem(STATUS_KEY, JSON.stringify(this.status));
  }

  termsAccepted(): boolean {
    return this.storage.getItem(TERMS_KEY) === 'true';
  }

  acceptTerms() {
    this.storage.setItem(TERMS_KEY, 'true');
    this.screen = 'main';
    this.render();
  }

  // --- config ----------------------------------------------------------

  async loadConfig(number: number): Promise<void> {
    try {
      const raw = await this.api.fetchConfig(number);
      this.config = parseRuntimeConfig(raw, number);
      this.configSource = 'network';
      this.storage.setItem(CONFIG_CACHE_KEY, JSON.stringify({ number, raw }));
      return;
    } catch {
      // fall through to cache, then bundled
    }
    const cached = this.storage.getItem(CONFIG_CACHE_KEY);
    if (cached) {
      try {
        const { number: cachedNumber, raw } = JSON.parse(cached);
        if (cachedNumber === number) {
          this.config = parseRuntimeConfig(raw, number);
          this.configSource = 'cache';
          return;
        }
      } catch {
        // ignore a bad cache entry
      }
    }
    this.config = emptyConfig(number);
    this.configSource = 'bundled';
  }

  // --- recording flow ---------------------------------------------------

  currentStep(): PromptStep {
    return nextPrompt(this.session, this.config);
  }

  private expireIfIdle() {
    if (sessionExpired(this.session, this.status.reset_time, this.nowMs())) {
      this.session = resetSession(this.session, this.config, this.nowMs());
    }
  }

  chooseList(index: number) {
    this.session = selectList(this.session, this.config, index);
    this.render();
  }

  async pressRecord(): Promise<void> {
    if (this.recordingActive) {
      await this.stopRecording();
      return;
    }
    const step = this.currentStep();
    if (step.kind !== 'record' && step.kind !== 'free') return;
    this.micError = false;
    this.recorder = this.recorderFactory();
    try {
      await this.recorder.start();
    } catch {
      // Microphone denied: text-only submission stays available.
      this.micError = true;
      this.recorder = null;
      this.render();
      return;
    }
    this.recordingActive = true;
    this.recordStartMs = this.nowMs();
    const windowSeconds =
      step.kind === 'record' ? (step.seconds as number) : this.config.max_recording_time;
    this.autoStopTimer = setTimeout(() => {
      void this.stopRecording();
    }, windowSeconds * 1000);
    this.render();
    this.elapsedTimer = setInterval(() => this.updateElapsed(windowSeconds), 250);
  }

  private updateElapsed(windowSeconds: number) {
    const el = this.root.querySelector('#rec-elapsed');
    if (el) {
      const elapsed = Math.min((this.nowMs() - this.recordStartMs) / 1000, windowSeconds);
      el.textContent = `${elapsed.toFixed(1)} / ${windowSeconds} s`;
    }
  }

  async stopRecording(): Promise<void> {
    if (!this.recordingActive || !this.recorder) return;
    if (this.autoStopTimer) clearTimeout(this.autoStopTimer);
    if (this.elapsedTimer) clearInterval(this.elapsedTimer);
    this.autoStopTimer = null;
    this.elapsedTimer = null;
    const recorder = this.recorder;
    this.recorder = null;
    this.recordingActive = false;
    const recordedSeconds = (this.nowMs() - this.recordStartMs) / 1000;
    const { bytes, mediaType } = await recorder.stop();
    const step = this.currentStep();
    this.submitSample(step, {
      audio: bytes,
      mediaType,
      recordedSeconds: Math.round(recordedSeconds * 100) / 100,
      textInput: null,
    });
  }

  submitText(text: string) {
    const trimmed = text.trim();
    if (!trimmed) return;
    const step = this.currentStep();
    this.submitSample(step, {
      audio: null,
      mediaType: null,
      recordedSeconds: null,
      textInput: trimmed,
    });
  }

  private submitSample(
    step: PromptStep,
    parts: {
      audio: Uint8Array | null;
      mediaType: string | null;
      recordedSeconds: number | null;
      textInput: string | null;
    }
  ) {
    const guided = step.kind === 'record' || step.kind === 'text_only';
    const doc: SampleDoc = {
      sample_id: newSampleId(),
      phone_hash: this.phoneHash,
      timestamp: new Date(this.nowMs()).toISOString(),
      config_number: this.config.config_number,
      language: this.status.language,
      engine_number: this.status.engine_number,
      list_index: guided ? this.session.selectedList : null,
      prompt_index: guided && this.session.selectedList !== null ? this.session.cursor : null,
      prompt_text: step.text || null,
      recorded_seconds: parts.recordedSeconds,
      text_input: parts.textInput,
      audio_media_type: parts.audio ? parts.mediaType : null,
      text_only: parts.audio === null,
    };
    this.queue.enqueue(doc, parts.audio, parts.mediaType);
    this.session = registerRecording(this.session, this.nowMs());
    this.status = {
      ...this.status,
      current_count: this.status.current_count + 1,
      last_recording_time: new Date(this.nowMs()).toISOString(),
    };
    this.persistStatus();
    if (this.currentStep().kind === 'terminal') {
      this.screen = 'final';
    }
    this.render();
    void this.backgroundSync();
  }

  // --- sync ------------------------------------------------------------

  async backgroundSync(): Promise<void> {
    try {
      await this.queue.flush(
        (doc, audio, mediaType) => this.api.uploadSample(doc, audio, mediaType),
        this.nowMs()
      );
    } catch {
      // flush itself never throws; defensive anyway
    }
    if (shouldUploadStatus(this.status, this.nowMs())) {
      try {
        await this.api.uploadStatus(this.phoneHash, { ...this.status });
        this.status = { ...this.status, dirty: false };
        this.persistStatus();
      } catch {
        // still offline; stays dirty and retries next sync
      }
    }
    if (this.screen === 'final') {
      try {
        this.engineResponse = await this.api.fetchResponse(this.phoneHash);
        this.engineAudioObjectUrl = null;
        if (this.engineResponse?.audio_url && typeof URL.createObjectURL === 'function') {
          const blob = await this.api.fetchAudio(this.engineResponse.audio_url);
          this.engineAudioObjectUrl = URL.createObjectURL(blob);
        }
        this.render();
      } catch {
        // offline; final screen shows the terminal text alone
      }
    }
  }

  // --- settings ---------------------------------------------------------

  markDirty() {
    this.status = { ...this.status, dirty: true };
    this.persistStatus();
  }

  updateSetting<K extends keyof LocalStatus>(key: K, value: LocalStatus[K]) {
    this.status = { ...this.status, [key]: value, dirty: true };
    this.persistStatus();
    void this.backgroundSync();
  }

  setPersonalInfoAnswer(questionId: string, value: unknown) {
    if (!this.schema) return;
    const question = this.schema.questions.find((q) => q.id === questionId);
    if (!question) return;
    let stored: unknown;
    try {
      stored = validateAnswer(question, value);
    } catch (err) {
      this.showInlineError(questionId, String(err));
      return;
    }
    this.status = {
      ...this.status,
      personal_info: { ...this.status.personal_info, [questionId]: stored },
      dirty: true,
    };
    this.persistStatus();
    this.render();
    void this.backgroundSync();
  }

  private showInlineError(questionId: string, message: string) {
    const el = this.root.querySelector(`[data-error-for="${questionId}"]`);
    if (el) el.textContent = message;
  }

  generateCode(): string {
    const code = generateNeighborCode(
      new Set(this.status.generated_neighbor_codes),
      this.rand
    );
    this.status = {
      ...this.status,
      generated_neighbor_codes: [...this.status.generated_neighbor_codes, code],
      dirty: true,
    };
    this.persistStatus();
    this.render();
    void this.backgroundSync();
    return code;
  }

  enterCode(code: string) {
    const trimmed = code.trim();
    if (!trimmed) return;
    this.status = {
      ...this.status,
      entered_neighbor_codes: [...this.status.entered_neighbor_codes, trimmed],
      dirty: true,
    };
    this.persistStatus();
    this.render();
    void this.backgroundSync();
  }

  resetRecordings() {
    this.status = resetCounts(this.status);
    this.persistStatus();
    this.render();
    void this.backgroundSync();
  }

  async changeConfigNumber(number: number): Promise<void> {
    this.updateSetting('run_time_file_config_number', number);
    await this.loadConfig(number);
    this.session = newSession(this.config, this.nowMs());
    this.render();
  }

  async openSettings(): Promise<void> {
    this.screen = 'settings';
    if (!this.schema) {
      try {
        this.schema = await this.api.fetchPersonalInfoSchema(
          this.status.run_time_file_config_number
        );
      } catch {
        this.schema = null; // offline: form section hidden, rest still works
      }
    }
    this.render();
  }

  closeSettings() {
    this.screen = 'main';
    this.render();
  }

  doStartOver() {
    this.session = startOver(this.session, this.nowMs());
    this.engineResponse = null;
    if (this.engineAudioObjectUrl && typeof URL.revokeObjectURL === 'function') {
      URL.revokeObjectURL(this.engineAudioObjectUrl);
    }
    this.engineAudioObjectUrl = null;
    this.screen = 'main';
    this.render();
  }

  // --- rendering ---------------------------------------------------------

  render() {
    this.root.textContent = '';
    switch (this.screen) {
      case 'terms':
        this.renderTerms();
        break;
      case 'main':
        this.renderMain();
        break;
      case 'final':
        this.renderFinal();
        break;
      case 'settings':
        this.renderSettings();
        break;
    }
  }

  private renderTerms() {
    const screen = h('div', { id: 'terms-screen' });
    screen.appendChild(h('p', { class: 'terms-text' }, TERMS_TEXT));
    const accept = h('button', { id: 'accept-terms' }, 'Accept');
    accept.addEventListener('click', () => this.acceptTerms());
    screen.appendChild(accept);
    this.root.appendChild(screen);
  }

  private renderMain() {
    this.expireIfIdle();
    const screen = h('div', { id: 'main-screen' });
    if (this.status.ui_color) screen.style.background = this.status.ui_color;

    const selection = requiredSelection(this.config);
    if (selection && this.session.selectedList === null) {
      const popup = h('div', { id: 'list-popup' });
      popup.appendChild(h('p', {}, selection.selectorString));
      for (let i = 0; i < selection.listCount; i++) {
        const btn = h('button', { class: 'list-choice', 'data-list': String(i) }, `List ${i + 1}`);
        btn.addEventListener('click', () => this.chooseList(i));
        popup.appendChild(btn);
      }
      screen.appendChild(popup);
      this.root.appendChild(screen);
      return;
    }

    const step = this.currentStep();
    if (step.kind === 'terminal') {
      this.screen = 'final';
      this.renderFinal();
      return;
    }

    screen.appendChild(
      h('p', { id: 'text-request' }, step.kind === 'free' ? 'Record anything you like' : step.text)
    );

    const recordable = step.kind === 'record' || step.kind === 'free';
    const record = h(
      'button',
      { id: 'record-btn', class: recordable ? '' : 'crossed' },
      recordable
        ? this.recordingActive
          ? 'Stop'
          : 'Record'
        : this.config.no_recording_text
    );
    if (!recordable) record.setAttribute('disabled', 'disabled');
    record.addEventListener('click', () => void this.pressRecord());
    screen.appendChild(record);

    if (this.recordingActive) {
      const indicator = h('div', { id: 'rec-indicator', class: 'pulsing' }, 'recording');
      indicator.appendChild(h('span', { id: 'rec-elapsed' }, ''));
      screen.appendChild(indicator);
    }
    if (this.micError) {
      screen.appendChild(
        h('p', { id: 'mic-error' }, 'Microphone unavailable; you can still submit text.')
      );
    }

    const input = h('input', { id: 'text-input', type: 'text', placeholder: 'Type here' });
    screen.appendChild(input);
    const submit = h('button', { id: 'submit-text' }, 'Submit text');
    submit.addEventListener('click', () => {
      this.submitText((this.root.querySelector('#text-input') as HTMLInputElement).value);
    });
    screen.appendChild(submit);

    const settings = h('button', { id: 'settings-btn' }, 'Settings');
    settings.addEventListener('click', () => void this.openSettings());
    screen.appendChild(settings);

    screen.appendChild(
      h('p', { id: 'counter' }, `Recordings: ${this.status.current_count}`)
    );
    this.root.appendChild(screen);
  }

  private renderFinal() {
    const screen = h('div', { id: 'final-screen' });
    const step = nextPrompt(this.session, this.config);
    if (step.kind === 'terminal' && step.text) {
      screen.appendChild(h('p', { id: 'terminal-text' }, step.text));
    }
    if (this.engineResponse?.text) {
      screen.appendChild(h('p', { id: 'engine-text' }, this.engineResponse.text));
    }
    if (this.engineAudioObjectUrl) {
      screen.appendChild(
        h('audio', { id: 'engine-audio', src: this.engineAudioObjectUrl, controls: '' })
      );
    }
    const startOverBtn = h('button', { id: 'start-over' }, 'start over');
    startOverBtn.addEventListener('click', () => this.doStartOver());
    screen.appendChild(startOverBtn);
    this.root.appendChild(screen);
  }

  private renderSettings() {
    const screen = h('div', { id: 'settings-screen' });

    const language = h('select', { id: 'set-language' });
    for (const lang of ['en', 'es', 'ca']) {
      const opt = h('option', { value: lang }, lang);
      if (lang === this.status.language) opt.setAttribute('selected', 'selected');
      language.appendChild(opt);
    }
    language.addEventListener('change', () =>
      this.updateSetting('language', (language as HTMLSelectElement).value)
    );
    screen.appendChild(this.labeled('Language', language));

    const study = h('input', { id: 'set-study-code', value: this.status.study_code ?? '' });
    study.addEventListener('change', () =>
      this.updateSetting('study_code', (study as HTMLInputElement).value || null)
    );
    screen.appendChild(this.labeled('Study code', study));

    if (this.schema) {
      const form = h('div', { id: 'personal-info-form' });
      form.appendChild(h('h3', {}, 'Tell us about you'));
      for (const question of renderableQuestions(this.schema)) {
        const label = question.label[this.status.language] ?? question.label['en'] ?? question.id;
        let control: HTMLElement;
        if (question.kind === 'text') {
          const inp = h('input', {
            'data-question': question.id,
            value: String(this.status.personal_info[question.id] ?? ''),
          });
          inp.addEventListener('change', () =>
            this.setPersonalInfoAnswer(question.id, (inp as HTMLInputElement).value)
          );
          control = inp;
        } else {
          const sel = h('select', { 'data-question': question.id });
          sel.appendChild(h('option', { value: '' }, ''));
          for (const option of question.options ?? []) {
            const opt = h('option', { value: option }, option);
            if (String(this.status.personal_info[question.id] ?? '') === option) {
              opt.setAttribute('selected', 'selected');
            }
            sel.appendChild(opt);
          }
          sel.addEventListener('change', () =>
            this.setPersonalInfoAnswer(question.id, (sel as HTMLSelectElement).value)
          );
          control = sel;
        }
        const row = this.labeled(label, control);
        row.appendChild(h('span', { 'data-error-for': question.id, class: 'inline-error' }));
        form.appendChild(row);
      }
      screen.appendChild(form);
    }

    const genBtn = h('button', { id: 'gen-code' }, 'Generate neighbor code');
    genBtn.addEventListener('click', () => this.generateCode());
    screen.appendChild(genBtn);
    const codeList = h('ul', { id: 'code-list' });
    for (const code of this.status.generated_neighbor_codes) {
      codeList.appendChild(h('li', { class: 'gen-code' }, code));
    }
    screen.appendChild(codeList);

    const entered = h('input', { id: 'enter-code', placeholder: 'Neighbor code' });
    const enterBtn = h('button', { id: 'enter-code-btn' }, 'Add code');
    enterBtn.addEventListener('click', () => {
      this.enterCode((entered as HTMLInputElement).value);
    });
    screen.appendChild(this.labeled('Enter a code', entered));
    screen.appendChild(enterBtn);

    const termsBtn = h('button', { id: 'view-terms' }, 'View terms');
    termsBtn.addEventListener('click', () => {
      const holder = this.root.querySelector('#terms-view');
      if (holder) holder.textContent = TERMS_TEXT;
    });
    screen.appendChild(termsBtn);
    screen.appendChild(h('p', { id: 'terms-view' }));

    const cfg = h('input', {
      id: 'set-config-number',
      type: 'number',
      value: String(this.status.run_time_file_config_number),
    });
    cfg.addEventListener('change', () => {
      void this.changeConfigNumber(parseInt((cfg as HTMLInputElement).value, 10) || 0);
    });
    screen.appendChild(this.labeled('Config number', cfg));

    const reset = h('button', { id: 'reset-counts' }, 'Reset recordings');
    reset.addEventListener('click', () => this.resetRecordings());
    screen.appendChild(reset);
    screen.appendChild(
      h('p', { id: 'settings-counter' }, `Recordings: ${this.status.current_count}`)
    );

    const color = h('input', { id: 'set-color', value: this.status.ui_color });
    color.addEventListener('change', () =>
      this.updateSetting('ui_color', (color as HTMLInputElement).value)
    );
    screen.appendChild(this.labeled('Color', color));

    const resetTime = h('input', {
      id: 'set-reset-time',
      type: 'number',
      value: String(this.status.reset_time),
    });
    resetTime.addEventListener('change', () =>
      this.updateSetting('reset_time', parseFloat((resetTime as HTMLInputElement).value) || 30)
    );
    screen.appendChild(this.labeled('Reset time (minutes)', resetTime));

    const engine = h('input', {
      id: 'set-engine',
      type: 'number',
      value: String(this.status.engine_number),
    });
    engine.addEventListener('change', () =>
      this.updateSetting('engine_number', parseInt((engine as HTMLInputElement).value, 10) || 0)
    );
    screen.appendChild(this.labeled('Engine number', engine));

    const vns = h('input', { id: 'set-vns', value: this.status.vns_number });
    vns.addEventListener('change', () =>
      this.updateSetting('vns_number', (vns as HTMLInputElement).value)
    );
    screen.appendChild(this.labeled('Server address', vns));

    const dynToggle = h('input', { id: 'set-dynamic-toggle', type: 'checkbox' });
    if (this.status.dynamic_vns_toggle) dynToggle.setAttribute('checked', 'checked');
    dynToggle.addEventListener('change', () =>
      this.updateSetting('dynamic_vns_toggle', (dynToggle as HTMLInputElement).checked)
    );
    screen.appendChild(this.labeled('Dynamic server lookup', dynToggle));

    const dynAddr = h('input', { id: 'set-dynamic-vns', value: this.status.dynamic_vns ?? '' });
    dynAddr.addEventListener('change', () =>
      this.updateSetting('dynamic_vns', (dynAddr as HTMLInputElement).value || null)
    );
    screen.appendChild(this.labeled('Dynamic address', dynAddr));

    const back = h('button', { id: 'settings-back' }, 'Back');
    back.addEventListener('click', () => this.closeSettings());
    screen.appendChild(back);

    this.root.appendChild(screen);
  }

  private labeled(text: string, control: HTMLElement): HTMLElement {
    const row = h('div', { class: 'setting-row' });
    row.appendChild(h('label', {}, text));
    row.appendChild(control);
    return row;
  }
}
