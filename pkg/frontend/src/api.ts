// Thin typed wrapper over the server's HTTP surface. The fetch function is
// injectable so tests can script connectivity.

import type { EngineResponse, PersonalInfoSchema, SampleDoc } from './types.js';

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ServerApi {
  constructor(
    private baseUrl: string,
    private fetchFn: FetchLike = (url, init) => fetch(url, init)
  ) {}

  async fetchConfig(number: number): Promise<string> {
    const resp = await this.fetchFn(`${this.baseUrl}/config/${number}`);
    if (!resp.ok) throw new Error(`config ${number}: HTTP ${resp.status}`);
    return resp.text();
  }

  async uploadSample(
    doc: SampleDoc,
    audio: Uint8Array | null,
    mediaType: string | null
  ): Promise<{ duplicate?: boolean }> {
    const form = new FormData();
    form.append('metadata', JSON.stringify(doc));
    if (audio) {
      form.append(
        'audio',
        new Blob([audio.buffer as ArrayBuffer], { type: mediaType ?? 'application/octet-stream' }),
        'audio'
      );
    }
    const resp = await this.fetchFn(`${this.baseUrl}/samples`, { method: 'POST', body: form });
    if (!resp.ok) throw new Error(`sample upload: HTTP ${resp.status}`);
    return resp.json();
  }

  async uploadStatus(phoneHash: string, doc: unknown): Promise<void> {
    const resp = await this.fetchFn(`${this.baseUrl}/status/${phoneHash}`, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(doc),
    });
    if (!resp.ok) throw new Error(`status upload: HTTP ${resp.status}`);
  }

  async fetchResponse(phoneHash: string): Promise<EngineResponse | null> {
    const resp = await this.fetchFn(`${this.baseUrl}/response/${phoneHash}`);
    if (resp.status === 404) return null;
    if (!resp.ok) throw new Error(`response poll: HTTP ${resp.status}`);
    return resp.json();
  }

  async fetchPersonalInfoSchema(number: number): Promise<PersonalInfoSchema> {
    const resp = await this.fetchFn(`${this.baseUrl}/personal_information_request/${number}`);
    if (!resp.ok) throw new Error(`schema: HTTP ${resp.status}`);
    return resp.json();
  }

  // The response's audio_url embeds the phone hash, so the UI never puts it
  // in the DOM; it downloads the bytes and plays them from an object URL.
  async fetchAudio(path: string): Promise<Blob> {
    const url = path.startsWith('http') ? path : `${this.baseUrl}${path}`;
    const resp = await this.fetchFn(url);
    if (!resp.ok) throw new Error(`audio: HTTP ${resp.status}`);
    return resp.blob();
  }
}
