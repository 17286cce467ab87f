// Shared fakes: storage, microphone, and a scriptable in-memory server.

import { ServerApi, type FetchLike } from '../src/api';
import type { Recorder } from '../src/recorder';
import type { SampleDoc } from '../src/types';

export class FakeStorage implements Storage {
  private map = new Map<string, string>();

  get length() {
    return this.map.size;
  }
  clear() {
    this.map.clear();
  }
  getItem(key: string) {
    return this.map.has(key) ? (this.map.get(key) as string) : null;
  }
  key(index: number) {
    return [...this.map.keys()][index] ?? null;
  }
  removeItem(key: string) {
    this.map.delete(key);
  }
  setItem(key: string, value: string) {
    this.map.set(key, String(value));
  }
}

export class FakeRecorder implements Recorder {
  public started = false;
  constructor(
    private bytes = new Uint8Array([1, 2, 3, 4]),
    private denied = false
  ) {}

  async start() {
    if (this.denied) throw new DOMException('Permission denied', 'NotAllowedError');
    this.started = true;
  }

  async stop() {
    if (!this.started) throw new Error('not recording');
    this.started = false;
    return { bytes: this.bytes, mediaType: 'audio/webm' };
  }
}

export interface FakeServer {
  fetchFn: FetchLike;
  samples: SampleDoc[];
  statuses: unknown[];
  offline: boolean;
  responseDoc: { text: string | null; audio_url: string | null } | null;
  configRaw: string;
}

export function makeFakeServer(configRaw: string): FakeServer {
  const server: FakeServer = {
    samples: [],
    statuses: [],
    offline: false,
    responseDoc: null,
    configRaw,
    fetchFn: async (url, init) => {
      if (server.offline) throw new TypeError('network unreachable');
      if (url.includes('/config/')) {
        return new Response(server.configRaw, { status: 200 });
      }
      if (url.endsWith('/samples')) {
        const form = init?.body as FormData;
        const doc = JSON.parse(form.get('metadata') as string) as SampleDoc;
        const duplicate = server.samples.some((s) => s.sample_id === doc.sample_id);
        if (!duplicate) server.samples.push(doc);
        return Response.json({
          sample_id: doc.sample_id,
          stored: !duplicate,
          duplicate,
          engine_dispatched: false,
        });
      }
      if (url.includes('/status/')) {
        server.statuses.push(JSON.parse(init?.body as string));
        return Response.json({ ok: true });
      }
      if (url.includes('/personal_information_request/')) {
        return Response.json({
          questions: [
            { id: 'country', kind: 'text', label: { en: 'Country' } },
            {
              id: 'age',
              kind: 'pulldown',
              label: { en: 'Age' },
              options: [...Array.from({ length: 89 }, (_, i) => String(i + 1)), '90+'],
              constraints: { age_cap: 90 },
            },
          ],
        });
      }
      if (url.includes('/response/') && url.endsWith('/audio')) {
        return new Response(new Uint8Array([82, 73, 70, 70]), { status: 200 });
      }
      if (url.includes('/response/')) {
        if (!server.responseDoc) return new Response('not found', { status: 404 });
        return Response.json(server.responseDoc);
      }
      return new Response('not found', { status: 404 });
    },
  };
  return server;
}

export function apiFor(server: FakeServer): ServerApi {
  return new ServerApi('http://server.test', server.fetchFn);
}

// A parsed-form config document as the server would serve it.
export function configDoc(lists: [string, number | null][][], selector = ''): string {
  return JSON.stringify({
    config_number: 3,
    selector_string: selector,
    lists: lists.map((pairs) => ({
      prompts: pairs.map(([text, seconds]) => ({ text, seconds })),
    })),
    no_recording_text: 'Recording de-activated, submit text only',
    max_recording_time: 30,
    default_engine_number: 0,
  });
}
