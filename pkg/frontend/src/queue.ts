// Durable FIFO upload queue in origin-scoped storage. Entries persist
// across reloads; a sample leaves the queue only after the server
// acknowledged it, and the server dedups on sample_id, so retransmits are
// harmless. Audio is held base64 because Storage only takes strings.

import type { SampleDoc } from './types.js';

const QUEUE_KEY = 'voicecollect.queue';

export const BACKOFF_BASE_MS = 1_000;
export const BACKOFF_CAP_MS = 60_000;

export interface QueueEntry {
  doc: SampleDoc;
  audio_b64: string | null;
  media_type: string | null;
}

export interface UploadResult {
  duplicate?: boolean;
}

export type Uploader = (
  doc: SampleDoc,
  audio: Uint8Array | null,
  mediaType: string | null
) => Promise<UploadResult>;

export interface FlushOutcome {
  delivered: number;
  duplicates: number;
  remaining: number;
  skippedBackoff: boolean;
}

export function toBase64(bytes: Uint8Array): string {
  let bin = '';
  for (const b of bytes) bin += String.fromCharCode(b);
  return btoa(bin);
}

export function fromBase64(b64: string): Uint8Array {
  const bin = atob(b64);
  const out = new Uint8Array(bin.length);
  for (let i = 0; i < bin.length; i++) out[i] = bin.charCodeAt(i);
  return out;
}

export class UploadQueue {
  private entries: QueueEntry[];
  private failures = 0;
  private nextAttemptAtMs = 0;

  constructor(
    private storage: Storage,
    private rand: () => number = Math.random
  ) {
    this.entries = this.load();
  }

  private load(): QueueEntry[] {
    const raw = this.storage.getItem(QUEUE_KEY);
    if (!raw) return [];
    try {
      const parsed = JSON.parse(raw);
      return Array.isArray(parsed) ? parsed : [];
    } catch {
      // A corrupt blob loses the queue but must not brick the app.
      console.warn('upload queue was corrupt, starting empty');
      return [];
    }
  }

  private persist() {
    this.storage.setItem(QUEUE_KEY, JSON.stringify(this.entries));
  }

  get length(): number {
    return this.entries.length;
  }

  pending(): QueueEntry[] {
    return [...this.entries];
  }

  enqueue(doc: SampleDoc, audio: Uint8Array | null, mediaType: string | null) {
    if (this.entries.some((e) => e.doc.sample_id === doc.sample_id)) {
      throw new Error(`sample ${doc.sample_id} already queued`);
    }
    this.entries.push({
      doc,
      audio_b64: audio ? toBase64(audio) : null,
      media_type: mediaType,
    });
    this.persist();
  }

  // FIFO drain. Stops at the first failure and arms exponential backoff
  // (1 s doubling to a 60 s cap, 0.5-1.5x jitter).
  async flush(upload: Uploader, nowMs: number): Promise<FlushOutcome> {
    if (nowMs < this.nextAttemptAtMs) {
      return { delivered: 0, duplicates: 0, remaining: this.entries.length, skippedBackoff: true };
    }
    let delivered = 0;
    let duplicates = 0;
    while (this.entries.length > 0) {
      const head = this.entries[0];
      let result: UploadResult;
      try {
        result = await upload(
          head.doc,
          head.audio_b64 ? fromBase64(head.audio_b64) : null,
          head.media_type
        );
      } catch {
        this.failures += 1;
        const delay = Math.min(BACKOFF_BASE_MS * 2 ** (this.failures - 1), BACKOFF_CAP_MS);
        this.nextAttemptAtMs = nowMs + delay * (0.5 + this.rand());
        break;
      }
      this.entries.shift();
      this.persist();
      delivered += 1;
      if (result.duplicate) duplicates += 1;
      this.failures = 0;
      this.nextAttemptAtMs = 0;
    }
    return { delivered, duplicates, remaining: this.entries.length, skippedBackoff: false };
  }
}
