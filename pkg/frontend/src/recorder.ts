// Audio capture behind a small interface so tests can fake the microphone.

export interface Recorder {
  start(): Promise<void>;
  stop(): Promise<{ bytes: Uint8Array; mediaType: string }>;
}

export type RecorderFactory = () => Recorder;

// Browser implementation on MediaRecorder; the produced media type is
// whatever the browser uses, passed through opaquely.
export class MediaRecorderAdapter implements Recorder {
  private stream?: MediaStream;
  private rec?: MediaRecorder;
  private chunks: BlobPart[] = [];

  async start() {
    this.stream = await navigator.mediaDevices.getUserMedia({ audio: true });
    this.rec = new MediaRecorder(this.stream);
    this.chunks = [];
    this.rec.ondataavailable = (e) => this.chunks.push(e.data);
    this.rec.start();
  }

  async stop(): Promise<{ bytes: Uint8Array; mediaType: string }> {
    const rec = this.rec;
    if (!rec) throw new Error('not recording');
    await new Promise<void>((resolve) => {
      rec.onstop = () => resolve();
      rec.stop();
    });
    this.stream?.getTracks().forEach((t) => t.stop());
    const blob = new Blob(this.chunks, { type: rec.mimeType || 'audio/webm' });
    const bytes = new Uint8Array(await blob.arrayBuffer());
    return { bytes, mediaType: blob.type };
  }
}
