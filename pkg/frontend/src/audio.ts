// Streaming PCM playback.
//
// ChunkQueue holds the pure scheduling math (testable without a browser):
// chunks are scheduled gaplessly, pause freezes the queue, resume
// continues from the first unplayed chunk. PcmPlayer binds the queue to
// a WebAudio context.

import { SAMPLE_RATE } from "./protocol";

export interface ScheduledChunk {
  startTime: number;
  durationS: number;
}

export class ChunkQueue {
  private nextStartTime = 0;
  private playedS = 0;
  private pending: Int16Array[] = [];
  paused = false;

  /** Decide when a chunk should start, given the clock `now` (seconds).
      Returns null while paused (the chunk is parked). */
  schedule(pcm: Int16Array, now: number): ScheduledChunk | null {
    if (this.paused) {
      this.pending.push(pcm);
      return null;
    }
    const durationS = pcm.length / SAMPLE_RATE;
    const startTime = Math.max(now, this.nextStartTime);
    this.nextStartTime = startTime + durationS;
    this.playedS += durationS;
    return { startTime, durationS };
  }

  pause(): void {
    this.paused = true;
  }

  /** Unpark everything queued while paused; caller schedules the result. */
  resume(): Int16Array[] {
    this.paused = false;
    const parked = this.pending;
    this.pending = [];
    return parked;
  }

  /** Drop parked audio (confirmed interruption). */
  flush(): number {
    const dropped = this.pending.length;
    this.pending = [];
    this.nextStartTime = 0;
    return dropped;
  }

  get queuedWhilePaused(): number {
    return this.pending.length;
  }

  get scheduledSeconds(): number {
    return this.playedS;
  }
}

export function pcmToFloat32(pcm: Int16Array): Float32Array<ArrayBuffer> {
  const out = new Float32Array(new ArrayBuffer(pcm.length * 4));
  for (let i = 0; i < pcm.length; i++) {
    out[i] = pcm[i] / 32768;
  }
  return out;
}

export function bytesToInt16(bytes: Uint8Array): Int16Array {
  // s16le payload; copy to guarantee alignment.
  const buf = bytes.byteOffset % 2 === 0 && bytes.byteLength % 2 === 0
    ? bytes.buffer.slice(bytes.byteOffset, bytes.byteOffset + bytes.byteLength)
    : bytes.slice().buffer;
  return new Int16Array(buf);
}

/** Browser-side player; constructed lazily on first user gesture. */
export class PcmPlayer {
  private ctx: AudioContext | null = null;
  private queue = new ChunkQueue();
  private sources: AudioBufferSourceNode[] = [];

  private context(): AudioContext {
    if (!this.ctx) {
      this.ctx = new AudioContext({ sampleRate: SAMPLE_RATE });
    }
    return this.ctx;
  }

  enqueue(pcm: Int16Array): void {
    const slot = this.queue.schedule(pcm, this.context().currentTime);
    if (slot !== null) {
      this.play(pcm, slot.startTime);
    }
  }

  private play(pcm: Int16Array, startTime: number): void {
    const ctx = this.context();
    const buffer = ctx.createBuffer(1, pcm.length, SAMPLE_RATE);
    buffer.copyToChannel(pcmToFloat32(pcm), 0);
    const source = ctx.createBufferSource();
    source.buffer = buffer;
    source.connect(ctx.destination);
    source.start(startTime);
    this.sources.push(source);
    source.onended = () => {
      this.sources = this.sources.filter((s) => s !== source);
    };
  }

  /** Local pause: stop scheduled audio immediately, park new arrivals. */
  pause(): void {
    this.queue.pause();
    void this.context().suspend();
  }

  resume(): void {
    void this.context().resume();
    for (const pcm of this.queue.resume()) {
      this.enqueue(pcm);
    }
  }

  /** Confirmed interruption: silence everything and drop parked audio. */
  stopAll(): void {
    for (const source of this.sources.splice(0)) {
      try {
        source.stop();
      } catch {
        // already ended
      }
    }
    this.queue.flush();
    void this.context().resume();
  }

  get playedSeconds(): number {
    return this.queue.scheduledSeconds;
  }
}
