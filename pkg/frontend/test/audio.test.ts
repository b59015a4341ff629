import { describe, expect, it } from "vitest";

import { bytesToInt16, ChunkQueue, pcmToFloat32 } from "../src/audio";

const pcm = (samples: number) => new Int16Array(samples);

describe("ChunkQueue scheduling", () => {
  it("schedules chunks gaplessly", () => {
    const q = new ChunkQueue();
    const a = q.schedule(pcm(1600), 0.0); // 100 ms
    const b = q.schedule(pcm(1600), 0.0);
    expect(a!.startTime).toBe(0);
    expect(b!.startTime).toBeCloseTo(a!.startTime + a!.durationS, 9);
  });

  it("never schedules in the past", () => {
    const q = new ChunkQueue();
    q.schedule(pcm(160), 0.0);
    const late = q.schedule(pcm(160), 5.0);
    expect(late!.startTime).toBe(5.0);
  });

  it("parks chunks while paused and releases them on resume", () => {
    const q = new ChunkQueue();
    q.schedule(pcm(1600), 0.0);
    q.pause();
    expect(q.schedule(pcm(1600), 0.1)).toBeNull();
    expect(q.schedule(pcm(1600), 0.2)).toBeNull();
    expect(q.queuedWhilePaused).toBe(2);
    const released = q.resume();
    expect(released.length).toBe(2);
    expect(q.queuedWhilePaused).toBe(0);
  });

  it("accounts scheduled duration exactly", () => {
    const q = new ChunkQueue();
    q.schedule(pcm(1600), 0);
    q.schedule(pcm(800), 0);
    expect(q.scheduledSeconds).toBeCloseTo(0.15, 9);
  });

  it("flush drops parked audio", () => {
    const q = new ChunkQueue();
    q.pause();
    q.schedule(pcm(160), 0);
    expect(q.flush()).toBe(1);
    expect(q.queuedWhilePaused).toBe(0);
  });
});

describe("sample conversion", () => {
  it("converts int16 to float in [-1, 1)", () => {
    const out = pcmToFloat32(new Int16Array([0, 16384, -32768, 32767]));
    expect(out[0]).toBe(0);
    expect(out[1]).toBeCloseTo(0.5, 6);
    expect(out[2]).toBe(-1);
    expect(out[3]).toBeCloseTo(0.99997, 4);
  });

  it("reads little-endian bytes into samples", () => {
    const bytes = new Uint8Array([0x34, 0x12, 0xff, 0xff]);
    const samples = bytesToInt16(bytes);
    expect(samples[0]).toBe(0x1234);
    expect(samples[1]).toBe(-1);
  });

  it("handles unaligned byte views", () => {
    const raw = new Uint8Array(6);
    raw.set([0x00, 0x34, 0x12, 0xff, 0xff, 0x00]);
    const view = new Uint8Array(raw.buffer, 1, 4);
    const samples = bytesToInt16(view);
    expect(samples[0]).toBe(0x1234);
    expect(samples[1]).toBe(-1);
  });
});
