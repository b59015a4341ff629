// Wire protocol mirror for the /session endpoint.
//
// Text frames are JSON envelopes; audio rides tagged binary frames:
//   client -> server  [0x01][u32 seq BE][PCM s16le]
//   server -> client  [0x02][u32 turn BE][u32 packed BE][PCM s16le]
// where packed = (clause_index << 16) | chunk_index, so numeric frame
// order equals lexicographic (clause, chunk) order.

export const SUBPROTOCOL = "xtalk.v1";
export const CLIENT_AUDIO_TAG = 0x01;
export const SERVER_AUDIO_TAG = 0x02;
export const SAMPLE_RATE = 16000;
export const BYTES_PER_MS = (SAMPLE_RATE * 2) / 1000; // 32

export interface TextMessage {
  kind: "text";
  type: string;
  turnId: number;
  payload: Record<string, unknown>;
}

export interface AudioMessage {
  kind: "audio";
  turnId: number;
  clauseIndex: number;
  chunkIndex: number;
  pcm: Uint8Array;
}

export type ServerMessage = TextMessage | AudioMessage;

export function packIndex(clauseIndex: number, chunkIndex: number): number {
  if (clauseIndex < 0 || clauseIndex >= 1 << 16 || chunkIndex < 0 || chunkIndex >= 1 << 16) {
    throw new RangeError("clause/chunk index out of 16-bit range");
  }
  return clauseIndex * 65536 + chunkIndex;
}

export function unpackIndex(packed: number): [number, number] {
  return [Math.floor(packed / 65536), packed % 65536];
}

export function encodeJsonFrame(type: string, seq: number, payload: unknown): string {
  return JSON.stringify({ type, seq, payload });
}

export function encodeAudioFrame(seq: number, pcm: Uint8Array): ArrayBuffer {
  if (pcm.byteLength % 2 !== 0) {
    throw new RangeError("PCM length must be a multiple of 2 bytes");
  }
  const out = new ArrayBuffer(5 + pcm.byteLength);
  const view = new DataView(out);
  view.setUint8(0, CLIENT_AUDIO_TAG);
  view.setUint32(1, seq, false);
  new Uint8Array(out, 5).set(pcm);
  return out;
}

export function decodeServerFrame(data: string | ArrayBuffer): ServerMessage {
  if (typeof data === "string") {
    const obj = JSON.parse(data) as { type?: string; turn_id?: number; payload?: unknown };
    if (!obj || typeof obj.type !== "string") {
      throw new Error("server frame missing type");
    }
    return {
      kind: "text",
      type: obj.type,
      turnId: typeof obj.turn_id === "number" ? obj.turn_id : 0,
      payload: (obj.payload ?? {}) as Record<string, unknown>,
    };
  }
  const view = new DataView(data);
  if (data.byteLength < 9 || view.getUint8(0) !== SERVER_AUDIO_TAG) {
    throw new Error("bad server binary frame");
  }
  const turnId = view.getUint32(1, false);
  const packed = view.getUint32(5, false);
  const pcm = new Uint8Array(data.slice(9));
  if (pcm.byteLength % 2 !== 0) {
    throw new Error("odd PCM payload length");
  }
  const [clauseIndex, chunkIndex] = unpackIndex(packed);
  return { kind: "audio", turnId, clauseIndex, chunkIndex, pcm };
}

export function pcmDurationMs(byteLength: number): number {
  return byteLength / BYTES_PER_MS;
}
