// Scripted utterance catalog.
//
// The server's recognizer resolves audio by a sidecar tag encoded in the
// sample values, so the console synthesizes utterance PCM locally: every
// int16 sample of utterance k holds the value k.

export interface UtteranceInfo {
  tag: number;
  text: string;
  durationMs: number;
  lang: string;
  aux: boolean;
}

interface RawUtterance {
  text: string;
  duration_ms: number;
  lang?: string;
  aux?: boolean;
}

export function parseUtterances(data: Record<string, RawUtterance>): UtteranceInfo[] {
  return Object.entries(data)
    .map(([tag, u]) => ({
      tag: Number(tag),
      text: u.text,
      durationMs: u.duration_ms,
      lang: u.lang ?? "cn",
      aux: Boolean(u.aux),
    }))
    .sort((a, b) => a.tag - b.tag);
}

export async function loadUtterances(url: string): Promise<UtteranceInfo[]> {
  const response = await fetch(url);
  if (!response.ok) {
    throw new Error(`cannot load utterances: ${response.status}`);
  }
  return parseUtterances((await response.json()) as Record<string, RawUtterance>);
}

export function taggedPcm(tag: number, durationMs: number, sampleRate = 16000): Uint8Array {
  if (!Number.isInteger(tag) || tag <= 0 || tag > 0x7fff) {
    throw new RangeError(`tag out of int16 range: ${tag}`);
  }
  const samples = Math.floor((durationMs * sampleRate) / 1000);
  const pcm = new Int16Array(samples);
  pcm.fill(tag);
  return new Uint8Array(pcm.buffer);
}

export function* chunkPcm(pcm: Uint8Array, chunkMs: number, sampleRate = 16000): Generator<Uint8Array> {
  const step = (chunkMs * sampleRate * 2) / 1000;
  for (let offset = 0; offset < pcm.byteLength; offset += step) {
    yield pcm.subarray(offset, Math.min(offset + step, pcm.byteLength));
  }
}
