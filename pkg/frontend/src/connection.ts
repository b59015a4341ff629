// WebSocket session: handshake, paced speaking, barge-in.

import {
  decodeServerFrame,
  encodeAudioFrame,
  encodeJsonFrame,
  ServerMessage,
  SUBPROTOCOL,
} from "./protocol";
import { chunkPcm, taggedPcm, UtteranceInfo } from "./utterances";

const sleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

export class SessionConnection {
  private seq = 0;
  speaking = false;

  private constructor(
    private readonly ws: WebSocket,
    readonly onMessage: (msg: ServerMessage) => void,
  ) {}

  static open(url: string, onMessage: (msg: ServerMessage) => void): Promise<SessionConnection> {
    return new Promise((resolve, reject) => {
      const ws = new WebSocket(url, [SUBPROTOCOL]);
      ws.binaryType = "arraybuffer";
      const conn = new SessionConnection(ws, onMessage);
      ws.onopen = () => {
        conn.sendJson("hello", { client: "web-console" });
        resolve(conn);
      };
      ws.onerror = () => reject(new Error(`cannot reach ${url}`));
      ws.onmessage = (event) => {
        onMessage(decodeServerFrame(event.data as string | ArrayBuffer));
      };
    });
  }

  onClose(handler: () => void): void {
    this.ws.onclose = handler;
  }

  sendJson(type: string, payload: unknown): void {
    this.seq += 1;
    this.ws.send(encodeJsonFrame(type, this.seq, payload));
  }

  sendAudio(pcm: Uint8Array): void {
    this.seq += 1;
    this.ws.send(encodeAudioFrame(this.seq, pcm));
  }

  vadStart(): void {
    this.sendJson("vad_start", {});
  }

  vadEnd(): void {
    this.sendJson("vad_end", {});
  }

  /** Stream one scripted utterance paced in real time: vad_start, 100 ms
      binary frames, vad_end. */
  async speak(utterance: UtteranceInfo, chunkMs = 100, realTime = true): Promise<void> {
    if (this.speaking) {
      return;
    }
    this.speaking = true;
    try {
      this.vadStart();
      const started = performance.now();
      let sent = 0;
      for (const chunk of chunkPcm(taggedPcm(utterance.tag, utterance.durationMs), chunkMs)) {
        this.sendAudio(chunk);
        sent += 1;
        if (realTime) {
          const target = started + sent * chunkMs;
          const wait = target - performance.now();
          if (wait > 0) {
            await sleep(wait);
          }
        }
      }
      this.vadEnd();
    } finally {
      this.speaking = false;
    }
  }

  bargeIn(): void {
    this.sendJson("barge_in", {});
  }

  textInput(text: string): void {
    this.sendJson("text_input", { text });
  }

  bye(): void {
    this.sendJson("bye", {});
  }

  close(): void {
    this.ws.close();
  }
}
