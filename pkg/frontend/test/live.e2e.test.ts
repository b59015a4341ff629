// Live end-to-end demonstration against a running engine.
//
// Skipped unless XTALK_WS_URL is set, e.g.:
//   xtalk serve --listen 127.0.0.1:8765 &
//   XTALK_WS_URL=ws://127.0.0.1:8765/session npm run test:e2e
//
// Covers: connect/handshake, scripted utterance streaming with monotone
// partials and the exact final transcript, strictly ordered audio, the
// confirmed-barge-in flow, and the false-interrupt-resume flow.

import { describe, expect, it } from "vitest";
import { WebSocket as UndiciWebSocket } from "undici";

import { SessionConnection } from "../src/connection";
import { ServerMessage } from "../src/protocol";
import { ConsoleState, initialState, reduce } from "../src/state";
import { UtteranceInfo } from "../src/utterances";

(globalThis as { WebSocket?: unknown }).WebSocket ??= UndiciWebSocket;

const URL = process.env.XTALK_WS_URL;
const live = URL ? describe : describe.skip;

const UTTERANCES: Record<string, UtteranceInfo> = {
  weather: { tag: 51, text: "今天天气怎么样", durationMs: 5000, lang: "cn", aux: true },
  story: { tag: 54, text: "给我讲个故事好不好", durationMs: 4000, lang: "cn", aux: true },
  command: { tag: 60, text: "别说了换个话题", durationMs: 1200, lang: "cn", aux: true },
  noise: { tag: 62, text: "", durationMs: 300, lang: "cn", aux: true },
};

class Driver {
  state: ConsoleState = initialState();
  messages: ServerMessage[] = [];
  partials: Array<{ finalized: string; volatile: string }> = [];
  private waiters: Array<() => void> = [];

  handle = (msg: ServerMessage): void => {
    this.state = reduce(this.state, msg);
    this.messages.push(msg);
    if (msg.kind === "text" && msg.type === "asr_partial") {
      this.partials.push({
        finalized: String(msg.payload.finalized),
        volatile: String(msg.payload.volatile),
      });
    }
    for (const wake of this.waiters.splice(0)) {
      wake();
    }
  };

  async until(pred: () => boolean, timeoutMs = 20000): Promise<void> {
    const deadline = Date.now() + timeoutMs;
    while (!pred()) {
      if (Date.now() > deadline) {
        throw new Error(`timeout; last state ${JSON.stringify(this.state.log.slice(-4))}`);
      }
      await new Promise<void>((resolve) => {
        this.waiters.push(resolve);
        setTimeout(resolve, 200);
      });
    }
  }

  chunksFor(turnId: number): Array<[number, number]> {
    return this.messages
      .filter((m): m is Extract<ServerMessage, { kind: "audio" }> => m.kind === "audio")
      .filter((m) => m.turnId === turnId)
      .map((m) => [m.clauseIndex, m.chunkIndex]);
  }
}

live("console against a live engine", () => {
  it("streams a scripted turn: monotone partials, exact final, ordered audio", async () => {
    const driver = new Driver();
    const conn = await SessionConnection.open(URL!, driver.handle);
    await driver.until(() => driver.state.status === "connected");
    expect(driver.state.sessionId).toBeTruthy();

    await conn.speak(UTTERANCES.weather, 100, false);
    await driver.until(() => driver.state.finalTranscript !== null);
    expect(driver.state.finalTranscript).toBe(UTTERANCES.weather.text);
    for (let i = 1; i < driver.partials.length; i++) {
      expect(
        driver.partials[i].finalized.startsWith(driver.partials[i - 1].finalized),
      ).toBe(true);
    }

    await driver.until(() => driver.state.playback === "idle" && driver.state.receivedChunks > 0);
    const pairs = driver.chunksFor(1);
    const sorted = [...pairs].sort((a, b) => a[0] - b[0] || a[1] - b[1]);
    expect(pairs).toEqual(sorted);
    expect(driver.state.receivedAudioMs).toBeGreaterThan(0);

    conn.bye();
    conn.close();
  }, 30000);

  it("confirmed barge-in cancels the old turn; false interrupt resumes", async () => {
    const driver = new Driver();
    const conn = await SessionConnection.open(URL!, driver.handle);
    await driver.until(() => driver.state.status === "connected");

    // Long response, then a real interruption.
    await conn.speak(UTTERANCES.story, 100, false);
    await driver.until(() => driver.state.playback === "playing");
    await conn.speak(UTTERANCES.command, 100, false);
    await driver.until(() => driver.state.responseTurnId === 2);
    expect(driver.messages.some((m) => m.kind === "text" && m.type === "pause_playback")).toBe(true);
    await driver.until(
      () => driver.state.playback === "idle" && driver.chunksFor(2).length > 0,
    );
    const audio = driver.messages.filter(
      (m): m is Extract<ServerMessage, { kind: "audio" }> => m.kind === "audio",
    );
    const firstNew = audio.findIndex((m) => m.turnId === 2);
    expect(audio.slice(firstNew).every((m) => m.turnId === 2)).toBe(true);

    // New long response, then a noise blip: pause followed by resume.
    await conn.speak(UTTERANCES.story, 100, false);
    await driver.until(() => driver.state.playback === "playing" && driver.state.responseTurnId === 3);
    const pausesBefore = driver.messages.filter(
      (m) => m.kind === "text" && m.type === "pause_playback",
    ).length;
    await conn.speak(UTTERANCES.noise, 100, false);
    await driver.until(
      () =>
        driver.messages.filter((m) => m.kind === "text" && m.type === "pause_playback").length >
        pausesBefore,
    );
    await driver.until(() => driver.messages.some((m) => m.kind === "text" && m.type === "resume"));
    await driver.until(() => driver.state.playback === "idle");
    const turn3 = driver.chunksFor(3);
    const sorted3 = [...turn3].sort((a, b) => a[0] - b[0] || a[1] - b[1]);
    expect(turn3).toEqual(sorted3); // no gaps or repeats around the resume

    conn.bye();
    conn.close();
  }, 60000);
});
