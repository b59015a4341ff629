// Web console: live conversations against the engine over one WebSocket.

import { PcmPlayer, bytesToInt16 } from "./audio";
import { SessionConnection } from "./connection";
import { ServerMessage } from "./protocol";
import { ConsoleState, initialState, reduce } from "./state";
import { loadUtterances, UtteranceInfo } from "./utterances";
import { EnergyVad } from "./vad";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

let state: ConsoleState = initialState();
let conn: SessionConnection | null = null;
let player: PcmPlayer | null = null;
let utterances: UtteranceInfo[] = [];
let playbackHeld = false; // local pause from our own speech onset

function render(): void {
  $("status").textContent = state.status + (state.sessionId ? ` (${state.sessionId})` : "");
  $("status").className = `pill ${state.status}`;
  $<HTMLSpanElement>("finalized").textContent = state.finalized;
  $<HTMLSpanElement>("volatile").textContent = state.volatile;
  $("final-transcript").textContent = state.finalTranscript ?? "";
  $("sentences").textContent = state.sentences.join("");
  $("playback").textContent = playbackHeld && state.playback !== "idle" ? "paused (local)" : state.playback;
  $("thinking").textContent = state.thinking ? "thinking…" : "";
  $("caption").textContent = state.caption ?? "–";
  $("speaker").textContent = state.speakerId ?? "–";
  $("audio-count").textContent =
    `${state.receivedChunks} chunks · ${(state.receivedAudioMs / 1000).toFixed(1)}s received` +
    (player ? ` · ${player.playedSeconds.toFixed(1)}s scheduled` : "");
  const lat = state.latency;
  $("lat-e2e").textContent = lat.e2e_ms !== undefined ? `${lat.e2e_ms.toFixed(0)} ms` : "–";
  $("lat-asr").textContent = lat.asr_span_ms !== undefined ? `${lat.asr_span_ms.toFixed(0)} ms` : "–";
  $("lat-llm").textContent = lat.llm_span_ms !== undefined ? `${lat.llm_span_ms.toFixed(0)} ms` : "–";
  $("lat-tts").textContent = lat.tts_span_ms !== undefined ? `${lat.tts_span_ms.toFixed(0)} ms` : "–";
  $("errors").textContent = state.errors.join(", ");
  const log = $<HTMLPreElement>("log");
  log.textContent = state.log.slice(-200).join("\n");
  log.scrollTop = log.scrollHeight;
  const connected = state.status === "connected";
  $<HTMLButtonElement>("speak").disabled = !connected;
  $<HTMLButtonElement>("barge").disabled = !connected || state.playback === "idle";
  $<HTMLButtonElement>("mic").disabled = !connected;
}

function handleMessage(msg: ServerMessage): void {
  state = reduce(state, msg);
  if (msg.kind === "audio") {
    player?.enqueue(bytesToInt16(msg.pcm));
  } else if (msg.type === "pause_playback") {
    player?.pause();
  } else if (msg.type === "resume") {
    playbackHeld = false;
    player?.resume();
  } else if (msg.type === "llm_sentence" && playbackHeld) {
    // A new turn started after a confirmed interruption: release the hold.
    playbackHeld = false;
    player?.stopAll();
    player?.resume();
  }
  render();
}

async function connect(): Promise<void> {
  const url = $<HTMLInputElement>("url").value;
  state = { ...initialState(), status: "connecting" };
  render();
  try {
    conn = await SessionConnection.open(url, handleMessage);
    conn.onClose(() => {
      state = { ...state, status: "disconnected" };
      render();
    });
    player = player ?? new PcmPlayer();
  } catch (err) {
    state = { ...state, status: "disconnected", errors: [...state.errors, String(err)] };
    render();
  }
}

function holdPlaybackLocally(): void {
  // Speech onset pauses local playback immediately, before the server
  // round-trip; the server's resume or the next turn releases it.
  if (state.playback === "playing") {
    playbackHeld = true;
    player?.pause();
  }
}

async function speakSelected(): Promise<void> {
  if (!conn) return;
  const select = $<HTMLSelectElement>("utterance");
  const utt = utterances.find((u) => u.tag === Number(select.value));
  if (!utt) return;
  holdPlaybackLocally();
  await conn.speak(utt, 100, $<HTMLInputElement>("realtime").checked);
}

function bargeIn(): void {
  if (!conn || state.playback === "idle") return;
  holdPlaybackLocally();
  conn.bargeIn();
}

// Experimental microphone mode: energy-threshold VAD, click to stop.
let micStream: MediaStream | null = null;
let micCtx: AudioContext | null = null;

async function toggleMic(): Promise<void> {
  if (micStream) {
    stopMic();
    return;
  }
  if (!conn) return;
  micStream = await navigator.mediaDevices.getUserMedia({ audio: true });
  micCtx = new AudioContext({ sampleRate: 16000 });
  const source = micCtx.createMediaStreamSource(micStream);
  const processor = micCtx.createScriptProcessor(1600, 1, 1);
  const vad = new EnergyVad();
  source.connect(processor);
  processor.connect(micCtx.destination);
  $("mic").textContent = "Stop mic";
  processor.onaudioprocess = (event) => {
    if (!conn) return;
    const float = event.inputBuffer.getChannelData(0);
    const pcm = new Int16Array(float.length);
    for (let i = 0; i < float.length; i++) {
      pcm[i] = Math.max(-32768, Math.min(32767, Math.round(float[i] * 32768)));
    }
    const edge = vad.update(pcm);
    if (edge === "start") {
      holdPlaybackLocally();
      conn.vadStart();
    }
    if (vad.active) {
      conn.sendAudio(new Uint8Array(pcm.buffer));
    }
    if (edge === "end") {
      conn.vadEnd();
    }
  };
}

function stopMic(): void {
  micStream?.getTracks().forEach((t) => t.stop());
  micStream = null;
  micCtx?.close();
  micCtx = null;
  $("mic").textContent = "Mic mode";
}

async function init(): Promise<void> {
  try {
    utterances = await loadUtterances("utterances.json");
    const select = $<HTMLSelectElement>("utterance");
    for (const utt of utterances) {
      const option = document.createElement("option");
      option.value = String(utt.tag);
      const label = utt.text === "" ? `<noise ${utt.durationMs / 1000}s>` : utt.text;
      option.textContent = `#${utt.tag} [${utt.lang} ${utt.durationMs / 1000}s] ${label.slice(0, 48)}`;
      select.appendChild(option);
    }
    select.value = "51";
  } catch (err) {
    state = { ...state, errors: [...state.errors, String(err)] };
  }
  $("connect").addEventListener("click", () => void connect());
  $("speak").addEventListener("click", () => void speakSelected());
  $("barge").addEventListener("click", bargeIn);
  $("mic").addEventListener("click", () => void toggleMic());
  $("bye").addEventListener("click", () => conn?.bye());
  render();
}

void init();
