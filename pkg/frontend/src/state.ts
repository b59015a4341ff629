// Console state and the pure reducer applying server messages to it.
//
// Invariants the reducer maintains:
//  - the transcript display is always finalized text followed by the
//    volatile tail, never the other way around;
//  - at turn end the shown transcript equals the asr_final payload;
//  - the playback indicator mirrors the last pause/resume control frame;
//  - latency panel values are copied verbatim from metric frames.

import { AudioMessage, pcmDurationMs, ServerMessage } from "./protocol";

export type PlaybackState = "idle" | "playing" | "paused";

export interface LatencyPanel {
  e2e_ms?: number;
  asr_span_ms?: number;
  llm_span_ms?: number;
  tts_span_ms?: number;
}

export interface ConsoleState {
  status: "disconnected" | "connecting" | "connected";
  sessionId: string | null;
  finalized: string;
  volatile: string;
  finalTranscript: string | null;
  responseTurnId: number;
  sentences: string[];
  playback: PlaybackState;
  receivedAudioMs: number;
  receivedChunks: number;
  lastChunk: { turnId: number; clauseIndex: number; chunkIndex: number } | null;
  thinking: boolean;
  caption: string | null;
  speakerId: string | null;
  latency: LatencyPanel;
  errors: string[];
  log: string[];
}

export function initialState(): ConsoleState {
  return {
    status: "disconnected",
    sessionId: null,
    finalized: "",
    volatile: "",
    finalTranscript: null,
    responseTurnId: 0,
    sentences: [],
    playback: "idle",
    receivedAudioMs: 0,
    receivedChunks: 0,
    lastChunk: null,
    thinking: false,
    caption: null,
    speakerId: null,
    latency: {},
    errors: [],
    log: [],
  };
}

const LATENCY_METRICS = new Set(["e2e_ms", "asr_span_ms", "llm_span_ms", "tts_span_ms"]);

function describe(msg: ServerMessage): string {
  if (msg.kind === "audio") {
    return `tts_chunk turn=${msg.turnId} clause=${msg.clauseIndex} chunk=${msg.chunkIndex} ${msg.pcm.byteLength}B`;
  }
  return `${msg.type} turn=${msg.turnId} ${JSON.stringify(msg.payload)}`;
}

function audioChunk(state: ConsoleState, msg: AudioMessage): ConsoleState {
  // A confirmed interruption never sends resume; the next turn's audio
  // simply begins, which implicitly releases the pause.
  const newTurn = msg.turnId > (state.lastChunk?.turnId ?? 0);
  const playback = state.playback === "paused" && !newTurn ? "paused" : "playing";
  return {
    ...state,
    playback,
    receivedAudioMs: state.receivedAudioMs + pcmDurationMs(msg.pcm.byteLength),
    receivedChunks: state.receivedChunks + 1,
    lastChunk: { turnId: msg.turnId, clauseIndex: msg.clauseIndex, chunkIndex: msg.chunkIndex },
  };
}

export function reduce(state: ConsoleState, msg: ServerMessage): ConsoleState {
  const logged = { ...state, log: [...state.log, describe(msg)] };
  if (msg.kind === "audio") {
    return audioChunk(logged, msg);
  }
  const p = msg.payload;
  switch (msg.type) {
    case "hello_ack":
      return { ...logged, status: "connected", sessionId: String(p.session_id ?? "") };
    case "asr_partial":
      return {
        ...logged,
        finalized: String(p.finalized ?? ""),
        volatile: String(p.volatile ?? ""),
        finalTranscript: null,
      };
    case "asr_final": {
      const text = String(p.text ?? "");
      return { ...logged, finalized: text, volatile: "", finalTranscript: text };
    }
    case "llm_token":
      return logged;
    case "llm_sentence": {
      const fresh = msg.turnId !== state.responseTurnId;
      return {
        ...logged,
        responseTurnId: msg.turnId,
        sentences: fresh ? [String(p.text ?? "")] : [...state.sentences, String(p.text ?? "")],
      };
    }
    case "tts_done":
      return { ...logged, playback: state.playback === "paused" ? "paused" : "idle" };
    case "pause_playback":
      return { ...logged, playback: "paused" };
    case "resume":
      return { ...logged, playback: "playing" };
    case "thinking":
      return { ...logged, thinking: p.phase === "start" };
    case "caption":
      return { ...logged, caption: String(p.text ?? "") };
    case "speaker":
      return { ...logged, speakerId: String(p.speaker_id ?? "") };
    case "metric": {
      const name = String(p.name ?? "");
      if (!LATENCY_METRICS.has(name)) {
        return logged;
      }
      return { ...logged, latency: { ...state.latency, [name]: Number(p.value) } };
    }
    case "error":
      return { ...logged, errors: [...state.errors, String(p.code ?? "error")] };
    default:
      return logged;
  }
}

export function transcriptDisplay(state: ConsoleState): { finalized: string; volatile: string } {
  return { finalized: state.finalized, volatile: state.volatile };
}
