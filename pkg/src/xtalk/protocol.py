"""Wire protocol: frame encoding/decoding for the `/session` endpoint.

Text frames are UTF-8 JSON envelopes; audio rides tagged binary frames:

  client audio:  [0x01][u32 seq, big-endian][PCM]
  server speech: [0x02][u32 turn_id][u32 packed index][PCM]

The packed index is (clause_index << 16) | chunk_index, so numeric frame
order equals lexicographic (clause, chunk) order and the client can
recover both. Everything else is a JSON object {type, seq|turn_id,
payload}.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from typing import Any

from .audio import AudioFrame
from .errors import MalformedFrame, NotClientVisible, SequenceRegression
from .events import (
    AsrFinalPayload,
    AsrPartialPayload,
    CaptionPayload,
    Event,
    EventKind,
    LlmDonePayload,
    MetricPayload,
    SentencePayload,
    SpeakerPayload,
    TokenPayload,
    TtsChunkPayload,
    TtsDonePayload,
)

SUBPROTOCOL = "xtalk.v1"
CLIENT_AUDIO_TAG = 0x01
SERVER_AUDIO_TAG = 0x02

CLIENT_TYPES = frozenset(
    {"hello", "audio", "vad_start", "vad_end", "barge_in", "text_input", "config", "bye"}
)

# Event kinds that may appear on the wire, and their frame type names.
CLIENT_VISIBLE: dict[EventKind, str] = {
    EventKind.ASR_PARTIAL: "asr_partial",
    EventKind.ASR_FINAL: "asr_final",
    EventKind.LLM_TOKEN: "llm_token",
    EventKind.LLM_SENTENCE: "llm_sentence",
    EventKind.TTS_CHUNK: "tts_chunk",
    EventKind.TTS_DONE: "tts_done",
    EventKind.PAUSE_PLAYBACK: "pause_playback",
    EventKind.RESUME: "resume",
    EventKind.THINKING_START: "thinking",
    EventKind.THINKING_END: "thinking",
    EventKind.CAPTION_UPDATED: "caption",
    EventKind.SPEAKER_IDENTIFIED: "speaker",
    EventKind.METRIC: "metric",
}


def pack_chunk_index(clause_index: int, chunk_index: int) -> int:
    if not 0 <= clause_index < 1 << 16 or not 0 <= chunk_index < 1 << 16:
        raise ValueError("clause/chunk index out of 16-bit range")
    return (clause_index << 16) | chunk_index


def unpack_chunk_index(packed: int) -> tuple[int, int]:
    return packed >> 16, packed & 0xFFFF


@dataclass(frozen=True)
class ClientMessage:
    msg_type: str
    seq: int
    payload: Any  # AudioFrame for audio, dict otherwise


@dataclass(frozen=True)
class ServerMessage:
    msg_type: str
    turn_id: int
    payload: Any  # dict for text frames; {"clause_index","chunk_index","pcm"} for tts_chunk


class ClientFrameDecoder:
    """Stateful per-connection decoder; enforces strictly increasing seq."""

    def __init__(self) -> None:
        self._last_seq = 0

    def decode(self, frame: str | bytes) -> ClientMessage:
        if isinstance(frame, (bytes, bytearray)):
            msg = self._decode_binary(bytes(frame))
        else:
            msg = self._decode_text(frame)
        if msg.seq <= self._last_seq:
            raise SequenceRegression(f"seq {msg.seq} after {self._last_seq}")
        self._last_seq = msg.seq
        return msg

    def _decode_binary(self, frame: bytes) -> ClientMessage:
        if len(frame) < 5:
            raise MalformedFrame("binary frame shorter than header")
        tag = frame[0]
        if tag != CLIENT_AUDIO_TAG:
            raise MalformedFrame(f"unknown binary type tag 0x{tag:02x}")
        seq = struct.unpack_from(">I", frame, 1)[0]
        pcm = frame[5:]
        if len(pcm) % 2:
            raise MalformedFrame("odd PCM payload length")
        return ClientMessage("audio", seq, AudioFrame(pcm))

    def _decode_text(self, frame: str) -> ClientMessage:
        try:
            obj = json.loads(frame)
        except json.JSONDecodeError as exc:
            raise MalformedFrame(f"bad JSON: {exc}") from exc
        if not isinstance(obj, dict) or not {"type", "seq", "payload"} <= obj.keys():
            raise MalformedFrame("envelope must carry type, seq, payload")
        msg_type = obj["type"]
        if msg_type not in CLIENT_TYPES or msg_type == "audio":
            raise MalformedFrame(f"unknown client message type {msg_type!r}")
        seq = obj["seq"]
        if not isinstance(seq, int):
            raise MalformedFrame("seq must be an integer")
        payload = obj["payload"]
        if not isinstance(payload, dict):
            raise MalformedFrame("payload must be an object")
        return ClientMessage(msg_type, seq, payload)


def encode_client_message(msg: ClientMessage) -> str | bytes:
    """Inverse of ClientFrameDecoder.decode, used by clients."""
    if msg.msg_type == "audio":
        frame: AudioFrame = msg.payload
        return bytes([CLIENT_AUDIO_TAG]) + struct.pack(">I", msg.seq) + frame.pcm
    return json.dumps(
        {"type": msg.msg_type, "seq": msg.seq, "payload": msg.payload},
        ensure_ascii=False,
        sort_keys=True,
    )


def _json_frame(msg_type: str, turn_id: int, payload: dict) -> str:
    return json.dumps(
        {"type": msg_type, "turn_id": turn_id, "payload": payload},
        ensure_ascii=False,
        sort_keys=True,
    )


def encode_server_event(event: Event) -> str | bytes:
    """Encode a client-visible event as a wire frame.

    Raises NotClientVisible for internal kinds (Flush, Stop, ...), which
    must never reach the wire.
    """
    msg_type = CLIENT_VISIBLE.get(event.kind)
    if msg_type is None:
        raise NotClientVisible(event.kind.value)
    p = event.payload

    if event.kind is EventKind.TTS_CHUNK:
        assert isinstance(p, TtsChunkPayload)
        packed = pack_chunk_index(p.clause_index, p.chunk_index)
        return (
            bytes([SERVER_AUDIO_TAG])
            + struct.pack(">II", p.turn_id, packed)
            + p.pcm
        )
    if event.kind is EventKind.ASR_PARTIAL:
        assert isinstance(p, AsrPartialPayload)
        return _json_frame(
            msg_type, p.turn_hint, {"finalized": p.finalized, "volatile": p.volatile}
        )
    if event.kind is EventKind.ASR_FINAL:
        assert isinstance(p, AsrFinalPayload)
        return _json_frame(
            msg_type,
            0,
            {"text": p.text, "utterance_ms": p.utterance_ms, "degraded": p.degraded},
        )
    if event.kind is EventKind.LLM_TOKEN:
        assert isinstance(p, TokenPayload)
        return _json_frame(msg_type, p.turn_id, {"text": p.text})
    if event.kind is EventKind.LLM_SENTENCE:
        assert isinstance(p, SentencePayload)
        return _json_frame(msg_type, p.turn_id, {"index": p.index, "text": p.text})
    if event.kind is EventKind.TTS_DONE:
        assert isinstance(p, TtsDonePayload)
        return _json_frame(
            msg_type,
            p.turn_id,
            {"clause_count": p.clause_count, "total_ms": p.total_ms},
        )
    if event.kind in (EventKind.PAUSE_PLAYBACK, EventKind.RESUME):
        return _json_frame(msg_type, p.turn_id, {"reason": p.reason})
    if event.kind is EventKind.THINKING_START:
        return _json_frame(msg_type, p.turn_id, {"phase": "start"})
    if event.kind is EventKind.THINKING_END:
        return _json_frame(msg_type, p.turn_id, {"phase": "end", "summary": p.summary})
    if event.kind is EventKind.CAPTION_UPDATED:
        assert isinstance(p, CaptionPayload)
        return _json_frame(msg_type, 0, {"text": p.text, "rewritten": p.rewritten})
    if event.kind is EventKind.SPEAKER_IDENTIFIED:
        assert isinstance(p, SpeakerPayload)
        return _json_frame(
            msg_type,
            0,
            {
                "speaker_id": p.speaker_id,
                "similarity": p.similarity,
                "new": p.newly_registered,
            },
        )
    if event.kind is EventKind.METRIC:
        assert isinstance(p, MetricPayload)
        return _json_frame(
            msg_type,
            p.turn_id,
            {"name": p.name, "value": p.value, "detail": p.detail},
        )
    raise NotClientVisible(event.kind.value)  # pragma: no cover


def encode_hello_ack(session_id: str) -> str:
    return _json_frame("hello_ack", 0, {"session_id": session_id})


def encode_error(code: str, detail: str = "") -> str:
    return _json_frame("error", 0, {"code": code, "detail": detail})


def decode_server_frame(frame: str | bytes) -> ServerMessage:
    """Parse a server frame back into a ServerMessage (client side)."""
    if isinstance(frame, (bytes, bytearray)):
        frame = bytes(frame)
        if len(frame) < 9 or frame[0] != SERVER_AUDIO_TAG:
            raise MalformedFrame("bad server binary frame")
        turn_id, packed = struct.unpack_from(">II", frame, 1)
        pcm = frame[9:]
        if len(pcm) % 2:
            raise MalformedFrame("odd PCM payload length")
        clause, chunk = unpack_chunk_index(packed)
        return ServerMessage(
            "tts_chunk",
            turn_id,
            {"clause_index": clause, "chunk_index": chunk, "pcm": pcm},
        )
    try:
        obj = json.loads(frame)
    except json.JSONDecodeError as exc:
        raise MalformedFrame(f"bad JSON: {exc}") from exc
    if not isinstance(obj, dict) or "type" not in obj:
        raise MalformedFrame("server frame missing type")
    return ServerMessage(obj["type"], obj.get("turn_id", 0), obj.get("payload", {}))
