"""Latency tracing.

Each turn carries a trace of monotonic timestamps at the pipeline's
hand-off points. End-to-end latency is first synthesized audio leaving
the output gateway minus utterance end; the client-side silence threshold
never enters the measurement because the end point is stamped when the
endpoint marker arrives.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

from .errors import DuplicateMark, IncompleteTrace

TRACE_POINTS = (
    "vad_end_at",
    "asr_final_at",
    "llm_first_token_at",
    "llm_first_sentence_at",
    "tts_first_chunk_at",
    "turn_done_at",
)

_POINT_INDEX = {name: i for i, name in enumerate(TRACE_POINTS)}


@dataclass
class LatencyTrace:
    turn_id: int = 0
    points: dict[str, int] = field(default_factory=dict)

    def set_point(self, point: str, t_ns: int) -> None:
        if point not in _POINT_INDEX:
            raise KeyError(f"unknown trace point {point!r}")
        if point in self.points:
            raise DuplicateMark(f"{point} already set for turn {self.turn_id}")
        self.points[point] = t_ns

    def get(self, point: str) -> int | None:
        return self.points.get(point)

    def ordered(self) -> bool:
        """True when present points are non-decreasing in pipeline order."""
        last = None
        for name in TRACE_POINTS:
            if name in self.points:
                if last is not None and self.points[name] < last:
                    return False
                last = self.points[name]
        return True


def compute_e2e(trace: LatencyTrace) -> float:
    """Milliseconds from utterance end to first audio chunk on the wire."""
    start = trace.get("vad_end_at")
    end = trace.get("tts_first_chunk_at")
    if start is None or end is None:
        raise IncompleteTrace(f"turn {trace.turn_id}")
    return (end - start) / 1e6


def decompose(trace: LatencyTrace) -> tuple[float, float, float]:
    """(asr, llm, tts) span milliseconds; sums exactly to compute_e2e."""
    for point in ("vad_end_at", "asr_final_at", "llm_first_sentence_at", "tts_first_chunk_at"):
        if trace.get(point) is None:
            raise IncompleteTrace(f"turn {trace.turn_id} missing {point}")
    asr = (trace.points["asr_final_at"] - trace.points["vad_end_at"]) / 1e6
    llm = (trace.points["llm_first_sentence_at"] - trace.points["asr_final_at"]) / 1e6
    tts = (trace.points["tts_first_chunk_at"] - trace.points["llm_first_sentence_at"]) / 1e6
    return asr, llm, tts


class TraceBook:
    """Per-session trace registry.

    An utterance's trace starts as the pending trace (marked before the
    turn exists) and is bound to a turn id when the turn begins. Marks
    fire the metric hook so telemetry reaches the wire.
    """

    def __init__(self, metric_hook: Callable[[str, float, int], None] | None = None) -> None:
        self.pending: LatencyTrace | None = None
        self.turns: dict[int, LatencyTrace] = {}
        self.metric_hook = metric_hook

    def begin_pending(self) -> LatencyTrace:
        """Start a fresh utterance trace, discarding any unbound one (an
        utterance that never became a turn, e.g. a rejected interrupt)."""
        self.pending = LatencyTrace()
        return self.pending

    def mark(self, point: str, turn_id: int | None = None, t_ns: int | None = None) -> LatencyTrace:
        t = t_ns if t_ns is not None else time.monotonic_ns()
        if turn_id is None:
            if self.pending is None:
                self.pending = LatencyTrace()
            trace = self.pending
        else:
            trace = self.turns.setdefault(turn_id, LatencyTrace(turn_id=turn_id))
        trace.set_point(point, t)
        if self.metric_hook is not None:
            self.metric_hook(f"mark.{point}", t / 1e6, trace.turn_id)
        return trace

    def bind_pending(self, turn_id: int) -> LatencyTrace:
        """Attach the pending utterance trace to a freshly started turn."""
        trace = self.pending if self.pending is not None else LatencyTrace()
        self.pending = None
        trace.turn_id = turn_id
        self.turns[turn_id] = trace
        return trace

    def trace_for(self, turn_id: int) -> LatencyTrace | None:
        return self.turns.get(turn_id)
