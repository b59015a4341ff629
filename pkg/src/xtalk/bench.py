"""Latency bench harness.

Measures end-to-end latency (utterance end to first audio chunk leaving
the output gateway) over a grid of recognizer profiles, input lengths,
and languages, three runs per cell, reporting the rounded average. Each
cell also carries the analytic critical-path bound derived from the
configured mock latencies: recognizer tail + first-sentence generation +
first-clause synthesis.
"""

from __future__ import annotations

import dataclasses
import json
import logging
from dataclasses import dataclass
from pathlib import Path

from .agent import SentenceSegmenter
from .backends.llm import script_items
from .client import open_loopback
from .config import AppConfig, AsrConfig
from .errors import ScenarioMissing
from .telemetry import compute_e2e
from .runtime import AppRuntime

logger = logging.getLogger(__name__)

DEFAULT_LENGTHS = (5, 10, 30, 60)
DEFAULT_LANGS = ("cn", "en")
RUNS_PER_CELL = 3


@dataclass(frozen=True)
class BenchCell:
    combo: str
    length_s: float
    lang: str
    e2e_ms: int  # rounded average of the runs
    runs_ms: tuple[float, ...]
    bound_low_ms: float
    bound_high_ms: float

    def to_row(self) -> dict:
        return {
            "combo": self.combo,
            "length_s": self.length_s,
            "lang": self.lang,
            "e2e_ms": self.e2e_ms,
            "runs_ms": list(self.runs_ms),
            "bound_low_ms": self.bound_low_ms,
            "bound_high_ms": self.bound_high_ms,
        }


@dataclass(frozen=True)
class BenchReport:
    cells: tuple[BenchCell, ...]

    def rows(self) -> list[dict]:
        return [c.to_row() for c in self.cells]

    def table(self) -> str:
        header = f"{'combo':24} {'lang':4} {'len(s)':>6} {'e2e(ms)':>8} {'bound(ms)':>18}"
        lines = [header, "-" * len(header)]
        for c in self.cells:
            bound = f"[{c.bound_low_ms:.0f}, {c.bound_high_ms:.0f}]"
            lines.append(
                f"{c.combo:24} {c.lang:4} {c.length_s:>6.0f} {c.e2e_ms:>8d} {bound:>18}"
            )
        return "\n".join(lines)

    def write_jsonl(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for row in self.rows():
                fh.write(json.dumps(row, ensure_ascii=False) + "\n")


def bench_combos(base: AppConfig) -> dict[str, AppConfig]:
    """Named profile combinations: the streaming/offline recognizer
    contrast plus slow-generation and slow-synthesis variants."""
    slow_llm = dataclasses.replace(
        base.llm, latency=dataclasses.replace(base.llm.latency, fixed_ms=base.llm.latency.fixed_ms + 120.0)
    )
    slow_tts = dataclasses.replace(
        base.tts, latency=dataclasses.replace(base.tts.latency, fixed_ms=base.tts.latency.fixed_ms + 150.0)
    )
    return {
        "streaming-base": dataclasses.replace(
            base, asr=dataclasses.replace(base.asr, mode="streaming")
        ),
        "offline-base": dataclasses.replace(
            base, asr=dataclasses.replace(base.asr, mode="offline")
        ),
        "streaming-slow-llm": dataclasses.replace(
            base, asr=dataclasses.replace(base.asr, mode="streaming"), llm=slow_llm
        ),
        "streaming-slow-tts": dataclasses.replace(
            base, asr=dataclasses.replace(base.asr, mode="streaming"), tts=slow_tts
        ),
    }


def first_sentence_profile(
    config: AppConfig, corpus, user_text: str
) -> tuple[int, str]:
    """(item index k of the first emitted sentence, its text) under the
    scripted generation for this input; k is 1-based."""
    items = script_items(corpus, f"user: {user_text}")
    seg = SentenceSegmenter(
        min_len=config.llm.segment_min_len, max_len=config.llm.segment_max_len
    )
    for k, item in enumerate(items, start=1):
        if item.kind != "token":
            continue
        sentences = seg.on_token(item.text)
        if sentences:
            return k, sentences[0]
    tail = seg.flush()
    if tail is None:
        raise ScenarioMissing(f"script for {user_text!r} produces no sentence")
    return len(items), tail


def analytic_bound(
    config: AppConfig, corpus, utterance, overhead_ms: float = 50.0
) -> tuple[float, float]:
    """[A+L+T, A+L+T+overhead]: the mock critical-path sum for one turn.

    A: recognizer tail work after utterance end (flush call for the
       streaming mode, full-buffer recognition for offline);
    L: generation lead-in plus tokens until the first sentence boundary;
    T: synthesis of the first clause.
    """
    mode = config.asr.mode
    if mode == "streaming":
        a = config.asr.streaming_latency.fixed_ms
    elif mode == "offline":
        a = config.asr.offline_latency.delay_ms(utterance.duration_ms / 1000.0)
    else:
        raise ScenarioMissing("analytic bound defined for streaming/offline modes")
    k, first_sentence = first_sentence_profile(config, corpus, utterance.text)
    l = config.llm.latency.fixed_ms + (k - 1) * config.llm.latency.per_unit_ms
    t = config.tts.latency.delay_ms(len(first_sentence))
    total = a + l + t
    return total, total + overhead_ms


async def measure_turn(runtime: AppRuntime, utterance) -> float:
    """One scripted turn over loopback; returns server-side e2e ms."""
    client, session = await open_loopback(runtime)
    try:
        expect_partials = runtime.config.asr.mode != "offline"
        await client.speak(utterance, wait="final", expect_partials=expect_partials)
        await client.await_turn_done()
        turn_id = session.pipeline.turn_state.current_turn_id
        trace = session.tracebook.trace_for(turn_id)
        e2e = compute_e2e(trace)
        await client.bye()
        return e2e
    finally:
        await client.close()
        if not session.closed:
            await runtime.session_manager.close_session(session)


async def run_bench(
    config: AppConfig,
    lengths: tuple[float, ...] = DEFAULT_LENGTHS,
    langs: tuple[str, ...] = DEFAULT_LANGS,
    combos: dict[str, AppConfig] | None = None,
    runs: int = RUNS_PER_CELL,
) -> BenchReport:
    combos = combos if combos is not None else bench_combos(config)
    cells: list[BenchCell] = []
    for combo_name, combo_config in combos.items():
        runtime = AppRuntime(combo_config)
        try:
            for lang in langs:
                for length in lengths:
                    utt = runtime.corpus.find(lang=lang, duration_s=length)
                    samples = [await measure_turn(runtime, utt) for _ in range(runs)]
                    low, high = analytic_bound(combo_config, runtime.corpus, utt)
                    cells.append(
                        BenchCell(
                            combo=combo_name,
                            length_s=length,
                            lang=lang,
                            e2e_ms=round(sum(samples) / len(samples)),
                            runs_ms=tuple(round(s, 3) for s in samples),
                            bound_low_ms=round(low, 3),
                            bound_high_ms=round(high, 3),
                        )
                    )
                    logger.info(
                        "bench %s %s %ss -> %s ms", combo_name, lang, length, cells[-1].e2e_ms
                    )
        finally:
            await runtime.aclose()
    return BenchReport(cells=tuple(cells))
