"""Pseudo-streaming recognition: stable prefixes, flushing, equivalence."""

from __future__ import annotations

import asyncio

import pytest
from hypothesis import given, strategies as st

from xtalk.asr import (
    FinalResult,
    PseudoStreamer,
    StabilityWindow,
    TranscriptState,
    stable_prefix,
)
from xtalk.audio import AudioFrame, AudioSpan, split_pcm, tagged_pcm
from xtalk.backends import LatencyProfile, MockAsrBackend
from xtalk.errors import BackendFailure
from xtalk.textutil import longest_common_prefix

ZERO = LatencyProfile(0.0, 0.0)


def lcp_oracle(texts: list[str]) -> str:
    """Brute force character-wise longest common prefix."""
    if not texts:
        return ""
    prefix = []
    for chars in zip(*texts):
        if len(set(chars)) == 1:
            prefix.append(chars[0])
        else:
            break
    out = "".join(prefix)
    return out if len(texts) == len([t for t in texts if t.startswith(out)]) else out


class TestStablePrefix:
    def test_insufficient_history_is_empty(self):
        assert stable_prefix(["abc"], StabilityWindow(3)) == ""

    def test_character_lcp(self):
        assert stable_prefix(["abcd", "abce", "abcf"], 3) == "abc"

    def test_identical_hypotheses(self):
        assert stable_prefix(["x", "x", "x"], 3) == "x"

    def test_cjk_growing_hypotheses(self):
        cache = ["你好今", "你好今天", "你好今天天"]
        assert stable_prefix(cache, 3) == "你好今"

    def test_uses_only_last_w(self):
        assert stable_prefix(["zzz", "abc", "abd"], 2) == "ab"

    def test_window_validation(self):
        with pytest.raises(ValueError):
            StabilityWindow(1)

    @given(st.lists(st.text(alphabet="ab今天", max_size=12), min_size=0, max_size=8), st.integers(2, 5))
    def test_matches_brute_force_oracle(self, hyps, w):
        expected = "" if len(hyps) < w else lcp_oracle(hyps[-w:])
        assert stable_prefix(hyps, w) == expected

    @given(st.lists(st.text(max_size=20), min_size=1, max_size=6))
    def test_lcp_helper_against_oracle(self, texts):
        assert longest_common_prefix(texts) == lcp_oracle(texts)


class _ChunkFeeder:
    """Drives a PseudoStreamer one wire chunk at a time (no coalescing)."""

    def __init__(self, backend, window: int = 3, chunk_ms: int = 100) -> None:
        self.streamer = PseudoStreamer(backend, window)
        self.state = self.streamer.new_state()
        self.chunk_ms = chunk_ms
        self.partials = []

    async def feed_utterance(self, utt) -> FinalResult:
        for pcm in split_pcm(tagged_pcm(utt.tag, utt.duration_ms), self.chunk_ms):
            update = await self.streamer.on_audio_chunk(AudioFrame(pcm), self.state)
            self.partials.append(update)
        return await self.streamer.finalize_on_vad_end(self.state)


class TestPseudoStreamer:
    async def test_single_utterance_round_trip(self, corpus):
        utt = corpus.utterance(51)  # 今天天气怎么样
        backend = MockAsrBackend(corpus, ZERO)
        feeder = _ChunkFeeder(backend)
        final = await feeder.feed_utterance(utt)
        assert final.text == utt.text
        assert final.utterance_ms == utt.duration_ms
        assert not final.degraded
        assert feeder.state.finalized_text == ""  # reset after finalize
        assert feeder.state.total_ms == 0.0

    async def test_monotone_finalization(self, corpus):
        utt = corpus.find(lang="cn", duration_s=30)
        feeder = _ChunkFeeder(MockAsrBackend(corpus, ZERO))
        await feeder.feed_utterance(utt)
        finals = [p.finalized for p in feeder.partials if not p.failed]
        for a, b in zip(finals, finals[1:]):
            assert b.startswith(a), f"finalized text rewrote: {a!r} -> {b!r}"

    async def test_flush_never_resends_audio(self, corpus):
        """Every backend call starts exactly at the current flush point."""
        utt = corpus.find(lang="cn", duration_s=60)
        backend = MockAsrBackend(corpus, ZERO)
        feeder = _ChunkFeeder(backend)
        await feeder.feed_utterance(utt)
        starts = [c.start_ms for c in backend.call_log]
        assert starts == sorted(starts)
        # audio was actually flushed mid-utterance for a long text
        assert starts[-1] > 0.0
        ends = [c.end_ms for c in backend.call_log]
        for (s1, e1), (s2, e2) in zip(zip(starts, ends), zip(starts[1:], ends[1:])):
            assert s2 >= s1  # never re-send already flushed spans

    async def test_oracle_equivalence_sampled(self, corpus):
        """Chunked pseudo-streaming == one offline call on the full audio."""
        backend = MockAsrBackend(corpus, ZERO)
        for tag in (1, 2, 4, 26, 29, 54):
            utt = corpus.utterance(tag)
            feeder = _ChunkFeeder(MockAsrBackend(corpus, ZERO))
            final = await feeder.feed_utterance(utt)
            frames = tuple(
                AudioFrame(p) for p in split_pcm(tagged_pcm(utt.tag, utt.duration_ms), 100)
            )
            offline = await backend.recognize(AudioSpan(frames, 0.0, utt.duration_ms))
            assert final.text == offline == utt.text

    async def test_first_chunk_below_window_is_all_volatile(self, corpus):
        utt = corpus.utterance(51)
        feeder = _ChunkFeeder(MockAsrBackend(corpus, ZERO), window=3)
        pcm = split_pcm(tagged_pcm(utt.tag, utt.duration_ms), 100)[0]
        update = await feeder.streamer.on_audio_chunk(AudioFrame(pcm), feeder.state)
        assert update.finalized == ""
        assert len(feeder.state.hypothesis_cache) == 1

    async def test_cache_bounded_by_window(self, corpus):
        utt = corpus.utterance(1)
        feeder = _ChunkFeeder(MockAsrBackend(corpus, ZERO), window=3)
        for pcm in split_pcm(tagged_pcm(utt.tag, utt.duration_ms), 100):
            await feeder.streamer.on_audio_chunk(AudioFrame(pcm), feeder.state)
            assert len(feeder.state.hypothesis_cache) <= 3

    async def test_empty_utterance(self, corpus):
        feeder = _ChunkFeeder(MockAsrBackend(corpus, ZERO))
        final = await feeder.streamer.finalize_on_vad_end(feeder.state)
        assert final.text == ""
        assert final.utterance_ms == 0.0

    async def test_backend_failure_keeps_text_state(self, corpus):
        utt = corpus.utterance(51)
        backend = MockAsrBackend(corpus, ZERO)
        feeder = _ChunkFeeder(backend)
        chunks = split_pcm(tagged_pcm(utt.tag, utt.duration_ms), 100)
        await feeder.streamer.on_audio_chunk(AudioFrame(chunks[0]), feeder.state)
        before = (feeder.state.finalized_text, list(feeder.state.hypothesis_cache))
        backend.inject_failures(1)
        update = await feeder.streamer.on_audio_chunk(AudioFrame(chunks[1]), feeder.state)
        assert update.failed
        assert (feeder.state.finalized_text, list(feeder.state.hypothesis_cache)) == before
        # audio retained: the failed chunk is covered by the next call
        update2 = await feeder.streamer.on_audio_chunk(AudioFrame(chunks[2]), feeder.state)
        assert not update2.failed
        final = await feeder.streamer.finalize_on_vad_end(feeder.state)
        # only 3 of the chunks were fed in this test
        assert utt.text.startswith(final.text)

    async def test_degraded_final_on_last_call_failure(self, corpus):
        utt = corpus.utterance(51)
        backend = MockAsrBackend(corpus, ZERO)
        feeder = _ChunkFeeder(backend)
        for pcm in split_pcm(tagged_pcm(utt.tag, utt.duration_ms), 100):
            await feeder.streamer.on_audio_chunk(AudioFrame(pcm), feeder.state)
        backend.inject_failures(1)
        final = await feeder.streamer.finalize_on_vad_end(feeder.state)
        assert final.degraded
        assert utt.text.startswith(final.text)

    async def test_flushed_ms_never_exceeds_received(self, corpus):
        utt = corpus.find(lang="en", duration_s=30)
        feeder = _ChunkFeeder(MockAsrBackend(corpus, ZERO))
        for pcm in split_pcm(tagged_pcm(utt.tag, utt.duration_ms), 100):
            await feeder.streamer.on_audio_chunk(AudioFrame(pcm), feeder.state)
            assert feeder.state.flushed_ms <= feeder.state.total_ms + 1e-6


class TestLatencyShape:
    async def test_final_gap_bounded_by_tail_call(self, corpus):
        """With per-call cost fixed, the utterance-end to final gap is one
        backend call on the unflushed tail, whatever the total length."""
        profile = LatencyProfile(fixed_ms=5.0, per_unit_ms=2.0)
        gaps = []
        for dur in (5, 30):
            utt = corpus.find(lang="cn", duration_s=dur)
            backend = MockAsrBackend(corpus, profile)
            feeder = _ChunkFeeder(backend)
            for pcm in split_pcm(tagged_pcm(utt.tag, utt.duration_ms), 100):
                await feeder.streamer.on_audio_chunk(AudioFrame(pcm), feeder.state)
            tail_s = (feeder.state.total_ms - feeder.state.flushed_ms) / 1000.0
            loop = asyncio.get_running_loop()
            t0 = loop.time()
            await feeder.streamer.finalize_on_vad_end(feeder.state)
            gap_ms = (loop.time() - t0) * 1000.0
            bound = profile.fixed_ms + profile.per_unit_ms * tail_s + 20.0
            assert gap_ms <= bound, f"{dur}s: gap {gap_ms:.1f} > bound {bound:.1f}"
            gaps.append(gap_ms)
        # insensitivity: the 30s utterance does not cost 6x the 5s one
        assert gaps[1] < gaps[0] + 50.0
