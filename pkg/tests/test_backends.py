"""Mock backend contracts: determinism, latency fidelity, alignment."""

from __future__ import annotations

import time

import pytest

from xtalk.audio import AudioFrame, AudioSpan, split_pcm, tagged_pcm
from xtalk.backends import (
    LatencyProfile,
    MockAsrBackend,
    MockLlmBackend,
    MockStreamingAsrBackend,
    MockTtsBackend,
)
from xtalk.backends.llm import script_items
from xtalk.errors import EmptyText, UntaggedAudio

ZERO = LatencyProfile(0.0, 0.0)


def span_of(utt, start_frac=0.0, end_frac=1.0) -> AudioSpan:
    pcm = tagged_pcm(utt.tag, utt.duration_ms)
    frames = tuple(AudioFrame(p) for p in split_pcm(pcm, 100))
    return AudioSpan(frames, utt.duration_ms * start_frac, utt.duration_ms * end_frac)


class TestMockAsr:
    async def test_full_span_identity(self, corpus):
        utt = corpus.utterance(51)
        backend = MockAsrBackend(corpus, ZERO)
        assert await backend.recognize(span_of(utt)) == utt.text

    async def test_partial_span_is_alignment_prefix(self, corpus):
        utt = corpus.utterance(51)  # 7 chars over 5 s
        backend = MockAsrBackend(corpus, ZERO)
        text = await backend.recognize(span_of(utt, 0.0, 0.4))
        assert utt.text.startswith(text)
        assert text == utt.text[: utt.chars_at(utt.duration_ms * 0.4)]

    async def test_zero_length_span_is_empty(self, corpus):
        backend = MockAsrBackend(corpus, ZERO)
        assert await backend.recognize(AudioSpan((), 0.0, 0.0)) == ""

    async def test_untagged_audio_rejected(self, corpus):
        backend = MockAsrBackend(corpus, ZERO)
        frames = (AudioFrame(b"\x00\x00" * 1600),)
        with pytest.raises(UntaggedAudio):
            await backend.recognize(AudioSpan(frames, 0.0, 100.0))

    async def test_prefixes_monotone_in_span_length(self, corpus):
        utt = corpus.find(lang="cn", duration_s=10)
        backend = MockAsrBackend(corpus, ZERO)
        last = ""
        for frac in (0.1, 0.25, 0.5, 0.75, 1.0):
            text = await backend.recognize(span_of(utt, 0.0, frac))
            assert text.startswith(last)
            last = text

    async def test_latency_profile_honored(self, corpus):
        utt = corpus.utterance(51)  # 5 s of audio
        backend = MockAsrBackend(corpus, LatencyProfile(fixed_ms=20.0, per_unit_ms=4.0))
        t0 = time.monotonic()
        await backend.recognize(span_of(utt))
        elapsed_ms = (time.monotonic() - t0) * 1000.0
        expected = 20.0 + 4.0 * 5.0
        assert expected - 1.0 <= elapsed_ms <= expected + 15.0

    async def test_streaming_partials_grow(self, corpus):
        utt = corpus.utterance(51)
        backend = MockStreamingAsrBackend(corpus, ZERO)
        state = backend.open_stream()
        last = ""
        for pcm in split_pcm(tagged_pcm(utt.tag, utt.duration_ms), 500):
            text = await backend.recognize_streaming(state, AudioFrame(pcm))
            assert text.startswith(last)
            last = text
        final = await backend.recognize_streaming(state, None)
        assert final == utt.text


class TestMockTts:
    async def test_duration_rule(self):
        backend = MockTtsBackend(ZERO, chars_per_second=5)
        result = await backend.synthesize("你好。", "t", "neutral")
        assert len(result.pcm) == 32000  # ceil(3/5) = 1 s at 16 kHz/16-bit

    async def test_empty_text_rejected(self):
        backend = MockTtsBackend(ZERO)
        with pytest.raises(EmptyText):
            await backend.synthesize("", "t", "neutral")

    async def test_content_blind_but_metadata_tagged(self):
        backend = MockTtsBackend(ZERO)
        happy = await backend.synthesize("same text", "t", "happy")
        sad = await backend.synthesize("same text", "t", "sad")
        assert happy.pcm == sad.pcm
        assert (happy.emotion, sad.emotion) == ("happy", "sad")

    async def test_mechanism_follows_capability_flag(self):
        ref = MockTtsBackend(ZERO, native_emotion_control=False)
        vec = MockTtsBackend(ZERO, native_emotion_control=True)
        a = await ref.synthesize("x", "t", "happy")
        b = await vec.synthesize("x", "t", "happy")
        assert a.mechanism == "reference_audio"
        assert b.mechanism == "native_vector"

    async def test_latency_per_char(self):
        backend = MockTtsBackend(LatencyProfile(fixed_ms=10.0, per_unit_ms=1.0))
        t0 = time.monotonic()
        await backend.synthesize("abcdefghij", "t", "neutral")
        elapsed_ms = (time.monotonic() - t0) * 1000.0
        assert 19.0 <= elapsed_ms <= 35.0


class TestMockLlm:
    async def test_scripted_mapping(self, corpus):
        backend = MockLlmBackend(corpus, ZERO)
        tokens = []
        async for item in backend.stream("[input]\nuser: 今天天气怎么样"):
            if item.kind == "token":
                tokens.append(item.text)
        assert "".join(tokens) == "今天多云，气温二十度。适合出门散步。"

    async def test_tool_flow_scripted(self, corpus):
        backend = MockLlmBackend(corpus, ZERO)
        kinds = []
        async for item in backend.stream("[input]\nuser: [SEARCH]查新闻"):
            kinds.append(item.kind)
        assert kinds[-1] == "tool_call"
        assert "token" in kinds

    async def test_unmatched_prompt_falls_back(self, corpus):
        backend = MockLlmBackend(corpus, ZERO)
        tokens = []
        async for item in backend.stream("[input]\nuser: xyzzy unknown"):
            tokens.append(item.text)
        assert "".join(tokens) == "我不太确定。可以换个说法吗。"

    def test_history_does_not_retrigger_rules(self, corpus):
        """Matching sees only the text after the last input marker."""
        prompt = "[history]\nuser: [SEARCH]旧的\n[input]\nuser: 你好小助手"
        request = prompt.rsplit("[input]", 1)[-1]
        items = script_items(corpus, request)
        assert all(i.kind == "token" for i in items)

    async def test_token_reassembly_equals_script(self, corpus):
        for text in ("给我讲个故事好不好", "tell me a story please"):
            items = script_items(corpus, f"user: {text}")
            joined = "".join(i.text for i in items if i.kind == "token")
            rule = corpus.match_rule(f"user: {text}")
            assert joined == "".join(r.get("say", "") for r in rule.items)


class TestDeterminism:
    async def test_zero_jitter_repeatable_timing_content(self, corpus):
        backend = MockAsrBackend(corpus, ZERO)
        utt = corpus.utterance(1)
        a = await backend.recognize(span_of(utt, 0.0, 0.6))
        b = await backend.recognize(span_of(utt, 0.0, 0.6))
        assert a == b
