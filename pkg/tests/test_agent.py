"""Prompt assembly, sentence segmentation, phatic policy, tool plumbing."""

from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from xtalk.agent import (
    PhaticPolicy,
    SentenceSegmenter,
    TurnContext,
    build_prompt,
    make_tool_call,
)
from xtalk.backends import ToolRegistry
from xtalk.errors import ToolFailure
from xtalk.textutil import tokenize


def ctx(**kw) -> TurnContext:
    defaults = dict(
        history=(),
        caption=None,
        speaker_id=None,
        tts_config_view=("warm_female", "neutral"),
        thought=None,
        persona="test persona",
        tools_description="web_search(latency=800ms)",
    )
    defaults.update(kw)
    return TurnContext(**defaults)


class TestBuildPrompt:
    def test_caption_included_verbatim(self):
        prompt = build_prompt(ctx(caption="rainy street ambience"), "hello")
        assert "caption: rainy street ambience" in prompt

    def test_optional_sections_omitted_when_absent(self):
        prompt = build_prompt(ctx(), "hello")
        assert "caption:" not in prompt
        assert "speaker:" not in prompt
        assert "thought:" not in prompt

    def test_speaker_included(self):
        prompt = build_prompt(ctx(speaker_id="spk_01"), "hello")
        assert "spk_01" in prompt

    def test_byte_identical_for_identical_inputs(self):
        a = build_prompt(ctx(caption="c", speaker_id="s"), "你好", ("tool(x): y",))
        b = build_prompt(ctx(caption="c", speaker_id="s"), "你好", ("tool(x): y",))
        assert a == b

    def test_history_and_input_ordering(self):
        prompt = build_prompt(ctx(history=(("user", "u1"), ("assistant", "a1"))), "u2")
        assert prompt.index("[system]") < prompt.index("[history]") < prompt.index("[input]")
        assert prompt.index("u1") < prompt.index("u2")


class TestSentenceSegmenter:
    def test_boundary_emission(self):
        seg = SentenceSegmenter(min_len=1)
        out = []
        for tok in ("你", "好", "。"):
            out += seg.on_token(tok)
        assert out == ["你好。"]

    def test_hard_split_at_max_len(self):
        seg = SentenceSegmenter(min_len=4, max_len=80)
        out = []
        for ch in "宇" * 80:
            out += seg.on_token(ch)
        assert out == ["宇" * 80]
        assert seg.pending == ""

    def test_stream_end_flushes_pending(self):
        seg = SentenceSegmenter()
        assert seg.on_token("再见") == []
        assert seg.flush() == "再见"
        assert seg.flush() is None

    def test_min_len_defers_short_sentences(self):
        seg = SentenceSegmenter(min_len=4)
        assert seg.on_token("嗯。") == []
        out = seg.on_token("很好。")
        assert out == ["嗯。很好。"]

    def test_multi_sentence_tokens(self):
        seg = SentenceSegmenter(min_len=4)
        out = []
        for tok in tokenize("第一句话结束。第二句话也结束。"):
            out += seg.on_token(tok)
        assert out == ["第一句话结束。", "第二句话也结束。"]

    @given(st.lists(st.text(alphabet="ab today。 !x", max_size=6), max_size=40))
    def test_reassembly_exact(self, tokens):
        """emitted + pending always equals exactly what went in."""
        seg = SentenceSegmenter()
        emitted = []
        for tok in tokens:
            emitted += seg.on_token(tok)
        tail = seg.flush()
        joined = "".join(emitted) + (tail or "")
        assert joined == "".join(tokens)

    @given(st.integers(5, 30), st.integers(1, 4))
    def test_hard_split_chunk_sizes(self, max_len, token_size):
        seg = SentenceSegmenter(min_len=4, max_len=max_len)
        text = "x" * 200
        emitted = []
        for i in range(0, len(text), token_size):
            emitted += seg.on_token(text[i : i + token_size])
        for piece in emitted:
            assert len(piece) <= max_len


class TestPhaticPolicy:
    def test_language_matched_phrase(self):
        policy = PhaticPolicy()
        assert policy.phrase_for("帮我查个东西") == "让我查一下…"
        assert policy.phrase_for("look this up") == "Let me check this for you…"

    def test_empty_phrase_list_rejected(self):
        with pytest.raises(ValueError):
            PhaticPolicy(phrases=())

    def test_threshold_decides_masking(self, corpus):
        registry = ToolRegistry(corpus.tools)
        policy = PhaticPolicy(threshold_ms=300.0)
        for name in registry.names():
            call = make_tool_call(registry, name, {})
            masked = call.expected_latency_ms > policy.threshold_ms
            if name in ("web_search", "local_search"):
                assert masked
            else:
                assert not masked


class TestToolRegistry:
    def test_unknown_tool_rejected_at_construction(self, corpus):
        registry = ToolRegistry(corpus.tools)
        with pytest.raises(ToolFailure):
            make_tool_call(registry, "teleport", {})

    async def test_search_filters_by_coverage(self, corpus):
        registry = ToolRegistry(corpus.tools)
        result = await registry.execute("web_search", {"query": "今天的新闻"})
        assert "今日新闻摘要" in result.text  # high coverage snippet kept
        assert "详细页面" in result.text  # middle coverage page fetched
        assert "无关内容" not in result.text  # low coverage discarded

    async def test_default_result_for_unmatched_query(self, corpus):
        registry = ToolRegistry(corpus.tools)
        result = await registry.execute("web_search", {"query": "zzz"})
        assert result.text == "没有找到相关结果。"
