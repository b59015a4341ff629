"""False-interruption rules and the turn state machine."""

from __future__ import annotations

import asyncio
import random

import pytest
from hypothesis import given, strategies as st

from xtalk.turns import (
    FalseInterruptRules,
    InterruptCandidate,
    Phase,
    validate_interrupt,
)

RULES = FalseInterruptRules()


def cand(audio_ms: float, transcript: str) -> InterruptCandidate:
    return InterruptCandidate(audio_ms=audio_ms, transcript=transcript)


class TestValidateInterrupt:
    @pytest.mark.parametrize(
        "audio_ms,transcript,expect_reason",
        [
            (300, "anything at all", "too_short"),
            (300, "", "too_short"),  # duration is evaluated first
            (800, "", "empty_asr"),
            (800, "。", "empty_asr"),
            (800, "a", "single_char"),
            (800, "7", "single_char"),
            (800, "B.", "single_char"),
            (800, "嗯", "filler_only"),  # a lone ideograph is a word, not a stray letter
            (800, "呵呵", "filler_only"),
            (800, "嗯嗯啊", "filler_only"),
            (800, "um", "filler_only"),
            (800, "uh um", "filler_only"),
            (800, "Hmm.", "filler_only"),
        ],
    )
    def test_false_cases(self, audio_ms, transcript, expect_reason):
        result = validate_interrupt(cand(audio_ms, transcript), RULES)
        assert not result.confirmed
        assert result.reason == expect_reason

    @pytest.mark.parametrize(
        "audio_ms,transcript",
        [
            (1200, "别说了换个话题"),
            (800, "stop it now"),
            (501, "换一首歌"),
            (800, "ab"),  # two letters pass the single-char rule
            (800, "嗯好的"),  # filler plus content is content
        ],
    )
    def test_confirmed_cases(self, audio_ms, transcript):
        assert validate_interrupt(cand(audio_ms, transcript), RULES).confirmed

    def test_rule_order_duration_before_content(self):
        result = validate_interrupt(cand(100, "嗯"), RULES)
        assert result.reason == "too_short"

    def test_single_char_reject_can_be_disabled(self):
        rules = FalseInterruptRules(single_char_reject=False)
        assert validate_interrupt(cand(800, "a"), rules).confirmed

    def test_custom_filler_list(self):
        rules = FalseInterruptRules(filler_words=("okay",))
        assert validate_interrupt(cand(800, "okay okay"), rules).reason == "filler_only"
        assert validate_interrupt(cand(800, "嗯"), rules).confirmed

    def test_min_audio_must_be_positive(self):
        with pytest.raises(ValueError):
            FalseInterruptRules(min_audio_ms=0)

    @given(
        st.floats(min_value=0, max_value=5000, allow_nan=False),
        st.text(alphabet="嗯啊a b。uhm别说话", max_size=12),
    )
    def test_pure_function_determinism(self, audio_ms, transcript):
        c = cand(audio_ms, transcript)
        first = validate_interrupt(c, RULES)
        second = validate_interrupt(c, RULES)
        assert first == second


class TestStateMachineFuzz:
    async def test_random_event_sequences_never_crash(self, harness):
        """Random client behavior: every illegal input is a no-op and the
        turn phase stays within the declared set."""
        client, session = await harness.client()
        rng = random.Random(11)
        phases = set()
        for _ in range(60):
            action = rng.random()
            try:
                if action < 0.3:
                    await client.vad_start()
                elif action < 0.5:
                    await client.vad_end()
                elif action < 0.7:
                    await client.barge_in_button()
                elif action < 0.85:
                    await client.send_audio_pcm(b"\x01\x00" * 320)
                else:
                    await asyncio.sleep(0.005)
            except ConnectionError:
                break
            phases.add(session.pipeline.turn_state.phase)
        assert phases <= set(Phase)
        assert not session.closed

    async def test_candidate_in_idle_is_noop(self, harness):
        client, session = await harness.client()
        await client.barge_in_button()
        await asyncio.sleep(0.05)
        assert session.pipeline.turn_state.phase is Phase.IDLE
        assert session.pipeline.turn_state.interrupt_open is None
        assert not client.log.of_type("pause_playback")

    async def test_semantic_validator_hook_can_veto(self, harness):
        """A plugged-in deeper classifier runs only after the rules pass
        and may turn a rule-confirmed interrupt into a rejection."""
        from xtalk.turns import ValidationResult

        client, session = await harness.client()
        seen = []

        def classifier(candidate):
            seen.append(candidate.transcript)
            return ValidationResult.false("filler_only")

        session.turn_manager.semantic_validator = classifier
        await client.speak(54, wait="final")
        await client.await_chunks(1)
        await client.speak(60, wait="final")  # passes every rule
        resume = await client.await_frame(lambda m: m.msg_type == "resume")
        assert resume.turn_id == 1
        assert seen == ["别说了换个话题"]
        await client.await_turn_done()
