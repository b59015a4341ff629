"""Synthesis scheduling: reorder buffer, cancellation, loss-free output."""

from __future__ import annotations

import asyncio
import random

from conftest import fast_config, settle

from xtalk.audio import pcm_duration_ms, silence_pcm
from xtalk.events import EventKind, SentencePayload


class FutureTtsBackend:
    """Synthesis backend whose completions the test resolves explicitly."""

    def __init__(self) -> None:
        self.native_emotion_control = False
        self.pending: dict[str, asyncio.Future] = {}
        self.call_log = []

    async def synthesize(self, text: str, timbre: str, emotion: str):
        fut = asyncio.get_running_loop().create_future()
        self.pending[text] = fut
        return await fut

    def complete(self, text: str, seconds: int = 1) -> None:
        class R:
            pcm = silence_pcm(seconds * 1000.0)
            timbre = "t"
            emotion = "e"
            mechanism = "reference_audio"
            backend = "future"

        self.pending.pop(text).set_result(R())


async def drive_turn(harness, clause_texts, backend, turn_id=1):
    """Feed scheduled sentences through a session's synthesis manager."""
    client, session = await harness.client()
    session.backends.tts_backends = {"reference_tts": backend, "vector_tts": backend}
    session.backends._speech_route = "reference_tts"
    manager = session.tts_manager
    manager._sem = asyncio.Semaphore(len(clause_texts))  # all may run at once
    for i, text in enumerate(clause_texts):
        manager.schedule(SentencePayload(turn_id=turn_id, index=i, text=text))
    await manager._on_llm_done(turn_id, len(clause_texts))
    return client, session, manager


class TestReorderBuffer:
    async def test_random_completion_permutations_emit_in_order(self, harness):
        """200 random completion orders of a 6-clause turn: the wire sees
        strictly increasing (clause, chunk) pairs and no audio is lost."""
        rng = random.Random(42)
        texts = [f"clause-{i}" for i in range(6)]
        for trial in range(200):
            backend = FutureTtsBackend()
            client, session, manager = await drive_turn(harness, texts, backend, turn_id=1)
            order = texts[:]
            rng.shuffle(order)
            for text in order:
                await settle(lambda t=text: t in backend.pending)
                backend.complete(text, seconds=1)
            done = await client.await_turn_done(timeout=5.0)
            pairs = [(c.clause_index, c.chunk_index) for c in client.log.chunks_for_turn(1)]
            assert pairs == sorted(set(pairs)), f"trial {trial}: {pairs}"
            assert all(a < b for a, b in zip(pairs, pairs[1:]))
            total = sum(pcm_duration_ms(c.pcm) for c in client.log.chunks_for_turn(1))
            assert total == 6000.0
            assert done.payload["clause_count"] == 6
            await client.bye()
            await harness.runtime.session_manager.close_session(session)

    async def test_out_of_order_held_until_gap_fills(self, harness):
        backend = FutureTtsBackend()
        client, session, manager = await drive_turn(harness, ["a", "b"], backend)
        await settle(lambda: "b" in backend.pending)
        backend.complete("b")
        await asyncio.sleep(0.05)
        assert client.log.chunks == []  # clause 1 held back
        backend.complete("a")
        await client.await_turn_done(timeout=5.0)
        clauses = [c.clause_index for c in client.log.chunks]
        assert clauses == sorted(clauses)

    async def test_single_clause_emits_immediately(self, harness):
        backend = FutureTtsBackend()
        client, session, manager = await drive_turn(harness, ["only"], backend)
        await settle(lambda: "only" in backend.pending)
        backend.complete("only")
        await client.await_chunks(1, timeout=5.0)
        assert client.log.chunks[0].clause_index == 0


class TestCancellation:
    async def test_completion_for_cancelled_turn_emits_nothing(self, harness):
        backend = FutureTtsBackend()
        client, session, manager = await drive_turn(harness, ["a", "b"], backend)
        await settle(lambda: "a" in backend.pending)
        manager.cancel_turn(1)
        await asyncio.sleep(0.05)
        assert client.log.chunks == []
        assert all(j.status == "cancelled" for j in manager.job_log)

    async def test_schedule_after_cancel_is_dropped(self, harness):
        client, session = await harness.client()
        manager = session.tts_manager
        manager.cancel_turn(9)
        job = manager.schedule(SentencePayload(turn_id=9, index=0, text="dead"))
        assert job is None

    async def test_cancel_unknown_turn_is_noop(self, harness):
        client, session = await harness.client()
        session.tts_manager.cancel_turn(12345)
        session.tts_manager.cancel_turn(12345)

    async def test_job_snapshot_uses_config_at_schedule_time(self, harness):
        client, session = await harness.client()
        manager = session.tts_manager
        session.pipeline.tts_config.timbre = "calm_male"
        job1 = manager.schedule(SentencePayload(turn_id=1, index=0, text="first"))
        session.pipeline.tts_config.timbre = "warm_female"
        job2 = manager.schedule(SentencePayload(turn_id=1, index=1, text="second"))
        assert job1.timbre == "calm_male"
        assert job2.timbre == "warm_female"
        manager.cancel_turn(1)


class TestTiming:
    async def test_first_chunk_overhead_bounded(self, harness):
        """First audio leaves within synthesis latency + 20 ms of the
        first sentence event."""
        client, session = await harness.client()
        loop = asyncio.get_running_loop()
        synth_ms = (
            session.config.tts.latency.fixed_ms
            + session.config.tts.latency.per_unit_ms * len("hello there friend.")
        )
        t0 = loop.time()
        await session.bus.emit(
            session.session_id,
            EventKind.LLM_SENTENCE,
            SentencePayload(turn_id=1, index=0, text="hello there friend."),
        )
        await client.await_chunks(1, timeout=5.0)
        elapsed_ms = (loop.time() - t0) * 1000.0
        assert elapsed_ms <= synth_ms + 20.0, f"{elapsed_ms:.1f}ms > {synth_ms + 20:.1f}ms"
        session.tts_manager.cancel_turn(1)
