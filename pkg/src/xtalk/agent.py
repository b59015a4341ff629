"""LLM manager and agent loop.

Drives the scripted language model per turn: prompt assembly with
side-channel context, token streaming into the sentence segmenter, tool
dispatch with phatic masking, timbre/emotion switching, and explicit
event-driven thinking. Tool results re-enter generation by restarting the
stream with the result appended to the prompt.
"""

from __future__ import annotations

import asyncio
import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from .errors import ToolFailure, UnknownEmotion, UnknownVoice
from .events import (
    ConfigSwitchPayload,
    EventKind,
    LlmDonePayload,
    SentencePayload,
    ThinkingPayload,
    TokenPayload,
    ToolPayload,
)
from .textutil import SENTENCE_BOUNDARY, contains_cjk

if TYPE_CHECKING:
    from .backends.tools import ToolRegistry
    from .session import Session

logger = logging.getLogger(__name__)

THINK_MARKER = "[THINK]"

DEFAULT_PHATIC_PHRASES = ("Let me check this for you…", "让我查一下…")


@dataclass(frozen=True)
class TurnContext:
    """Snapshot of everything the prompt template consumes."""

    history: tuple[tuple[str, str], ...]
    caption: str | None
    speaker_id: str | None
    tts_config_view: tuple[str, str]
    thought: str | None
    persona: str
    tools_description: str


def build_prompt(
    ctx: TurnContext, user_text: str, tool_results: tuple[str, ...] = ()
) -> str:
    """Deterministic prompt template; identical inputs give identical bytes."""
    lines = ["[system]", f"persona: {ctx.persona}"]
    if ctx.caption is not None:
        lines.append(f"caption: {ctx.caption}")
    if ctx.speaker_id is not None:
        lines.append(f"speaker: {ctx.speaker_id}")
    if ctx.thought is not None:
        lines.append(f"thought: {ctx.thought}")
    lines.append(f"tools: {ctx.tools_description}")
    lines.append("[history]")
    for role, text in ctx.history:
        lines.append(f"{role}: {text}")
    lines.append("[input]")
    lines.append(f"user: {user_text}")
    for result in tool_results:
        lines.append(result)
    return "\n".join(lines)


@dataclass
class SentenceSegmenter:
    """Token accumulator emitting clause-sized sentences.

    Emits when the pending text ends at a boundary character with at
    least ``min_len`` characters, or hard-splits at ``max_len``. The
    concatenation of everything emitted plus the pending remainder always
    equals the exact token stream received.
    """

    min_len: int = 4
    max_len: int = 80
    boundary_chars: frozenset[str] = SENTENCE_BOUNDARY
    pending: str = ""
    emitted: list[str] = field(default_factory=list)

    def on_token(self, token: str) -> list[str]:
        self.pending += token
        out: list[str] = []
        while True:
            if (
                self.pending
                and self.pending[-1] in self.boundary_chars
                and len(self.pending) >= self.min_len
            ):
                out.append(self.pending)
                self.pending = ""
                break
            if len(self.pending) >= self.max_len:
                out.append(self.pending[: self.max_len])
                self.pending = self.pending[self.max_len :]
                continue
            break
        self.emitted.extend(out)
        return out

    def flush(self) -> str | None:
        if not self.pending:
            return None
        tail, self.pending = self.pending, ""
        self.emitted.append(tail)
        return tail


@dataclass(frozen=True)
class PhaticPolicy:
    threshold_ms: float = 300.0
    phrases: tuple[str, ...] = DEFAULT_PHATIC_PHRASES

    def __post_init__(self) -> None:
        if not self.phrases:
            raise ValueError("phatic phrase list must be non-empty")

    def phrase_for(self, user_text: str) -> str:
        """Language-matched phrase selection, deterministic."""
        want_cjk = contains_cjk(user_text)
        for phrase in self.phrases:
            if contains_cjk(phrase) == want_cjk:
                return phrase
        return self.phrases[0]


@dataclass(frozen=True)
class ToolCall:
    tool_name: str
    args: dict
    expected_latency_ms: float


def make_tool_call(registry: "ToolRegistry", name: str, args: dict) -> ToolCall:
    """Construct a validated tool call; unknown names are rejected here."""
    if name not in registry:
        raise ToolFailure(f"unregistered tool: {name}")
    return ToolCall(name, dict(args), registry.expected_latency_ms(name))


class AgentManager:
    """Per-session agent loop; one generation task per active turn."""

    def __init__(self, session: "Session") -> None:
        self.session = session
        self.policy = PhaticPolicy(
            threshold_ms=session.config.phatic.threshold_ms,
            phrases=tuple(session.config.phatic.phrases),
        )
        self.persona = session.config.persona
        self._turn_tasks: dict[int, asyncio.Task] = {}
        self._aux_tasks: set[asyncio.Task] = set()

    # -- turn lifecycle --

    def begin_turn(self, user_text: str, turn_id: int) -> None:
        task = asyncio.create_task(
            self._run_turn(user_text, turn_id),
            name=f"agent-{self.session.session_id}-t{turn_id}",
        )
        self._turn_tasks[turn_id] = task
        task.add_done_callback(lambda t: self._turn_tasks.pop(turn_id, None))

    def cancel_turn(self, turn_id: int) -> None:
        task = self._turn_tasks.get(turn_id)
        if task and not task.done():
            task.cancel()

    def _context(self) -> TurnContext:
        p = self.session.pipeline
        thought, p.thought = p.thought, None  # consumed by exactly one prompt
        return TurnContext(
            history=tuple(p.history),
            caption=p.caption,
            speaker_id=p.speaker_id,
            tts_config_view=(p.tts_config.timbre, p.tts_config.emotion),
            thought=thought,
            persona=self.persona,
            tools_description=self.session.backends.tools.describe(),
        )

    async def _run_turn(self, user_text: str, turn_id: int) -> None:
        session = self.session
        pipeline = session.pipeline
        pipeline.history.append(("user", user_text))
        ctx = self._context()
        seg = SentenceSegmenter(
            min_len=session.config.llm.segment_min_len,
            max_len=session.config.llm.segment_max_len,
        )
        clause_index = 0
        sentences: list[str] = []
        tool_results: list[str] = []
        first_token = True

        if THINK_MARKER in user_text:
            await self.request_thinking(turn_id, user_text)

        try:
            while True:
                prompt = build_prompt(ctx, user_text, tuple(tool_results))
                restart = False
                async for item in session.backends.llm.stream(prompt):
                    if item.kind == "token":
                        if first_token:
                            session.tracebook.mark("llm_first_token_at", turn_id)
                            first_token = False
                        await session.bus.emit(
                            session.session_id,
                            EventKind.LLM_TOKEN,
                            TokenPayload(turn_id=turn_id, text=item.text),
                        )
                        for sentence in seg.on_token(item.text):
                            clause_index = await self._emit_sentence(
                                turn_id, clause_index, sentence
                            )
                            sentences.append(sentence)
                    elif item.kind == "think":
                        await self.request_thinking(turn_id, user_text)
                    elif item.kind == "tool_call":
                        call = make_tool_call(
                            session.backends.tools, item.tool_name, item.tool_args or {}
                        )
                        result_text, clause_index = await self.dispatch_tool(
                            call, turn_id, clause_index, user_text
                        )
                        tool_results.append(f"tool({call.tool_name}): {result_text}")
                        restart = True
                        break
                if not restart:
                    break

            tail = seg.flush()
            if tail is not None:
                clause_index = await self._emit_sentence(turn_id, clause_index, tail)
                sentences.append(tail)
            await session.bus.emit(
                session.session_id,
                EventKind.LLM_DONE,
                LlmDonePayload(turn_id=turn_id, sentence_count=clause_index),
            )
            pipeline.history.append(("assistant", "".join(sentences)))
        except asyncio.CancelledError:
            pipeline.history.append(("assistant", "".join(sentences)))
            raise

    async def _emit_sentence(self, turn_id: int, index: int, text: str) -> int:
        session = self.session
        if index == 0:
            session.tracebook.mark("llm_first_sentence_at", turn_id)
        await session.bus.emit(
            session.session_id,
            EventKind.LLM_SENTENCE,
            SentencePayload(turn_id=turn_id, index=index, text=text),
        )
        return index + 1

    # -- tools --

    async def dispatch_tool(
        self, call: ToolCall, turn_id: int, clause_index: int, user_text: str
    ) -> tuple[str, int]:
        """Run a tool, masking latency with a phatic utterance when the
        registry expects the call to exceed the threshold."""
        session = self.session
        if call.expected_latency_ms > self.policy.threshold_ms:
            phrase = self.policy.phrase_for(user_text)
            await session.bus.emit(
                session.session_id,
                EventKind.PHATIC_UTTERANCE,
                SentencePayload(turn_id=turn_id, index=clause_index, text=phrase),
            )
            clause_index += 1
        await session.bus.emit(
            session.session_id,
            EventKind.TOOL_CALL_START,
            ToolPayload(turn_id=turn_id, tool_name=call.tool_name),
        )
        if call.tool_name == "timbre_switch":
            result_text = await self.handle_timbre_switch(
                str(call.args.get("voice", "")), turn_id
            )
        elif call.tool_name == "emotion_switch":
            result_text = await self.handle_emotion_switch(
                str(call.args.get("emotion", "")), turn_id
            )
        else:
            try:
                result = await session.backends.tools.execute(call.tool_name, call.args)
                result_text = result.text
            except ToolFailure as exc:
                result_text = str(exc)
        await session.bus.emit(
            session.session_id,
            EventKind.TOOL_CALL_END,
            ToolPayload(turn_id=turn_id, tool_name=call.tool_name, detail=result_text),
        )
        return result_text, clause_index

    async def handle_timbre_switch(self, voice_name: str, turn_id: int) -> str:
        """Update the session voice; takes effect from the next synthesis
        job onward, never mid-clause."""
        session = self.session
        registry = session.backends.corpus.timbres
        if voice_name not in registry:
            return f"error: {UnknownVoice.__name__}: no voice {voice_name!r}"
        session.pipeline.tts_config.timbre = registry[voice_name]
        await session.bus.emit(
            session.session_id,
            EventKind.TIMBRE_SWITCH,
            ConfigSwitchPayload(turn_id=turn_id, value=registry[voice_name]),
        )
        return f"timbre switched to {voice_name}"

    async def handle_emotion_switch(self, emotion: str, turn_id: int) -> str:
        session = self.session
        if emotion not in session.backends.corpus.emotions:
            return f"error: {UnknownEmotion.__name__}: no emotion {emotion!r}"
        session.pipeline.tts_config.emotion = emotion
        backend = session.backends.tts_for(session.pipeline.tts_config.timbre)
        mechanism = (
            "native_vector" if backend.native_emotion_control else "reference_audio"
        )
        await session.bus.emit(
            session.session_id,
            EventKind.EMOTION_SWITCH,
            ConfigSwitchPayload(turn_id=turn_id, value=emotion, mechanism=mechanism),
        )
        return f"emotion switched to {emotion}"

    # -- thinking --

    async def request_thinking(self, turn_id: int, query: str) -> None:
        """Explicit deliberation state: start event now, the backend runs
        off the critical path, end event carries the summary which the
        next prompt consumes."""
        session = self.session
        await session.bus.emit(
            session.session_id,
            EventKind.THINKING_START,
            ThinkingPayload(turn_id=turn_id),
        )
        task = asyncio.create_task(
            self._think(turn_id, query),
            name=f"think-{session.session_id}-t{turn_id}",
        )
        self._aux_tasks.add(task)
        task.add_done_callback(self._aux_tasks.discard)

    async def _think(self, turn_id: int, query: str) -> None:
        session = self.session
        try:
            summary = await session.backends.thinker.think(query)
        except asyncio.CancelledError:
            raise
        session.pipeline.thought = summary
        try:
            await session.bus.emit(
                session.session_id,
                EventKind.THINKING_END,
                ThinkingPayload(turn_id=turn_id, summary=summary),
            )
        except Exception:
            pass  # session may have closed while thinking

    async def aclose(self) -> None:
        tasks = list(self._turn_tasks.values()) + list(self._aux_tasks)
        for task in tasks:
            task.cancel()
        for task in tasks:
            try:
                await task
            except (asyncio.CancelledError, Exception):
                pass
