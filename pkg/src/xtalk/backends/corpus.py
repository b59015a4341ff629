"""Scenario corpus: scripted utterances, response rules, scenes, voices.

A scenario directory contains:

  utterances.json  tag -> {text, duration_ms, lang, voice, scene,
                           char_end_ms, aux}
  llm_script.json  ordered match rules driving the scripted agent
  scene_tags.json  scene tag -> {caption, rewritten}
  voices.json      {"timbres": name -> profile tag,
                    "speakers": voice tag -> unit embedding}
  tools.json       tool name -> {expected_latency_ms, script}

``char_end_ms`` is the sidecar alignment: entry i is the end time of
character i within the utterance audio. The recognizer mock truncates
transcripts at these boundaries, so partial spans yield growing prefixes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ScenarioMissing
from ..textutil import tokenize

ALIGN_EPS_MS = 1e-6


@dataclass(frozen=True)
class Utterance:
    tag: int
    text: str
    duration_ms: float
    lang: str
    voice: str
    scene: str
    char_end_ms: tuple[float, ...]
    aux: bool = False

    def chars_at(self, t_ms: float) -> int:
        """Number of characters whose aligned audio ends at or before t_ms."""
        count = 0
        for end in self.char_end_ms:
            if end <= t_ms + ALIGN_EPS_MS:
                count += 1
            else:
                break
        return count

    def slice_text(self, start_ms: float, end_ms: float) -> str:
        return self.text[self.chars_at(start_ms) : self.chars_at(end_ms)]


@dataclass(frozen=True)
class ResponseRule:
    match: str
    items: tuple[dict, ...]


@dataclass
class ScenarioCorpus:
    utterances: dict[int, Utterance]
    rules: list[ResponseRule]
    scenes: dict[str, dict]
    timbres: dict[str, str]
    speaker_vectors: dict[str, np.ndarray]
    tools: dict[str, dict]
    thinking_summary: str = "deliberation complete"
    emotions: tuple[str, ...] = ("neutral", "happy", "sad", "angry", "surprised")
    path: Path | None = None
    _by_text: dict[str, Utterance] = field(default_factory=dict)

    @classmethod
    def load(cls, directory: str | Path) -> "ScenarioCorpus":
        d = Path(directory)
        if not d.is_dir():
            raise ScenarioMissing(str(d))
        try:
            utt_raw = json.loads((d / "utterances.json").read_text(encoding="utf-8"))
            llm_raw = json.loads((d / "llm_script.json").read_text(encoding="utf-8"))
            scenes = json.loads((d / "scene_tags.json").read_text(encoding="utf-8"))
            voices = json.loads((d / "voices.json").read_text(encoding="utf-8"))
            tools = json.loads((d / "tools.json").read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise ScenarioMissing(f"{exc.filename}") from exc

        utterances: dict[int, Utterance] = {}
        for key, u in utt_raw.items():
            tag = int(key)
            utterances[tag] = Utterance(
                tag=tag,
                text=u["text"],
                duration_ms=float(u["duration_ms"]),
                lang=u.get("lang", "cn"),
                voice=u.get("voice", "voice_a"),
                scene=u.get("scene", "quiet_room"),
                char_end_ms=tuple(float(x) for x in u["char_end_ms"]),
                aux=bool(u.get("aux", False)),
            )

        rules = [
            ResponseRule(match=r["match"], items=tuple(r["items"]))
            for r in llm_raw["rules"]
        ]
        speaker_vectors = {
            name: _unit(np.asarray(vec, dtype=np.float64))
            for name, vec in voices.get("speakers", {}).items()
        }
        corpus = cls(
            utterances=utterances,
            rules=rules,
            scenes=scenes,
            timbres=voices.get("timbres", {}),
            speaker_vectors=speaker_vectors,
            tools=tools,
            thinking_summary=llm_raw.get("thinking_summary", "deliberation complete"),
            path=d,
        )
        corpus._by_text = {u.text: u for u in utterances.values()}
        return corpus

    def utterance(self, tag: int) -> Utterance:
        try:
            return self.utterances[tag]
        except KeyError:
            raise ScenarioMissing(f"utterance tag {tag}") from None

    def bench_corpus(self) -> list[Utterance]:
        """The primary scripted utterances (aux entries excluded)."""
        return sorted(
            (u for u in self.utterances.values() if not u.aux), key=lambda u: u.tag
        )

    def find(self, *, lang: str, duration_s: float) -> Utterance:
        for u in self.bench_corpus():
            if u.lang == lang and abs(u.duration_ms - duration_s * 1000.0) < 1.0:
                return u
        raise ScenarioMissing(f"no {lang} utterance of {duration_s}s")

    def match_rule(self, request: str) -> ResponseRule:
        """First rule whose pattern occurs in the request text; rules are
        ordered so continuation rules (tool results) take precedence."""
        for rule in self.rules:
            if rule.match and rule.match in request:
                return rule
        for rule in self.rules:
            if rule.match == "":
                return rule
        raise ScenarioMissing("llm script has no fallback rule")


def tokenize_response(text: str) -> list[str]:
    """Scripted response text -> token stream (CJK per char, latin per word)."""
    return tokenize(text)


def _unit(vec: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise ValueError("speaker vector must be nonzero")
    return vec / norm
