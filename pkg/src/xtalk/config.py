"""Application configuration: a single human-editable JSON file.

Every tunable the engine exposes lives here; parse -> serialize -> parse
round-trips to an identical structure. Validation failures name the
offending key.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .backends.profiles import LatencyProfile
from .errors import ConfigError
from .turns import DEFAULT_FILLER_WORDS, FalseInterruptRules

ASR_MODES = ("streaming", "pseudo_streaming", "offline")

DEFAULT_SCENARIO_DIR = Path(__file__).parent / "scenarios" / "default"


@dataclass(frozen=True)
class AsrConfig:
    mode: str = "pseudo_streaming"
    window_w: int = 3
    latency: LatencyProfile = field(default_factory=lambda: LatencyProfile(25.0, 20.0))
    streaming_latency: LatencyProfile = field(
        default_factory=lambda: LatencyProfile(30.0, 0.0)
    )
    offline_latency: LatencyProfile = field(
        default_factory=lambda: LatencyProfile(40.0, 60.0)
    )


@dataclass(frozen=True)
class LlmConfig:
    latency: LatencyProfile = field(default_factory=lambda: LatencyProfile(40.0, 8.0))
    segment_min_len: int = 4
    segment_max_len: int = 80
    thinking_latency: LatencyProfile = field(
        default_factory=lambda: LatencyProfile(2000.0, 0.0)
    )


@dataclass(frozen=True)
class TtsConfig:
    latency: LatencyProfile = field(default_factory=lambda: LatencyProfile(60.0, 1.0))
    chars_per_second: int = 5
    concurrency: int = 2
    default_timbre: str = "warm_female"
    default_emotion: str = "neutral"
    # Routing table for generation backends; non-speech slots are
    # declared but inactive placeholders.
    routes: dict = field(
        default_factory=lambda: {"speech": "reference_tts", "music": None, "audio_fx": None}
    )
    native_emotion_backend: str = "vector_tts"


@dataclass(frozen=True)
class SideChannelConfig:
    caption_period_ms: float = 10_000.0
    ema_alpha: float = 0.1
    similarity_threshold: float = 0.6
    captioner_enabled: bool = True
    rewriter_enabled: bool = True
    speaker_id_enabled: bool = True
    captioner_latency: LatencyProfile = field(
        default_factory=lambda: LatencyProfile(150.0, 0.0)
    )
    embedder_latency: LatencyProfile = field(
        default_factory=lambda: LatencyProfile(20.0, 0.0)
    )
    rewriter_latency: LatencyProfile = field(
        default_factory=lambda: LatencyProfile(10.0, 0.0)
    )
    speaker_snapshot_path: str | None = None


@dataclass(frozen=True)
class PhaticConfig:
    threshold_ms: float = 300.0
    phrases: tuple[str, ...] = ("Let me check this for you…", "让我查一下…")


@dataclass(frozen=True)
class LimiterConfig:
    max_sessions: int = 16


@dataclass(frozen=True)
class AppConfig:
    listen: str = "127.0.0.1:8765"
    chunk_ms: int = 100
    telemetry_enabled: bool = True
    limiter: LimiterConfig = field(default_factory=LimiterConfig)
    asr: AsrConfig = field(default_factory=AsrConfig)
    llm: LlmConfig = field(default_factory=LlmConfig)
    tts: TtsConfig = field(default_factory=TtsConfig)
    rules: FalseInterruptRules = field(default_factory=FalseInterruptRules)
    side_channels: SideChannelConfig = field(default_factory=SideChannelConfig)
    phatic: PhaticConfig = field(default_factory=PhaticConfig)
    persona: str = "a concise, helpful voice assistant"
    scenario_dir: str = str(DEFAULT_SCENARIO_DIR)

    def to_dict(self) -> dict:
        return {
            "listen": self.listen,
            "chunk_ms": self.chunk_ms,
            "telemetry_enabled": self.telemetry_enabled,
            "limiter": {"max_sessions": self.limiter.max_sessions},
            "asr": {
                "mode": self.asr.mode,
                "window_w": self.asr.window_w,
                "latency": self.asr.latency.to_dict(),
                "streaming_latency": self.asr.streaming_latency.to_dict(),
                "offline_latency": self.asr.offline_latency.to_dict(),
            },
            "llm": {
                "latency": self.llm.latency.to_dict(),
                "segment_min_len": self.llm.segment_min_len,
                "segment_max_len": self.llm.segment_max_len,
                "thinking_latency": self.llm.thinking_latency.to_dict(),
            },
            "tts": {
                "latency": self.tts.latency.to_dict(),
                "chars_per_second": self.tts.chars_per_second,
                "concurrency": self.tts.concurrency,
                "default_timbre": self.tts.default_timbre,
                "default_emotion": self.tts.default_emotion,
                "routes": dict(self.tts.routes),
                "native_emotion_backend": self.tts.native_emotion_backend,
            },
            "rules": {
                "min_audio_ms": self.rules.min_audio_ms,
                "filler_words": list(self.rules.filler_words),
                "single_char_reject": self.rules.single_char_reject,
                "verify_deadline_ms": self.rules.verify_deadline_ms,
            },
            "side_channels": {
                "caption_period_ms": self.side_channels.caption_period_ms,
                "ema_alpha": self.side_channels.ema_alpha,
                "similarity_threshold": self.side_channels.similarity_threshold,
                "captioner_enabled": self.side_channels.captioner_enabled,
                "rewriter_enabled": self.side_channels.rewriter_enabled,
                "speaker_id_enabled": self.side_channels.speaker_id_enabled,
                "captioner_latency": self.side_channels.captioner_latency.to_dict(),
                "embedder_latency": self.side_channels.embedder_latency.to_dict(),
                "rewriter_latency": self.side_channels.rewriter_latency.to_dict(),
                "speaker_snapshot_path": self.side_channels.speaker_snapshot_path,
            },
            "phatic": {
                "threshold_ms": self.phatic.threshold_ms,
                "phrases": list(self.phatic.phrases),
            },
            "persona": self.persona,
            "scenario_dir": self.scenario_dir,
        }


def _require(cond: bool, key: str, detail: str) -> None:
    if not cond:
        raise ConfigError(key, detail)


def _profile(d: dict, key: str) -> LatencyProfile:
    _require(isinstance(d, dict), key, "must be an object")
    for f in ("fixed_ms", "per_unit_ms", "jitter_ms"):
        if f in d:
            _require(
                isinstance(d[f], (int, float)) and d[f] >= 0,
                f"{key}.{f}",
                "must be a non-negative number",
            )
    return LatencyProfile.from_dict(d)


def config_from_dict(data: dict) -> AppConfig:
    _require(isinstance(data, dict), "<root>", "config must be an object")
    base = AppConfig()

    listen = data.get("listen", base.listen)
    _require(isinstance(listen, str) and ":" in listen, "listen", "must be host:port")

    chunk_ms = data.get("chunk_ms", base.chunk_ms)
    _require(
        isinstance(chunk_ms, int) and 10 <= chunk_ms <= 1000,
        "chunk_ms",
        "must be an integer in [10, 1000]",
    )

    telemetry_enabled = data.get("telemetry_enabled", base.telemetry_enabled)
    _require(isinstance(telemetry_enabled, bool), "telemetry_enabled", "must be a boolean")

    lim = data.get("limiter", {})
    max_sessions = lim.get("max_sessions", base.limiter.max_sessions)
    _require(
        isinstance(max_sessions, int) and max_sessions >= 1,
        "limiter.max_sessions",
        "must be a positive integer",
    )

    asr = data.get("asr", {})
    mode = asr.get("mode", base.asr.mode)
    _require(mode in ASR_MODES, "asr.mode", f"must be one of {ASR_MODES}")
    window_w = asr.get("window_w", base.asr.window_w)
    _require(
        isinstance(window_w, int) and window_w >= 2,
        "asr.window_w",
        "must be an integer >= 2",
    )

    llm = data.get("llm", {})
    seg_min = llm.get("segment_min_len", base.llm.segment_min_len)
    seg_max = llm.get("segment_max_len", base.llm.segment_max_len)
    _require(isinstance(seg_min, int) and seg_min >= 1, "llm.segment_min_len", "must be >= 1")
    _require(
        isinstance(seg_max, int) and seg_max >= seg_min,
        "llm.segment_max_len",
        "must be >= segment_min_len",
    )

    tts = data.get("tts", {})
    cps = tts.get("chars_per_second", base.tts.chars_per_second)
    _require(isinstance(cps, int) and cps >= 1, "tts.chars_per_second", "must be >= 1")
    conc = tts.get("concurrency", base.tts.concurrency)
    _require(isinstance(conc, int) and conc >= 1, "tts.concurrency", "must be >= 1")

    rules = data.get("rules", {})
    min_audio = rules.get("min_audio_ms", base.rules.min_audio_ms)
    _require(
        isinstance(min_audio, (int, float)) and min_audio > 0,
        "rules.min_audio_ms",
        "must be positive",
    )
    fillers = rules.get("filler_words", list(DEFAULT_FILLER_WORDS))
    _require(
        isinstance(fillers, list) and all(isinstance(w, str) for w in fillers),
        "rules.filler_words",
        "must be a list of strings",
    )
    single_char = rules.get("single_char_reject", base.rules.single_char_reject)
    _require(isinstance(single_char, bool), "rules.single_char_reject", "must be a boolean")
    deadline = rules.get("verify_deadline_ms", base.rules.verify_deadline_ms)
    _require(
        isinstance(deadline, (int, float)) and deadline > 0,
        "rules.verify_deadline_ms",
        "must be positive",
    )

    side = data.get("side_channels", {})
    alpha = side.get("ema_alpha", base.side_channels.ema_alpha)
    _require(
        isinstance(alpha, (int, float)) and 0 < alpha <= 1,
        "side_channels.ema_alpha",
        "must be in (0, 1]",
    )
    threshold = side.get("similarity_threshold", base.side_channels.similarity_threshold)
    _require(
        isinstance(threshold, (int, float)) and -1 <= threshold <= 1,
        "side_channels.similarity_threshold",
        "must be in [-1, 1]",
    )
    period = side.get("caption_period_ms", base.side_channels.caption_period_ms)
    _require(
        isinstance(period, (int, float)) and period > 0,
        "side_channels.caption_period_ms",
        "must be positive",
    )

    phatic = data.get("phatic", {})
    phrases = phatic.get("phrases", list(base.phatic.phrases))
    _require(
        isinstance(phrases, list)
        and len(phrases) > 0
        and all(isinstance(p, str) for p in phrases),
        "phatic.phrases",
        "must be a non-empty list of strings",
    )
    phatic_threshold = phatic.get("threshold_ms", base.phatic.threshold_ms)
    _require(
        isinstance(phatic_threshold, (int, float)) and phatic_threshold >= 0,
        "phatic.threshold_ms",
        "must be non-negative",
    )

    scenario_dir = data.get("scenario_dir", base.scenario_dir)
    _require(isinstance(scenario_dir, str), "scenario_dir", "must be a string")
    _require(Path(scenario_dir).is_dir(), "scenario_dir", "directory does not exist")

    persona = data.get("persona", base.persona)
    _require(isinstance(persona, str) and persona, "persona", "must be a non-empty string")

    return AppConfig(
        listen=listen,
        chunk_ms=chunk_ms,
        telemetry_enabled=telemetry_enabled,
        limiter=LimiterConfig(max_sessions=max_sessions),
        asr=AsrConfig(
            mode=mode,
            window_w=window_w,
            latency=_profile(asr.get("latency", base.asr.latency.to_dict()), "asr.latency"),
            streaming_latency=_profile(
                asr.get("streaming_latency", base.asr.streaming_latency.to_dict()),
                "asr.streaming_latency",
            ),
            offline_latency=_profile(
                asr.get("offline_latency", base.asr.offline_latency.to_dict()),
                "asr.offline_latency",
            ),
        ),
        llm=LlmConfig(
            latency=_profile(llm.get("latency", base.llm.latency.to_dict()), "llm.latency"),
            segment_min_len=seg_min,
            segment_max_len=seg_max,
            thinking_latency=_profile(
                llm.get("thinking_latency", base.llm.thinking_latency.to_dict()),
                "llm.thinking_latency",
            ),
        ),
        tts=TtsConfig(
            latency=_profile(tts.get("latency", base.tts.latency.to_dict()), "tts.latency"),
            chars_per_second=cps,
            concurrency=conc,
            default_timbre=tts.get("default_timbre", base.tts.default_timbre),
            default_emotion=tts.get("default_emotion", base.tts.default_emotion),
            routes=dict(tts.get("routes", base.tts.routes)),
            native_emotion_backend=tts.get(
                "native_emotion_backend", base.tts.native_emotion_backend
            ),
        ),
        rules=FalseInterruptRules(
            min_audio_ms=float(min_audio),
            filler_words=tuple(fillers),
            single_char_reject=single_char,
            verify_deadline_ms=float(deadline),
        ),
        side_channels=SideChannelConfig(
            caption_period_ms=float(period),
            ema_alpha=float(alpha),
            similarity_threshold=float(threshold),
            captioner_enabled=side.get(
                "captioner_enabled", base.side_channels.captioner_enabled
            ),
            rewriter_enabled=side.get(
                "rewriter_enabled", base.side_channels.rewriter_enabled
            ),
            speaker_id_enabled=side.get(
                "speaker_id_enabled", base.side_channels.speaker_id_enabled
            ),
            captioner_latency=_profile(
                side.get("captioner_latency", base.side_channels.captioner_latency.to_dict()),
                "side_channels.captioner_latency",
            ),
            embedder_latency=_profile(
                side.get("embedder_latency", base.side_channels.embedder_latency.to_dict()),
                "side_channels.embedder_latency",
            ),
            rewriter_latency=_profile(
                side.get("rewriter_latency", base.side_channels.rewriter_latency.to_dict()),
                "side_channels.rewriter_latency",
            ),
            speaker_snapshot_path=side.get(
                "speaker_snapshot_path", base.side_channels.speaker_snapshot_path
            ),
        ),
        phatic=PhaticConfig(threshold_ms=float(phatic_threshold), phrases=tuple(phrases)),
        persona=persona,
        scenario_dir=scenario_dir,
    )


def load_config(path: str | Path | None = None) -> AppConfig:
    if path is None:
        return AppConfig()
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError("<file>", f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON: {exc}") from None
    return config_from_dict(data)


def dump_config(config: AppConfig) -> str:
    return json.dumps(config.to_dict(), indent=2, ensure_ascii=False, sort_keys=True)
