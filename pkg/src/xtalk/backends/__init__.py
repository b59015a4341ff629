"""Deterministic, latency-configurable model backends.

Each backend implements exactly the model-agnostic contract its manager
consumes, so a real implementation can replace it without touching any
orchestration code. All content is scripted from the scenario corpus;
latency comes from a LatencyProfile.
"""

from .profiles import LatencyProfile
from .corpus import ScenarioCorpus, Utterance, tokenize_response
from .asr import MockAsrBackend, MockStreamingAsrBackend, StreamState
from .llm import LlmItem, MockLlmBackend, MockThinker
from .tts import MockTtsBackend, SynthResult
from .understanding import CaptionRewriter, MockCaptioner, MockSpeakerEmbedder
from .tools import ToolRegistry, ToolResult, filter_search_results

__all__ = [
    "CaptionRewriter",
    "LatencyProfile",
    "LlmItem",
    "MockAsrBackend",
    "MockCaptioner",
    "MockLlmBackend",
    "MockSpeakerEmbedder",
    "MockStreamingAsrBackend",
    "MockThinker",
    "MockTtsBackend",
    "ScenarioCorpus",
    "StreamState",
    "SynthResult",
    "ToolRegistry",
    "ToolResult",
    "Utterance",
    "filter_search_results",
    "tokenize_response",
]
