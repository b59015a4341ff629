"""xtalk: a full-duplex, event-driven speech-to-speech orchestration engine.

Cascaded dialogue (recognition, generation, synthesis) coordinated over a
prioritized publish-subscribe bus, with per-session state isolation,
barge-in handling, parallel understanding channels, and deterministic
mock model backends for desk-scale testing.
"""

__version__ = "0.1.0"

from .config import AppConfig, load_config
from .events import Event, EventBus, EventKind, Priority
from .runtime import AppRuntime

__all__ = [
    "AppConfig",
    "AppRuntime",
    "Event",
    "EventBus",
    "EventKind",
    "Priority",
    "load_config",
    "__version__",
]
