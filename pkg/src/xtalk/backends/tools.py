"""Tool stubs and the tool registry.

web_search / local_search return scripted result documents with stub
coverage scores; the tiered filter keeps snippets for high coverage,
full page text for middle coverage, and discards low coverage.
"""

from __future__ import annotations

import asyncio
from dataclasses import dataclass

from ..errors import ToolFailure


@dataclass(frozen=True)
class ToolResult:
    tool_name: str
    text: str
    ok: bool = True


def filter_search_results(results: list[dict]) -> str:
    """Tiered coverage filter over stub search results."""
    kept: list[str] = []
    for r in results:
        coverage = r.get("coverage", "low")
        if coverage == "high":
            kept.append(r.get("snippet", ""))
        elif coverage == "middle":
            kept.append(r.get("page", r.get("snippet", "")))
        # low coverage is discarded entirely
    return " ".join(s for s in kept if s)


class ToolRegistry:
    """Name -> {expected_latency_ms, script}; execution is scripted."""

    def __init__(self, tools: dict[str, dict]) -> None:
        self._tools = tools

    def __contains__(self, name: str) -> bool:
        return name in self._tools

    def names(self) -> list[str]:
        return sorted(self._tools)

    def expected_latency_ms(self, name: str) -> float:
        try:
            return float(self._tools[name]["expected_latency_ms"])
        except KeyError:
            raise ToolFailure(f"unregistered tool: {name}") from None

    def describe(self) -> str:
        parts = [
            f"{name}(latency={int(self._tools[name]['expected_latency_ms'])}ms)"
            for name in self.names()
        ]
        return ", ".join(parts)

    async def execute(self, name: str, args: dict) -> ToolResult:
        if name not in self._tools:
            raise ToolFailure(f"unregistered tool: {name}")
        spec = self._tools[name]
        await asyncio.sleep(float(spec["expected_latency_ms"]) / 1000.0)
        script = spec.get("script", {})
        if script.get("fail"):
            return ToolResult(name, f"tool {name} failed: {script.get('error', 'unavailable')}", ok=False)
        if name in ("web_search", "local_search"):
            query = str(args.get("query", ""))
            for entry in script.get("queries", []):
                if entry["match"] in query:
                    return ToolResult(name, filter_search_results(entry["results"]))
            return ToolResult(name, script.get("default", ""))
        return ToolResult(name, script.get("default", ""))
