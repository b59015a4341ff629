"""Golden-log regression: every bundled scenario replays byte-identically."""

from __future__ import annotations

from pathlib import Path

import pytest

from xtalk.replay import list_scenarios, run_scenario

GOLDEN_DIR = Path(__file__).parent / "golden"


@pytest.mark.parametrize("name", list_scenarios())
async def test_scenario_matches_golden_log(name):
    golden_path = GOLDEN_DIR / f"{name}.log"
    assert golden_path.exists(), (
        f"golden log missing for {name}; record with "
        f"`xtalk replay --scenario {name} --out tests/golden/{name}.log`"
    )
    expected = golden_path.read_text(encoding="utf-8")
    lines = await run_scenario(name)
    actual = "\n".join(lines) + ("\n" if lines else "")
    assert actual == expected, f"scenario {name} diverged from its golden log"
