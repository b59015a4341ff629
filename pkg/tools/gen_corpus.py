#!/usr/bin/env python3
"""Regenerate the default scenario corpus.

Writes utterances.json / llm_script.json / scene_tags.json / voices.json /
tools.json under src/xtalk/scenarios/default, plus the session scripts
under src/xtalk/scenarios/sessions. Deterministic: same output every run.

Alignments are uniform per character (char i of an N-char, T-ms utterance
ends at (i+1)*T/N), which keeps the proportional audio flush exactly on
character boundaries for the scripted recognizer.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parent.parent / "src" / "xtalk" / "scenarios"

CN_SENTENCES = [
    "我想了解附近有什么好吃的餐馆",
    "请把客厅的灯调暗一点",
    "明天早上七点叫我起床",
    "帮我记录一下今天的开销",
    "这个周末有什么活动推荐",
    "我刚才说的事情你还记得吗",
    "给我讲讲历史上的今天",
    "帮我把空调温度调到二十六度",
    "我最近睡眠不太好怎么办",
    "下个月我打算去海边度假",
    "请提醒我下午三点开会",
    "家里的植物应该多久浇一次水",
]

EN_SENTENCES = [
    "I would like to find a quiet place to read this afternoon",
    "please remind me to water the plants tomorrow morning",
    "can you keep track of my spending for this week",
    "my sleep schedule has been off lately and I need advice",
    "we are planning a small trip to the coast next month",
    "turn the living room lights down a little for me",
    "what happened on this day in history long ago",
    "set the thermostat to a comfortable temperature tonight",
    "I want to remember the groceries we talked about",
    "help me plan a simple dinner for four people",
]

SCENES = ["quiet_room", "cafe", "street", "rain"]
VOICES = ["voice_a", "voice_b", "voice_c"]

# Lengths covering the measurement grid per language.
DURATIONS = [5, 10, 30, 60, 15, 20, 45, 5, 10, 30, 60, 15, 20, 45, 5, 10, 30, 60, 15, 20, 45, 5, 10, 30, 60]


def build_text(bank: list[str], idx: int, duration_s: int, sep: str, stop: str, rate: float) -> str:
    """Compose a transcript of roughly rate*duration characters."""
    target = max(6, int(duration_s * rate))
    parts: list[str] = []
    i = idx
    text = ""
    while len(text) < target:
        parts.append(bank[i % len(bank)])
        i += 1
        text = stop.join(parts) + stop
    # Every third utterance ends without punctuation (open-ended tail).
    if idx % 3 == 2 and len(text) > 2:
        text = text.rstrip(stop)
    return text


def uniform_alignment(text: str, duration_ms: float) -> list[float]:
    n = len(text)
    return [round((i + 1) * duration_ms / n, 6) for i in range(n)] if n else []


def main() -> None:
    utterances: dict[str, dict] = {}
    tag = 0

    def add(text: str, duration_s: float, lang: str, voice: str, scene: str, aux: bool) -> int:
        nonlocal tag
        tag += 1
        duration_ms = duration_s * 1000.0
        utterances[str(tag)] = {
            "text": text,
            "duration_ms": duration_ms,
            "lang": lang,
            "voice": voice,
            "scene": scene,
            "char_end_ms": uniform_alignment(text, duration_ms),
            "aux": aux,
        }
        return tag

    # 25 CN + 25 EN primary utterances (tags 1..50).
    for i, dur in enumerate(DURATIONS):
        text = build_text(CN_SENTENCES, i, dur, "，", "。", 3.0)
        add(text, dur, "cn", VOICES[i % len(VOICES)], SCENES[i % len(SCENES)], aux=False)
    for i, dur in enumerate(DURATIONS):
        text = build_text(EN_SENTENCES, i, dur, ", ", ". ", 8.0).strip()
        add(text, dur, "en", VOICES[(i + 1) % len(VOICES)], SCENES[(i + 2) % len(SCENES)], aux=False)

    # Aux utterances for scripted flows (tags 51+).
    aux = {}
    aux["weather_cn"] = add("今天天气怎么样", 5, "cn", "voice_a", "quiet_room", aux=True)
    aux["weather_en"] = add("how is the weather today", 5, "en", "voice_b", "cafe", aux=True)
    aux["music_cn"] = add("给我放点音乐吧", 4, "cn", "voice_a", "quiet_room", aux=True)
    aux["story_cn"] = add("给我讲个故事好不好", 4, "cn", "voice_a", "cafe", aux=True)
    aux["story_en"] = add("tell me a story please", 4, "en", "voice_b", "street", aux=True)
    aux["search_cn"] = add("[SEARCH]帮我查一下今天的新闻", 4, "cn", "voice_a", "street", aux=True)
    aux["think_cn"] = add("[THINK]帮我规划一次旅行", 4, "cn", "voice_a", "rain", aux=True)
    aux["timbre_cn"] = add("请用温柔的声音和我说话", 4, "cn", "voice_b", "quiet_room", aux=True)
    aux["emotion_cn"] = add("换成开心的语气吧", 3, "cn", "voice_b", "quiet_room", aux=True)
    aux["interrupt_cn"] = add("别说了换个话题", 1.2, "cn", "voice_a", "quiet_room", aux=True)
    aux["interrupt_en"] = add("please switch topic now", 1.5, "en", "voice_b", "cafe", aux=True)
    aux["noise_short"] = add("", 0.3, "cn", "voice_a", "street", aux=True)
    aux["noise_long"] = add("", 0.8, "cn", "voice_a", "street", aux=True)
    aux["filler_en"] = add("嗯", 0.8, "cn", "voice_a", "quiet_room", aux=True)
    aux["single_char"] = add("a", 0.8, "en", "voice_b", "quiet_room", aux=True)
    aux["filler_double"] = add("呵呵", 0.9, "cn", "voice_c", "quiet_room", aux=True)
    aux["pair_x"] = add("声纹测试句子一", 3, "cn", "voice_pair_x", "quiet_room", aux=True)
    aux["pair_y"] = add("声纹测试句子二", 3, "cn", "voice_pair_y", "quiet_room", aux=True)
    aux["quick_cn"] = add("你好小助手", 2, "cn", "voice_a", "quiet_room", aux=True)
    aux["quick_en"] = add("hello there assistant", 2, "en", "voice_b", "cafe", aux=True)
    for i, name in enumerate(
        ["alpha", "bravo", "charlie", "delta", "foxtrot", "golf", "hotel", "india"]
    ):
        aux[f"iso_{name}"] = add(
            f"isolation probe {name}", 2, "en", VOICES[i % len(VOICES)], SCENES[i % len(SCENES)], aux=True
        )

    # --- llm script: continuation rules first, fallback last ---
    rules = [
        {"match": "今日新闻摘要", "items": [{"say": "根据搜索，今天多云，气温二十度。稍后还有小雨。"}]},
        {"match": "timbre switched to", "items": [{"say": "好的，我已经换了温柔的声音。现在听起来怎么样。"}]},
        {"match": "emotion switched to", "items": [{"say": "现在我很开心地继续和你聊天。真好呀。"}]},
        {
            "match": "[SEARCH]",
            "items": [
                {"say": "稍等。"},
                {"tool_call": {"name": "web_search", "args": {"query": "今天的新闻"}}},
            ],
        },
        {
            "match": "[THINK]",
            "items": [{"think": True}, {"say": "让我想想。我建议先去海边，再去山里住两天。"}],
        },
        {
            "match": "温柔的声音",
            "items": [
                {"say": "第一句先这样说完。第二句也照旧说完。"},
                {"tool_call": {"name": "timbre_switch", "args": {"voice": "warm_female"}}},
            ],
        },
        {
            "match": "开心的语气",
            "items": [
                {"say": "来点开心的。"},
                {"tool_call": {"name": "emotion_switch", "args": {"emotion": "happy"}}},
            ],
        },
        {"match": "天气怎么样", "items": [{"say": "今天多云，气温二十度。适合出门散步。"}]},
        {"match": "weather today", "items": [{"say": "It is cloudy today. Around twenty degrees outside."}]},
        {"match": "放点音乐", "items": [{"say": "好的，为你播放轻音乐。已经开始了。"}]},
        {
            "match": "讲个故事",
            "items": [
                {
                    "say": "从前有一座山。山里有一座庙。庙里有位老和尚。他正在讲故事。故事讲了很久。大家都听入迷了。"
                }
            ],
        },
        {
            "match": "tell me a story",
            "items": [
                {
                    "say": "Once there was a hill. On the hill stood a house. In the house lived a cat. The cat told stories. The stories went on. Everyone fell asleep."
                }
            ],
        },
        {"match": "换个话题", "items": [{"say": "好的，我们聊点别的。你最近有出去玩吗。"}]},
        {"match": "switch topic", "items": [{"say": "Sure thing. Let us talk about travel instead."}]},
        {"match": "声纹测试", "items": [{"say": "声纹已经记录。"}]},
        {"match": "你好小助手", "items": [{"say": "你好呀。很高兴见到你。"}]},
        {"match": "hello there", "items": [{"say": "Hello friend. Nice to hear you."}]},
    ]
    for name in ["alpha", "bravo", "charlie", "delta", "foxtrot", "golf", "hotel", "india"]:
        rules.append(
            {
                "match": f"isolation probe {name}",
                "items": [{"say": f"reply-{name} acknowledged. marker-{name} complete."}],
            }
        )
    rules.append({"match": "", "items": [{"say": "我不太确定。可以换个说法吗。"}]})

    llm_script = {"rules": rules, "thinking_summary": "route: coast first, then the hills"}

    scene_tags = {
        "quiet_room": {"caption": "a quiet room with faint ventilation hum", "rewritten": "quiet room"},
        "cafe": {"caption": "busy cafe with background chatter and cups clinking", "rewritten": "busy cafe"},
        "street": {"caption": "open street with passing cars and footsteps", "rewritten": "city street"},
        "rain": {"caption": "steady rain on windows with distant thunder", "rewritten": "rainy ambience"},
    }

    # --- speaker embeddings: deterministic unit vectors, one engineered
    # pair at cosine 0.30 exactly ---
    rng = np.random.RandomState(20240601)
    dim = 64

    def unit(v: np.ndarray) -> np.ndarray:
        return v / np.linalg.norm(v)

    vecs = {name: unit(rng.standard_normal(dim)) for name in VOICES}
    x = unit(rng.standard_normal(dim))
    raw = rng.standard_normal(dim)
    orth = unit(raw - np.dot(raw, x) * x)
    y = 0.3 * x + math.sqrt(1.0 - 0.09) * orth
    vecs["voice_pair_x"] = x
    vecs["voice_pair_y"] = unit(y)

    voices = {
        "timbres": {
            "warm_female": "warm_female",
            "calm_male": "calm_male",
            "lively_native": "lively_native",
        },
        "speakers": {name: [round(float(v), 12) for v in vec] for name, vec in vecs.items()},
    }

    tools = {
        "web_search": {
            "expected_latency_ms": 800,
            "script": {
                "queries": [
                    {
                        "match": "新闻",
                        "results": [
                            {"title": "daily", "snippet": "今日新闻摘要：全市多云。", "coverage": "high"},
                            {
                                "title": "detail",
                                "snippet": "short",
                                "page": "详细页面：气温二十度，傍晚有小雨。",
                                "coverage": "middle",
                            },
                            {"title": "spam", "snippet": "无关内容", "coverage": "low"},
                        ],
                    }
                ],
                "default": "没有找到相关结果。",
            },
        },
        "local_search": {
            "expected_latency_ms": 600,
            "script": {
                "queries": [
                    {
                        "match": "旅行",
                        "results": [
                            {"title": "notes", "snippet": "本地笔记：上次旅行去了海边。", "coverage": "high"}
                        ],
                    }
                ],
                "default": "本地知识库为空。",
            },
        },
        "timbre_switch": {"expected_latency_ms": 5, "script": {}},
        "emotion_switch": {"expected_latency_ms": 5, "script": {}},
    }

    default_dir = OUT / "default"
    default_dir.mkdir(parents=True, exist_ok=True)
    (default_dir / "utterances.json").write_text(
        json.dumps(utterances, ensure_ascii=False, indent=1), encoding="utf-8"
    )
    (default_dir / "llm_script.json").write_text(
        json.dumps(llm_script, ensure_ascii=False, indent=1), encoding="utf-8"
    )
    (default_dir / "scene_tags.json").write_text(
        json.dumps(scene_tags, ensure_ascii=False, indent=1), encoding="utf-8"
    )
    (default_dir / "voices.json").write_text(
        json.dumps(voices, ensure_ascii=False, indent=1), encoding="utf-8"
    )
    (default_dir / "tools.json").write_text(
        json.dumps(tools, ensure_ascii=False, indent=1), encoding="utf-8"
    )

    # --- session scripts for replay/golden regression ---
    sessions_dir = OUT / "sessions"
    sessions_dir.mkdir(parents=True, exist_ok=True)
    sessions = {
        "basic_cn": [
            {"op": "speak", "tag": aux["weather_cn"]},
            {"op": "await_turn_done"},
            {"op": "bye"},
        ],
        "basic_en": [
            {"op": "speak", "tag": aux["weather_en"]},
            {"op": "await_turn_done"},
            {"op": "bye"},
        ],
        "multi_turn_cn": [
            {"op": "speak", "tag": aux["quick_cn"]},
            {"op": "await_turn_done"},
            {"op": "speak", "tag": aux["music_cn"]},
            {"op": "await_turn_done"},
            {"op": "bye"},
        ],
        "barge_in_confirmed": [
            {"op": "speak", "tag": aux["story_cn"]},
            {"op": "await_chunks", "count": 3},
            {"op": "speak", "tag": aux["interrupt_cn"]},
            {"op": "await_turn_done"},
            {"op": "bye"},
        ],
        "false_interrupt_short": [
            {"op": "speak", "tag": aux["story_cn"]},
            {"op": "await_chunks", "count": 2},
            {"op": "speak", "tag": aux["noise_short"]},
            {"op": "await_frame", "type": "resume"},
            {"op": "await_turn_done"},
            {"op": "bye"},
        ],
        "false_interrupt_filler": [
            {"op": "speak", "tag": aux["story_cn"]},
            {"op": "await_chunks", "count": 2},
            {"op": "speak", "tag": aux["filler_en"]},
            {"op": "await_frame", "type": "resume"},
            {"op": "await_turn_done"},
            {"op": "bye"},
        ],
        "tool_search_phatic": [
            {"op": "speak", "tag": aux["search_cn"]},
            {"op": "await_turn_done"},
            {"op": "bye"},
        ],
        "timbre_emotion": [
            {"op": "speak", "tag": aux["timbre_cn"]},
            {"op": "await_turn_done"},
            {"op": "speak", "tag": aux["emotion_cn"]},
            {"op": "await_turn_done"},
            {"op": "bye"},
        ],
        "thinking": [
            {"op": "speak", "tag": aux["think_cn"]},
            {"op": "await_turn_done"},
            {"op": "bye"},
        ],
        "empty": [],
    }
    for name, steps in sessions.items():
        (sessions_dir / f"{name}.json").write_text(
            json.dumps({"name": name, "steps": steps}, ensure_ascii=False, indent=1),
            encoding="utf-8",
        )

    counts = {"primary": sum(1 for u in utterances.values() if not u["aux"]),
              "aux": sum(1 for u in utterances.values() if u["aux"])}
    print(f"wrote corpus: {counts} -> {default_dir}")
    print(f"wrote {len(sessions)} session scripts -> {sessions_dir}")


if __name__ == "__main__":
    main()
