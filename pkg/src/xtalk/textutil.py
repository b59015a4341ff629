"""Text helpers shared by the ASR stage, segmenter, and interrupt rules."""

from __future__ import annotations

import re
import unicodedata

# Sentence-final punctuation recognized by both the stable-prefix flush
# logic and the response segmenter.
SENTENCE_BOUNDARY = frozenset("。！？；!?.;")

_CJK_RANGES = (
    (0x3400, 0x4DBF),
    (0x4E00, 0x9FFF),
    (0xF900, 0xFAFF),
    (0x20000, 0x2A6DF),
)

_TOKEN_RE = re.compile(
    r"[㐀-䶿一-鿿豈-﫿]"  # one CJK char per token
    r"|\s+"  # runs of whitespace
    r"|[^\s㐀-䶿一-鿿豈-﫿]+"  # everything else (words, punctuation)
)


def is_cjk(ch: str) -> bool:
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in _CJK_RANGES)


def contains_cjk(text: str) -> bool:
    return any(is_cjk(ch) for ch in text)


def tokenize(text: str) -> list[str]:
    """Split text into stream tokens: CJK per character, latin per word.

    Concatenating the tokens reproduces the input exactly, which the
    token-level streaming pipeline relies on.
    """
    return _TOKEN_RE.findall(text)


def strip_punct_space(text: str) -> str:
    """Drop whitespace and punctuation, keeping letters/digits of any script."""
    out = []
    for ch in text:
        if ch.isspace():
            continue
        cat = unicodedata.category(ch)
        if cat.startswith("P") or cat.startswith("S"):
            continue
        out.append(ch)
    return "".join(out)


def longest_common_prefix(texts: list[str]) -> str:
    if not texts:
        return ""
    shortest = min(texts, key=len)
    for i, ch in enumerate(shortest):
        if any(t[i] != ch for t in texts):
            return shortest[:i]
    return shortest
