"""Unicode-script classification of transcript tokens and the language filter."""

from __future__ import annotations

import unicodedata
from collections import Counter
from dataclasses import dataclass
from enum import Enum

from .chunks import SubtitleChunk


class ScriptClass(str, Enum):
    BENGALI = "bengali"
    LATIN = "latin"
    DEVANAGARI = "devanagari"
    ARABIC = "arabic"
    MALAYALAM = "malayalam"
    TELUGU = "telugu"
    NEUTRAL = "neutral"
    OTHER = "other"


_BLOCKS: tuple[tuple[int, int, ScriptClass], ...] = (
    (0x0980, 0x09FF, ScriptClass.BENGALI),
    (0x0900, 0x097F, ScriptClass.DEVANAGARI),
    (0x0600, 0x06FF, ScriptClass.ARABIC),
    (0x0750, 0x077F, ScriptClass.ARABIC),
    (0x0D00, 0x0D7F, ScriptClass.MALAYALAM),
    (0x0C00, 0x0C7F, ScriptClass.TELUGU),
)

# Majority ties resolve to the earliest entry: the class with the harshest
# filter outcome wins, Bengali always loses.
_TIE_PRIORITY = (
    ScriptClass.OTHER,
    ScriptClass.ARABIC,
    ScriptClass.MALAYALAM,
    ScriptClass.TELUGU,
    ScriptClass.DEVANAGARI,
    ScriptClass.LATIN,
    ScriptClass.BENGALI,
)

DROP_CLASSES = frozenset({ScriptClass.ARABIC, ScriptClass.MALAYALAM, ScriptClass.TELUGU, ScriptClass.OTHER})


def classify_codepoint(ch: str) -> ScriptClass:
    # Characters in the N/P/S/Z/C general categories (ZWJ/ZWNJ included)
    # are script-neutral. This also covers the danda U+0964/U+0965, which
    # sits in the Devanagari block but is ordinary Bengali punctuation.
    if unicodedata.category(ch)[0] in "NPSZC":
        return ScriptClass.NEUTRAL
    cp = ord(ch)
    for lo, hi, cls in _BLOCKS:
        if lo <= cp <= hi:
            return cls
    if ch.isascii() and ch.isalpha():
        return ScriptClass.LATIN
    return ScriptClass.OTHER


def classify_token_script(token: str) -> ScriptClass:
    """Majority-codepoint script of ``token`` (Neutral if it has no letters)."""
    counts = Counter(c for c in map(classify_codepoint, token) if c is not ScriptClass.NEUTRAL)
    if not counts:
        return ScriptClass.NEUTRAL
    best = max(counts.values())
    return next(cls for cls in _TIE_PRIORITY if counts.get(cls) == best)


class LanguageVerdict(str, Enum):
    KEEP = "keep"
    NEEDS_REPLACEMENT = "needs_replacement"
    DROP = "drop"


@dataclass(frozen=True)
class FilterResult:
    verdict: LanguageVerdict
    positions: tuple[int, ...] = ()


def filter_language(chunk: SubtitleChunk | str) -> FilterResult:
    """Decide what to do with a transcript based on the scripts of its tokens.

    Any Arabic/Malayalam/Telugu/other-script token drops the chunk; otherwise
    Devanagari tokens are reported by position for replacement.
    """
    text = chunk.text if isinstance(chunk, SubtitleChunk) else chunk
    if text is None:
        raise ValueError("filter_language needs a chunk with text")
    classes = [classify_token_script(tok) for tok in text.split()]
    if any(c in DROP_CLASSES for c in classes):
        return FilterResult(LanguageVerdict.DROP)
    hindi = tuple(i for i, c in enumerate(classes) if c is ScriptClass.DEVANAGARI)
    if hindi:
        return FilterResult(LanguageVerdict.NEEDS_REPLACEMENT, hindi)
    return FilterResult(LanguageVerdict.KEEP)
