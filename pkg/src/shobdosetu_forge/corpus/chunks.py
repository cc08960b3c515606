"""Timestamped subtitle chunks and their JSON input format."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

from ..errors import MalformedDocument, NegativeTime


@dataclass(frozen=True)
class SubtitleChunk:
    """One subtitle unit. ``text=None`` marks non-speech (music/silence)."""

    chunk_id: str
    source_id: str
    start_s: float
    duration_s: float
    text: str | None
    unvalidated: bool = False

    @property
    def end_s(self) -> float:
        return self.start_s + self.duration_s

    @property
    def words(self) -> list[str]:
        return self.text.split() if self.text else []

    def with_text(self, text: str | None) -> "SubtitleChunk":
        return replace(self, text=text)


def chunk_id_for(source_id: str, index: int) -> str:
    return f"{source_id}-{index:05d}"


def _number(obj: dict, key: str, pos: int) -> float:
    if key not in obj:
        raise MalformedDocument(f"chunk {pos}: missing field {key!r}")
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise MalformedDocument(f"chunk {pos}: field {key!r} must be a finite number")
    return float(value)


def parse_chunks(document: Any, source_id: str = "src") -> list[SubtitleChunk]:
    """Validate a chunk document and return sorted, non-overlapping chunks.

    ``document`` is the decoded JSON array (or its text). Overlapping
    neighbours are split at the midpoint of the overlap.
    """
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise MalformedDocument(f"invalid JSON: {exc}") from exc
    if not isinstance(document, list):
        raise MalformedDocument("chunk document must be a JSON array")

    raw: list[tuple[float, float, str | None]] = []
    for pos, obj in enumerate(document):
        if not isinstance(obj, dict):
            raise MalformedDocument(f"chunk {pos}: expected an object")
        start = _number(obj, "start", pos)
        duration = _number(obj, "duration", pos)
        if start < 0 or duration < 0:
            raise NegativeTime(f"chunk {pos}: negative start or duration")
        if duration == 0:
            raise MalformedDocument(f"chunk {pos}: zero duration")
        if "text" not in obj:
            raise MalformedDocument(f"chunk {pos}: missing field 'text'")
        text = obj["text"]
        if text is not None and not isinstance(text, str):
            raise MalformedDocument(f"chunk {pos}: 'text' must be a string or null")
        raw.append((start, start + duration, text))

    # stable sort keeps document order for identical starts
    raw.sort(key=lambda r: r[0])
    spans = [[s, e] for s, e, _ in raw]
    for i in range(1, len(spans)):
        prev, cur = spans[i - 1], spans[i]
        if cur[0] < prev[1]:
            mid = (cur[0] + min(prev[1], cur[1])) / 2.0
            prev[1] = mid
            cur[0] = mid
    return [
        SubtitleChunk(chunk_id_for(source_id, i), source_id, s, e - s, text)
        for i, ((s, e), (_, _, text)) in enumerate(zip(spans, raw))
    ]


def load_chunks(path: str | Path) -> list[SubtitleChunk]:
    """Read a chunk JSON file; the file stem becomes the source id."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedDocument(f"{path}: not UTF-8") from exc
    try:
        return parse_chunks(text, source_id=path.stem)
    except MalformedDocument as exc:
        raise type(exc)(f"{path}: {exc}") from exc
