"""Speaker segments and annotations, quantized to whole milliseconds."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable


def to_ms(seconds: float) -> int:
    return int(round(seconds * 1000.0))


def from_ms(ms: int) -> float:
    return ms / 1000.0


@dataclass(frozen=True, order=True)
class SpeakerSegment:
    start_s: float
    end_s: float
    speaker: str

    def __post_init__(self) -> None:
        if self.start_s < 0:
            raise ValueError(f"segment starts before 0: {self.start_s}")
        if self.end_s <= self.start_s:
            raise ValueError(f"segment [{self.start_s}, {self.end_s}] has no duration")

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s

    @property
    def start_ms(self) -> int:
        return to_ms(self.start_s)

    @property
    def end_ms(self) -> int:
        return to_ms(self.end_s)


def _merge_ms(spans: list[tuple[int, int]]) -> list[tuple[int, int]]:
    merged: list[list[int]] = []
    for s, e in sorted(spans):
        if merged and s <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], e)
        else:
            merged.append([s, e])
    return [(s, e) for s, e in merged]


@dataclass(frozen=True)
class Annotation:
    """Speaker timeline for one recording.

    Build through :meth:`canonical` to get the invariant form: times snapped
    to milliseconds, same-speaker overlaps and touching segments merged,
    segments sorted by (start, end, speaker).
    """

    uri: str
    segments: tuple[SpeakerSegment, ...] = ()

    @classmethod
    def canonical(cls, uri: str, segments: Iterable[SpeakerSegment | tuple[float, float, str]]) -> "Annotation":
        return cls.from_ms(uri, [(to_ms(s.start_s), to_ms(s.end_s), s.speaker) for s in map(_as_segment, segments)])

    @classmethod
    def from_ms(cls, uri: str, spans: Iterable[tuple[int, int, str]]) -> "Annotation":
        by_speaker: dict[str, list[tuple[int, int]]] = {}
        for s, e, spk in spans:
            if e > s:
                by_speaker.setdefault(spk, []).append((s, e))
        out = [
            (s, e, spk) for spk, items in by_speaker.items() for s, e in _merge_ms(items)
        ]
        out.sort()
        return cls(uri, tuple(SpeakerSegment(from_ms(s), from_ms(e), spk) for s, e, spk in out))

    def canonicalize(self) -> "Annotation":
        return Annotation.canonical(self.uri, self.segments)

    def spans_ms(self) -> list[tuple[int, int, str]]:
        return [(seg.start_ms, seg.end_ms, seg.speaker) for seg in self.segments]

    @property
    def speakers(self) -> list[str]:
        return sorted({seg.speaker for seg in self.segments})

    def speech_ms_by_speaker(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for s, e, spk in self.spans_ms():
            out[spk] = out.get(spk, 0) + e - s
        return out


def _as_segment(seg: SpeakerSegment | tuple[float, float, str]) -> SpeakerSegment:
    if isinstance(seg, SpeakerSegment):
        return seg
    start, end, speaker = seg
    return SpeakerSegment(float(start), float(end), str(speaker))
