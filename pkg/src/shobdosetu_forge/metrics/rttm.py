"""RTTM reading and writing (SPEAKER records only)."""

from __future__ import annotations

from pathlib import Path
from typing import Iterable

from ..errors import MalformedLine
from .annotation import Annotation, to_ms


def _fmt_ms(ms: int) -> str:
    return f"{ms // 1000}.{ms % 1000:03d}"


def parse_rttm(document: str) -> list[Annotation]:
    """Parse RTTM text into canonical annotations, sorted by uri.

    Lines of other record types and ``;;`` comments are skipped. The
    trailing ``<NA>`` slot is optional, so both 9- and 10-field SPEAKER
    lines are accepted.
    """
    spans: dict[str, list[tuple[int, int, str]]] = {}
    for lineno, line in enumerate(document.splitlines(), 1):
        fields = line.split()
        if not fields or fields[0].startswith(";;") or fields[0] != "SPEAKER":
            continue
        if len(fields) not in (9, 10):
            raise MalformedLine(f"line {lineno}: expected 10 fields, got {len(fields)}")
        uri, onset, dur, speaker = fields[1], fields[3], fields[4], fields[7]
        try:
            onset_ms, dur_ms = to_ms(float(onset)), to_ms(float(dur))
        except ValueError as exc:
            raise MalformedLine(f"line {lineno}: bad onset/duration: {exc}") from exc
        if dur_ms < 0 or float(dur) < 0:
            raise MalformedLine(f"line {lineno}: negative duration {dur}")
        if onset_ms < 0:
            raise MalformedLine(f"line {lineno}: negative onset {onset}")
        spans.setdefault(uri, []).append((onset_ms, onset_ms + dur_ms, speaker))
    return [Annotation.from_ms(uri, spans[uri]) for uri in sorted(spans)]


def write_rttm(annotations: Iterable[Annotation]) -> str:
    lines = []
    for ann in sorted(annotations, key=lambda a: a.uri):
        for s, e, spk in ann.canonicalize().spans_ms():
            lines.append(f"SPEAKER {ann.uri} 1 {_fmt_ms(s)} {_fmt_ms(e - s)} <NA> <NA> {spk} <NA> <NA>")
    return "".join(line + "\n" for line in lines)


def load_rttm(path: str | Path) -> list[Annotation]:
    """Load one RTTM file, or every ``*.rttm`` file in a directory."""
    path = Path(path)
    if path.is_dir():
        text = "".join(p.read_text(encoding="utf-8") + "\n" for p in sorted(path.glob("*.rttm")))
    else:
        text = path.read_text(encoding="utf-8")
    try:
        return parse_rttm(text)
    except MalformedLine as exc:
        raise MalformedLine(f"{path}: {exc}") from exc
