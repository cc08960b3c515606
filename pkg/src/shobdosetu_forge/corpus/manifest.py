"""Manifest entries, train/val split and JSONL manifest I/O."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable

from ..errors import BadConfig, IoFailure, MalformedDocument
from ..hashing import unit_fraction


class Split(str, Enum):
    TRAIN = "train"
    VAL = "val"


@dataclass(frozen=True)
class ManifestEntry:
    chunk_id: str
    audio_path: str
    offset_s: float
    duration_s: float
    transcript: str | None
    split: Split = Split.TRAIN
    augmented: bool = False
    recipe: dict | None = None
    sample_rate_hz: int = 16000

    def __post_init__(self) -> None:
        if self.duration_s <= 0:
            raise BadConfig(f"{self.chunk_id}: duration must be positive")
        object.__setattr__(self, "split", Split(self.split))

    def to_json(self) -> str:
        d = asdict(self)
        d["split"] = self.split.value
        return json.dumps(d, ensure_ascii=False)

    @classmethod
    def from_dict(cls, d: dict) -> "ManifestEntry":
        try:
            return cls(**d)
        except (TypeError, ValueError) as exc:
            raise MalformedDocument(f"bad manifest entry: {exc}") from exc


def split_train_val(entries: Iterable[ManifestEntry], ratio: float = 0.9, master_seed: int = 0) -> list[ManifestEntry]:
    """Assign Train iff ``hash(master_seed, chunk_id) / 2**64 < ratio``.

    Each entry's split depends only on its own id, so the result is the same
    whatever the input order or batching.
    """
    if not 0.0 < ratio < 1.0:
        raise BadConfig(f"split ratio must lie in (0, 1), got {ratio}")
    return [
        replace(e, split=Split.TRAIN if unit_fraction(master_seed, e.chunk_id) < ratio else Split.VAL)
        for e in entries
    ]


@dataclass
class CorpusSummary:
    sources: int = 0
    chunks: int = 0
    kept: int = 0
    replaced: int = 0
    dropped: int = 0
    replacement_failed: int = 0
    unvalidated: int = 0
    nonspeech: int = 0
    emptied: int = 0
    missing_audio: int = 0
    augmented: int = 0
    train: int = 0
    val: int = 0
    errors: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def write_manifest(entries: Iterable[ManifestEntry], path: str | Path) -> list[ManifestEntry]:
    """Write entries as JSONL sorted by chunk id and return them in that order."""
    ordered = sorted(entries, key=lambda e: e.chunk_id)
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for e in ordered:
                fh.write(e.to_json() + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write manifest {path}: {exc}") from exc
    return ordered


def read_manifest(path: str | Path) -> list[ManifestEntry]:
    entries = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedDocument(f"{path}:{lineno}: {exc}") from exc
            if not isinstance(obj, dict):
                raise MalformedDocument(f"{path}:{lineno}: expected an object")
            entries.append(ManifestEntry.from_dict(obj))
    return entries


def build_manifest(
    entries: Iterable[ManifestEntry],
    output_path: str | Path,
    summary: CorpusSummary | None = None,
) -> CorpusSummary:
    """Write the manifest and fill in the entry-derived summary counts."""
    summary = summary if summary is not None else CorpusSummary()
    ordered = write_manifest(entries, output_path)
    summary.augmented = sum(e.augmented for e in ordered)
    summary.kept = len(ordered) - summary.augmented
    summary.train = sum(e.split is Split.TRAIN for e in ordered)
    summary.val = len(ordered) - summary.train
    return summary
