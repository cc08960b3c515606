"""Chunk-boundary validation by endpoint prediction plus fuzzy matching.

For each chunk, an external predictor hears the last few seconds of audio
and names the final spoken words. The last predicted word is then matched
against the current chunk's last five words and the next chunk's first
three; whichever candidate wins tells us whether transcript words need to
move across the boundary.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Sequence

from ..audiocore import AudioClip
from ..errors import EmptyTranscript, InconsistentDecision, OutOfRange
from .chunks import SubtitleChunk
from .gestalt import similarity_ratio

TAIL_S = 5.0
CURRENT_WORDS = 5
NEXT_WORDS = 3
DEFAULT_THRESHOLD = 0.6
NONSPEECH_COVERAGE = 0.8


def audio_tail(clip: AudioClip, chunk: SubtitleChunk, tail_s: float = TAIL_S) -> AudioClip:
    """The final ``min(tail_s, duration)`` seconds of the chunk's audio."""
    sr = clip.sample_rate_hz
    end = int(round(chunk.end_s * sr))
    start = int(round(chunk.start_s * sr))
    if start < 0 or end > len(clip) or end <= start:
        raise OutOfRange(f"{chunk.chunk_id}: [{chunk.start_s}, {chunk.end_s}] s outside {clip.duration_s:.3f} s of audio")
    n = min(int(round(tail_s * sr)), end - start)
    return clip.with_samples(clip.samples[end - n : end])


class Origin(str, Enum):
    CURRENT = "current"
    NEXT = "next"


@dataclass(frozen=True)
class Candidate:
    word: str
    origin: Origin
    # -5..-1 for the current chunk (counted from its end), 1..3 for the next
    position: int


def candidate_list(current: SubtitleChunk, next_chunk: SubtitleChunk | None = None) -> list[Candidate]:
    words = current.words
    if not words:
        raise EmptyTranscript(f"{current.chunk_id} has no words")
    tail = words[-CURRENT_WORDS:]
    out = [Candidate(w, Origin.CURRENT, i - len(tail)) for i, w in enumerate(tail)]
    if next_chunk is not None:
        out += [Candidate(w, Origin.NEXT, i + 1) for i, w in enumerate(next_chunk.words[:NEXT_WORDS])]
    return out


class BoundaryAction(str, Enum):
    KEEP = "keep_boundary"
    PULL_FROM_NEXT = "pull_from_next"
    PUSH_TO_NEXT = "push_to_next"
    UNVALIDATED = "unvalidated"


@dataclass(frozen=True)
class BoundaryDecision:
    chunk_id: str
    predicted_word: str
    selected_candidate: str
    candidate_index: int | None
    ratio: float
    action: BoundaryAction
    k: int = 0

    def to_dict(self) -> dict:
        return {
            "chunk_id": self.chunk_id,
            "predicted_word": self.predicted_word,
            "selected_candidate": self.selected_candidate,
            "candidate_index": self.candidate_index,
            "ratio": self.ratio,
            "action": self.action.value,
            "k": self.k,
        }


def unvalidated(chunk_id: str, predicted: str = "", ratio: float = 0.0) -> BoundaryDecision:
    return BoundaryDecision(chunk_id, predicted, "", None, ratio, BoundaryAction.UNVALIDATED)


def _norm(word: str) -> str:
    return unicodedata.normalize("NFC", word)


def select_boundary(
    predicted: Sequence[str],
    candidates: Sequence[Candidate],
    threshold: float = DEFAULT_THRESHOLD,
    chunk_id: str = "",
) -> BoundaryDecision:
    """Match the last predicted word against ``candidates`` and pick an action.

    The best gestalt ratio wins; ties go to the earliest candidate, which
    puts current-chunk words ahead of next-chunk words.
    """
    if not candidates:
        raise EmptyTranscript("no boundary candidates")
    if not predicted:
        return unvalidated(chunk_id)
    target = _norm(predicted[-1])
    best_idx, best_ratio = 0, -1.0
    for idx, cand in enumerate(candidates):
        r = similarity_ratio(target, _norm(cand.word))
        if r > best_ratio:
            best_idx, best_ratio = idx, r
    if best_ratio < threshold:
        return unvalidated(chunk_id, predicted[-1], best_ratio)

    cand = candidates[best_idx]
    if cand.origin is Origin.NEXT:
        action, k = BoundaryAction.PULL_FROM_NEXT, cand.position
    elif cand.position == -1:
        action, k = BoundaryAction.KEEP, 0
    else:
        action, k = BoundaryAction.PUSH_TO_NEXT, -cand.position - 1
    return BoundaryDecision(chunk_id, predicted[-1], cand.word, best_idx, best_ratio, action, k)


def realign(chunks: Sequence[SubtitleChunk], decisions: Iterable[BoundaryDecision]) -> list[SubtitleChunk]:
    """Move transcript words across boundaries as the decisions dictate.

    Only text moves; timestamps are untouched. Decisions are applied left to
    right, each to its chunk and the one after it. Chunks whose decision is
    Unvalidated come back with ``unvalidated=True``.
    """
    by_id = {d.chunk_id: d for d in decisions}
    texts = [list(c.words) if c.text is not None else None for c in chunks]
    flags = [c.unvalidated for c in chunks]
    for i, chunk in enumerate(chunks):
        d = by_id.get(chunk.chunk_id)
        if d is None or d.action is BoundaryAction.KEEP:
            continue
        if d.action is BoundaryAction.UNVALIDATED:
            flags[i] = True
            continue
        if i + 1 >= len(chunks) or texts[i + 1] is None or texts[i] is None:
            raise InconsistentDecision(f"{chunk.chunk_id}: {d.action.value} needs a following speech chunk")
        cur, nxt = texts[i], texts[i + 1]
        if d.action is BoundaryAction.PULL_FROM_NEXT:
            if d.k > len(nxt):
                raise InconsistentDecision(f"{chunk.chunk_id}: cannot pull {d.k} of {len(nxt)} words")
            cur.extend(nxt[: d.k])
            del nxt[: d.k]
        else:
            if d.k > len(cur):
                raise InconsistentDecision(f"{chunk.chunk_id}: cannot push {d.k} of {len(cur)} words")
            moved = cur[len(cur) - d.k :]
            del cur[len(cur) - d.k :]
            nxt[:0] = moved
    out = []
    for chunk, words, flag in zip(chunks, texts, flags):
        text = chunk.text if words is None or words == chunk.words else " ".join(words)
        out.append(replace(chunk, text=text, unvalidated=flag))
    return out


def null_nonspeech(chunk: SubtitleChunk, nonspeech_zones: Sequence[tuple[float, float]]) -> SubtitleChunk:
    """Clear the transcript when at least 80% of the chunk lies in non-speech zones."""
    covered = 0.0
    for start, end in nonspeech_zones:
        covered += max(0.0, min(end, chunk.end_s) - max(start, chunk.start_s))
    # tolerance absorbs float error in zone arithmetic (13.7 - 11.5 < 2.2)
    if covered >= NONSPEECH_COVERAGE * chunk.duration_s - 1e-9:
        return chunk.with_text(None)
    return chunk
