"""End-to-end corpus construction over many source recordings."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from ..audiocore import AudioClip
from ..errors import ForgeError
from .boundary import (
    DEFAULT_THRESHOLD,
    TAIL_S,
    BoundaryAction,
    BoundaryDecision,
    audio_tail,
    candidate_list,
    null_nonspeech,
    realign,
    select_boundary,
    unvalidated,
)
from .chunks import SubtitleChunk
from .manifest import CorpusSummary, ManifestEntry, split_train_val
from .providers import EndpointProvider, ReplacementProvider
from .script import LanguageVerdict, filter_language

log = logging.getLogger(__name__)


@dataclass
class CorpusSource:
    source_id: str
    chunks: list[SubtitleChunk]
    audio: AudioClip
    audio_path: str
    nonspeech_zones: list[tuple[float, float]] = field(default_factory=list)


@dataclass(frozen=True)
class CorpusOptions:
    threshold: float = DEFAULT_THRESHOLD
    tail_s: float = TAIL_S
    split_ratio: float = 0.9
    master_seed: int = 0
    max_inflight: int = 1


def _language_pass(
    chunks: list[SubtitleChunk], replacer: ReplacementProvider | None, summary: CorpusSummary
) -> list[SubtitleChunk | None]:
    """Apply the language filter; dropped chunks become ``None`` placeholders."""
    out: list[SubtitleChunk | None] = []
    for chunk in chunks:
        if chunk.text is None or not chunk.words:
            out.append(chunk)
            continue
        result = filter_language(chunk)
        if result.verdict is LanguageVerdict.KEEP:
            out.append(chunk)
        elif result.verdict is LanguageVerdict.DROP:
            summary.dropped += 1
            out.append(None)
        else:
            tokens = chunk.words
            words = replacer.replace(chunk.chunk_id, tokens, result.positions) if replacer else None
            if words is not None:
                for pos, word in zip(result.positions, words):
                    tokens[pos] = word
                fixed = chunk.with_text(" ".join(tokens))
                if filter_language(fixed).verdict is LanguageVerdict.KEEP:
                    summary.replaced += 1
                    out.append(fixed)
                    continue
            summary.replacement_failed += 1
            out.append(None)
    return out


def _next_speech(slots: list[SubtitleChunk | None], i: int) -> SubtitleChunk | None:
    if i + 1 < len(slots):
        nxt = slots[i + 1]
        if nxt is not None and nxt.words:
            return nxt
    return None


def validate_boundaries(
    slots: list[SubtitleChunk | None],
    predictions: dict[str, list[str] | None],
    threshold: float,
) -> list[BoundaryDecision]:
    decisions = []
    for i, chunk in enumerate(slots):
        if chunk is None or not chunk.words:
            continue
        nxt = _next_speech(slots, i)
        predicted = predictions.get(chunk.chunk_id)
        if predicted is None:
            decisions.append(unvalidated(chunk.chunk_id))
            continue
        d = select_boundary(predicted, candidate_list(chunk, nxt), threshold, chunk.chunk_id)
        if d.action is BoundaryAction.PUSH_TO_NEXT and nxt is None:
            # nowhere to move the words: do not trust this chunk
            d = unvalidated(chunk.chunk_id, d.predicted_word, d.ratio)
        decisions.append(d)
    return decisions


def _predict_all(
    sources: list[CorpusSource],
    slots_by_source: dict[str, list[SubtitleChunk | None]],
    endpoint: EndpointProvider,
    opts: CorpusOptions,
    summary: CorpusSummary,
) -> dict[str, list[str] | None]:
    jobs: list[tuple[str, AudioClip | None]] = []
    for src in sources:
        for chunk in slots_by_source[src.source_id]:
            if chunk is None or not chunk.words:
                continue
            try:
                tail = audio_tail(src.audio, chunk, opts.tail_s)
            except ForgeError as exc:
                summary.errors.append(str(exc))
                log.warning("%s", exc)
                tail = None
            jobs.append((chunk.chunk_id, tail))

    def run(job: tuple[str, AudioClip | None]) -> list[str] | None:
        chunk_id, tail = job
        if tail is None:
            return None
        try:
            return endpoint.predict(chunk_id, tail)
        except ForgeError as exc:
            log.warning("endpoint prediction failed for %s: %s", chunk_id, exc)
            return None

    with ThreadPoolExecutor(max_workers=max(1, opts.max_inflight)) as pool:
        results = list(pool.map(run, jobs))
    return {chunk_id: res for (chunk_id, _), res in zip(jobs, results)}


def build_corpus(
    sources: list[CorpusSource],
    endpoint: EndpointProvider,
    replacer: ReplacementProvider | None = None,
    opts: CorpusOptions = CorpusOptions(),
    summary: CorpusSummary | None = None,
) -> tuple[list[ManifestEntry], CorpusSummary, list[BoundaryDecision]]:
    """Run every source through the corpus pipeline; return manifest entries.

    Entries come back sorted by chunk id. Predictor calls are the only
    concurrent step and their results are joined by chunk id.
    """
    summary = summary if summary is not None else CorpusSummary()
    sources = sorted(sources, key=lambda s: s.source_id)
    slots_by_source = {}
    for src in sources:
        summary.sources += 1
        summary.chunks += len(src.chunks)
        slots_by_source[src.source_id] = _language_pass(src.chunks, replacer, summary)

    predictions = _predict_all(sources, slots_by_source, endpoint, opts, summary)

    entries: list[ManifestEntry] = []
    all_decisions: list[BoundaryDecision] = []
    for src in sources:
        slots = slots_by_source[src.source_id]
        decisions = validate_boundaries(slots, predictions, opts.threshold)
        all_decisions += decisions
        realigned = realign([c for c in slots if c is not None], decisions)
        for chunk in realigned:
            if chunk.unvalidated:
                summary.unvalidated += 1
                continue
            was_speech = chunk.text is not None
            chunk = null_nonspeech(chunk, src.nonspeech_zones)
            if chunk.text is None:
                summary.nonspeech += was_speech
            elif not chunk.words:
                summary.emptied += 1
                continue
            entries.append(
                ManifestEntry(
                    chunk_id=chunk.chunk_id,
                    audio_path=src.audio_path,
                    offset_s=chunk.start_s,
                    duration_s=chunk.duration_s,
                    transcript=chunk.text,
                    sample_rate_hz=src.audio.sample_rate_hz,
                )
            )
    entries = split_train_val(entries, opts.split_ratio, opts.master_seed)
    entries.sort(key=lambda e: e.chunk_id)
    return entries, summary, all_decisions
