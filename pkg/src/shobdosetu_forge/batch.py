"""Batch augmentation driver.

Each augmented item is derived from its index alone: the source chunk, the
recipe and the background noise are all seeded from ``(seed, item_id)``.
Workers therefore never share state, and the output bytes do not depend on
the worker count.
"""

from __future__ import annotations

import functools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .audiocore import AudioClip, WavEncoding, peak_normalize, read_wav, write_wav
from .augment import (
    OUTPUT_PEAK_DBFS,
    AugmentRanges,
    augment_chunk,
    mix_background_noise,
    sample_recipe,
    shaped_noise,
)
from .corpus.manifest import ManifestEntry, write_manifest
from .errors import BadConfig, ForgeError
from .hashing import item_hash

log = logging.getLogger(__name__)

# synthetic background noise when no noise directory is given
SYNTH_NOISE_FC_HZ = 4000.0
SYNTH_NOISE_SLOPE = 2.0


@dataclass(frozen=True)
class AugmentJob:
    index: int
    item_id: str
    source: ManifestEntry
    audio_dir: str
    out_dir: str
    seed: int
    ranges: AugmentRanges
    noise_files: tuple[str, ...]
    snr_range_db: tuple[float, float] | None
    encoding: WavEncoding


@dataclass
class AugmentSummary:
    requested: int = 0
    written: int = 0
    failed: int = 0
    covered_mic: int = 0
    underwater: int = 0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@functools.lru_cache(maxsize=32)
def _load(path: str) -> AudioClip:
    return read_wav(path)


def eligible_sources(entries: list[ManifestEntry]) -> list[ManifestEntry]:
    """Original speech chunks, in chunk-id order."""
    return sorted((e for e in entries if not e.augmented and e.transcript), key=lambda e: e.chunk_id)


def pick_sources(sources: list[ManifestEntry], count: int, seed: int) -> list[ManifestEntry]:
    """Draw ``count`` sources uniformly with replacement, one hash per slot."""
    if not sources:
        raise BadConfig("manifest has no eligible speech entries to augment")
    return [sources[item_hash(seed, f"pick:{j}") % len(sources)] for j in range(count)]


def _background(clip: AudioClip, job: AugmentJob) -> tuple[AudioClip, dict]:
    rng = np.random.default_rng(item_hash(job.seed, f"{job.item_id}#background"))
    snr_db = float(rng.uniform(*job.snr_range_db))
    noise = None
    name = "synthetic"
    candidates = list(job.noise_files)
    while candidates and noise is None:
        path = candidates.pop(int(rng.integers(len(candidates))))
        try:
            loaded = _load(path)
        except ForgeError as exc:
            log.warning("skipping noise file %s: %s", path, exc)
            continue
        if loaded.sample_rate_hz != clip.sample_rate_hz or loaded.peak == 0.0:
            continue
        shift = int(rng.integers(len(loaded)))
        noise, name = loaded.with_samples(np.roll(loaded.samples, -shift)), Path(path).name
    if noise is None:
        noise = shaped_noise(
            len(clip), clip.sample_rate_hz, SYNTH_NOISE_FC_HZ, SYNTH_NOISE_SLOPE, -20.0, int(rng.integers(2**63))
        )
    return mix_background_noise(clip, noise, snr_db), {"snr_db": snr_db, "source": name}


def run_job(job: AugmentJob) -> ManifestEntry:
    src = job.source
    path = Path(src.audio_path)
    if not path.is_absolute():
        path = Path(job.audio_dir) / path
    full = _load(str(path))
    chunk = full.slice_seconds(src.offset_s, src.offset_s + src.duration_s)
    if len(chunk) == 0:
        raise BadConfig(f"{src.chunk_id}: chunk lies outside {path}")
    recipe = sample_recipe(job.seed, job.item_id, chunk.duration_s, job.ranges)
    out = augment_chunk(chunk, recipe)
    recipe_dict = recipe.to_dict()
    recipe_dict["source_chunk_id"] = src.chunk_id
    if job.snr_range_db is not None:
        out, recipe_dict["background"] = _background(out, job)
        out = peak_normalize(out, OUTPUT_PEAK_DBFS)
    wav_name = f"{job.item_id}.wav"
    write_wav(Path(job.out_dir) / wav_name, out, job.encoding)
    return replace(
        src,
        chunk_id=job.item_id,
        audio_path=wav_name,
        offset_s=0.0,
        duration_s=chunk.duration_s,
        augmented=True,
        recipe=recipe_dict,
        sample_rate_hz=chunk.sample_rate_hz,
    )


def _run_safe(job: AugmentJob) -> ManifestEntry | None:
    # one bad source chunk must not sink the batch
    try:
        return run_job(job)
    except (ForgeError, OSError) as exc:
        log.warning("augment failed for %s: %s", job.item_id, exc)
        return None


def run_augment(
    entries: list[ManifestEntry],
    audio_dir: str | Path,
    out_dir: str | Path,
    count: int,
    seed: int,
    ranges: AugmentRanges = AugmentRanges(),
    noise_dir: str | Path | None = None,
    snr_range_db: tuple[float, float] | None = (10.0, 25.0),
    encoding: WavEncoding = WavEncoding.PCM16,
    jobs: int = 1,
) -> tuple[list[ManifestEntry], AugmentSummary]:
    """Produce ``count`` augmented chunks plus ``manifest.jsonl`` in ``out_dir``.

    ``snr_range_db=None`` disables background noise.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    noise_files: tuple[str, ...] = ()
    if noise_dir is not None:
        noise_files = tuple(str(p) for p in sorted(Path(noise_dir).glob("*.wav")))
    picks = pick_sources(eligible_sources(entries), count, seed) if count else []
    work = [
        AugmentJob(
            j, f"aug-{j:06d}", src, str(audio_dir), str(out_dir), seed, ranges,
            noise_files, snr_range_db, encoding,
        )
        for j, src in enumerate(picks)
    ]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_safe, work, chunksize=max(1, len(work) // (4 * jobs))))
    else:
        results = [_run_safe(w) for w in work]

    summary = AugmentSummary(requested=count)
    written = []
    for res in results:
        if res is None:
            summary.failed += 1
            continue
        written.append(res)
        if res.recipe["effect"] == "covered_mic":
            summary.covered_mic += 1
        else:
            summary.underwater += 1
    summary.written = len(written)
    write_manifest(written, out_dir / "manifest.jsonl")
    return sorted(written, key=lambda e: e.chunk_id), summary
