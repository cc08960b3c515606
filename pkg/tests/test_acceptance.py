"""Exit criteria for the toolkit, one test per criterion.

The terminal summary (see conftest.py) prints one PASS/FAIL line per test.
"""

from __future__ import annotations

import filecmp
import itertools
import math
import string
import time
from pathlib import Path

import numpy as np
import pytest
from oracles import der_oracle, edit_distance, gestalt_difflib, gestalt_naive, random_segments
from shobdosetu_forge import cli
from shobdosetu_forge.audiocore import AudioClip, istft, stft, write_wav
from shobdosetu_forge.augment import (
    AugmentRecipe,
    CoveredMicParams,
    DegradedZone,
    apply_recipe,
    augment_chunk,
    lowpass_gain,
    sample_recipe,
    sample_zone,
)
from shobdosetu_forge.corpus import (
    LanguageVerdict,
    ManifestEntry,
    Split,
    filter_language,
    similarity_ratio,
    split_train_val,
    write_manifest,
)
from shobdosetu_forge.diarpost import PostParams, ParamGrid, apply_post, grid_search, merge_segments, round_boundaries
from shobdosetu_forge.metrics import Annotation, align_tokens, der, wer
from shobdosetu_forge.metrics.der import der_components

pytestmark = pytest.mark.acceptance

FIXTURES = Path(__file__).parent / "fixtures"
PEAK_MINUS_1DB = 10 ** (-1 / 20)


def ann(uri, *segs):
    return Annotation.canonical(uri, segs)


def ann_ms(uri, segs):
    return Annotation.from_ms(uri, segs)


# ---------------------------------------------------------------------------


def test_ac01_wer_alignment_matches_edit_distance_oracle():
    rng = np.random.default_rng(101)
    alphabet = list("abcd")
    cases = [
        (tuple(rng.choice(alphabet, rng.integers(0, 9))), tuple(rng.choice(alphabet, rng.integers(0, 9))))
        for _ in range(10_000)
    ]
    t0 = time.perf_counter()
    got = [align_tokens(r, h).errors for r, h in cases]
    elapsed = time.perf_counter() - t0
    want = [edit_distance(r, h) for r, h in cases]
    assert got == want
    assert elapsed < 10.0


def test_ac02_wer_definition_fixtures():
    assert wer("k1 k2 k3 k4", "k1 k2 k3 k4").wer_percent == 0.0
    r = wer("k1 k2 k3 k4", "k1 kX k3")
    assert (r.alignment.S, r.alignment.D, r.alignment.I) == (1, 1, 0)
    assert r.wer_percent == 50.0
    assert wer("a b c", "").wer_percent == 100.0


def test_ac03_der_matches_permutation_oracle():
    rng = np.random.default_rng(303)
    cases = []
    for i in range(1000):
        n_ref_spk, n_hyp_spk = int(rng.integers(1, 7)), int(rng.integers(1, 7))
        ref = random_segments(rng, n_ref_spk, int(rng.integers(1, 13)), 20_000, "r")
        hyp = random_segments(rng, n_hyp_spk, int(rng.integers(0, 13)), 20_000, "h")
        collar_ms = 250 if i % 4 == 0 else 0
        cases.append((ref, hyp, collar_ms))

    t0 = time.perf_counter()
    got = []
    for ref, hyp, collar_ms in cases:
        got.append(der_components(ann_ms("f", ref), ann_ms("f", hyp), collar_ms / 1000))
    elapsed = time.perf_counter() - t0

    checked = 0
    for (ref, hyp, collar_ms), rep in zip(cases, got):
        err, total = der_oracle(ref, hyp, collar_ms)
        assert (rep.error_ms, rep.total_ms) == (err, total)
        if total == 0:
            continue
        assert abs(rep.der - err / total) <= 1e-9
        checked += 1
    assert checked > 900
    assert elapsed < 60.0


def test_ac04_der_fixtures():
    r1 = der(ann("f", (0, 10, "A")), ann("f", (0, 8, "X")))
    assert abs(r1.der - 0.200) <= 1e-9
    assert (r1.miss_s, r1.fa_s, r1.conf_s) == (2.0, 0.0, 0.0)
    r2 = der(ann("f", (0, 5, "A"), (5, 10, "B")), ann("f", (0, 10, "X")))
    assert abs(r2.der - 0.500) <= 1e-9
    assert r2.conf_s == 5.0
    assert dict(r2.mapping) == {"X": "A"}
    # the permutation oracle agrees on both
    for ref, hyp, want in (
        ([(0, 10_000, "A")], [(0, 8_000, "X")], 0.2),
        ([(0, 5_000, "A"), (5_000, 10_000, "B")], [(0, 10_000, "X")], 0.5),
    ):
        err, total = der_oracle(ref, hyp)
        assert abs(err / total - want) <= 1e-9


def test_ac05_gestalt_ratio_matches_reference_matcher():
    rng = np.random.default_rng(505)
    letters = list("abcab ") + list(string.ascii_lowercase[:4])
    for _ in range(10_000):
        a = "".join(rng.choice(letters, rng.integers(0, 13)))
        b = "".join(rng.choice(letters, rng.integers(0, 13)))
        assert similarity_ratio(a, b) == gestalt_difflib(a, b)
    for _ in range(500):
        a = "".join(rng.choice(letters, rng.integers(0, 13)))
        b = "".join(rng.choice(letters, rng.integers(0, 13)))
        assert similarity_ratio(a, b) == gestalt_naive(a, b)
    assert similarity_ratio("abcd", "bcde") == 0.75


def test_ac06_stft_round_trip():
    rng = np.random.default_rng(606)
    for i in range(100):
        sr = (8000, 16000, 44100)[i % 3]
        n = int(rng.integers(1, 32_001))
        x = rng.uniform(-1, 1, n) * rng.uniform(0.01, 1.0)
        clip = AudioClip(x, sr)
        y = istft(stft(clip), n).samples
        assert np.max(np.abs(y - x)) < 1e-6 * np.max(np.abs(x))


def _band_energy(spec_frames, freqs, lo, hi, frame_slice):
    band = (freqs >= lo) & (freqs <= hi)
    return float(np.sum(np.abs(spec_frames[frame_slice][:, band]) ** 2))


def test_ac07_covered_mic_spectral_contract():
    sr, dur = 16_000, 12.0
    t = np.arange(int(sr * dur)) / sr
    f0, f1 = 100.0, 7000.0
    k = math.log(f1 / f0) / dur
    sweep = 0.01 * np.sin(2 * np.pi * f0 * (np.exp(k * t) - 1) / k)
    clip = AudioClip(sweep, sr)
    zone = DegradedZone(1.0, 11.0)
    crossfade = 0.05

    for fc, p in ((1000.0, 4.0), (800.0, 6.0), (1200.0, 4.0)):
        params = CoveredMicParams(fc, p, lf_boost_db=0.0, ripple_depth=0.0, noise_level_dbfs=None)
        recipe = AugmentRecipe(params, zone, seed=1, crossfade_s=crossfade)
        wet = apply_recipe(clip, recipe)

        spec_in, spec_out = stft(clip), stft(wet)
        freqs = spec_in.frequencies()
        hop = spec_in.hop
        first = int(math.ceil((zone.start_s + crossfade) * sr / hop)) + 4
        last = int((zone.end_s - crossfade) * sr / hop) - 4
        frames = slice(first, last)

        def gain_db(f):
            lo, hi = f * 0.95, f * 1.05
            e_out = _band_energy(spec_out.frames, freqs, lo, hi, frames)
            e_in = _band_energy(spec_in.frames, freqs, lo, hi, frames)
            return 10 * math.log10(e_out / e_in)

        # the tanh stage adds a constant small-signal gain; measure relative to the passband
        f_ref, f_hi = 200.0, 4 * fc
        measured = gain_db(f_hi) - gain_db(f_ref)
        predicted = 20 * math.log10(lowpass_gain(f_hi, fc, p) / lowpass_gain(f_ref, fc, p))
        assert abs(measured - predicted) <= 3.0, (fc, p, measured, predicted)

    # out-of-zone spectra equal the input up to the one normalization scalar
    params = CoveredMicParams(1000.0, 4.0, lf_boost_db=0.0, ripple_depth=0.0, noise_level_dbfs=None)
    recipe = AugmentRecipe(params, zone, seed=1, crossfade_s=crossfade)
    out = augment_chunk(clip, recipe)
    scale = PEAK_MINUS_1DB / apply_recipe(clip, recipe).peak
    for a, b in ((0, int(zone.start_s * sr)), (int(zone.end_s * sr), len(t))):
        s_in = stft(AudioClip(clip.samples[a:b], sr)).frames * scale
        s_out = stft(AudioClip(out.samples[a:b], sr)).frames
        assert np.linalg.norm(s_out - s_in) / np.linalg.norm(s_in) < 1e-6


def test_ac08_output_peak_is_minus_one_dbfs():
    rng = np.random.default_rng(808)
    for i in range(40):
        sr = (8000, 16000)[i % 2]
        dur = float(rng.uniform(2.0, 14.0))
        x = rng.standard_normal(int(sr * dur)) * rng.uniform(0.001, 2.0)
        clip = AudioClip(x, sr)
        out = augment_chunk(clip, sample_recipe(i, f"item-{i}", clip.duration_s))
        assert abs(out.peak - 0.8913) <= 0.001


def test_ac09_effect_split_matches_observed_proportion():
    t0 = time.perf_counter()
    covered = sum(sample_recipe(2024, f"aug-{j:06d}", 12.0).effect_kind == "covered_mic" for j in range(6500))
    elapsed = time.perf_counter() - t0
    assert 3088 <= covered <= 3412
    assert 3088 <= 3239 <= 3412
    assert elapsed < 5.0


def test_ac10_zone_lengths():
    rng = np.random.default_rng(1010)
    for _ in range(10_000):
        dur = float(rng.uniform(0.1, 30.0))
        z = sample_zone(rng, dur)
        if dur >= 5.0:
            assert 5.0 <= z.length_s <= 10.0 + 1e-12
            assert 0.0 <= z.start_s and z.end_s <= dur + 1e-9
        else:
            assert (z.start_s, z.end_s) == (0.0, dur)
    for j in range(200):
        r = sample_recipe(7, f"z{j}", 4.0)
        assert (r.zone.start_s, r.zone.end_s) == (0.0, 4.0)


def _augment_inputs(tmp: Path) -> tuple[Path, Path]:
    audio = tmp / "audio"
    audio.mkdir()
    rng = np.random.default_rng(11)
    entries = []
    for s in range(3):
        sr = 8000
        x = 0.3 * rng.standard_normal(sr * 14)
        write_wav(audio / f"src{s}.wav", AudioClip(x, sr))
        for c in range(2):
            entries.append(ManifestEntry(f"src{s}-{c:05d}", f"src{s}.wav", 7.0 * c, 6.5 + c, "কথা বলা", Split.TRAIN,
                                         sample_rate_hz=sr))
    manifest = tmp / "manifest.jsonl"
    write_manifest(entries, manifest)
    return manifest, audio


def test_ac11_augment_is_deterministic_across_runs_and_jobs(tmp_path):
    manifest, audio = _augment_inputs(tmp_path)
    outs = []
    for run, jobs in (("a", 1), ("b", 1), ("c", 3)):
        out = tmp_path / f"out_{run}"
        rc = cli.main(["augment", "--manifest", str(manifest), "--audio-dir", str(audio), "--out-dir", str(out),
                       "--count", "8", "--seed", "99", "--jobs", str(jobs)])
        assert rc == 0
        outs.append(out)
    names = sorted(p.name for p in outs[0].iterdir())
    assert len(names) == 9  # 8 WAVs + manifest
    for other in outs[1:]:
        assert sorted(p.name for p in other.iterdir()) == names
        match, mismatch, errors = filecmp.cmpfiles(outs[0], other, names, shallow=False)
        assert mismatch == [] and errors == []


def test_ac12_merge_and_round_fixtures_and_idempotence():
    assert merge_segments(ann("f", (0, 1.0, "A"), (1.2, 2.0, "A")), 0.3) == ann("f", (0, 2.0, "A"))
    two = ann("f", (0, 1.0, "A"), (1.1, 2.0, "B"))
    for thr in (0.0, 0.3, 5.0):
        assert merge_segments(two, thr) == two
    gap_equal = ann("f", (0, 1.0, "A"), (1.3, 2.0, "A"))
    assert merge_segments(gap_equal, 0.3) == gap_equal

    assert round_boundaries(ann("f", (1.234, 3.0, "A")), 0.1).segments[0].start_s == 1.2
    assert round_boundaries(ann("f", (1.25, 3.0, "A")), 0.1).segments[0].start_s == 1.3
    assert round_boundaries(ann("f", (1.02, 1.04, "A")), 0.1).segments == ()

    rng = np.random.default_rng(1212)
    for _ in range(1000):
        segs = random_segments(rng, int(rng.integers(1, 4)), int(rng.integers(0, 15)), 30_000, "s")
        a = ann_ms("f", segs)
        p = PostParams(
            float(rng.choice([0.0, 0.1, 0.25, 0.5, 1.0])),
            float(rng.choice([0.0, 0.01, 0.1, 0.25, 0.3])),
            float(rng.choice([0.0, 0.05, 0.2, 0.5])),
        )
        once = apply_post(a, p)
        assert apply_post(once, p) == once


def _grid_oracle(grid_dims, hyps, refs):
    names = list(grid_dims)
    rows = []
    for combo in itertools.product(*(grid_dims[n] for n in names)):
        point = dict(zip(names, combo))
        params = PostParams(point["min_duration_off_s"], point["round_granularity_s"], point["min_segment_s"])
        err = total = 0
        for ref, hyp in zip(refs, hyps):
            processed = apply_post(hyp, params)
            e, t = der_oracle(ref.spans_ms(), processed.spans_ms())
            err, total = err + e, total + t
        rows.append((point, err, total))
    best = rows[0]
    for row in rows[1:]:
        if row[1] < best[1]:
            best = row
    return rows, best


def test_ac13_grid_search_matches_exhaustive_loop():
    rng = np.random.default_rng(1313)
    refs, hyps = [], []
    for i in range(3):
        ref = random_segments(rng, 3, 8, 30_000, "R")
        hyp = []
        for s, e, spk in ref:
            # fragment every reference turn with small gaps and jitter
            mid = (s + e) // 2
            gap = int(rng.integers(50, 400))
            label = {"R0": "x", "R1": "y", "R2": "z"}[spk]
            hyp.append((s + int(rng.integers(0, 60)), max(s + 61, mid - gap // 2), label))
            hyp.append((min(e - 1, mid + gap // 2), e, label))
        hyp = [(s, e, spk) for s, e, spk in hyp if e > s]
        hyp.append((100, 180, "w"))  # short false alarm for min_segment_s to remove
        refs.append(ann_ms(f"rec{i}", ref))
        hyps.append(ann_ms(f"rec{i}", hyp))

    dims = {
        "min_duration_off_s": [0.0, 0.2, 0.5],
        "round_granularity_s": [0.0, 0.05, 0.1, 0.5],
        "min_segment_s": [0.0, 0.1],
    }
    result = grid_search(ParamGrid.from_dict(dims), hyps, refs)
    rows, best = _grid_oracle(dims, hyps, refs)

    assert len(result.table) == 3 * 4 * 2 == len(rows)
    for row, (point, err, total) in zip(result.table, rows):
        assert row.point == point
        assert (row.report.error_ms, row.report.total_ms) == (err, total)
    assert result.best_point == best[0]
    assert result.best_der == best[1] / best[2]


def test_ac14_train_val_split_proportion():
    entries = [ManifestEntry(f"chunk-{i:05d}", "a.wav", 0.0, 1.0, "x") for i in range(20_000)]
    out = split_train_val(entries, 0.9, master_seed=0)
    n_train = sum(e.split is Split.TRAIN for e in out)
    assert 17_760 <= n_train <= 18_240


def test_ac15_language_filter_fixtures():
    assert filter_language("আমি ভাত খাই").verdict is LanguageVerdict.KEEP
    r = filter_language("আমি कल ভাত খাই")
    assert r.verdict is LanguageVerdict.NEEDS_REPLACEMENT
    assert list(r.positions) == [1]
    assert filter_language("আমি తెలుగు ভাত").verdict is LanguageVerdict.DROP


def test_ac16_build_corpus_golden_manifest(tmp_path):
    demo = FIXTURES / "demo"
    out = tmp_path / "manifest.jsonl"
    rc = cli.main([
        "build-corpus", "--chunks", str(demo / "chunks"), "--audio-dir", str(demo / "audio"),
        "--endpoint-words", str(demo / "endpoint_words.jsonl"), "--out", str(out),
    ])
    assert rc == 0
    assert out.read_bytes() == (demo / "manifest.golden.jsonl").read_bytes()
    assert len(out.read_text(encoding="utf-8").splitlines()) == 3
