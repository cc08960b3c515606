"""Command-line entry point: ``shobdosetu-forge <command> ...``.

Exit codes: 0 success, 2 input/format/config error, 3 semantic error such as
an empty reference. Reports go to stdout (or ``--out``), logs to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from .audiocore import WavEncoding, read_wav
from .batch import run_augment
from .config import ToolkitConfig
from .corpus import (
    CorpusOptions,
    CorpusSource,
    CorpusSummary,
    FileProvider,
    FileReplacementProvider,
    RemoteProvider,
    build_corpus,
    build_manifest,
    load_chunks,
    read_manifest,
)
from .corpus.providers import ENV_URL
from .diarpost import PostParams, apply_post, grid_search
from .errors import BadConfig, ForgeError, InputFormatError, ProviderError, SemanticError
from .metrics import corpus_der, corpus_wer, load_rttm, write_rttm

log = logging.getLogger("shobdosetu_forge")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_SEMANTIC = 3


class UsageError(InputFormatError):
    pass


def _emit(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, ensure_ascii=False, indent=2) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _config(args) -> ToolkitConfig:
    cfg = ToolkitConfig.load(getattr(args, "config", None))
    overrides = {}
    for flag, key in (("seed", "master_seed"), ("split_ratio", "split_ratio"), ("threshold", "fuzzy_threshold"),
                      ("collar", "collar_s"), ("noise_dir", "noise_dir")):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[key] = value
    return replace(cfg, **overrides) if overrides else cfg


# ---------------------------------------------------------------------------
# build-corpus
# ---------------------------------------------------------------------------


def _chunk_files(path: Path) -> list[Path]:
    if path.is_dir():
        return sorted(path.glob("*.json"))
    if path.is_file():
        return [path]
    raise UsageError(f"no such chunk file or directory: {path}")


def _load_zones(path: str | None) -> dict[str, list[tuple[float, float]]]:
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return {str(k): [(float(s), float(e)) for s, e in sorted(v)] for k, v in data.items()}
    except (OSError, ValueError, TypeError, AttributeError) as exc:
        raise UsageError(f"bad non-speech zone file {path}: {exc}") from exc


def cmd_build_corpus(args) -> int:
    cfg = _config(args)
    zones = _load_zones(args.nonspeech)
    if args.provider == "file":
        if not args.endpoint_words:
            raise UsageError("--provider file needs --endpoint-words")
        endpoint = FileProvider.from_jsonl(args.endpoint_words)
        replacer = FileReplacementProvider.from_jsonl(args.replacements) if args.replacements else None
    else:
        url = os.environ.get(ENV_URL) or cfg.endpoint.url
        if not url:
            raise UsageError(f"--provider remote needs {ENV_URL} or endpoint.url in the config")
        endpoint = RemoteProvider(url, os.environ.get("SHOBDOSETU_ENDPOINT_API_KEY"), timeout_s=cfg.endpoint.timeout_s)
        replacer = FileReplacementProvider.from_jsonl(args.replacements) if args.replacements else endpoint

    summary = CorpusSummary()
    sources = []
    audio_dir = Path(args.audio_dir)
    for chunk_path in _chunk_files(Path(args.chunks)):
        chunks = load_chunks(chunk_path)
        source_id = chunk_path.stem
        wav_name = f"{source_id}.wav"
        try:
            audio = read_wav(audio_dir / wav_name)
        except ForgeError as exc:
            log.warning("skipping %s (%d chunks): %s", source_id, len(chunks), exc)
            summary.missing_audio += len(chunks)
            summary.errors.append(str(exc))
            continue
        sources.append(CorpusSource(source_id, chunks, audio, wav_name, zones.get(source_id, [])))

    opts = CorpusOptions(
        threshold=cfg.fuzzy_threshold,
        tail_s=cfg.tail_s,
        split_ratio=cfg.split_ratio,
        master_seed=cfg.master_seed,
        max_inflight=cfg.endpoint.max_inflight,
    )
    entries, summary, decisions = build_corpus(sources, endpoint, replacer, opts, summary)
    build_manifest(entries, args.out, summary)
    if args.decisions_out:
        with open(args.decisions_out, "w", encoding="utf-8") as fh:
            for d in sorted(decisions, key=lambda d: d.chunk_id):
                fh.write(json.dumps(d.to_dict(), ensure_ascii=False) + "\n")
    _emit(summary.to_dict(), None)
    return EXIT_OK


# ---------------------------------------------------------------------------
# augment
# ---------------------------------------------------------------------------


def cmd_augment(args) -> int:
    cfg = _config(args)
    entries = read_manifest(args.manifest)
    snr = None if args.no_background_noise else cfg.snr_range_db
    _, summary = run_augment(
        entries,
        args.audio_dir,
        args.out_dir,
        args.count,
        cfg.master_seed,
        ranges=cfg.augment,
        noise_dir=cfg.noise_dir,
        snr_range_db=snr,
        encoding=WavEncoding(args.encoding),
        jobs=args.jobs,
    )
    _emit(summary.to_dict(), None)
    return EXIT_OK


# ---------------------------------------------------------------------------
# scoring
# ---------------------------------------------------------------------------


def _read_lines(path: str) -> list[str]:
    return Path(path).read_text(encoding="utf-8").splitlines()


def _wer_pairs(args) -> list[tuple[str, str]]:
    if args.pairs:
        pairs = []
        for lineno, line in enumerate(_read_lines(args.pairs), 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                pairs.append((str(obj["ref"]), str(obj["hyp"])))
            except (ValueError, KeyError, TypeError) as exc:
                raise UsageError(f"{args.pairs}:{lineno}: need an object with ref and hyp: {exc}") from exc
        return pairs
    if not (args.ref and args.hyp):
        raise UsageError("give REF and HYP files, or --pairs")
    refs, hyps = _read_lines(args.ref), _read_lines(args.hyp)
    if len(refs) != len(hyps):
        raise UsageError(f"{len(refs)} reference lines vs {len(hyps)} hypothesis lines")
    return list(zip(refs, hyps))


def cmd_score_wer(args) -> int:
    report = corpus_wer(_wer_pairs(args), strip_punct=args.strip_punct)
    _emit(report.to_dict(), args.out)
    return EXIT_OK


def cmd_score_der(args) -> int:
    cfg = _config(args)
    report = corpus_der(load_rttm(args.ref), load_rttm(args.hyp), cfg.collar_s, allow_missing_hyp=True)
    _emit(report.to_dict(), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# post-processing and grid search
# ---------------------------------------------------------------------------


def cmd_post(args) -> int:
    cfg = _config(args)
    p = cfg.post
    params = PostParams(
        p.min_duration_off_s if args.min_duration_off is None else args.min_duration_off,
        p.round_granularity_s if args.round is None else args.round,
        p.min_segment_s if args.min_segment is None else args.min_segment,
    )
    text = write_rttm(apply_post(ann, params) for ann in load_rttm(args.hyp))
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_grid_search(args) -> int:
    cfg = _config(args)
    result = grid_search(cfg.param_grid, load_rttm(args.hyp), load_rttm(args.ref), cfg.collar_s, jobs=args.jobs)
    print(result.format_table(), file=sys.stderr)
    _emit(result.to_dict(), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shobdosetu-forge", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=False):
        p.add_argument("--config", help="toolkit config JSON")
        if seed:
            p.add_argument("--seed", type=int, help="master seed (overrides config)")

    p = sub.add_parser("build-corpus", help="filter, validate and split subtitle chunks into a manifest")
    common(p, seed=True)
    p.add_argument("--chunks", required=True, help="chunk JSON file or directory of them (stem = source id)")
    p.add_argument("--audio-dir", required=True, help="directory holding <source id>.wav")
    p.add_argument("--out", required=True, help="output manifest JSONL")
    p.add_argument("--provider", choices=("file", "remote"), default="file")
    p.add_argument("--endpoint-words", help="JSONL lookup for the file provider")
    p.add_argument("--replacements", help="JSONL of replacement words for Devanagari tokens")
    p.add_argument("--nonspeech", help="JSON object: source id -> [[start, end], ...] non-speech zones")
    p.add_argument("--decisions-out", help="write boundary decisions as JSONL")
    p.add_argument("--split-ratio", type=float)
    p.add_argument("--threshold", type=float, help="fuzzy-match threshold")
    p.set_defaults(func=cmd_build_corpus)

    p = sub.add_parser("augment", help="generate degraded copies of manifest chunks")
    common(p, seed=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--audio-dir", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--noise-dir", help="directory of background-noise WAVs")
    p.add_argument("--no-background-noise", action="store_true")
    p.add_argument("--encoding", choices=[e.value for e in WavEncoding], default=WavEncoding.PCM16.value)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("score-wer", help="word error rate of line-paired transcripts")
    p.add_argument("ref", nargs="?")
    p.add_argument("hyp", nargs="?")
    p.add_argument("--pairs", help="JSONL with ref/hyp fields instead of two text files")
    p.add_argument("--strip-punct", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_score_wer)

    p = sub.add_parser("score-der", help="diarization error rate of RTTM files or directories")
    common(p)
    p.add_argument("ref")
    p.add_argument("hyp")
    p.add_argument("--collar", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_score_der)

    p = sub.add_parser("post", help="merge, drop and round hypothesis segments")
    common(p)
    p.add_argument("hyp")
    p.add_argument("--min-duration-off", type=float)
    p.add_argument("--round", type=float, help="boundary rounding granularity in seconds")
    p.add_argument("--min-segment", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_post)

    p = sub.add_parser("grid-search", help="exhaustive post-processing parameter search")
    common(p)
    p.add_argument("--hyp", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--collar", type=float)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_grid_search)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except SemanticError as exc:
        log.error("%s", exc)
        return EXIT_SEMANTIC
    except (InputFormatError, BadConfig, ProviderError, OSError, UnicodeDecodeError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except ForgeError as exc:
        log.error("%s", exc)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
