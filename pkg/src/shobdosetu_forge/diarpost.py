"""Diarization post-processing and exhaustive parameter search.

``apply_post`` cleans a hypothesis timeline by closing short same-speaker
gaps and snapping boundaries to a time grid. ``grid_search`` scores every point of a
parameter grid against reference annotations and returns the best one.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Mapping, Sequence

from .errors import BadConfig
from .metrics.annotation import Annotation, to_ms
from .metrics.der import DerReport, der_components, pair_by_uri


@dataclass(frozen=True)
class PostParams:
    min_duration_off_s: float = 0.0
    round_granularity_s: float = 0.0
    min_segment_s: float = 0.0

    def __post_init__(self) -> None:
        for f in fields(self):
            value = getattr(self, f.name)
            if not math.isfinite(value) or value < 0:
                raise BadConfig(f"{f.name} must be a finite non-negative number, got {value}")


POST_PARAM_NAMES = tuple(f.name for f in fields(PostParams))
# grid dimension aliases accepted for the built-in parameters
_ALIASES = {
    "min_duration_off": "min_duration_off_s",
    "round_granularity": "round_granularity_s",
    "min_segment": "min_segment_s",
}


def _merge_spans(spans: list[tuple[int, int]], max_gap: int) -> list[tuple[int, int]]:
    out: list[list[int]] = []
    for s, e in sorted(spans):
        if out and s - out[-1][1] < max_gap:
            out[-1][1] = max(out[-1][1], e)
        else:
            out.append([s, e])
    return [(s, e) for s, e in out]


def _by_speaker(ann: Annotation) -> dict[str, list[tuple[int, int]]]:
    out: dict[str, list[tuple[int, int]]] = {}
    for s, e, spk in ann.spans_ms():
        out.setdefault(spk, []).append((s, e))
    return out


def merge_segments(ann: Annotation, min_duration_off_s: float) -> Annotation:
    """Merge same-speaker neighbours separated by a gap strictly below the threshold."""
    ann = ann.canonicalize()
    thr = to_ms(min_duration_off_s)
    if thr <= 0:
        return ann
    spans = [
        (s, e, spk) for spk, items in _by_speaker(ann).items() for s, e in _merge_spans(items, thr)
    ]
    return Annotation.from_ms(ann.uri, spans)


def _round_half_up(t: int, g: int) -> int:
    q, r = divmod(t, g)
    return (q + (2 * r >= g)) * g


def round_boundaries(ann: Annotation, granularity_s: float) -> Annotation:
    """Snap every boundary to the nearest multiple of ``granularity_s``.

    Halves round away from zero; segments that collapse to zero length are
    dropped. A granularity of 0 is the identity.
    """
    if granularity_s < 0:
        raise BadConfig("granularity must be non-negative")
    ann = ann.canonicalize()
    g = to_ms(granularity_s)
    if g <= 0:
        return ann
    spans = [(_round_half_up(s, g), _round_half_up(e, g), spk) for s, e, spk in ann.spans_ms()]
    return Annotation.from_ms(ann.uri, spans)


def drop_short(ann: Annotation, min_segment_s: float) -> Annotation:
    thr = to_ms(min_segment_s)
    if thr <= 0:
        return ann
    return Annotation.from_ms(ann.uri, [(s, e, spk) for s, e, spk in ann.spans_ms() if e - s >= thr])


def _post_once(ann: Annotation, p: PostParams) -> Annotation:
    ann = merge_segments(ann, p.min_duration_off_s)
    ann = drop_short(ann, p.min_segment_s)
    return round_boundaries(ann, p.round_granularity_s)


def apply_post(ann: Annotation, params: PostParams) -> Annotation:
    """Merge, drop short segments, round, re-canonicalize; repeated to a fixpoint.

    Rounding can pull two segments closer or shrink one, so the chain is
    re-run until nothing changes. After the first pass every boundary is on
    the grid, and later passes only merge or drop, so this terminates.
    """
    cur = ann.canonicalize()
    while True:
        nxt = _post_once(cur, params)
        if nxt == cur:
            return cur
        cur = nxt


# ---------------------------------------------------------------------------
# Grid search
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ParamGrid:
    """Named dimensions, each an ordered list of candidate values.

    Dimensions named after :class:`PostParams` fields act on the
    annotations; any other name is carried along as an opaque label.
    """

    dimensions: tuple[tuple[str, tuple[float, ...]], ...]

    @classmethod
    def from_dict(cls, d: Mapping[str, Sequence[float]]) -> "ParamGrid":
        if not d:
            raise BadConfig("grid has no dimensions")
        dims = []
        for name, values in d.items():
            values = tuple(float(v) for v in values)
            if not values:
                raise BadConfig(f"grid dimension {name!r} is empty")
            dims.append((_ALIASES.get(name, name), values))
        names = [n for n, _ in dims]
        if len(set(names)) != len(names):
            raise BadConfig(f"duplicate grid dimensions: {names}")
        return cls(tuple(dims))

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.dimensions]

    def __len__(self) -> int:
        return math.prod(len(v) for _, v in self.dimensions)

    def points(self) -> list[dict[str, float]]:
        return [dict(zip(self.names, combo)) for combo in itertools.product(*(v for _, v in self.dimensions))]


def params_from_point(point: Mapping[str, float]) -> PostParams:
    return PostParams(**{k: v for k, v in point.items() if k in POST_PARAM_NAMES})


@dataclass(frozen=True)
class GridRow:
    point: dict[str, float]
    report: DerReport

    @property
    def der(self) -> float:
        return self.report.der


@dataclass(frozen=True)
class GridResult:
    best_point: dict[str, float]
    best_params: PostParams
    best_der: float
    table: list[GridRow] = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "best_point": self.best_point,
            "best_params": asdict(self.best_params),
            "best_der": self.best_der,
            "table": [{"point": row.point, **row.report.to_dict()} for row in self.table],
        }

    def format_table(self) -> str:
        names = list(self.best_point)
        header = "  ".join(f"{n:>20}" for n in names) + f"  {'DER':>10}"
        lines = [header]
        for row in self.table:
            mark = " *" if row.point == self.best_point else ""
            lines.append("  ".join(f"{row.point[n]:>20g}" for n in names) + f"  {row.der:>10.6f}{mark}")
        return "\n".join(lines)


def _evaluate(args) -> DerReport:
    point, pairs, collar_s = args
    params = params_from_point(point)
    fa = miss = conf = total = 0
    for ref, hyp in pairs:
        r = der_components(ref, apply_post(hyp, params), collar_s)
        fa, miss, conf, total = fa + r.fa_ms, miss + r.miss_ms, conf + r.conf_ms, total + r.total_ms
    return DerReport(fa, miss, conf, total)


def grid_search(
    grid: ParamGrid,
    hyps: Sequence[Annotation],
    refs: Sequence[Annotation],
    collar_s: float = 0.0,
    jobs: int = 1,
) -> GridResult:
    """Score every grid point by pooled DER and return the minimum.

    Ties go to the lexicographically smallest point (values compared in
    dimension order). The table keeps grid order regardless of ``jobs``.
    """
    pairs = pair_by_uri(refs, hyps)
    points = grid.points()
    work = [(p, pairs, collar_s) for p in points]
    if jobs > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_evaluate, work))
    else:
        reports = [_evaluate(w) for w in work]
    table = [GridRow(p, r) for p, r in zip(points, reports)]
    # total_ms is identical across points, so compare integer error times
    best = min(table, key=lambda row: (row.report.error_ms, tuple(row.point.values())))
    return GridResult(best.point, params_from_point(best.point), best.der, table)
