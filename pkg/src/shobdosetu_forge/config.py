"""Toolkit configuration: one JSON document, layered over built-in defaults."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from .augment import AugmentRanges
from .diarpost import ParamGrid, PostParams
from .errors import BadConfig

# Ranges the effects were designed around. Configs may only widen them with
# "allow_out_of_range": true.
DESIGN_BOUNDS = {
    "covered_fc_hz": (600.0, 2000.0),
    "covered_slope_p": (4.0, 10.0),
    "covered_lf_boost_db": (0.0, 8.0),
    "covered_noise_level_dbfs": (-48.0, -35.0),
    "underwater_scoop_db": (-14.0, -4.0),
}


@dataclass(frozen=True)
class EndpointConfig:
    url: str | None = None
    timeout_s: float = 30.0
    max_inflight: int = 4


@dataclass(frozen=True)
class ToolkitConfig:
    master_seed: int = 0
    augment: AugmentRanges = field(default_factory=AugmentRanges)
    allow_out_of_range: bool = False
    noise_dir: str | None = None
    snr_range_db: tuple[float, float] = (10.0, 25.0)
    split_ratio: float = 0.9
    fuzzy_threshold: float = 0.6
    tail_s: float = 5.0
    collar_s: float = 0.0
    post: PostParams = field(default_factory=PostParams)
    grid: dict[str, list[float]] = field(
        default_factory=lambda: {"min_duration_off_s": [0.0], "round_granularity_s": [0.0], "min_segment_s": [0.0]}
    )
    endpoint: EndpointConfig = field(default_factory=EndpointConfig)

    def __post_init__(self) -> None:
        if not 0.0 < self.split_ratio < 1.0:
            raise BadConfig(f"split_ratio must lie in (0, 1), got {self.split_ratio}")
        if not 0.0 <= self.fuzzy_threshold <= 1.0:
            raise BadConfig("fuzzy_threshold must lie in [0, 1]")
        lo, hi = self.snr_range_db
        if lo > hi:
            raise BadConfig("snr_range_db low > high")
        if self.collar_s < 0 or self.tail_s <= 0:
            raise BadConfig("collar_s must be >= 0 and tail_s > 0")
        if self.endpoint.max_inflight < 1:
            raise BadConfig("endpoint.max_inflight must be >= 1")
        if not self.allow_out_of_range:
            for name, (blo, bhi) in DESIGN_BOUNDS.items():
                lo, hi = getattr(self.augment, name)
                if lo < blo or hi > bhi:
                    raise BadConfig(
                        f"augment.{name}={[lo, hi]} leaves [{blo}, {bhi}]; set allow_out_of_range to override"
                    )
        ParamGrid.from_dict(self.grid)

    @property
    def param_grid(self) -> ParamGrid:
        return ParamGrid.from_dict(self.grid)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ToolkitConfig":
        if not isinstance(d, dict):
            raise BadConfig("config must be a JSON object")
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise BadConfig(f"unknown config keys: {sorted(unknown)}")
        kw = dict(d)
        try:
            if "augment" in kw:
                kw["augment"] = AugmentRanges.from_dict(kw["augment"])
            if "post" in kw:
                kw["post"] = PostParams(**kw["post"])
            if "endpoint" in kw:
                kw["endpoint"] = EndpointConfig(**kw["endpoint"])
            if "snr_range_db" in kw:
                kw["snr_range_db"] = tuple(kw["snr_range_db"])
            return cls(**kw)
        except TypeError as exc:
            raise BadConfig(str(exc)) from exc

    @classmethod
    def load(cls, path: str | Path | None) -> "ToolkitConfig":
        if path is None:
            return cls()
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise BadConfig(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)
