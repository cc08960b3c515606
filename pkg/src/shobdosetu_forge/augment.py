"""Zone-limited degradation effects for training-data augmentation.

Two effects are supported, each applied to one contiguous 5-10 s zone of a
chunk with short linear crossfades just inside its edges:

* covered microphone: steep parametric low-pass, low-frequency shelf,
  spectral ripple, low-passed noise floor and ``tanh`` saturation;
* underwater: low-pass with a log-frequency "scoop" dip and a slow
  amplitude wobble.

Spectral shaping is done per STFT bin (see :mod:`.audiocore`). Everything is
seeded: a recipe is a pure function of ``(master_seed, item_id, duration)``
and applying it is a pure function of ``(clip, recipe)``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Union

import numpy as np

from .audiocore import (
    DEFAULT_FFT_SIZE,
    DEFAULT_HOP,
    AudioClip,
    db_to_gain,
    istft,
    loop_to_length,
    peak_normalize,
    rms,
    stft,
)
from .errors import BadConfig, RateMismatch, SilentNoise, ZoneOutOfRange
from .hashing import item_hash

OUTPUT_PEAK_DBFS = -1.0
MIN_ZONE_S = 5.0
MAX_ZONE_S = 10.0
SHELF_EDGE_HZ = 240.0

Range = tuple[float, float]


# ---------------------------------------------------------------------------
# Parameter types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoveredMicParams:
    fc_hz: float
    slope_p: float
    lf_boost_db: float = 0.0
    ripple_period_hz: float = 850.0
    ripple_depth: float = 0.15
    # None disables the noise floor
    noise_level_dbfs: float | None = -40.0
    clip_drive: float = 1.8

    kind = "covered_mic"

    def __post_init__(self) -> None:
        if self.fc_hz <= 0 or self.slope_p <= 0:
            raise BadConfig("fc_hz and slope_p must be positive")
        if self.clip_drive <= 0:
            raise BadConfig("clip_drive must be positive")
        if not 0.0 <= self.ripple_depth <= 1.0:
            raise BadConfig("ripple_depth must lie in [0, 1]")


@dataclass(frozen=True)
class UnderwaterParams:
    fc_hz: float
    slope_p: float = 8.0
    scoop_db: float = -9.0
    scoop_center_hz: float = 1500.0
    scoop_q: float = 2.2
    wobble_hz: float = 0.35
    wobble_depth: float = 0.3

    kind = "underwater"

    def __post_init__(self) -> None:
        if self.fc_hz <= 0 or self.slope_p <= 0:
            raise BadConfig("fc_hz and slope_p must be positive")
        if self.scoop_db > 0:
            raise BadConfig("scoop_db must be <= 0")
        if self.scoop_q <= 0 or self.wobble_hz <= 0:
            raise BadConfig("scoop_q and wobble_hz must be positive")
        if not 0.0 <= self.wobble_depth <= 1.0:
            raise BadConfig("wobble_depth must lie in [0, 1]")


EffectParams = Union[CoveredMicParams, UnderwaterParams]


@dataclass(frozen=True)
class DegradedZone:
    start_s: float
    end_s: float

    def __post_init__(self) -> None:
        if self.start_s < 0 or self.end_s <= self.start_s:
            raise ZoneOutOfRange(f"invalid zone [{self.start_s}, {self.end_s}]")

    @property
    def length_s(self) -> float:
        return self.end_s - self.start_s


@dataclass(frozen=True)
class AugmentRecipe:
    effect: EffectParams
    zone: DegradedZone
    seed: int
    crossfade_s: float = 0.05

    @property
    def effect_kind(self) -> str:
        return self.effect.kind

    def to_dict(self) -> dict:
        return {
            "effect": self.effect.kind,
            "params": asdict(self.effect),
            "zone": {"start_s": self.zone.start_s, "end_s": self.zone.end_s},
            "seed": self.seed,
            "crossfade_s": self.crossfade_s,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AugmentRecipe":
        kinds = {"covered_mic": CoveredMicParams, "underwater": UnderwaterParams}
        try:
            params = kinds[d["effect"]](**d["params"])
            zone = DegradedZone(**d["zone"])
            return cls(params, zone, int(d["seed"]), float(d.get("crossfade_s", 0.05)))
        except (KeyError, TypeError) as exc:
            raise BadConfig(f"malformed recipe: {exc}") from exc


@dataclass(frozen=True)
class AugmentRanges:
    """Sampling ranges for recipe parameters; ``(x, x)`` pins a value."""

    covered_fc_hz: Range = (600.0, 2000.0)
    covered_slope_p: Range = (4.0, 10.0)
    covered_lf_boost_db: Range = (0.0, 8.0)
    covered_ripple_period_hz: Range = (850.0, 850.0)
    covered_ripple_depth: Range = (0.15, 0.15)
    covered_noise_level_dbfs: Range = (-48.0, -35.0)
    covered_clip_drive: Range = (1.8, 1.8)
    underwater_fc_hz: Range = (800.0, 1200.0)
    underwater_slope_p: Range = (8.0, 8.0)
    underwater_scoop_db: Range = (-14.0, -4.0)
    underwater_scoop_center_hz: Range = (1500.0, 1500.0)
    underwater_scoop_q: Range = (2.2, 2.2)
    underwater_wobble_hz: Range = (0.35, 0.35)
    underwater_wobble_depth: Range = (0.3, 0.3)
    covered_probability: float = 0.5
    crossfade_s: float = 0.05

    def __post_init__(self) -> None:
        for name, value in asdict(self).items():
            if isinstance(value, (tuple, list)):
                lo, hi = value
                if lo > hi:
                    raise BadConfig(f"{name}: low {lo} > high {hi}")
                object.__setattr__(self, name, (float(lo), float(hi)))
        if not 0.0 <= self.covered_probability <= 1.0:
            raise BadConfig("covered_probability must lie in [0, 1]")

    @classmethod
    def from_dict(cls, d: dict) -> "AugmentRanges":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise BadConfig(f"unknown augment range keys: {sorted(unknown)}")
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in d.items()})


DEFAULT_RANGES = AugmentRanges()


# ---------------------------------------------------------------------------
# Recipe sampling
# ---------------------------------------------------------------------------


def sample_zone(rng: np.random.Generator, duration_s: float) -> DegradedZone:
    if duration_s < MIN_ZONE_S:
        return DegradedZone(0.0, duration_s)
    length = rng.uniform(MIN_ZONE_S, min(MAX_ZONE_S, duration_s))
    start = rng.uniform(0.0, duration_s - length)
    return DegradedZone(start, start + length)


def sample_recipe(
    master_seed: int,
    item_id: str,
    clip_duration_s: float,
    ranges: AugmentRanges = DEFAULT_RANGES,
) -> AugmentRecipe:
    """Draw a fully resolved recipe for one item.

    Draw order is fixed (effect, parameters in field order, zone length,
    zone start) so recipes are reproducible from the seed alone.
    """
    if clip_duration_s <= 0:
        raise BadConfig("clip duration must be positive")
    seed = item_hash(master_seed, item_id)
    rng = np.random.default_rng(seed)
    u = lambda r: float(rng.uniform(r[0], r[1]))  # noqa: E731

    if rng.random() < ranges.covered_probability:
        effect: EffectParams = CoveredMicParams(
            fc_hz=u(ranges.covered_fc_hz),
            slope_p=u(ranges.covered_slope_p),
            lf_boost_db=u(ranges.covered_lf_boost_db),
            ripple_period_hz=u(ranges.covered_ripple_period_hz),
            ripple_depth=u(ranges.covered_ripple_depth),
            noise_level_dbfs=u(ranges.covered_noise_level_dbfs),
            clip_drive=u(ranges.covered_clip_drive),
        )
    else:
        effect = UnderwaterParams(
            fc_hz=u(ranges.underwater_fc_hz),
            slope_p=u(ranges.underwater_slope_p),
            scoop_db=u(ranges.underwater_scoop_db),
            scoop_center_hz=u(ranges.underwater_scoop_center_hz),
            scoop_q=u(ranges.underwater_scoop_q),
            wobble_hz=u(ranges.underwater_wobble_hz),
            wobble_depth=u(ranges.underwater_wobble_depth),
        )
    zone = sample_zone(rng, clip_duration_s)
    return AugmentRecipe(effect, zone, seed, ranges.crossfade_s)


# ---------------------------------------------------------------------------
# Spectral curves
# ---------------------------------------------------------------------------


def lowpass_gain(f_hz, fc_hz: float, slope_p: float):
    """Per-bin magnitude gain ``1 / (1 + (f / fc) ** p)``."""
    f = np.asarray(f_hz, dtype=np.float64)
    with np.errstate(over="ignore"):
        g = 1.0 / (1.0 + (f / fc_hz) ** slope_p)
    return float(g) if g.ndim == 0 else g


def lf_shelf_gain(f_hz: np.ndarray, boost_db: float, edge_hz: float = SHELF_EDGE_HZ) -> np.ndarray:
    # full boost at DC, fading linearly in dB to unity at edge_hz
    f = np.asarray(f_hz, dtype=np.float64)
    db = boost_db * np.clip(1.0 - f / edge_hz, 0.0, 1.0)
    return 10.0 ** (db / 20.0)


def ripple_gain(f_hz: np.ndarray, period_hz: float, depth: float) -> np.ndarray:
    f = np.asarray(f_hz, dtype=np.float64)
    return np.maximum(0.0, 1.0 + depth * np.sin(2.0 * np.pi * f / period_hz))


def scoop_gain(f_hz, center_hz: float, q: float, depth_db: float):
    """Gaussian dip in log-frequency: ``depth_db`` at ``center_hz``, bandwidth ``center/q``."""
    f = np.asarray(f_hz, dtype=np.float64)
    with np.errstate(divide="ignore"):
        octaves = np.log(f / center_hz) * q / math.log(2.0)
    shape = np.exp(-(octaves**2))  # exp(-inf) = 0 at DC
    g = 10.0 ** (depth_db / 20.0 * shape)
    return float(g) if g.ndim == 0 else g


def covered_mic_curve(f_hz: np.ndarray, params: CoveredMicParams) -> np.ndarray:
    return (
        lowpass_gain(f_hz, params.fc_hz, params.slope_p)
        * lf_shelf_gain(f_hz, params.lf_boost_db)
        * ripple_gain(f_hz, params.ripple_period_hz, params.ripple_depth)
    )


def underwater_curve(f_hz: np.ndarray, params: UnderwaterParams) -> np.ndarray:
    return lowpass_gain(f_hz, params.fc_hz, params.slope_p) * scoop_gain(
        f_hz, params.scoop_center_hz, params.scoop_q, params.scoop_db
    )


def wobble_envelope(t_s: np.ndarray, rate_hz: float, depth: float) -> np.ndarray:
    return 1.0 - depth * (0.5 + 0.5 * np.sin(2.0 * np.pi * rate_hz * np.asarray(t_s)))


# ---------------------------------------------------------------------------
# Primitive effects
# ---------------------------------------------------------------------------


def shape_spectrum(
    clip: AudioClip,
    curve: Callable[[np.ndarray], np.ndarray],
    fft_size: int = DEFAULT_FFT_SIZE,
    hop: int = DEFAULT_HOP,
) -> AudioClip:
    spec = stft(clip, fft_size, hop)
    gains = curve(spec.frequencies())
    return istft(spec.with_frames(spec.frames * gains[np.newaxis, :]), len(clip))


def shaped_noise(
    n_samples: int,
    sample_rate_hz: int,
    fc_hz: float,
    slope_p: float,
    level_dbfs: float,
    seed: int,
) -> AudioClip:
    """White Gaussian noise low-passed by :func:`lowpass_gain`, peak at ``level_dbfs``."""
    if n_samples <= 0:
        raise BadConfig("n_samples must be positive")
    rng = np.random.default_rng(seed)
    white = rng.standard_normal(n_samples)
    spectrum = np.fft.rfft(white)
    freqs = np.fft.rfftfreq(n_samples, d=1.0 / sample_rate_hz)
    coloured = np.fft.irfft(spectrum * lowpass_gain(freqs, fc_hz, slope_p), n=n_samples)
    peak = np.max(np.abs(coloured))
    if peak == 0.0:
        return AudioClip(coloured, sample_rate_hz)
    return AudioClip(coloured * (db_to_gain(level_dbfs) / peak), sample_rate_hz)


def soft_clip(clip: AudioClip, drive: float = 1.8) -> AudioClip:
    if drive <= 0:
        raise BadConfig("drive must be positive")
    return clip.with_samples(np.tanh(drive * clip.samples))


def mix_background_noise(clip: AudioClip, noise: AudioClip, snr_db: float) -> AudioClip:
    """Add ``noise`` (looped to length) scaled to the requested RMS-based SNR."""
    if clip.sample_rate_hz != noise.sample_rate_hz:
        raise RateMismatch(f"{clip.sample_rate_hz} Hz vs {noise.sample_rate_hz} Hz")
    if len(clip) == 0:
        return clip
    looped = loop_to_length(noise.samples, len(clip))
    noise_rms = rms(looped)
    if noise_rms == 0.0:
        raise SilentNoise("background noise is silent")
    gain = rms(clip) / (noise_rms * 10.0 ** (snr_db / 20.0))
    return clip.with_samples(clip.samples + gain * looped)


# ---------------------------------------------------------------------------
# Zone processing
# ---------------------------------------------------------------------------


@dataclass
class _ZoneBuffer:
    """Zone samples padded with ``margin`` samples of context on each side."""

    samples: np.ndarray
    margin: int
    zone_offset: int  # index of the zone start inside ``samples``
    region: tuple[int, int]  # [ra, rb) in clip coordinates
    ramp: np.ndarray = field(repr=False)


def _zone_buffer(clip: AudioClip, zone: DegradedZone, crossfade_s: float, margin: int) -> _ZoneBuffer:
    sr = clip.sample_rate_hz
    n = len(clip)
    a = int(round(zone.start_s * sr))
    b = int(round(zone.end_s * sr))
    if a < 0 or b > n or b <= a:
        raise ZoneOutOfRange(f"zone [{zone.start_s}, {zone.end_s}] s outside clip of {clip.duration_s:.3f} s")
    # the fades sit inside the zone so every sample outside it stays dry
    cf = min(int(round(crossfade_s * sr)), (b - a) // 2)
    ra, rb = a, b

    idx = np.arange(ra, rb)
    ramp = np.ones(rb - ra)
    if cf > 0:
        ramp = np.minimum(ramp, (idx - a + 0.5) / cf)
        ramp = np.minimum(ramp, (b - idx - 0.5) / cf)
    ramp = np.clip(ramp, 0.0, 1.0)

    ca, cb = max(0, ra - margin), min(n, rb + margin)
    buf = np.zeros((rb - ra) + 2 * margin)
    left = margin - (ra - ca)
    buf[left : left + (cb - ca)] = clip.samples[ca:cb]
    return _ZoneBuffer(buf, margin, margin + (a - ra), (ra, rb), ramp)


def _process_zone(
    clip: AudioClip,
    zone: DegradedZone,
    crossfade_s: float,
    process: Callable[[AudioClip, int], AudioClip],
    margin: int,
) -> AudioClip:
    zb = _zone_buffer(clip, zone, crossfade_s, margin)
    wet = process(AudioClip(zb.samples, clip.sample_rate_hz), zb.zone_offset).samples
    ra, rb = zb.region
    wet = wet[zb.margin : zb.margin + (rb - ra)]
    out = np.array(clip.samples)
    dry = out[ra:rb]
    out[ra:rb] = (1.0 - zb.ramp) * dry + zb.ramp * wet
    return clip.with_samples(out)


def apply_covered_mic(
    clip: AudioClip,
    params: CoveredMicParams,
    zone: DegradedZone,
    seed: int,
    crossfade_s: float = 0.05,
    fft_size: int = DEFAULT_FFT_SIZE,
    hop: int = DEFAULT_HOP,
) -> AudioClip:
    def process(buf: AudioClip, _zone_offset: int) -> AudioClip:
        shaped = shape_spectrum(buf, lambda f: covered_mic_curve(f, params), fft_size, hop)
        level = params.noise_level_dbfs
        if level is not None and level != -math.inf:
            noise = shaped_noise(len(buf), buf.sample_rate_hz, params.fc_hz, params.slope_p, level, seed)
            shaped = shaped.with_samples(shaped.samples + noise.samples)
        return soft_clip(shaped, params.clip_drive)

    return _process_zone(clip, zone, crossfade_s, process, fft_size)


def apply_underwater(
    clip: AudioClip,
    params: UnderwaterParams,
    zone: DegradedZone,
    seed: int,
    crossfade_s: float = 0.05,
    fft_size: int = DEFAULT_FFT_SIZE,
    hop: int = DEFAULT_HOP,
) -> AudioClip:
    def process(buf: AudioClip, zone_offset: int) -> AudioClip:
        shaped = shape_spectrum(buf, lambda f: underwater_curve(f, params), fft_size, hop)
        t = (np.arange(len(buf)) - zone_offset) / buf.sample_rate_hz
        return shaped.with_samples(shaped.samples * wobble_envelope(t, params.wobble_hz, params.wobble_depth))

    # seed is unused: the underwater chain has no stochastic stage
    return _process_zone(clip, zone, crossfade_s, process, fft_size)


def apply_recipe(clip: AudioClip, recipe: AugmentRecipe, **stft_kw) -> AudioClip:
    """Apply the recipe's effect to its zone, without the final normalization."""
    if isinstance(recipe.effect, CoveredMicParams):
        return apply_covered_mic(clip, recipe.effect, recipe.zone, recipe.seed, recipe.crossfade_s, **stft_kw)
    return apply_underwater(clip, recipe.effect, recipe.zone, recipe.seed, recipe.crossfade_s, **stft_kw)


def augment_chunk(clip: AudioClip, recipe: AugmentRecipe, **stft_kw) -> AudioClip:
    """Degrade the recipe zone, then peak-normalize the whole chunk to -1 dBFS."""
    return peak_normalize(apply_recipe(clip, recipe, **stft_kw), OUTPUT_PEAK_DBFS)
