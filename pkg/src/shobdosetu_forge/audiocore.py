"""Mono audio container, WAV I/O, STFT/ISTFT and amplitude helpers.

Every DSP routine in the toolkit goes through :class:`AudioClip` and the
STFT pair defined here. Clips are immutable values: operations return new
clips and never touch their inputs.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .errors import (
    BadConfig,
    IoFailure,
    MultiChannel,
    NotFound,
    RateMismatch,
    SilentInputWarning,
    UnsupportedEncoding,
)

PCM16_SCALE = 32768.0

DEFAULT_FFT_SIZE = 1024
DEFAULT_HOP = 256


@dataclass(frozen=True, eq=False)
class AudioClip:
    """Mono float64 samples (nominal range [-1, 1]) at ``sample_rate_hz``."""

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self) -> None:
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.ndim != 1:
            raise MultiChannel(f"expected a 1-D mono buffer, got shape {arr.shape}")
        if int(self.sample_rate_hz) <= 0:
            raise BadConfig(f"sample rate must be positive, got {self.sample_rate_hz}")
        if arr is self.samples or np.shares_memory(arr, self.samples):
            arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "sample_rate_hz", int(self.sample_rate_hz))

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def duration_s(self) -> float:
        return len(self) / self.sample_rate_hz

    @property
    def peak(self) -> float:
        return float(np.max(np.abs(self.samples))) if len(self) else 0.0

    def with_samples(self, samples: np.ndarray) -> "AudioClip":
        return AudioClip(samples, self.sample_rate_hz)

    def slice_seconds(self, start_s: float, end_s: float) -> "AudioClip":
        a = int(round(start_s * self.sample_rate_hz))
        b = int(round(end_s * self.sample_rate_hz))
        return self.with_samples(self.samples[a:b])


class WavEncoding(str, Enum):
    PCM16 = "pcm16"
    FLOAT32 = "float32"


@dataclass(frozen=True)
class WriteInfo:
    """Metadata returned by :func:`write_wav`."""

    path: Path
    encoding: WavEncoding
    n_clipped: int

    @property
    def clipped(self) -> bool:
        return self.n_clipped > 0


def read_wav(path: str | Path) -> AudioClip:
    path = Path(path)
    if not path.is_file():
        raise NotFound(f"no such WAV file: {path}")
    try:
        with warnings.catch_warnings():
            # unknown chunks (LIST, fact, ...) are harmless
            warnings.simplefilter("ignore", wavfile.WavFileWarning)
            rate, data = wavfile.read(path)
    except ValueError as exc:
        raise UnsupportedEncoding(f"{path}: {exc}") from exc
    if data.ndim != 1:
        raise MultiChannel(f"{path}: {data.shape[1]} channels, expected 1")
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / PCM16_SCALE
    elif data.dtype == np.float32:
        samples = data.astype(np.float64)
    else:
        raise UnsupportedEncoding(f"{path}: sample type {data.dtype} is not PCM16 or float32")
    return AudioClip(samples, int(rate))


def quantize_pcm16(samples: np.ndarray) -> tuple[np.ndarray, int]:
    """Round to PCM16 codes, clamping (not wrapping) out-of-range values.

    Returns the codes and the number of samples that had to be clamped.
    """
    scaled = np.rint(np.asarray(samples, dtype=np.float64) * PCM16_SCALE)
    over = (scaled > 32767) | (scaled < -32768)
    codes = np.clip(scaled, -32768, 32767).astype(np.int16)
    return codes, int(np.count_nonzero(over))


def write_wav(path: str | Path, clip: AudioClip, encoding: WavEncoding | str = WavEncoding.PCM16) -> WriteInfo:
    path = Path(path)
    encoding = WavEncoding(encoding)
    if encoding is WavEncoding.PCM16:
        data, n_clipped = quantize_pcm16(clip.samples)
    else:
        data, n_clipped = clip.samples.astype(np.float32), 0
    try:
        wavfile.write(path, clip.sample_rate_hz, data)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return WriteInfo(path, encoding, n_clipped)


# ---------------------------------------------------------------------------
# STFT
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Spectrogram:
    """One-sided complex STFT, ``frames[t, k]`` with ``fft_size // 2 + 1`` bins."""

    frames: np.ndarray
    fft_size: int
    hop: int
    sample_rate_hz: int
    window_kind: str = "hann"

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def n_bins(self) -> int:
        return self.fft_size // 2 + 1

    def bin_center_hz(self, k: int | np.ndarray) -> float | np.ndarray:
        return k * self.sample_rate_hz / self.fft_size

    def frequencies(self) -> np.ndarray:
        return np.arange(self.n_bins) * self.sample_rate_hz / self.fft_size

    def with_frames(self, frames: np.ndarray) -> "Spectrogram":
        return Spectrogram(frames, self.fft_size, self.hop, self.sample_rate_hz, self.window_kind)


def hann_window(n: int) -> np.ndarray:
    """Hann window sampled at half-integer points, ``sin^2(pi (i + 0.5) / n)``.

    Same shape and overlap-add behaviour as the textbook periodic Hann, but
    strictly positive at every tap, so the very first sample of a clip still
    has non-zero window weight and can be reconstructed.
    """
    return np.sin(np.pi * (np.arange(n) + 0.5) / n) ** 2


def _check_frame_config(fft_size: int, hop: int) -> None:
    if fft_size <= 0 or hop <= 0:
        raise BadConfig("fft_size and hop must be positive")
    if hop > fft_size or fft_size % hop:
        raise BadConfig(f"hop {hop} must divide fft_size {fft_size}")


def stft(clip: AudioClip, fft_size: int = DEFAULT_FFT_SIZE, hop: int = DEFAULT_HOP) -> Spectrogram:
    """Hann-windowed one-sided STFT with ``ceil(len / hop)`` frames.

    Frame ``t`` covers samples ``[t*hop, t*hop + fft_size)``; the tail is
    zero-padded.
    """
    _check_frame_config(fft_size, hop)
    n = len(clip)
    if n < 1:
        raise BadConfig("cannot transform an empty clip")
    n_frames = -(-n // hop)
    padded = np.zeros((n_frames - 1) * hop + fft_size)
    padded[:n] = clip.samples
    segments = np.lib.stride_tricks.sliding_window_view(padded, fft_size)[::hop]
    frames = np.fft.rfft(segments * hann_window(fft_size), axis=1)
    return Spectrogram(frames, fft_size, hop, clip.sample_rate_hz)


def _overlap_add(blocks: np.ndarray, hop: int) -> np.ndarray:
    # blocks: (n_frames, fft_size), frame t placed at t*hop
    n_frames, fft_size = blocks.shape
    per = fft_size // hop
    out = np.zeros((n_frames + per - 1, hop))
    shaped = blocks.reshape(n_frames, per, hop)
    for j in range(per):
        out[j : j + n_frames] += shaped[:, j, :]
    return out.reshape(-1)


def window_power_sum(n_frames: int, fft_size: int, hop: int) -> np.ndarray:
    """Per-sample sum of squared analysis windows over all frames."""
    w2 = hann_window(fft_size) ** 2
    return _overlap_add(np.broadcast_to(w2, (n_frames, fft_size)), hop)


def istft(spec: Spectrogram, target_len: int) -> AudioClip:
    """Weighted overlap-add inverse of :func:`stft`.

    Each frame is synthesis-windowed and the sum is divided by the per-sample
    squared-window sum, which makes ``istft(stft(x))`` the identity for any
    hop dividing ``fft_size``.
    """
    _check_frame_config(spec.fft_size, spec.hop)
    if spec.frames.ndim != 2 or spec.frames.shape[1] != spec.n_bins:
        raise BadConfig(f"frames must have shape (n, {spec.n_bins})")
    window = hann_window(spec.fft_size)
    blocks = np.fft.irfft(spec.frames, n=spec.fft_size, axis=1) * window
    summed = _overlap_add(blocks, spec.hop)
    norm = window_power_sum(spec.n_frames, spec.fft_size, spec.hop)
    signal = summed / norm
    out = np.zeros(target_len)
    m = min(target_len, signal.shape[0])
    out[:m] = signal[:m]
    return AudioClip(out, spec.sample_rate_hz)


def spectral_energy(spec: Spectrogram) -> float:
    """Signal energy estimated from STFT frames (Parseval with window correction).

    Uses the average squared-window overlap ``3/8 * fft_size / hop``, so it
    matches ``sum(x**2)`` up to edge effects in the first and last frames.
    """
    mag2 = np.abs(spec.frames) ** 2
    weights = np.full(spec.n_bins, 2.0)
    weights[0] = 1.0
    if spec.fft_size % 2 == 0:
        weights[-1] = 1.0
    frame_energy = float(np.sum(mag2 * weights)) / spec.fft_size
    return frame_energy / (0.375 * spec.fft_size / spec.hop)


# ---------------------------------------------------------------------------
# Amplitude helpers
# ---------------------------------------------------------------------------


def db_to_gain(db: float) -> float:
    if db == -math.inf:
        return 0.0
    return 10.0 ** (db / 20.0)


def rms(x: np.ndarray | AudioClip) -> float:
    arr = x.samples if isinstance(x, AudioClip) else np.asarray(x, dtype=np.float64)
    return float(np.sqrt(np.mean(arr**2))) if arr.size else 0.0


def peak_normalize(clip: AudioClip, target_dbfs: float = -1.0) -> AudioClip:
    """Scale so that ``max |x| == 10 ** (target_dbfs / 20)``.

    An all-zero clip is returned unchanged and a :class:`SilentInputWarning`
    is issued.
    """
    peak = clip.peak
    if peak == 0.0:
        warnings.warn("peak_normalize on silent clip; returned unchanged", SilentInputWarning, stacklevel=2)
        return clip
    target = db_to_gain(target_dbfs)
    out = clip.samples * (target / peak)
    # pin the peak exactly so repeated normalization is a no-op
    idx = int(np.argmax(np.abs(out)))
    out[idx] = math.copysign(target, out[idx])
    return clip.with_samples(out)


def loop_to_length(x: np.ndarray, n: int) -> np.ndarray:
    if x.size == 0:
        raise BadConfig("cannot loop an empty buffer")
    reps = -(-n // x.size)
    return np.tile(x, reps)[:n]


def mix(primary: AudioClip, secondary: AudioClip, gain_db: float) -> AudioClip:
    """``primary + 10**(gain_db/20) * secondary`` with ``secondary`` looped/truncated."""
    if primary.sample_rate_hz != secondary.sample_rate_hz:
        raise RateMismatch(f"{primary.sample_rate_hz} Hz vs {secondary.sample_rate_hz} Hz")
    gain = db_to_gain(gain_db)
    if gain == 0.0 or len(primary) == 0:
        return primary
    return primary.with_samples(primary.samples + gain * loop_to_length(secondary.samples, len(primary)))
