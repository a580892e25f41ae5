"""Spectral feature pipeline and its inverse.

Forward path: STFT -> mel filterbank -> decibel scaling -> DCT-II (MFCC),
plus bilinear resize and min-max normalization for fixed-size model inputs.
Inverse path: approximate mel inversion and Griffin-Lim phase recovery so a
predicted spectrogram can be rendered back to a waveform.

All operations are pure and deterministic; float64 is used internally for
the transforms, feature tensors are cast to float32 at the file boundary.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .audio_io import AudioClip
from .errors import BadRange, EmptySignal, ShapeMismatch, ValueOutOfRange

# scale tags
LINEAR_POWER = "linear_power"
MEL_POWER = "mel_power"
DECIBEL = "decibel"
NORMALIZED = "normalized"

DEFAULT_N_FFT = 1024
DEFAULT_HOP = 256
DEFAULT_N_MELS = 128
DEFAULT_FMIN = 0.0
DEFAULT_FMAX = 8000.0
DEFAULT_N_MFCC = 13
DB_TOP = 80.0


@dataclass(frozen=True)
class StftParams:
    n_fft: int = DEFAULT_N_FFT
    hop: int = DEFAULT_HOP
    window: str = "hann"

    def __post_init__(self):
        if self.n_fft < 2 or (self.n_fft & (self.n_fft - 1)) != 0:
            raise BadRange(f"n_fft must be a power of two >= 2, got {self.n_fft}")
        if not 0 < self.hop <= self.n_fft:
            raise BadRange(f"hop must satisfy 0 < hop <= n_fft, got {self.hop}")
        if self.window != "hann":
            raise BadRange(f"unsupported window {self.window!r}")

    @property
    def n_bins(self) -> int:
        return self.n_fft // 2 + 1


@dataclass
class Spectrogram:
    """2-D time-frequency grid [n_bins x n_frames] tagged with its scale."""

    data: np.ndarray
    scale: str
    params: StftParams
    sample_rate: int
    n_mels: Optional[int] = None

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2:
            raise ShapeMismatch("spectrogram data must be 2-D")
        if self.scale in (LINEAR_POWER, MEL_POWER) and self.data.size \
                and np.min(self.data) < 0:
            raise ValueOutOfRange(f"{self.scale} spectrogram has negative cells")
        if self.scale == NORMALIZED and self.data.size \
                and (np.min(self.data) < 0 or np.max(self.data) > 1):
            raise ValueOutOfRange("normalized spectrogram outside [0, 1]")


def hann_window(n_fft: int) -> np.ndarray:
    """Periodic Hann window (the DFT-friendly variant)."""
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n_fft) / n_fft)


def _stft_core(x: np.ndarray, p: StftParams) -> np.ndarray:
    """STFT of a bare float array (no amplitude-range policing)."""
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        raise EmptySignal("cannot transform an empty clip")
    if x.size < p.n_fft:
        x = np.concatenate([x, np.zeros(p.n_fft - x.size)])
    pad = p.n_fft // 2
    x = np.pad(x, pad, mode="reflect")
    n_frames = 1 + int(np.ceil((x.size - p.n_fft) / p.hop))
    cover = (n_frames - 1) * p.hop + p.n_fft
    if cover > x.size:  # zero-fill so the last frame covers the tail
        x = np.concatenate([x, np.zeros(cover - x.size)])
    idx = np.arange(p.n_fft)[None, :] + p.hop * np.arange(n_frames)[:, None]
    frames = x[idx] * hann_window(p.n_fft)[None, :]
    return np.fft.rfft(frames, axis=1).T


def stft(clip: AudioClip, p: StftParams = StftParams()) -> np.ndarray:
    """Complex STFT [n_fft/2+1 x n_frames], center-aligned with reflect padding."""
    return _stft_core(clip.samples, p)


def istft(spec: np.ndarray, p: StftParams = StftParams(),
          length: Optional[int] = None) -> np.ndarray:
    """Overlap-add inverse with window-square normalization.

    Default output length is (n_frames - 1) * hop, the length stft() maps
    onto this frame count when hop divides the signal length.
    """
    spec = np.asarray(spec)
    if spec.ndim != 2 or spec.shape[0] != p.n_bins:
        raise ShapeMismatch(f"expected [{p.n_bins} x n_frames] spectrogram")
    n_frames = spec.shape[1]
    win = hann_window(p.n_fft)
    frames = np.fft.irfft(spec.T, n=p.n_fft, axis=1) * win[None, :]
    total = (n_frames - 1) * p.hop + p.n_fft
    y = np.zeros(total)
    norm = np.zeros(total)
    wsq = win * win
    for t in range(n_frames):
        start = t * p.hop
        y[start:start + p.n_fft] += frames[t]
        norm[start:start + p.n_fft] += wsq
    covered = norm > 1e-10
    y[covered] /= norm[covered]
    pad = p.n_fft // 2
    y = y[pad:total - pad]
    if length is None:
        length = (n_frames - 1) * p.hop
    if length <= y.size:
        return y[:length]
    return np.concatenate([y, np.zeros(length - y.size)])


def hz_to_mel(f):
    """HTK mel scale: 2595 * log10(1 + f/700)."""
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(n_mels: int, n_fft: int, sample_rate: int,
                   fmin: float = DEFAULT_FMIN, fmax: float = DEFAULT_FMAX) -> np.ndarray:
    """Unit-peak triangular filters [n_mels x (n_fft/2+1)].

    Peak frequencies sit at n_mels points equally spaced on the mel axis
    strictly between mel(fmin) and mel(fmax); each triangle's feet are its
    neighbours' peaks.
    """
    if n_mels < 2:
        raise BadRange(f"n_mels must be >= 2, got {n_mels}")
    if not (0 <= fmin < fmax <= sample_rate / 2):
        raise BadRange(f"need 0 <= fmin < fmax <= sr/2, got [{fmin}, {fmax}] at sr {sample_rate}")
    anchors_hz = mel_to_hz(np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_mels + 2))
    bin_hz = np.arange(n_fft // 2 + 1) * (sample_rate / n_fft)
    lower = anchors_hz[:-2, None]
    peak = anchors_hz[1:-1, None]
    upper = anchors_hz[2:, None]
    rising = (bin_hz[None, :] - lower) / (peak - lower)
    falling = (upper - bin_hz[None, :]) / (upper - peak)
    return np.maximum(0.0, np.minimum(rising, falling))


def mel_spectrogram(clip: AudioClip, p: StftParams = StftParams(),
                    n_mels: int = DEFAULT_N_MELS, fmin: float = DEFAULT_FMIN,
                    fmax: float = DEFAULT_FMAX) -> Spectrogram:
    """Mel-power spectrogram: filterbank applied to |STFT|^2."""
    power = np.abs(stft(clip, p)) ** 2
    fb = mel_filterbank(n_mels, p.n_fft, clip.sample_rate, fmin, fmax)
    return Spectrogram(data=fb @ power, scale=MEL_POWER, params=p,
                       sample_rate=clip.sample_rate, n_mels=n_mels)


def amplitude_to_db(s: Spectrogram, top_db: float = DB_TOP) -> Spectrogram:
    """Power to decibels relative to the grid maximum, floored at -top_db."""
    if s.scale not in (LINEAR_POWER, MEL_POWER):
        raise ValueOutOfRange(f"decibel scaling expects a power spectrogram, got {s.scale}")
    v = np.maximum(s.data, 1e-10)
    ref = max(float(np.max(s.data)) if s.data.size else 0.0, 1e-10)
    db = 10.0 * np.log10(v) - 10.0 * np.log10(ref)
    return Spectrogram(data=np.maximum(db, -top_db), scale=DECIBEL, params=s.params,
                       sample_rate=s.sample_rate, n_mels=s.n_mels)


def dct_matrix(n: int) -> np.ndarray:
    """Orthonormal DCT-II matrix [n x n]; rows are basis vectors."""
    k = np.arange(n)[:, None]
    m = np.arange(n)[None, :]
    d = np.sqrt(2.0 / n) * np.cos(np.pi * (2 * m + 1) * k / (2 * n))
    d[0] /= np.sqrt(2.0)
    return d


@dataclass
class MfccMatrix:
    coeffs: np.ndarray  # [n_mfcc x n_frames]
    n_mfcc: int


def mfcc(clip: AudioClip, p: StftParams = StftParams(), n_mels: int = DEFAULT_N_MELS,
         n_mfcc: int = DEFAULT_N_MFCC) -> MfccMatrix:
    """First n_mfcc orthonormal DCT-II coefficients of the dB mel spectrogram."""
    if n_mfcc > n_mels:
        raise BadRange(f"n_mfcc {n_mfcc} exceeds n_mels {n_mels}")
    db = amplitude_to_db(mel_spectrogram(clip, p, n_mels))
    coeffs = dct_matrix(n_mels)[:n_mfcc] @ db.data
    return MfccMatrix(coeffs=coeffs, n_mfcc=n_mfcc)


def resize_bilinear(grid: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Corner-aligned bilinear resize of a 2-D grid; same-size is the identity."""
    g = np.asarray(grid, dtype=np.float64)
    if g.ndim != 2 or g.size == 0:
        raise ShapeMismatch("resize wants a non-empty 2-D grid")
    if out_h < 1 or out_w < 1:
        raise BadRange("output dims must be positive")
    in_h, in_w = g.shape
    if (out_h, out_w) == (in_h, in_w):
        return g.copy()

    def axis_positions(n_out, n_in):
        if n_out == 1 or n_in == 1:
            return np.zeros(n_out)
        return np.arange(n_out) * ((n_in - 1) / (n_out - 1))

    rows = axis_positions(out_h, in_h)
    r0 = np.minimum(np.floor(rows).astype(int), in_h - 1)
    r1 = np.minimum(r0 + 1, in_h - 1)
    fr = (rows - r0)[:, None]
    g = g[r0] * (1 - fr) + g[r1] * fr

    cols = axis_positions(out_w, in_w)
    c0 = np.minimum(np.floor(cols).astype(int), in_w - 1)
    c1 = np.minimum(c0 + 1, in_w - 1)
    fc = (cols - c0)[None, :]
    return g[:, c0] * (1 - fc) + g[:, c1] * fc


def normalize_01(grid: np.ndarray) -> np.ndarray:
    """Min-max rescale to [0, 1]; a constant grid maps to all zeros."""
    g = np.asarray(grid, dtype=np.float64)
    lo, hi = float(np.min(g)), float(np.max(g))
    if hi == lo:
        return np.zeros_like(g)
    return (g - lo) / (hi - lo)


def mel_to_linear(mel_spec, filterbank: np.ndarray):
    """Approximate mel -> linear power inversion.

    Filter-area-compensated transposed projection: each mel band is divided
    by its filter's area, projected through the transposed filterbank, and
    renormalized per bin by the filterbank's column sums; uncovered bins
    (zero column sum) map to 0. Accepts a Spectrogram or a bare
    [n_mels x n_frames] grid. Outputs are always >= 0.
    """
    is_spec = isinstance(mel_spec, Spectrogram)
    data = mel_spec.data if is_spec else np.asarray(mel_spec, dtype=np.float64)
    if data.ndim != 2 or filterbank.ndim != 2 or data.shape[0] != filterbank.shape[0]:
        raise ShapeMismatch(
            f"mel grid {data.shape} does not match filterbank {filterbank.shape}")
    # Unit-peak filters weigh each band by its width, so compensate by the
    # filter areas (row sums) before projecting back; without this the wide
    # high-frequency bands come back scaled by their bandwidth.
    area = filterbank.sum(axis=1)
    banded = np.where(area[:, None] > 0,
                      data / np.maximum(area, 1e-300)[:, None], 0.0)
    colsum = filterbank.sum(axis=0)
    linear = filterbank.T @ banded
    covered = colsum > 0
    linear[covered] /= colsum[covered, None]
    linear[~covered] = 0.0
    if not is_spec:
        return linear
    return Spectrogram(data=linear, scale=LINEAR_POWER, params=mel_spec.params,
                       sample_rate=mel_spec.sample_rate)


def griffin_lim(mag: np.ndarray, p: StftParams = StftParams(), n_iters: int = 32,
                seed: int = 0, sample_rate: int = 16000) -> AudioClip:
    """Classic Griffin-Lim phase recovery from a linear magnitude spectrogram.

    Starts from zero phase (the seed argument is kept for interface stability;
    zero-phase init makes the run deterministic regardless). Peak-normalizes
    only if the synthesized waveform exceeds [-1, 1].
    """
    mag = np.asarray(mag, dtype=np.float64)
    if mag.ndim != 2 or mag.shape[0] != p.n_bins:
        raise ShapeMismatch(f"expected [{p.n_bins} x n_frames] magnitude grid")
    if mag.size and np.min(mag) < 0:
        raise ValueOutOfRange("magnitudes must be non-negative")
    y = istft(mag.astype(np.complex128), p)
    for _ in range(n_iters):
        proj = _stft_core(y, p)
        mags = np.abs(proj)
        phase = np.where(mags > 0, proj / np.maximum(mags, 1e-300), 1.0)
        y = istft(mag * phase, p)
    peak = float(np.max(np.abs(y))) if y.size else 0.0
    if peak > 1.0:
        y = y / peak
    return AudioClip(samples=y.astype(np.float32), sample_rate=sample_rate)
