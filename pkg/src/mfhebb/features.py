"""Frame- and track-level audio features.

The transform is an in-house iterative radix-2 FFT vectorised over leading
axes, so a whole track's frames go through it in one call. Everything else
(centroid, mel bank, MFCC, tempo, pitch) is built on its magnitude output.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy.fft import dct

from .audio import AudioBuffer, FrameSpec, frame_signal
from .errors import (
    DimensionMismatch,
    FrameTooShort,
    InvalidBand,
    NonPowerOfTwoLength,
    SignalTooShort,
    SilentFrame,
)

log = logging.getLogger(__name__)

LOG_FLOOR = 1e-10
TEMPO_RANGE = (40.0, 200.0)
DEFAULT_TEMPO = 120.0
MIN_TEMPO_SECONDS = 5.0
TEMPO_SMOOTHING_SECONDS = 0.1
TEMPO_TIE_RATIO = 0.9
PITCH_RANGE = (50.0, 2000.0)
VOICING_THRESHOLD = 0.3
PITCH_TIE_RATIO = 0.9


def _is_pow2(n: int) -> bool:
    return n >= 1 and not n & (n - 1)


def _bit_reverse_indices(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.intp)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


def fft(x) -> np.ndarray:
    """Complex DFT along the last axis (length must be a power of two)."""
    x = np.asarray(x, dtype=np.complex128)
    n = x.shape[-1]
    if not _is_pow2(n):
        raise NonPowerOfTwoLength(f"length {n} is not a power of two")
    out = x[..., _bit_reverse_indices(n)]
    lead = out.shape[:-1]
    nxt = np.empty_like(out)
    size = 2
    while size <= n:
        half = size // 2
        blocks = out.reshape(*lead, n // size, size)
        dest = nxt.reshape(*lead, n // size, size)
        even = blocks[..., :half]
        odd = blocks[..., half:] * np.exp(-2j * np.pi * np.arange(half) / size)
        np.add(even, odd, out=dest[..., :half])
        np.subtract(even, odd, out=dest[..., half:])
        out, nxt = nxt, out
        size *= 2
    return out


def rfft(x) -> np.ndarray:
    """One-sided DFT of real input: bins 0..N/2 along the last axis.

    Packs even/odd samples into one complex sequence of half the length,
    transforms it, then separates the two interleaved spectra.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[-1]
    if not _is_pow2(n):
        raise NonPowerOfTwoLength(f"length {n} is not a power of two")
    if n == 1:
        return x.astype(np.complex128)
    m = n // 2
    z = fft(x[..., 0::2] + 1j * x[..., 1::2])
    k = np.arange(m + 1)
    zk = z[..., k % m]
    zr = np.conj(z[..., (m - k) % m])
    evens = 0.5 * (zk + zr)
    odds = -0.5j * (zk - zr)
    return evens + np.exp(-2j * np.pi * k / n) * odds


@dataclass(frozen=True)
class Spectrum:
    magnitudes: np.ndarray
    bin_hz: float

    @property
    def frame_len(self) -> int:
        return 2 * (len(self.magnitudes) - 1)

    @property
    def frequencies(self) -> np.ndarray:
        return np.arange(len(self.magnitudes)) * self.bin_hz


def magnitude_spectrogram(frames) -> np.ndarray:
    """One-sided magnitudes for each row of ``frames``: shape (..., N/2 + 1)."""
    return np.abs(rfft(frames))


def dft_magnitude(frame, sample_rate: float = 1.0) -> Spectrum:
    frame = np.asarray(frame, dtype=np.float64)
    if frame.ndim != 1:
        raise DimensionMismatch(f"expected a 1-D frame, got shape {frame.shape}")
    return Spectrum(magnitude_spectrogram(frame), sample_rate / len(frame))


def zero_crossing_rate(frame) -> float:
    """Fraction of adjacent pairs whose signs differ; zero counts as positive."""
    x = np.asarray(frame, dtype=np.float64)
    if x.ndim != 1 or len(x) < 2:
        raise FrameTooShort("zero-crossing rate needs at least 2 samples")
    nonneg = x >= 0
    return float(np.count_nonzero(nonneg[1:] != nonneg[:-1]) / (len(x) - 1))


def spectral_centroid(spec: Spectrum) -> float:
    mags = np.asarray(spec.magnitudes, dtype=np.float64)
    total = mags.sum()
    if not total > 0:
        raise SilentFrame("spectrum has no energy")
    return float(np.dot(spec.frequencies, mags) / total)


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


@dataclass(frozen=True)
class MelFilterbank:
    weights: np.ndarray  # (n_filters, frame_len/2 + 1)
    f_min: float
    f_max: float
    peaks_hz: np.ndarray

    @property
    def n_filters(self) -> int:
        return self.weights.shape[0]


def build_mel_filterbank(
    n_filters: int = 26,
    frame_len: int = 2048,
    sample_rate: float = 22050,
    f_min: float = 0.0,
    f_max: Optional[float] = None,
) -> MelFilterbank:
    """Triangular filters whose edges are equally spaced in mel.

    Filter ``i`` rises from edge ``i`` to a peak at edge ``i+1`` and falls to
    zero at edge ``i+2``; adjacent triangles overlap so their weights sum to
    one between neighbouring peaks.
    """
    nyquist = sample_rate / 2
    if f_max is None:
        f_max = nyquist
    if n_filters < 2:
        raise InvalidBand(f"need at least 2 filters, got {n_filters}")
    if not 0 <= f_min < f_max <= nyquist:
        raise InvalidBand(f"band [{f_min}, {f_max}] not inside [0, {nyquist}]")
    edges = mel_to_hz(np.linspace(hz_to_mel(f_min), hz_to_mel(f_max), n_filters + 2))
    # pin the band ends so the mel round trip cannot leak weight past them
    edges[0], edges[-1] = f_min, f_max
    freqs = np.arange(frame_len // 2 + 1) * (sample_rate / frame_len)
    lo, mid, hi = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (freqs - lo) / (mid - lo)
    falling = (hi - freqs) / (hi - mid)
    weights = np.maximum(0.0, np.minimum(rising, falling))
    return MelFilterbank(weights=weights, f_min=float(f_min), f_max=float(f_max),
                         peaks_hz=edges[1:-1])


def _mfcc_rows(mags: np.ndarray, bank: MelFilterbank, n_mfcc: int) -> np.ndarray:
    if mags.shape[-1] != bank.weights.shape[1]:
        raise DimensionMismatch(
            f"spectrum has {mags.shape[-1]} bins, filterbank expects {bank.weights.shape[1]}"
        )
    if not 1 <= n_mfcc <= bank.n_filters:
        raise DimensionMismatch(f"n_mfcc={n_mfcc} must be in [1, {bank.n_filters}]")
    energies = mags @ bank.weights.T
    return dct(np.log(energies + LOG_FLOOR), type=2, norm="ortho", axis=-1)[..., :n_mfcc]


def mfcc(spec: Spectrum, bank: MelFilterbank, n_mfcc: int = 13) -> np.ndarray:
    return _mfcc_rows(np.asarray(spec.magnitudes, dtype=np.float64), bank, n_mfcc)


def mfcc_matrix(spectrogram: np.ndarray, bank: MelFilterbank, n_mfcc: int = 13) -> np.ndarray:
    """MFCCs for every frame: (n_frames, n_mfcc)."""
    return _mfcc_rows(np.atleast_2d(spectrogram), bank, n_mfcc)


class TempoEstimate(NamedTuple):
    bpm: float
    periodic: bool  # False means the onset curve was flat and bpm is the default


def onset_strength(spectrogram: np.ndarray) -> np.ndarray:
    """Half-wave rectified spectral flux, one value per frame transition."""
    diff = np.diff(spectrogram, axis=0)
    return np.maximum(diff, 0.0).sum(axis=1)


def _autocorrelate(x: np.ndarray) -> np.ndarray:
    """Linear (non-circular) autocorrelation along the last axis, lags 0..n-1."""
    n = x.shape[-1]
    size = 1 << (2 * n - 1).bit_length()
    padded = np.zeros(x.shape[:-1] + (size,))
    padded[..., :n] = x
    # |X|^2 is real and even, so its forward transform equals size * inverse
    power = np.abs(rfft(padded)) ** 2
    full = np.concatenate((power, power[..., -2:0:-1]), axis=-1)
    return rfft(full).real[..., :n] / size


def _parabolic_peak(y: np.ndarray, i: int) -> tuple[float, float]:
    if i <= 0 or i >= len(y) - 1:
        return float(i), float(y[i])
    a, b, c = y[i - 1], y[i], y[i + 1]
    denom = a - 2 * b + c
    if denom >= 0:
        return float(i), float(b)
    shift = 0.5 * (a - c) / denom
    return i + shift, b - 0.25 * (a - c) * shift


def smooth_onsets(onsets: np.ndarray, frame_rate: float) -> np.ndarray:
    """Convolve with a unit-sum Hann kernel about 100 ms long."""
    taps = max(3, int(round(TEMPO_SMOOTHING_SECONDS * frame_rate)) | 1)
    kernel = np.hanning(taps + 2)[1:-1]
    return np.convolve(onsets, kernel / kernel.sum(), mode="same")


def estimate_tempo(
    buf: AudioBuffer,
    spec: FrameSpec = FrameSpec(),
    default_bpm: float = DEFAULT_TEMPO,
) -> TempoEstimate:
    """Tempo from the strongest onset-autocorrelation peak in 40-200 BPM.

    The autocorrelation of a periodic onset curve repeats at every multiple
    of the beat period, so peaks at T and 2T are near-equal and their order
    is decided by frame quantisation. Peaks are therefore refined to
    sub-frame lag with a parabola, and among those within TEMPO_TIE_RATIO of
    the tallest the shortest lag wins.
    """
    if buf.duration < MIN_TEMPO_SECONDS:
        raise SignalTooShort(
            f"tempo needs at least {MIN_TEMPO_SECONDS:g} s, got {buf.duration:.2f} s"
        )
    frame_rate = buf.sample_rate / spec.hop
    onsets = onset_strength(magnitude_spectrogram(frame_signal(buf, spec)))
    onsets = smooth_onsets(onsets - onsets.mean(), frame_rate)
    scale = float(np.abs(onsets).max(initial=0.0))
    if scale == 0.0:
        log.warning("flat onset curve; falling back to %g BPM", default_bpm)
        return TempoEstimate(default_bpm, False)

    acf = _autocorrelate(onsets / scale)
    lo_bpm, hi_bpm = TEMPO_RANGE
    lag_lo = max(2, math.floor(60.0 * frame_rate / hi_bpm) - 1)
    lag_hi = min(len(acf) - 2, math.ceil(60.0 * frame_rate / lo_bpm) + 1)
    peaks = []
    for lag in range(lag_lo, lag_hi + 1):
        if acf[lag] >= acf[lag - 1] and acf[lag] > acf[lag + 1]:
            pos, height = _parabolic_peak(acf, lag)
            bpm = 60.0 * frame_rate / pos
            # a peak sitting on the range edge may refine slightly past it
            if 0.99 * lo_bpm <= bpm <= 1.01 * hi_bpm and height > 0:
                peaks.append((pos, height, min(max(bpm, lo_bpm), hi_bpm)))
    if not peaks:
        log.warning("no autocorrelation peak in tempo range; falling back to %g BPM", default_bpm)
        return TempoEstimate(default_bpm, False)
    tallest = max(h for _, h, _ in peaks)
    pos, _, bpm = min(p for p in peaks if p[1] >= TEMPO_TIE_RATIO * tallest)
    return TempoEstimate(float(bpm), True)


def pitch_lag_range(sample_rate: float) -> tuple[int, int]:
    return (max(1, math.ceil(sample_rate / PITCH_RANGE[1])),
            math.floor(sample_rate / PITCH_RANGE[0]))


def _normalized_acf(frames: np.ndarray) -> np.ndarray:
    """r(lag) / r(0) per row; rows with no energy come back as all zeros."""
    acf = _autocorrelate(frames)
    energy = acf[..., :1]
    safe = np.where(energy > 0, energy, 1.0)
    return np.where(energy > 0, acf / safe, 0.0)


def _check_pitch_frame(n: int, sample_rate: float) -> None:
    need = math.ceil(2 * sample_rate / PITCH_RANGE[0])
    if n < need:
        raise FrameTooShort(f"pitch frame needs {need} samples at {sample_rate} Hz, got {n}")


def pitch_track(frames: np.ndarray, sample_rate: float) -> np.ndarray:
    """Per-frame pitch in Hz, NaN where unvoiced.

    The search skips the lobe around lag zero (everything before the first
    local minimum of the autocorrelation); otherwise low tones report the
    shortest allowed lag.
    """
    frames = np.atleast_2d(np.asarray(frames, dtype=np.float64))
    _check_pitch_frame(frames.shape[-1], sample_rate)
    lo, hi = pitch_lag_range(sample_rate)
    r = _normalized_acf(frames)
    rising = np.diff(r[:, : hi + 2], axis=1) >= 0
    lobe_end = np.where(rising.any(axis=1), np.argmax(rising, axis=1), hi + 1)
    lags = np.arange(lo, hi + 1)
    window = np.where(lags[None, :] >= lobe_end[:, None], r[:, lo:hi + 1], -np.inf)
    peak = window.max(axis=1)
    # a period that falls between integer lags can score below its double;
    # take the shortest local peak close to the tallest one
    padded = np.pad(window, ((0, 0), (1, 1)), constant_values=-np.inf)
    local = (window >= padded[:, :-2]) & (window >= padded[:, 2:]) & np.isfinite(window)
    near = local & (window >= PITCH_TIE_RATIO * peak[:, None])
    best = np.where(near.any(axis=1), np.argmax(near, axis=1), np.argmax(window, axis=1))
    return np.where(peak >= VOICING_THRESHOLD, sample_rate / (best + lo), np.nan)


def estimate_pitch(frame, sample_rate: float) -> Optional[float]:
    """Autocorrelation pitch in [50, 2000] Hz, or None when unvoiced."""
    frame = np.asarray(frame, dtype=np.float64)
    if frame.ndim != 1:
        raise DimensionMismatch(f"expected a 1-D frame, got shape {frame.shape}")
    hz = pitch_track(frame[None, :], sample_rate)[0]
    return None if np.isnan(hz) else float(hz)


@dataclass
class TrackFeatures:
    """Per-frame feature matrices for one track.

    ``centroid`` is NaN on silent frames and ``pitch`` is NaN on unvoiced ones.
    """

    zcr: np.ndarray
    centroid: np.ndarray
    mfcc: np.ndarray
    pitch: np.ndarray
    tempo: TempoEstimate

    @property
    def n_frames(self) -> int:
        return len(self.zcr)


def analyze_track(
    buf: AudioBuffer,
    spec: FrameSpec = FrameSpec(),
    n_mels: int = 26,
    n_mfcc: int = 13,
    f_min: float = 0.0,
    f_max: Optional[float] = None,
    bank: Optional[MelFilterbank] = None,
) -> TrackFeatures:
    if bank is None:
        bank = build_mel_filterbank(n_mels, spec.frame_len, buf.sample_rate, f_min, f_max)
    raw = frame_signal(buf, FrameSpec(spec.frame_len, spec.hop, "rectangular"))
    windowed = raw * spec.window_coefficients()
    mags = magnitude_spectrogram(windowed)

    nonneg = raw >= 0
    zcr = np.count_nonzero(nonneg[:, 1:] != nonneg[:, :-1], axis=1) / (spec.frame_len - 1)
    totals = mags.sum(axis=1)
    freqs = np.arange(mags.shape[1]) * (buf.sample_rate / spec.frame_len)
    with np.errstate(invalid="ignore", divide="ignore"):
        centroid = np.where(totals > 0, mags @ freqs / np.where(totals > 0, totals, 1.0), np.nan)

    return TrackFeatures(
        zcr=zcr,
        centroid=centroid,
        mfcc=mfcc_matrix(mags, bank, n_mfcc),
        pitch=pitch_track(raw, buf.sample_rate),
        tempo=estimate_tempo(buf, spec),
    )
