"""Band-pass filtering and spectral estimation.

The preprocessing band-pass is a linear-phase windowed-sinc FIR applied
forward and backward (zero net phase). Spectral estimates use Welch's
averaged-periodogram method with one-second Hann segments at 50% overlap,
and band powers integrate the density with the rectangle rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal as sp_signal

from .data import CANONICAL_FS

# Hamming-window design rule: transition width ~ 3.3 / N (normalized).
_HAMMING_FACTOR = 3.3


@dataclass(frozen=True)
class BandDefinition:
    name: str
    low: float
    high: float
    include_upper: bool = False


# Standard band taxonomy; the top band is capped at the filter's upper edge.
BANDS = (
    BandDefinition("delta", 0.5, 4.0),
    BandDefinition("theta", 4.0, 7.0),
    BandDefinition("alpha", 8.0, 12.0),
    BandDefinition("beta", 13.0, 30.0),
    BandDefinition("gamma", 30.0, 45.0, include_upper=True),
)
BAND_BY_NAME = {b.name: b for b in BANDS}


@dataclass(frozen=True)
class FirFilter:
    """Linear-phase band-pass taps plus the design that produced them."""

    taps: np.ndarray
    low: float
    high: float
    trans_low: float
    trans_high: float
    fs: float


def _odd(n: float) -> int:
    n = int(math.ceil(n))
    return n if n % 2 == 1 else n + 1


def _windowed_sinc_lowpass(cutoff_hz: float, ntaps: int, fs: float) -> np.ndarray:
    m = np.arange(ntaps) - (ntaps - 1) / 2.0
    h = (2.0 * cutoff_hz / fs) * np.sinc(2.0 * cutoff_hz / fs * m) * np.hamming(ntaps)
    return h / h.sum()  # unit DC gain


def design_bandpass(low: float = 1.0, high: float = 45.0,
                    fs: float = CANONICAL_FS) -> FirFilter:
    """Windowed-sinc FIR band-pass with per-edge transition widths.

    Transition widths follow the usual quarter-of-the-edge rule clamped to
    [2 Hz, edge] on the low side and to the room below Nyquist on the high
    side (1 Hz and 11.25 Hz for the canonical 1-45 Hz band). The low-edge
    cutoff sits at the band edge itself so that everything below half the
    transition width is fully in the stopband; the high-edge transition
    starts at the band edge so the passband is flat through it. Each edge is
    realized by its own Hamming-windowed sinc prototype (odd length from the
    standard width rule) and the two are convolved.
    """
    if not 0.0 < low < high < fs / 2.0:
        raise ValueError("band edges must satisfy 0 < low < high < fs/2")
    trans_low = min(max(0.25 * low, 2.0), low)
    trans_high = min(max(0.25 * high, 2.0), fs / 2.0 - high)
    n_low = _odd(_HAMMING_FACTOR * fs / trans_low)
    n_high = _odd(_HAMMING_FACTOR * fs / trans_high)
    lowpass_low = _windowed_sinc_lowpass(low, n_low, fs)
    highpass = -lowpass_low
    highpass[(n_low - 1) // 2] += 1.0  # spectral inversion; exact zero DC gain
    lowpass_high = _windowed_sinc_lowpass(high + trans_high / 2.0, n_high, fs)
    taps = np.convolve(highpass, lowpass_high)
    return FirFilter(taps, low, high, trans_low, trans_high, fs)


def filtfilt(x: np.ndarray, fir: FirFilter) -> np.ndarray:
    """Forward-backward filtering with reflective padding of one filter length.

    The taps are symmetric, so two centered convolutions equal one forward
    and one time-reversed pass; the output has zero net phase shift and the
    input's length.
    """
    x = np.asarray(x)
    n = x.shape[-1]
    pad = fir.taps.size
    if n <= 3 * pad:
        raise ValueError(f"signal length {n} must exceed 3x the filter length "
                         f"({3 * pad})")
    left = x[..., 1 : pad + 1][..., ::-1]
    right = x[..., -pad - 1 : -1][..., ::-1]
    padded = np.concatenate([left, x, right], axis=-1)
    taps = fir.taps.reshape((1,) * (x.ndim - 1) + (-1,)).astype(np.float64)
    once = sp_signal.oaconvolve(padded.astype(np.float64), taps, mode="same", axes=-1)
    twice = sp_signal.oaconvolve(once, taps, mode="same", axes=-1)
    return twice[..., pad : pad + n].astype(x.dtype)


@dataclass
class PsdEstimate:
    """One-sided power spectral density per channel (uV^2/Hz)."""

    frequencies: np.ndarray  # (n_freqs,)
    power: np.ndarray        # (channels, n_freqs)
    segment: int
    overlap: float
    window: str

    @property
    def df(self) -> float:
        return float(self.frequencies[1] - self.frequencies[0])


def welch_psd(x: np.ndarray, fs: float = CANONICAL_FS, segment: int = 250,
              overlap: float = 0.5, window: str = "hann") -> PsdEstimate:
    """Averaged modified periodograms with window power normalization.

    Per-segment mean removal makes the rectangle-rule integral of the
    density over [0, fs/2] track the signal variance (Parseval).
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[-1] < segment:
        raise ValueError(f"need at least {segment} samples, got {x.shape[-1]}")
    freqs, power = sp_signal.welch(x, fs=fs, window=window, nperseg=segment,
                                   noverlap=int(round(segment * overlap)),
                                   detrend="constant", scaling="density", axis=-1)
    return PsdEstimate(freqs, power, segment, overlap, window)


def epochs_psd(epochs: np.ndarray, fs: float = CANONICAL_FS) -> PsdEstimate:
    """Per-channel PSD of an (n_epochs, channels, samples) stack.

    Each epoch contributes one full-length periodogram; the estimate is the
    average over epochs, so segment boundaries never span epochs.
    """
    n_epochs, n_ch, samples = epochs.shape
    flat = epochs.reshape(n_epochs * n_ch, samples)
    est = welch_psd(flat, fs=fs, segment=samples)
    power = est.power.reshape(n_epochs, n_ch, -1).mean(axis=0)
    return PsdEstimate(est.frequencies, power, samples, 0.0, est.window)


def band_power(psd: PsdEstimate, band: BandDefinition) -> np.ndarray:
    """Rectangle-rule integral of the density over the band, per channel."""
    f = psd.frequencies
    if band.include_upper:
        mask = (f >= band.low) & (f <= band.high)
    else:
        mask = (f >= band.low) & (f < band.high)
    if not mask.any():
        raise ValueError(f"band {band.name} does not intersect the frequency grid")
    return psd.power[:, mask].sum(axis=1) * psd.df
