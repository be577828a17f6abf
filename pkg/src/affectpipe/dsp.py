"""Reusable signal primitives: IIR filters, smoothers, normalizers,
peak detection, and trend fitting.

All operations are pure functions on immutable inputs and preserve signal
length. Filters are Butterworth, applied zero-phase (forward-backward), so
feature timing is never skewed against the annotation clock.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import signal as sps

from .errors import (
    InvalidCutoffError,
    InvalidWindowError,
    SignalTooShortError,
    TooShortError,
    WindowTooSmallError,
)

#: Default filter order for single-band Butterworth designs.
DEFAULT_ORDER = 4
#: Order used per bandstop section in notch cascades.
NOTCH_ORDER = 2

FILTER_KINDS = ("lowpass", "highpass", "bandpass", "bandstop")


@dataclass(frozen=True)
class Signal:
    """A uniformly sampled real-valued sequence.

    Parameters
    ----------
    samples : array-like
        Sample values; stored as a float64 numpy array.
    sample_rate : float
        Sampling frequency in Hz, must be > 0.
    """

    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("Signal requires a 1-D sequence of length >= 1")
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be > 0")
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "sample_rate", float(self.sample_rate))

    def __len__(self):
        return self.samples.size

    @property
    def duration(self) -> float:
        """Span in seconds between first and last sample."""
        return (self.samples.size - 1) / self.sample_rate

    def replace(self, samples) -> "Signal":
        """New Signal with the same rate and different samples."""
        return Signal(samples, self.sample_rate)


@dataclass(frozen=True)
class FilterSpec:
    """Butterworth filter description.

    ``cutoffs`` holds one frequency for lowpass/highpass and (low, high)
    for bandpass/bandstop, all in Hz.
    """

    kind: str
    cutoffs: tuple = field(default=())
    order: int = DEFAULT_ORDER

    def __post_init__(self):
        if self.kind not in FILTER_KINDS:
            raise InvalidCutoffError(f"unknown filter kind {self.kind!r}")
        cut = tuple(float(c) for c in (
            self.cutoffs if np.iterable(self.cutoffs) else (self.cutoffs,)))
        object.__setattr__(self, "cutoffs", cut)
        n_expected = 1 if self.kind in ("lowpass", "highpass") else 2
        if len(cut) != n_expected:
            raise InvalidCutoffError(
                f"{self.kind} expects {n_expected} cutoff(s), got {len(cut)}")
        if self.order < 1:
            raise InvalidCutoffError("filter order must be >= 1")

    def validate_for(self, sample_rate: float) -> None:
        nyq = sample_rate / 2.0
        for c in self.cutoffs:
            if not 0.0 < c < nyq:
                raise InvalidCutoffError(
                    f"cutoff {c} Hz outside (0, {nyq}) for fs={sample_rate}")
        if len(self.cutoffs) == 2 and not self.cutoffs[0] < self.cutoffs[1]:
            raise InvalidCutoffError(
                f"band cutoffs must satisfy low < high, got {self.cutoffs}")


def _sos_for(spec: FilterSpec, sample_rate: float) -> np.ndarray:
    spec.validate_for(sample_rate)
    wn = spec.cutoffs[0] if len(spec.cutoffs) == 1 else list(spec.cutoffs)
    return sps.butter(spec.order, wn, btype=spec.kind, fs=sample_rate,
                      output="sos")


def _sosfiltfilt_padlen(sos: np.ndarray) -> int:
    # mirrors scipy's default so we can raise a typed error up front
    n_sections = sos.shape[0]
    ntaps = 2 * n_sections + 1
    ntaps -= min((sos[:, 2] == 0).sum(), (sos[:, 5] == 0).sum())
    return 3 * ntaps


def iir_filter(signal: Signal, spec: FilterSpec, *, padlen=None) -> Signal:
    """Apply a zero-phase Butterworth filter.

    The filter runs forward and backward (``sosfiltfilt``) with odd
    reflection padding, so the output has no phase lag and the same length
    as the input.

    Parameters
    ----------
    signal : Signal
    spec : FilterSpec
    padlen : int, optional
        Reflection-padding length override; defaults to scipy's choice.
        Long paddings are needed for very low cutoffs.

    Raises
    ------
    InvalidCutoffError
        If a cutoff falls outside (0, Nyquist).
    SignalTooShortError
        If the signal is shorter than the required padding.
    """
    sos = _sos_for(spec, signal.sample_rate)
    if padlen is None:
        padlen = _sosfiltfilt_padlen(sos)
    padlen = int(min(padlen, len(signal) - 1))
    if len(signal) <= _sosfiltfilt_padlen(sos):
        raise SignalTooShortError(
            f"need more than {_sosfiltfilt_padlen(sos)} samples for "
            f"{spec.kind} order {spec.order}, got {len(signal)}")
    return signal.replace(sps.sosfiltfilt(sos, signal.samples, padlen=padlen))


def notch_filter(signal: Signal, f0: float, width: float) -> Signal:
    """Remove a narrow band centred on ``f0`` (total width ``width`` Hz).

    Equivalent to a zero-phase Butterworth bandstop over
    [f0 - width/2, f0 + width/2]; cascade calls to stack notches.
    """
    if not f0 + width / 2.0 < signal.sample_rate / 2.0:
        raise InvalidCutoffError(
            f"notch at {f0} Hz (width {width}) exceeds Nyquist "
            f"{signal.sample_rate / 2.0} Hz")
    spec = FilterSpec("bandstop", (f0 - width / 2.0, f0 + width / 2.0),
                      order=NOTCH_ORDER)
    return iir_filter(signal, spec)


def detrend(signal: Signal) -> Signal:
    """Remove the least-squares linear trend; output mean is ~0."""
    if len(signal) == 1:
        return signal.replace(np.zeros(1))
    return signal.replace(sps.detrend(signal.samples, type="linear"))


def zscore(signal: Signal) -> Signal:
    """Standardize to mean 0 and population SD 1.

    A constant input maps to all zeros rather than dividing by zero.
    """
    x = signal.samples
    if np.ptp(x) == 0.0:  # exactly constant; x.std() may still be ~1 ulp
        return signal.replace(np.zeros_like(x))
    mu = x.mean()
    sd = x.std()
    if sd == 0.0:
        return signal.replace(np.zeros_like(x))
    return signal.replace((x - mu) / sd)


def rms_envelope(signal: Signal, window: float) -> Signal:
    """Sliding centred RMS with edge windows truncated.

    Parameters
    ----------
    window : float
        Window length in seconds; must cover at least one sample.
    """
    w = int(round(window * signal.sample_rate))
    if w < 1:
        raise WindowTooSmallError(
            f"window {window}s spans {w} samples at "
            f"{signal.sample_rate} Hz")
    sq = signal.samples ** 2
    csum = np.concatenate(([0.0], np.cumsum(sq)))
    n = len(signal)
    idx = np.arange(n)
    lo = np.maximum(idx - (w - 1) // 2, 0)
    hi = np.minimum(idx + w // 2, n - 1)
    means = (csum[hi + 1] - csum[lo]) / (hi + 1 - lo)
    return signal.replace(np.sqrt(np.maximum(means, 0.0)))


def savgol_smooth(signal: Signal, order: int, length: float) -> Signal:
    """Savitzky-Golay polynomial smoothing.

    The window spans ``length`` seconds, rounded up to an odd sample
    count; mirror padding keeps the output length equal to the input.
    """
    w = int(round(length * signal.sample_rate))
    if w % 2 == 0:
        w += 1
    if w <= order:
        raise InvalidWindowError(
            f"window of {w} samples must exceed polynomial order {order}")
    if w > len(signal):
        raise InvalidWindowError(
            f"window of {w} samples exceeds signal length {len(signal)}")
    return signal.replace(
        sps.savgol_filter(signal.samples, w, order, mode="mirror"))


def moving_average(series, n: int):
    """Trailing moving average over up to ``n`` samples.

    The window is truncated at the start (the first output averages one
    sample), so every output stays within [min, max] of its own window
    and no future samples are used.
    """
    if n < 1:
        raise InvalidWindowError("n must be >= 1")
    x = np.asarray(series, dtype=np.float64)
    csum = np.concatenate(([0.0], np.cumsum(x)))
    idx = np.arange(x.size)
    lo = np.maximum(idx - n + 1, 0)
    return (csum[idx + 1] - csum[lo]) / (idx + 1 - lo)


def detect_peaks(signal: Signal, min_distance: float,
                 min_prominence: float) -> np.ndarray:
    """Find local maxima, thinned greedily by prominence.

    Parameters
    ----------
    min_distance : float
        Minimum spacing between accepted peaks, in seconds.
    min_prominence : float
        Prominence threshold as a fraction of the signal's value range.

    Returns
    -------
    ndarray of int
        Strictly increasing sample indices. Candidates are ranked by
        prominence (earlier index wins exact ties) and accepted only if
        no previously accepted peak lies closer than ``min_distance``.
    """
    if min_distance <= 0:
        raise InvalidWindowError("min_distance must be > 0")
    x = signal.samples
    value_range = float(x.max() - x.min())
    if value_range == 0.0:
        return np.empty(0, dtype=np.intp)
    candidates, props = sps.find_peaks(
        x, prominence=min_prominence * value_range)
    if candidates.size == 0:
        return np.empty(0, dtype=np.intp)
    prominences = props["prominences"]
    order = np.lexsort((candidates, -prominences))
    spacing = int(round(min_distance * signal.sample_rate))
    accepted: list[int] = []
    for i in order:
        pos = candidates[i]
        if all(abs(pos - a) >= spacing for a in accepted):
            accepted.append(int(pos))
    return np.array(sorted(accepted), dtype=np.intp)


def fit_trend(series, sample_rate: float):
    """Least-squares quadratic fit ``y = a + b*t + c*t^2``.

    Returns
    -------
    (linear, quadratic, r2) : tuple of float
        Per-second slope, per-second^2 coefficient, and the R^2 of the
        quadratic fit (0 by convention for zero-variance input).
    """
    y = np.asarray(series, dtype=np.float64)
    if y.size < 3:
        raise TooShortError(f"trend fit needs >= 3 samples, got {y.size}")
    t = np.arange(y.size) / sample_rate
    design = np.column_stack((np.ones_like(t), t, t * t))
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    sst = float(np.sum((y - y.mean()) ** 2))
    if sst <= 1e-30:
        return 0.0, 0.0, 0.0
    resid = y - design @ coef
    r2 = 1.0 - float(np.sum(resid ** 2)) / sst
    return float(coef[1]), float(coef[2]), float(min(max(r2, 0.0), 1.0))
