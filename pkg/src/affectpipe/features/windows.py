"""Trailing-window bookkeeping and vectorized per-window statistics.

Feature windows end at each (possibly delay-shifted) annotation timestamp
and extend back a channel-specific length; windows that would start before
the recording are truncated to the available prefix. The annotation grid
is uniform, so most windows share one length and a constant stride; those
are reduced on a strided view without copying, and the few truncated rows
fall back to a per-row loop.
"""

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import as_strided

from ..errors import DelayOutOfRangeError, TimestampOutOfRangeError


@dataclass(frozen=True)
class WindowConfig:
    """Feature-window lengths (seconds) and raw-context geometry.

    Cardiac and respiratory windows stay long enough to expose rate
    variability, the electrodermal window is mid-sized for tonic/phasic
    separation, and the muscle window is short because expressions move
    in milliseconds. The raw-context block samples every cleaned channel
    at ``raw_context_rate_hz`` across ``2 * raw_context_halfwidth_s``
    seconds centred on the timestamp.
    """

    ecg_s: float = 10.0
    bvp_s: float = 10.0
    rsp_s: float = 10.0
    eda_s: float = 4.0
    skt_s: float = 4.0
    emg_s: float = 1.0
    raw_context_halfwidth_s: float = 0.25
    raw_context_rate_hz: float = 20.0
    trend_rate_hz: float = 20.0
    max_shift_s: float = 0.05

    def __post_init__(self):
        lengths = (self.ecg_s, self.bvp_s, self.rsp_s, self.eda_s,
                   self.skt_s, self.emg_s)
        if min(lengths) <= 0:
            raise ValueError("window lengths must be positive")
        if not (self.emg_s <= self.eda_s
                <= min(self.ecg_s, self.bvp_s, self.rsp_s)):
            raise ValueError(
                "expected emg <= eda <= cardiac/respiratory window lengths")
        if self.raw_context_halfwidth_s <= 0 or self.raw_context_rate_hz <= 0:
            raise ValueError("context geometry must be positive")
        if self.n_context_samples < 1:
            raise ValueError("context window holds no samples")
        if self.trend_rate_hz <= 0 or self.max_shift_s < 0:
            raise ValueError("invalid trend rate or shift bound")

    @property
    def n_context_samples(self) -> int:
        return int(round(2 * self.raw_context_halfwidth_s
                         * self.raw_context_rate_hz))

    def context_offsets(self) -> np.ndarray:
        """Second offsets of the context samples, centred on 0."""
        n = self.n_context_samples
        return (np.arange(n) - (n - 1) / 2.0) / self.raw_context_rate_hz

    def window_s(self, kind: str) -> float:
        if kind.startswith("emg"):
            return self.emg_s
        if kind == "eda":
            return self.eda_s
        return {"ecg": self.ecg_s, "bvp": self.bvp_s,
                "rsp": self.rsp_s, "skt": self.skt_s}[kind]


def check_delay(delay: float, cfg: WindowConfig) -> float:
    if not 0.0 <= delay <= cfg.max_shift_s + 1e-12:
        raise DelayOutOfRangeError(
            f"delay {delay}s outside [0, {cfg.max_shift_s}]")
    return float(delay)


def window_bounds(timestamps, delay: float, sample_rate: float,
                  n_samples: int, window_s: float):
    """(starts, ends) sample bounds, inclusive, for trailing windows."""
    ts = np.asarray(timestamps, dtype=np.float64)
    limit = (n_samples - 1) / sample_rate
    if ts.size and (ts.min() < -1e-9 or ts.max() > limit + 1e-9):
        bad = float(ts.max() if ts.max() > limit + 1e-9 else ts.min())
        raise TimestampOutOfRangeError(
            f"timestamp {bad}s outside recording [0, {limit:.3f}]s")
    ends = np.rint((ts - delay) * sample_rate).astype(np.intp)
    ends = np.clip(ends, 0, n_samples - 1)
    length = max(int(round(window_s * sample_rate)), 1)
    starts = np.maximum(ends - length + 1, 0)
    return starts, ends


def _uniform_tail(starts, ends):
    """Largest suffix of rows sharing one length and a constant stride."""
    n = starts.size
    if n == 0:
        return n
    lengths = ends - starts + 1
    full = lengths == lengths[-1]
    first = n - 1
    while first > 0 and full[first - 1]:
        first -= 1
    if first + 1 < n:
        steps = np.diff(starts[first:])
        if steps.size and not np.all(steps == steps[0]):
            return n  # irregular grid: no fast path
        if steps.size and steps[0] < 0:
            return n
    return first


def _strided(track, starts, length, step):
    itemsize = track.itemsize
    return as_strided(track[starts[0]:],
                      shape=(starts.size, length),
                      strides=(step * itemsize, itemsize), writeable=False)


def segment_stats(track, starts, ends, sample_rate: float):
    """Per-window baseline/max/min/mean/sd and extremum times.

    Baseline is the value at the window start; max/min times are seconds
    from the window start.
    """
    n = starts.size
    out = {k: np.zeros(n) for k in
           ("baseline", "max", "min", "mean", "sd", "max_time", "min_time")}
    if n == 0:
        return out
    out["baseline"] = track[starts].astype(np.float64)
    split = _uniform_tail(starts, ends)

    def fill(i, seg):
        out["max"][i] = seg.max()
        out["min"][i] = seg.min()
        out["mean"][i] = seg.mean()
        out["sd"][i] = seg.std()
        out["max_time"][i] = np.argmax(seg) / sample_rate
        out["min_time"][i] = np.argmin(seg) / sample_rate

    for i in range(split):
        fill(i, track[starts[i]:ends[i] + 1])
    if split < n:
        tail = slice(split, n)
        length = int(ends[split] - starts[split] + 1)
        step = int(starts[split + 1] - starts[split]) if split + 1 < n else 1
        view = _strided(track, starts[tail], length, step)
        out["max"][tail] = view.max(axis=1)
        out["min"][tail] = view.min(axis=1)
        out["mean"][tail] = view.mean(axis=1)
        out["sd"][tail] = view.std(axis=1)
        out["max_time"][tail] = view.argmax(axis=1) / sample_rate
        out["min_time"][tail] = view.argmin(axis=1) / sample_rate
    return out


def segment_mean(track, starts, ends):
    """Plain window means via prefix sums (handles any bounds)."""
    csum = np.concatenate(([0.0], np.cumsum(track)))
    return (csum[ends + 1] - csum[starts]) / (ends - starts + 1)


def segment_max(track, starts, ends):
    n = starts.size
    out = np.zeros(n)
    split = _uniform_tail(starts, ends)
    for i in range(split):
        out[i] = track[starts[i]:ends[i] + 1].max()
    if split < n:
        length = int(ends[split] - starts[split] + 1)
        step = (int(starts[split + 1] - starts[split])
                if split + 1 < n else 1)
        out[split:] = _strided(track, starts[split:], length,
                               step).max(axis=1)
    return out


def segment_trend(track, starts, ends, sample_rate: float,
                  trend_rate_hz: float):
    """Quadratic trend (per-second slope, curvature, R^2) per window.

    Fitted on the window decimated to ``trend_rate_hz`` (numerically
    stable and plenty for the slow rate/amplitude tracks this sees).
    Windows with fewer than 3 decimated points report (0, 0, 0); R^2 is 0
    for zero-variance windows.
    """
    n = starts.size
    lin = np.zeros(n)
    quad = np.zeros(n)
    r2 = np.zeros(n)
    if n == 0:
        return lin, quad, r2
    step = max(int(round(sample_rate / trend_rate_hz)), 1)
    dt = step / sample_rate
    split = _uniform_tail(starts, ends)

    def fit_rows(rows_idx, matrix):
        m = matrix.shape[1]
        if m < 3:
            return
        t = np.arange(m) * dt
        design = np.column_stack((np.ones(m), t, t * t))
        pinv = np.linalg.pinv(design)
        coef = matrix @ pinv.T
        fitted = coef @ design.T
        resid = matrix - fitted
        ssr = np.sum(resid * resid, axis=1)
        sst = np.sum((matrix - matrix.mean(axis=1, keepdims=True)) ** 2,
                     axis=1)
        ok = sst > 1e-30
        lin[rows_idx[ok]] = coef[ok, 1]
        quad[rows_idx[ok]] = coef[ok, 2]
        r2[rows_idx[ok]] = np.clip(1.0 - ssr[ok] / sst[ok], 0.0, 1.0)

    for i in range(split):
        pts = track[starts[i]:ends[i] + 1:step]
        if pts.size >= 3:
            fit_rows(np.array([i]), pts[None, :])
    if split < n:
        length = int(ends[split] - starts[split] + 1)
        stride = (int(starts[split + 1] - starts[split])
                  if split + 1 < n else 1)
        m = (length - 1) // step + 1
        itemsize = track.itemsize
        view = as_strided(track[starts[split]:],
                          shape=(n - split, m),
                          strides=(stride * itemsize, step * itemsize),
                          writeable=False)
        fit_rows(np.arange(split, n), np.ascontiguousarray(view))
    return lin, quad, r2


def events_in_windows(event_positions, starts, ends):
    """Index ranges [lo, hi) of events falling inside each window."""
    lo = np.searchsorted(event_positions, starts, side="left")
    hi = np.searchsorted(event_positions, ends, side="right")
    return lo, hi
