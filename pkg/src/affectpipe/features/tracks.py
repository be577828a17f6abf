"""Sample-aligned derived tracks and event inventories per channel.

Everything here is computed once over the whole cleaned signal; window
feature extraction then just slices these 1 kHz tracks and event arrays.
Rates are interpolated between beats and held flat before the first and
after the last event, so early windows stay defined (the carry convention
for sparse events).
"""

from dataclasses import dataclass

import numpy as np

from .. import dsp
from ..dsp import Signal
from ..errors import TooFewPeaksError
from .cleaning import eda_decompose

# peak-detector settings per channel family (prominence is a fraction of
# the signal range; distances bound physiological rates)
ECG_PEAK_DISTANCE_S = 0.33
ECG_PEAK_PROMINENCE = 0.35
BVP_PEAK_DISTANCE_S = 0.33
BVP_PEAK_PROMINENCE = 0.30
RSP_PEAK_DISTANCE_S = 1.0
RSP_PEAK_PROMINENCE = 0.20
SCR_PEAK_DISTANCE_S = 1.0
SCR_PEAK_PROMINENCE = 0.01

ECG_BEAT_HALF_S = 0.25
ATRIAL_FRACTION = 0.2      # of the beat-to-beat interval, before R
VENTRICULAR_FRACTION = 0.4  # of the interval, after R


def rate_track_from_peaks(peaks, length: int, sample_rate: float):
    """Instantaneous event rate (events/min) sampled everywhere.

    The rate 60/IBI of each inter-event interval is assigned at the
    interval's closing peak, linearly interpolated between peaks and held
    constant before the first and after the last peak.
    """
    peaks = np.asarray(peaks, dtype=np.intp)
    if peaks.size < 2:
        raise TooFewPeaksError(
            f"need >= 2 peaks for a rate track, got {peaks.size}")
    ibis = np.diff(peaks) / sample_rate
    rates = 60.0 / ibis
    anchor_pos = peaks.astype(np.float64)
    anchor_val = np.concatenate(([rates[0]], rates))
    return np.interp(np.arange(length, dtype=np.float64),
                     anchor_pos, anchor_val)


def _maybe_rate_track(peaks, length, sample_rate):
    if len(peaks) < 2:
        return None
    return rate_track_from_peaks(peaks, length, sample_rate)


@dataclass
class CardiacTracks:
    peaks: np.ndarray
    rate: np.ndarray | None  # None when fewer than 2 beats exist


@dataclass
class EcgTracks:
    peaks: np.ndarray
    rate: np.ndarray | None
    atrial: np.ndarray
    atrial_completion: np.ndarray
    ventricular: np.ndarray
    ventricular_completion: np.ndarray
    beat_indices: np.ndarray       # beats with a full +-0.25 s segment
    beat_unit_prefix: np.ndarray   # cumsum of unit-normalized beat shapes


@dataclass
class RspTracks:
    peaks: np.ndarray
    troughs: np.ndarray
    rate: np.ndarray | None
    amplitude: np.ndarray
    phase: np.ndarray
    phase_completion: np.ndarray
    rvt: np.ndarray


@dataclass
class EdaTracks:
    tonic: np.ndarray
    phasic: np.ndarray
    scr_peaks: np.ndarray
    scr_onsets: np.ndarray
    scr_amplitude: np.ndarray
    scr_rise_s: np.ndarray
    scr_recovery_end: np.ndarray  # index of half-recovery; len(signal) if not reached


@dataclass
class EmgTracks:
    envelope: np.ndarray
    active: np.ndarray        # envelope above activation threshold (0/1)
    burst_starts: np.ndarray  # rising threshold crossings

    threshold: float = 1.0


def build_bvp_tracks(clean: Signal) -> CardiacTracks:
    peaks = dsp.detect_peaks(clean, BVP_PEAK_DISTANCE_S, BVP_PEAK_PROMINENCE)
    return CardiacTracks(peaks, _maybe_rate_track(peaks, len(clean),
                                                  clean.sample_rate))


def _phase_tracks(peaks, n, sample_rate):
    atrial = np.zeros(n)
    atrial_c = np.zeros(n)
    vent = np.zeros(n)
    vent_c = np.zeros(n)
    if peaks.size == 0:
        return atrial, atrial_c, vent, vent_c
    rr = np.diff(peaks)
    if rr.size == 0:
        rr_for = np.array([int(sample_rate)])  # lone beat: assume 60 bpm
    else:
        rr_for = np.concatenate((rr, [rr[-1]]))
    for p, beat_rr in zip(peaks, rr_for):
        v_len = max(int(round(VENTRICULAR_FRACTION * beat_rr)), 1)
        lo, hi = p, min(p + v_len, n)
        vent[lo:hi] = 1.0
        vent_c[lo:hi] = (np.arange(lo, hi) - p) / v_len
        a_len = max(int(round(ATRIAL_FRACTION * beat_rr)), 1)
        lo, hi = max(p - a_len, 0), p
        atrial[lo:hi] = 1.0
        atrial_c[lo:hi] = (np.arange(lo, hi) - (p - a_len)) / a_len
    return atrial, atrial_c, vent, vent_c


def _beat_shape_prefix(clean: Signal, peaks):
    half = int(ECG_BEAT_HALF_S * clean.sample_rate)
    n = len(clean)
    usable = peaks[(peaks >= half) & (peaks + half < n)]
    width = 2 * half + 1
    if usable.size == 0:
        return usable, np.zeros((1, width))
    segs = np.stack([clean.samples[p - half:p + half + 1] for p in usable])
    segs = segs - segs.mean(axis=1, keepdims=True)
    norms = np.linalg.norm(segs, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    unit = segs / norms
    prefix = np.concatenate((np.zeros((1, width)), np.cumsum(unit, axis=0)))
    return usable, prefix


def beat_quality(tracks: EcgTracks, starts, ends):
    """Mean correlation of each in-window beat against the window's
    average beat shape; 0 when the window holds no complete beat.

    For unit-normalized centred beats this equals |sum of shapes| / count.
    """
    starts = np.atleast_1d(starts)
    ends = np.atleast_1d(ends)
    lo = np.searchsorted(tracks.beat_indices, starts, side="left")
    hi = np.searchsorted(tracks.beat_indices, ends, side="right")
    counts = hi - lo
    sums = tracks.beat_unit_prefix[hi] - tracks.beat_unit_prefix[lo]
    norm = np.linalg.norm(sums, axis=1)
    out = np.zeros(starts.size)
    nz = counts > 0
    out[nz] = norm[nz] / counts[nz]
    return out


def build_ecg_tracks(clean: Signal) -> EcgTracks:
    peaks = dsp.detect_peaks(clean, ECG_PEAK_DISTANCE_S, ECG_PEAK_PROMINENCE)
    atrial, atrial_c, vent, vent_c = _phase_tracks(
        peaks, len(clean), clean.sample_rate)
    beat_idx, prefix = _beat_shape_prefix(clean, peaks)
    return EcgTracks(peaks,
                     _maybe_rate_track(peaks, len(clean), clean.sample_rate),
                     atrial, atrial_c, vent, vent_c, beat_idx, prefix)


def _alternating_extrema(peaks, troughs):
    """Merge to a strictly alternating trough/peak sequence."""
    events = sorted([(int(p), 1) for p in peaks]
                    + [(int(t), 0) for t in troughs])
    merged = []
    for pos, kind in events:
        if merged and merged[-1][1] == kind:
            continue  # drop repeats of the same extremum type
        merged.append((pos, kind))
    return merged


def build_rsp_tracks(clean: Signal) -> RspTracks:
    n = len(clean)
    fs = clean.sample_rate
    peaks = dsp.detect_peaks(clean, RSP_PEAK_DISTANCE_S, RSP_PEAK_PROMINENCE)
    troughs = dsp.detect_peaks(clean.replace(-clean.samples),
                               RSP_PEAK_DISTANCE_S, RSP_PEAK_PROMINENCE)
    rate = _maybe_rate_track(peaks, n, fs)

    # breath amplitude: peak minus preceding trough, interpolated at peaks
    amp_pos, amp_val = [], []
    for p in peaks:
        prior = troughs[troughs < p]
        if prior.size:
            amp_pos.append(float(p))
            amp_val.append(float(clean.samples[p]
                                 - clean.samples[prior[-1]]))
    if amp_pos:
        amplitude = np.interp(np.arange(n, dtype=np.float64),
                              np.asarray(amp_pos), np.asarray(amp_val))
    else:
        amplitude = np.zeros(n)

    # phase: 1 during inspiration (trough->peak), 0 during expiration;
    # completion ramps 0..1 inside each segment and is 0 outside extrema
    phase = np.zeros(n)
    completion = np.zeros(n)
    merged = _alternating_extrema(peaks, troughs)
    for (a, kind_a), (b, kind_b) in zip(merged, merged[1:]):
        seg = slice(a, b)
        inspiration = kind_b == 1  # rising toward a peak
        phase[seg] = 1.0 if inspiration else 0.0
        completion[seg] = (np.arange(a, b) - a) / max(b - a, 1)
    if merged:
        first_pos, first_kind = merged[0]
        phase[:first_pos] = 1.0 if first_kind == 1 else 0.0
        last_pos, last_kind = merged[-1]
        phase[last_pos:] = 0.0 if last_kind == 1 else 1.0

    rvt = amplitude * rate / 60.0 if rate is not None else np.zeros(n)
    return RspTracks(peaks, troughs, rate, amplitude, phase, completion, rvt)


def build_eda_tracks(clean: Signal) -> EdaTracks:
    n = len(clean)
    fs = clean.sample_rate
    tonic_sig, phasic_sig = eda_decompose(clean)
    phasic = phasic_sig.samples
    peaks = dsp.detect_peaks(phasic_sig, SCR_PEAK_DISTANCE_S,
                             SCR_PEAK_PROMINENCE)
    onsets = np.empty(peaks.size, dtype=np.intp)
    amps = np.empty(peaks.size)
    recovery = np.empty(peaks.size, dtype=np.intp)
    prev = 0
    for i, p in enumerate(peaks):
        onset = prev + int(np.argmin(phasic[prev:p + 1]))
        onsets[i] = onset
        amps[i] = phasic[p] - phasic[onset]
        level = phasic[p] - 0.5 * amps[i]
        below = np.flatnonzero(phasic[p:] <= level)
        recovery[i] = p + below[0] if below.size else n
        prev = p
    rise = (peaks - onsets) / fs
    return EdaTracks(tonic_sig.samples, phasic, peaks, onsets, amps, rise,
                     recovery)


def build_emg_tracks(envelope: Signal, threshold: float = 1.0) -> EmgTracks:
    active = (envelope.samples > threshold).astype(np.float64)
    rising = np.flatnonzero(np.diff(active) > 0) + 1
    if active.size and active[0] > 0:
        rising = np.concatenate(([0], rising))
    return EmgTracks(envelope.samples, active, rising.astype(np.intp),
                     threshold)
