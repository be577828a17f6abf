"""Feature-matrix assembly: one row per annotation timestamp.

Each row concatenates the windowed per-channel features (cardiac and
respiratory rate statistics, respiration amplitude/phase, electrodermal
events, muscle envelopes) with a flattened raw-context block sampling the
cleaned channels around the timestamp. Default schema: 69 windowed
features + 8 channels x context samples.

Rows depend only on samples up to ``timestamp + context halfwidth``; the
recording is trimmed to that horizon before cleaning, so appending later
samples never changes existing rows. ``shift_features`` rebuilds the
matrix with every window ending ``delay`` seconds earlier on the 1 kHz
timeline, aligning labels with earlier physiology at full resolution.
"""

from dataclasses import dataclass, field

import numpy as np

from ..corpus.io import CHANNELS, Recording
from ..dsp import Signal
from ..errors import UnknownKindError
from .cleaning import clean_channel
from .tracks import (
    CardiacTracks,
    EcgTracks,
    EdaTracks,
    EmgTracks,
    RspTracks,
    beat_quality,
    build_bvp_tracks,
    build_ecg_tracks,
    build_eda_tracks,
    build_emg_tracks,
    build_rsp_tracks,
)
from .windows import (
    WindowConfig,
    check_delay,
    events_in_windows,
    segment_max,
    segment_mean,
    segment_stats,
    segment_trend,
    window_bounds,
)

#: Order of the windowed-feature blocks (muscles follow the CSV order).
FEATURE_KINDS = ("bvp", "ecg", "rsp", "eda",
                 "emg_zygo", "emg_coru", "emg_trap")

RATE_FIELDS = ("rate_baseline", "rate_max", "rate_min", "rate_mean",
               "rate_sd", "rate_max_time", "rate_min_time",
               "rate_trend_linear", "rate_trend_quadratic", "rate_trend_r2")
ECG_EXTRA_FIELDS = ("phase_atrial", "phase_atrial_completion",
                    "phase_ventricular", "phase_ventricular_completion",
                    "quality_mean")
RSP_EXTRA_FIELDS = ("amp_baseline", "amp_max", "amp_min", "amp_meanraw",
                    "amp_mean", "amp_sd", "phase", "phase_completion",
                    "rvt_baseline", "rvt_mean")
EDA_FIELDS = ("peak_amplitude", "scr_count", "scr_amplitude",
              "scr_amplitude_time", "scr_rise_time", "scr_recovery_time")
EMG_FIELDS = ("activation", "amp_mean", "amp_max", "amp_sd",
              "amp_max_time", "bursts")


def kind_field_names(kind: str):
    if kind == "bvp":
        return RATE_FIELDS
    if kind == "ecg":
        return RATE_FIELDS + ECG_EXTRA_FIELDS
    if kind == "rsp":
        return RATE_FIELDS + RSP_EXTRA_FIELDS
    if kind == "eda":
        return EDA_FIELDS
    if kind.startswith("emg"):
        return EMG_FIELDS
    raise UnknownKindError(f"no feature definition for kind {kind!r}")


def feature_schema(cfg: WindowConfig, chained: str | None = None):
    """Ordered column names for the full matrix."""
    names = []
    for kind in FEATURE_KINDS:
        names.extend(f"{kind}_{f}" for f in kind_field_names(kind))
    n_ctx = cfg.n_context_samples
    for channel in CHANNELS:
        names.extend(f"ctx_{channel}_{k:02d}" for k in range(n_ctx))
    if chained:
        names.append(f"chained_{chained}")
    return tuple(names)


def _rate_block(rate, starts, ends, fs, cfg):
    n = starts.size
    if rate is None:
        return np.zeros((n, len(RATE_FIELDS)))
    stats = segment_stats(rate, starts, ends, fs)
    lin, quad, r2 = segment_trend(rate, starts, ends, fs, cfg.trend_rate_hz)
    return np.column_stack((stats["baseline"], stats["max"], stats["min"],
                            stats["mean"], stats["sd"], stats["max_time"],
                            stats["min_time"], lin, quad, r2))


def _bvp_features(tracks: CardiacTracks, starts, ends, fs, cfg):
    return _rate_block(tracks.rate, starts, ends, fs, cfg)


def _ecg_features(tracks: EcgTracks, starts, ends, fs, cfg):
    rate = _rate_block(tracks.rate, starts, ends, fs, cfg)
    phases = np.column_stack((
        tracks.atrial[ends], tracks.atrial_completion[ends],
        tracks.ventricular[ends], tracks.ventricular_completion[ends]))
    quality = beat_quality(tracks, starts, ends)
    return np.column_stack((rate, phases, quality))


def _rsp_features(tracks: RspTracks, starts, ends, fs, cfg):
    rate = _rate_block(tracks.rate, starts, ends, fs, cfg)
    amp = segment_stats(tracks.amplitude, starts, ends, fs)
    rvt_mean = segment_mean(tracks.rvt, starts, ends)
    extra = np.column_stack((
        amp["baseline"], amp["max"], amp["min"], amp["mean"],
        amp["mean"] - amp["baseline"],  # baseline-corrected mean
        amp["sd"],
        tracks.phase[ends], tracks.phase_completion[ends],
        tracks.rvt[starts], rvt_mean))
    return np.column_stack((rate, extra))


def _eda_features(tracks: EdaTracks, starts, ends, fs, cfg):
    n = starts.size
    peak_amp = segment_max(tracks.phasic, starts, ends)
    lo, hi = events_in_windows(tracks.scr_peaks, starts, ends)
    counts = (hi - lo).astype(np.float64)
    out = np.zeros((n, len(EDA_FIELDS)))
    out[:, 0] = peak_amp
    out[:, 1] = counts
    for i in np.flatnonzero(counts):
        sel = slice(lo[i], hi[i])
        peaks = tracks.scr_peaks[sel]
        out[i, 2] = tracks.scr_amplitude[sel].mean()
        out[i, 3] = np.mean((peaks - starts[i]) / fs)
        out[i, 4] = tracks.scr_rise_s[sel].mean()
        capped = np.minimum(tracks.scr_recovery_end[sel], ends[i])
        out[i, 5] = np.mean((capped - peaks) / fs)
    return out


def _emg_features(tracks: EmgTracks, starts, ends, fs, cfg):
    stats = segment_stats(tracks.envelope, starts, ends, fs)
    activation = segment_mean(tracks.active, starts, ends)
    lo, hi = events_in_windows(tracks.burst_starts, starts, ends)
    bursts = (hi - lo).astype(np.float64)
    return np.column_stack((activation, stats["mean"], stats["max"],
                            stats["sd"], stats["max_time"], bursts))


_KIND_FEATURES = {
    "bvp": _bvp_features,
    "ecg": _ecg_features,
    "rsp": _rsp_features,
    "eda": _eda_features,
    "emg": _emg_features,
}


def build_channel_tracks(kind: str, clean: Signal):
    """Track bundle used by :func:`extract_features` for one channel."""
    if kind == "bvp":
        return build_bvp_tracks(clean)
    if kind == "ecg":
        return build_ecg_tracks(clean)
    if kind == "rsp":
        return build_rsp_tracks(clean)
    if kind == "eda":
        return build_eda_tracks(clean)
    if kind.startswith("emg"):
        return build_emg_tracks(clean)
    raise UnknownKindError(f"no tracks for kind {kind!r}")


def extract_features(kind: str, tracks, start: int, end: int,
                     cfg: WindowConfig | None = None,
                     sample_rate: float = 1000.0):
    """Feature vector for one trailing window [start, end] (inclusive).

    ``tracks`` comes from :func:`build_channel_tracks` on the cleaned
    channel. Returns (names, values); the same code path serves the
    batched matrix builder, one row at a time.
    """
    cfg = cfg or WindowConfig()
    base = kind if not kind.startswith("emg") else "emg"
    if base not in _KIND_FEATURES:
        raise UnknownKindError(f"unknown channel kind {kind!r}")
    starts = np.asarray([start], dtype=np.intp)
    ends = np.asarray([end], dtype=np.intp)
    values = _KIND_FEATURES[base](tracks, starts, ends, sample_rate, cfg)
    names = tuple(f"{kind}_{f}" for f in kind_field_names(kind))
    return names, values[0]


@dataclass(frozen=True)
class FeatureMatrix:
    """Per-timestamp feature rows with a stable, named column order."""

    timestamps: np.ndarray
    values: np.ndarray
    column_names: tuple
    subject_id: int
    video_id: int
    source: tuple | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        ts = np.asarray(self.timestamps, dtype=np.float64)
        if values.shape != (ts.size, len(self.column_names)):
            raise ValueError(
                f"values shape {values.shape} does not match "
                f"{ts.size} timestamps x {len(self.column_names)} columns")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "column_names", tuple(self.column_names))

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.column_names.index(name)]

    def with_column(self, name: str, column) -> "FeatureMatrix":
        col = np.asarray(column, dtype=np.float64).reshape(-1, 1)
        return FeatureMatrix(self.timestamps,
                             np.hstack((self.values, col)),
                             self.column_names + (name,),
                             self.subject_id, self.video_id)

    def select_columns(self, mask) -> "FeatureMatrix":
        mask = np.asarray(mask, dtype=bool)
        names = tuple(n for n, keep in zip(self.column_names, mask) if keep)
        return FeatureMatrix(self.timestamps, self.values[:, mask], names,
                             self.subject_id, self.video_id)

    def to_csv(self, path) -> None:
        import pandas as pd

        frame = pd.DataFrame(self.values, columns=list(self.column_names))
        frame.insert(0, "time", self.timestamps)
        frame.to_csv(path, index=False)


def _trimmed_for_horizon(recording: Recording, timestamps,
                         cfg: WindowConfig) -> Recording:
    horizon = float(np.max(timestamps)) + cfg.raw_context_halfwidth_s
    n_keep = int(round(horizon * recording.sample_rate)) + 1
    return recording.trimmed(n_keep)


def build_feature_frames(recording: Recording, annotation_timestamps,
                         cfg: WindowConfig | None = None,
                         delay: float = 0.0) -> FeatureMatrix:
    """One feature row per annotation timestamp.

    Per-channel features use trailing windows of the configured lengths
    ending at (timestamp - delay); the raw-context block samples every
    cleaned channel around the same shifted instant, edge-padded at the
    recording boundaries.
    """
    cfg = cfg or WindowConfig()
    delay = check_delay(delay, cfg)
    ts = np.asarray(annotation_timestamps, dtype=np.float64)
    fs = recording.sample_rate
    limit = (recording.n_samples - 1) / fs
    if ts.size == 0:
        raise ValueError("no annotation timestamps")
    if ts.min() < -1e-9 or ts.max() > limit + 1e-9:
        from ..errors import TimestampOutOfRangeError

        raise TimestampOutOfRangeError(
            f"timestamps span [{ts.min()}, {ts.max()}]s, recording ends "
            f"at {limit:.3f}s")

    rec = _trimmed_for_horizon(recording, ts, cfg)
    n = rec.n_samples
    cleaned = {c: clean_channel(c, Signal(rec.channels[c], fs))
               for c in CHANNELS}

    blocks = []
    for kind in FEATURE_KINDS:
        channel = "gsr" if kind == "eda" else kind
        tracks = build_channel_tracks(kind, cleaned[channel])
        starts, ends = window_bounds(ts, delay, fs, n, cfg.window_s(kind))
        base = "emg" if kind.startswith("emg") else kind
        blocks.append(_KIND_FEATURES[base](tracks, starts, ends, fs, cfg))

    offsets = cfg.context_offsets()
    for channel in CHANNELS:
        samples = cleaned[channel].samples
        idx = np.rint((ts[:, None] + offsets[None, :] - delay) * fs)
        idx = np.clip(idx, 0, n - 1).astype(np.intp)
        blocks.append(samples[idx])

    values = np.hstack(blocks)
    if not np.all(np.isfinite(values)):
        bad = np.argwhere(~np.isfinite(values))[0]
        raise FloatingPointError(
            f"non-finite feature at row {bad[0]}, column {bad[1]}")
    return FeatureMatrix(ts, values, feature_schema(cfg),
                         recording.subject_id, recording.video_id,
                         source=(recording, cfg, delay))


def shift_features(matrix: FeatureMatrix, delay: float) -> FeatureMatrix:
    """Recompute the matrix with every window ending ``delay`` seconds
    earlier, so labels align with earlier physiology."""
    if matrix.source is None:
        raise ValueError("matrix lost its source recording; rebuild it "
                         "with build_feature_frames to shift")
    recording, cfg, _ = matrix.source
    return build_feature_frames(recording, matrix.timestamps, cfg,
                                delay=delay)


#: Column-subset definitions for single-signal experiments. Each subset
#: keeps the windowed features and context columns of one sensor; ALL
#: keeps everything.
SIGNAL_SUBSETS = ("ALL", "BVP", "ECG", "EMG_coru", "EMG_trap", "EMG_zygo",
                  "GSR", "RSP", "SKT")

_SUBSET_PREFIXES = {
    "BVP": ("bvp_", "ctx_bvp_"),
    "ECG": ("ecg_", "ctx_ecg_"),
    "EMG_coru": ("emg_coru_", "ctx_emg_coru_"),
    "EMG_trap": ("emg_trap_", "ctx_emg_trap_"),
    "EMG_zygo": ("emg_zygo_", "ctx_emg_zygo_"),
    "GSR": ("eda_", "ctx_gsr_"),
    "RSP": ("rsp_", "ctx_rsp_"),
    "SKT": ("ctx_skt_",),
}


def subset_mask(column_names, subset: str) -> np.ndarray:
    """Boolean mask selecting one signal's columns (or all of them)."""
    if subset == "ALL":
        return np.ones(len(column_names), dtype=bool)
    try:
        prefixes = _SUBSET_PREFIXES[subset]
    except KeyError:
        raise KeyError(f"unknown signal subset {subset!r}; "
                       f"expected one of {SIGNAL_SUBSETS}") from None
    return np.array([any(n.startswith(p) for p in prefixes)
                     for n in column_names], dtype=bool)
