"""Deterministic synthetic corpora with physiology-coupled ratings.

Each (subject, video) gets a latent valence/arousal trajectory (damped
oscillator pulled toward quadrant-biased set-points, clipped to the rating
scale). Channels are synthesized from the latents so the written
annotations are recoverable from the signals by construction:

* heart rate (ECG spikes, BVP pulses) rises with arousal,
* EDA tonic level and SCR event rate rise with arousal,
* breathing rate rises with arousal, depth with valence,
* EMG burst activity follows valence (zygo/coru) and arousal (trap),
* skin temperature drifts with valence.

``label_lag_s`` makes the written ratings trail the physiology, and
``trace_gain``/``fast_amp`` inject a fast, directly-traceable label
component for alignment experiments. Everything is reproducible from the
seed; per-file streams are keyed by (seed, subject, video), so generation
order never matters.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import signal as sps
from scipy.ndimage import uniform_filter1d

from ..errors import InvalidSpecError
from .index import SCENARIO_DIRS, SCENARIOS, enumerate_dataset
from .io import (
    ANNOTATION_STEP,
    CHANNELS,
    PHYSIOLOGY_RATE,
    AnnotationTrack,
    Recording,
    save_annotations,
    save_recording,
)

FS = PHYSIOLOGY_RATE
LATENT_RATE = 20.0

#: (valence_high, arousal_high) cycle assigning videos to quadrants.
QUADRANT_CYCLE = ((True, True), (False, True), (False, False), (True, False))

#: Official corpus shape: 30 subjects, 8 videos in 4 quadrant pairs.
OFFICIAL_SUBJECTS = tuple(range(1, 31))
OFFICIAL_VIDEOS = (0, 16, 10, 4, 3, 20, 22, 21)

_STREAM_LATENT_V = 1
_STREAM_LATENT_A = 2
_STREAM_CHANNELS = 10


@dataclass(frozen=True)
class SynthSpec:
    """Parameters for :func:`generate_synthetic_dataset`."""

    n_subjects: int = 2
    video_ids: tuple = (0, 16, 10, 4)
    duration_s: float = 60.0
    train_duration_s: float = 60.0
    gap_s: float = 5.0
    scenarios: tuple = ("across_time",)
    n_subject_folds: int = 2
    coupling_gain: float = 1.0
    latent_volatility: float = 1.0
    label_lag_s: float = 0.0
    fast_amp: float = 0.0
    fast_band: tuple = (3.0, 9.0)
    trace_gain: float = 0.0
    time_unit: str = "ms"

    def __post_init__(self):
        object.__setattr__(self, "video_ids", tuple(self.video_ids))
        object.__setattr__(self, "scenarios", tuple(self.scenarios))
        self.validate()

    def validate(self):
        if self.n_subjects < 1:
            raise InvalidSpecError("need at least one subject")
        if len(set(self.video_ids)) != len(self.video_ids) or \
                not self.video_ids:
            raise InvalidSpecError("video_ids must be unique and nonempty")
        if min(self.duration_s, self.train_duration_s) <= 0 \
                or self.gap_s < 0:
            raise InvalidSpecError("durations must be positive")
        if self.coupling_gain < 0 or self.fast_amp < 0 or \
                self.trace_gain < 0 or self.label_lag_s < 0:
            raise InvalidSpecError("gains and lag must be >= 0")
        unknown = set(self.scenarios) - set(SCENARIOS)
        if unknown:
            raise InvalidSpecError(f"unknown scenarios {sorted(unknown)}")
        if "across_subject" in self.scenarios:
            if not 1 <= self.n_subject_folds <= self.n_subjects:
                raise InvalidSpecError(
                    "n_subject_folds must lie in [1, n_subjects]")
        if "across_elicitor" in self.scenarios and len(self.video_ids) < 4:
            raise InvalidSpecError(
                "across_elicitor needs at least one video per quadrant")
        if "across_version" in self.scenarios and (
                len(self.video_ids) < 8 or len(self.video_ids) % 4):
            raise InvalidSpecError(
                "across_version needs two videos per quadrant")

    def video_quadrant(self, video_id: int):
        """(valence_high, arousal_high) bias assigned to a video."""
        i = self.video_ids.index(video_id)
        return QUADRANT_CYCLE[i % len(QUADRANT_CYCLE)]

    def timeline_duration(self) -> float:
        if "across_time" in self.scenarios:
            return self.train_duration_s + self.gap_s + self.duration_s
        return self.duration_s


def _rng(seed: int, *stream) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence([int(seed)] + [int(s) for s in stream]))


def _slow_wander(n: int, rng: np.random.Generator, amp: float) -> np.ndarray:
    t = np.arange(n) / FS
    out = np.zeros(n)
    for f in (0.011, 0.023, 0.041):
        phase = rng.uniform(0, 2 * np.pi)
        a = rng.uniform(0.4, 1.0)
        out += a * np.sin(2 * np.pi * f * t + phase)
    return amp * out / 3.0


def _latent_track(duration_s: float, rng: np.random.Generator,
                  high: bool, fast_amp: float, fast_band,
                  volatility: float = 1.0) -> np.ndarray:
    """Damped-oscillator trajectory at 1 kHz, clipped to [0.5, 9.5]."""
    n20 = int(round(duration_s * LATENT_RATE)) + 1
    n_seg = int(duration_s / 6.0) + 2
    seg_len = rng.uniform(6.0, 14.0, size=n_seg)
    boundaries = np.cumsum(seg_len)
    center = 5.0 + (2.3 if high else -2.3)
    targets = np.clip(center + rng.normal(0.0, 1.2 * volatility,
                                          size=n_seg), 1.0, 9.0)
    accel_noise = rng.normal(0.0, 0.8, size=n20)

    omega, zeta, dt = 0.9, 0.75, 1.0 / LATENT_RATE
    x = np.empty(n20)
    pos, vel = float(targets[0]), 0.0
    for i in range(n20):
        seg = int(np.searchsorted(boundaries, i * dt))
        seg = min(seg, n_seg - 1)
        acc = omega ** 2 * (targets[seg] - pos) - 2 * zeta * omega * vel \
            + accel_noise[i]
        vel += dt * acc
        pos += dt * vel
        x[i] = pos

    n1k = int(round(duration_s * FS))
    t20 = np.arange(n20) * dt
    t1k = np.arange(n1k) / FS
    track = np.interp(t1k, t20, x)
    if fast_amp > 0:
        white = rng.standard_normal(n1k)
        sos = sps.butter(2, list(fast_band), btype="bandpass", fs=FS,
                         output="sos")
        fast = sps.sosfiltfilt(sos, white)
        track = track + fast_amp * fast / max(fast.std(), 1e-12)
    return np.clip(track, 0.5, 9.5)


def _beat_train(phase: np.ndarray, template: np.ndarray,
                amps: np.ndarray) -> np.ndarray:
    """Place one template copy at every integer crossing of ``phase``."""
    out = np.zeros(phase.size)
    crossings = np.flatnonzero(np.diff(np.floor(phase)) > 0) + 1
    half = template.size // 2
    for j, k in enumerate(crossings):
        lo, hi = k - half, k - half + template.size
        src_lo = max(0, -lo)
        src_hi = template.size - max(0, hi - out.size)
        out[max(lo, 0):min(hi, out.size)] += \
            amps[j % amps.size] * template[src_lo:src_hi]
    return out


def _burst_envelope(drive: np.ndarray, rng: np.random.Generator,
                    gain: float, slot_s: float = 0.5) -> np.ndarray:
    """0..1 envelope of randomly gated bursts; rate follows ``drive``."""
    n = drive.size
    slot = int(slot_s * FS)
    n_slots = n // slot + 1
    slot_drive = np.maximum(drive[::slot][:n_slots], 0.0)
    if slot_drive.size < n_slots:
        slot_drive = np.pad(slot_drive, (0, n_slots - slot_drive.size))
    p = np.clip(0.10 + 0.45 * gain * slot_drive, 0.0, 0.92)
    active = (rng.uniform(size=n_slots) < p).astype(np.float64)
    env = np.repeat(active, slot)[:n]
    return uniform_filter1d(env, size=int(0.1 * FS))


def _scr_kernel() -> np.ndarray:
    t = np.arange(int(8.0 * FS)) / FS
    k = (1.0 - np.exp(-t / 0.6)) * np.exp(-t / 2.5)
    return k / k.max()


def synthesize_channels(valence: np.ndarray, arousal: np.ndarray,
                        rng: np.random.Generator, gain: float = 1.0,
                        trace_gain: float = 0.0) -> dict:
    """Render the eight channels from latent tracks at 1 kHz.

    With ``gain`` 0 the channels draw only on ``rng`` and carry no latent
    information. ``trace_gain`` additively injects the normalized valence
    trace into ECG and the arousal trace into BVP (used by alignment
    experiments).
    """
    n = valence.size
    t = np.arange(n) / FS
    nv = (valence - 5.0) / 4.5
    na = (arousal - 5.0) / 4.5
    rngs = {name: np.random.default_rng(child) for name, child in
            zip(CHANNELS, rng.spawn(len(CHANNELS)))}
    out = {}

    # cardiac: shared beat phase, rate driven by arousal
    hr = np.clip(60.0 + 18.0 * gain * na, 40.0, 190.0)
    phase = np.cumsum(hr / 60.0) / FS
    r = rngs["ecg"]
    spike = np.exp(-0.5 * ((np.arange(-30, 31) / 10.0) ** 2))
    beat_amps = 1.0 + 0.05 * r.standard_normal(4096)
    ecg = _beat_train(phase, spike, beat_amps)
    ecg += _slow_wander(n, r, 0.05) + 0.02 * r.standard_normal(n)
    out["ecg"] = ecg + trace_gain * nv

    r = rngs["bvp"]
    pulse_phase = phase - 0.2 * hr / 60.0  # mechanical delay ~0.2 s
    bvp = (1.0 + 0.15 * gain * na) * (
        np.sin(2 * np.pi * pulse_phase - 1.0)
        + 0.25 * np.sin(4 * np.pi * pulse_phase - 1.0))
    bvp += 0.02 * r.standard_normal(n)
    out["bvp"] = bvp + trace_gain * na

    # electrodermal: tonic level + SCR events, both arousal-driven
    r = rngs["gsr"]
    tonic = 2.0 + 1.1 * gain * uniform_filter1d(na, int(2.0 * FS)) \
        + _slow_wander(n, r, 0.05)
    slot = int(1.0 * FS)
    n_slots = n // slot + 1
    na_slots = na[::slot][:n_slots]
    if na_slots.size < n_slots:
        na_slots = np.pad(na_slots, (0, n_slots - na_slots.size))
    p_scr = np.clip(0.05 + 0.15 * gain * np.maximum(na_slots, 0.0), 0, 0.85)
    fires = r.uniform(size=n_slots) < p_scr
    offsets = r.integers(0, slot, size=n_slots)
    amps = r.uniform(0.05, 0.22, size=n_slots)
    kernel = _scr_kernel()
    gsr = tonic.copy()
    for i in np.flatnonzero(fires):
        start = i * slot + int(offsets[i])
        if start >= n:
            continue
        seg = min(kernel.size, n - start)
        gsr[start:start + seg] += amps[i] * kernel[:seg]
    out["gsr"] = gsr + 0.003 * r.standard_normal(n)

    # respiration: rate with arousal, depth with valence
    r = rngs["rsp"]
    br = np.clip(13.0 + 5.0 * gain * na, 6.0, 30.0)
    rphase = np.cumsum(br / 60.0) / FS + r.uniform(0, 1)
    out["rsp"] = 0.5 * (1.0 + 0.25 * gain * nv) * np.sin(2 * np.pi * rphase) \
        + 0.01 * r.standard_normal(n)

    # skin temperature: slow valence drift
    r = rngs["skt"]
    out["skt"] = 33.2 + 1.2 * gain * uniform_filter1d(nv, int(3.0 * FS)) \
        + _slow_wander(n, r, 0.08) + 0.005 * r.standard_normal(n)

    # muscles: gated broadband bursts + faint mains hum
    drives = {"emg_zygo": np.maximum(nv, 0.0),
              "emg_coru": np.maximum(-nv, 0.0),
              "emg_trap": np.maximum(na, 0.0)}
    for name, drive in drives.items():
        r = rngs[name]
        env = _burst_envelope(drive, r, gain)
        sigma = 0.015 + (0.05 + 0.45 * gain * drive) * env
        hum_phase = r.uniform(0, 2 * np.pi)
        out[name] = sigma * r.standard_normal(n) \
            + 0.015 * np.sin(2 * np.pi * 60.0 * t + hum_phase)
    return out


def _labels_at(latent: np.ndarray, timestamps: np.ndarray,
               origin_s: float, lag_s: float) -> np.ndarray:
    idx = np.rint((origin_s + timestamps - lag_s) * FS).astype(np.intp)
    return latent[np.clip(idx, 0, latent.size - 1)]


def _annotation_grid(duration_s: float) -> np.ndarray:
    return np.arange(int(round(duration_s * LATENT_RATE))) * ANNOTATION_STEP


@dataclass
class _FileBundle:
    """All synthesized material for one (subject, video)."""

    subject: int
    video: int
    valence: np.ndarray
    arousal: np.ndarray
    channels: dict


def _synthesize_bundle(seed: int, subject: int, video: int,
                       spec: SynthSpec) -> _FileBundle:
    duration = spec.timeline_duration()
    v_high, a_high = spec.video_quadrant(video)
    val = _latent_track(duration, _rng(seed, subject, video, _STREAM_LATENT_V),
                        v_high, spec.fast_amp, spec.fast_band,
                        spec.latent_volatility)
    aro = _latent_track(duration, _rng(seed, subject, video, _STREAM_LATENT_A),
                        a_high, spec.fast_amp, spec.fast_band,
                        spec.latent_volatility)
    channels = synthesize_channels(
        val, aro, _rng(seed, subject, video, _STREAM_CHANNELS),
        gain=spec.coupling_gain, trace_gain=spec.trace_gain)
    return _FileBundle(subject, video, val, aro, channels)


def _write_pair(bundle: _FileBundle, spec: SynthSpec, out_dir: Path,
                origin_s: float, duration_s: float) -> None:
    lo = int(round(origin_s * FS))
    hi = lo + int(round(duration_s * FS))
    rec = Recording(bundle.subject, bundle.video, FS,
                    {c: bundle.channels[c][lo:hi].copy() for c in CHANNELS})
    name = f"sub_{bundle.subject}_vid_{bundle.video}.csv"
    save_recording(rec, out_dir / "physiology" / name,
                   time_unit=spec.time_unit)
    ts = _annotation_grid(duration_s)
    track = AnnotationTrack(
        ts,
        _labels_at(bundle.valence, ts, origin_s, spec.label_lag_s),
        _labels_at(bundle.arousal, ts, origin_s, spec.label_lag_s))
    save_annotations(track, out_dir / "annotations" / name)


def _subject_groups(subjects, n_folds):
    return [list(g) for g in np.array_split(np.asarray(subjects), n_folds)]


def _quadrant_groups(spec: SynthSpec):
    groups = {}
    for vid in spec.video_ids:
        groups.setdefault(spec.video_quadrant(vid), []).append(vid)
    return [groups[q] for q in QUADRANT_CYCLE if q in groups]


def generate_synthetic_dataset(root, seed: int, spec: SynthSpec):
    """Write a synthetic challenge-layout corpus and return its index.

    Output is byte-identical for a fixed (seed, spec): per-file randomness
    is keyed by (seed, subject, video), not by generation order.
    """
    spec.validate()
    root = Path(root)
    subjects = list(range(1, spec.n_subjects + 1))
    bundles = {(s, v): _synthesize_bundle(seed, s, v, spec)
               for s in subjects for v in spec.video_ids}

    def emit(scenario, fold, split, keys, origin, duration):
        out_dir = root / SCENARIO_DIRS[scenario] / f"fold_{fold}" / split
        for key in keys:
            _write_pair(bundles[key], spec, out_dir, origin, duration)

    all_keys = sorted(bundles)
    if "across_time" in spec.scenarios:
        test_origin = spec.train_duration_s + spec.gap_s
        emit("across_time", 0, "train", all_keys, 0.0,
             spec.train_duration_s)
        emit("across_time", 0, "test", all_keys, test_origin,
             spec.duration_s)
    if "across_subject" in spec.scenarios:
        groups = _subject_groups(subjects, spec.n_subject_folds)
        for fold, test_subjects in enumerate(groups):
            test_keys = [k for k in all_keys if k[0] in test_subjects]
            train_keys = [k for k in all_keys if k[0] not in test_subjects]
            emit("across_subject", fold, "train", train_keys, 0.0,
                 spec.duration_s)
            emit("across_subject", fold, "test", test_keys, 0.0,
                 spec.duration_s)
    if "across_elicitor" in spec.scenarios:
        for fold, test_videos in enumerate(_quadrant_groups(spec)):
            test_keys = [k for k in all_keys if k[1] in test_videos]
            train_keys = [k for k in all_keys if k[1] not in test_videos]
            emit("across_elicitor", fold, "train", train_keys, 0.0,
                 spec.duration_s)
            emit("across_elicitor", fold, "test", test_keys, 0.0,
                 spec.duration_s)
    if "across_version" in spec.scenarios:
        n_q = len(QUADRANT_CYCLE)
        version0 = [v for i, v in enumerate(spec.video_ids) if i // n_q == 0]
        version1 = [v for i, v in enumerate(spec.video_ids) if i // n_q == 1]
        for fold, (train_v, test_v) in enumerate(
                ((version0, version1), (version1, version0))):
            emit("across_version", fold, "train",
                 [k for k in all_keys if k[1] in train_v], 0.0,
                 spec.duration_s)
            emit("across_version", fold, "test",
                 [k for k in all_keys if k[1] in test_v], 0.0,
                 spec.duration_s)
    return enumerate_dataset(root)


def build_official_mock_layout(root) -> None:
    """Write a name-only tree matching the official corpus file counts.

    Files hold just a header row; enough for :func:`enumerate_dataset`
    and fold construction, which never read the data.
    """
    root = Path(root)
    subjects = OFFICIAL_SUBJECTS
    videos = OFFICIAL_VIDEOS
    phys_header = "time," + ",".join(CHANNELS) + "\n"
    ann_header = "time,valence,arousal\n"

    def write_split(scenario, fold, split, keys):
        base = root / SCENARIO_DIRS[scenario] / f"fold_{fold}" / split
        for sub in ("physiology", "annotations"):
            (base / sub).mkdir(parents=True, exist_ok=True)
        for s, v in keys:
            name = f"sub_{s}_vid_{v}.csv"
            (base / "physiology" / name).write_text(phys_header)
            (base / "annotations" / name).write_text(ann_header)

    everything = [(s, v) for s in subjects for v in videos]
    write_split("across_time", 0, "train", everything)
    write_split("across_time", 0, "test", everything)

    groups = _subject_groups(subjects, 5)
    for fold, test_subjects in enumerate(groups):
        write_split("across_subject", fold, "train",
                    [(s, v) for s, v in everything
                     if s not in test_subjects])
        write_split("across_subject", fold, "test",
                    [(s, v) for s, v in everything if s in test_subjects])

    quadrant_pairs = [[videos[i], videos[i + 4]] for i in range(4)]
    for fold, test_videos in enumerate(quadrant_pairs):
        write_split("across_elicitor", fold, "train",
                    [(s, v) for s, v in everything
                     if v not in test_videos])
        write_split("across_elicitor", fold, "test",
                    [(s, v) for s, v in everything if v in test_videos])

    version0, version1 = videos[:4], videos[4:]
    for fold, (train_v, test_v) in enumerate(
            ((version0, version1), (version1, version0))):
        write_split("across_version", fold, "train",
                    [(s, v) for s, v in everything if v in train_v])
        write_split("across_version", fold, "test",
                    [(s, v) for s, v in everything if v in test_v])
