import numpy as np
import pytest

from affectpipe import dsp
from affectpipe.corpus import CHANNELS, Recording
from affectpipe.corpus.synth import synthesize_channels
from affectpipe.errors import (
    DelayOutOfRangeError,
    TimestampOutOfRangeError,
    TooFewPeaksError,
    UnknownKindError,
)
from affectpipe.features import (
    FeatureMatrix,
    WindowConfig,
    build_channel_tracks,
    build_feature_frames,
    clean_channel,
    clean_emg,
    eda_decompose,
    extract_features,
    feature_schema,
    rate_track_from_peaks,
    shift_features,
    subset_mask,
)

FS = 1000.0


def make_recording(duration_s=50.0, seed=0, overrides=None,
                   subject=1, video=0):
    n = int(duration_s * FS)
    rng = np.random.default_rng(seed)
    channels = {c: 0.01 * rng.standard_normal(n) for c in CHANNELS}
    for name, arr in (overrides or {}).items():
        channels[name] = np.asarray(arr, dtype=np.float64)
    return Recording(subject, video, FS, channels)


def synthetic_recording(duration_s=50.0, seed=3):
    n = int(duration_s * FS)
    t = np.arange(n) / FS
    valence = 5.0 + 2.0 * np.sin(2 * np.pi * t / 37.0)
    arousal = 5.0 + 2.5 * np.sin(2 * np.pi * t / 23.0 + 1.0)
    channels = synthesize_channels(valence, arousal,
                                   np.random.default_rng(seed), gain=1.0)
    return Recording(1, 0, FS, channels)


def grid(duration_s, step=0.05):
    return np.arange(int(duration_s / step)) * step


class TestCleanEmg:
    def test_mains_rejected_before_normalization(self):
        # the z-transform makes the final envelope scale-free, so mains
        # rejection is asserted at the pre-normalization stage: the notch
        # cascade + bandpass must leave under 5% of a pure 60 Hz tone
        from affectpipe.dsp import FilterSpec

        t = np.arange(int(20 * FS)) / FS
        sig = dsp.Signal(np.sin(2 * np.pi * 60.0 * t), FS)
        for f0 in (60.0, 120.0, 180.0, 240.0):
            sig = dsp.notch_filter(sig, f0, 3.0)
        sig = dsp.iir_filter(sig, FilterSpec("bandpass", (5.0, 250.0)))
        residue = np.sqrt(np.mean(sig.samples ** 2))
        assert residue < 0.05 * (1 / np.sqrt(2))

    def test_envelope_unaffected_by_mains(self):
        # a 20x mains overlay must not disturb the normalized envelope of
        # the underlying activity
        rng = np.random.default_rng(8)
        n = int(20 * FS)
        t = np.arange(n) / FS
        noise = 0.05 * rng.standard_normal(n)
        mains = 1.0 * np.sin(2 * np.pi * 60.0 * t)
        env_clean = clean_emg(dsp.Signal(noise, FS)).samples
        env_dirty = clean_emg(dsp.Signal(noise + mains, FS)).samples
        assert abs(env_dirty.mean() - env_clean.mean()) \
            < 0.15 * env_clean.mean()

    def test_zero_signal(self):
        env = clean_emg(dsp.Signal(np.zeros(int(10 * FS)), FS))
        assert np.allclose(env.samples, 0.0)

    def test_burst_contrast(self):
        rng = np.random.default_rng(8)
        x = 0.05 * rng.standard_normal(int(6 * FS))
        burst = slice(int(2 * FS), int(3 * FS))
        x[burst] *= 10.0
        env = clean_emg(dsp.Signal(x, FS))
        inside = env.samples[burst].mean()
        outside = np.concatenate(
            (env.samples[:int(2 * FS)], env.samples[int(3 * FS):])).mean()
        assert inside >= 3.0 * outside

    def test_nonnegative_everywhere(self):
        rng = np.random.default_rng(9)
        env = clean_emg(dsp.Signal(rng.standard_normal(int(5 * FS)), FS))
        assert np.all(env.samples >= 0.0)


class TestRateTrack:
    def test_uniform_ibis(self):
        peaks = np.arange(0, 10_000, 1000)
        track = rate_track_from_peaks(peaks, 10_000, FS)
        assert np.allclose(track, 60.0)

    def test_alternating_ibis(self):
        # IBIs 0.5 s / 1.0 s: rate anchors alternate 120 and 60
        peaks = np.cumsum([0, 500, 1000, 500, 1000, 500])
        track = rate_track_from_peaks(peaks, int(peaks[-1]) + 500, FS)
        assert abs(track[peaks[1]] - 120.0) < 1e-9
        assert abs(track[peaks[2]] - 60.0) < 1e-9
        assert abs(track[peaks[3]] - 120.0) < 1e-9
        # held flat outside the peak span
        assert np.allclose(track[:peaks[0] + 1], track[peaks[0]])
        assert np.allclose(track[peaks[-1]:], track[peaks[-1]])
        # linear ramps between anchors
        mid = (peaks[1] + peaks[2]) // 2
        assert abs(track[mid] - 90.0) < 0.1

    def test_too_few(self):
        with pytest.raises(TooFewPeaksError):
            rate_track_from_peaks(np.array([5]), 100, FS)


class TestEdaDecompose:
    def test_constant(self):
        sig = dsp.Signal(np.full(int(30 * FS), 2.5), FS)
        tonic, phasic = eda_decompose(sig)
        assert np.allclose(tonic.samples, 2.5, atol=1e-6)
        assert np.allclose(phasic.samples, 0.0, atol=1e-6)

    def test_reconstruction(self):
        rng = np.random.default_rng(4)
        sig = dsp.Signal(rng.standard_normal(int(20 * FS)), FS)
        tonic, phasic = eda_decompose(sig)
        assert np.allclose(tonic.samples + phasic.samples, sig.samples,
                           atol=1e-9)

    def test_bump_energy_in_phasic(self):
        # a fast event rides on a slow ramp: most of its energy must land
        # in phasic (the 0.05 Hz split keeps the event's area in tonic,
        # which caps the attainable fraction around 0.85 for this shape)
        n = int(60 * FS)
        t = np.arange(n) / FS
        slow = 2.0 + 0.01 * t
        bump = np.zeros(n)
        start = int(25 * FS)
        tau = np.arange(n - start) / FS
        bump[start:] = 0.6 * (1 - np.exp(-tau / 0.1)) * np.exp(-tau / 0.5)
        tonic, phasic = eda_decompose(dsp.Signal(slow + bump, FS))
        win = slice(start - 2000, start + int(8 * FS))
        bump_energy = np.sum(bump[win] ** 2)
        captured = np.sum(phasic.samples[win] ** 2)
        tonic_leak = np.sum((tonic.samples[win] - slow[win]) ** 2)
        assert captured >= 0.8 * bump_energy
        assert captured >= 3.0 * tonic_leak
        assert phasic.samples[win].max() >= 0.85 * bump.max()


class TestExtractFeatures:
    def test_bvp_constant_rate_window(self):
        # beats every second: the rate track is exactly 60 everywhere
        n = int(30 * FS)
        t = np.arange(n) / FS
        x = np.zeros(n)
        for c in np.arange(0.5, 30.0, 1.0):
            x += np.exp(-0.5 * ((t - c) / 0.02) ** 2)
        tracks = build_channel_tracks("bvp", dsp.Signal(x, FS))
        names, vals = extract_features("bvp", tracks, start=int(10 * FS),
                                       end=int(20 * FS))
        row = dict(zip(names, vals))
        assert abs(row["bvp_rate_baseline"] - 60.0) < 1e-6
        assert abs(row["bvp_rate_mean"] - 60.0) < 1e-6
        assert row["bvp_rate_sd"] < 1e-6
        assert abs(row["bvp_rate_trend_linear"]) < 1e-6
        assert row["bvp_rate_trend_r2"] == 0.0

    def test_eda_quiet_window(self):
        sig = dsp.Signal(np.full(int(30 * FS), 2.0), FS)
        tracks = build_channel_tracks("eda", sig)
        names, vals = extract_features("eda", tracks, int(5 * FS),
                                       int(9 * FS))
        row = dict(zip(names, vals))
        assert row["eda_scr_count"] == 0.0
        assert row["eda_scr_amplitude"] == 0.0
        assert row["eda_scr_rise_time"] == 0.0
        assert row["eda_scr_recovery_time"] == 0.0

    def test_unknown_kind(self):
        with pytest.raises(UnknownKindError):
            extract_features("eeg", None, 0, 10)

    def test_table_width_is_69(self):
        cfg = WindowConfig()
        names = feature_schema(cfg)
        windowed = [n for n in names if not n.startswith("ctx_")]
        assert len(windowed) == 69
        per_kind = {
            "bvp": 10, "ecg": 15, "rsp": 20, "eda": 6,
            "emg_zygo": 6, "emg_coru": 6, "emg_trap": 6,
        }
        for kind, dim in per_kind.items():
            cols = [n for n in windowed if n.startswith(kind + "_")]
            assert len(cols) == dim, kind


class TestBuildFeatureFrames:
    def test_default_shape_149(self):
        rec = synthetic_recording(50.0)
        ts = grid(50.0)
        matrix = build_feature_frames(rec, ts)
        assert matrix.n_rows == 1000
        assert matrix.width == 149
        assert len(matrix.column_names) == 149

    def test_zero_recording_rows_finite(self):
        rec = make_recording(20.0, overrides={
            c: np.zeros(int(20 * FS)) for c in CHANNELS})
        matrix = build_feature_frames(rec, grid(20.0))
        assert np.all(np.isfinite(matrix.values))
        assert np.allclose(matrix.column("eda_scr_count"), 0.0)
        assert np.allclose(matrix.column("emg_zygo_bursts"), 0.0)
        assert np.allclose(matrix.column("bvp_rate_mean"), 0.0)

    def test_deterministic(self):
        rec = synthetic_recording(20.0)
        ts = grid(20.0)
        a = build_feature_frames(rec, ts)
        b = build_feature_frames(rec, ts)
        assert np.array_equal(a.values, b.values)
        assert a.column_names == b.column_names

    def test_timestamp_out_of_range(self):
        rec = synthetic_recording(10.0)
        with pytest.raises(TimestampOutOfRangeError):
            build_feature_frames(rec, np.array([10.5]))

    def test_peak_free_prefix_stays_finite(self):
        n = int(40 * FS)
        t = np.arange(n) / FS
        ecg = np.zeros(n)
        for c in np.arange(15.5, 40.0, 1.0):
            ecg += np.exp(-0.5 * ((t - c) / 0.01) ** 2)
        rec = make_recording(40.0, overrides={"ecg": ecg})
        matrix = build_feature_frames(rec, grid(40.0))
        assert np.all(np.isfinite(matrix.values))
        # held-rate convention: early windows carry the first beat rate
        early = matrix.column("ecg_rate_mean")[:100]
        assert np.allclose(early, early[0])

    def test_translation_consistency_beyond_horizon(self):
        rec = synthetic_recording(30.0)
        ts = grid(20.0)  # horizon ends at 20.2 s, well inside 30 s
        base = build_feature_frames(rec, ts)
        longer = Recording(rec.subject_id, rec.video_id, FS, {
            c: np.concatenate([rec.channels[c],
                               np.full(int(5 * FS), 0.123)])
            for c in CHANNELS})
        extended = build_feature_frames(longer, ts)
        assert np.array_equal(base.values, extended.values)

    def test_batch_matches_single_window_path(self):
        rec = synthetic_recording(25.0)
        ts = grid(25.0)
        cfg = WindowConfig()
        matrix = build_feature_frames(rec, ts)
        trimmed = rec.trimmed(int(round(
            (ts.max() + cfg.raw_context_halfwidth_s) * FS)) + 1)
        for kind, channel in (("bvp", "bvp"), ("eda", "gsr"),
                              ("emg_trap", "emg_trap")):
            clean = clean_channel(channel, dsp.Signal(
                trimmed.channels[channel], FS))
            tracks = build_channel_tracks(kind, clean)
            length = int(cfg.window_s(kind) * FS)
            for row in (0, 137, 499):
                end = int(round(ts[row] * FS))
                start = max(end - length + 1, 0)
                names, vals = extract_features(kind, tracks, start, end,
                                               cfg)
                for name, val in zip(names, vals):
                    assert matrix.column(name)[row] == pytest.approx(
                        val, abs=1e-12), (name, row)


class TestShiftFeatures:
    def setup_method(self):
        n = int(30 * FS)
        t = np.arange(n) / FS
        self.rec = make_recording(30.0, overrides={"skt": t.copy()})
        self.ts = grid(25.0)

    def test_delay_zero_is_identity(self):
        base = build_feature_frames(self.rec, self.ts)
        again = shift_features(base, 0.0)
        assert np.array_equal(base.values, again.values)

    def test_ramp_context_shift_is_exact(self):
        base = build_feature_frames(self.rec, self.ts)
        shifted = shift_features(base, 0.05)
        name = "ctx_skt_04"
        interior = slice(50, -50)
        diff = (base.column(name) - shifted.column(name))[interior]
        # drifting channel: 50 samples of slope-1 ramp = 0.05
        assert np.allclose(diff, 0.05, atol=1e-3)

    def test_small_delay_changes_output(self):
        base = build_feature_frames(self.rec, self.ts)
        shifted = shift_features(base, 0.005)
        name = "ctx_skt_04"
        assert not np.allclose(base.column(name), shifted.column(name))

    def test_delay_bounds(self):
        base = build_feature_frames(self.rec, self.ts)
        with pytest.raises(DelayOutOfRangeError):
            shift_features(base, 0.06)
        with pytest.raises(DelayOutOfRangeError):
            shift_features(base, -0.01)

    def test_row_count_unchanged(self):
        base = build_feature_frames(self.rec, self.ts)
        shifted = shift_features(base, 0.05)
        assert shifted.n_rows == base.n_rows
        assert np.array_equal(shifted.timestamps, base.timestamps)


class TestSchemaAndSubsets:
    def test_context_width_formula(self):
        cfg = WindowConfig(raw_context_halfwidth_s=0.5,
                           raw_context_rate_hz=10.0)
        assert cfg.n_context_samples == 10
        names = feature_schema(cfg)
        assert len(names) == 69 + 8 * 10

    def test_offsets_centred(self):
        cfg = WindowConfig()
        offsets = cfg.context_offsets()
        assert offsets.size == 10
        assert abs(offsets.sum()) < 1e-12
        assert np.allclose(np.diff(offsets), 0.05)

    def test_subset_masks_partition_features(self):
        names = feature_schema(WindowConfig())
        total = np.zeros(len(names), dtype=bool)
        for subset in ("BVP", "ECG", "EMG_coru", "EMG_trap", "EMG_zygo",
                       "GSR", "RSP", "SKT"):
            mask = subset_mask(names, subset)
            assert not np.any(total & mask)
            total |= mask
        assert np.all(total)
        assert np.all(subset_mask(names, "ALL"))

    def test_window_config_ordering_enforced(self):
        with pytest.raises(ValueError):
            WindowConfig(emg_s=5.0, eda_s=4.0)

    def test_with_column(self):
        rec = synthetic_recording(10.0)
        matrix = build_feature_frames(rec, grid(10.0))
        out = matrix.with_column("chained_valence", np.zeros(matrix.n_rows))
        assert out.width == matrix.width + 1
        assert out.column_names[-1] == "chained_valence"
