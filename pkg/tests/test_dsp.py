import numpy as np
import pytest

from affectpipe import dsp
from affectpipe.errors import (
    InvalidCutoffError,
    InvalidWindowError,
    TooShortError,
    WindowTooSmallError,
)

FS = 1000.0


def sine(freq, duration=10.0, fs=FS, amp=1.0, phase=0.0):
    t = np.arange(int(duration * fs)) / fs
    return dsp.Signal(amp * np.sin(2 * np.pi * freq * t + phase), fs)


def rms(x):
    return float(np.sqrt(np.mean(np.asarray(x) ** 2)))


class TestIirFilter:
    def test_dc_through_lowpass_preserved(self):
        sig = dsp.Signal(np.full(5000, 2.0), FS)
        out = dsp.iir_filter(sig, dsp.FilterSpec("lowpass", (10.0,)))
        assert np.allclose(out.samples, 2.0, atol=1e-6)

    def test_bandstop_kills_60hz(self):
        out = dsp.iir_filter(sine(60.0),
                             dsp.FilterSpec("bandstop", (58.5, 61.5), order=2))
        assert rms(out.samples) < 0.05

    def test_bandpass_passes_100hz(self):
        out = dsp.iir_filter(sine(100.0), dsp.FilterSpec("bandpass", (5.0, 250.0)))
        assert abs(rms(out.samples) - rms(sine(100.0).samples)) \
            < 0.05 * rms(sine(100.0).samples)

    def test_length_preserved(self):
        sig = sine(10.0, duration=1.0)
        out = dsp.iir_filter(sig, dsp.FilterSpec("lowpass", (40.0,)))
        assert len(out) == len(sig)

    def test_zero_phase_symmetric_pulse(self):
        t = np.arange(2001)
        pulse = np.exp(-0.5 * ((t - 1000) / 50.0) ** 2)
        out = dsp.iir_filter(dsp.Signal(pulse, FS),
                             dsp.FilterSpec("lowpass", (40.0,)))
        assert abs(int(np.argmax(out.samples)) - 1000) <= 1

    def test_invalid_cutoff(self):
        with pytest.raises(InvalidCutoffError):
            dsp.iir_filter(sine(10.0), dsp.FilterSpec("lowpass", (600.0,)))
        with pytest.raises(InvalidCutoffError):
            dsp.FilterSpec("bandpass", (100.0, 50.0)).validate_for(FS)

    def test_too_short_signal(self):
        with pytest.raises(dsp.SignalTooShortError):
            dsp.iir_filter(dsp.Signal(np.ones(5), FS),
                           dsp.FilterSpec("lowpass", (10.0,)))

    def test_scale_equivariance(self):
        rng = np.random.default_rng(7)
        x = rng.standard_normal(4000)
        spec = dsp.FilterSpec("bandpass", (5.0, 250.0))
        once = dsp.iir_filter(dsp.Signal(x, FS), spec).samples
        scaled = dsp.iir_filter(dsp.Signal(3.5 * x, FS), spec).samples
        assert np.allclose(scaled, 3.5 * once, atol=1e-9)


class TestNotchFilter:
    def test_60hz_attenuated(self):
        out = dsp.notch_filter(sine(60.0), 60.0, 3.0)
        assert rms(out.samples) < 0.05

    def test_30hz_passes(self):
        out = dsp.notch_filter(sine(30.0), 60.0, 3.0)
        assert abs(rms(out.samples) - 1 / np.sqrt(2)) < 0.05 / np.sqrt(2)

    def test_series_cascade_on_four_tones(self):
        t = np.arange(int(10 * FS)) / FS
        x = sum(np.sin(2 * np.pi * f * t) for f in (60, 120, 180, 240))
        sig = dsp.Signal(x, FS)
        for f0 in (60.0, 120.0, 180.0, 240.0):
            sig = dsp.notch_filter(sig, f0, 3.0)
        assert rms(sig.samples) < 0.1

    def test_notch_above_nyquist_rejected(self):
        with pytest.raises(InvalidCutoffError):
            dsp.notch_filter(sine(10.0), 499.5, 3.0)


class TestDetrend:
    def test_ramp_removed(self):
        t = np.arange(1000) / FS
        out = dsp.detrend(dsp.Signal(t, FS))
        assert np.max(np.abs(out.samples)) < 1e-9

    def test_constant_removed(self):
        out = dsp.detrend(dsp.Signal(np.full(100, 7.0), FS))
        assert np.allclose(out.samples, 0.0)

    def test_sine_plus_ramp_recovers_sine(self):
        t = np.arange(int(10 * FS)) / FS
        # even symmetry about the window midpoint + whole periods makes
        # the oscillation exactly orthogonal to the fitted line
        t_mid = t[len(t) // 2] - 0.5 / FS
        pure = np.sin(2 * np.pi * 2.0 * (t - t_mid) + np.pi / 2)
        out = dsp.detrend(dsp.Signal(pure + 0.5 * t, FS))
        assert np.max(np.abs(out.samples - pure)) < 1e-6

    def test_length_one(self):
        out = dsp.detrend(dsp.Signal([42.0], FS))
        assert out.samples.tolist() == [0.0]

    def test_output_mean_near_zero(self):
        rng = np.random.default_rng(3)
        out = dsp.detrend(dsp.Signal(rng.standard_normal(777) + 5, FS))
        assert abs(out.samples.mean()) < 1e-9


class TestZscore:
    def test_constant_is_zero(self):
        out = dsp.zscore(dsp.Signal(np.full(50, 3.3), FS))
        assert np.allclose(out.samples, 0.0)

    def test_two_point(self):
        out = dsp.zscore(dsp.Signal([0.0, 10.0], FS))
        assert np.allclose(out.samples, [-1.0, 1.0])

    def test_unit_sd(self):
        rng = np.random.default_rng(11)
        out = dsp.zscore(dsp.Signal(rng.standard_normal(500) * 4 + 2, FS))
        assert abs(out.samples.std() - 1.0) < 1e-9
        assert abs(out.samples.mean()) < 1e-9

    def test_idempotent(self):
        rng = np.random.default_rng(12)
        sig = dsp.Signal(rng.standard_normal(300), FS)
        once = dsp.zscore(sig)
        twice = dsp.zscore(once)
        assert np.allclose(once.samples, twice.samples, atol=1e-9)


class TestRmsEnvelope:
    def test_constant(self):
        out = dsp.rms_envelope(dsp.Signal(np.full(500, -3.0), FS), 0.1)
        assert np.allclose(out.samples, 3.0)

    def test_unit_sine_interior(self):
        sig = sine(10.0, duration=5.0)  # 0.1 s window = one full period
        out = dsp.rms_envelope(sig, 0.1)
        interior = out.samples[100:-100]
        assert np.allclose(interior, 1 / np.sqrt(2), rtol=0.01)

    def test_zero_signal(self):
        out = dsp.rms_envelope(dsp.Signal(np.zeros(100), FS), 0.05)
        assert np.allclose(out.samples, 0.0)

    def test_window_too_small(self):
        with pytest.raises(WindowTooSmallError):
            dsp.rms_envelope(dsp.Signal(np.ones(10), FS), 0.0001)

    def test_length_and_sign(self):
        rng = np.random.default_rng(5)
        sig = dsp.Signal(rng.standard_normal(321), FS)
        out = dsp.rms_envelope(sig, 0.03)
        assert len(out) == 321
        assert np.all(out.samples >= 0.0)


class TestSavgol:
    def test_cubic_reproduced_on_interior(self):
        t = np.arange(5000) / FS
        cubic = 3 * t ** 3 - 2 * t ** 2 + t - 0.5
        out = dsp.savgol_smooth(dsp.Signal(cubic, FS), 3, 1.0)
        interior = slice(501, -501)
        assert np.max(np.abs(out.samples[interior] - cubic[interior])) < 1e-6

    def test_constant(self):
        out = dsp.savgol_smooth(dsp.Signal(np.full(3000, 2.5), FS), 3, 1.0)
        assert np.allclose(out.samples, 2.5, atol=1e-9)

    def test_noise_variance_reduced(self):
        rng = np.random.default_rng(21)
        x = rng.standard_normal(8000)
        out = dsp.savgol_smooth(dsp.Signal(x, FS), 3, 1.0)
        assert out.samples.var() < x.var()

    def test_window_must_exceed_order(self):
        with pytest.raises(InvalidWindowError):
            dsp.savgol_smooth(dsp.Signal(np.ones(100), FS), 3, 0.003)

    def test_window_longer_than_signal(self):
        with pytest.raises(InvalidWindowError):
            dsp.savgol_smooth(dsp.Signal(np.ones(100), FS), 3, 1.0)


class TestMovingAverage:
    def test_constant(self):
        out = dsp.moving_average(np.full(40, 5.0), 10)
        assert np.allclose(out, 5.0)

    def test_2hz_sine_at_20hz_nulled(self):
        t = np.arange(200) / 20.0
        out = dsp.moving_average(np.sin(2 * np.pi * 2.0 * t), 10)
        assert np.max(np.abs(out[10:])) < 0.02

    def test_impulse_plateau(self):
        x = np.zeros(50)
        x[20] = 1.0
        out = dsp.moving_average(x, 10)
        assert np.allclose(out[20:30], 0.1)
        assert np.allclose(out[:20], 0.0)
        assert np.allclose(out[30:], 0.0)

    def test_output_within_window_bounds(self):
        rng = np.random.default_rng(9)
        x = rng.uniform(-4, 4, size=200)
        out = dsp.moving_average(x, 7)
        for i in range(200):
            win = x[max(0, i - 6):i + 1]
            assert win.min() - 1e-12 <= out[i] <= win.max() + 1e-12

    def test_scale_equivariance(self):
        rng = np.random.default_rng(10)
        x = rng.standard_normal(100)
        assert np.allclose(dsp.moving_average(2.0 * x, 10),
                           2.0 * np.asarray(dsp.moving_average(x, 10)))


class TestDetectPeaks:
    def test_1hz_sine_has_ten_peaks(self):
        peaks = dsp.detect_peaks(sine(1.0, duration=10.0), 0.5, 0.1)
        assert len(peaks) == 10
        gaps = np.diff(peaks)
        assert np.all(np.abs(gaps - 1000) <= 2)

    def test_constant_signal_empty(self):
        peaks = dsp.detect_peaks(dsp.Signal(np.full(100, 1.0), FS), 0.1, 0.1)
        assert len(peaks) == 0

    def test_ecg_like_spike_train(self):
        t = np.arange(int(60 * FS)) / FS
        x = np.zeros_like(t)
        centers = np.arange(0.5, 60.0, 1.0)
        for c in centers:
            x += np.exp(-0.5 * ((t - c) / 0.01) ** 2)
        rng = np.random.default_rng(2)
        x += 0.01 * rng.standard_normal(x.size)
        peaks = dsp.detect_peaks(dsp.Signal(x, FS), 0.4, 0.3)
        assert len(peaks) == 60
        assert np.all(np.abs(peaks - centers * FS) <= 2)

    def test_min_distance_respected(self):
        rng = np.random.default_rng(4)
        sig = dsp.Signal(rng.standard_normal(5000), FS)
        peaks = dsp.detect_peaks(sig, 0.05, 0.01)
        assert np.all(np.diff(peaks) >= 50)
        assert np.all(np.diff(peaks) > 0)

    def test_higher_prominence_wins(self):
        # two nearby bumps: the taller must survive thinning
        t = np.arange(2000) / FS
        x = (1.0 * np.exp(-0.5 * ((t - 0.5) / 0.02) ** 2)
             + 0.4 * np.exp(-0.5 * ((t - 0.8) / 0.02) ** 2))
        peaks = dsp.detect_peaks(dsp.Signal(x, FS), 0.5, 0.05)
        assert len(peaks) == 1
        assert abs(peaks[0] - 500) <= 2


class TestFitTrend:
    def test_pure_linear(self):
        t = np.arange(2000) / FS
        lin, quad, r2 = dsp.fit_trend(2.0 * t, FS)
        assert abs(lin - 2.0) < 1e-6
        assert abs(quad) < 1e-6
        assert abs(r2 - 1.0) < 1e-6

    def test_constant_convention(self):
        assert dsp.fit_trend(np.full(100, 4.0), FS) == (0.0, 0.0, 0.0)

    def test_pure_quadratic(self):
        t = np.arange(0, 10.0, 0.01)
        lin, quad, r2 = dsp.fit_trend(t ** 2, 100.0)
        assert abs(lin) < 1e-6
        assert abs(quad - 1.0) < 1e-6
        assert abs(r2 - 1.0) < 1e-6

    def test_too_short(self):
        with pytest.raises(TooShortError):
            dsp.fit_trend([1.0, 2.0], FS)

    def test_r2_in_unit_interval(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            y = rng.standard_normal(rng.integers(3, 50))
            _, _, r2 = dsp.fit_trend(y, 10.0)
            assert 0.0 <= r2 <= 1.0
