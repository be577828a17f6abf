"""Per-channel cleaning pipelines applied before feature extraction.

The muscle channels get the full mains-rejection chain (notch cascade,
wide bandpass, detrend, z-transform) and are reduced to a smoothed RMS
envelope. The remaining channels get conventional band limits for their
physiological content; everything stays at the native 1 kHz rate and
original length.
"""

from .. import dsp
from ..dsp import FilterSpec, Signal

#: Mains fundamental and harmonics removed from EMG.
EMG_NOTCH_HZ = (60.0, 120.0, 180.0, 240.0)
EMG_NOTCH_WIDTH_HZ = 3.0
EMG_BAND_HZ = (5.0, 250.0)
EMG_RMS_WINDOW_S = 0.1
EMG_SAVGOL_ORDER = 3
EMG_SAVGOL_LENGTH_S = 1.0

#: Cutoff splitting electrodermal activity into tonic and phasic parts.
EDA_TONIC_CUTOFF_HZ = 0.05


def clean_emg(raw: Signal) -> Signal:
    """Muscle-activity envelope: notches, bandpass, detrend, z-transform,
    100 ms RMS, third-order Savitzky-Golay over 1 s, floored at zero."""
    sig = raw
    for f0 in EMG_NOTCH_HZ:
        sig = dsp.notch_filter(sig, f0, EMG_NOTCH_WIDTH_HZ)
    sig = dsp.iir_filter(sig, FilterSpec("bandpass", EMG_BAND_HZ))
    sig = dsp.detrend(sig)
    sig = dsp.zscore(sig)
    sig = dsp.rms_envelope(sig, EMG_RMS_WINDOW_S)
    sig = dsp.savgol_smooth(sig, EMG_SAVGOL_ORDER, EMG_SAVGOL_LENGTH_S)
    return sig.replace(sig.samples.clip(min=0.0))


def clean_channel(name: str, raw: Signal) -> Signal:
    """Dispatch the channel-appropriate cleaning pipeline."""
    if name.startswith("emg_"):
        return clean_emg(raw)
    if name == "ecg":
        return dsp.iir_filter(raw, FilterSpec("bandpass", (0.5, 45.0)))
    if name == "bvp":
        return dsp.iir_filter(raw, FilterSpec("bandpass", (0.5, 8.0)))
    if name == "gsr":
        return dsp.iir_filter(raw, FilterSpec("lowpass", (3.0,)))
    if name == "rsp":
        return dsp.iir_filter(raw, FilterSpec("bandpass", (0.05, 1.0)))
    if name == "skt":
        return dsp.iir_filter(raw, FilterSpec("lowpass", (1.0,)))
    raise KeyError(f"unknown channel {name!r}")


def eda_decompose(clean: Signal):
    """Split cleaned electrodermal activity into (tonic, phasic).

    Tonic is a 0.05 Hz lowpass of the input (with padding long enough for
    that cutoff); phasic is the residual, so the two always reconstruct
    the input exactly.
    """
    padlen = min(len(clean) - 1, int(40.0 * clean.sample_rate))
    tonic = dsp.iir_filter(
        clean, FilterSpec("lowpass", (EDA_TONIC_CUTOFF_HZ,), order=2),
        padlen=padlen)
    phasic = clean.replace(clean.samples - tonic.samples)
    return tonic, phasic
