from .cleaning import clean_channel, clean_emg, eda_decompose
from .matrix import (
    FEATURE_KINDS,
    SIGNAL_SUBSETS,
    FeatureMatrix,
    build_channel_tracks,
    build_feature_frames,
    extract_features,
    feature_schema,
    shift_features,
    subset_mask,
)
from .tracks import rate_track_from_peaks
from .windows import WindowConfig

__all__ = [
    "FEATURE_KINDS",
    "SIGNAL_SUBSETS",
    "FeatureMatrix",
    "WindowConfig",
    "build_channel_tracks",
    "build_feature_frames",
    "clean_channel",
    "clean_emg",
    "eda_decompose",
    "extract_features",
    "feature_schema",
    "rate_track_from_peaks",
    "shift_features",
    "subset_mask",
]
