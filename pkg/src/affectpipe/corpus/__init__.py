from .io import (
    CHANNELS,
    AnnotationTrack,
    Recording,
    load_annotation_times,
    load_annotations,
    load_recording,
    parse_entry_name,
    save_annotations,
    save_recording,
)
from .index import SCENARIOS, DatasetIndex, IndexEntry, enumerate_dataset
from .synth import SynthSpec, generate_synthetic_dataset, synthesize_channels

__all__ = [
    "CHANNELS",
    "SCENARIOS",
    "AnnotationTrack",
    "DatasetIndex",
    "IndexEntry",
    "Recording",
    "SynthSpec",
    "enumerate_dataset",
    "generate_synthetic_dataset",
    "load_annotation_times",
    "load_annotations",
    "load_recording",
    "parse_entry_name",
    "save_annotations",
    "save_recording",
    "synthesize_channels",
]
