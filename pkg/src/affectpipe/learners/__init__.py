from .base import (
    KIND_DEFAULTS,
    KIND_NAMES,
    ModelKind,
    TrainedModel,
    load_model,
    predict,
    save_model,
    schema_hash,
    train_base,
)
from .ensemble import EnsembleModel, fit_greedy_weighted_ensemble

__all__ = [
    "KIND_DEFAULTS",
    "KIND_NAMES",
    "EnsembleModel",
    "ModelKind",
    "TrainedModel",
    "fit_greedy_weighted_ensemble",
    "load_model",
    "predict",
    "save_model",
    "schema_hash",
    "train_base",
]
