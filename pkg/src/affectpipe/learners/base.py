"""Base regressors, training dispatch, and model persistence.

Six self-contained model kinds stand in for an AutoML roster: two
k-nearest-neighbour variants, two bagged-tree variants, gradient-boosted
trees, and ridge regression. Distance- and penalty-based kinds
standardize features internally; trees consume raw values. Every fit is
bit-reproducible from (data, hyperparameters, seed).
"""

import hashlib
import pickle
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import LearnerError, SchemaMismatchError, ShapeMismatchError
from .trees import ForestRegressor, GradientBoostedTrees

MODEL_FORMAT = "affectpipe-model"
MODEL_FORMAT_VERSION = 1

#: Hyperparameter defaults per kind (conventional stand-ins recorded in
#: run configs; no hyperparameter search happens anywhere).
KIND_DEFAULTS = {
    "knn_uniform": {"k": 5},
    "knn_distance": {"k": 5},
    "random_forest": {"n_trees": 100, "max_depth": 12, "min_leaf": 5},
    "extra_trees": {"n_trees": 100, "max_depth": 12, "min_leaf": 5},
    "gradient_boosted_trees": {"n_rounds": 200, "max_depth": 3,
                               "min_leaf": 5, "learning_rate": 0.1},
    "ridge_linear": {"l2": 1.0},
}

KIND_NAMES = tuple(KIND_DEFAULTS)


def _require(cond, message):
    if not cond:
        raise LearnerError(message)


@dataclass(frozen=True)
class ModelKind:
    """A learner family plus validated hyperparameters."""

    name: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in KIND_DEFAULTS:
            raise LearnerError(f"unknown model kind {self.name!r}; "
                               f"expected one of {KIND_NAMES}")
        merged = dict(KIND_DEFAULTS[self.name])
        unknown = set(self.params) - set(merged)
        if unknown:
            raise LearnerError(
                f"{self.name} does not accept {sorted(unknown)}")
        merged.update(self.params)
        if "k" in merged:
            _require(int(merged["k"]) >= 1, "k must be >= 1")
        for key in ("n_trees", "n_rounds", "max_depth", "min_leaf"):
            if key in merged:
                _require(int(merged[key]) >= 1, f"{key} must be >= 1")
        if "learning_rate" in merged:
            _require(0.0 < merged["learning_rate"] <= 1.0,
                     "learning_rate must be in (0, 1]")
        if "l2" in merged:
            _require(merged["l2"] >= 0.0, "l2 penalty must be >= 0")
        object.__setattr__(self, "params", merged)

    @property
    def label(self) -> str:
        return self.name


class _Standardizer:
    def fit(self, X):
        self.mean = X.mean(axis=0)
        sd = X.std(axis=0)
        sd[sd == 0.0] = 1.0
        self.sd = sd
        return self

    def transform(self, X):
        return (X - self.mean) / self.sd


class KnnRegressor:
    def __init__(self, k: int, weighted: bool):
        self.k = int(k)
        self.weighted = weighted

    def fit(self, X, y, rng):
        del rng
        self.scaler = _Standardizer().fit(X)
        self.X = self.scaler.transform(X)
        self.y = y.copy()
        return self

    def predict(self, X):
        Q = self.scaler.transform(X)
        k = min(self.k, self.X.shape[0])
        d2 = (np.sum(Q ** 2, axis=1)[:, None]
              - 2.0 * Q @ self.X.T
              + np.sum(self.X ** 2, axis=1)[None, :])
        d2 = np.maximum(d2, 0.0)
        order = np.argsort(d2, axis=1, kind="stable")[:, :k]
        rows = np.arange(Q.shape[0])[:, None]
        nd2 = d2[rows, order]
        ny = self.y[order]
        if not self.weighted:
            return ny.mean(axis=1)
        out = np.empty(Q.shape[0])
        exact = nd2[:, 0] <= 1e-24
        if np.any(exact):
            for i in np.flatnonzero(exact):
                hits = nd2[i] <= 1e-24
                out[i] = ny[i, hits].mean()
        rest = ~exact
        if np.any(rest):
            w = 1.0 / np.sqrt(nd2[rest])
            out[rest] = np.sum(w * ny[rest], axis=1) / np.sum(w, axis=1)
        return out


class RidgeRegressor:
    def __init__(self, l2: float):
        self.l2 = float(l2)

    def fit(self, X, y, rng):
        del rng
        self.scaler = _Standardizer().fit(X)
        Xs = self.scaler.transform(X)
        self.y_mean = float(y.mean())
        yc = y - self.y_mean
        if self.l2 == 0.0:
            beta, *_ = np.linalg.lstsq(Xs, yc, rcond=None)
        else:
            gram = Xs.T @ Xs + self.l2 * np.eye(Xs.shape[1])
            beta = np.linalg.solve(gram, Xs.T @ yc)
        self.beta = beta
        return self

    @property
    def coefficients(self):
        """Per-feature slopes in original (unstandardized) units."""
        return self.beta / self.scaler.sd

    def predict(self, X):
        return self.scaler.transform(X) @ self.beta + self.y_mean


def _make_impl(kind: ModelKind):
    p = kind.params
    if kind.name == "knn_uniform":
        return KnnRegressor(p["k"], weighted=False)
    if kind.name == "knn_distance":
        return KnnRegressor(p["k"], weighted=True)
    if kind.name == "random_forest":
        return ForestRegressor(p["n_trees"], p["max_depth"], p["min_leaf"],
                               splitter="histogram")
    if kind.name == "extra_trees":
        return ForestRegressor(p["n_trees"], p["max_depth"], p["min_leaf"],
                               splitter="random")
    if kind.name == "gradient_boosted_trees":
        return GradientBoostedTrees(p["n_rounds"], p["max_depth"],
                                    p["min_leaf"], p["learning_rate"])
    if kind.name == "ridge_linear":
        return RidgeRegressor(p["l2"])
    raise LearnerError(f"unhandled kind {kind.name!r}")


@dataclass(frozen=True)
class TrainedModel:
    kind: ModelKind
    impl: object
    feature_width: int
    target: str
    seed: int
    schema_hash: str | None = None


def train_base(kind: ModelKind, X, y, seed: int, target: str = "",
               schema_hash: str | None = None) -> TrainedModel:
    """Fit one base model; bit-reproducible for a fixed seed."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ShapeMismatchError(
            f"X {X.shape} does not align with y {y.shape}")
    if X.shape[0] < 2:
        raise ShapeMismatchError("need at least 2 training rows")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise LearnerError("training data contains non-finite entries")
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    impl = _make_impl(kind).fit(X, y, rng)
    return TrainedModel(kind, impl, X.shape[1], target, int(seed),
                        schema_hash)


def predict(model, X) -> np.ndarray:
    """Predictions from a TrainedModel or EnsembleModel."""
    from .ensemble import EnsembleModel

    X = np.asarray(X, dtype=np.float64)
    if isinstance(model, EnsembleModel):
        width = model.members[0].feature_width
        if X.ndim != 2 or X.shape[1] != width:
            raise ShapeMismatchError(
                f"expected {width} features, got {X.shape}")
        preds = np.stack([predict(m, X) for m in model.members])
        return model.weights @ preds
    if X.ndim != 2 or X.shape[1] != model.feature_width:
        raise ShapeMismatchError(
            f"expected {model.feature_width} features, got {X.shape}")
    out = np.asarray(model.impl.predict(X), dtype=np.float64)
    if not np.all(np.isfinite(out)):
        raise LearnerError("model produced non-finite predictions")
    return out


def schema_hash(column_names) -> str:
    """Stable digest of a feature schema, embedded in saved models."""
    joined = "\n".join(column_names)
    return hashlib.sha256(joined.encode("utf-8")).hexdigest()


def save_model(model, path) -> None:
    """Persist a trained model (or ensemble) with format versioning."""
    payload = {
        "format": MODEL_FORMAT,
        "version": MODEL_FORMAT_VERSION,
        "schema_hash": getattr(model, "schema_hash", None),
        "model": model,
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        pickle.dump(payload, fh, protocol=pickle.HIGHEST_PROTOCOL)


def load_model(path, expected_schema_hash: str | None = None):
    """Load a persisted model, refusing on schema or format mismatch."""
    with open(path, "rb") as fh:
        payload = pickle.load(fh)
    if not isinstance(payload, dict) or \
            payload.get("format") != MODEL_FORMAT:
        raise SchemaMismatchError(f"{path} is not a model file")
    if payload.get("version") != MODEL_FORMAT_VERSION:
        raise SchemaMismatchError(
            f"{path} has format version {payload.get('version')}, "
            f"expected {MODEL_FORMAT_VERSION}")
    if expected_schema_hash is not None and \
            payload.get("schema_hash") != expected_schema_hash:
        raise SchemaMismatchError(
            f"{path} was trained on a different feature schema")
    return payload["model"]
