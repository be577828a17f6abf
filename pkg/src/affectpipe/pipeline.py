"""Per-scenario training and prediction orchestration.

One consistent architecture across scenarios: build feature matrices per
training file, group them by the scenario's model-grouping rule, fit the
base-learner roster plus a greedy weighted ensemble per (group, target),
then predict each test file, late-fusing when several models apply
(across_version) and post-smoothing/clamping every track. Runs are fully
deterministic from the config seed; outputs land under an output root
mirroring the input layout.
"""

import hashlib
import json
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .corpus.index import SCENARIO_DIRS, DatasetIndex, IndexEntry
from .corpus.io import (
    ANNOTATION_STEP,
    AnnotationTrack,
    load_annotation_times,
    load_annotations,
    load_recording,
    save_annotations,
)
from .errors import (
    ConfigError,
    EmptyListError,
    GroupTrainingError,
    LengthMismatchError,
    MissingColumnError,
    NoMatchingModelError,
)
from .features.matrix import FeatureMatrix, build_feature_frames
from .features.windows import WindowConfig
from .learners import (
    ModelKind,
    fit_greedy_weighted_ensemble,
    predict,
    save_model,
    schema_hash,
    train_base,
)
from .scenarios import (
    TARGETS,
    build_folds,
    quadrant_meta_analysis,
    training_subsets_for_target,
    write_fold_manifests,
)

RATING_MIN = 0.5
RATING_MAX = 9.5

LABEL_MODES = ("independent", "chain_valence_first", "chain_arousal_first")

#: Default roster: every self-contained kind at its stock settings.
DEFAULT_ROSTER = tuple(ModelKind(name) for name in
                       ("knn_uniform", "knn_distance", "random_forest",
                        "extra_trees", "gradient_boosted_trees",
                        "ridge_linear"))


@dataclass(frozen=True)
class RunConfig:
    scenario: str
    seed: int = 0
    window: WindowConfig = field(default_factory=WindowConfig)
    learners: tuple = DEFAULT_ROSTER
    ensemble_iterations: int = 25
    validation_fraction: float = 0.2
    validation_chunks: int = 4
    label_mode: str = "independent"
    smoothing_n: int = 10
    save_models: bool = True
    workers: int = 1

    def __post_init__(self):
        if self.label_mode not in LABEL_MODES:
            raise ConfigError(f"label_mode must be one of {LABEL_MODES}")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ConfigError("validation_fraction must be in (0, 1)")
        if self.validation_chunks < 1:
            raise ConfigError("validation_chunks must be >= 1")
        if self.smoothing_n < 1:
            raise ConfigError("smoothing_n must be >= 1")
        if self.ensemble_iterations < 1:
            raise ConfigError("ensemble_iterations must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not self.learners:
            raise ConfigError("learner roster is empty")
        object.__setattr__(self, "learners", tuple(self.learners))

    def to_dict(self) -> dict:
        window = {f.name: getattr(self.window, f.name)
                  for f in fields(WindowConfig)}
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "window": window,
            "learners": [{"kind": k.name, "params": dict(k.params)}
                         for k in self.learners],
            "ensemble_iterations": self.ensemble_iterations,
            "validation_fraction": self.validation_fraction,
            "validation_chunks": self.validation_chunks,
            "label_mode": self.label_mode,
            "smoothing_n": self.smoothing_n,
            "save_models": self.save_models,
            "workers": self.workers,
        }


def config_hash(payload: dict) -> str:
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def derive_seed(base_seed: int, *parts) -> int:
    """Stable per-model seed from the run seed and a structural key."""
    text = ":".join(str(p) for p in (base_seed,) + parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


@dataclass(frozen=True)
class PredictionTrack:
    subject_id: int
    video_id: int
    timestamps: np.ndarray
    valence: np.ndarray
    arousal: np.ndarray
    provenance: dict = field(default_factory=dict, compare=False)

    def target(self, name: str) -> np.ndarray:
        return getattr(self, name)


def late_fuse_mean(predictions) -> np.ndarray:
    """Elementwise mean of equal-length prediction vectors."""
    predictions = [np.asarray(p, dtype=np.float64) for p in predictions]
    if not predictions:
        raise EmptyListError("nothing to fuse")
    length = predictions[0].size
    for p in predictions:
        if p.size != length:
            raise LengthMismatchError(
                f"prediction lengths differ: {p.size} vs {length}")
    return np.mean(np.stack(predictions), axis=0)


def postprocess_track(raw, smoothing_n: int = 10) -> np.ndarray:
    """Trailing moving average then clamp to the rating scale."""
    from .dsp import moving_average

    smoothed = moving_average(np.asarray(raw, dtype=np.float64),
                              smoothing_n)
    return np.clip(smoothed, RATING_MIN, RATING_MAX)


# --- feature assembly -------------------------------------------------------

def _strip_source(matrix: FeatureMatrix) -> FeatureMatrix:
    return FeatureMatrix(matrix.timestamps, matrix.values,
                         matrix.column_names, matrix.subject_id,
                         matrix.video_id)


def _entry_features(entry: IndexEntry, window: WindowConfig):
    """(matrix, annotation-or-None) for one corpus entry."""
    recording = load_recording(entry.physiology_path)
    track = None
    if entry.annotation_path is not None:
        try:
            track = load_annotations(entry.annotation_path)
            timestamps = track.timestamps
        except MissingColumnError:
            # held-out test grids ship timestamps without ratings
            timestamps = load_annotation_times(entry.annotation_path)
    else:
        n = int(round(recording.duration / ANNOTATION_STEP))
        timestamps = np.arange(n) * ANNOTATION_STEP
    matrix = build_feature_frames(recording, timestamps, window)
    return _strip_source(matrix), track


def _features_task(args):
    entry, window = args
    return entry.physiology_path, _entry_features(entry, window)


def _gather_features(entries, window: WindowConfig, workers: int) -> dict:
    """Feature matrices and annotations keyed by physiology path."""
    unique = {}
    for entry in entries:
        unique.setdefault(entry.physiology_path, entry)
    tasks = [(entry, window) for entry in unique.values()]
    out = {}
    if workers > 1 and len(tasks) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            for path, payload in pool.map(_features_task, tasks):
                out[path] = payload
    else:
        for task in tasks:
            path, payload = _features_task(task)
            out[path] = payload
    return out


def _temporal_split(row_slices, n_rows: int, fraction: float,
                    chunks: int = 1):
    """Temporal holdout: the tail ``fraction`` of each of ``chunks``
    equal time segments per file.

    Never random. A single tail block turned out to reward learners that
    memorize the adjacent training plateau, so the holdout is spread over
    several tail blocks to sample more of each file's dynamics.
    """
    val_mask = np.zeros(n_rows, dtype=bool)
    for lo, hi in row_slices:
        bounds = np.linspace(lo, hi, chunks + 1).astype(int)
        for seg_lo, seg_hi in zip(bounds[:-1], bounds[1:]):
            seg = seg_hi - seg_lo
            if seg < 2:
                continue
            n_val = min(max(int(round(fraction * seg)), 1), seg - 1)
            val_mask[seg_hi - n_val:seg_hi] = True
    if not val_mask.any() or val_mask.all():
        raise ConfigError("temporal split left train or validation empty")
    return ~val_mask, val_mask


def _group_training_arrays(entries, features, target: str,
                           chain_column: str | None):
    blocks, labels, slices = [], [], []
    offset = 0
    for entry in entries:
        matrix, track = features[entry.physiology_path]
        if track is None:
            raise NoMatchingModelError(
                f"training file {entry.name} has no ratings")
        values = matrix.values
        if chain_column:
            values = np.hstack(
                (values, track.target(chain_column).reshape(-1, 1)))
        blocks.append(values)
        labels.append(track.target(target))
        slices.append((offset, offset + values.shape[0]))
        offset += values.shape[0]
    return np.vstack(blocks), np.concatenate(labels), slices


def _train_group(cfg: RunConfig, X, y, slices, group_key: str,
                 target: str, columns):
    train_mask, val_mask = _temporal_split(slices, X.shape[0],
                                           cfg.validation_fraction,
                                           cfg.validation_chunks)
    digest = schema_hash(columns)
    members = []
    for kind in cfg.learners:
        seed = derive_seed(cfg.seed, cfg.scenario, group_key, target,
                           kind.name)
        members.append(train_base(kind, X[train_mask], y[train_mask],
                                  seed, target=target, schema_hash=digest))
    return fit_greedy_weighted_ensemble(members, X[val_mask], y[val_mask],
                                        cfg.ensemble_iterations)


def _chain_order(label_mode: str):
    if label_mode == "chain_arousal_first":
        return ("arousal", "valence")
    return ("valence", "arousal")


def _elicitor_quadrants(index: DatasetIndex, scenario: str):
    groups = []
    for fold in index.folds(scenario):
        groups.append(tuple(sorted(
            {e.video_id for e in index.select(scenario, fold, "test")})))
    tracks = []
    seen = set()
    for entry in index.select(scenario, split="train"):
        key = (entry.subject_id, entry.video_id)
        if key in seen or entry.annotation_path is None:
            continue
        seen.add(key)
        tracks.append((entry.video_id,
                       load_annotations(entry.annotation_path)))
    return quadrant_meta_analysis(tracks, video_groups=groups)


def run_scenario(cfg: RunConfig, index: DatasetIndex,
                 output_root=None):
    """Train, predict, and postprocess one scenario.

    Returns (prediction tracks, manifest dict). With ``output_root`` set,
    predictions are written as ``time,valence,arousal`` CSVs mirroring
    the input layout, fold manifests and the run manifest land next to
    them, and trained ensembles are persisted when configured.
    """
    scenario = cfg.scenario
    quadrants = (_elicitor_quadrants(index, scenario)
                 if scenario == "across_elicitor" else None)
    folds = build_folds(scenario, index, quadrants)
    out_root = Path(output_root) if output_root is not None else None

    chained = cfg.label_mode != "independent"
    first_target, second_target = _chain_order(cfg.label_mode)

    tracks_out = []
    manifest_groups = {}
    prediction_hashes = {}

    for fold in folds:
        features = _gather_features(
            fold.train_entries + fold.test_entries, cfg.window,
            cfg.workers)

        models = {}
        for target in TARGETS:
            chain_col = (first_target if chained
                         and target == second_target else None)
            for group_key, entries in fold.groups_for(target).items():
                columns = features[
                    entries[0].physiology_path][0].column_names
                if chain_col:
                    columns = columns + (f"chained_{chain_col}",)
                try:
                    X, y, slices = _group_training_arrays(
                        entries, features, target, chain_col)
                    ensemble = _train_group(cfg, X, y, slices, group_key,
                                            target, columns)
                except Exception as err:
                    raise GroupTrainingError(
                        f"{scenario} fold {fold.fold_id} group "
                        f"{group_key} target {target}: {err}") from err
                models[(target, group_key)] = ensemble
                manifest_groups[
                    f"{scenario}/fold_{fold.fold_id}/{target}/{group_key}"
                ] = ensemble.validation_rmse

        if out_root is not None and cfg.save_models:
            for (target, group_key), ensemble in models.items():
                safe = group_key.replace(":", "_").replace("+", "-")
                save_model(ensemble,
                           out_root / "models" / scenario
                           / f"fold_{fold.fold_id}" / f"{target}__{safe}.bin")

        for entry in fold.test_entries:
            matrix, _track = features[entry.physiology_path]
            predictions = {}
            fused_models = {}
            for target in _chain_order(cfg.label_mode):
                values = matrix.values
                if chained and target == second_target:
                    chain_vec = predictions[first_target]
                    values = np.hstack((values,
                                        chain_vec.reshape(-1, 1)))
                per_model = []
                keys = []
                for group_key, _entries in training_subsets_for_target(
                        fold, target, entry):
                    model = models[(target, group_key)]
                    per_model.append(predict(model, values))
                    keys.append(group_key)
                fused = late_fuse_mean(per_model)
                predictions[target] = postprocess_track(
                    fused, cfg.smoothing_n)
                fused_models[target] = keys
            track = PredictionTrack(
                entry.subject_id, entry.video_id, matrix.timestamps,
                predictions["valence"], predictions["arousal"],
                provenance={
                    "scenario": scenario,
                    "fold": fold.fold_id,
                    "models": fused_models,
                    "fusion": "mean",
                    "smoothing_n": cfg.smoothing_n,
                    "label_mode": cfg.label_mode,
                })
            tracks_out.append(track)
            if out_root is not None:
                rel = (Path(SCENARIO_DIRS[scenario])
                       / f"fold_{fold.fold_id}" / "test" / "annotations"
                       / f"sub_{entry.subject_id}_vid_{entry.video_id}.csv")
                path = out_root / rel
                save_annotations(
                    AnnotationTrack(track.timestamps, track.valence,
                                    track.arousal), path)
                digest = hashlib.sha256(path.read_bytes()).hexdigest()
                prediction_hashes[str(rel)] = digest

    manifest = {
        "config": cfg.to_dict(),
        "config_hash": config_hash(cfg.to_dict()),
        "seed": cfg.seed,
        "scenario": scenario,
        "group_validation_rmse": manifest_groups,
        "predictions": prediction_hashes,
    }
    if out_root is not None:
        write_fold_manifests(folds, out_root / "folds")
        manifest_path = out_root / "manifest.json"
        manifest_path.parent.mkdir(parents=True, exist_ok=True)
        manifest_path.write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return tracks_out, manifest
