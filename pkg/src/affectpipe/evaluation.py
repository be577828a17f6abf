"""RMSE scoring, hierarchical aggregation, and the lag-sweep harness.

Scores roll up file -> fold -> scenario -> overall by plain arithmetic
means; reported spreads are population standard deviations over child
values. The overall score averages the scenario-level (scenario, target)
cells; a variant that averages per-scenario target means first is also
reported (the two coincide whenever every scenario has both targets).
"""

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus.index import SCENARIO_DIRS, SCENARIOS, DatasetIndex
from .corpus.io import load_annotations
from .errors import (
    EmptyFoldError,
    EmptyListError,
    LengthMismatchError,
)
from .features.matrix import SIGNAL_SUBSETS, build_feature_frames, subset_mask
from .learners import fit_greedy_weighted_ensemble, predict, train_base
from .pipeline import RunConfig, derive_seed
from .scenarios import TARGETS

DEFAULT_DELAYS = tuple(np.round(np.arange(0, 11) * 0.005, 3))


def rmse(pred, truth) -> float:
    """Root mean square error between two equal-length vectors."""
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.size == 0:
        raise EmptyListError("rmse of empty vectors")
    if pred.shape != truth.shape:
        raise LengthMismatchError(
            f"vector lengths differ: {pred.shape} vs {truth.shape}")
    return float(np.sqrt(np.mean((pred - truth) ** 2)))


@dataclass(frozen=True)
class FileScore:
    scenario: str
    fold: int
    subject_id: int
    video_id: int
    rmse_valence: float
    rmse_arousal: float

    def value(self, target: str) -> float:
        return self.rmse_valence if target == "valence" \
            else self.rmse_arousal


@dataclass(frozen=True)
class LevelStats:
    mean: float
    sd: float  # population SD over the child values
    n: int


def _stats(values) -> LevelStats:
    arr = np.asarray(values, dtype=np.float64)
    return LevelStats(float(arr.mean()), float(arr.std()), arr.size)


@dataclass(frozen=True)
class ScoreTree:
    """Hierarchical RMSE summary.

    ``fold_level[(scenario, fold)][target]`` holds the mean/SD over that
    fold's file scores; ``scenario_level[scenario][target]`` aggregates
    the fold means. ``overall`` averages all (scenario, target) cells.
    """

    files: tuple
    fold_level: dict
    scenario_level: dict
    overall: float
    overall_target_mean_first: float

    def scenario_value(self, scenario: str, target: str) -> float:
        return self.scenario_level[scenario][target].mean


def aggregate_scores(file_scores) -> ScoreTree:
    """Roll per-file RMSEs up to fold, scenario, and overall levels."""
    files = tuple(file_scores)
    if not files:
        raise EmptyFoldError("no file scores to aggregate")
    fold_level = {}
    by_fold = {}
    for score in files:
        by_fold.setdefault((score.scenario, score.fold), []).append(score)
    for key, scores in sorted(by_fold.items()):
        fold_level[key] = {
            target: _stats([s.value(target) for s in scores])
            for target in TARGETS}

    scenario_level = {}
    scenarios = sorted({s.scenario for s in files},
                       key=lambda s: SCENARIOS.index(s))
    for scenario in scenarios:
        folds = [key for key in fold_level if key[0] == scenario]
        scenario_level[scenario] = {
            target: _stats([fold_level[key][target].mean for key in folds])
            for target in TARGETS}

    cells = [scenario_level[s][t].mean
             for s in scenarios for t in TARGETS]
    per_scenario = [np.mean([scenario_level[s][t].mean for t in TARGETS])
                    for s in scenarios]
    return ScoreTree(files, fold_level, scenario_level,
                     float(np.mean(cells)), float(np.mean(per_scenario)))


def score_run(index: DatasetIndex, predictions_root,
              scenario: str | None = None):
    """Per-file RMSEs for every test entry with ground truth available.

    Predictions are read from the submission-shaped mirror under
    ``predictions_root``; entries lacking either a prediction file or
    labelled annotations are skipped.
    """
    predictions_root = Path(predictions_root)
    scores = []
    for entry in index.entries:
        if entry.split != "test":
            continue
        if scenario is not None and entry.scenario != scenario:
            continue
        if entry.annotation_path is None:
            continue
        pred_path = (predictions_root / SCENARIO_DIRS[entry.scenario]
                     / f"fold_{entry.fold}" / "test" / "annotations"
                     / f"sub_{entry.subject_id}_vid_{entry.video_id}.csv")
        if not pred_path.exists():
            continue
        truth = load_annotations(entry.annotation_path)
        pred = load_annotations(pred_path)
        if pred.timestamps.size != truth.timestamps.size or \
                np.max(np.abs(pred.timestamps - truth.timestamps)) > 1e-6:
            raise LengthMismatchError(
                f"{pred_path} grid does not match {entry.annotation_path}")
        scores.append(FileScore(
            entry.scenario, entry.fold, entry.subject_id, entry.video_id,
            rmse(pred.valence, truth.valence),
            rmse(pred.arousal, truth.arousal)))
    return scores


def write_file_scores(scores, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scenario", "fold", "subject", "video",
                         "rmse_valence", "rmse_arousal"])
        for s in scores:
            writer.writerow([s.scenario, s.fold, s.subject_id, s.video_id,
                             f"{s.rmse_valence:.6f}",
                             f"{s.rmse_arousal:.6f}"])


def write_summary(tree: ScoreTree, path) -> None:
    """Fold- and scenario-level table (arousal/valence RMSE and SD)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scenario", "fold", "arousal_rmse", "arousal_std",
                         "valence_rmse", "valence_std"])
        for (scenario, fold), stats in sorted(
                tree.fold_level.items(),
                key=lambda kv: (SCENARIOS.index(kv[0][0]), kv[0][1])):
            writer.writerow([
                scenario, fold,
                f"{stats['arousal'].mean:.6f}", f"{stats['arousal'].sd:.6f}",
                f"{stats['valence'].mean:.6f}",
                f"{stats['valence'].sd:.6f}"])
        for scenario, stats in tree.scenario_level.items():
            writer.writerow([
                scenario, "scenario_level",
                f"{stats['arousal'].mean:.6f}", f"{stats['arousal'].sd:.6f}",
                f"{stats['valence'].mean:.6f}",
                f"{stats['valence'].sd:.6f}"])
        writer.writerow(["overall", "", f"{tree.overall:.6f}", "",
                         f"{tree.overall_target_mean_first:.6f}", ""])
        fh.write("# std columns are population SDs over child values; "
                 "overall row holds both averaging variants\n")


# --- lag sweep ---------------------------------------------------------------

@dataclass(frozen=True)
class LagTable:
    """RMSE grid over (delay, signal subset); per-column minima flagged."""

    delays: tuple
    subsets: tuple
    values: np.ndarray
    minima: np.ndarray = field(init=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        minima = values == values.min(axis=0, keepdims=True)
        object.__setattr__(self, "minima", minima)

    def cell(self, delay: float, subset: str) -> float:
        i = self.delays.index(delay)
        j = self.subsets.index(subset)
        return float(self.values[i, j])

    def best_delay(self, subset: str) -> float:
        j = self.subsets.index(subset)
        return float(self.delays[int(np.argmin(self.values[:, j]))])

    def to_csv(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["delay_s"] + list(self.subsets))
            for i, delay in enumerate(self.delays):
                row = [f"{delay:.3f}"]
                for j in range(len(self.subsets)):
                    mark = "*" if self.minima[i, j] else ""
                    row.append(f"{self.values[i, j]:.6f}{mark}")
                writer.writerow(row)
            fh.write("# * marks each column's minimum\n")


def _load_sweep_entries(index: DatasetIndex, cfg: RunConfig):
    from .corpus.io import load_recording

    scenario = cfg.scenario
    fold = index.folds(scenario)[0]
    entries = index.select(scenario, fold, "train")
    if not entries:
        raise EmptyFoldError(f"no {scenario} training files to sweep")
    out = []
    for entry in entries:
        out.append((load_recording(entry.physiology_path),
                    load_annotations(entry.annotation_path)))
    return out


def evaluate_delay_cell(cfg: RunConfig, matrices, labels, subset: str,
                        train_fraction: float = 0.7) -> float:
    """Mean RMSE over both targets on the fixed temporal split.

    ``matrices``/``labels`` are per-file feature matrices (already built
    at some delay) and their annotation tracks. The per-(subset, target)
    model seed is independent of the delay, so the 0-delay cell equals an
    unshifted evaluation bit for bit.
    """
    mask = subset_mask(matrices[0].column_names, subset)
    columns = tuple(np.asarray(matrices[0].column_names)[mask])
    X_train, X_eval = [], []
    y_train = {t: [] for t in TARGETS}
    y_eval = {t: [] for t in TARGETS}
    for matrix, track in zip(matrices, labels):
        values = matrix.values[:, mask]
        cut = max(int(round(train_fraction * values.shape[0])), 1)
        X_train.append(values[:cut])
        X_eval.append(values[cut:])
        for t in TARGETS:
            y_train[t].append(track.target(t)[:cut])
            y_eval[t].append(track.target(t)[cut:])
    X_train = np.vstack(X_train)
    X_eval = np.vstack(X_eval)

    cell = []
    for target in TARGETS:
        yt = np.concatenate(y_train[target])
        ye = np.concatenate(y_eval[target])
        members = []
        for kind in cfg.learners:
            seed = derive_seed(cfg.seed, "lag", subset, target, kind.name)
            members.append(train_base(kind, X_train, yt, seed,
                                      target=target))
        n_val = max(int(round(0.25 * X_train.shape[0])), 1)
        ensemble = fit_greedy_weighted_ensemble(
            members, X_train[-n_val:], yt[-n_val:],
            cfg.ensemble_iterations)
        cell.append(rmse(predict(ensemble, X_eval), ye))
    return float(np.mean(cell))


def lag_sweep(cfg: RunConfig, index: DatasetIndex,
              subsets=SIGNAL_SUBSETS, delays=DEFAULT_DELAYS) -> LagTable:
    """RMSE at each (rating-to-signal delay, signal subset) pair.

    Feature matrices are rebuilt per delay with every window ending that
    much earlier; each cell trains the configured roster on the first 70%
    of each file and scores the rest, averaging both targets.
    """
    delays = tuple(float(d) for d in delays)
    subsets = tuple(subsets)
    data = _load_sweep_entries(index, cfg)
    values = np.zeros((len(delays), len(subsets)))
    for i, delay in enumerate(delays):
        matrices = [build_feature_frames(rec, track.timestamps,
                                         cfg.window, delay=delay)
                    for rec, track in data]
        labels = [track for _rec, track in data]
        for j, subset in enumerate(subsets):
            values[i, j] = evaluate_delay_cell(cfg, matrices, labels,
                                               subset)
    return LagTable(delays, subsets, values)


def plot_rating_curves(index: DatasetIndex, out_dir,
                       scenario: str | None = None) -> list:
    """Per-video mean rating curves with SD bands (optional extra).

    Requires matplotlib; returns the written image paths.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    by_video = {}
    for entry in index.entries:
        if scenario is not None and entry.scenario != scenario:
            continue
        if entry.annotation_path is None:
            continue
        key = (entry.subject_id, entry.video_id)
        by_video.setdefault(entry.video_id, {})[key] = entry
    paths = []
    for video_id, entries in sorted(by_video.items()):
        tracks = [load_annotations(e.annotation_path)
                  for e in entries.values()]
        n = min(len(t) for t in tracks)
        ts = tracks[0].timestamps[:n]
        fig, axes = plt.subplots(2, 1, figsize=(8, 5), sharex=True)
        for ax, target in zip(axes, ("valence", "arousal")):
            stack = np.stack([t.target(target)[:n] for t in tracks])
            mean = stack.mean(axis=0)
            sd = stack.std(axis=0)
            ax.plot(ts, mean, lw=1.5)
            ax.fill_between(ts, mean - sd, mean + sd, alpha=0.3)
            ax.set_ylabel(target)
            ax.set_ylim(0.5, 9.5)
        axes[1].set_xlabel("time (s)")
        fig.suptitle(f"video {video_id}: mean rating +- SD")
        path = out_dir / f"ratings_video_{video_id}.png"
        fig.savefig(path, dpi=110)
        plt.close(fig)
        paths.append(path)
    return paths
