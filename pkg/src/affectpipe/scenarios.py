"""Fold layouts and per-scenario training-subset rules.

Four generalization scenarios partition train/test by time segment,
subject, affect quadrant (elicitor), or stimulus version. Model grouping
differs per scenario:

* across_time: one model per (subject, video) file,
* across_subject: one model per video, pooled over subjects,
* across_elicitor: per target, one model on two quadrants chosen to vary
  the predicted axis while holding the other axis away from the test
  quadrant,
* across_version: one model per training video, late-fused downstream.

The elicitor rules rest on a meta-analysis assigning video groups to
affect-grid quadrants from training-set rating statistics.
"""

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus.index import DatasetIndex, IndexEntry
from .errors import (
    EmptyInputError,
    IncompleteIndexError,
    NoMatchingModelError,
)

SCALE_MIDPOINT = 5.0
TARGETS = ("valence", "arousal")


@dataclass(frozen=True, order=True)
class Quadrant:
    """One cell of the affect grid."""

    valence_high: bool
    arousal_high: bool

    @property
    def label(self) -> str:
        return (("HV" if self.valence_high else "LV") + "-"
                + ("HA" if self.arousal_high else "LA"))

    def __str__(self):
        return self.label


ALL_QUADRANTS = (Quadrant(True, True), Quadrant(False, True),
                 Quadrant(False, False), Quadrant(True, False))


@dataclass(frozen=True)
class RatingEvidence:
    mean_valence: float
    mean_arousal: float
    median_valence: float
    median_arousal: float

    def offset(self) -> np.ndarray:
        """Mean rating relative to the scale midpoint."""
        return np.array([self.mean_valence - SCALE_MIDPOINT,
                         self.mean_arousal - SCALE_MIDPOINT])


@dataclass(frozen=True)
class VideoQuadrantMap:
    assignments: dict
    evidence: dict

    def quadrant(self, video_id: int) -> Quadrant:
        return self.assignments[video_id]

    def videos_in(self, quadrant: Quadrant):
        return sorted(v for v, q in self.assignments.items()
                      if q == quadrant)


def _prominence(evidence_list, quadrant: Quadrant) -> float:
    """Signed extent of the group's most prominent video along the
    quadrant direction."""
    signs = np.array([1.0 if quadrant.valence_high else -1.0,
                      1.0 if quadrant.arousal_high else -1.0])
    return max(float(signs @ ev.offset()) for ev in evidence_list)


def quadrant_meta_analysis(train_annotations,
                           video_groups=None) -> VideoQuadrantMap:
    """Assign videos (or video groups) to affect-grid quadrants.

    Parameters
    ----------
    train_annotations : iterable of (video_id, AnnotationTrack)
        Rating tracks pooled per video over the training set.
    video_groups : sequence of video-id tuples, optional
        When given, the groups are mapped bijectively onto the four
        quadrants by maximizing, over all assignments, the summed
        distance-from-midpoint of each group's most prominent video.
        Without groups, each video gets the sign of its own mean rating.
    """
    pooled = {}
    for video_id, track in train_annotations:
        pooled.setdefault(video_id, []).append(track)
    if not pooled:
        raise EmptyInputError("no annotation tracks given")

    evidence = {}
    for video_id, tracks in pooled.items():
        val = np.concatenate([t.valence for t in tracks])
        aro = np.concatenate([t.arousal for t in tracks])
        evidence[video_id] = RatingEvidence(
            float(val.mean()), float(aro.mean()),
            float(np.median(val)), float(np.median(aro)))

    if video_groups is None:
        assignments = {
            v: Quadrant(ev.mean_valence > SCALE_MIDPOINT,
                        ev.mean_arousal > SCALE_MIDPOINT)
            for v, ev in evidence.items()}
        return VideoQuadrantMap(assignments, evidence)

    groups = [tuple(g) for g in video_groups]
    if len(groups) != len(ALL_QUADRANTS):
        raise EmptyInputError(
            f"expected {len(ALL_QUADRANTS)} video groups, got {len(groups)}")
    for group in groups:
        for video_id in group:
            if video_id not in evidence:
                raise EmptyInputError(
                    f"video {video_id} has no training annotations")

    best_perm, best_score = None, -np.inf
    for perm in itertools.permutations(ALL_QUADRANTS):
        score = sum(
            _prominence([evidence[v] for v in group], quadrant)
            for group, quadrant in zip(groups, perm))
        if score > best_score + 1e-12:
            best_perm, best_score = perm, score
    assignments = {}
    for group, quadrant in zip(groups, best_perm):
        for video_id in group:
            assignments[video_id] = quadrant
    return VideoQuadrantMap(assignments, evidence)


#: Model-grouping rules, one per scenario.
GROUPING = {
    "across_time": "per_file",
    "across_subject": "per_video",
    "across_elicitor": "per_quadrant_pair_per_target",
    "across_version": "per_video_group",
}


@dataclass(frozen=True)
class FoldSpec:
    """One cross-validation fold with its model-grouping rule.

    ``groups`` maps model keys to training entries for target-independent
    scenarios; ``target_groups`` carries the per-target quadrant-pair
    subsets used by across_elicitor.
    """

    scenario: str
    fold_id: int
    train_entries: tuple
    test_entries: tuple
    model_grouping: str
    groups: dict = field(default_factory=dict)
    target_groups: dict = field(default_factory=dict)
    target_rules: dict = field(default_factory=dict)

    def groups_for(self, target: str) -> dict:
        if self.model_grouping == "per_quadrant_pair_per_target":
            return self.target_groups[target]
        return self.groups

    def describe(self) -> dict:
        doc = {
            "scenario": self.scenario,
            "fold": self.fold_id,
            "model_grouping": self.model_grouping,
            "train_files": [str(e.physiology_path)
                            for e in self.train_entries],
            "test_files": [str(e.physiology_path)
                           for e in self.test_entries],
        }
        if self.model_grouping == "per_quadrant_pair_per_target":
            doc["target_rules"] = {t: str(rule)
                                   for t, rule in self.target_rules.items()}
            doc["groups"] = {
                target: {key: [e.name for e in entries]
                         for key, entries in groups.items()}
                for target, groups in self.target_groups.items()}
        else:
            doc["groups"] = {key: [e.name for e in entries]
                             for key, entries in self.groups.items()}
        return doc


def _group_by(entries, key_fn):
    grouped = {}
    for entry in entries:
        grouped.setdefault(key_fn(entry), []).append(entry)
    return {k: tuple(v) for k, v in sorted(grouped.items())}


def elicitor_training_quadrants(test_quadrant: Quadrant) -> dict:
    """Two training quadrants per target for an elicitor fold.

    The valence model trains where arousal is held opposite to the test
    quadrant and valence spans both halves; the arousal model trains
    where valence is held opposite and arousal spans both halves. Both
    subsets exclude the test quadrant and maximize variance along the
    predicted axis.
    """
    held_arousal = not test_quadrant.arousal_high
    held_valence = not test_quadrant.valence_high
    return {
        "valence": (Quadrant(False, held_arousal),
                    Quadrant(True, held_arousal)),
        "arousal": (Quadrant(held_valence, False),
                    Quadrant(held_valence, True)),
    }


def build_folds(scenario: str, index: DatasetIndex,
                quadrants: VideoQuadrantMap | None = None):
    """FoldSpec list for one scenario.

    ``quadrants`` is required for across_elicitor (see
    :func:`quadrant_meta_analysis`).
    """
    folds = []
    fold_ids = index.folds(scenario)
    if not fold_ids:
        raise IncompleteIndexError(f"index holds no {scenario} folds")
    for fold_id in fold_ids:
        train = tuple(index.select(scenario, fold_id, "train"))
        test = tuple(index.select(scenario, fold_id, "test"))
        if not train or not test:
            raise IncompleteIndexError(
                f"{scenario} fold {fold_id} is missing a split")
        grouping = GROUPING[scenario]
        groups, target_groups, target_rules = {}, {}, {}
        if scenario == "across_time":
            groups = _group_by(train,
                               lambda e: f"file:sub_{e.subject_id}"
                                         f"_vid_{e.video_id}")
        elif scenario == "across_subject":
            groups = _group_by(train, lambda e: f"video:{e.video_id}")
        elif scenario == "across_version":
            groups = _group_by(train, lambda e: f"video_group:{e.video_id}")
        elif scenario == "across_elicitor":
            if quadrants is None:
                raise IncompleteIndexError(
                    "across_elicitor folds need a VideoQuadrantMap")
            test_quads = {quadrants.quadrant(e.video_id) for e in test}
            if len(test_quads) != 1:
                raise IncompleteIndexError(
                    f"fold {fold_id} test videos span quadrants "
                    f"{sorted(q.label for q in test_quads)}")
            test_quadrant = next(iter(test_quads))
            rules = elicitor_training_quadrants(test_quadrant)
            target_rules = {"test_quadrant": test_quadrant, **rules}
            for target in TARGETS:
                pair = rules[target]
                key = (f"quadrants:{target}:"
                       + "+".join(q.label for q in pair))
                subset = tuple(
                    e for e in train
                    if quadrants.quadrant(e.video_id) in pair)
                if not subset:
                    raise IncompleteIndexError(
                        f"no training files in quadrants {pair}")
                target_groups[target] = {key: subset}
        folds.append(FoldSpec(scenario, fold_id, train, test, grouping,
                              groups, target_groups, target_rules))
    return folds


def training_subsets_for_target(fold: FoldSpec, target: str,
                                test_entry: IndexEntry):
    """Resolve the (model key, training entries) list for one test file.

    across_time and across_subject yield the single matching model;
    across_elicitor yields the target's quadrant-pair model;
    across_version yields all four per-video models for late fusion.
    """
    if target not in TARGETS:
        raise ValueError(f"unknown target {target!r}")
    if test_entry not in fold.test_entries:
        raise NoMatchingModelError(
            f"{test_entry.name} is not a test entry of fold "
            f"{fold.fold_id}")
    groups = fold.groups_for(target)
    if fold.model_grouping == "per_file":
        key = f"file:sub_{test_entry.subject_id}_vid_{test_entry.video_id}"
        if key not in groups:
            raise NoMatchingModelError(
                f"no training counterpart for {test_entry.name}")
        return [(key, groups[key])]
    if fold.model_grouping == "per_video":
        key = f"video:{test_entry.video_id}"
        if key not in groups:
            raise NoMatchingModelError(
                f"no per-video model for video {test_entry.video_id}")
        return [(key, groups[key])]
    if fold.model_grouping == "per_quadrant_pair_per_target":
        return list(groups.items())
    if fold.model_grouping == "per_video_group":
        return list(groups.items())
    raise NoMatchingModelError(
        f"unhandled grouping {fold.model_grouping!r}")


def write_fold_manifests(folds, out_dir) -> list:
    """One human-readable JSON manifest per fold; returns the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for fold in folds:
        path = out_dir / f"{fold.scenario}_fold_{fold.fold_id}.json"
        path.write_text(json.dumps(fold.describe(), indent=2,
                                   sort_keys=True) + "\n")
        paths.append(path)
    return paths
