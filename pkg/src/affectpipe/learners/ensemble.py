"""Greedy weighted-ensemble selection over trained base models.

Forward stepwise selection with replacement: start from the single best
member on the validation set, then repeatedly add whichever member most
lowers (or keeps) the running mean's validation RMSE, stopping when every
addition would hurt. Weights are selection counts over total selections,
so the result is always a convex combination and never validates worse
than the best single member.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import EmptyMembersError, LearnerError, ShapeMismatchError


def _rmse(pred, truth):
    return float(np.sqrt(np.mean((pred - truth) ** 2)))


@dataclass(frozen=True)
class EnsembleModel:
    members: tuple
    weights: np.ndarray
    schema_hash: str | None = None
    validation_rmse: float | None = None

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=np.float64)
        members = tuple(self.members)
        if weights.shape != (len(members),):
            raise ShapeMismatchError(
                f"{len(members)} members but {weights.shape} weights")
        if np.any(weights < 0.0):
            raise LearnerError("ensemble weights must be nonnegative")
        if abs(float(weights.sum()) - 1.0) > 1e-9:
            raise LearnerError(
                f"ensemble weights sum to {weights.sum()}, expected 1")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "members", members)

    @property
    def feature_width(self) -> int:
        return self.members[0].feature_width

    @property
    def target(self) -> str:
        return self.members[0].target


def fit_greedy_weighted_ensemble(members, X_val, y_val,
                                 iterations: int = 25) -> EnsembleModel:
    """Select a weighted committee minimizing validation RMSE.

    Ties go to the lowest member index, so permuting the member list
    permutes the weights identically.
    """
    from .base import predict

    members = tuple(members)
    if not members:
        raise EmptyMembersError("no ensemble members given")
    y_val = np.asarray(y_val, dtype=np.float64)
    if y_val.size == 0:
        raise EmptyMembersError("validation set is empty")
    preds = np.stack([predict(m, X_val) for m in members])

    member_rmse = np.array([_rmse(p, y_val) for p in preds])
    counts = np.zeros(len(members), dtype=np.int64)
    best = int(np.argmin(member_rmse))
    counts[best] = 1
    running_sum = preds[best].copy()
    current = member_rmse[best]

    for _ in range(max(int(iterations), 0)):
        k = counts.sum()
        candidate_rmse = np.sqrt(np.mean(
            ((running_sum[None, :] + preds) / (k + 1) - y_val) ** 2,
            axis=1))
        choice = int(np.argmin(candidate_rmse))
        if candidate_rmse[choice] > current + 1e-12:
            break
        counts[choice] += 1
        running_sum += preds[choice]
        current = float(candidate_rmse[choice])

    weights = counts / counts.sum()
    return EnsembleModel(members, weights,
                         schema_hash=members[0].schema_hash,
                         validation_rmse=float(current))
