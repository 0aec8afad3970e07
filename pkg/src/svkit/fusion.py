"""Average and optimum weighted fusion of aligned score sets.

Optimum fusion is an exhaustive search over a simplex lattice of weight
vectors (components are multiples of the step, plus the uniform vector
if it is off the lattice), minimizing minDCF or EER on a labeled tuning
set.  Ties break on the secondary metric, then on the lexicographically
smallest weight vector, so results are reproducible regardless of
evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import DataError
from .metrics import DcfParams, _det_arrays, _eer_from_det, _min_dcf_from_det
from .trial_io import AlignedScores, ScoreSet

__all__ = [
    "FusionWeights",
    "FusionResult",
    "weighted_fuse",
    "average_fuse",
    "simplex_grid",
    "optimize_fusion",
]

OBJECTIVES = ("mindcf", "eer")


@dataclass(frozen=True)
class FusionWeights:
    """Nonnegative weights on the simplex (sum 1 within 1e-9)."""

    w: tuple[float, ...]

    def __post_init__(self):
        w = tuple(float(v) for v in self.w)
        if not w:
            raise ValueError("weight vector is empty")
        if any(v < 0.0 or not np.isfinite(v) for v in w):
            raise ValueError("weights must be finite and >= 0")
        if abs(sum(w) - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1, got {sum(w)!r}")
        object.__setattr__(self, "w", w)

    def __len__(self) -> int:
        return len(self.w)

    def __iter__(self):
        return iter(self.w)


@dataclass(frozen=True)
class FusionResult:
    weights: FusionWeights
    fused: ScoreSet
    objective_value: float
    objective_kind: str  # "mindcf" | "eer"
    candidates_evaluated: int


def _fuse_vector(aligned: AlignedScores, w: Sequence[float]) -> np.ndarray:
    return np.asarray(w, dtype=np.float64) @ aligned.matrix


def weighted_fuse(aligned: AlignedScores, weights: FusionWeights) -> ScoreSet:
    """Per-trial weighted sum of the k systems, pair order preserved."""
    if len(weights) != aligned.n_systems:
        raise DataError(
            f"{len(weights)} weights for {aligned.n_systems} systems"
        )
    fused = _fuse_vector(aligned, weights.w)
    return ScoreSet(
        (e, t, float(v)) for (e, t), v in zip(aligned.pairs, fused)
    )


def average_fuse(aligned: AlignedScores) -> ScoreSet:
    k = aligned.n_systems
    return weighted_fuse(aligned, FusionWeights((1.0 / k,) * k))


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def simplex_grid(k: int, step: float) -> list[FusionWeights]:
    """All weight vectors with components in {0, step, ..., 1} summing to 1.

    1/step must be an integer m (within 1e-9); the lattice has
    C(m + k - 1, k - 1) vectors and always contains the k unit vectors.
    The uniform vector is appended when it is off the lattice.
    """
    if k < 1:
        raise ValueError("need at least one system")
    if not 0.0 < step <= 1.0:
        raise ValueError("step must be in (0, 1]")
    m_real = 1.0 / step
    m = round(m_real)
    if abs(m_real - m) > 1e-9:
        raise ValueError(f"1/step must be an integer, got {m_real!r}")
    grid = [
        FusionWeights(tuple(c / m for c in comp)) for comp in _compositions(m, k)
    ]
    if m % k != 0:
        grid.append(FusionWeights((1.0 / k,) * k))
    return grid


def _objective_pair(
    scores: np.ndarray, labels: np.ndarray, objective: str, params: DcfParams
) -> tuple[float, float]:
    """(primary, secondary) metric values for the tie-break ordering."""
    det = _det_arrays(scores, labels)
    dcf_value, _ = _min_dcf_from_det(*det, params)
    eer_value, _ = _eer_from_det(*det)
    if objective == "mindcf":
        return dcf_value, eer_value
    return eer_value, dcf_value


def optimize_fusion(
    aligned: AlignedScores,
    labels: Sequence[bool],
    objective: str = "mindcf",
    step: float = 0.05,
    dcf_params: DcfParams | None = None,
) -> FusionResult:
    """Exhaustive simplex-lattice search for the weights minimizing the
    tuning-set objective.

    Because the lattice contains every unit vector and the uniform
    vector, the optimum is never worse than any single system or than
    average fusion on the tuning set.
    """
    if objective not in OBJECTIVES:
        raise ValueError(f"objective must be one of {OBJECTIVES}, got {objective!r}")
    params = dcf_params or DcfParams()
    y = np.asarray(labels, dtype=bool)
    if y.ndim != 1 or y.size != aligned.n_trials:
        raise DataError(
            f"{y.size} labels for {aligned.n_trials} trials; labels must cover every trial"
        )
    if not y.any() or y.all():
        raise DataError("degenerate label set: need targets and nontargets")
    grid = simplex_grid(aligned.n_systems, step)
    best_key: tuple[float, float, tuple[float, ...]] | None = None
    best_weights: FusionWeights | None = None
    for weights in grid:
        fused = _fuse_vector(aligned, weights.w)
        primary, secondary = _objective_pair(fused, y, objective, params)
        key = (primary, secondary, weights.w)
        if best_key is None or key < best_key:
            best_key = key
            best_weights = weights
    fused_scores = weighted_fuse(aligned, best_weights)
    return FusionResult(
        weights=best_weights,
        fused=fused_scores,
        objective_value=best_key[0],
        objective_kind=objective,
        candidates_evaluated=len(grid),
    )
