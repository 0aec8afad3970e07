"""Exact t-SNE over utterance embeddings, and trial scoring in that space.

Dense O(N^2) implementation: Gaussian conditional neighbor probabilities
with per-point bandwidths calibrated to a target perplexity by bisection,
symmetrized joint probabilities, Student-t low-dimensional affinities,
and plain momentum gradient descent on the KL divergence with an early
exaggeration phase.  No Barnes-Hut approximation and no adaptive gains:
every run is a deterministic function of the input points and the config
(including its seed).

Trial scores are the negative Euclidean distances between the embedded
points of the two utterances in each pair; one point per distinct trial
utterance, multi-segment utterances mean-pooled beforehand.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import DataError, NumericalDegeneracyError
from .trial_io import EmbeddingSet, ScoreSet, TrialList

__all__ = [
    "TsneConfig",
    "TsneResult",
    "SigmaSearch",
    "pairwise_sq_distances",
    "conditional_probabilities",
    "perplexity_search",
    "joint_p",
    "low_dim_affinities",
    "kl_divergence",
    "tsne_gradient",
    "run_tsne",
    "trial_utterances",
    "embed_trial_utterances",
    "trial_scores_from_points",
    "tsne_scores",
]

KL_RECORD_EVERY = 50
INIT_STD = 1e-4


@dataclass(frozen=True)
class TsneConfig:
    out_dim: int = 2
    perplexity: float = 30.0
    iterations: int = 1000
    learning_rate: float = 200.0
    momentum_early: float = 0.5
    momentum_late: float = 0.8
    momentum_switch_iter: int = 250
    early_exaggeration: float = 12.0
    exaggeration_iters: int = 250
    perplexity_tolerance: float = 1e-5
    perplexity_max_bisections: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.out_dim < 1:
            raise ValueError("out_dim must be >= 1")
        if not np.isfinite(self.perplexity) or self.perplexity <= 1.0:
            raise ValueError("perplexity must be a finite real > 1")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not 0.0 < self.learning_rate < np.inf:
            raise ValueError("learning_rate must be positive and finite")
        for name in ("momentum_early", "momentum_late"):
            m = getattr(self, name)
            if not 0.0 <= m < 1.0:
                raise ValueError(f"{name} must be in [0, 1)")
        if self.momentum_switch_iter < 0:
            raise ValueError("momentum_switch_iter must be >= 0")
        if self.early_exaggeration < 1.0:
            raise ValueError("early_exaggeration must be >= 1")
        if self.exaggeration_iters < 0:
            raise ValueError("exaggeration_iters must be >= 0")
        if self.perplexity_tolerance <= 0:
            raise ValueError("perplexity_tolerance must be positive")
        if self.perplexity_max_bisections < 1:
            raise ValueError("perplexity_max_bisections must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")


@dataclass(frozen=True)
class TsneResult:
    points: np.ndarray  # (N, out_dim) float64
    kl_trace: tuple[tuple[int, float], ...]  # (iteration, KL vs true P)
    sigmas: np.ndarray  # (N,) calibrated bandwidths


class SigmaSearch(NamedTuple):
    sigma: float
    perplexity: float
    converged: bool


def pairwise_sq_distances(points) -> np.ndarray:
    """Symmetric matrix of squared Euclidean distances, zero diagonal."""
    x = np.asarray(points, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("points must be an (N, d) matrix")
    if x.shape[0] < 2:
        raise ValueError("need at least 2 points")
    sq = np.einsum("ij,ij->i", x, x)
    d = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    d = np.maximum(d, 0.0)
    d = 0.5 * (d + d.T)
    np.fill_diagonal(d, 0.0)
    return d


def _gaussian_row(sq_dists: np.ndarray, beta: float, self_index: int) -> np.ndarray:
    """Row of exp(-beta * d) over neighbors, normalized to sum 1.

    Exponents are shifted by the nearest-neighbor distance so the row
    survives large distance scales; the shift cancels in the
    normalization.  All neighbors at non-finite distance is a
    numerical degeneracy.
    """
    d = sq_dists.copy()
    d[self_index] = np.inf  # exclude self from the minimum
    d_min = d.min()
    if not np.isfinite(d_min):
        raise NumericalDegeneracyError(
            "all neighbors at non-finite distance; conditional row underflows to zero"
        )
    shifted = sq_dists - d_min
    shifted[self_index] = 0.0  # keep the discarded self entry out of exp's range
    w = np.exp(-beta * shifted)
    w[self_index] = 0.0
    total = w.sum()
    if not np.isfinite(total) or total <= 0.0:
        raise NumericalDegeneracyError("conditional row underflows to zero")
    return w / total


def conditional_probabilities(sq_dists, sigma: float, self_index: int) -> np.ndarray:
    """Conditional neighbor distribution p_{j|i} for one point.

    p_{j|i} is proportional to exp(-d_ij / (2 sigma^2)) over j != i and
    the row sums to 1 with a zero self-entry.
    """
    d = np.asarray(sq_dists, dtype=np.float64).ravel()
    if sigma <= 0 or not np.isfinite(sigma):
        raise ValueError("sigma must be positive and finite")
    if not 0 <= self_index < d.size:
        raise ValueError("self_index out of range")
    if d.size < 2:
        raise ValueError("need at least one neighbor")
    return _gaussian_row(d, 1.0 / (2.0 * sigma * sigma), self_index)


def _row_perplexity(row: np.ndarray) -> float:
    """2**H(row) with Shannon entropy H in bits; zero entries contribute 0."""
    p = row[row > 0.0]
    entropy = -float(np.sum(p * np.log2(p)))
    return float(2.0**entropy)


def perplexity_search(
    sq_dists,
    target_perplexity: float,
    tol: float = 1e-5,
    max_bisections: int = 50,
    self_index: int = 0,
) -> SigmaSearch:
    """Calibrate the bandwidth sigma_i so the conditional row's perplexity
    hits the target.

    Bisection runs on the precision beta = 1/(2 sigma^2), under which
    perplexity is non-increasing; bounds are expanded by doubling until
    the target is bracketed.  If the budget runs out the best sigma found
    is returned with converged=False.  Targets above the neighbor count
    are unattainable and rejected; a target exactly equal to it is only
    reachable for an exactly uniform row and otherwise comes back
    unconverged.
    """
    d = np.asarray(sq_dists, dtype=np.float64).ravel()
    n_neighbors = d.size - 1
    if n_neighbors < 1:
        raise ValueError("need at least one neighbor")
    if not np.isfinite(target_perplexity) or target_perplexity <= 0:
        raise ValueError("target perplexity must be positive and finite")
    if target_perplexity > n_neighbors:
        raise ValueError(
            f"target perplexity {target_perplexity} exceeds neighbor count {n_neighbors}"
        )
    beta = 1.0
    beta_lo = 0.0
    beta_hi = np.inf
    best: SigmaSearch | None = None
    best_gap = np.inf
    for _ in range(max_bisections):
        row = _gaussian_row(d, beta, self_index)
        perp = _row_perplexity(row)
        gap = abs(perp - target_perplexity)
        if gap < best_gap:
            best_gap = gap
            best = SigmaSearch(float(np.sqrt(1.0 / (2.0 * beta))), perp, False)
        if gap <= tol:
            return SigmaSearch(float(np.sqrt(1.0 / (2.0 * beta))), perp, True)
        if perp > target_perplexity:
            beta_lo = beta
            beta = beta * 2.0 if beta_hi == np.inf else 0.5 * (beta_lo + beta_hi)
        else:
            beta_hi = beta
            beta = beta * 0.5 if beta_lo == 0.0 else 0.5 * (beta_lo + beta_hi)
    return best


def joint_p(conditionals) -> np.ndarray:
    """Symmetrized joint probabilities (C + C^T) / (2N); total mass 1."""
    c = np.asarray(conditionals, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ValueError("conditionals must be a square matrix")
    row_sums = c.sum(axis=1)
    if np.any(np.abs(row_sums - 1.0) > 1e-6):
        raise ValueError("each conditional row must sum to 1")
    n = c.shape[0]
    return (c + c.T) / (2.0 * n)


def low_dim_affinities(y) -> tuple[np.ndarray, np.ndarray]:
    """Student-t affinities Q plus the unnormalized kernel for gradient reuse.

    unnorm[i, j] = (1 + ||y_i - y_j||^2)^-1 with a zero diagonal;
    Q = unnorm / sum(unnorm).
    """
    y = np.asarray(y, dtype=np.float64)
    d = pairwise_sq_distances(y)
    unnorm = 1.0 / (1.0 + d)
    np.fill_diagonal(unnorm, 0.0)
    q = unnorm / unnorm.sum()
    return q, unnorm


def kl_divergence(p, q) -> float:
    """sum p_ij * log(p_ij / q_ij), with p_ij = 0 terms contributing 0."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError("P and Q must have the same shape")
    mask = p > 0.0
    if np.any(q[mask] <= 0.0):
        raise NumericalDegeneracyError("infinite KL divergence: Q is zero where P > 0")
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def tsne_gradient(p, q, unnorm, y) -> np.ndarray:
    """Gradient of the KL divergence with respect to the embedding:
    grad_i = 4 * sum_j (p_ij - q_ij) * (y_i - y_j) * unnorm_ij."""
    y = np.asarray(y, dtype=np.float64)
    pqu = (np.asarray(p) - np.asarray(q)) * np.asarray(unnorm)
    row = pqu.sum(axis=1)
    return 4.0 * (row[:, None] * y - pqu @ y)


def run_tsne(
    points,
    config: TsneConfig | None = None,
    callback: Callable[[int, np.ndarray, np.ndarray], None] | None = None,
) -> TsneResult:
    """Embed points by momentum gradient descent on the KL divergence.

    The embedding starts from a seeded Gaussian (std 1e-4).  P is scaled
    by the exaggeration factor for the first exaggeration_iters updates
    (no renormalization); momentum switches from early to late at
    momentum_switch_iter.  The KL trace records the divergence of the
    post-update embedding against the true (unexaggerated) P every 50
    iterations and at the final iteration.

    callback, if given, is invoked after each update with
    (iteration, Y, Q) where Q is the affinity matrix used by that
    update's gradient; it exists for diagnostics and tests.
    """
    config = config or TsneConfig()
    x = np.asarray(points, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("points must be an (N, d) matrix")
    n = x.shape[0]
    if n < 3:
        raise ValueError("t-SNE needs at least 3 points")
    if not config.perplexity < n - 1:
        raise ValueError(
            f"perplexity {config.perplexity} must be < N - 1 = {n - 1}"
        )
    sq = pairwise_sq_distances(x)
    sigmas = np.empty(n, dtype=np.float64)
    cond = np.empty((n, n), dtype=np.float64)
    for i in range(n):
        try:
            found = perplexity_search(
                sq[i],
                config.perplexity,
                tol=config.perplexity_tolerance,
                max_bisections=config.perplexity_max_bisections,
                self_index=i,
            )
            sigmas[i] = found.sigma
            cond[i] = conditional_probabilities(sq[i], found.sigma, i)
        except NumericalDegeneracyError as exc:
            raise NumericalDegeneracyError(f"point {i}: {exc}") from exc
    p = joint_p(cond)

    rng = np.random.default_rng(config.seed)
    y = rng.normal(0.0, INIT_STD, size=(n, config.out_dim))
    velocity = np.zeros_like(y)
    trace: list[tuple[int, float]] = []
    for it in range(config.iterations):
        p_eff = p * config.early_exaggeration if it < config.exaggeration_iters else p
        q, unnorm = low_dim_affinities(y)
        grad = tsne_gradient(p_eff, q, unnorm, y)
        momentum = (
            config.momentum_early
            if it < config.momentum_switch_iter
            else config.momentum_late
        )
        velocity = momentum * velocity - config.learning_rate * grad
        y = y + velocity
        if callback is not None:
            callback(it, y, q)
        if (it + 1) % KL_RECORD_EVERY == 0 or it == config.iterations - 1:
            if not np.all(np.isfinite(y)):
                raise NumericalDegeneracyError(
                    f"embedding diverged to non-finite coordinates at iteration {it}"
                )
            q_now, _ = low_dim_affinities(y)
            trace.append((it, kl_divergence(p, q_now)))
    if not np.all(np.isfinite(y)):
        raise NumericalDegeneracyError("embedding diverged to non-finite coordinates")
    return TsneResult(points=y, kl_trace=tuple(trace), sigmas=sigmas)


def trial_utterances(trials: TrialList) -> list[str]:
    """Distinct utterance ids in order of first appearance."""
    seen: dict[str, None] = {}
    for pair in trials:
        seen.setdefault(pair.enroll)
        seen.setdefault(pair.test)
    return list(seen)


def embed_trial_utterances(
    emb: EmbeddingSet, trials: TrialList, config: TsneConfig | None = None
) -> tuple[list[str], TsneResult]:
    """Run t-SNE over the distinct trial utterances (mean-pooled segments)."""
    utts = trial_utterances(trials)
    missing = [u for u in utts if u not in emb]
    if missing:
        raise DataError(f"utterance {missing[0]!r} missing from embeddings")
    if len(utts) < 3:
        raise DataError(
            f"t-SNE scoring needs at least 3 distinct utterances, got {len(utts)}"
        )
    x = np.stack([emb.mean_vector(u) for u in utts])
    return utts, run_tsne(x, config)


def trial_scores_from_points(
    utterances: list[str], points: np.ndarray, trials: TrialList
) -> ScoreSet:
    """Negative Euclidean distances between embedded points, trial order."""
    index = {u: i for i, u in enumerate(utterances)}
    entries = []
    for pair in trials:
        delta = points[index[pair.enroll]] - points[index[pair.test]]
        entries.append((pair.enroll, pair.test, -float(np.linalg.norm(delta))))
    return ScoreSet(entries)


def tsne_scores(
    emb: EmbeddingSet, trials: TrialList, config: TsneConfig | None = None
) -> ScoreSet:
    """Score trials by negative Euclidean distance in the t-SNE space."""
    utts, result = embed_trial_utterances(emb, trials, config)
    return trial_scores_from_points(utts, result.points, trials)
