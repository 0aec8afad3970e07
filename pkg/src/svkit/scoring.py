"""Negative-Euclidean trial scoring over speaker embeddings.

Higher score means more likely same speaker.  Utterances may carry
several segment vectors (e.g. fixed 4-second crops versus one
full-utterance vector); a pair's score is the mean of all pairwise
negative distances between the two segment lists.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .trial_io import EmbeddingSet, ScoreSet, TrialList

__all__ = ["EvalMode", "score_pair", "score_trials", "minmax_normalize"]


@dataclass(frozen=True)
class EvalMode:
    """Evaluation-frame mode: 'full' means one whole-utterance vector,
    'segmented' means segment_count fixed-length crops per utterance.
    The embedding file is expected to already reflect the mode; scoring
    averages over whatever segments are present."""

    variant: str = "full"
    segment_count: int = 1

    def __post_init__(self):
        if self.variant not in ("full", "segmented"):
            raise ValueError(f"unknown eval mode {self.variant!r}")
        if self.segment_count < 1:
            raise ValueError("segment_count must be >= 1")


def score_pair(a, b) -> float:
    """Mean over all segment pairs (i, j) of -||a_i - b_j||_2."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    if a.size == 0 or b.size == 0:
        raise DataError("empty segment list")
    if a.shape[1] != b.shape[1]:
        raise DataError(f"dimension mismatch: {a.shape[1]} != {b.shape[1]}")
    # fsum is exactly rounded, so the score is symmetric in (a, b) bit-for-bit
    distances = [float(np.linalg.norm(ai - bj)) for ai in a for bj in b]
    return -math.fsum(distances) / len(distances)


def score_trials(emb: EmbeddingSet, trials: TrialList) -> ScoreSet:
    """One negative-Euclidean score per trial pair, in trial order."""
    entries = []
    for pair in trials:
        for utt in (pair.enroll, pair.test):
            if utt not in emb:
                raise DataError(f"utterance {utt!r} missing from embeddings")
        entries.append(
            (pair.enroll, pair.test, score_pair(emb[pair.enroll], emb[pair.test]))
        )
    return ScoreSet(entries)


def minmax_normalize(scores: ScoreSet) -> ScoreSet:
    """Affinely map scores onto [0, 1]; a constant set maps to all 0.5."""
    values = scores.scores
    lo, hi = float(values.min()), float(values.max())
    if hi == lo:
        mapped = np.full_like(values, 0.5)
    else:
        mapped = (values - lo) / (hi - lo)
    return ScoreSet(
        (e, t, float(v)) for (e, t), v in zip(scores.pairs, mapped)
    )
