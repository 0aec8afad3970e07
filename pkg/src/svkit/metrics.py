"""EER and minimum detection cost over full threshold sweeps.

Accept rule: a trial is accepted iff score >= threshold.  The DET sweep
enumerates every distinct score as a threshold plus the accept-all
(-inf) and reject-all (+inf) extremes, so both metrics depend only on
the ordering of scores and are exactly invariant under any strictly
increasing score transform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AlignmentError, DataError, DuplicatePairError
from .trial_io import ScoreSet, TrialList

__all__ = [
    "DcfParams",
    "ErrorReport",
    "det_points",
    "eer",
    "min_dcf",
    "evaluate",
    "render_report",
]


@dataclass(frozen=True)
class DcfParams:
    """Detection cost parameters (defaults follow the VoxSRC convention)."""

    p_target: float = 0.05
    c_miss: float = 1.0
    c_fa: float = 1.0
    normalized: bool = True

    def __post_init__(self):
        if not 0.0 < self.p_target < 1.0:
            raise ValueError("p_target must be in (0, 1)")
        if self.c_miss <= 0 or self.c_fa <= 0:
            raise ValueError("costs must be positive")


@dataclass(frozen=True)
class ErrorReport:
    eer: float
    eer_threshold: float
    min_dcf: float
    dcf_threshold: float
    n_target: int
    n_nontarget: int


def _score_label_arrays(scores, labels):
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=bool)
    if s.ndim != 1 or y.shape != s.shape:
        raise DataError("scores and labels must be 1-D and the same length")
    if s.size == 0:
        raise DataError("no trials to evaluate")
    if not np.all(np.isfinite(s)):
        raise DataError("scores must be finite")
    if not y.any() or y.all():
        raise DataError("degenerate label set: need at least one target and one nontarget")
    return s, y


def _det_arrays(scores, labels):
    """Thresholds ascending with exact count-based P_fa and P_miss.

    P_fa(t) = #{nontarget >= t} / n_nontarget (non-increasing in t);
    P_miss(t) = #{target < t} / n_target (non-decreasing in t).
    """
    s, y = _score_label_arrays(scores, labels)
    tar = np.sort(s[y])
    non = np.sort(s[~y])
    thresholds = np.concatenate(([-np.inf], np.unique(s), [np.inf]))
    miss = np.searchsorted(tar, thresholds, side="left") / tar.size
    fa = (non.size - np.searchsorted(non, thresholds, side="left")) / non.size
    return thresholds, fa, miss


def det_points(scores, labels) -> list[tuple[float, float, float]]:
    """Ordered (threshold, P_fa, P_miss) sweep over all distinct scores
    plus the accept-all and reject-all extremes."""
    thresholds, fa, miss = _det_arrays(scores, labels)
    return [
        (float(t), float(f), float(m)) for t, f, m in zip(thresholds, fa, miss)
    ]


def _eer_from_det(thresholds, fa, miss):
    diff = fa - miss
    exact = np.nonzero(diff == 0.0)[0]
    if exact.size:
        i = int(exact[0])
        return float(fa[i]), float(thresholds[i])
    # diff is non-increasing from +1 to -1; interpolate across the sign change
    j = int(np.nonzero(diff < 0.0)[0][0])
    i = j - 1
    t = diff[i] / (diff[i] - diff[j])
    value = fa[i] + t * (fa[j] - fa[i])
    if np.isfinite(thresholds[i]) and np.isfinite(thresholds[j]):
        threshold = thresholds[i] + t * (thresholds[j] - thresholds[i])
    elif np.isfinite(thresholds[i]):
        threshold = thresholds[i]
    else:
        threshold = thresholds[j]
    return float(value), float(threshold)


def eer(scores, labels) -> tuple[float, float]:
    """Equal error rate and its threshold.

    Returns the exact DET point where P_fa == P_miss when one exists
    (smallest such threshold), otherwise linearly interpolates between
    the two DET points bracketing the sign change of P_fa - P_miss.
    """
    return _eer_from_det(*_det_arrays(scores, labels))


def _min_dcf_from_det(thresholds, fa, miss, params: DcfParams):
    dcf = params.c_miss * miss * params.p_target + params.c_fa * fa * (
        1.0 - params.p_target
    )
    if params.normalized:
        dcf = dcf / min(
            params.c_miss * params.p_target, params.c_fa * (1.0 - params.p_target)
        )
    i = int(np.argmin(dcf))  # first occurrence = smallest threshold on ties
    return float(dcf[i]), float(thresholds[i])


def min_dcf(scores, labels, params: DcfParams | None = None) -> tuple[float, float]:
    """Minimum detection cost and the smallest threshold achieving it."""
    params = params or DcfParams()
    thresholds, fa, miss = _det_arrays(scores, labels)
    return _min_dcf_from_det(thresholds, fa, miss, params)


def _align_scores_to_trials(scores: ScoreSet, trials: TrialList) -> np.ndarray:
    table: dict[tuple[str, str], float] = {}
    for enroll, test, value in scores.entries:
        key = (enroll, test)
        if key in table:
            raise DuplicatePairError(f"duplicate score for pair {enroll} {test}")
        table[key] = value
    trial_keys = {(p.enroll, p.test) for p in trials}
    extra = table.keys() - trial_keys
    if extra:
        enroll, test = min(extra)
        raise AlignmentError(f"score for pair {enroll} {test} not in trial list")
    out = []
    for p in trials:
        key = (p.enroll, p.test)
        if key not in table:
            raise AlignmentError(f"no score for trial pair {p.enroll} {p.test}")
        out.append(table[key])
    return np.array(out, dtype=np.float64)


def evaluate(
    scores: ScoreSet, trials: TrialList, params: DcfParams | None = None
) -> ErrorReport:
    """EER and minDCF of a score set against a labeled trial list."""
    params = params or DcfParams()
    if not trials.labeled:
        raise DataError("trial list is unlabeled; evaluation needs labels")
    values = _align_scores_to_trials(scores, trials)
    labels = np.array(trials.labels(), dtype=bool)
    thresholds, fa, miss = _det_arrays(values, labels)
    eer_value, eer_thr = _eer_from_det(thresholds, fa, miss)
    dcf_value, dcf_thr = _min_dcf_from_det(thresholds, fa, miss, params)
    return ErrorReport(
        eer=eer_value,
        eer_threshold=eer_thr,
        min_dcf=dcf_value,
        dcf_threshold=dcf_thr,
        n_target=int(labels.sum()),
        n_nontarget=int((~labels).sum()),
    )


def render_report(report: ErrorReport, params: DcfParams, machine: bool = False) -> str:
    """Text rendering: human-readable by default (EER as a percentage),
    key=value lines with full precision in machine mode."""
    if machine:
        return (
            f"eer={report.eer!r}\n"
            f"eer_threshold={report.eer_threshold!r}\n"
            f"min_dcf={report.min_dcf!r}\n"
            f"dcf_threshold={report.dcf_threshold!r}\n"
            f"n_target={report.n_target}\n"
            f"n_nontarget={report.n_nontarget}\n"
        )
    return (
        f"EER(%) {100.0 * report.eer:.6g} at {report.eer_threshold:.6g}\n"
        f"minDCF(p={params.p_target:g}) {report.min_dcf:.6g} at {report.dcf_threshold:.6g}\n"
        f"targets {report.n_target} nontargets {report.n_nontarget}\n"
    )
