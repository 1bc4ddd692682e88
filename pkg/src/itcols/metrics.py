"""Detection-to-truth association and Youden's J scoring."""

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

FA_NORMALIZATIONS = ("detections", "truths")
TIE_BREAK = 1e-9


@dataclass(frozen=True)
class DetectionOutcome:
    hits: int
    false_alarms: int
    misses: int
    assignment: tuple = ()

    @property
    def num_true(self):
        return self.hits + self.misses

    @property
    def num_detected(self):
        return self.hits + self.false_alarms


@dataclass(frozen=True)
class MetricsReport:
    hit_rate: float
    fa_rate: float
    youden_j: float
    runs: int


def hungarian_assign(cost):
    """
    Minimum-cost one-to-one assignment for a rectangular cost matrix.

    Returns the list of ``(row, col)`` pairs (``min(n, m)`` of them) and
    their total cost.
    """
    cost = np.asarray(cost, dtype=float)
    if cost.ndim != 2:
        raise ValueError("cost must be a 2-D matrix")
    if np.isnan(cost).any():
        raise ValueError("cost matrix contains NaN")
    if cost.size == 0:
        return [], 0.0
    if not np.isfinite(cost).all():
        raise ValueError("cost matrix contains infinite entries")
    rows, cols = linear_sum_assignment(cost)
    pairs = [(int(i), int(j)) for i, j in zip(rows, cols)]
    return pairs, float(cost[rows, cols].sum())


def hit_radius(M):
    """Half null-to-null main-lobe width of a half-wavelength ULA, in sine space."""
    return 2.0 / M


def classify(true_doas: Sequence[float], est_doas: Sequence[float], M):
    """
    Count hits, misses and false alarms for one run.

    Detections are matched to truths by a Hungarian assignment on the
    sine-space distance. A matched pair closer than ``2/M`` is a hit;
    otherwise it counts as one miss plus one false alarm.

    In 1-D the distance cost often has several optimal assignments (for
    interleaved truths and detections two crossings sum alike) whose hit
    counts differ. Each in-lobe pair therefore gets a tiny bonus of
    ``TIE_BREAK * 2/M``, far below any meaningful distance gap, so that
    among (numerically) equal-cost assignments the one with more hits wins
    regardless of input order.
    """
    u_true = np.sin(np.asarray(true_doas, dtype=float))
    u_est = np.sin(np.asarray(est_doas, dtype=float))
    K, K_hat = u_true.size, u_est.size
    dist = np.abs(u_est[None, :] - u_true[:, None]).reshape(K, K_hat)
    radius = hit_radius(M)
    inside = dist < radius
    pairs, _ = hungarian_assign(dist - TIE_BREAK * radius * inside)
    matched = [(i, j) for i, j in pairs if inside[i, j]]
    hits = len(matched)
    return DetectionOutcome(
        hits=hits,
        false_alarms=K_hat - hits,
        misses=K - hits,
        assignment=tuple(matched),
    )


def aggregate(outcomes: Sequence[DetectionOutcome], fa_normalization="detections"):
    """
    Pool per-run outcomes into hit rate, false-alarm rate and J.

    ``fa_normalization="detections"`` divides false alarms by the total
    number of detections; ``"truths"`` divides by the total number of true
    targets (that rate may exceed one).
    """
    outcomes = list(outcomes)
    if not outcomes:
        raise ValueError("no outcomes to aggregate")
    if fa_normalization not in FA_NORMALIZATIONS:
        raise ValueError(f"fa_normalization must be one of {FA_NORMALIZATIONS}")
    hits = sum(o.hits for o in outcomes)
    fas = sum(o.false_alarms for o in outcomes)
    n_true = sum(o.num_true for o in outcomes)
    n_det = sum(o.num_detected for o in outcomes)
    hit_rate = hits / n_true if n_true else 0.0
    denom = n_det if fa_normalization == "detections" else n_true
    fa_rate = fas / denom if denom else 0.0
    return MetricsReport(hit_rate, fa_rate, hit_rate - fa_rate, len(outcomes))
