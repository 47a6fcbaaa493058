"""Common CROC curve container and threshold selection rules."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class NoFeasibleThresholdError(Exception):
    """No grid threshold meets the requested false-alarm target."""


@dataclass(frozen=True)
class CrocCurve:
    """Ordered (threshold, q_f, q_d) triples plus provenance metadata.

    ``engine`` is either "monte-carlo" or "analytic"; ``meta`` carries the
    scenario descriptor and trial/quadrature settings."""

    thresholds: np.ndarray
    q_f: np.ndarray
    q_d: np.ndarray
    engine: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.thresholds, dtype=float)
        if t.size == 0:
            raise ValueError("empty threshold grid")
        if np.any(np.diff(t) < 0):
            raise ValueError("threshold grid must be ascending")
        if len(self.q_f) != t.size or len(self.q_d) != t.size:
            raise ValueError("q_f/q_d length mismatch with thresholds")

    @property
    def q_m(self) -> np.ndarray:
        return 1.0 - np.asarray(self.q_d)


@dataclass(frozen=True)
class NeymanPearson:
    target_q_f: float


@dataclass(frozen=True)
class BayesRisk:
    p_0: float
    p_1: float


def qm_at_qf(curve: CrocCurve, target_q_f: float) -> float:
    """Missed-detection probability of a curve interpolated at a given
    false-alarm level (linear interpolation along the curve)."""
    qf = np.asarray(curve.q_f, dtype=float)
    qm = np.asarray(curve.q_m, dtype=float)
    order = np.argsort(qf)
    qf, qm = qf[order], qm[order]
    if not (qf[0] <= target_q_f <= qf[-1]):
        raise ValueError(f"q_f={target_q_f} outside curve range "
                         f"[{qf[0]}, {qf[-1]}]")
    return float(np.interp(target_q_f, qf, qm))


def select_threshold(curve: CrocCurve,
                     criterion: NeymanPearson | BayesRisk) -> float:
    """Grid threshold under a Neyman-Pearson target or minimum Bayes risk.

    NP returns the smallest threshold with q_f <= target; Bayes minimizes
    p_0*q_f + p_1*q_m, ties broken toward the smaller threshold."""
    t = np.asarray(curve.thresholds, dtype=float)
    qf = np.asarray(curve.q_f, dtype=float)
    if isinstance(criterion, NeymanPearson):
        ok = np.nonzero(qf <= criterion.target_q_f)[0]
        if ok.size == 0:
            raise NoFeasibleThresholdError(
                f"no threshold achieves q_f <= {criterion.target_q_f}")
        return float(t[ok[0]])
    risk = criterion.p_0 * qf + criterion.p_1 * curve.q_m
    return float(t[int(np.argmin(risk))])
