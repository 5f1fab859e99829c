"""Overshoot durations: time the output workload spends at or above a threshold.

The ledger is advanced once per complete departure.  Between two complete
departures the output workload first drains (slope ``-rho``, floored at 0)
until the next packet starts leaving, then rises with slope ``C - rho`` while
it is transmitted; ``beta`` and ``alpha`` give the time spent above a level on
each of those two pieces.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .model import EPS


def alpha(a: float, b: float, zeta: float, W1: float, W2: float, C: float, rho: float) -> float:
    """Time above ``zeta`` on a rising piece from ``W1`` (at ``a``) to ``W2`` (at ``b``)."""
    if zeta <= W1:
        return b - a
    if zeta <= W2:
        return (W2 - zeta) / (C - rho)
    return 0.0


def beta(a: float, b: float, zeta: float, W1: float, W2: float, rho: float) -> float:
    """Time above ``zeta`` on a draining piece from ``W1`` (at ``a``) to ``W2`` (at ``b``)."""
    if zeta <= W2:
        return b - a
    if zeta <= W1:
        return (W1 - zeta) / rho
    return 0.0


def alpha_vec(a, b, zeta, W1, W2, C, rho):
    zeta = np.asarray(zeta, dtype=float)
    return np.where(zeta <= W1, b - a, np.where(zeta <= W2, (W2 - zeta) / (C - rho), 0.0))


def beta_vec(a, b, zeta, W1, W2, rho):
    zeta = np.asarray(zeta, dtype=float)
    return np.where(zeta <= W2, b - a, np.where(zeta <= W1, (W1 - zeta) / rho, 0.0))


def advance_durations(durations, thresholds, b_prev, t_j, b_j, w_prev, w_t, w_b, C, rho):
    """Overshoot durations at ``b_j`` from those at ``b_prev``."""
    return (durations
            + beta_vec(b_prev, t_j, thresholds, w_prev, w_t, rho)
            + alpha_vec(t_j, b_j, thresholds, w_t, w_b, C, rho))


@dataclass(frozen=True)
class OvershootLedger:
    """Accumulated ``O_T(t)`` for every threshold, as of the last complete departure."""

    thresholds: np.ndarray
    durations: np.ndarray
    as_of: float = 0.0
    workload_at_as_of: float = 0.0

    @classmethod
    def fresh(cls, thresholds) -> "OvershootLedger":
        th = np.asarray(thresholds, dtype=float)
        return cls(th, np.zeros_like(th))

    @property
    def ratios(self) -> np.ndarray:
        if self.as_of <= 0:
            return np.zeros_like(self.durations)
        return self.durations / self.as_of


def ledger_advance(ledger: OvershootLedger, t_j: float, b_j: float, W_at_events,
                   C: float, rho: float) -> OvershootLedger:
    """Add the drain ``[b_{j-1}, t_j]`` and transmission ``[t_j, b_j]`` of one packet.

    ``W_at_events`` holds the output workload at ``b_{j-1}``, ``t_j`` and ``b_j``.
    """
    if t_j < ledger.as_of - EPS or b_j < t_j:
        raise ValueError(f"time regression: as_of={ledger.as_of}, t_j={t_j}, b_j={b_j}")
    w_prev, w_t, w_b = W_at_events
    dur = advance_durations(ledger.durations, ledger.thresholds, ledger.as_of,
                            t_j, b_j, w_prev, w_t, w_b, C, rho)
    return replace(ledger, durations=dur, as_of=b_j, workload_at_as_of=w_b)


def overshoot_ratio(ledger: OvershootLedger, zeta_index: int, t: float | None = None) -> float:
    """``O/t`` for threshold ``zeta_index`` (1-based); 0 at ``t = 0``."""
    t = ledger.as_of if t is None else t
    if t <= 0:
        return 0.0
    return float(ledger.durations[zeta_index - 1] / t)


def limited_overshoot(path, zeta1: float, zeta2: float, t: float | None = None) -> float:
    """Time in ``[0, t]`` with ``zeta1 <= W < zeta2`` on a ``SamplePath``."""
    if zeta1 >= zeta2:
        raise ValueError("need zeta1 < zeta2")
    lower = path.time_at_or_above(zeta1, t)
    if math.isinf(zeta2):
        return lower
    return lower - path.time_at_or_above(zeta2, t)


def violation_distance(t: float, O: float, W: float, zeta: float, alpha_bound: float,
                       C: float, rho: float) -> float:
    """Least extra time until the overshoot ratio for ``zeta`` can reach ``alpha_bound``.

    The workload needs ``[zeta - W]^+ / (C - rho)`` to climb to ``zeta``; after
    that every time unit spent above ``zeta`` raises the ratio.
    """
    if not 0 < alpha_bound < 1:
        raise ValueError("alpha_bound must lie in (0, 1)")
    t_hat = t + max(zeta - W, 0.0) / (C - rho)
    ratio_hat = O / t_hat if t_hat > 0 else 0.0
    if ratio_hat > alpha_bound:
        return 0.0
    return (t_hat - t) / (1 - alpha_bound) + (alpha_bound * t - O) / (1 - alpha_bound)


def dist_profile(run, grid, j: int):
    """Per-threshold violation distances after packet ``j`` (1-based) has left.

    Thresholds above the chosen burst are measured against ``fbar`` at the next
    threshold, the others against ``fbar`` at their own level.  Returns
    ``(distances, above, at_or_below)`` where the index sets are 1-based.
    """
    if run.ledger_history is None:
        raise ValueError("run was shaped without ledger history")
    pkt = run.packets[j - 1]
    durations = run.ledger_history[j - 1]
    b_j = pkt.departure_complete
    w_b = float(run.w_out_end[j - 1])
    th = np.asarray(grid.thresholds)
    fb = grid.fbar_at_thresholds
    C, rho = run.params.capacity, run.params.rate
    distances = np.zeros(grid.M - 1)
    above, below = [], []
    for i in range(1, grid.M):
        if th[i - 1] > pkt.sigma_star:
            above.append(i)
            bound = fb[i]
        else:
            below.append(i)
            bound = fb[i - 1]
        distances[i - 1] = violation_distance(b_j, durations[i - 1], w_b, th[i - 1],
                                              bound, C, rho)
    return distances, above, below
