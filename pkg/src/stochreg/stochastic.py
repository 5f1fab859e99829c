"""Stochastic (sigma*, rho) regulator.

For every packet the regulator picks a burst ``sigma*(j)`` from the grid
``sigma_1 < ... < sigma_M`` and then behaves like a deterministic shaper with
that burst.  The choice keeps the overshoot ratios of the output workload
under the piecewise-linear bound ``fbar``.  Three selection rules are offered:

``basic``
    one check per candidate, at the threshold just below it;
``checked``
    every threshold below the candidate, against ``fbar`` tightened by a
    margin so the bound also holds after the departure;
``fast``
    the same decisions as ``checked`` from a single projection at the
    smallest admissible candidate, using the fact that lowering the burst by
    ``d`` bits adds exactly ``d / rho`` to both the completion time and every
    overshoot duration below the burst.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .bounds import BoundGrid, ConfigError
from .deterministic import ShapeRun, buffer_departure, departure_time
from .model import EPS, Packet, RegulatorParams, ShapedPacket, Trace, require_valid
from .overshoot import OvershootLedger, advance_durations, alpha, beta

log = logging.getLogger(__name__)

BASIC = "basic"
CHECKED = "checked"
FAST = "fast"
ALGORITHMS = (BASIC, CHECKED, FAST)


class FloorError(ConfigError):
    """The internal workload exceeds the largest burst: ``T_M`` is too small."""


def candidate_floor(w_internal: float, grid: BoundGrid) -> int:
    """Smallest 1-based ``l`` with ``sigma_l >= w_internal``."""
    k = int(np.searchsorted(grid.bursts, w_internal, side="left"))
    if k >= grid.M:
        raise FloorError(
            f"internal workload {w_internal:g} exceeds sigma_M={grid.bursts[-1]:g}; T_M too small")
    return k + 1


def candidate_departure(s_tilde: float, w_internal: float, sigma_l: float, rho: float,
                        C: float, L_j: float) -> tuple[float, float]:
    """Departure start and completion if the packet is shaped with burst ``sigma_l``."""
    t = departure_time(w_internal, sigma_l, rho, s_tilde)
    return t, t + L_j / C


def epsilon(i: int, ell: int, b_j: float, w_out_at_b: float, grid: BoundGrid, rho: float) -> float:
    """Safety margin for threshold ``i`` when trying candidate ``ell`` (both 1-based)."""
    fb = grid.fbar_at_thresholds
    if i == ell - 1:
        return float(fb[ell - 2] - fb[ell - 1])
    T_i = grid.thresholds[i - 1]
    return float((w_out_at_b - T_i) * (1.0 - fb[i - 1]) / (rho * b_j))


@dataclass
class StochShaperState:
    """Everything the regulator knows as of the previous complete departure."""

    params: RegulatorParams
    grid: BoundGrid
    algorithm: str = FAST
    b_prev: float = 0.0      # b_{j-1}
    w_prev: float = 0.0      # W(b_{j-1}; R_o) = W(b_{j-1}; R_1)
    durations: np.ndarray = field(default=None)  # O_{T_i}(b_{j-1}), i = 1..M-1

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.durations is None:
            self.durations = np.zeros(self.grid.M - 1)
        self.thresholds = np.asarray(self.grid.thresholds[:-1], dtype=float)
        self.fbar_T = np.asarray(self.grid.fbar_at_thresholds, dtype=float)

    @property
    def ledger(self) -> OvershootLedger:
        return OvershootLedger(self.thresholds, self.durations.copy(), self.b_prev, self.w_prev)

    def internal(self, packet: Packet) -> tuple[float, float]:
        """Buffer departure and internal workload seen by ``packet``."""
        s_tilde = buffer_departure(packet.arrival_start, self.b_prev)
        w1 = max(self.w_prev - self.params.rate * (s_tilde - self.b_prev), 0.0)
        return s_tilde, w1

    def project(self, t: float, b: float, length: float):
        """Output workloads at ``t`` and ``b`` and all durations at ``b``,
        without touching the committed ledger."""
        rho, C = self.params.rate, self.params.capacity
        w_t = max(self.w_prev - rho * (t - self.b_prev), 0.0)
        w_b = w_t + (C - rho) * length / C
        dur = advance_durations(self.durations, self.thresholds, self.b_prev, t, b,
                                self.w_prev, w_t, w_b, C, rho)
        return w_t, w_b, dur

    def project_one(self, i: int, t: float, b: float, length: float) -> float:
        """Projected ``O_{T_i}(b)`` for a single 1-based threshold index."""
        rho, C = self.params.rate, self.params.capacity
        w_t = max(self.w_prev - rho * (t - self.b_prev), 0.0)
        w_b = w_t + (C - rho) * length / C
        z = self.thresholds[i - 1]
        return (self.durations[i - 1] + beta(self.b_prev, t, z, self.w_prev, w_t, rho)
                + alpha(t, b, z, w_t, w_b, C, rho))


def _margins(state: StochShaperState, ell: int, b: float, w_b: float) -> np.ndarray:
    """``epsilon_{i}`` for i = 1..ell-1 as a vector."""
    fb = state.fbar_T
    rho = state.params.rate
    th = state.thresholds[:ell - 1]
    eps = (w_b - th) * (1.0 - fb[:ell - 1]) / (rho * b)
    eps[ell - 2] = fb[ell - 2] - fb[ell - 1]
    return eps


def select_basic(state: StochShaperState, packet: Packet) -> tuple[int, int]:
    """Return ``(chosen index, k)``; candidates descend from ``k = min B_j``."""
    s_tilde, w1 = state.internal(packet)
    k = candidate_floor(w1, state.grid)
    p = state.params
    for ell in range(k, 1, -1):
        t, b = candidate_departure(s_tilde, w1, state.grid.bursts[ell - 1], p.rate,
                                   p.capacity, packet.length)
        o = state.project_one(ell - 1, t, b, packet.length) / b
        if o <= state.fbar_T[ell - 1] + EPS:
            return ell, k
    return 1, k


def select_checked(state: StochShaperState, packet: Packet) -> tuple[int, int]:
    s_tilde, w1 = state.internal(packet)
    k = candidate_floor(w1, state.grid)
    p = state.params
    for ell in range(k, 1, -1):
        t, b = candidate_departure(s_tilde, w1, state.grid.bursts[ell - 1], p.rate,
                                   p.capacity, packet.length)
        _, w_b, dur = state.project(t, b, packet.length)
        o = dur[:ell - 1] / b
        if np.all(o <= state.fbar_T[:ell - 1] - _margins(state, ell, b, w_b) + EPS):
            return ell, k
    return 1, k


def select_fast(state: StochShaperState, packet: Packet) -> tuple[int, int]:
    s_tilde, w1 = state.internal(packet)
    k = candidate_floor(w1, state.grid)
    if k < 2:
        return 1, k
    p = state.params
    rho = p.rate
    t_k, b_k = candidate_departure(s_tilde, w1, state.grid.bursts[k - 1], rho,
                                   p.capacity, packet.length)
    _, w_bk, dur_k = state.project(t_k, b_k, packet.length)
    ok = dur_k[:k - 1] / b_k <= state.fbar_T[:k - 1] - _margins(state, k, b_k, w_bk) + EPS
    # longest prefix 1..m of thresholds passing the tightened check
    m = int(np.argmin(ok)) if not ok.all() else k - 1
    bursts = state.grid.bursts
    for ell in range(m + 1, 1, -1):
        extra = max(w1 - bursts[ell - 1], 0.0) / rho
        b = s_tilde + extra + packet.length / p.capacity
        o = (dur_k[ell - 2] + extra) / b
        if o <= state.fbar_T[ell - 1] + EPS:
            return ell, k
    return 1, k


SELECTORS = {BASIC: select_basic, CHECKED: select_checked, FAST: select_fast}


def shape_stochastic(trace: Trace, grid: BoundGrid, params: RegulatorParams,
                     algorithm: str = FAST, record_history: bool = True) -> ShapeRun:
    """Shape ``trace`` with the stochastic regulator.

    The returned run carries the committed ledger after the last packet and,
    if ``record_history``, the durations after every packet (row ``j-1``).
    """
    require_valid(trace, params.max_length)
    if algorithm not in SELECTORS:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    if len(trace):
        from .traffic import empirical_rate
        r = empirical_rate(trace)
        if r > params.rate:
            warnings.warn(f"long-term input rate {r:.4f} exceeds rho={params.rate}; "
                          "delays will grow without bound", RuntimeWarning, stacklevel=2)
    select = SELECTORS[algorithm]
    state = StochShaperState(params, grid, algorithm)
    rho, C = params.rate, params.capacity
    n = len(trace)
    w_in = np.zeros(n)
    w_int = np.zeros(n)
    w_t_arr = np.zeros(n)
    w_b_arr = np.zeros(n)
    history = np.zeros((n, grid.M - 1)) if record_history else None
    shaped = []
    inp = 0.0
    a_prev = 0.0
    for j, p in enumerate(trace.packets):
        inp = max(inp - rho * (p.arrival_start - a_prev), 0.0)
        w_in[j] = inp
        inp += (C - rho) * p.length / C
        a_prev = p.arrival_start + p.length / C

        s_tilde, w1 = state.internal(p)
        try:
            ell, k = select(state, p)
        except FloorError as exc:
            raise FloorError(f"packet {p.index}: {exc}") from None
        sigma = float(grid.bursts[ell - 1])
        t, b = candidate_departure(s_tilde, w1, sigma, rho, C, p.length)
        w_t, w_b, dur = state.project(t, b, p.length)
        state.durations = dur
        state.b_prev = b
        state.w_prev = w_b

        w_int[j] = w1
        w_t_arr[j] = w_t
        w_b_arr[j] = w_b
        if history is not None:
            history[j] = dur
        shaped.append(ShapedPacket(p.index, p.arrival_start, s_tilde, t, b, sigma,
                                   t - p.arrival_start, p.length, k, ell))
    run = ShapeRun(shaped, params, w_in, w_int, w_t_arr, w_b_arr, w_b_arr.copy(), state.ledger)
    run.ledger_history = history
    run.grid = grid
    run.algorithm = algorithm
    return run
