"""Deterministic (sigma, rho) shaper with a front-end FCFS buffer."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import DETERMINISTIC, RegulatorParams, ShapedPacket, Trace, require_valid
from .workload import WorkloadState, evolve


def buffer_departure(s_j: float, b_prev: float) -> float:
    """A packet leaves the buffer once it has arrived and the server is free."""
    return max(s_j, b_prev)


def departure_time(w_internal: float, sigma: float, rho: float, s_tilde: float) -> float:
    """Start of transmission: hold the packet until the internal workload drains to sigma."""
    return max(w_internal - sigma, 0.0) / rho + s_tilde


@dataclass
class ShapeRun:
    """Per-packet output of a shaper plus the workloads seen at its events."""

    packets: list[ShapedPacket]
    params: RegulatorParams
    w_input: np.ndarray = field(default_factory=lambda: np.zeros(0))      # W(s_j; R_i)
    w_internal: np.ndarray = field(default_factory=lambda: np.zeros(0))   # W(s~_j; R_1)
    w_out_start: np.ndarray = field(default_factory=lambda: np.zeros(0))  # W(t_j; R_o)
    w_out_end: np.ndarray = field(default_factory=lambda: np.zeros(0))    # W(b_j; R_o)
    w_internal_end: np.ndarray = field(default_factory=lambda: np.zeros(0))  # W(b_j; R_1)
    ledger: object = None
    ledger_history: np.ndarray | None = None
    grid: object = None
    algorithm: str = "det"
    sigma: float | None = None

    @property
    def departures(self) -> np.ndarray:
        return np.array([p.departure_start for p in self.packets])

    @property
    def delays(self) -> np.ndarray:
        return np.array([p.delay for p in self.packets])

    def output_trace(self) -> Trace:
        """The shaped stream as a trace of departure starts (may be back-to-back)."""
        return Trace.from_arrays([p.departure_start for p in self.packets],
                                 [p.length for p in self.packets], self.params.capacity)


def shape_deterministic(trace: Trace, sigma: float, params: RegulatorParams) -> ShapeRun:
    """Shape ``trace`` so that the output workload is at most ``sigma`` at each departure."""
    require_valid(trace, params.max_length)
    rho, cap = params.rate, params.capacity
    inp = WorkloadState(rho, cap)
    internal = WorkloadState(rho, cap)
    out = WorkloadState(rho, cap)
    b_prev = 0.0
    shaped = []
    n = len(trace)
    w_in = np.zeros(n)
    w_int = np.zeros(n)
    w_t = np.zeros(n)
    w_b = np.zeros(n)
    w_int_b = np.zeros(n)
    for j, p in enumerate(trace.packets):
        trans = p.length / cap
        inp = evolve(inp, p.arrival_start, False)
        w_in[j] = inp.last_value
        inp = evolve(inp, p.arrival_start + trans, True)

        s_tilde = buffer_departure(p.arrival_start, b_prev)
        internal = evolve(internal, s_tilde, False)
        w_int[j] = internal.last_value
        t_j = departure_time(internal.last_value, sigma, rho, s_tilde)
        b_j = t_j + trans
        internal = evolve(internal, s_tilde + trans, True)

        out = evolve(out, t_j, False)
        w_t[j] = out.last_value
        out = evolve(out, b_j, True)
        w_b[j] = out.last_value
        w_int_b[j] = internal.value_at(b_j, False)

        shaped.append(ShapedPacket(p.index, p.arrival_start, s_tilde, t_j, b_j,
                                   DETERMINISTIC, t_j - p.arrival_start, p.length))
        b_prev = b_j
    return ShapeRun(shaped, params, w_in, w_int, w_t, w_b, w_int_b, sigma=sigma)
