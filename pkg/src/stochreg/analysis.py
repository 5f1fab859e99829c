"""Delay statistics and sample-path checks that do not reuse the ledger code."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .bounds import BoundFunction
from .model import EPS, ShapedPacket
from .workload import SamplePath

VIOLATION_DTYPE = np.dtype([("t", float), ("gamma", float), ("o", float), ("bound", float)])


def delay_stats(shaped) -> tuple[float, float]:
    """Mean and population standard deviation of ``t_j - s_j``."""
    if len(shaped) == 0:
        raise ValueError("no packets")
    d = np.array([p.delay for p in shaped]) if isinstance(shaped[0], ShapedPacket) else np.asarray(shaped)
    return float(d.mean()), float(d.std())


def output_path(run) -> SamplePath:
    """Output workload rebuilt from the departure times alone."""
    return SamplePath.of_trace(run.output_trace(), run.params.rate)


def recompute_overshoot_oracle(path: SamplePath, zeta: float, until: float | None = None) -> float:
    """Measure of ``{t : W(t) >= zeta}`` by intersecting each linear piece with ``zeta``."""
    if not isinstance(path, SamplePath):
        path = SamplePath(*path)
    return path.time_at_or_above(zeta, until)


def workload_ccdf(path: SamplePath, gammas) -> list[tuple[float, float]]:
    """Fraction of ``[0, end]`` spent at or above each level."""
    end = path.end
    if end <= 0:
        raise ValueError("sample path spans no time")
    return [(float(g), path.time_at_or_above(g) / end) for g in gammas]


def _ratio_candidates(path: SamplePath, gamma: float) -> tuple[np.ndarray, np.ndarray]:
    """Times where ``o_gamma`` can peak, with the duration accumulated there.

    The ratio grows while ``W >= gamma`` and shrinks otherwise, so its local
    maxima are breakpoints or instants where the workload falls through
    ``gamma`` inside a piece.
    """
    t = path.times
    w = path.values
    seg = path.segment_time_above(gamma)
    O = np.concatenate(([0.0], np.cumsum(seg)))
    w0, w1 = w[:-1], w[1:]
    down = (w0 >= gamma) & (w1 < gamma)
    idx = np.nonzero(down)[0]
    tau = t[idx] + (w0[idx] - gamma) / (w0[idx] - w1[idx]) * (t[idx + 1] - t[idx])
    O_tau = O[idx] + (tau - t[idx])
    return np.concatenate((t, tau)), np.concatenate((O, O_tau))


def verify_bound(path: SamplePath, f: BoundFunction, gammas, t_from: float = 0.0,
                 until: float | None = None, slack: float = EPS) -> np.ndarray:
    """Every ``(t, gamma)`` with ``t_from <= t <= until`` where ``o_gamma(t) > f(gamma) + slack``.

    Returns a structured array with fields ``t, gamma, o, bound``; empty means pass.
    """
    if until is not None:
        path = path.truncate(until)
    out = []
    for g in np.asarray(gammas, dtype=float):
        times, O = _ratio_candidates(path, g)
        keep = (times > 0) & (times >= t_from)
        times, O = times[keep], O[keep]
        o = O / times
        bound = f.value(g)
        bad = o > bound + slack
        if bad.any():
            rec = np.zeros(int(bad.sum()), dtype=VIOLATION_DTYPE)
            rec["t"] = times[bad]
            rec["gamma"] = g
            rec["o"] = o[bad]
            rec["bound"] = bound
            out.append(rec)
    if not out:
        return np.zeros(0, dtype=VIOLATION_DTYPE)
    log = np.concatenate(out)
    return log[np.argsort(log["t"], kind="stable")]


def dense_gammas(T_1: float, T: float, n: int = 256) -> np.ndarray:
    return np.linspace(T_1, T, n)


@dataclass
class RunReport:
    mean_delay: float
    std_delay: float
    final_ratios: list[float] = field(default_factory=list)
    violations: list[tuple[float, float, float, float]] = field(default_factory=list)
    ccdf: list[tuple[float, float]] = field(default_factory=list)
    algorithm: str = ""
    packets: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def build_report(run, gammas=None, f: BoundFunction | None = None,
                 t_from: float = 0.0, until: float | None = None,
                 max_violations: int = 1000) -> RunReport:
    mean, std = delay_stats(run.packets)
    rep = RunReport(mean, std, algorithm=run.algorithm, packets=len(run.packets))
    if run.ledger is not None:
        rep.final_ratios = [float(x) for x in run.ledger.ratios]
    path = output_path(run)
    if gammas is None and run.grid is not None:
        gammas = dense_gammas(run.grid.thresholds[0], run.grid.horizon)
    if gammas is not None:
        rep.ccdf = workload_ccdf(path, gammas)
        bound = f if f is not None else getattr(run.grid, "f", None)
        if bound is not None:
            log = verify_bound(path, bound, gammas, t_from, until)
            rep.violations = [tuple(float(x) for x in r) for r in log[:max_violations]]
    return rep
