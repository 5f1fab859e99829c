"""Threshold grid, burst grid and the piecewise-linear lower approximation of f."""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .model import EPS

FULL = "full"
MODIFIED = "modified"


class ConfigError(ValueError):
    """Grid or bound parameters that cannot satisfy the construction constraints."""


@dataclass(frozen=True)
class BoundFunction:
    """Piecewise-linear bounding function given by ``(gamma, value)`` breakpoints.

    Values beyond the last breakpoint are held constant.  ``horizon`` is the
    largest workload level ``T`` the bound is enforced for.
    """

    breakpoints: tuple[tuple[float, float], ...]
    horizon: float

    def __post_init__(self):
        pts = tuple((float(g), float(v)) for g, v in self.breakpoints)
        object.__setattr__(self, "breakpoints", pts)
        if not pts:
            raise ValueError("bounding function needs at least one breakpoint")
        xs = [g for g, _ in pts]
        vs = [v for _, v in pts]
        if xs[0] != 0.0:
            raise ValueError("first breakpoint must be at gamma = 0")
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("breakpoints must be strictly increasing in gamma")
        if any(v <= 0 for v in vs):
            raise ValueError("bounding function must be positive")
        if any(b > a + 1e-15 for a, b in zip(vs, vs[1:])):
            raise ValueError("bounding function must be non-increasing")
        if abs(vs[0] - 1.0) > 1e-12:
            raise ValueError("bounding function must equal 1 at gamma = 0")

    @property
    def xs(self) -> np.ndarray:
        return np.array([g for g, _ in self.breakpoints])

    @property
    def values(self) -> np.ndarray:
        return np.array([v for _, v in self.breakpoints])

    def __call__(self, gamma):
        return np.interp(gamma, self.xs, self.values)

    def value(self, gamma: float) -> float:
        return float(np.interp(gamma, self.xs, self.values))

    def left_slope(self, x: float) -> float:
        """Slope of the linear piece ending at ``x`` (0 left of the first knot)."""
        xs = [g for g, _ in self.breakpoints]
        k = bisect.bisect_left(xs, x)  # first knot >= x
        if k == 0:
            return 0.0
        if k >= len(xs):
            return 0.0
        x0, v0 = self.breakpoints[k - 1]
        x1, v1 = self.breakpoints[k]
        return (v1 - v0) / (x1 - x0)

    def knots_in(self, lo: float, hi: float) -> list[float]:
        return [g for g, _ in self.breakpoints if lo < g < hi]


def default_bound_function() -> BoundFunction:
    """Two-slope bound: -2.5e-3 per bit up to 40 bits, then -5e-3 per bit up to T = 200."""
    return BoundFunction(((0.0, 1.0), (40.0, 0.9), (200.0, 0.1)), 200.0)


@dataclass(frozen=True)
class FBar:
    """Piecewise-linear function stored as pieces ``[lo_k, lo_{k+1})``.

    On piece ``k`` the value is ``anchor_y[k] + slope[k] * (gamma - anchor_x[k])``.
    The last piece is closed at ``end``; beyond ``end`` the value is 0.
    """

    lo: tuple[float, ...]
    anchor_x: tuple[float, ...]
    anchor_y: tuple[float, ...]
    slope: tuple[float, ...]
    end: float

    def __call__(self, gamma: float) -> float:
        if gamma > self.end:
            return 0.0
        k = bisect.bisect_right(self.lo, gamma) - 1
        k = max(k, 0)
        return self.anchor_y[k] + self.slope[k] * (gamma - self.anchor_x[k])

    def evaluate(self, gammas) -> np.ndarray:
        g = np.asarray(gammas, dtype=float)
        lo = np.asarray(self.lo)
        k = np.clip(np.searchsorted(lo, g, side="right") - 1, 0, None)
        val = np.asarray(self.anchor_y)[k] + np.asarray(self.slope)[k] * (g - np.asarray(self.anchor_x)[k])
        return np.where(g > self.end, 0.0, val)

    def breakpoints(self) -> list[tuple[float, float]]:
        """``(gamma, value)`` at the start of every piece, plus the closing point."""
        pts = [(lo, self(lo)) for lo in self.lo]
        pts.append((self.end, self(self.end)))
        return pts


@dataclass(frozen=True)
class BoundGrid:
    delta: float
    thresholds: np.ndarray   # T_1 .. T_M
    bursts: np.ndarray       # sigma_1 .. sigma_M
    fbar: FBar
    variant: str
    f: BoundFunction

    @property
    def M(self) -> int:
        return len(self.thresholds)

    @property
    def horizon(self) -> float:
        return self.f.horizon

    @property
    def fbar_at_thresholds(self) -> np.ndarray:
        return self.fbar.evaluate(self.thresholds)


def delta(rho: float, C: float, L_max: float) -> float:
    """Packetization error margin ``(1 - rho/C) L_max``."""
    if not (0 < rho < C):
        raise ValueError(f"need 0 < rho < C, got rho={rho}, C={C}")
    return (1.0 - rho / C) * L_max


def m_max(T: float, delta: float) -> int:
    """Largest grid size allowed by the spacing constraints."""
    if delta <= 0:
        raise ConfigError("delta must be positive")
    m = math.floor(T / delta + 1e-12) - 1
    if m < 2:
        raise ConfigError(f"T={T} with delta={delta} allows only M={m}; need T > 2*delta")
    return m


Spacing = Union[str, float, Sequence[float]]


def build_grid(T: float, M: int, T_M: float, delta: float,
               spacing: Spacing = "uniform") -> tuple[np.ndarray, np.ndarray]:
    """Thresholds ``T_1 < ... < T_M`` and bursts ``sigma_i = T_i - delta``.

    ``spacing`` is ``"uniform"`` (step ``T/M`` with ``T_1 = T/M``), a step size
    (``T_i = i * step``), or an explicit list of the ``M - 1`` thresholds below
    ``T``.  ``T_M`` is always appended last.
    """
    if M < 2:
        raise ConfigError(f"need M >= 2, got {M}")
    if isinstance(spacing, str):
        if spacing != "uniform":
            raise ConfigError(f"unknown spacing strategy {spacing!r}")
        step = T / M
        lower = [step * i for i in range(1, M)]
    elif isinstance(spacing, (int, float)):
        lower = [float(spacing) * i for i in range(1, M)]
    else:
        lower = [float(x) for x in spacing]
        if len(lower) != M - 1:
            raise ConfigError(f"explicit spacing needs M-1={M - 1} thresholds, got {len(lower)}")
    th = np.array(lower + [float(T_M)])
    tol = EPS * max(1.0, T)
    if th[0] < delta - tol:
        raise ConfigError(f"constraint T_1 >= delta violated: T_1={th[0]:g} < delta={delta:g}")
    gaps = np.diff(th)
    bad = np.nonzero(gaps < delta - tol)[0]
    if bad.size:
        i = int(bad[0]) + 1
        raise ConfigError(
            f"constraint T_(i+1) - T_i >= delta violated at i={i}: gap {gaps[i - 1]:g} < {delta:g}")
    if T - th[-2] < delta - tol:
        raise ConfigError(
            f"constraint T - T_(M-1) >= delta violated: T - T_{M - 1} = {T - th[-2]:g} < {delta:g}")
    if not th[-1] > T:
        raise ConfigError(f"constraint T_M >> T violated: T_M={th[-1]:g} <= T={T:g}")
    return th, th - delta


def _below(f: BoundFunction, x0: float, y0: float, slope: float, lo: float, hi: float) -> bool:
    """Does the line through ``(x0, y0)`` stay at or below ``f`` on ``[lo, hi]``?"""
    pts = [lo, hi] + f.knots_in(lo, hi)
    return all(y0 + slope * (x - x0) <= f.value(x) + 1e-12 for x in pts)


def _safe_slope(f: BoundFunction, lo: float, hi: float) -> float:
    """Gentlest slope of a line through ``(hi, f(hi))`` that stays below ``f`` on ``[lo, hi)``."""
    fh = f.value(hi)
    return max((f.value(x) - fh) / (x - hi) for x in [lo] + f.knots_in(lo, hi))


def _lower_piece(f: BoundFunction, lo: float, hi: float) -> float:
    """Slope for the piece ending at ``(hi, f(hi))``: chord from ``lo``, else tangent."""
    fh = f.value(hi)
    chord = (fh - f.value(lo)) / (hi - lo)
    if _below(f, hi, fh, chord, lo, hi):
        return chord
    tangent = f.left_slope(hi)
    if _below(f, hi, fh, tangent, lo, hi):
        return tangent
    # neither convex nor concave on this piece
    return _safe_slope(f, lo, hi)


def _close(lo, ax, ay, sl, thresholds, f):
    T = f.horizon
    lo.append(float(thresholds[-2]))
    ax.append(float(thresholds[-2]))
    ay.append(f.value(T))
    sl.append(0.0)
    return FBar(tuple(lo), tuple(ax), tuple(ay), tuple(sl), float(thresholds[-1]))


def build_fbar_full(f: BoundFunction, thresholds: Sequence[float]) -> FBar:
    """Lower approximation with one chord (or tangent) per threshold interval."""
    th = [float(x) for x in thresholds]
    lo, ax, ay, sl = [0.0], [0.0], [1.0], [0.0]
    for i in range(len(th) - 2):
        a, b = th[i], th[i + 1]
        lo.append(a)
        ax.append(b)
        ay.append(f.value(b))
        sl.append(_lower_piece(f, a, b))
    return _close(lo, ax, ay, sl, th, f)


def build_fbar_modified(f: BoundFunction, thresholds: Sequence[float], delta: float) -> FBar:
    """Variant for grids coarser than the maximum: flat at ``f(sigma_{i+1})`` on
    ``[T_i, sigma_{i+1})``, then a chord (or tangent) up to ``T_{i+1}``."""
    th = [float(x) for x in thresholds]
    lo, ax, ay, sl = [0.0], [0.0], [1.0], [0.0]
    for i in range(len(th) - 2):
        a, b = th[i], th[i + 1]
        sig = b - delta
        if sig > a:
            lo.append(a)
            ax.append(a)
            ay.append(f.value(sig))
            sl.append(0.0)
        start = max(sig, a)
        lo.append(start)
        ax.append(b)
        ay.append(f.value(b))
        sl.append(_lower_piece(f, start, b))
    return _close(lo, ax, ay, sl, th, f)


def eval_fbar(grid: BoundGrid, gamma: float) -> float:
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    return grid.fbar(gamma)


def make_grid(f: BoundFunction, rho: float, C: float, L_max: float, M: int | None = None,
              T_M: float | None = None, spacing: Spacing = "uniform",
              variant: str | None = None) -> BoundGrid:
    """Build the complete grid for a regulator.

    ``M`` defaults to the maximum.  The ``fbar`` variant defaults to ``full`` at
    the maximum ``M`` and ``modified`` below it.
    """
    d = delta(rho, C, L_max)
    T = f.horizon
    mmax = m_max(T, d)
    if M is None:
        M = mmax
    if M > mmax:
        raise ConfigError(f"M={M} exceeds the maximum {mmax} for T={T:g}, delta={d:g}")
    if T_M is None:
        T_M = 2.0 * T
    th, bursts = build_grid(T, M, T_M, d, spacing)
    if variant is None:
        variant = FULL if M == mmax else MODIFIED
    if variant == FULL:
        fbar = build_fbar_full(f, th)
    elif variant == MODIFIED:
        fbar = build_fbar_modified(f, th, d)
    else:
        raise ConfigError(f"unknown f-bar variant {variant!r}")
    return BoundGrid(d, th, bursts, fbar, variant, f)
