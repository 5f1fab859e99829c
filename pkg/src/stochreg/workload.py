"""Virtual workload of a constant-rate queue fed by a packet trace.

Two independent routes are provided.  ``workload_at`` and ``workload_oracle``
evaluate the sup form ``max_s A(s, t) - rho (t - s)`` directly, while
``WorkloadState.evolve`` advances the piecewise-linear workload from event to
event (slope ``C - rho`` while a packet is on the link, ``-rho`` floored at zero
otherwise).  The shapers use the incremental route; tests compare the two.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .model import EPS, Trace


def _edges(trace: Trace) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(trace.starts, dtype=float)
    a = s + np.asarray(trace.lengths, dtype=float) / trace.capacity
    return s, a


def arrivals_in_interval(trace: Trace, s: float, t: float) -> float:
    """Bits ``A(s, t)`` delivered by the trace's link during ``[s, t]``."""
    if s > t:
        raise ValueError(f"interval start {s} after end {t}")
    starts, ends = _edges(trace)
    if starts.size == 0:
        return 0.0
    overlap = np.clip(np.minimum(ends, t) - np.maximum(starts, s), 0.0, None)
    return float(trace.capacity * overlap.sum())


def _cumulative(starts, ends, capacity, x):
    """Cumulative arrivals ``A(0, x)`` for an array of times ``x``."""
    x = np.asarray(x, dtype=float)
    # packets fully received before x, plus the partial one in flight
    done = np.searchsorted(ends, x, side="right")
    lengths = (ends - starts) * capacity
    csum = np.concatenate(([0.0], np.cumsum(lengths)))
    total = csum[done]
    inflight = done < starts.size
    idx = np.where(inflight, done, 0)
    part = np.where(inflight, np.clip(x - starts[idx], 0.0, None) * capacity, 0.0)
    return total + part


def workload_at(trace: Trace, rho: float, t: float) -> float:
    """``W_rho(t)`` by maximising over every candidate start ``s`` in ``[0, t]``."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    starts, ends = _edges(trace)
    if starts.size == 0:
        return 0.0
    cand = np.concatenate(([0.0, t], starts[starts <= t], ends[ends <= t]))
    cum_t = _cumulative(starts, ends, trace.capacity, [t])[0]
    cum_s = _cumulative(starts, ends, trace.capacity, cand)
    return float(max(0.0, np.max(cum_t - cum_s - rho * (t - cand))))


def workload_oracle(trace: Trace, rho: float, times=None) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate the sup form at ``times`` (default: every packet edge).

    Uses ``W(t) = (A(0,t) - rho t) - min_{s <= t} (A(0,s) - rho s)``; the inner
    minimum of a piecewise-linear function is attained at an edge or at ``t``.
    """
    starts, ends = _edges(trace)
    if times is None:
        times = np.sort(np.concatenate(([0.0], starts, ends)))
    times = np.asarray(times, dtype=float)
    if starts.size == 0:
        return times, np.zeros_like(times)
    knots = np.sort(np.concatenate(([0.0], starts, ends)))
    g_knots = _cumulative(starts, ends, trace.capacity, knots) - rho * knots
    prefix_min = np.minimum.accumulate(g_knots)
    g_t = _cumulative(starts, ends, trace.capacity, times) - rho * times
    k = np.searchsorted(knots, times, side="right") - 1
    inner = np.where(k >= 0, prefix_min[np.maximum(k, 0)], np.inf)
    inner = np.minimum(inner, g_t)
    return times, np.maximum(g_t - inner, 0.0)


@dataclass(frozen=True)
class WorkloadState:
    rate: float
    capacity: float
    last_time: float = 0.0
    last_value: float = 0.0
    transmitting: bool = False

    def value_at(self, t: float, transmitting: bool | None = None) -> float:
        return evolve(self, t, self.transmitting if transmitting is None else transmitting).last_value


def evolve(state: WorkloadState, to: float, transmitting: bool) -> WorkloadState:
    """Advance the workload to time ``to`` along one linear piece."""
    dt = to - state.last_time
    if dt < -EPS:
        raise ValueError(f"time regression: {to} < {state.last_time}")
    dt = max(dt, 0.0)
    if transmitting:
        value = state.last_value + (state.capacity - state.rate) * dt
    else:
        value = max(state.last_value - state.rate * dt, 0.0)
    return replace(state, last_time=to, last_value=value, transmitting=transmitting)


def check_sigma_rho(trace: Trace, sigma: float, rho: float) -> bool:
    """True iff the trace is ``(sigma, rho)``-bounded.

    Between edges the workload is linear, so its supremum sits at a packet's
    full-arrival instant.
    """
    if len(trace) == 0 or sigma == float("inf"):
        return True
    _, ends = _edges(trace)
    _, w = workload_oracle(trace, rho, ends)
    return bool(np.max(w) <= sigma + EPS)


def sample_path(trace: Trace, rho: float) -> tuple[np.ndarray, np.ndarray]:
    """Breakpoints ``(t, W)`` of the workload, built with ``evolve``.

    Includes the instants where a draining workload reaches zero, so linear
    interpolation between consecutive points reproduces the path exactly.
    """
    ts = [0.0]
    ws = [0.0]
    st = WorkloadState(rho, trace.capacity)
    for p in trace.packets:
        start = p.arrival_start
        if st.last_value > 0 and st.last_value - rho * (start - st.last_time) < 0:
            hit = st.last_time + st.last_value / rho
            ts.append(hit)
            ws.append(0.0)
        st = evolve(st, start, False)
        if start > ts[-1]:
            ts.append(start)
            ws.append(st.last_value)
        st = evolve(st, start + p.length / trace.capacity, True)
        ts.append(st.last_time)
        ws.append(st.last_value)
    if st.last_value > 0:
        ts.append(st.last_time + st.last_value / rho)
        ws.append(0.0)
    return np.asarray(ts), np.asarray(ws)


@dataclass(frozen=True)
class SamplePath:
    """Breakpoint list of a piecewise-linear workload; linear in between."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        w = np.asarray(self.values, dtype=float)
        if t.shape != w.shape:
            raise ValueError("times and values differ in length")
        if t.size and np.any(np.diff(t) < 0):
            raise ValueError("sample path times must be sorted")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", w)

    @classmethod
    def of_trace(cls, trace: Trace, rho: float) -> "SamplePath":
        return cls(*sample_path(trace, rho))

    @property
    def end(self) -> float:
        return float(self.times[-1]) if self.times.size else 0.0

    def segment_time_above(self, zeta: float) -> np.ndarray:
        """Per-segment measure of ``{t : W(t) >= zeta}``."""
        t0, t1 = self.times[:-1], self.times[1:]
        w0, w1 = self.values[:-1], self.values[1:]
        dt = t1 - t0
        lo = np.minimum(w0, w1)
        hi = np.maximum(w0, w1)
        with np.errstate(divide="ignore", invalid="ignore"):
            frac = np.where(hi > lo, (hi - zeta) / (hi - lo), 0.0)
        frac = np.clip(frac, 0.0, 1.0)
        return np.where(lo >= zeta, dt, np.where(hi < zeta, 0.0, frac * dt))

    def time_at_or_above(self, zeta: float, until: float | None = None) -> float:
        """Total time in ``[0, until]`` with ``W >= zeta``."""
        if until is None or until >= self.end:
            return float(self.segment_time_above(zeta).sum())
        cut = self.truncate(until)
        return float(cut.segment_time_above(zeta).sum())

    def truncate(self, until: float) -> "SamplePath":
        k = int(np.searchsorted(self.times, until, side="right"))
        t = list(self.times[:k])
        w = list(self.values[:k])
        if k < self.times.size and (not t or t[-1] < until):
            t.append(until)
            w.append(float(np.interp(until, self.times, self.values)))
        return SamplePath(np.asarray(t), np.asarray(w))
