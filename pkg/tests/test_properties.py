import numpy as np
from hypothesis import given, settings, strategies as st

from stochreg.bounds import BoundFunction, build_fbar_full, build_fbar_modified, make_grid
from stochreg.deterministic import shape_deterministic
from stochreg.model import RegulatorParams, Trace
from stochreg.overshoot import limited_overshoot
from stochreg.stochastic import shape_stochastic
from stochreg.workload import SamplePath, sample_path, workload_at, workload_oracle

from conftest import random_pl_bound


@st.composite
def traces(draw, max_n=40, capacity=1.0):
    n = draw(st.integers(1, max_n))
    lengths = draw(st.lists(st.floats(0.5, 10.0), min_size=n, max_size=n))
    idle = draw(st.lists(st.floats(0.0, 25.0), min_size=n, max_size=n))
    starts, t = [], draw(st.floats(0.0, 5.0))
    for L, u in zip(lengths, idle):
        starts.append(t)
        t += L / capacity + u
    return Trace.from_arrays(starts, lengths, capacity)


rhos = st.floats(0.05, 0.95)


@given(traces(), rhos)
def test_incremental_equals_oracle(tr, rho):
    t, w = sample_path(tr, rho)
    _, exact = workload_oracle(tr, rho, t)
    np.testing.assert_allclose(w, exact, atol=1e-9)
    assert np.all(w >= 0)


@given(traces(max_n=15), rhos, rhos, st.floats(0, 300))
def test_workload_decreasing_in_rho(tr, r1, r2, t):
    lo, hi = sorted((r1, r2))
    assert workload_at(tr, lo, t) >= workload_at(tr, hi, t) - 1e-12
    assert workload_at(tr, hi, t) >= 0


@given(traces(), st.floats(0.1, 0.9), st.floats(0.0, 20.0))
def test_deterministic_output_bound(tr, rho, sigma):
    params = RegulatorParams(rho, 1.0, 10.0)
    run = shape_deterministic(tr, sigma, params)
    _, w = workload_oracle(run.output_trace(), rho)
    assert w.max() <= sigma + params.delta + 1e-9
    np.testing.assert_allclose(run.w_out_end, run.w_internal_end, atol=1e-9)
    d = run.delays
    assert np.all(d >= 0)


@given(traces(max_n=60), st.sampled_from([5, 10, 20]), st.sampled_from(["basic", "checked", "fast"]))
@settings(max_examples=40, deadline=None)
def test_ledger_matches_path(tr, M, alg):
    grid = make_grid(BoundFunction(((0, 1.0), (20, 0.3), (200, 0.05)), 200), 0.65, 1.0, 10, M=M,
                     T_M=1e5)
    run = shape_stochastic(tr, grid, RegulatorParams(0.65, 1.0, 10), alg)
    path = SamplePath.of_trace(run.output_trace(), 0.65)
    bN = run.packets[-1].departure_complete
    for i, T in enumerate(grid.thresholds[:-1]):
        assert abs(run.ledger.durations[i] - path.time_at_or_above(T, bN)) <= 1e-7 * bN
    assert np.all(np.diff(run.ledger.durations) <= 1e-12)
    starts = np.array(tr.starts)
    assert np.all(run.departures >= starts)


@given(traces(max_n=25), st.sampled_from([10, 56]))
@settings(max_examples=30, deadline=None)
def test_fast_equals_checked(tr, M):
    grid = make_grid(BoundFunction(((0, 1.0), (20, 0.2), (200, 0.02)), 200), 0.65, 1.0, 10, M=M,
                     T_M=1e5)
    p = RegulatorParams(0.65, 1.0, 10)
    assert shape_stochastic(tr, grid, p, "fast").packets == shape_stochastic(tr, grid, p, "checked").packets


@given(st.integers(0, 2**32 - 1), st.sampled_from(["concave", "convex"]),
       st.integers(2, 56), st.sampled_from(["full", "modified"]))
@settings(max_examples=60, deadline=None)
def test_fbar_lower_and_monotone(seed, shape, M, variant):
    f = random_pl_bound(np.random.default_rng(seed), shape)
    grid = make_grid(f, 0.65, 1.0, 10, M=M, T_M=400, variant=variant)
    gam = np.linspace(grid.thresholds[0], grid.thresholds[-2], 1000, endpoint=False)
    assert np.all(grid.fbar.evaluate(gam) <= f(gam) + 1e-12)
    every = np.linspace(0, 450, 3000)
    assert np.all(np.diff(grid.fbar.evaluate(every)) <= 1e-12)


@given(traces(), rhos, st.floats(0, 30), st.floats(0, 30))
def test_overshoot_decomposition(tr, rho, z1, z2):
    path = SamplePath.of_trace(tr, rho)
    lo, hi = sorted((z1, z2))
    if lo == hi:
        return
    assert abs(path.time_at_or_above(lo) - limited_overshoot(path, lo, hi)
               - path.time_at_or_above(hi)) <= 1e-9
    assert path.time_at_or_above(lo) >= path.time_at_or_above(hi) - 1e-12


@given(traces(), rhos)
def test_ccdf_monotone(tr, rho):
    path = SamplePath.of_trace(tr, rho)
    if path.end <= 0:
        return
    levels = np.linspace(0, 40, 30)
    frac = [path.time_at_or_above(g) / path.end for g in levels]
    assert all(a >= b - 1e-12 for a, b in zip(frac, frac[1:]))
    assert frac[0] <= 1 + 1e-12
