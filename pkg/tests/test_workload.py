import numpy as np
import pytest

from stochreg.workload import (SamplePath, WorkloadState, arrivals_in_interval, check_sigma_rho,
                               evolve, sample_path, workload_at, workload_oracle)

from conftest import sec5_trace, trace_of


def test_arrivals_in_interval():
    tr = trace_of([(0, 1)])
    assert arrivals_in_interval(tr, 0, 1) == 1
    assert arrivals_in_interval(tr, 0, 0.5) == 0.5
    assert arrivals_in_interval(tr, 0.7, 0.7) == 0
    with pytest.raises(ValueError):
        arrivals_in_interval(tr, 1, 0)


def test_workload_empty_trace():
    assert workload_at(trace_of([]), 0.5, 3.0) == 0.0


def test_workload_two_packet_hand_values():
    tr = trace_of([(0, 1), (1.2, 1)])
    assert workload_at(tr, 0.5, 1.0) == pytest.approx(0.5)
    assert workload_at(tr, 0.5, 1.2) == pytest.approx(0.4)
    assert workload_at(tr, 0.5, 2.2) == pytest.approx(0.9)
    assert workload_at(tr, 0.5, 5.0) == 0.0


@pytest.mark.parametrize("value,transmitting,dt,expected", [
    (0.5, False, 1, 0.0), (0.5, False, 2, 0.0), (0.0, True, 1, 0.5), (1.0, False, 1, 0.5)])
def test_evolve(value, transmitting, dt, expected):
    st = WorkloadState(0.5, 1.0, 0.0, value)
    assert evolve(st, dt, transmitting).last_value == pytest.approx(expected)


def test_evolve_rejects_time_regression():
    with pytest.raises(ValueError):
        evolve(WorkloadState(0.5, 1.0, 2.0, 0.0), 1.0, False)


def test_check_sigma_rho():
    tr = trace_of([(0, 1), (1.2, 1)])
    assert check_sigma_rho(tr, 0.9, 0.5)
    assert not check_sigma_rho(tr, 0.5, 0.5)
    assert check_sigma_rho(trace_of([]), 0.0, 0.5)
    assert check_sigma_rho(tr, float("inf"), 0.5)


def test_oracle_matches_brute_force():
    tr = sec5_trace(3, 200)
    times = np.linspace(0, tr[-1].arrival_start + 20, 400)
    _, fast = workload_oracle(tr, 0.65, times)
    slow = [workload_at(tr, 0.65, t) for t in times]
    np.testing.assert_allclose(fast, slow, atol=1e-9)


def test_sample_path_matches_oracle_between_breakpoints():
    tr = sec5_trace(4, 300)
    t, w = sample_path(tr, 0.65)
    probe = np.sort(np.random.default_rng(0).uniform(0, t[-1], 500))
    _, exact = workload_oracle(tr, 0.65, probe)
    np.testing.assert_allclose(np.interp(probe, t, w), exact, atol=1e-9)


def test_sample_path_overshoot_triangle():
    # rise at slope C - rho to 2 zeta then drain at slope rho
    C, rho, zeta = 1.0, 0.25, 1.5
    up = 2 * zeta / (C - rho)
    down = 2 * zeta / rho
    path = SamplePath([0, up, up + down], [0, 2 * zeta, 0])
    assert path.time_at_or_above(zeta) == pytest.approx(zeta / (C - rho) + zeta / rho)
    assert path.time_at_or_above(zeta, until=up) == pytest.approx(zeta / (C - rho))
    assert path.time_at_or_above(0.0) == pytest.approx(up + down)


def test_sample_path_rejects_unsorted():
    with pytest.raises(ValueError):
        SamplePath([0, 2, 1], [0, 1, 0])
