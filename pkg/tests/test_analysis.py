import numpy as np
import pytest

from stochreg.analysis import (build_report, delay_stats, output_path, recompute_overshoot_oracle,
                               verify_bound, workload_ccdf)
from stochreg.bounds import BoundFunction
from stochreg.deterministic import shape_deterministic
from stochreg.model import ShapedPacket
from stochreg.stochastic import shape_stochastic
from stochreg.workload import SamplePath

from conftest import sec5_grid, sec5_params, sec5_trace


def _shaped(delays):
    return [ShapedPacket(j + 1, 0.0, 0.0, d, d + 1, 1.0, d) for j, d in enumerate(delays)]


def test_delay_stats():
    assert delay_stats(_shaped([0, 0, 0])) == (0.0, 0.0)
    assert delay_stats(_shaped([1, 3])) == (2.0, 1.0)
    with pytest.raises(ValueError):
        delay_stats([])


def test_ccdf_edges():
    path = SamplePath([0, 2, 4, 10], [0, 4, 0, 0])
    (g0, idle), (g1, top) = workload_ccdf(path, [0, 5])
    # zero workload on [4, 10] still counts as W >= 0
    assert idle == 1.0
    assert top == 0.0
    busy = workload_ccdf(path, [1e-12])[0][1]
    assert busy == pytest.approx(0.4)


def test_oracle_simple_paths():
    assert recompute_overshoot_oracle(SamplePath([0, 5], [0, 0]), 1.0) == 0.0
    C, rho, z = 1.0, 0.65, 2.0
    up, down = 2 * z / (C - rho), 2 * z / rho
    tri = SamplePath([0, up, up + down], [0, 2 * z, 0])
    assert recompute_overshoot_oracle(tri, z) == pytest.approx(z / (C - rho) + z / rho)
    with pytest.raises(ValueError):
        recompute_overshoot_oracle(([0, 2, 1], [0, 1, 0]), z)


def test_ledger_matches_path_integration():
    grid = sec5_grid(M=20)
    run = shape_stochastic(sec5_trace(9, 5000), grid, sec5_params(), "fast")
    path = output_path(run)
    bN = run.packets[-1].departure_complete
    for i, T in enumerate(grid.thresholds[:-1]):
        direct = recompute_overshoot_oracle(path, T, bN)
        assert run.ledger.durations[i] == pytest.approx(direct, abs=1e-7 * bN)
        ccdf = workload_ccdf(path.truncate(bN), [T])[0][1]
        assert ccdf == pytest.approx(run.ledger.ratios[i], abs=1e-7)


def test_verify_catches_peak_between_breakpoints():
    # rises 0 -> 10 on [0, 1], drains to 0 on [1, 3]; above 5 during [0.5, 2]
    path = SamplePath([0, 1, 3], [0, 10, 0])
    f = BoundFunction(((0, 1.0), (10, 0.4)), 10)
    log = verify_bound(path, f, [5.0])
    assert len(log) == 1
    assert log["t"][0] == pytest.approx(2.0)
    assert log["o"][0] == pytest.approx(0.75)
    assert log["bound"][0] == pytest.approx(0.7)
    assert len(verify_bound(path, f, [5.0], t_from=2.5)) == 0


def test_unshaped_input_violates():
    tr = sec5_trace(0, 5000)
    path = SamplePath.of_trace(tr, 0.65)
    tight = BoundFunction(((0, 1.0), (20, 0.05), (200, 0.001)), 200)
    assert len(verify_bound(path, tight, np.linspace(10, 200, 50))) > 0


def test_deterministic_output_never_violates_trivial_bound():
    run = shape_deterministic(sec5_trace(1, 2000), 30.0, sec5_params())
    one = BoundFunction(((0, 1.0), (200, 1.0)), 200)
    assert len(verify_bound(output_path(run), one, np.linspace(3.5, 200, 64))) == 0


def test_report():
    grid = sec5_grid(M=10)
    run = shape_stochastic(sec5_trace(2, 2000), grid, sec5_params(), "fast")
    rep = build_report(run, until=run.packets[-1].departure_complete)
    d = rep.to_dict()
    assert d["packets"] == 2000 and d["std_delay"] >= 0
    assert all(0 <= o <= 1 for o in rep.final_ratios)
    ccdf = [c for _, c in rep.ccdf]
    assert all(a >= b for a, b in zip(ccdf, ccdf[1:]))
