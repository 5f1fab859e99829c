import numpy as np
import pytest

from stochreg.bounds import default_bound_function, make_grid
from stochreg.model import RegulatorParams, Trace
from stochreg.traffic import SourceConfig, generate

RHO = 0.65


def sec5_params(rho=RHO):
    return RegulatorParams(rho, 1.0, 10.0)


def sec5_grid(M=None, T_M=400.0, rho=RHO, **kw):
    return make_grid(default_bound_function(), rho, 1.0, 10.0, M=M, T_M=T_M, **kw)


def sec5_trace(seed, n):
    return generate(SourceConfig(seed=seed, count=n))


def trace_of(pairs, capacity=1.0):
    starts, lengths = zip(*pairs) if pairs else ((), ())
    return Trace.from_arrays(starts, lengths, capacity)


@pytest.fixture
def f43():
    return default_bound_function()


def random_pl_bound(rng, shape, T=200.0):
    """Decreasing piecewise-linear f on [0, T] with f(0) = 1; ``shape`` is concave or convex."""
    from stochreg.bounds import BoundFunction
    n = int(rng.integers(2, 7))
    knots = np.sort(rng.choice(np.arange(5, int(T) - 4), size=n - 1, replace=False)).astype(float)
    xs = np.concatenate(([0.0], knots, [T]))
    mags = np.sort(rng.uniform(0.1, 1.0, size=n))
    if shape == "concave":
        pass  # steeper as gamma grows
    elif shape == "convex":
        mags = mags[::-1]
    else:
        raise ValueError(shape)
    drops = mags * np.diff(xs)
    drops *= rng.uniform(0.5, 0.99) / drops.sum()
    vals = 1.0 - np.concatenate(([0.0], np.cumsum(drops)))
    return BoundFunction(tuple(zip(xs.tolist(), vals.tolist())), T)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
