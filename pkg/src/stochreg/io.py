"""CSV and JSON formats for traces, shaped runs, sample paths and bound specs."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .bounds import BoundFunction, BoundGrid
from .model import ShapedPacket, Trace

TRACE_HEADER = ["j", "s", "L"]
SHAPED_HEADER = ["j", "s", "s_tilde", "t", "b", "sigma_star", "delay"]
STOCH_EXTRA = ["k", "sigma_star_index"]


def _fmt(x: float) -> str:
    # repr round-trips doubles exactly
    return repr(float(x))


def sidecar_path(path) -> Path:
    p = Path(path)
    return p.with_suffix(p.suffix + ".json")


def write_trace(trace: Trace, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_HEADER)
        for p in trace.packets:
            w.writerow([p.index, _fmt(p.arrival_start), _fmt(p.length)])
    sidecar_path(path).write_text(json.dumps({"capacity": trace.capacity}))


def read_trace(path, capacity: float | None = None) -> Trace:
    """Read a trace CSV; the capacity comes from the argument or the JSON sidecar."""
    path = Path(path)
    if capacity is None:
        side = sidecar_path(path)
        capacity = json.loads(side.read_text())["capacity"] if side.exists() else 1.0
    with path.open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    if rows and set(TRACE_HEADER) - set(rows[0]):
        raise ValueError(f"{path}: expected columns {TRACE_HEADER}")
    starts = [float(r["s"]) for r in rows]
    lengths = [float(r["L"]) for r in rows]
    return Trace.from_arrays(starts, lengths, float(capacity))


def write_shaped(packets: list[ShapedPacket], path, stochastic: bool = False) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SHAPED_HEADER + (STOCH_EXTRA if stochastic else []))
        for p in packets:
            sigma = "" if isinstance(p.sigma_star, str) else _fmt(p.sigma_star)
            row = [p.index, _fmt(p.arrival_start), _fmt(p.buffer_departure),
                   _fmt(p.departure_start), _fmt(p.departure_complete), sigma, _fmt(p.delay)]
            if stochastic:
                row += [p.floor_index, p.sigma_index]
            w.writerow(row)


def read_shaped(path, capacity: float = 1.0) -> list[ShapedPacket]:
    """Read a shaped CSV back; lengths are recovered as ``C (b - t)``."""
    out = []
    with Path(path).open(newline="") as fh:
        for r in csv.DictReader(fh):
            t, b = float(r["t"]), float(r["b"])
            sigma = float(r["sigma_star"]) if r["sigma_star"] else "deterministic"
            out.append(ShapedPacket(int(r["j"]), float(r["s"]), float(r["s_tilde"]), t, b, sigma,
                                    float(r["delay"]), capacity * (b - t),
                                    int(r.get("k") or 0), int(r.get("sigma_star_index") or 0)))
    return out


def write_sample_path(times, values, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "W"])
        for t, v in zip(times, values):
            w.writerow([_fmt(t), _fmt(v)])


def read_sample_path(path) -> tuple[np.ndarray, np.ndarray]:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1]


def write_overshoot_series(departures, history, path) -> None:
    """Rows ``t, T_index, o`` for every complete departure and threshold."""
    history = np.asarray(history)
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "T_index", "o"])
        for b, row in zip(departures, history):
            for i, dur in enumerate(row, start=1):
                w.writerow([_fmt(b), i, _fmt(dur / b if b > 0 else 0.0)])


def write_ledger_history(history, path) -> None:
    history = np.asarray(history)
    header = ",".join(f"O_T{i}" for i in range(1, history.shape[1] + 1))
    np.savetxt(path, history, delimiter=",", header=header, comments="", fmt="%.17g")


def read_bound_spec(path) -> dict:
    spec = json.loads(Path(path).read_text())
    if "f" not in spec:
        raise ValueError(f"{path}: bound spec needs an 'f' breakpoint list")
    return spec


def bound_function_from_spec(spec: dict) -> BoundFunction:
    pts = [tuple(map(float, p)) for p in spec["f"]]
    return BoundFunction(pts, float(spec.get("T", pts[-1][0])))


def grid_to_dict(grid: BoundGrid) -> dict:
    return {
        "delta": grid.delta,
        "M": grid.M,
        "variant": grid.variant,
        "T": [float(x) for x in grid.thresholds],
        "sigma": [float(x) for x in grid.bursts],
        "fbar": [[float(x), float(y)] for x, y in grid.fbar.breakpoints()],
    }


def write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2))
