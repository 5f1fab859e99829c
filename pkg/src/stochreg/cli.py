"""Command-line driver: ``generate``, ``bound``, ``shape``, ``verify``, ``stats``.

Exit codes: 0 pass, 1 bound violation, 2 usage or IO error, 3 infeasible
configuration.  Every subcommand accepts ``--config FILE.json``; explicit
flags override the file.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import io
from .analysis import delay_stats, dense_gammas, output_path, verify_bound, workload_ccdf
from .bounds import ConfigError, default_bound_function, m_max, make_grid
from .deterministic import ShapeRun, shape_deterministic
from .model import RegulatorParams, TraceError
from .stochastic import ALGORITHMS, shape_stochastic
from .traffic import SourceConfig, empirical_rate, generate
from .workload import check_sigma_rho

log = logging.getLogger("stochreg")

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_CONFIG = 0, 1, 2, 3

# flag name -> (config section, key)
CONFIG_KEYS = {
    "seed": ("source", "seed"), "n": ("source", "count"), "lam": ("source", "lam"),
    "lmin": ("source", "L_min"), "lmax": ("source", "L_max"), "capacity": ("regulator", "capacity"),
    "rho": ("regulator", "rate"), "max_length": ("regulator", "max_length"),
    "m": ("bound", "M"), "tm": ("bound", "T_M"), "spacing": ("bound", "spacing"),
    "variant": ("bound", "variant"), "alg": ("shape", "algorithm"), "sigma": ("shape", "sigma"),
}
DEFAULTS = {"seed": 0, "n": 100_000, "lam": 0.25, "lmin": 5, "lmax": 10, "capacity": 1.0,
            "rho": 0.65, "max_length": None, "m": None, "tm": None, "spacing": "uniform",
            "variant": None, "alg": "fast", "sigma": None}


class UsageError(Exception):
    pass


def _merge(args: argparse.Namespace) -> argparse.Namespace:
    """Fill unset flags from ``--config`` and then from the defaults."""
    cfg = {}
    if getattr(args, "config", None):
        cfg = json.loads(Path(args.config).read_text())
    for name, (section, key) in CONFIG_KEYS.items():
        if not hasattr(args, name) or getattr(args, name) is not None:
            continue
        value = cfg.get(section, {}).get(key, DEFAULTS[name])
        setattr(args, name, value)
    if hasattr(args, "bound") and args.bound is None and "bound" in cfg and "f" in cfg["bound"]:
        args.bound_spec = cfg["bound"]
    return args


def _bound_spec(args) -> dict:
    if getattr(args, "bound", None):
        return io.read_bound_spec(args.bound)
    if getattr(args, "bound_spec", None):
        return args.bound_spec
    f = default_bound_function()
    return {"f": [list(p) for p in zip(f.xs.tolist(), f.values.tolist())], "T": f.horizon}


def _spacing(value):
    if isinstance(value, (list, float, int)) and not isinstance(value, bool):
        return value
    if value in (None, "uniform"):
        return "uniform"
    try:
        return float(value)
    except ValueError:
        raise UsageError(f"bad --spacing {value!r}") from None


def _grid(args, spec: dict):
    f = io.bound_function_from_spec(spec)
    M = args.m if args.m is not None else spec.get("M")
    T_M = args.tm if args.tm is not None else spec.get("T_M")
    spacing = _spacing(args.spacing if args.spacing != "uniform" else spec.get("spacing", "uniform"))
    variant = args.variant if args.variant is not None else spec.get("variant")
    return make_grid(f, args.rho, args.capacity, args.max_length, M, T_M, spacing, variant)


def _params(args, trace=None) -> RegulatorParams:
    if args.max_length is None:
        args.max_length = float(trace.max_length) if trace is not None and len(trace) else float(args.lmax)
    return RegulatorParams(float(args.rho), float(args.capacity), float(args.max_length))


def report_path(shaped_csv) -> Path:
    p = Path(shaped_csv)
    return p.with_name(p.stem + ".report.json")


def cmd_generate(args) -> int:
    cfg = SourceConfig(int(args.seed), int(args.n), float(args.lam), int(args.lmin),
                       int(args.lmax), float(args.capacity))
    trace = generate(cfg)
    io.write_trace(trace, args.out)
    print(f"wrote {len(trace)} packets to {args.out}; empirical rate {empirical_rate(trace):.6f}")
    return EXIT_OK


def cmd_bound(args) -> int:
    spec = _bound_spec(args)
    _params(args)
    grid = _grid(args, spec)
    d = grid.delta
    out = io.grid_to_dict(grid)
    out["M_max"] = m_max(grid.horizon, d)
    if args.out:
        io.write_json(out, args.out)
    print(f"delta={d:g} M={grid.M} M_max={out['M_max']} variant={grid.variant}")
    return EXIT_OK


def cmd_shape(args) -> int:
    trace = io.read_trace(args.trace, args.capacity)
    params = _params(args, trace)
    out = Path(args.out)
    report = {"trace": str(args.trace), "algorithm": args.alg, "rho": params.rate,
              "capacity": params.capacity, "max_length": params.max_length}
    if args.alg == "det":
        if args.sigma is None:
            raise UsageError("--alg det needs --sigma")
        run = shape_deterministic(trace, float(args.sigma), params)
        report["sigma"] = float(args.sigma)
        io.write_shaped(run.packets, out)
    else:
        spec = _bound_spec(args)
        grid = _grid(args, spec)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            run = shape_stochastic(trace, grid, params, args.alg)
        for w in caught:
            log.warning("%s", w.message)
        report["bound"] = spec
        report["grid"] = io.grid_to_dict(grid)
        report["final_ratios"] = [float(x) for x in run.ledger.ratios]
        io.write_shaped(run.packets, out, stochastic=True)
        io.write_ledger_history(run.ledger_history, out.with_name(out.stem + ".ledger.csv"))
        if args.overshoot:
            io.write_overshoot_series([p.departure_complete for p in run.packets],
                                      run.ledger_history, args.overshoot)
    mean, std = delay_stats(run.packets)
    report["mean_delay"], report["std_delay"] = mean, std
    if args.path:
        path = output_path(run)
        io.write_sample_path(path.times, path.values, args.path)
    io.write_json(report, report_path(out))
    print(f"{args.alg}: {len(run.packets)} packets, mean delay {mean:.4f}, std {std:.4f}")
    return EXIT_OK


def _load_run(shaped_csv):
    rp = report_path(shaped_csv)
    if not Path(shaped_csv).exists() or not rp.exists():
        raise FileNotFoundError(f"missing run artifacts for {shaped_csv} (need it and {rp.name})")
    report = json.loads(rp.read_text())
    packets = io.read_shaped(shaped_csv, report["capacity"])
    return report, packets


def cmd_verify(args) -> int:
    report, packets = _load_run(args.run)
    params = RegulatorParams(report["rho"], report["capacity"], report["max_length"])
    run = ShapeRun(packets, params)
    if report["algorithm"] == "det":
        bound = report["sigma"] + params.delta
        ok = check_sigma_rho(run.output_trace(), bound, params.rate)
        print(f"output (sigma+delta={bound:g}, rho={params.rate:g}) bound: {'pass' if ok else 'FAIL'}")
        return EXIT_OK if ok else EXIT_VIOLATION
    f = io.bound_function_from_spec(report["bound"])
    T_1 = report["grid"]["T"][0]
    path = output_path(run)
    end = packets[-1].departure_complete
    t_from = args.from_time if args.from_time is not None else args.from_fraction * end
    gammas = dense_gammas(T_1, f.horizon, args.gammas)
    violations = verify_bound(path, f, gammas, t_from=t_from, until=end)
    if args.log:
        np.savetxt(args.log, np.column_stack([violations[k] for k in violations.dtype.names])
                   if len(violations) else np.zeros((0, 4)),
                   delimiter=",", header="t,gamma,o,bound", comments="", fmt="%.17g")
    if len(violations):
        worst = violations[np.argmax(violations["o"] - violations["bound"])]
        print(f"{len(violations)} violations from t={t_from:g}; worst o={worst['o']:.6g} "
              f"> f={worst['bound']:.6g} at gamma={worst['gamma']:.6g}, t={worst['t']:.6g}")
        return EXIT_VIOLATION
    print(f"no violations for t >= {t_from:g} over {len(gammas)} gammas")
    return EXIT_OK


def cmd_stats(args) -> int:
    report, packets = _load_run(args.run)
    mean, std = delay_stats(packets)
    out = {"packets": len(packets), "mean_delay": mean, "std_delay": std}
    if args.ccdf:
        params = RegulatorParams(report["rho"], report["capacity"], report["max_length"])
        gammas = [float(g) for g in args.ccdf.split(",")]
        out["ccdf"] = workload_ccdf(output_path(ShapeRun(packets, params)), gammas)
    print(json.dumps(out, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stochreg", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON experiment config")
        p.add_argument("--capacity", type=float)

    def regulator(p):
        p.add_argument("--rho", type=float)
        p.add_argument("--max-length", dest="max_length", type=float,
                       help="L_max used for delta (default: largest packet, else --lmax)")
        p.add_argument("--lmax", type=int)

    def grid(p):
        p.add_argument("--bound", help="bound spec JSON (default: built-in f)")
        p.add_argument("--m", type=int, help="grid size M (default: M_max)")
        p.add_argument("--tm", type=float, help="largest threshold T_M (default 2T)")
        p.add_argument("--spacing", help="'uniform' or a fixed step")
        p.add_argument("--variant", choices=["full", "modified"])

    g = sub.add_parser("generate", help="write a synthetic trace")
    common(g)
    g.add_argument("--seed", type=int)
    g.add_argument("--n", type=int)
    g.add_argument("--lambda", dest="lam", type=float)
    g.add_argument("--lmin", type=int)
    g.add_argument("--lmax", type=int)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    b = sub.add_parser("bound", help="build and export the threshold grid")
    common(b)
    regulator(b)
    grid(b)
    b.add_argument("--out")
    b.set_defaults(func=cmd_bound)

    s = sub.add_parser("shape", help="shape a trace")
    common(s)
    regulator(s)
    grid(s)
    s.add_argument("--trace", required=True)
    s.add_argument("--alg", choices=("det",) + ALGORITHMS)
    s.add_argument("--sigma", type=float, help="burst for --alg det")
    s.add_argument("--out", required=True, help="shaped CSV")
    s.add_argument("--path", help="also write the output sample path CSV")
    s.add_argument("--overshoot", help="also write the overshoot time series CSV")
    s.set_defaults(func=cmd_shape)

    v = sub.add_parser("verify", help="check a shaped run against its bound")
    v.add_argument("--run", required=True, help="shaped CSV written by 'shape'")
    grp = v.add_mutually_exclusive_group()
    grp.add_argument("--from", dest="from_time", type=float)
    grp.add_argument("--from-fraction", dest="from_fraction", type=float, default=0.0)
    v.add_argument("--gammas", type=int, default=256)
    v.add_argument("--log", help="violation log CSV")
    v.set_defaults(func=cmd_verify)

    st = sub.add_parser("stats", help="delay statistics of a shaped run")
    st.add_argument("--run", required=True)
    st.add_argument("--ccdf", help="comma-separated gamma levels")
    st.set_defaults(func=cmd_stats)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        args = _merge(args)
        return args.func(args)
    except ConfigError as exc:
        print(f"infeasible configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (UsageError, TraceError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
