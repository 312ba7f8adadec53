"""Command-line front end.

Subcommands:
  classify   print the regime label and thresholds for a parameter tuple
  constants  print the sharp-constant estimates for an exponent
  fiber      sample the fiber-map curves to CSV (t, g, dg, ddg, phi)
  sweep      classify an (a, c) lattice to CSV (a, c, tag)
  solve      run the regime-appropriate solver; writes solution.lpf,
             report.json and optionally trace.csv
  verify     run the invariant suite; JSON report, nonzero exit on failure

Configuration comes from an optional JSON file (--config) overridden by
flags; every report embeds the full configuration and the constants used,
so results are reproducible from the report alone.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 non-convergence (report still written), 4 regime refusal.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import constants as K
from .checks import run_all_checks
from .errors import ConfigError, ConvergenceError, PlanarSPError, RegimeError
from .fiber import critical_points, dg, ddg, g, phi, scalars
from .functionals import Params
from .grid import Grid, ProfileSpec, discretize, make_grid, write_field
from .solvers import (SolverConfig, global_minimize, lambda_branch_minimize,
                      lambda_maximize, local_minimize_capped)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_CONFIG = 2
EXIT_NO_CONVERGENCE = 3
EXIT_REGIME = 4


def _load_config(path: Optional[str]) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config file must contain a JSON object")
    return cfg


def _merged_params(cfg: dict, args) -> Params:
    section = dict(cfg.get("params", {}))
    for key in ("gamma", "a", "p", "c"):
        val = getattr(args, key, None)
        if val is not None:
            section[key] = val
    missing = [k for k in ("gamma", "a", "p", "c") if k not in section]
    if missing:
        raise ConfigError(f"missing parameters: {', '.join(missing)}")
    try:
        return Params(gamma=float(section["gamma"]), a=float(section["a"]),
                      p=float(section["p"]), c=float(section["c"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _merged_grid(cfg: dict, args) -> Grid:
    section = dict(cfg.get("grid", {}))
    if getattr(args, "grid_L", None) is not None:
        section["L"] = args.grid_L
    if getattr(args, "grid_n", None) is not None:
        section["n"] = args.grid_n
    try:
        return make_grid(float(section.get("L", 40.0)), int(section.get("n", 256)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _merged_solver(cfg: dict, args) -> SolverConfig:
    section = dict(cfg.get("solver", {}))
    if getattr(args, "seed", None) is not None:
        section["seed"] = args.seed
    if getattr(args, "trace", False):
        section["trace"] = True
    try:
        return SolverConfig(**section)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad solver config: {exc}") from exc


def _merged_profile(cfg: dict, args, c: float) -> ProfileSpec:
    section = dict(cfg.get("profile", {}))
    kind = getattr(args, "profile", None) or section.pop("kind", "gaussian")
    if getattr(args, "sigma", None) is not None:
        section["sigma"] = args.sigma
    section.setdefault("c", c)
    section["c"] = c
    try:
        return ProfileSpec(kind=kind, **section)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad profile: {exc}") from exc


def _constants_payload(params: Optional[Params], p: float) -> dict:
    kgn = K.kgn_estimate(p)
    payload = {
        "p": p,
        "kgn": kgn,
        "kv2": K.kv2_estimate(),
        "method": "ode_shooting",
        "tolerances": {"kgn_rayleigh_slack": 1e-3, "shooting_bisections": 80},
        "k0": None,
        "c0": None,
        "K1": None,
        "K2": None,
        "mass_critical_c": None,
    }
    if 2.0 < p < 4.0:
        payload["K1"] = K.k1(p, kgn)
        payload["K2"] = K.k2(p, kgn)
    if params is not None:
        if params.p != 4.0 and params.gamma != 0.0:
            payload["k0"] = K.k0(params)
        if params.p > 4.0 and params.a > 0 and params.gamma > 0:
            payload["c0"] = K.c0(params.p, params.a, params.gamma, kgn)
        if params.p == 4.0 and params.a > 0:
            payload["mass_critical_c"] = K.mass_critical_threshold(params.a, kgn)
        if params.gamma < 0 and 2.0 < p < 4.0:
            t1, t2 = K.a_thresholds(p, params.gamma, params.c, kgn)
            payload["a_threshold_lower"] = t1
            payload["a_threshold_upper"] = t2
    return payload


def _outdir(args) -> Path:
    out = Path(getattr(args, "out", None) or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------


def cmd_classify(args) -> int:
    cfg = _load_config(args.config)
    params = _merged_params(cfg, args)
    sharp = K.sharp_constants(params.p)
    label = K.regime_classify(params, sharp)
    payload = {
        "tag": label.tag,
        "certificate": label.certificate,
        "thresholds": _constants_payload(params, params.p),
    }
    print(json.dumps(payload, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_constants(args) -> int:
    cfg = _load_config(args.config)
    p = args.p if args.p is not None else cfg.get("params", {}).get("p")
    if p is None:
        raise ConfigError("constants requires an exponent p")
    p = float(p)
    if p <= 2:
        raise ConfigError(f"exponent p must exceed 2, got {p}")
    params = None
    try:
        params = _merged_params(cfg, args)
    except ConfigError:
        pass  # partial parameter sets are fine for the constants command
    print(json.dumps(_constants_payload(params, p), indent=2, sort_keys=True))
    return EXIT_OK


def cmd_fiber(args) -> int:
    cfg = _load_config(args.config)
    params = _merged_params(cfg, args)
    grid = _merged_grid(cfg, args)
    spec = _merged_profile(cfg, args, params.c)
    u = discretize(spec, grid)
    sc = scalars(u, params)
    points = [] if params.p == 4.0 else critical_points(sc)
    if points:
        t_lo = points[0].s / 10.0
        t_hi = 10.0 * points[-1].s
    else:
        t_lo, t_hi = 1e-2, 1e2
    if args.t_min is not None:
        t_lo = args.t_min
    if args.t_max is not None:
        t_hi = args.t_max
    if not (0 < t_lo < t_hi):
        raise ConfigError(f"bad t range [{t_lo}, {t_hi}]")
    ts = np.logspace(np.log10(t_lo), np.log10(t_hi), 400)
    out = _outdir(args) / "fiber.csv"
    with open(out, "w", encoding="utf-8") as fh:
        fh.write("t,g,dg,ddg,phi\n")
        for t in ts:
            t = float(t)
            fh.write(f"{t:.12g},{g(sc, t):.12g},{dg(sc, t):.12g},"
                     f"{ddg(sc, t):.12g},{phi(sc, t):.12g}\n")
    print(f"wrote {out} ({len(ts)} samples, scalars A={sc.A:.6g} "
          f"C={sc.C:.6g} V={sc.V:.6g})")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load_config(args.config)
    section = dict(cfg.get("params", {}))
    gamma = args.gamma if args.gamma is not None else section.get("gamma")
    p = args.p if args.p is not None else section.get("p")
    if gamma is None or p is None:
        raise ConfigError("sweep requires gamma and p")
    gamma, p = float(gamma), float(p)
    if p <= 2:
        raise ConfigError(f"exponent p must exceed 2, got {p}")
    if args.a_min <= 0 and gamma < 0:
        raise ConfigError("sweep over a requires positive couplings for gamma < 0")
    if not (args.a_min < args.a_max and args.c_min < args.c_max):
        raise ConfigError("sweep lattice bounds must be increasing")
    if args.c_min <= 0:
        raise ConfigError("sweep masses must be positive")
    sharp = K.sharp_constants(p)
    a_vals = np.linspace(args.a_min, args.a_max, args.na)
    c_vals = np.linspace(args.c_min, args.c_max, args.nc)
    out = _outdir(args) / "sweep.csv"
    with open(out, "w", encoding="utf-8") as fh:
        fh.write("a,c,tag\n")
        for a in a_vals:
            for c in c_vals:
                label = K.regime_classify(
                    Params(gamma=gamma, a=float(a), p=p, c=float(c)), sharp)
                fh.write(f"{a:.12g},{c:.12g},{label.tag}\n")
    print(f"wrote {out} ({args.na}x{args.nc} lattice at p={p}, gamma={gamma})")
    return EXIT_OK


def cmd_solve(args) -> int:
    cfg = _load_config(args.config)
    params = _merged_params(cfg, args)
    grid = _merged_grid(cfg, args)
    solver_cfg = _merged_solver(cfg, args)
    sharp = K.sharp_constants(params.p)
    label = K.regime_classify(params, sharp)
    out = _outdir(args)

    def run():
        if label.tag in ("GlobalMin", "GlobalMinMassCritical"):
            init = _merged_profile(cfg, args, params.c)
            return global_minimize(params, grid, solver_cfg, init)
        if label.tag == "LocalMinPlusMountainPass":
            init = _merged_profile(cfg, args, params.c)
            if args.branch in ("plus", "minus"):
                return lambda_branch_minimize(params, grid, solver_cfg, init,
                                              args.branch)
            return local_minimize_capped(params, grid, solver_cfg, init)
        if label.tag == "TwoCriticalPointsOnLambda":
            init = K.gn_profile_field(grid, params.p, params.c)
            branch = args.branch if args.branch in ("plus", "minus") else "minus"
            return lambda_maximize(params, grid, solver_cfg, init, branch)
        if label.tag == "MaxOnLambda":
            init = K.gn_profile_field(grid, params.p, params.c)
            return lambda_maximize(params, grid, solver_cfg, init)
        raise RegimeError(
            f"no solver applies: regime {label.tag}; "
            f"{'; '.join(label.certificate['conditions'])}"
        )

    def write_outputs(report, exit_code):
        write_field(report.field, out / "solution.lpf")
        payload = report.summary()
        payload["config"] = {
            "params": {"gamma": params.gamma, "a": params.a,
                       "p": params.p, "c": params.c},
            "grid": {"L": grid.extent, "n": grid.n},
            "solver": {
                "tol_grad": solver_cfg.tol_grad, "tol_Q": solver_cfg.tol_Q,
                "max_iter": solver_cfg.max_iter, "seed": solver_cfg.seed,
                "backtrack": solver_cfg.backtrack, "armijo": solver_cfg.armijo,
            },
        }
        payload["constants"] = _constants_payload(params, params.p)
        with open(out / "report.json", "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
        if solver_cfg.trace and report.trace:
            with open(out / "trace.csv", "w", encoding="utf-8") as fh:
                fh.write("iter,F,Q,grad_res,A,C,V\n")
                for row in report.trace:
                    fh.write(f"{row.iter},{row.F:.12g},{row.Q:.12g},"
                             f"{row.grad_res:.12g},{row.A:.12g},"
                             f"{row.C:.12g},{row.V:.12g}\n")
        print(f"wrote {out / 'report.json'} (converged={report.converged}, "
              f"F={report.objective:.8g})")
        return exit_code

    try:
        report = run()
    except ConvergenceError as exc:
        if exc.report is not None:
            write_outputs(exc.report, EXIT_NO_CONVERGENCE)
        print(f"solver did not converge: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    return write_outputs(report, EXIT_OK if report.converged
                         else EXIT_NO_CONVERGENCE)


def cmd_verify(args) -> int:
    results = run_all_checks()
    payload = {
        "checks": [r.as_dict() for r in results],
        "all_passed": all(r.passed for r in results),
    }
    print(json.dumps(payload, indent=2, sort_keys=True))
    return EXIT_OK if payload["all_passed"] else EXIT_VERIFY_FAILED


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_common(sub, params=True, grid=False, output=False):
    sub.add_argument("--config", help="JSON config file")
    if params:
        sub.add_argument("--gamma", type=float, help="interaction sign/strength")
        sub.add_argument("--a", type=float, help="local nonlinearity coupling")
        sub.add_argument("--p", type=float, help="nonlinearity exponent (> 2)")
        sub.add_argument("--c", type=float, help="prescribed mass (> 0)")
    if grid:
        sub.add_argument("--grid-L", type=float, help="domain extent")
        sub.add_argument("--grid-n", type=int, help="nodes per side (power of two)")
    if output:
        sub.add_argument("--out", help="output directory (default: cwd)")
        sub.add_argument("--seed", type=int, help="record/propagate RNG seed")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="planarsp",
        description="Normalized solutions of the planar Schrodinger-Poisson "
                    "equation with logarithmic kernel.",
    )
    subs = ap.add_subparsers(dest="command", required=True)

    s = subs.add_parser("classify", help="regime classification")
    _add_common(s)
    s.set_defaults(handler=cmd_classify)

    s = subs.add_parser("constants", help="sharp constants and thresholds")
    _add_common(s)
    s.set_defaults(handler=cmd_constants)

    s = subs.add_parser("fiber", help="fiber-map curves to CSV")
    _add_common(s, grid=True, output=True)
    s.add_argument("--profile", choices=["gaussian", "ring", "two_bump",
                                         "random_smooth"], help="profile kind")
    s.add_argument("--sigma", type=float, help="profile width")
    s.add_argument("--t-min", type=float, help="lower end of the t range")
    s.add_argument("--t-max", type=float, help="upper end of the t range")
    s.set_defaults(handler=cmd_fiber)

    s = subs.add_parser("sweep", help="regime map over an (a, c) lattice")
    _add_common(s, output=True)
    s.add_argument("--a-min", type=float, required=True)
    s.add_argument("--a-max", type=float, required=True)
    s.add_argument("--na", type=int, default=20)
    s.add_argument("--c-min", type=float, required=True)
    s.add_argument("--c-max", type=float, required=True)
    s.add_argument("--nc", type=int, default=20)
    s.set_defaults(handler=cmd_sweep)

    s = subs.add_parser("solve", help="run the regime-appropriate solver")
    _add_common(s, grid=True, output=True)
    s.add_argument("--branch", choices=["plus", "minus", "auto"], default="auto",
                   help="fiber branch for two-solution regimes")
    s.add_argument("--profile", choices=["gaussian", "ring", "two_bump",
                                         "random_smooth"], help="init profile")
    s.add_argument("--sigma", type=float, help="init width")
    s.add_argument("--trace", action="store_true",
                   help="write per-iteration trace.csv")
    s.set_defaults(handler=cmd_solve)

    s = subs.add_parser("verify", help="run the invariant suite")
    _add_common(s, params=False)
    s.set_defaults(handler=cmd_verify)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RegimeError as exc:
        print(f"regime refusal: {exc}", file=sys.stderr)
        return EXIT_REGIME
    except PlanarSPError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
