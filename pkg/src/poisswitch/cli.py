"""Command line front end.

Usage::

    poisswitch validate --preset P1
    poisswitch solve    --config run.yaml --out results/
    poisswitch classify --preset P3
    poisswitch verify   --preset P5
    poisswitch simulate --preset P4 --n-paths 100000
    poisswitch sweep    --preset-base P1 --param g21 --from -1.3 --to 0.3 --steps 9

Config files are flat YAML mappings. Model keys:

    drift, sigma, a1, lambda     GBM drift and volatility, discount, arrival rate
    g12, g21                     switching costs (1 -> 2 and 2 -> 1)
    profit1, profit2             zero | linear(c) | saturating(c,k) | piecewise(x:y,...)
    x0, regime0                  initial state and regime (defaults 1.0 and 1)

Optional numerics keys: x_min, x_max, n_nodes, tol, max_iter, n_paths, seed,
t_max, dt. Command line flags and ``--set key=value`` override the file.
Presets are searched in ``$POISSWITCH_PRESET_DIR`` and then the bundled set.

Exit codes: 0 success, 1 config or validation error, 2 solver
non-convergence, 3 verification mismatch, 4 I/O error.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np
import yaml

from . import config as cfgmod
from . import output, plotting
from .model import ModelSpec, ValidationError, check, f_limit, normalize, validate
from .odesolver import (GridError, NonConvergenceError, SolverError, ValueSolution,
                        build_grid, check_bounds, interpolate,
                        solve_penalized_system)
from .oracle import OracleError, compare, value_iteration
from .regions import (CASE_DESCRIPTION, ClassificationError, RegionReport, classify,
                      g_at_zero, verify as verify_regions)
from .simulate import BudgetError, PathConfig, policy_tournament

log = logging.getLogger("poisswitch")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_MISMATCH, EXIT_IO = 0, 1, 2, 3, 4

ORACLE_TOL = 2e-3
BOUNDARY_TOL = 1e-2
SWEEP_PARAMS = ("drift", "sigma", "a1", "lambda", "g12", "g21", "x0")


# -- configuration ----------------------------------------------------------

def _override_value(text: str):
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError:
        return text


def _formats(text: str) -> tuple[str, ...]:
    fmts = tuple(f.strip().lower() for f in text.split(",") if f.strip())
    bad = set(fmts) - {"csv", "json", "svg"}
    if bad:
        raise argparse.ArgumentTypeError(f"unknown formats: {', '.join(sorted(bad))}")
    return fmts


def resolve_config(args) -> cfgmod.RunConfig:
    overrides = {}
    for item in args.set or ():
        if "=" not in item:
            raise cfgmod.ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        overrides[k.strip()] = _override_value(v)
    for key in ("x_min", "x_max", "n_nodes", "tol", "max_iter", "n_paths", "seed", "t_max", "dt"):
        val = getattr(args, key, None)
        if val is not None:
            overrides[key] = val
    preset = getattr(args, "preset", None) or getattr(args, "preset_base", None)
    if args.config is None and preset is None:
        raise cfgmod.ConfigError("give --config FILE or --preset NAME")
    if args.config is not None and preset is not None:
        raise cfgmod.ConfigError("--config and --preset are mutually exclusive")
    cfg = cfgmod.load_config(path=args.config, preset=preset, overrides=overrides)
    return cfg.replace(out_dir=Path(args.out), formats=args.formats)


def _out_dir(cfg: cfgmod.RunConfig) -> Path:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    return cfg.out_dir


def _stem(cfg: cfgmod.RunConfig) -> str:
    return Path(cfg.source).stem if cfg.source else "run"


# -- pipeline pieces, shared with the tests ---------------------------------

def prepare(cfg: cfgmod.RunConfig, allow_nonintegrable: bool = False):
    """Validate and normalize; returns (model, offsets, warnings)."""
    model, offsets = normalize(cfg.model)
    vm = validate(model, allow_nonintegrable=allow_nonintegrable)
    return model, offsets, [w.message for w in vm.warnings]


def solve(model: ModelSpec, cfg: cfgmod.RunConfig) -> tuple[ValueSolution, RegionReport]:
    grid = build_grid(model, cfg.x_min, cfg.x_max, cfg.n_nodes)
    sol = solve_penalized_system(model, grid, tol=cfg.tol, max_iter=cfg.max_iter)
    return sol, verify_regions(model, sol)


def _shift(sol: ValueSolution, offsets) -> ValueSolution:
    if offsets == (0.0, 0.0):
        return sol
    return ValueSolution(sol.grid, sol.v1 + offsets[0], sol.v2 + offsets[1], sol.iterations,
                         sol.residual_sup, sol.active1, sol.active2, sol.method, sol.history)


def solve_summary(model: ModelSpec, sol: ValueSolution, report: RegionReport, offsets) -> dict:
    return {
        "model": model.as_dict(),
        "offsets": list(offsets),
        "F_inf": f_limit(model),
        "grid": {"x_min": sol.grid.x_min, "x_max": sol.grid.x_max, "n": sol.grid.n},
        "iterations": sol.iterations,
        "residual_sup": sol.residual_sup,
        "active_counts": [int(sol.active1.sum()), int(sol.active2.sum())],
        "regions": report.summary(),
    }


def verify_checks(model: ModelSpec, sol: ValueSolution, report: RegionReport,
                  oracle_tol: float = ORACLE_TOL, boundary_tol: float = BOUNDARY_TOL) -> dict:
    """Oracle agreement, region structure, bounds, boundary values and
    monotonicity. Each entry has ``ok`` plus the measured numbers."""
    orc = value_iteration(model, sol.grid)
    cmp = compare(sol, orc)
    bounds = check_bounds(model, sol)
    z1, z2 = g_at_zero(model)
    b_err = max(abs(report.G1[0] - z1), abs(report.G2[0] - z2))
    ratio_cap = model.lam / (model.a1 + model.lam - max(model.drift, 0.0))
    ratio = max(orc.history) if orc.history else 0.0
    return {
        "oracle": {"ok": cmp.sup_rel <= oracle_tol, "sup_abs": list(cmp.sup_abs),
                   "mean_abs": list(cmp.mean_abs), "sup_rel": cmp.sup_rel,
                   "tolerance": oracle_tol, "sweeps": orc.iterations,
                   "max_contraction": ratio, "contraction_cap": ratio_cap},
        "regions": {"ok": report.consistent, **report.summary()},
        "bounds": bounds.summary(),
        "boundary": {"ok": b_err <= boundary_tol, "G1_xmin": float(report.G1[0]),
                     "G2_xmin": float(report.G2[0]), "G1_zero": z1, "G2_zero": z2,
                     "error": b_err, "tolerance": boundary_tol},
        "monotone": {"ok": report.monotone_excess <= 0, "excess": report.monotone_excess},
        "contraction": {"ok": ratio <= ratio_cap + 1e-6, "max_ratio": ratio, "cap": ratio_cap},
    }


def sweep_rows(base: cfgmod.RunConfig, param: str, values, with_oracle: bool = False,
               allow_nonintegrable: bool = False):
    """One row per parameter value: (value, predicted, observed, x_lower1, x_upper2, note)."""
    key = "lam" if param == "lambda" else param
    rows = []
    for val in values:
        val = float(val)
        m = base.model.replace(**{key: val})
        note = ""
        try:
            model, _, _ = prepare(base.replace(model=m), allow_nonintegrable)
            pred = classify(model)
            sol, rep = solve(model, base.replace(model=model))
            obs, xl, xu = rep.case_observed, rep.x_lower1, rep.x_upper2
            if with_oracle:
                chk = verify_checks(model, sol, rep)
                if not all(c["ok"] for c in chk.values()):
                    note = "verify-failed"
            elif not rep.consistent:
                note = "inconsistent"
        except ValidationError as exc:
            pred, obs, xl, xu, note = "invalid", "invalid", math.nan, math.nan, ";".join(exc.codes)
        except ClassificationError:
            pred, obs, xl, xu, note = "unreachable", "unreachable", math.nan, math.nan, ""
        rows.append((val, pred, obs, xl, xu, note))
    return rows


# -- subcommands ------------------------------------------------------------

def cmd_validate(args) -> int:
    cfg = resolve_config(args)
    model, offsets = normalize(cfg.model)
    violations = check(model)
    errors = [v for v in violations if not (args.allow_nonintegrable and v.code == "integrability")]
    warnings = [v for v in violations if v not in errors]
    for v in errors:
        print(f"ERROR {v.code}: {v.message}")
    for v in warnings:
        print(f"WARNING {v.code}: {v.message}")
    if offsets != (0.0, 0.0):
        print(f"note: profits shifted to h(0)=0, value offsets {offsets}")
    if "json" in cfg.formats:
        output.write_json(_out_dir(cfg) / f"{_stem(cfg)}_validate.json", {
            "model": cfg.model.as_dict(), "valid": not errors,
            "errors": [vars(v) for v in errors], "warnings": [vars(v) for v in warnings]})
    if errors:
        return EXIT_CONFIG
    print("valid")
    return EXIT_OK


def cmd_classify(args) -> int:
    cfg = resolve_config(args)
    model, _, _ = prepare(cfg, args.allow_nonintegrable)
    case = classify(model)
    print(f"case {case}: {CASE_DESCRIPTION[case]}")
    print(f"a1*g12={model.a1 * model.g12:g}  a1*g21={model.a1 * model.g21:g}  F(inf)={f_limit(model):g}")
    if "json" in cfg.formats:
        output.write_json(_out_dir(cfg) / f"{_stem(cfg)}_classify.json", {
            "model": model.as_dict(), "case": case, "description": CASE_DESCRIPTION[case],
            "F_inf": f_limit(model)})
    return EXIT_OK


def _emit_solution(cfg, model, sol, report, offsets, extra=None) -> dict:
    stem = _stem(cfg)
    out = _out_dir(cfg)
    summary = solve_summary(model, sol, report, offsets)
    if extra:
        summary.update(extra)
    if "csv" in cfg.formats:
        output.write_values(out / f"{stem}_values.csv", _shift(sol, offsets), report)
    if "json" in cfg.formats:
        output.write_json(out / f"{stem}_summary.json", summary)
    if "svg" in cfg.formats:
        plotting.plot_regions(sol, report, out / f"{stem}_regions.svg", title=stem)
    return summary


def _print_regions(report: RegionReport):
    print(f"case predicted {report.case_predicted}, observed {report.case_observed}")
    print(f"x_lower1 = {report.x_lower1:.6g}   x_upper2 = {report.x_upper2:.6g}")
    for d in report.diagnostics:
        print(f"  note: {d}")


def cmd_solve(args) -> int:
    cfg = resolve_config(args)
    model, offsets, warns = prepare(cfg, args.allow_nonintegrable)
    for w in warns:
        print(f"WARNING: {w}")
    sol, report = solve(model, cfg)
    _emit_solution(cfg, model, sol, report, offsets)
    print(f"converged in {sol.iterations} iterations, residual {sol.residual_sup:.3g}")
    _print_regions(report)
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = resolve_config(args)
    model, offsets, warns = prepare(cfg, args.allow_nonintegrable)
    for w in warns:
        print(f"WARNING: {w}")
    sol, report = solve(model, cfg)
    checks = verify_checks(model, sol, report)
    _emit_solution(cfg, model, sol, report, offsets, {"checks": checks})
    _print_regions(report)
    failed = [k for k, c in checks.items() if not c["ok"]]
    for k, c in checks.items():
        print(f"{'ok  ' if c['ok'] else 'FAIL'} {k}")
    if failed:
        print(f"verification failed: {', '.join(failed)}")
        return EXIT_MISMATCH
    print(f"verified: case {report.case_predicted}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = resolve_config(args)
    model, offsets, warns = prepare(cfg, args.allow_nonintegrable)
    for w in warns:
        print(f"WARNING: {w}")
    sol, report = solve(model, cfg)
    pc = PathConfig.for_model(model, n_paths=cfg.n_paths, seed=cfg.seed, t_max=cfg.t_max, dt=cfg.dt)
    table, sim = policy_tournament(model, sol, pc, report.x_lower1, report.x_upper2)
    v = interpolate(sol, model.x0)[model.regime0 - 1] + offsets[model.regime0 - 1]
    opt = table[0]
    print(f"solved v{model.regime0}({model.x0:g}) = {v:.6g}")
    cols = ("policy", "mean", "se", "diff", "se_diff", "dominated")
    print("  ".join(f"{c:>12}" for c in cols))
    for r in table:
        print(f"{r.policy:>12}  {r.mean:12.6g}  {r.se:12.3g}  {r.diff:12.4g}  {r.se_diff:12.3g}  "
              f"{str(r.dominated):>12}")
    stem = _stem(cfg)
    if "csv" in cfg.formats:
        output.write_table(_out_dir(cfg) / f"{stem}_tournament.csv", cols,
                           [(r.policy, r.mean + offsets[model.regime0 - 1], r.se, r.diff,
                             r.se_diff, int(r.dominated)) for r in table])
    z = abs(opt.mean - (v - offsets[model.regime0 - 1])) / opt.se if opt.se > 0 else 0.0
    if "json" in cfg.formats:
        output.write_json(_out_dir(cfg) / f"{stem}_simulate.json", {
            "model": model.as_dict(), "solved_value": v, "z_score": z,
            "thresholds": [report.x_lower1, report.x_upper2], **sim.summary()})
    ok = z <= 3.0 and all(r.dominated for r in table)
    print(f"optimal vs solved: z = {z:.2f}")
    return EXIT_OK if ok else EXIT_MISMATCH


def cmd_sweep(args) -> int:
    cfg = resolve_config(args)
    if args.steps < 1:
        raise cfgmod.ConfigError("--steps must be at least 1")
    values = np.linspace(args.start, args.stop, args.steps)
    rows = sweep_rows(cfg, args.param, values, with_oracle=args.oracle,
                      allow_nonintegrable=args.allow_nonintegrable)
    cols = (args.param, "case_predicted", "case_observed", "x_lower1", "x_upper2", "note")
    print("  ".join(f"{c:>14}" for c in cols))
    for r in rows:
        print("  ".join(f"{c:>14.6g}" if isinstance(c, float) else f"{str(c):>14}" for c in r))
    stem = f"sweep_{args.param}"
    if "csv" in cfg.formats:
        output.write_table(_out_dir(cfg) / f"{stem}.csv", cols, rows)
    if "json" in cfg.formats:
        output.write_json(_out_dir(cfg) / f"{stem}.json", {
            "base": cfg.model.as_dict(), "param": args.param,
            "rows": [dict(zip(cols, r)) for r in rows]})
    if "svg" in cfg.formats:
        plotting.plot_sweep(args.param, [r[0] for r in rows], [r[3] for r in rows],
                            [r[4] for r in rows], [r[1] for r in rows],
                            _out_dir(cfg) / f"{stem}.svg", x_range=(cfg.x_min, cfg.x_max))
    bad = [r for r in rows if r[5] in ("inconsistent", "verify-failed")]
    return EXIT_MISMATCH if bad else EXIT_OK


# -- argument parsing -------------------------------------------------------

def _add_common(p: argparse.ArgumentParser, preset_flag: str = "--preset"):
    src = p.add_argument_group("model source")
    src.add_argument("--config", type=Path, help="YAML config file")
    dest = "preset_base" if preset_flag == "--preset-base" else "preset"
    src.add_argument(preset_flag, dest=dest, help="bundled or $POISSWITCH_PRESET_DIR preset name")
    src.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
    g = p.add_argument_group("grid")
    g.add_argument("--x-min", dest="x_min", type=float)
    g.add_argument("--x-max", dest="x_max", type=float)
    g.add_argument("--n-nodes", dest="n_nodes", type=int)
    g.add_argument("--tol", type=float)
    g.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--out", default=".", help="output directory (default: .)")
    p.add_argument("--formats", type=_formats, default=("csv", "json", "svg"),
                   help="comma separated subset of csv,json,svg")
    p.add_argument("--allow-nonintegrable", action="store_true",
                   help="downgrade the integrability rule to a warning")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="poisswitch", description="Two-regime switching at Poisson arrival times.",
        epilog=f"presets: {', '.join(cfgmod.list_presets())}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check the standing assumptions")
    _add_common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("solve", help="finite-difference solve, value CSV and region plot")
    _add_common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("classify", help="predicted region case only")
    _add_common(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("verify", help="solve and cross-check against the quadrature oracle")
    _add_common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="Monte Carlo policy tournament")
    _add_common(p)
    p.add_argument("--n-paths", dest="n_paths", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--t-max", dest="t_max", type=float)
    p.add_argument("--dt", type=float)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="thresholds against one parameter")
    _add_common(p, preset_flag="--preset-base")
    p.add_argument("--param", required=True, choices=SWEEP_PARAMS)
    p.add_argument("--from", dest="start", type=float, required=True)
    p.add_argument("--to", dest="stop", type=float, required=True)
    p.add_argument("--steps", type=int, default=9)
    p.add_argument("--oracle", action="store_true", help="also run the oracle checks per point")
    p.set_defaults(func=cmd_sweep)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (cfgmod.ConfigError, ValidationError, GridError, ClassificationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NonConvergenceError, OracleError, SolverError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
