"""Command line entry point: ``membrane-nlcs <subcommand> ...``.

Exit codes: 0 success, 2 usage or parameter error, 3 numeric failure,
4 truncation leak.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import scenarios as sc
from .errors import NlcsError, UsageError
from .params import DEFAULT_BETA_MAG, DEFAULT_THETA, DimensionlessParams, apply_overrides, params_from_config, read_config
from .presets import PRESETS, run_preset

log = logging.getLogger("membrane_nlcs")

SCENARIOS = ("nonlinearity", "evolve", "squeezing", "mandel", "qfunc", "catstate", "damped")


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def write_table(table: sc.Table, out_dir: Path, command: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{table.name}.csv"
    lines = [f"# membrane_nlcs {__version__}", f"# command: {command}"]
    lines += [f"# {k} = {_fmt(v)}" for k, v in table.meta.items()]
    lines.append(",".join(table.columns))
    for row in np.atleast_2d(table.data):
        lines.append(",".join("%.17g" % x for x in row))
    path.write_text("\n".join(lines) + "\n")
    if table.sidecar is not None:
        side = out_dir / f"{table.name}.peaks.json"
        side.write_text(json.dumps(table.sidecar, indent=2, sort_keys=True) + "\n")
    return path


def _add_param_flags(p):
    p.add_argument("--config", help="key=value file with a [physical] or [dimensionless] section")
    p.add_argument("--eta", type=float, help="Lamb-Dicke parameter")
    p.add_argument("--theta", type=float, help="2 L omega_m / c")
    p.add_argument("--rc", type=float, help="membrane reflectivity r_c")
    p.add_argument("--beta", type=float, help="coupling |beta| = |chi| / omega_m")


def _add_tau_flags(p, steps=200):
    p.add_argument("--tau-max", type=float, default=2 * np.pi)
    p.add_argument("--tau-steps", type=int, default=steps)


def _add_common(p):
    p.add_argument("--out", help="output directory (default $NLCS_OUT_DIR or the working directory)")
    p.add_argument("--jobs", type=int, default=None, help="worker processes for parallel sweeps")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="membrane-nlcs", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("nonlinearity", help="tabulate f(n), g(n), P(n)")
    _add_param_flags(p)
    p.add_argument("--nmax", type=int, default=50)
    p.add_argument("--j", type=int, default=1)
    _add_common(p)

    p = sub.add_parser("evolve", help="closed-form norm and exact-integration fidelity vs tau")
    _add_param_flags(p)
    _add_tau_flags(p, 50)
    p.add_argument("--field-levels", type=int, default=4)
    p.add_argument("--dim-m", type=int, default=30)
    p.add_argument("--no-oracle", action="store_true")
    _add_common(p)

    for name in ("squeezing", "mandel"):
        p = sub.add_parser(name, help=f"{name} time series of the membrane NLCS")
        _add_param_flags(p)
        _add_tau_flags(p)
        p.add_argument("--field-level", type=int, default=1)
        _add_common(p)

    p = sub.add_parser("qfunc", help="Q-function of the coherent-field superposition")
    _add_param_flags(p)
    p.add_argument("--alpha2", type=float, default=4.0)
    p.add_argument("--tau", type=float, default=2.9)
    p.add_argument("--weights", choices=("printed", "evolved"), default="printed")
    p.add_argument("--points", type=int, default=201)
    _add_common(p)

    p = sub.add_parser("catstate", help="cat-state coefficients (and optionally its Q-function)")
    _add_param_flags(p)
    p.add_argument("--zeta", type=float, required=True)
    p.add_argument("--xi", type=float, required=True)
    p.add_argument("--phi", type=float, default=None, help="linear phase (default: from the linearized f)")
    p.add_argument("--qfunc", action="store_true")
    p.add_argument("--points", type=int, default=201)
    _add_common(p)

    p = sub.add_parser("damped", help="observables with cavity damping")
    _add_param_flags(p)
    _add_tau_flags(p)
    p.add_argument("--kappa", type=float, required=True, help="damping rate in units of omega_m")
    p.add_argument("--scenario", choices=("mandel", "squeezing", "catq"), default="mandel")
    p.add_argument("--field-level", type=int, default=None)
    p.add_argument("--zeta", type=float, default=0.25)
    p.add_argument("--xi", type=float, default=1.8)
    p.add_argument("--points", type=int, default=201)
    _add_common(p)

    p = sub.add_parser("preset", help="regenerate the data of one figure panel")
    p.add_argument("figure", choices=sorted(PRESETS))
    p.add_argument("--tau-steps", type=int, default=200)
    p.add_argument("--points", type=int, default=201)
    _add_common(p)

    p = sub.add_parser("run", help="run a preset by name or a scenario from flags/config")
    p.add_argument("preset", nargs="?", default=None)
    p.add_argument("--scenario", choices=SCENARIOS)
    _add_param_flags(p)
    _add_tau_flags(p)
    p.add_argument("--kappa", type=float, default=0.0)
    p.add_argument("--points", type=int, default=201)
    _add_common(p)

    p = sub.add_parser("validate", help="run the oracle and invariant checks")
    p.add_argument("--fault-injection", action="store_true", help="perturb the f-table used by the deformed operators")
    p.add_argument("--reduced-dims", action="store_true", help="force a truncation leak")
    _add_common(p)
    return ap


def resolve_params(args) -> DimensionlessParams:
    overrides = {"eta": args.eta, "theta": args.theta, "rc": args.rc, "beta": args.beta}
    if args.config:
        return params_from_config(read_config(args.config), overrides)
    if args.eta is None:
        raise UsageError("--eta is required when no --config is given")
    return DimensionlessParams(
        eta=args.eta,
        theta=DEFAULT_THETA if args.theta is None else args.theta,
        beta_mag=DEFAULT_BETA_MAG if args.beta is None else args.beta,
        reflectivity=0.9 if args.rc is None else args.rc,
    )


def _out_dir(args) -> Path:
    return Path(args.out or os.environ.get("NLCS_OUT_DIR") or ".")


def _taus(args):
    try:
        return sc.tau_grid(args.tau_max, args.tau_steps)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _scenario_tables(name, args):
    dp = resolve_params(args)
    jobs = args.jobs or sc.default_jobs()
    if name == "nonlinearity":
        return [sc.nonlinearity_table(dp, getattr(args, "nmax", 50), getattr(args, "j", 1))]
    if name == "evolve":
        return [sc.evolve_diagnostics(dp, _taus(args), getattr(args, "field_levels", 4), getattr(args, "dim_m", 30),
                                      oracle=not getattr(args, "no_oracle", False))]
    if name == "squeezing":
        return [sc.squeezing_series(dp, _taus(args), getattr(args, "field_level", 1))]
    if name == "mandel":
        return [sc.mandel_series(dp, _taus(args), getattr(args, "field_level", 1))]
    if name == "qfunc":
        return [sc.superposition_q(dp, getattr(args, "alpha2", 4.0), getattr(args, "tau", 2.9),
                                   getattr(args, "weights", "printed"), args.points)]
    if name == "catstate":
        tables = [sc.cat_table(dp, args.zeta, args.xi, args.phi)]
        if args.qfunc:
            tables.append(sc.cat_q(dp, args.zeta, args.xi, args.phi, args.points))
        return tables
    if name == "damped":
        if args.kappa < 0:
            raise UsageError("--kappa must be >= 0")
        if args.scenario == "catq":
            return [sc.damped_cat_q(dp, args.zeta, args.xi, args.kappa, args.field_level or 6, points=args.points)]
        return [sc.damped_series(dp, _taus(args), args.kappa, args.scenario, args.field_level or 1, jobs=jobs)]
    raise UsageError(f"unknown scenario {name!r}")


def _cmd_validate(args) -> int:
    from .validate import run_checks

    results = run_checks(args.fault_injection, args.reduced_dims)
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    if not failed:
        return 0
    if any(r.name == "truncation guard" for r in failed):
        return 4
    return 3


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    command = " ".join(["membrane-nlcs", *(argv if argv is not None else sys.argv[1:])])
    try:
        if args.command == "validate":
            return _cmd_validate(args)
        if args.command == "preset":
            tables = run_preset(args.figure, args.tau_steps, args.jobs or sc.default_jobs(), args.points)
        elif args.command == "run":
            if args.preset and args.scenario:
                raise UsageError("give either a preset name or --scenario, not both")
            if args.preset:
                if args.preset not in PRESETS:
                    raise UsageError(f"unknown preset {args.preset!r}")
                tables = run_preset(args.preset, args.tau_steps, args.jobs or sc.default_jobs(), args.points)
            elif args.scenario:
                args.zeta, args.xi, args.phi, args.qfunc = 0.25, 1.8, None, False
                args.scenario_name = args.scenario
                if args.scenario == "damped":
                    args.scenario = "mandel"
                    args.field_level = None
                tables = _scenario_tables(args.scenario_name, args)
            else:
                raise UsageError("run needs a preset name or --scenario")
        else:
            tables = _scenario_tables(args.command, args)
        out = _out_dir(args)
        for t in tables:
            print(write_table(t, out, command))
        return 0
    except NlcsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
