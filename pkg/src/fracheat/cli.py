"""Command-line entry point: ``fracheat <subcommand> [options]``.

Every option can also come from an INI config (``--config``) whose
sections mirror the option groups below; flags override the config.
Unknown sections or keys are errors.  Each run writes ``manifest.ini``
(the fully resolved config, usable again as ``--config``) to the output
directory, which defaults to ``$FRACHEAT_OUTPUT_DIR`` or ``./fracheat_out``.

Exit codes: 0 success, 1 invalid input, 2 numerical failure (inconclusive
solve, failed regression verdict, sweep error).
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DomainError, EvaluationError, FracHeatError, RegressionError, SweepError

OUTPUT_ENV = "FRACHEAT_OUTPUT_DIR"


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# option tables: section -> key -> (type, default, help with unit and range)
PROBLEM = {
    "N": (int, 1, "space dimension; 1, 2 or 3"),
    "p": (float, 2.0, "nonlinearity exponent; p > 1"),
    "alpha": (float, 0.5, "order of the time derivative; 0 < alpha <= 1"),
    "T": (float, 1.0, "time horizon in time units; T > 0"),
}
DATUM = {
    "family": (str, "dirac_approx", "datum family: dirac_approx, log_singular, power_law, decaying, constant"),
    "j": (float, None, "dirac_approx concentration; j > 0 (support radius (j omega_N)^(-1/N))"),
    "kappa": (float, None, "amplitude multiplier; kappa > 0"),
    "eps": (float, None, "log_singular exponent shift; 0 < eps < N/2"),
    "shift": (float, None, "log_singular log shift; real, default 0"),
    "A": (float, None, "decaying power; A > 0"),
    "scale": (float, None, "decaying length scale in length units; > 0"),
    "c": (float, None, "constant value; c >= 0"),
    "p": (float, None, "power_law self-similar exponent; p > 1 (flag --datum-p)"),
}
GRID = {
    "half_width": (float, 16.0, "box half-width L in length units; L > 0"),
    "points_per_axis": (int, 1024, "grid points per axis; power of two >= 8"),
    "symbol": (str, "difference", "Laplacian symbol: difference or spectral"),
}
SOLVER = {
    "time_steps": (int, 256, "time steps per unit horizon; >= 16"),
    "picard_tol": (float, 1e-10, "fixed-point tolerance (relative sup-norm); > 0"),
    "picard_max_iters": (int, 200, "fixed-point iteration cap; >= 1"),
    "blowup_threshold": (float, 1e8, "sup-norm blow-up threshold; > 10 x initial sup"),
    "kernel_rule": (str, "product_rectangle", "product_rectangle, product_rectangle_implicit or product_trapezoid"),
    "snapshots": (int, 16, "number of stored trajectory snapshots; >= 1"),
}
SOLVE = {"rescale": (_bool, True, "solve the equivalent problem on the unit horizon; true/false")}
SEARCH = {
    "bisection_budget": (int, 16, "maximum number of probes; >= 8"),
    "T_guess": (float, 1.0, "first horizon probed, time units; > 0"),
    "T_max": (float, math.inf, "largest horizon probed, time units; > 0 (inf allowed)"),
    "rel_width": (float, 1e-3, "target relative bracket width; > 0"),
}
CHECK = {
    "sigma_points": (int, 64, "radii in the sweep; >= 32"),
    "r": (float, None, "L^r exponent for p above Fujita; 1 < r < N(p-1)/2 (default midpoint)"),
    "c_star": (float, 0.25, "sufficient-side constant c_*; > 0"),
}
SPECFUN = {
    "alpha": (float, 0.5, "order; 0 < alpha <= 1 (ml allows alpha > 0)"),
    "beta": (float, 1.0, "second Mittag-Leffler parameter; beta > 0"),
    "z": (float, -1.0, "Mittag-Leffler argument; real"),
    "theta": (float, 1.0, "Mainardi density argument; theta >= 0"),
    "delta": (float, 1.0, "moment order; delta > -1"),
    "x": (float, 1.0, "Gamma argument (Beta first argument); x > 0"),
    "y": (float, None, "Beta second argument; y > 0 (omit for Gamma)"),
}
SWEEP = {
    "experiment": (str, "dirac_lifespan", "dirac_lifespan, psi_j_threshold, feps_collapse, global_collapse, decaying_lifespan, custom"),
    "spec": (str, None, "sweep spec INI path (required for custom)"),
    "set": (str, "", "overrides as section.key=value, comma separated"),
}
CALIBRATE = {"out": (str, None, "constants file to write; default the packaged file")}

SECTIONS = {
    "specfun": {"specfun": SPECFUN},
    "solve": {"problem": PROBLEM, "datum": DATUM, "grid": GRID, "solver": SOLVER, "solve": SOLVE},
    "check": {"problem": PROBLEM, "datum": DATUM, "check": CHECK},
    "lifespan": {"problem": PROBLEM, "datum": DATUM, "grid": GRID, "solver": SOLVER, "search": SEARCH},
    "sweep": {"sweep": SWEEP},
    "calibrate": {"calibrate": CALIBRATE},
}
SPECFUN_WHAT = ("ml", "mainardi", "moment", "gamma")


def _flag(section: str, key: str) -> str:
    if section == "datum" and key == "p":
        return "--datum-p"
    return "--" + key.replace("_", "-")


def _dest(section: str, key: str) -> str:
    return f"{section}__{key}"


class _Parser(argparse.ArgumentParser):
    """Usage errors are validation errors: exit status 1, not argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    top = _Parser(
        prog="fracheat",
        description="Time-fractional semilinear heat equation: special functions, solver, "
        "solvability criteria, lifespans and scaling sweeps.",
    )
    top.add_argument("--version", action="version", version=f"fracheat {__version__}")
    common = _Parser(add_help=False)
    common.add_argument("--config", help="INI file with the same sections as the option groups")
    common.add_argument("--output-dir", help=f"directory for all outputs (env {OUTPUT_ENV}, default ./fracheat_out)")
    common.add_argument("--workers", type=int, default=None, help="worker processes; >= 1 (default: CPU count)")
    common.add_argument("--json", action="store_true", help="also print machine-readable JSON")
    sub = top.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    helps = {
        "specfun": "evaluate E_{alpha,beta}, the Mainardi density, its moments or Gamma/Beta",
        "solve": "solve on [0, T] by product integration and report the outcome",
        "check": "evaluate the necessary and sufficient solvability conditions",
        "lifespan": "bracket the lifespan by bisection on the horizon",
        "sweep": "run a predefined or custom sweep and fit its scaling law",
        "calibrate": "recompute the necessary-side constants from the frozen suite",
    }
    for name, sections in SECTIONS.items():
        sp = sub.add_parser(name, parents=[common], help=helps[name], description=helps[name])
        if name == "specfun":
            sp.add_argument("what", choices=SPECFUN_WHAT, help="quantity to evaluate")
        for section, table in sections.items():
            grp = sp.add_argument_group(f"[{section}]")
            for key, (typ, default, text) in table.items():
                shown = "unset" if default is None else default
                grp.add_argument(_flag(section, key), dest=_dest(section, key), default=None,
                                 metavar=key.upper(), help=f"{text} (default {shown})")
    return top


def resolve(args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then flags.  Raises DomainError on unknown keys."""
    sections = SECTIONS[args.subcommand]
    conf = {s: {k: v[1] for k, v in t.items()} for s, t in sections.items()}
    if args.config:
        cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
        cp.optionxform = str
        path = Path(args.config)
        if not path.exists():
            raise DomainError(f"config file {path} not found")
        cp.read_string(path.read_text())
        for sec in cp.sections():
            if sec == "run":
                for key, val in cp[sec].items():
                    if key != "subcommand":
                        raise DomainError(f"unknown key run.{key} in {path}")
                    if val != args.subcommand:
                        raise DomainError(f"config is for subcommand {val!r}, not {args.subcommand!r}")
                continue
            if sec not in sections:
                raise DomainError(f"unknown section [{sec}] in {path} for {args.subcommand}")
            for key, val in cp[sec].items():
                if key not in sections[sec]:
                    raise DomainError(f"unknown key {sec}.{key} in {path}")
                conf[sec][key] = val
    for sec, table in sections.items():
        for key in table:
            val = getattr(args, _dest(sec, key))
            if val is not None:
                conf[sec][key] = val
    # type conversion, naming the offending key on failure
    for sec, table in sections.items():
        for key, (typ, _default, _text) in table.items():
            val = conf[sec][key]
            if val is None or val == "" and typ is not str:
                conf[sec][key] = None if val in (None, "") else val
                continue
            try:
                conf[sec][key] = typ(val)
            except (TypeError, ValueError):
                raise DomainError(f"bad value for {sec}.{key}: {val!r}") from None
    return conf


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_manifest(out_dir: Path, subcommand: str, conf: dict, extra: dict | None = None) -> Path:
    from .criteria import load_constants

    consts = load_constants()
    cp = configparser.ConfigParser()
    cp.optionxform = str
    cp["run"] = {"subcommand": subcommand}
    for sec, vals in conf.items():
        cp[sec] = {k: _fmt(v) for k, v in vals.items() if v is not None}
    path = out_dir / "manifest.ini"
    with path.open("w") as fh:
        fh.write(f"# fracheat {__version__}; constants format_version={consts.version} "
                 f"calibrated={consts.calibrated} suite={consts.suite}\n")
        for k, v in (extra or {}).items():
            fh.write(f"# {k}={v}\n")
        cp.write(fh)
    return path


def _datum(conf: dict):
    from .datum import make_datum

    params = {k: v for k, v in conf["datum"].items() if k != "family" and v is not None}
    return make_datum(conf["datum"]["family"], **params)


def _params(conf: dict):
    from .datum import ProblemParams

    pr = conf["problem"]
    return ProblemParams(pr["N"], pr["p"], pr["alpha"])


def _grid(conf: dict, dim: int):
    from .propagator import Grid

    g = conf["grid"]
    return Grid(dim, g["half_width"], g["points_per_axis"], g["symbol"])


def _solver(conf: dict):
    from .solver import SolverConfig

    return SolverConfig(**conf["solver"])


def _emit(text: str) -> None:
    print(text)


def _write_json(path: Path, obj) -> Path:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2, default=_jsonable) + "\n")
    return path


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    return str(v)


# ---------------------------------------------------------------------------
# subcommands


def cmd_specfun(args, conf, out_dir) -> int:
    from . import specfun

    c = conf["specfun"]
    if args.what == "ml":
        val = float(specfun.mittag_leffler(c["alpha"], c["beta"], c["z"]))
    elif args.what == "mainardi":
        val = float(specfun.mainardi_density(c["alpha"], c["theta"]))
    elif args.what == "moment":
        val = float(specfun.halpha_moment(c["alpha"], c["delta"]))
    elif c["y"] is None:
        val = math.gamma(c["x"])
    else:
        val = float(specfun.gamma_beta(c["x"], c["y"]))
    _emit(repr(val))
    _write_json(out_dir / "specfun.json", {"what": args.what, "value": val, **c})
    return 0


def cmd_solve(args, conf, out_dir) -> int:
    from .criteria import rescale_problem
    from .experiments import field_to_csv
    from .solver import picard_solve

    params, d = _params(conf), _datum(conf)
    grid, cfg = _grid(conf, params.dim), _solver(conf)
    T = conf["problem"]["T"]
    if conf["solve"]["rescale"]:
        dd, horizon = rescale_problem(d, params, T)
        scale = T
    else:
        dd, horizon, scale = d, T, 1.0
    out = picard_solve(dd, params, horizon, grid, cfg)
    summary = out.summary()
    summary["time_scale"] = scale
    if out.blowup_bracket:
        summary["blowup_bracket_original"] = [b * scale for b in out.blowup_bracket]
    path = _write_json(out_dir / "solve.json", summary)
    t_last, f_last = out.trajectory[-1]
    (out_dir / "solve_last_snapshot.csv").write_text(field_to_csv(f_last, t_last))
    _emit(f"status {out.status}")
    if out.blowup_bracket:
        a, b = summary["blowup_bracket_original"]
        _emit(f"blowup_bracket [{a:.6g}, {b:.6g}]")
    _emit(f"max_sup {summary['max_sup']:.6g}")
    if args.json:
        _emit(json.dumps(summary, sort_keys=True, default=_jsonable))
    if out.status == "inconclusive":
        print(f"inconclusive solve; diagnostics in {path}", file=sys.stderr)
        return 2
    return 0


def cmd_check(args, conf, out_dir) -> int:
    from .criteria import necessary_condition, sufficient_condition

    params, d = _params(conf), _datum(conf)
    T = conf["problem"]["T"]
    c = conf["check"]
    nec = necessary_condition(d, params, T, sigma_points=c["sigma_points"])
    kw = {"r": c["r"]} if c["r"] is not None else {}
    suf = sufficient_condition(d, params, T, c_star=c["c_star"], sigma_points=c["sigma_points"], **kw)
    text = nec.format() + "\n\n" + suf.format()
    _emit(text)
    (out_dir / "check.txt").write_text(text + "\n")
    payload = {"necessary": nec.to_dict(), "sufficient": suf.to_dict()}
    _write_json(out_dir / "check.json", payload)
    if args.json:
        _emit(json.dumps(payload, sort_keys=True, default=_jsonable))
    return 0


def cmd_lifespan(args, conf, out_dir) -> int:
    from .solver import lifespan_estimate

    params, d = _params(conf), _datum(conf)
    grid, cfg = _grid(conf, params.dim), _solver(conf)
    s = conf["search"]
    res = lifespan_estimate(d, params, grid, cfg, bisection_budget=s["bisection_budget"], T_guess=s["T_guess"],
                            T_max=s["T_max"], rel_width=s["rel_width"])
    payload = {
        "status": res.status,
        "t_low": res.t_low,
        "t_high": res.t_high,
        "t_mid": res.t_mid,
        "log_t_low": res.log_low,
        "log_t_high": res.log_high,
        "iterations": res.iterations,
        "probes": res.probes,
    }
    path = _write_json(out_dir / "lifespan.json", payload)
    _emit(f"status {res.status}")
    _emit(f"t_low {res.t_low:.6g}  t_high {res.t_high:.6g}  (log: {res.log_low:.6g}, {res.log_high:.6g})")
    if args.json:
        _emit(json.dumps(payload, sort_keys=True, default=_jsonable))
    if res.status == "upper_only":
        print(f"no lower bound found; diagnostics in {path}", file=sys.stderr)
        return 2
    return 0


def _parse_sets(text: str) -> dict:
    out = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        key, eq, val = item.partition("=")
        if not eq:
            raise DomainError(f"override {item!r} is not section.key=value")
        out[key.strip()] = val.strip()
    return out


def cmd_sweep(args, conf, out_dir, workers) -> int:
    from .experiments import fit_sweep, load_spec, predefined_spec, run_sweep, write_outputs

    s = conf["sweep"]
    if s["spec"]:
        spec = load_spec(Path(s["spec"]))
    elif s["experiment"] == "custom":
        raise DomainError("sweep.spec is required for the custom experiment")
    else:
        spec = predefined_spec(s["experiment"])
    overrides = _parse_sets(s["set"] or "")
    if overrides:
        spec = spec.with_overrides(overrides)
    result = run_sweep(spec, workers)
    report = None
    try:
        report = fit_sweep(result) if spec.fit else None
    except RegressionError as exc:
        paths = write_outputs(result, None, out_dir)
        print(f"regression failed: {exc}; table in {paths['csv']}", file=sys.stderr)
        return 2
    paths = write_outputs(result, report, out_dir)
    _emit(result.to_csv().rstrip())
    if report is not None:
        _emit(report.to_json())
        _emit(f"verdict {'pass' if report.within_tolerance else 'fail'}")
        if not report.within_tolerance:
            print(f"scaling verdict failed; see {paths['json']}", file=sys.stderr)
            return 2
    return 0


def cmd_calibrate(args, conf, out_dir, workers) -> int:
    from .criteria import calibrate

    consts = calibrate(out_path=conf["calibrate"]["out"], workers=workers)
    lines = [f"{k} {v!r}" for k, v in sorted(consts.values.items())]
    (out_dir / "constants_summary.txt").write_text("\n".join(lines) + "\n")
    _emit("\n".join(lines))
    return 0


def parse_and_run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        conf = resolve(args)
        out_dir = Path(args.output_dir or os.environ.get(OUTPUT_ENV) or "fracheat_out")
        out_dir.mkdir(parents=True, exist_ok=True)
        workers = args.workers if args.workers is not None else (os.cpu_count() or 1)
        if workers < 1:
            raise DomainError(f"--workers must be >= 1, got {workers}")
        extra = {"specfun_what": args.what} if args.subcommand == "specfun" else None
        write_manifest(out_dir, args.subcommand, conf, extra)
        if args.subcommand == "specfun":
            return cmd_specfun(args, conf, out_dir)
        if args.subcommand == "solve":
            return cmd_solve(args, conf, out_dir)
        if args.subcommand == "check":
            return cmd_check(args, conf, out_dir)
        if args.subcommand == "lifespan":
            return cmd_lifespan(args, conf, out_dir)
        if args.subcommand == "sweep":
            return cmd_sweep(args, conf, out_dir, workers)
        return cmd_calibrate(args, conf, out_dir, workers)
    except (DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (EvaluationError, SweepError, RegressionError, FracHeatError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(parse_and_run())


if __name__ == "__main__":
    main()
