"""Parameter sweeps of lifespans and global-existence thresholds, and slope fits.

A sweep is described by a small INI file:

    [experiment]   id, swept parameter, its values, what to measure
    [problem]      dim, p, alpha
    [datum]        family and its parameters
    [grid]         half_width, points_per_axis, symbol
    [solver]       SolverConfig fields
    [search]       bisection settings
    [fit]          regression model, abscissa transform, expected slope, tolerance

Every swept point is measured either as a lifespan bracket (bisection on
the horizon) or as a mass threshold (bisection on the amplitude ``kappa``
for no blow-up up to a fixed horizon).  Rows keep the column names
``swept_value, t_low, t_high, t_mid, status, iterations`` in both cases;
for thresholds the bracket columns hold the kappa bracket.
"""

from __future__ import annotations

import configparser
import csv
import hashlib
import io
import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .criteria import rescale_problem
from .datum import FAMILIES, ProblemParams, make_datum
from .errors import DomainError, EvaluationError, RegressionError, SweepError
from .propagator import Field, Grid
from .solver import SolverConfig, lifespan_estimate, picard_solve

__all__ = [
    "EXPERIMENT_IDS",
    "SweepSpec",
    "SweepRow",
    "SweepResult",
    "RegressionReport",
    "load_spec",
    "predefined_spec",
    "run_sweep",
    "fit_scaling",
    "fit_sweep",
    "predefined_experiment",
    "threshold_estimate",
    "expected_slope",
    "write_outputs",
    "field_to_csv",
]

EXPERIMENT_IDS = ("dirac_lifespan", "psi_j_threshold", "feps_collapse", "global_collapse", "decaying_lifespan", "custom")
MEASURES = ("lifespan", "threshold")
MODELS = ("power_law", "log_law")
ABSCISSAE = ("value", "one_minus_value", "one_minus_value_pow", "inverse_over_log")
CHECKS = ("slope", "negative_slope")
COLUMNS = ("swept_value", "t_low", "t_high", "t_mid", "status", "iterations", "log_t_mid", "probes")

SPEC_DIR = Path(__file__).resolve().parent / "data" / "experiments"


# ---------------------------------------------------------------------------
# specification


def _num(text: str):
    text = text.strip()
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        val = float(text)
    except ValueError:
        return text
    if val.is_integer() and not any(c in low for c in ".en"):
        return int(val)
    return val


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass(frozen=True)
class SweepSpec:
    experiment_id: str
    swept: str
    values: tuple
    measure: str = "lifespan"
    problem: dict = field(default_factory=dict)
    datum: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    solver: dict = field(default_factory=dict)
    search: dict = field(default_factory=dict)
    fit: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment_id not in EXPERIMENT_IDS:
            raise DomainError(f"experiment id must be one of {EXPERIMENT_IDS}, got {self.experiment_id!r}")
        if self.measure not in MEASURES:
            raise DomainError(f"measure must be one of {MEASURES}, got {self.measure!r}")
        if len(self.values) < 1:
            raise DomainError("a sweep needs at least one value")
        if self.measure == "threshold" and self.swept == "kappa":
            raise DomainError("a threshold sweep bisects kappa itself; sweep another parameter")
        family = self.datum.get("family")
        if family not in FAMILIES:
            raise DomainError(f"datum family must be one of {sorted(FAMILIES)}, got {family!r}")
        for key in ("dim", "p", "alpha"):
            if key not in self.problem:
                raise DomainError(f"problem.{key} is required")
        if self.fit:
            model = self.fit.get("model", "power_law")
            if model not in MODELS:
                raise DomainError(f"fit.model must be one of {MODELS}, got {model!r}")
            if self.fit.get("abscissa", "value") not in ABSCISSAE:
                raise DomainError(f"fit.abscissa must be one of {ABSCISSAE}")
            if self.fit.get("check", "slope") not in CHECKS:
                raise DomainError(f"fit.check must be one of {CHECKS}")
            if len(self.values) < 5:
                raise DomainError("a regression needs at least 5 swept values")
        # build everything once so bad values fail before any solve
        for v in self.values:
            self.point(v)

    def point(self, value: float) -> tuple:
        """Datum, parameters, grid and solver config for one swept value."""
        prob = dict(self.problem)
        dat = {k: v for k, v in self.datum.items() if k != "family"}
        grid = dict(self.grid)
        solver = dict(self.solver)
        if self.swept in ("alpha", "p"):
            prob[self.swept] = float(value)
        elif self.swept in dat or self.swept in _family_fields(self.datum["family"]):
            dat[self.swept] = float(value)
        elif self.swept in {f.name for f in fields(SolverConfig)}:
            solver[self.swept] = type(getattr(SolverConfig(), self.swept))(value)
        elif self.swept in ("half_width", "points_per_axis"):
            grid[self.swept] = type(grid.get(self.swept, 1))(value)
        else:
            raise DomainError(f"unknown swept parameter {self.swept!r}")
        if dat.get("p") == "@":
            dat["p"] = float(prob["p"])
        params = ProblemParams(int(prob["dim"]), float(prob["p"]), float(prob["alpha"]))
        d = make_datum(self.datum["family"], **dat)
        g = Grid(params.dim, float(grid.get("half_width", 8.0)), int(grid.get("points_per_axis", 256)),
                 grid.get("symbol", "difference"))
        try:
            cfg = SolverConfig(**solver)
        except TypeError as exc:
            raise DomainError(f"bad solver option: {exc}") from None
        return d, params, g, cfg

    def to_ini(self) -> str:
        cp = configparser.ConfigParser()
        cp.optionxform = str
        cp["experiment"] = {
            "id": self.experiment_id,
            "swept": self.swept,
            "values": " ".join(_fmt(v) for v in self.values),
            "measure": self.measure,
        }
        for name in ("problem", "datum", "grid", "solver", "search", "fit"):
            cp[name] = {k: _fmt(v) for k, v in getattr(self, name).items()}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.to_ini().encode()).hexdigest()[:12]

    def with_overrides(self, overrides: dict) -> "SweepSpec":
        """Apply ``section.key`` (or ``experiment`` key) overrides; unknown keys are errors."""
        parts = {name: dict(getattr(self, name)) for name in ("problem", "datum", "grid", "solver", "search", "fit")}
        top = {"swept": self.swept, "values": self.values, "measure": self.measure}
        for key, val in overrides.items():
            section, _, name = key.rpartition(".")
            if section in ("", "experiment"):
                if name not in top:
                    raise DomainError(f"unknown experiment key {name!r}")
                top[name] = _parse_values(val) if name == "values" and isinstance(val, str) else val
            elif section in parts:
                _check_key(section, name, parts[section])
                parts[section][name] = _num(val) if isinstance(val, str) else val
            else:
                raise DomainError(f"unknown config section {section!r}")
        return SweepSpec(self.experiment_id, top["swept"], tuple(top["values"]), top["measure"], **parts)


def _family_fields(family: str) -> set:
    return {f.name for f in fields(FAMILIES[family])}


SEARCH_KEYS = {"bisection_budget", "rel_width", "T_guess", "T_max", "horizon", "kappa_guess", "resolved_fraction"}
FIT_KEYS = {"model", "abscissa", "abscissa_power", "expected_slope", "tolerance", "check", "min_r2"}
GRID_KEYS = {"half_width", "points_per_axis", "symbol"}
PROBLEM_KEYS = {"dim", "p", "alpha"}


def _check_key(section: str, name: str, current: dict) -> None:
    allowed = {
        "problem": PROBLEM_KEYS,
        "grid": GRID_KEYS,
        "solver": {f.name for f in fields(SolverConfig)},
        "search": SEARCH_KEYS,
        "fit": FIT_KEYS,
    }.get(section)
    if section == "datum":
        family = current.get("family")
        allowed = {"family"} | (_family_fields(family) if family in FAMILIES else set())
    if name not in allowed:
        raise DomainError(f"unknown key {section}.{name}; allowed: {sorted(allowed)}")


def _parse_values(text: str) -> tuple:
    """``1 2 4 8`` or ``geomspace 1 32 6`` or ``linspace 0.5 0.9 5``."""
    parts = text.split()
    if parts and parts[0] in ("geomspace", "linspace"):
        if len(parts) != 4:
            raise DomainError(f"{parts[0]} needs start stop count, got {text!r}")
        fn = np.geomspace if parts[0] == "geomspace" else np.linspace
        return tuple(float(v) for v in fn(float(parts[1]), float(parts[2]), int(parts[3])))
    try:
        return tuple(float(v) for v in parts)
    except ValueError:
        raise DomainError(f"bad value list {text!r}") from None


def load_spec(source: str | Path) -> SweepSpec:
    """Read a sweep spec from an INI path or INI text; unknown keys are errors."""
    text = Path(source).read_text() if isinstance(source, Path) or "\n" not in str(source) else str(source)
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    cp.optionxform = str
    cp.read_string(text)
    known = {"experiment", "problem", "datum", "grid", "solver", "search", "fit"}
    extra = set(cp.sections()) - known
    if extra:
        raise DomainError(f"unknown config section(s) {sorted(extra)}")
    exp = dict(cp["experiment"]) if cp.has_section("experiment") else {}
    for key in exp:
        if key not in ("id", "swept", "values", "measure"):
            raise DomainError(f"unknown key experiment.{key}")
    for key in ("id", "swept", "values"):
        if key not in exp:
            raise DomainError(f"experiment.{key} is required")
    parts = {}
    for name in ("problem", "datum", "grid", "solver", "search", "fit"):
        sec = dict(cp[name]) if cp.has_section(name) else {}
        out = {}
        for k, v in sec.items():
            _check_key(name, k, sec)
            out[k] = v if (name == "datum" and k == "family") or (name == "datum" and v == "@") else _num(v)
        parts[name] = out
    return SweepSpec(exp["id"], exp["swept"], _parse_values(exp["values"]), exp.get("measure", "lifespan"), **parts)


def predefined_spec(experiment_id: str) -> SweepSpec:
    if experiment_id == "custom" or experiment_id not in EXPERIMENT_IDS:
        raise DomainError(f"no predefined spec for {experiment_id!r}")
    return load_spec(SPEC_DIR / f"{experiment_id}.ini")


# ---------------------------------------------------------------------------
# measurements


@dataclass
class ThresholdResult:
    """Bracket ``(k_low, k_high)`` on the amplitude: global below, blow-up above."""

    k_low: float
    k_high: float
    probes: list = field(default_factory=list)
    iterations: int = 0


def threshold_estimate(
    d,
    params: ProblemParams,
    grid: Grid,
    cfg: SolverConfig,
    horizon: float = 1e3,
    bisection_budget: int = 16,
    rel_width: float = 1e-3,
    kappa_guess: float = 1.0,
) -> ThresholdResult:
    """Bisect the amplitude multiplier for no blow-up up to ``horizon``.

    Each probe rescales ``k d`` to the unit horizon.  A converged probe is
    below the threshold, a blow-up probe above; inconclusive probes are
    recorded and move neither end.
    """
    if bisection_budget < 8:
        raise DomainError(f"bisection_budget must be >= 8, got {bisection_budget}")
    lo, hi = 0.0, math.inf
    k = kappa_guess
    probes = []
    for it in range(1, bisection_budget + 1):
        dd, h = rescale_problem(d.scaled(k), params, horizon)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                status = picard_solve(dd, params, h, grid, replace(cfg, companion=False)).status
        except EvaluationError as exc:
            status = "inconclusive"
            probes.append({"kappa": k, "status": status, "message": str(exc)})
        else:
            probes.append({"kappa": k, "status": status})
        if status == "converged":
            lo = max(lo, k)
        elif status == "blowup":
            hi = min(hi, k)
        if lo > 0 and math.isfinite(hi):
            if hi / lo - 1 <= rel_width:
                return ThresholdResult(lo, hi, probes, it)
            k = math.sqrt(lo * hi) if status != "inconclusive" else (lo * hi**3) ** 0.25
        elif math.isfinite(hi):
            k = hi / 4
        else:
            k = max(k, lo) * 4
    if lo == 0 and math.isinf(hi):
        raise EvaluationError("every threshold probe was inconclusive", partial=probes, terms=len(probes))
    return ThresholdResult(lo, hi, probes, bisection_budget)


@dataclass
class SweepRow:
    swept_value: float
    t_low: float
    t_high: float
    t_mid: float
    status: str
    iterations: int
    log_t_mid: float
    probes: int
    message: str = ""


def _measure(spec: SweepSpec, value: float) -> SweepRow:
    d, params, grid, cfg = spec.point(value)
    s = spec.search
    try:
        if spec.measure == "lifespan":
            res = lifespan_estimate(
                d, params, grid, cfg,
                bisection_budget=int(s.get("bisection_budget", 16)),
                T_guess=float(s.get("T_guess", 1.0)),
                T_max=float(s.get("T_max", math.inf)),
                rel_width=float(s.get("rel_width", 1e-3)),
                resolved_fraction=float(s.get("resolved_fraction", 0.25)),
            )
            status = res.status
            if status == "upper_only":
                status = "inconclusive"
            lm = res.log_mid
            return SweepRow(value, res.t_low, res.t_high, res.t_mid, status, res.iterations, lm, len(res.probes))
        res = threshold_estimate(
            d, params, grid, cfg,
            horizon=float(s.get("horizon", 1e3)),
            bisection_budget=int(s.get("bisection_budget", 16)),
            rel_width=float(s.get("rel_width", 1e-3)),
            kappa_guess=float(s.get("kappa_guess", 1.0)),
        )
        ok = res.k_low > 0 and math.isfinite(res.k_high)
        mid = math.sqrt(res.k_low * res.k_high) if ok else math.nan
        return SweepRow(value, res.k_low, res.k_high, mid, "bracketed" if ok else "inconclusive",
                        res.iterations, math.log(mid) if ok else math.nan, len(res.probes))
    except (EvaluationError, DomainError) as exc:
        return SweepRow(value, math.nan, math.nan, math.nan, "inconclusive", 0, math.nan, 0, str(exc))


@dataclass
class SweepResult:
    spec: SweepSpec
    rows: list

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows], dtype=float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in self.rows:
            w.writerow([_fmt(float(r.swept_value)), _fmt(float(r.t_low)), _fmt(float(r.t_high)),
                        _fmt(float(r.t_mid)), r.status, r.iterations, _fmt(float(r.log_t_mid)), r.probes])
        return buf.getvalue()


def run_sweep(spec: SweepSpec, workers: int = 1) -> SweepResult:
    """Measure every swept value; rows come back in the order of ``spec.values``.

    Failed points are kept as ``inconclusive`` rows.  More than half of
    them inconclusive raises :class:`SweepError`.
    """
    values = list(spec.values)
    if workers > 1 and len(values) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_measure, [spec] * len(values), values))
    else:
        rows = [_measure(spec, v) for v in values]
    bad = sum(r.status == "inconclusive" for r in rows)
    if bad * 2 > len(rows):
        msgs = "; ".join(sorted({r.message for r in rows if r.message}))[:500]
        raise SweepError(
            f"{bad} of {len(rows)} points inconclusive; try more time_steps, a larger "
            f"bisection_budget or a wider box. {msgs}"
        )
    return SweepResult(spec, rows)


# ---------------------------------------------------------------------------
# regression


@dataclass
class RegressionReport:
    model: str
    slope: float
    intercept: float
    r_squared: float
    expected_slope: float
    tolerance: float
    within_tolerance: bool
    check: str = "slope"
    min_r2: float = 0.0
    points: int = 0

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2, default=float)


def fit_scaling(
    x,
    y,
    model: str = "power_law",
    expected_slope: float = math.nan,
    tolerance: float = 0.1,
    check: str = "slope",
    min_r2: float = 0.0,
) -> RegressionReport:
    """Least squares of ``log y`` on ``log x`` (power_law) or on ``x`` (log_law).

    With ``check="slope"`` the verdict is ``|slope - expected| <= tolerance |expected|``
    together with ``r^2 >= min_r2``; with ``check="negative_slope"`` it is
    ``slope < 0`` and ``r^2 >= min_r2``.  ``y`` may be given already as
    ``log y`` by passing ``model="log_law"`` with a log-valued column.
    """
    if model not in MODELS:
        raise DomainError(f"model must be one of {MODELS}")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    X = np.log(x) if model == "power_law" else x
    ok = np.isfinite(X) & np.isfinite(y)
    X, y = X[ok], y[ok]
    if X.size < 5:
        raise RegressionError(f"need at least 5 finite points, got {X.size}")
    A = np.column_stack([X, np.ones_like(X)])
    if np.linalg.matrix_rank(A) < 2:
        raise RegressionError("abscissa is constant; the fit is rank deficient")
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * X + intercept)
    ss = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid**2).sum()) / ss if ss > 0 else 1.0
    r2 = min(max(r2, 0.0), 1.0)
    if check == "negative_slope":
        ok_fit = slope < 0
    else:
        ok_fit = abs(slope - expected_slope) <= tolerance * abs(expected_slope)
    return RegressionReport(model, float(slope), float(intercept), r2, float(expected_slope), float(tolerance),
                            bool(ok_fit and r2 >= min_r2), check, float(min_r2), int(X.size))


def expected_slope(spec: SweepSpec) -> float:
    """Theoretical slope for the predefined experiments; ``fit.expected_slope`` wins if numeric."""
    given = spec.fit.get("expected_slope", "auto")
    if given != "auto":
        return float(given)
    N, p, alpha = int(spec.problem["dim"]), float(spec.problem["p"]), float(spec.problem["alpha"])
    eid = spec.experiment_id
    if eid == "dirac_lifespan":
        return -2 * (p - 1) / (alpha * (2 - N * (p - 1)))
    if eid == "psi_j_threshold":
        return 2 / (N * (p - 1)) - 1
    if eid == "global_collapse":
        return N / 2
    if eid == "decaying_lifespan":
        A = float(spec.datum["A"])
        if A == N:
            return 1 / (alpha / (p - 1) - alpha * N / 2)
        return -1 / (alpha / (p - 1) - alpha * min(A, N) / 2)
    return math.nan


def _abscissa(spec: SweepSpec, v: np.ndarray) -> np.ndarray:
    kind = spec.fit.get("abscissa", "value")
    if kind == "one_minus_value":
        return 1 - v
    if kind == "one_minus_value_pow":
        return (1 - v) ** float(spec.fit.get("abscissa_power", 1.0))
    if kind == "inverse_over_log":
        return (1 / v) / np.log(1 / v)
    return v


def fit_sweep(result: SweepResult) -> RegressionReport:
    """Fit a sweep table according to its spec's [fit] section."""
    spec = result.spec
    x = _abscissa(spec, result.column("swept_value"))
    y = result.column("log_t_mid")
    keep = np.array([r.status == "bracketed" for r in result.rows])
    model = spec.fit.get("model", "power_law")
    return fit_scaling(
        x[keep],
        y[keep],
        model="log_law" if model == "log_law" else "power_law",
        expected_slope=expected_slope(spec),
        tolerance=float(spec.fit.get("tolerance", 0.1)),
        check=spec.fit.get("check", "slope"),
        min_r2=float(spec.fit.get("min_r2", 0.0)),
    )


def predefined_experiment(
    experiment_id: str, overrides: Optional[dict] = None, workers: int = 1
) -> tuple[SweepResult, RegressionReport, bool]:
    """Run a predefined sweep, fit its model and return the verdict."""
    spec = predefined_spec(experiment_id)
    if overrides:
        spec = spec.with_overrides(overrides)
    result = run_sweep(spec, workers)
    report = fit_sweep(result)
    return result, report, report.within_tolerance


# ---------------------------------------------------------------------------
# output


def write_outputs(result: SweepResult, report: Optional[RegressionReport], out_dir: str | Path) -> dict:
    """Write ``<id>__<hash>.csv``, the fit JSON and the resolved spec; return the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{result.spec.experiment_id}__{result.spec.digest}"
    paths = {"csv": out / f"{stem}.csv", "spec": out / f"{stem}.ini"}
    paths["csv"].write_text(result.to_csv())
    paths["spec"].write_text(result.spec.to_ini())
    if report is not None:
        paths["json"] = out / f"{stem}.json"
        paths["json"].write_text(report.to_json() + "\n")
    return paths


def field_to_csv(f: Field, t: Optional[float] = None) -> str:
    """Row-major field values with a commented header carrying the grid metadata."""
    g = f.grid
    head = [
        f"# dim={g.dim} half_width={g.half_width!r} points_per_axis={g.points_per_axis} symbol={g.symbol}",
        "# order=row-major origin_index=" + ",".join(map(str, g.origin_index)),
    ]
    if t is not None:
        head.append(f"# t={t!r}")
    buf = io.StringIO()
    cols = [f"x{i}" for i in range(g.dim)] + ["value"]
    buf.write("\n".join(head) + "\n" + ",".join(cols) + "\n")
    coords = [c.ravel() for c in g.coords]
    vals = f.values.ravel()
    for i in range(vals.size):
        buf.write(",".join(repr(float(c[i])) for c in coords) + f",{float(vals[i])!r}\n")
    return buf.getvalue()
