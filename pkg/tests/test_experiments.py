import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracheat.datum import Constant, ProblemParams
from fracheat.errors import DomainError, RegressionError
from fracheat.experiments import (
    EXPERIMENT_IDS,
    expected_slope,
    field_to_csv,
    fit_scaling,
    fit_sweep,
    load_spec,
    predefined_spec,
    run_sweep,
    threshold_estimate,
    write_outputs,
)
from fracheat.propagator import Field, Grid
from fracheat.solver import SolverConfig

CUSTOM = """
[experiment]
id = custom
swept = c
values = geomspace 0.5 8 5
[problem]
dim = 1
p = 2
alpha = 1
[datum]
family = constant
c = 1
[grid]
half_width = 4
points_per_axis = 16
[solver]
time_steps = 1024
[search]
bisection_budget = 14
rel_width = 0.02
[fit]
expected_slope = -1
tolerance = 0.05
min_r2 = 0.99
"""


def test_load_spec_and_values():
    spec = load_spec(CUSTOM)
    assert spec.values == pytest.approx(tuple(np.geomspace(0.5, 8, 5)))
    assert spec.datum["family"] == "constant"
    assert load_spec(spec.to_ini()).digest == spec.digest


@pytest.mark.parametrize(
    "patch",
    [
        ("[grid]", "[grid]\nbogus = 1"),
        ("[fit]", "[fitting]"),
        ("family = constant", "family = nope"),
        ("values = geomspace 0.5 8 5", "values = 1 2"),
        ("id = custom", "id = other"),
    ],
)
def test_bad_specs_are_rejected(patch):
    with pytest.raises(DomainError):
        load_spec(CUSTOM.replace(*patch))


def test_overrides():
    spec = load_spec(CUSTOM)
    new = spec.with_overrides({"problem.alpha": "0.5", "values": "1 2 3 4 5"})
    assert new.problem["alpha"] == 0.5
    assert new.values == (1.0, 2.0, 3.0, 4.0, 5.0)
    assert new.digest != spec.digest
    with pytest.raises(DomainError):
        spec.with_overrides({"grid.nope": "1"})
    with pytest.raises(DomainError):
        spec.with_overrides({"nosuch.key": "1"})


@pytest.mark.parametrize("eid", [e for e in EXPERIMENT_IDS if e != "custom"])
def test_predefined_specs_load(eid):
    spec = predefined_spec(eid)
    assert spec.experiment_id == eid
    if spec.fit.get("check", "slope") == "slope":
        assert math.isfinite(expected_slope(spec))


def test_expected_slopes():
    assert expected_slope(predefined_spec("dirac_lifespan")) == pytest.approx(-1 / (1.5 * 0.7))
    assert expected_slope(predefined_spec("global_collapse")) == 0.5


@settings(max_examples=30, deadline=None)
@given(slope=st.floats(-3, 3), icpt=st.floats(-5, 5))
def test_fit_recovers_exact_power_law(slope, icpt):
    x = np.geomspace(1, 100, 7)
    y = slope * np.log(x) + icpt
    rep = fit_scaling(x, y, expected_slope=slope if slope else 1.0, tolerance=1e-6)
    assert rep.slope == pytest.approx(slope, abs=1e-9)
    assert rep.intercept == pytest.approx(icpt, abs=1e-8)


def test_fit_errors_and_checks():
    with pytest.raises(RegressionError):
        fit_scaling([1, 2, 3], [1, 2, 3])
    with pytest.raises(RegressionError):
        fit_scaling([2.0] * 6, np.arange(6.0))
    rep = fit_scaling(np.arange(1.0, 7.0), -np.arange(1.0, 7.0), model="log_law", check="negative_slope", min_r2=0.9)
    assert rep.within_tolerance and rep.r_squared == pytest.approx(1.0)
    assert json.loads(rep.to_json())["check"] == "negative_slope"


def test_custom_sweep_recovers_constant_lifespan_law(tmp_path):
    # alpha = 1, p = 2: the lifespan of constant data c is 1/c
    spec = load_spec(CUSTOM)
    result = run_sweep(spec)
    assert all(r.status == "bracketed" for r in result.rows)
    assert np.allclose(result.column("t_mid"), 1 / result.column("swept_value"), rtol=0.03)
    report = fit_sweep(result)
    assert report.within_tolerance
    paths = write_outputs(result, report, tmp_path)
    assert paths["csv"].read_text().splitlines()[0].startswith("swept_value,t_low")
    assert load_spec(paths["spec"]).digest == spec.digest
    assert json.loads(paths["json"].read_text())["slope"] == pytest.approx(report.slope)


def test_threshold_for_constant_data():
    # alpha = 1: constant data c blows up by time H iff c > 1/H
    g = Grid(1, 4.0, 16)
    res = threshold_estimate(Constant(1.0), ProblemParams(1, 2.0, 1.0), g, SolverConfig(time_steps=1024),
                             horizon=10.0, bisection_budget=20, rel_width=0.02, kappa_guess=1.0)
    assert res.k_low < res.k_high
    assert math.sqrt(res.k_low * res.k_high) == pytest.approx(0.1, rel=0.05)


def test_field_to_csv_header():
    g = Grid(1, 1.0, 8)
    text = field_to_csv(Field.constant(g, 2.0), t=0.5)
    lines = text.splitlines()
    assert lines[0].startswith("# dim=1")
    assert lines[2] == "# t=0.5"
    assert lines[3] == "x0,value"
    assert len(lines) == 4 + 8
