import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special

from fracheat.criteria import (
    PINNED_SUITE_HASH,
    Constants,
    CriterionReport,
    admissible_q,
    calibrate,
    critical_time_integral,
    default_r,
    gamma_constants,
    global_window,
    load_constants,
    load_suite,
    necessary_condition,
    rescale_problem,
    sigma_sweep,
    sufficient_condition,
    suite_hash,
    window_lower_constant,
    write_constants,
)
from fracheat.datum import Constant, Decaying, DiracApprox, PowerLaw, ProblemParams, total_mass
from fracheat.errors import DomainError


@pytest.mark.parametrize("alpha", [0.3, 0.7, 0.999, 1.0])
@pytest.mark.parametrize("a", [1e-6, 0.01, 0.2])
def test_critical_time_integral_matches_quad(alpha, a):
    ref, _ = integrate.quad(lambda t: t**-alpha, a, 0.25, limit=200)
    assert critical_time_integral(a, alpha) == pytest.approx(ref, rel=1e-9)


def test_critical_time_integral_domain():
    with pytest.raises(DomainError):
        critical_time_integral(0.3, 0.5)
    assert critical_time_integral(0.0, 0.5) == pytest.approx(2 * 0.5)


def test_gamma2_closed_form():
    pp = ProblemParams(1, 2.0, 0.5)
    x = 0.5 - 0.25 * 0.5
    y = 1 - 0.25
    expect = 0.25 * special.beta(x, y) ** (-1.0)
    assert gamma_constants(pp)["gamma2"] == pytest.approx(expect)


def test_gamma3_needs_admissible_exponents():
    pp = ProblemParams(3, 3.0, 0.6)
    r = default_r(pp)
    assert 1 < r < 3
    q = admissible_q(pp, r)
    assert max(pp.p, r) < q < pp.p * r
    assert gamma_constants(pp, r=r)["gamma3"] > 0
    with pytest.raises(DomainError):
        default_r(ProblemParams(1, 2.0, 0.5))


def test_sigma_sweep_includes_breakpoints():
    d = DiracApprox(4.0)
    pp = ProblemParams(1, 2.0, 0.5)
    sig = sigma_sweep(d, pp, 1.0, 64)
    assert sig[-1] == pytest.approx(1.0)
    assert np.any(np.isclose(sig, d.support_radius(1)))
    with pytest.raises(DomainError):
        sigma_sweep(d, pp, 1.0, 8)


def test_necessary_condition_dirac_subcritical():
    # below the Fujita exponent the general number is mass / sigma^{N - 2/(p-1)} at the top radius
    pp = ProblemParams(1, 2.0, 0.5)
    d = DiracApprox(64.0, 2.0)
    T = 4.0
    rep = necessary_condition(d, pp, T, constants=Constants())
    assert rep.condition_number == pytest.approx(2.0 * T ** (0.25 * 1.0), rel=1e-9)
    assert rep.verdict == "indeterminate"
    flagged = necessary_condition(d, pp, T, gamma1=1.0)
    assert flagged.verdict == "violated" and flagged.violated


def test_necessary_condition_critical_has_companion():
    pp = ProblemParams(1, 3.0, 0.5)
    rep = necessary_condition(Decaying(1.0, 3.0), pp, 1.0, constants=Constants())
    assert rep.critical is not None
    assert rep.critical.kind == "necessary_critical"
    text = rep.format()
    assert "necessary_critical" in text and "condition_number" in text


def test_non_integrable_power_law_is_violated():
    pp = ProblemParams(1, 2.0, 0.5)
    rep = necessary_condition(PowerLaw(1.0, 2.0), pp, 1.0, constants=Constants())
    assert math.isinf(rep.condition_number)
    assert rep.violated


def test_sufficient_condition_small_data():
    pp = ProblemParams(1, 2.0, 0.5)
    assert sufficient_condition(Constant(1e-3), pp, 1.0).verdict == "satisfied"
    assert sufficient_condition(Constant(1e3), pp, 1.0).verdict == "indeterminate"
    sup = sufficient_condition(Constant(1e-3), ProblemParams(3, 3.0, 0.5), 1.0)
    assert sup.kind == "sufficient_supercritical"
    assert sup.verdict == "satisfied"


def test_report_kind_verdict_consistency():
    with pytest.raises(DomainError):
        CriterionReport("sufficient_subcritical", 1.0, 1.0, "violated")
    with pytest.raises(DomainError):
        CriterionReport("necessary_general", 1.0, 1.0, "satisfied")
    with pytest.raises(DomainError):
        CriterionReport("bogus", 1.0, 1.0, "indeterminate")


@settings(max_examples=25, deadline=None)
@given(alpha=st.floats(0.5, 0.999), dim=st.integers(1, 3))
def test_gamma2_critical_ratio_bounded(alpha, dim):
    pp = ProblemParams(dim, 1 + 2 / dim, alpha)
    assert gamma_constants(pp)["critical_ratio"] <= 0.25 + 1e-12


def test_global_window_orders_ends():
    lo, hi = global_window(0.7, 1)
    assert 0 < lo <= hi
    assert lo == pytest.approx(window_lower_constant(1) * 0.3**0.5)


@settings(max_examples=25, deadline=None)
@given(logT=st.floats(-20, 20), alpha=st.floats(0.3, 1.0), p=st.floats(1.2, 4.0))
def test_rescaling_preserves_condition_number(logT, alpha, p):
    # the general ball-mass number is scale invariant, up to the sweep's top radius
    pp = ProblemParams(1, p, alpha)
    d = Decaying(1.0, 3.0)
    dd, horizon = rescale_problem(d, pp, log_T=logT)
    assert horizon == 1.0
    lam_amp = math.exp(pp.amplitude_exponent * logT / 2)
    lam_x = math.exp(alpha * logT / 2)
    assert total_mass(dd, 1) == pytest.approx(lam_amp / lam_x * total_mass(d, 1), rel=1e-9)


def test_rescale_argument_checks():
    pp = ProblemParams(1, 2.0, 0.5)
    with pytest.raises(DomainError):
        rescale_problem(Constant(1.0), pp)
    with pytest.raises(DomainError):
        rescale_problem(Constant(1.0), pp, 1.0, log_T=0.0)
    assert rescale_problem(Constant(1.0), pp, 1.0) == (Constant(1.0), 1.0)


def test_constants_roundtrip(tmp_path):
    c = Constants(calibrated="2020-01-01", suite="abc", version=1)
    c.set("gamma1", 1.25, N=1, p=2.0, alpha=0.5)
    c.values["c_star"] = 0.25
    path = write_constants(c, tmp_path / "c.txt")
    back = load_constants(path)
    assert back.gamma1(ProblemParams(1, 2.0, 0.5)) == 1.25
    assert back.suite == "abc" and back.version == 1
    (tmp_path / "bad.txt").write_text("gamma1 1.0\n")
    with pytest.raises(DomainError):
        load_constants(tmp_path / "bad.txt")


def test_packaged_constants_match_frozen_suite():
    assert suite_hash() == PINNED_SUITE_HASH
    consts = load_constants()
    assert consts.suite == PINNED_SUITE_HASH
    assert consts.gamma1(ProblemParams(1, 2.0, 0.5)) is not None
    assert consts.get("C2", N=1) >= consts.get("C1", N=1)


def test_load_suite_skips_non_integrable_data():
    suite = load_suite()
    assert suite.digest == PINNED_SUITE_HASH
    names = {(c.name, c.params.p) for c in suite.cases}
    # |x|^-2 is not locally integrable on the line
    assert ("power_small", 2.0) not in names
    assert ("power_small", 4.0) in names


def test_calibrate_from_rows(tmp_path):
    suite_file = tmp_path / "suite.ini"
    suite_file.write_text(
        "[suite]\nregimes = 1:3\nalphas = 0.5\nhorizons = 1\n"
        "[grid]\ndim = 1\nhalf_width = 8\npoints_per_axis = 64\n"
        "[solver]\ntime_steps = 32\nblowup_threshold = 1e8\n"
        "[data]\nsmall = constant c=0.01\n"
    )
    row = {
        "name": "small", "N": 1, "p": 3.0, "alpha": 0.5, "T": 1.0, "status": "converged",
        "cn_general": 0.7, "cn_critical": 0.4, "resolved_general": True,
        "resolved_critical": True, "sufficient": False,
    }
    out = tmp_path / "consts.txt"
    consts = calibrate(out, suite_file, rows=[row])
    assert consts.gamma1(ProblemParams(1, 3.0, 0.5)) == 0.7
    assert consts.gamma1_critical(1, 0.5) == 0.4
    assert load_constants(out).suite == suite_hash(suite_file)
