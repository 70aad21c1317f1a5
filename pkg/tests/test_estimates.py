import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.polynomial import Polynomial

from pipeflow.errors import UsageError, ValidationError
from pipeflow.estimates import (CONSTANT_FREE, EPS1, InequalityKind, RegimeId, classify,
                                inequality_suite, inequality_trial, mode_norm_report,
                                regime_ratio_names, suite_report_json, verify_energy_identities,
                                verify_regime_estimate, worst_case_ratios)
from pipeflow.modes import (BoundaryKind, FlowParams, ForcingMode, ModeSolution, grid_of_size,
                            solve_mode, solve_stream)


def random_forcing(grid, rng):
    a, b, c = rng.standard_normal((3, 5)) + 1j * rng.standard_normal((3, 5))
    return ForcingMode.from_components(
        grid, lambda r: r * np.polyval(a, r * r), lambda r: np.polyval(b, r * r),
        lambda r: r * np.polyval(c, r * r))


def test_classify_thresholds():
    assert classify(FlowParams(100, 1)) is RegimeId.SMALL_FLUX
    assert classify(FlowParams(1e4, 1e-3)) is RegimeId.LOW_FREQ
    assert classify(FlowParams(1e4, 1.0 / (EPS1 * 1e4))) is RegimeId.LOW_FREQ
    assert classify(FlowParams(1e4, 1.0)) is RegimeId.MED_FREQ_FULL
    assert classify(FlowParams(1e4, EPS1 * 100)) is RegimeId.HIGH_FREQ
    assert classify(FlowParams(1e4, -10)) is RegimeId.HIGH_FREQ


def test_norm_report_lpsi_example(grid48):
    r = grid48.nodes
    sol = ModeSolution.from_samples(grid48.field(r * (1 - r * r) ** 2), FlowParams(0, 0),
                                    BoundaryKind.NOSLIP)
    rep = mode_norm_report(sol)
    assert abs(rep["LPSI"] - 8.0) < 1e-10
    assert abs(rep["L2"] - 1.0 / 60.0) < 1e-13  # (1/2) B(2, 5)


def test_norm_report_zero_and_h53(grid48):
    zero = ModeSolution.from_samples(grid48.field(np.zeros(48)), FlowParams(1, 1), BoundaryKind.NOSLIP)
    rep = mode_norm_report(zero)
    assert all(v == 0 for v in rep.values.values())
    sol = solve_mode(grid48, FlowParams(30, 2), random_forcing(grid48, np.random.default_rng(0)))
    rep = mode_norm_report(sol)
    assert all(v >= 0 for v in rep.values.values())
    assert rep["H53"] == rep["H1"] ** (1 / 3) * rep["H2"] ** (2 / 3)


def test_norm_report_lifted_matches_samples(grid96):
    sol = solve_stream(grid96, FlowParams(20, 1), random_forcing(grid96, np.random.default_rng(1)))
    a = mode_norm_report(sol)
    b = mode_norm_report(ModeSolution.from_samples(sol.psi_hat, sol.params, BoundaryKind.NOSLIP))
    for k in ("L2", "DR", "LPSI"):
        assert abs(a[k] - b[k]) <= 1e-8 * a[k]


def test_energy_identities_example(grid96):
    F = random_forcing(grid96, np.random.default_rng(2))
    sol = solve_mode(grid96, FlowParams(100, 3), F)
    rep = verify_energy_identities(sol, F)
    assert set(rep.residuals) >= {"stream_real", "stream_imag", "swirl_real", "swirl_imag"}
    assert rep.worst <= 1e-7


def test_energy_identities_zero_and_static(grid48):
    F0 = ForcingMode.from_components(grid48)
    sol = solve_mode(grid48, FlowParams(10, 1), F0)
    assert verify_energy_identities(sol, F0).worst == 0.0
    F = random_forcing(grid48, np.random.default_rng(3))
    sol = solve_mode(grid48, FlowParams(0, 2), F)
    rep = verify_energy_identities(sol, F)
    lhs, rhs = rep.terms["stream_imag"]
    assert lhs == 0.0 and abs(rhs) <= 1e-9 * abs(rep.terms["stream_real"][1])


def test_energy_identities_need_solved_input(grid48):
    r = grid48.nodes
    sol = ModeSolution.from_samples(grid48.field(r * (1 - r * r) ** 2), FlowParams(1, 1),
                                    BoundaryKind.NOSLIP)
    with pytest.raises(UsageError):
        verify_energy_identities(sol, ForcingMode.from_curl(grid48.field(r)))


def test_regime_estimate_high_freq_refinement():
    P = FlowParams(1e4, 2 * EPS1 * 100)
    vals = []
    for n in (64, 128):
        g = grid_of_size(n)
        F = random_forcing(g, np.random.default_rng(4))
        sol = solve_stream(g, P, F)
        vals.append(verify_regime_estimate(RegimeId.HIGH_FREQ, P, F, sol).ratios["high_freq_energy"])
    assert np.isfinite(vals[0]) and abs(vals[0] - vals[1]) <= 0.01 * vals[1]


def test_regime_estimate_zero_forcing(grid48):
    P = FlowParams(10, 1)
    F = ForcingMode.from_components(grid48)
    sol = solve_stream(grid48, P, F)
    rec = verify_regime_estimate(RegimeId.SMALL_FLUX, P, F, sol)
    assert rec.ratios == {"small_flux_h2": 0.0}


def test_regime_estimate_mismatch(grid48):
    P = FlowParams(10, 1)
    F = random_forcing(grid48, np.random.default_rng(5))
    sol = solve_stream(grid48, P, F)
    with pytest.raises(UsageError):
        verify_regime_estimate(RegimeId.HIGH_FREQ, P, F, sol)
    with pytest.raises(UsageError):
        verify_regime_estimate(RegimeId.SMALL_FLUX, FlowParams(10, 2), F, sol)


def test_slip_ratio_sweep_bounded():
    """slip_l2 ratio over a decade of Phi |xi| varies by less than 10x."""
    g = grid_of_size(48)
    vals = []
    for xi in (0.1, 0.3, 1.0):
        P = FlowParams(1e3, xi)
        vals.append(worst_case_ratios(g, P, RegimeId.MED_FREQ_SLIP).ratios["slip_l2"])
    assert max(vals) / min(vals) <= 10


def test_worst_case_dominates_single_forcing(grid48):
    P = FlowParams(1e4, 1.0)
    F = random_forcing(grid48, np.random.default_rng(6))
    sol = solve_stream(grid48, P, F, BoundaryKind.SLIP)
    single = verify_regime_estimate(RegimeId.MED_FREQ_SLIP, P, F, sol).ratios
    worst = worst_case_ratios(grid48, P, RegimeId.MED_FREQ_SLIP).ratios
    for k in regime_ratio_names(RegimeId.MED_FREQ_SLIP):
        assert single[k] <= worst[k] * (1 + 1e-6)


def test_swirl_energy_constant_one(grid48):
    for P in (FlowParams(10, 0.5), FlowParams(1e3, 3.0)):
        assert worst_case_ratios(grid48, P, RegimeId.SWIRL).ratios["swirl_energy"] <= 1.0 + 1e-9


def test_inequality_examples():
    x = Polynomial([0, 1])
    hlp = inequality_trial(InequalityKind.HLP, x)
    assert abs(hlp.lhs[0] - 1 / 3) < 1e-15 and abs(hlp.rhs[0] - 1 / 3) < 1e-15
    assert abs(hlp.ratios[0] - 1) < 1e-9
    poi = inequality_trial(InequalityKind.POINCARE, x)
    assert abs(poi.lhs[0] - 0.25) < 1e-15 and abs(poi.rhs[0] - 2.0) < 1e-15 and poi.holds
    b = inequality_trial(InequalityKind.BESSEL, (1.0, 2.0, 10.0))
    assert b.holds and b.empirical["xi"] == 10.0 and b.empirical["l2"] > 0


def test_inequality_hypothesis_violation():
    with pytest.raises(ValidationError):
        inequality_trial(InequalityKind.POINCARE, Polynomial([1.0, 1.0]))
    with pytest.raises(ValidationError):
        inequality_trial(InequalityKind.BESSEL, (2.0, 1.0, 1.0))


poly_coef = st.lists(st.floats(-10, 10, allow_nan=False), min_size=1, max_size=12)


@settings(max_examples=100, deadline=None)
@given(poly_coef)
def test_constant_free_inequalities_hold(coef):
    if not any(abs(c) > 1e-6 for c in coef):
        return
    g = Polynomial([0.0] + list(coef))
    for kind in CONSTANT_FREE:
        assert inequality_trial(kind, g).holds


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-3, 30), st.floats(1e-3, 30), st.floats(0.01, 50))
def test_bessel_trial_holds(x, y, xi):
    x, y = min(x, y), max(x, y)
    if y - x < 1e-6:
        return
    assert inequality_trial(InequalityKind.BESSEL, (x, y, xi)).holds


def test_suite_report_json():
    res = [inequality_suite(InequalityKind.HLP, 50), inequality_suite(InequalityKind.WEIGHTED_L2, 50)]
    data = json.loads(suite_report_json(res))
    for d in data:
        assert {"lemma", "trials", "worst_ratio", "sharp_witness"} <= set(d)
    assert data[0]["passed"] and abs(data[0]["sharp_witness"]["ratio"] - 1) < 1e-9
    assert data[1]["empirical_constants"]["constant"] > 0


def test_suite_deterministic():
    a = inequality_suite(InequalityKind.WALL_TRACE, 30, seed=7)
    b = inequality_suite(InequalityKind.WALL_TRACE, 30, seed=7)
    assert a == b


def test_wall_clamp_near_constant_factor():
    """g = r + tiny r^2 clamps to a nonzero multiple of r (r - 1)."""
    for tiny in (1e-160, 1e-20, 1e-8):
        rec = inequality_trial(InequalityKind.POINCARE_L, Polynomial([0.0, 1.0, tiny]))
        assert rec.holds and all(np.isfinite(rec.ratios))


def test_swirl_l2_ratio_bounded_over_two_decades():
    """(Phi|xi|)^{4/3} times the squared swirl L2 gain stays within a factor 10."""
    g = grid_of_size(48)
    vals = [worst_case_ratios(g, FlowParams(1e4, xi), RegimeId.SWIRL).ratios["swirl_l2"]
            for xi in np.geomspace(1e-2, 1.0, 5)]
    assert all(np.isfinite(v) and v > 0 for v in vals)
    assert max(vals) / min(vals) <= 10
