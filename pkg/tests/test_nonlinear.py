import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pipeflow.errors import ContractionError, ConvergenceError, UsageError, ValidationError
from pipeflow.grid import Parity, WeightKind
from pipeflow.modes import grid_of_size
from pipeflow.nonlinear import (FixedPointProblem, SpectralVelocity, amplitude_scaling_order,
                                bilinear_convection, convection_arrays, linear_solve, measure_eta,
                                picard_fixed_point, random_forcing, solve_steady, steady_residual)

SCALAR_ROOT = (1 - np.sqrt(0.6)) / 2     # zeta = 0.1 + zeta^2


def scalar_problem(star, eta=1.0, **kw):
    return FixedPointProblem(star, lambda x, y: eta * x * y, abs, eta, **kw)


# ---------------------------------------------------------------------------
# abstract fixed point

def test_scalar_oracle():
    z = picard_fixed_point(scalar_problem(0.1))
    assert abs(z - 0.1127016653792317) <= 1e-12
    assert abs(z - SCALAR_ROOT) <= 1e-12
    assert abs(z) <= 0.2


def test_scalar_zero_star():
    assert picard_fixed_point(scalar_problem(0.0)) == 0.0


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-6, 0.2), st.floats(0.1, 10.0))
def test_scalar_matches_quadratic_root(s, eta):
    # the rate 1 - sqrt(1 - 4 s) tends to 1 at the threshold; s <= 0.2 fits the step cap
    star = s / eta
    z = picard_fixed_point(scalar_problem(star, eta))
    root = (1 - np.sqrt(1 - 4 * eta * star)) / (2 * eta)
    assert abs(z - root) <= 1e-9 * root
    assert abs(z) <= 2 * star


def test_scalar_refusal_reports_measured_value():
    with pytest.raises(ContractionError) as info:
        picard_fixed_point(scalar_problem(0.3))
    assert abs(info.value.measured - 1.2) < 1e-12


def test_iteration_cap():
    hist = []
    with pytest.raises(ConvergenceError):
        picard_fixed_point(scalar_problem(0.24, tol=1e-15, max_iter=3), history=hist)
    assert len(hist) == 3


def test_problem_validation():
    with pytest.raises(ValidationError):
        scalar_problem(0.1, eta=0.0)
    with pytest.raises(ValidationError):
        scalar_problem(0.1, tol=1.0)


# ---------------------------------------------------------------------------
# convection

@pytest.fixture(scope="module")
def fields():
    g = grid_of_size(24)
    u = linear_solve(100.0, random_forcing(g, 1.0, 4, 1.0, seed=1))
    v = linear_solve(100.0, random_forcing(g, 1.0, 4, 1.0, seed=2))
    w = linear_solve(100.0, random_forcing(g, 1.0, 4, 1.0, seed=3))
    return g, u, v, w


def test_convection_of_zero(fields):
    g, _, v, _ = fields
    zero = SpectralVelocity.zeros(g, 1.0, 4)
    for a in convection_arrays(zero, v) + convection_arrays(v, zero):
        assert np.all(a == 0)


def test_convection_bilinear(fields):
    _, u, v, w = fields
    lhs = convection_arrays(u * 2.0 + w, v)
    a, b = convection_arrays(u, v), convection_arrays(w, v)
    for x, y, z in zip(lhs, a, b):
        assert np.max(np.abs(x - (2 * y + z))) <= 1e-12 * np.max(np.abs(x))


def test_convection_skew_symmetric(fields):
    """sum_k int conj(v_k) . (u . grad v)_k r dr = 0 for divergence-free no-slip u."""
    g, u, v, _ = fields
    w = g.weights(WeightKind.W_R, Parity.EVEN)
    arrs = convection_arrays(u, v)
    s = sum(np.sum((np.conj(a) * b) @ w) for a, b in zip((v.vr, v.vz, v.vtheta), arrs))
    scale = np.sqrt(sum(np.sum(np.abs(b) ** 2 @ w) for b in arrs)) * v.l2_norm()
    assert abs(s) <= 1e-10 * scale


def test_convection_modes_are_forcings(fields):
    _, u, v, _ = fields
    modes = bilinear_convection(u, v)
    assert len(modes) == 9
    assert modes[4].fr_hat.parity is Parity.ODD and modes[4].fz_hat.parity is Parity.EVEN


def test_fields_incompatible(fields):
    g, u, _, _ = fields
    with pytest.raises(UsageError):
        convection_arrays(u, SpectralVelocity.zeros(g, 1.0, 3))
    with pytest.raises(UsageError):
        u + SpectralVelocity.zeros(g, 2.0, 4)
    with pytest.raises(ValidationError):
        SpectralVelocity.zeros(g, 0.0, 2)


def test_linear_solve_invariants(fields):
    _, u, _, _ = fields
    inv = u.invariants()
    assert inv["reality"] <= 1e-14 and inv["divergence"] <= 1e-9 and inv["flux"] <= 1e-12


def test_measure_eta_positive(fields):
    _, u, v, _ = fields
    eta = measure_eta(100.0, [u, v])
    assert np.isfinite(eta) and eta > 0


# ---------------------------------------------------------------------------
# steady solve

def test_steady_zero_forcing():
    g = grid_of_size(16)
    F = SpectralVelocity.zeros(g, 1.0, 2)
    res = solve_steady(g, 10.0, F)
    assert res.iterations == 0 and res.velocity.l2_norm() == 0.0


def test_steady_solve_residual_and_invariants():
    g = grid_of_size(32)
    F = random_forcing(g, 1.0, 8, 1.0, seed=0)
    res = solve_steady(g, 100.0, F)
    assert res.final_residual <= 1e-8
    assert res.contraction < 1
    inv = res.velocity.invariants()
    assert inv["reality"] <= 1e-12 and inv["divergence"] <= 1e-8 and inv["flux"] <= 1e-10
    assert abs(steady_residual(100.0, res.velocity, F) - res.final_residual) <= 1e-15
    rep = json.loads(res.to_json())
    assert {"phi", "xi0", "K", "forcing_norm", "iterations", "final_residual", "v_norms",
            "eta", "contraction", "invariants"} <= set(rep)
    assert rep["v_norms"]["H53"] > 0


def test_steady_rejects_large_forcing():
    g = grid_of_size(16)
    with pytest.raises(ContractionError) as info:
        solve_steady(g, 10.0, random_forcing(g, 1.0, 2, 500.0))
    assert info.value.measured >= 1


def test_steady_rejects_mismatch():
    g = grid_of_size(16)
    F = random_forcing(g, 1.0, 2, 1.0)
    with pytest.raises(UsageError):
        solve_steady(g, 10.0, F, K=3)
    with pytest.raises(UsageError):
        solve_steady(grid_of_size(24), 10.0, F)


def test_amplitude_scaling_order():
    g = grid_of_size(24)
    orders, defects = amplitude_scaling_order(g, 10.0, random_forcing(g, 1.0, 3, 1.0, seed=4))
    assert min(orders) >= 1.9
    assert np.all(np.diff(defects) < 0)


def test_random_forcing_properties():
    g = grid_of_size(16)
    F = random_forcing(g, 0.5, 3, 2.5, seed=9)
    assert abs(F.forcing_norm() - 2.5) <= 1e-12
    assert F.invariants()["reality"] == 0.0
    G = random_forcing(g, 0.5, 3, 2.5, seed=9)
    assert np.array_equal(F.vr, G.vr)
