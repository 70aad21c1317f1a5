import json

import mpmath
import numpy as np
import pytest
from scipy.integrate import quad

from pipeflow.blayer import (beta, c0, cutoff, decompose, layer_profile, remainder_forcing,
                             remainder_parts, worst_wall_forcing)
from pipeflow.errors import DomainError, ResolutionError, UsageError
from pipeflow.grid import OperatorKind, apply_operator
from pipeflow.modes import FlowParams, ForcingMode, grid_of_size
from pipeflow.specfun import airy_ai, bessel_i1


def test_beta_examples():
    assert abs(beta(FlowParams(2 * np.pi, 1)) - 2.0) < 1e-14
    assert abs(beta(FlowParams(np.pi / 4, 1)) - 1.0) < 1e-14
    vals = [beta(FlowParams(p, 0.7)) for p in (1, 10, 100, 1e3)]
    assert np.all(np.diff(vals) > 0)
    with pytest.raises(DomainError):
        beta(FlowParams(0, 1))


def test_layer_ode_residual():
    prof = layer_profile(FlowParams(1e4, 1.0))
    rho = np.linspace(0.05, 3 * prof.beta, 200)
    gt = np.abs(prof.g_tilde(rho))
    assert np.max(prof.ode_residual(rho)) <= 1e-8 * gt.max()


def test_layer_decays():
    prof = layer_profile(FlowParams(1e4, 1.0))
    g0 = abs(prof.derivatives(np.array([0.0]), 0)[0, 0])
    g5 = abs(prof.derivatives(np.array([5 * prof.beta]), 0)[0, 0])
    assert g5 <= 1e-4 * g0
    assert np.isfinite(prof.decay_constant()) and prof.decay_constant() > 0


def test_layer_conjugation():
    a = layer_profile(FlowParams(1e4, 2.0))
    b = layer_profile(FlowParams(1e4, -2.0))
    rho = np.linspace(0, 20, 41)
    da, db = a.derivatives(rho, 4), b.derivatives(rho, 4)
    assert np.max(np.abs(db - da.conj())) <= 1e-12 * np.max(np.abs(da))


def test_layer_single_integral_oracle():
    """G(rho) = int_rho^oo Gt(s) sinh(k (s - rho)) / k ds by adaptive quadrature."""
    prof = layer_profile(FlowParams(1e4, 1.0))
    k = prof.k

    def gt(s):
        return complex(airy_ai(prof.rotation * (s + prof.shift)))

    for rho in (0.0, 1.5, 4.0):
        re = quad(lambda s: (gt(s) * np.sinh(k * (s - rho)) / k).real, rho, prof.rho_max, limit=400)[0]
        im = quad(lambda s: (gt(s) * np.sinh(k * (s - rho)) / k).imag, rho, prof.rho_max, limit=400)[0]
        got = prof.derivatives(np.array([rho]), 0)[0, 0]
        assert abs(got - (re + 1j * im)) <= 1e-9 * abs(got)


def test_layer_first_order_split_oracle():
    """u = G' + k G solves u' - k u = Gt, so u(tau) = -int_tau^oo Gt(s) e^{-k (s - tau)} ds."""
    prof = layer_profile(FlowParams(1e4, 1.0))
    k = prof.k

    def gt(s):
        return complex(airy_ai(prof.rotation * (s + prof.shift)))

    for tau in (0.0, 2.0):
        re = quad(lambda s: (gt(s) * np.exp(-k * (s - tau))).real, tau, prof.rho_max, limit=400)[0]
        im = quad(lambda s: (gt(s) * np.exp(-k * (s - tau))).imag, tau, prof.rho_max, limit=400)[0]
        d = prof.derivatives(np.array([tau]), 1)[:, 0]
        assert abs((d[1] + k * d[0]) + (re + 1j * im)) <= 1e-9 * abs(re + 1j * im)


def test_layer_nested_double_integral_oracle():
    """From (G e^{k rho})' = u e^{k rho} with G decaying: G(rho) = -int_rho^oo e^{k (t - rho)} u(t) dt."""
    prof = layer_profile(FlowParams(1e4, 1.0))
    k = prof.k

    def gt(s):
        return complex(airy_ai(prof.rotation * (s + prof.shift)))

    def u(tau, part):
        f = (lambda s: (gt(s) * np.exp(-k * (s - tau))).real) if part == 0 else \
            (lambda s: (gt(s) * np.exp(-k * (s - tau))).imag)
        return -quad(f, tau, prof.rho_max, limit=200)[0]

    rho = 1.0
    outer = [quad(lambda t: np.exp(k * (t - rho)) * u(t, part), rho, prof.rho_max, limit=100)[0]
             for part in (0, 1)]
    ref = -(outer[0] + 1j * outer[1])
    got = prof.derivatives(np.array([rho]), 0)[0, 0]
    assert abs(got - ref) <= 1e-8 * abs(got)


def test_layer_regime_check():
    with pytest.raises(UsageError):
        layer_profile(FlowParams(1e4, 1e-6))
    with pytest.raises(UsageError):
        layer_profile(FlowParams(1e4, 100.0))


class _StubProfile:
    def __init__(self, g0):
        self.g0 = g0

    def derivatives(self, rho, order):
        return np.full((order + 1, np.size(rho)), self.g0, dtype=complex)


def test_c0_case_split():
    P = FlowParams(1e4, 1)
    assert c0(P, _StubProfile(2.0)) == 0.5
    assert c0(P, _StubProfile(0.5)) == 1.0
    assert c0(P, _StubProfile(0.0)) == 1.0
    prof = layer_profile(P)
    g0 = prof.derivatives(np.array([0.0]), 0)[0, 0]
    assert abs(c0(P, prof) * g0) <= 1 + 1e-15


def test_cutoff():
    r = np.linspace(0, 1, 101)
    chi = cutoff(r)
    assert np.all(chi[r <= 0.25] == 0) and np.all(chi[r >= 0.5] == 1)
    assert np.all(np.diff(chi) >= 0)
    for d in range(1, 5):
        assert np.all(cutoff(r, d)[(r <= 0.25) | (r >= 0.5)] == 0)
    with pytest.raises(UsageError):
        cutoff(r, 5)

    def chi(t):
        sig = lambda s: mpmath.exp(-1 / s) if s > 0 else mpmath.mpf(0)
        return sig(4 * t - 1) / (sig(4 * t - 1) + sig(2 - 4 * t))

    mpmath.mp.dps = 30
    for x in (0.3, 0.37, 0.45):
        for d in range(5):
            ref = float(mpmath.diff(chi, mpmath.mpf(x), d))
            assert abs(cutoff(np.array([x]), d)[0] - ref) <= 1e-12 * abs(ref)


def test_remainder_outer_term_support():
    P = FlowParams(1e4, 1.0)
    prof = layer_profile(P)
    r = np.linspace(0.5, 1.0, 50)
    outer, mismatch = remainder_parts(r, P, prof)
    assert np.all(outer == 0)
    assert np.all(np.isfinite(mismatch))


def test_remainder_mismatch_scaling():
    """||(At Ht - A H)(chi psi_BL)||^2 / |beta|^5 stays within a decade across a decade of |beta|."""
    from pipeflow.grid import gauss_radial
    r, w = gauss_radial(400)
    vals = []
    for xi in (0.2, 1.0, 4.0):
        P = FlowParams(1e4, xi)
        prof = layer_profile(P)
        _, mm = remainder_parts(r, P, prof)
        vals.append(float(w @ np.abs(mm) ** 2) / prof.beta ** 5)
    assert max(vals) / min(vals) <= 10


def test_remainder_resolution_error():
    P = FlowParams(1e4, 4.0)
    prof = layer_profile(P)
    with pytest.raises(ResolutionError):
        remainder_forcing(grid_of_size(16), P, prof)


def test_decompose_example():
    g = grid_of_size(144)
    P = FlowParams(1e4, 3.0)
    F = ForcingMode.from_components(g, fr=lambda r: r * (1 - r * r), fz=lambda r: 1 - r ** 4)
    d = decompose(g, P, F)
    assert d.reconstruction_rel_err <= 1e-5
    i1 = bessel_i1(abs(P.xi))
    bl_wall = d.wall_values["layer"]
    assert abs(d.a * i1 + d.b * bl_wall) <= 1e-12 * max(abs(d.a * i1), abs(d.b * bl_wall))
    assert abs(bl_wall) <= 1 + 1e-12
    assert abs(d.wall_values["psi"]) <= 1e-8 * max(np.max(np.abs(d.reconstruction())), 1e-300)
    data = json.loads(d.to_json())
    assert {"phi", "xi", "beta", "a", "b", "reconstruction_rel_err", "part_norms"} <= set(data)


def test_decompose_parts_satisfy_equations():
    g = grid_of_size(128)
    P = FlowParams(1e4, 2.0)
    d = decompose(g, P, worst_wall_forcing(g, P))
    assert d.psi_s.residual <= 1e-9
    gg = d.grid
    f = gg.field(bessel_i1(abs(P.xi) * gg.nodes))
    H = apply_operator(gg, OperatorKind.L, f) - f * P.xi ** 2
    assert np.max(np.abs(H.values)) <= 1e-8 * np.max(np.abs(f.values)) * P.xi ** 2


def test_decompose_rejects_small_flux_and_regime():
    g = grid_of_size(64)
    F = ForcingMode.from_components(g, fr=lambda r: r)
    with pytest.raises(UsageError):
        decompose(g, FlowParams(500, 0.5), F)
    with pytest.raises(UsageError):
        decompose(g, FlowParams(1e4, 50.0), F)


def test_worst_wall_forcing_is_unit():
    g = grid_of_size(48)
    F = worst_wall_forcing(g, FlowParams(1e4, 1.0))
    assert abs(F.meridional_norm_sq() - 1.0) < 1e-10


def test_decompose_thick_layer_case():
    """Phi = 1e3, xi = 0.2817 needs n = 512 for the slowly resolved remainder forcing."""
    g = grid_of_size(64)
    P = FlowParams(1e3, 0.2817)
    d = decompose(g, P, worst_wall_forcing(g, P))
    assert d.reconstruction_rel_err <= 1e-5 and d.direct.residual <= 1e-9
    assert 1.0 <= d.scaled_b() <= 2.0
