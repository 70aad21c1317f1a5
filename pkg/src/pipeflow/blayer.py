"""Boundary-layer decomposition at intermediate frequencies.

For large flux and 1/(eps1 Phi) <= |xi| <= eps1 sqrt(Phi) the no-slip
solution is assembled from four parts::

    psi = psi_s + a I1(|xi| r) + b (chi psi_BL + psi_e)

where psi_s solves the slip problem with the given forcing, I1(|xi| r) is the
irrotational mode, psi_BL is an Airy-type wall layer of thickness 1/|beta|
with |beta| = (4 |xi| Phi / pi)^(1/3), chi is a smooth cut-off equal to one
near the wall, and psi_e is the slip solution that cancels what the layer
leaves behind.  The constants a, b restore psi(1) = psi'(1) = 0.

Layer profile
-------------
With k = |xi| / |beta| and the rotated Airy function
Gt(rho) = Ai(C (rho + s)), C = exp(+-i pi/6), s = -+i k^2 (sign of xi), the
layer G is the decaying solution of G'' - k^2 G = Gt.  Exchanging the order of
the defining double integral gives the single integral

    G(rho) = int_rho^oo Gt(sigma) sinh(k (sigma - rho)) / k dsigma,

evaluated with Gauss-Legendre panels of unit width.  Derivatives follow from
G' = -int Gt cosh(k (sigma - rho)), G'' = Gt + k^2 G and the Airy equation.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import factorial
from typing import Optional

import numpy as np

from .errors import DegeneracyError, DomainError, ResolutionError, SolverError, UsageError
from .estimates import EPS1, RegimeId, classify
from .grid import Parity, RadialGrid, WeightKind
from .modes import (BoundaryKind, FlowParams, ForcingMode, ModeSolution, grid_of_size,
                    solve_stream)
from .response import MeridionalResponse
from .specfun import airy_ai, bessel_i1, bessel_i1_prime

__all__ = [
    "SIGMA_CAL",
    "MIN_FLUX",
    "LayerProfile",
    "BLDecomposition",
    "beta",
    "layer_profile",
    "c0",
    "cutoff",
    "remainder_forcing",
    "remainder_parts",
    "decompose",
    "worst_wall_forcing",
]

SIGMA_CAL = 2.0          # decay calibration point for e^rho |G(rho)|
MIN_FLUX = 1.0e3         # smallest flux routed through the layer construction
DEGENERACY_TOL = 1e-12
# The cutoff is built from exp(-1/t) bumps, whose Chebyshev coefficients decay
# only root-exponentially; the remainder solve gets its own residual gate and
# the reconstruction against the direct solve is the accuracy check.
REMAINDER_TOL = 1e-7
_PANEL_NODES = 24
_AIRY_LIMIT = 48.0       # inside the validated Airy range
_TAIL_REL = 1e-17        # panels beyond this relative size of Gt are dropped


def beta(params: FlowParams) -> float:
    """Inverse layer thickness |beta| = (4 |xi| Phi / pi)^(1/3)."""
    prod = params.phi * abs(params.xi)
    if prod == 0.0:
        raise DomainError("layer scale needs Phi |xi| > 0")
    return float(np.cbrt(4.0 * prod / np.pi))


def _check_intermediate(params: FlowParams, eps1: float = EPS1) -> None:
    if params.phi * abs(params.xi) == 0.0:
        raise UsageError("layer construction needs Phi |xi| > 0")
    if classify(params, eps1) is not RegimeId.MED_FREQ_FULL:
        raise UsageError(f"(phi={params.phi}, xi={params.xi}) is not in the intermediate "
                         f"frequency band {1 / (eps1 * params.phi):.4g} <= |xi| <= "
                         f"{eps1 * np.sqrt(params.phi):.4g}")


# ---------------------------------------------------------------------------
# layer profile

@dataclass(frozen=True, eq=False)
class LayerProfile:
    """Decaying layer G(rho) and its first four derivatives.

    Attributes
    ----------
    params : FlowParams
    beta : float
        |beta|.
    k : float
        |xi| / |beta|.
    rotation : complex
        exp(i pi/6) for xi > 0, exp(-i pi/6) for xi < 0.
    shift : complex
        Imaginary shift of the Airy argument.
    rho_max : float
        Upper limit of the integrals (beyond it Gt is negligible).
    """

    params: FlowParams
    beta: float
    k: float
    rotation: complex
    shift: complex
    rho_max: float
    _sigma: np.ndarray = field(repr=False)
    _weights: np.ndarray = field(repr=False)
    _gt: np.ndarray = field(repr=False)
    _edges: np.ndarray = field(repr=False)

    def g_tilde(self, rho) -> np.ndarray:
        """Rotated Airy function Ai(C (rho + s)); zero beyond ``rho_max``."""
        rho = np.asarray(rho, dtype=float)
        out = np.zeros(rho.shape, dtype=complex)
        live = rho <= self.rho_max
        if np.any(live):
            out[live] = airy_ai(self.rotation * (rho[live] + self.shift))
        return out

    def _airy_slope_term(self, rho):
        # C^3 (rho + s) Gt(rho), i.e. Gt''
        return self.rotation ** 3 * (rho + self.shift) * self.g_tilde(rho)

    def _integrals(self, rho: np.ndarray):
        """int_rho^oo Gt * (sinh(k d)/k, cosh(k d), C^3 (sigma + s)) dsigma, d = sigma - rho."""
        rho = np.atleast_1d(np.asarray(rho, dtype=float))
        k = self.k
        c3 = self.rotation ** 3
        out = np.zeros((3, rho.size), dtype=complex)
        live = rho < self.rho_max
        if not np.any(live):
            return out
        r0 = rho[live][:, None]
        # partial panel [rho, next edge] ...
        x, w = np.polynomial.legendre.leggauss(_PANEL_NODES)
        j = np.searchsorted(self._edges, r0[:, 0], side="right")
        hi = np.where(j < self._edges.size, self._edges[np.minimum(j, self._edges.size - 1)],
                      self.rho_max)[:, None]
        s_p = 0.5 * (hi - r0) * x + 0.5 * (hi + r0)
        w_p = 0.5 * (hi - r0) * w
        g_p = self.g_tilde(s_p) * w_p
        # ... plus every tabulated panel that starts at or after that edge
        panel = np.arange(self._sigma.size) // _PANEL_NODES
        mask = panel[None, :] > j[:, None]
        g_f = np.where(mask, self._gt * self._weights, 0.0)
        d_p = s_p - r0
        d_f = self._sigma[None, :] - r0
        out[0, live] = (np.sum(g_p * np.sinh(k * d_p), 1) + np.sum(g_f * np.sinh(k * d_f), 1)) / k
        out[1, live] = np.sum(g_p * np.cosh(k * d_p), 1) + np.sum(g_f * np.cosh(k * d_f), 1)
        out[2, live] = c3 * (np.sum(g_p * (s_p + self.shift), 1)
                             + np.sum(g_f * (self._sigma + self.shift)[None, :], 1))
        return out

    def derivatives(self, rho, order: int = 4) -> np.ndarray:
        """Array of shape (order + 1, len(rho)) holding G, G', ..., G^(order)."""
        if not 0 <= order <= 4:
            raise UsageError("derivatives up to order 4 are available")
        rho = np.atleast_1d(np.asarray(rho, dtype=float))
        if np.any(rho < 0):
            raise UsageError("layer profile is defined for rho >= 0")
        return self._derivatives(rho, order)

    def _derivatives(self, rho: np.ndarray, order: int) -> np.ndarray:
        ints = self._integrals(rho)
        k2 = self.k ** 2
        G = ints[0]
        G1 = -ints[1]
        gt = self.g_tilde(rho)
        G2 = gt + k2 * G
        G3 = -ints[2] + k2 * G1                # Gt' = -int Gt''
        G4 = self._airy_slope_term(rho) + k2 * G2
        return np.array([G, G1, G2, G3, G4])[: order + 1]

    def __call__(self, rho):
        """(G, G', G'') at ``rho``."""
        d = self.derivatives(rho, 2)
        if np.ndim(rho) == 0:
            return complex(d[0, 0]), complex(d[1, 0]), complex(d[2, 0])
        return d[0], d[1], d[2]

    def ode_residual(self, rho, h: float = 1e-2) -> np.ndarray:
        """|G'' - k^2 G - Gt| with G'' from a five-point difference of G values.

        Independent of the closed-form second derivative used elsewhere, so it
        measures the quadrature error of the layer integral.
        """
        rho = np.atleast_1d(np.asarray(rho, dtype=float))
        off = np.array([-2.0, -1.0, 0.0, 1.0, 2.0]) * h
        vals = self._derivatives((rho[:, None] + off).ravel(), 0)[0].reshape(rho.size, 5)
        G2 = vals @ np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / (12.0 * h * h)
        return np.abs(G2 - self.k ** 2 * vals[:, 2] - self.g_tilde(rho))

    def decay_constant(self, sigma_cal: float = SIGMA_CAL, samples: int = 400) -> float:
        """sup over rho >= sigma_cal of e^rho max_k |G^(k)(rho)|, k <= 3."""
        rho = np.linspace(sigma_cal, self.rho_max, samples)
        d = self.derivatives(rho, 3)
        return float(np.max(np.exp(rho) * np.max(np.abs(d), axis=0)))


def layer_profile(params: FlowParams, *, check_regime: bool = True) -> LayerProfile:
    """Build the layer profile for ``params`` (intermediate regime required)."""
    if check_regime:
        _check_intermediate(params)
    b = beta(params)
    k = abs(params.xi) / b
    sgn = 1.0 if params.xi > 0 else -1.0
    rotation = np.exp(sgn * 1j * np.pi / 6.0)
    shift = -sgn * 1j * k * k                  # pi |beta| xi / (4 i Phi)
    # integrate while |C (rho + s)| stays in the validated Airy range
    rho_max = min(max(3.0 * b, SIGMA_CAL + 40.0), _AIRY_LIMIT - abs(shift))
    edges = np.arange(1.0, np.floor(rho_max) + 1.0)
    lows = np.concatenate([[0.0], edges[:-1]])
    x, w = np.polynomial.legendre.leggauss(_PANEL_NODES)
    sigma = (0.5 * (edges - lows)[:, None] * x + 0.5 * (edges + lows)[:, None]).ravel()
    weights = (0.5 * (edges - lows)[:, None] * w).ravel()
    gt = airy_ai(rotation * (sigma + shift))
    # drop the negligible tail
    mag = np.abs(gt).reshape(edges.size, _PANEL_NODES).max(axis=1)
    keep = np.nonzero(mag > _TAIL_REL * mag.max())[0]
    last = int(keep[-1]) + 1 if keep.size else 1
    rho_max = float(edges[last - 1])
    edges = edges[:last]
    m = last * _PANEL_NODES
    return LayerProfile(params, b, k, complex(rotation), complex(shift), rho_max,
                        sigma[:m], weights[:m], gt[:m], edges)


def c0(params: FlowParams, profile: LayerProfile) -> complex:
    """Normalisation 1/G(0) if |G(0)| >= 1, else 1, so |c0 G(0)| <= 1."""
    g0 = profile.derivatives(np.array([0.0]), 0)[0, 0]
    return complex(1.0 / g0) if abs(g0) >= 1.0 else 1.0 + 0.0j


# ---------------------------------------------------------------------------
# cut-off and Taylor jets

_JET = 4


def _jet_mul(a, b):
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape), dtype=np.result_type(a, b))
    for k in range(_JET + 1):
        for j in range(k + 1):
            out[k] += a[j] * b[k - j]
    return out


def _jet_recip(a):
    out = np.zeros_like(a)
    out[0] = 1.0 / a[0]
    for k in range(1, _JET + 1):
        acc = sum(a[j] * out[k - j] for j in range(1, k + 1))
        out[k] = -acc / a[0]
    return out


def _jet_exp(a):
    out = np.zeros_like(a)
    out[0] = np.exp(a[0])
    for k in range(1, _JET + 1):
        out[k] = sum(j * a[j] * out[k - j] for j in range(1, k + 1)) / k
    return out


def _bump_jet(t):
    """Jet of exp(-1/t) (zero for t <= 1e-3, where it underflows anyway)."""
    t = np.asarray(t, dtype=float)
    jet = np.zeros((_JET + 1, t.size))
    live = t > 1e-3
    if np.any(live):
        tj = np.zeros((_JET + 1, int(live.sum())))
        tj[0] = t[live]
        tj[1] = 1.0
        jet[:, live] = _jet_exp(-_jet_recip(tj))
    return jet


def _cutoff_jet(r) -> np.ndarray:
    """Taylor coefficients in r of chi(r) = S(4 r - 1), S(t) = e(t)/(e(t) + e(1 - t))."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    t = 4.0 * r - 1.0
    jet = np.zeros((_JET + 1, r.size))
    jet[0] = (t >= 1.0).astype(float)
    mid = (t > 0.0) & (t < 1.0)
    if np.any(mid):
        tm = t[mid]
        a = _bump_jet(tm)
        b = _bump_jet(1.0 - tm)
        b[1::2] *= -1.0                        # jet of e(1 - t) in t
        s = _jet_mul(a, _jet_recip(a + b))
        scale = 4.0 ** np.arange(_JET + 1)     # t = 4 r - 1
        jet[:, mid] = s * scale[:, None]
    return jet


def cutoff(r, derivative: int = 0) -> np.ndarray:
    """Smooth cut-off chi (0 for r <= 1/4, 1 for r >= 1/2) or one of its derivatives."""
    if not 0 <= derivative <= _JET:
        raise UsageError("cut-off derivatives up to order 4 are available")
    jet = _cutoff_jet(r)
    return jet[derivative] * factorial(derivative)


def _layer_jet(profile: LayerProfile, norm: complex, r) -> np.ndarray:
    """Taylor coefficients in r of psi_BL(r) = c0 G(|beta| (1 - r))."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    d = profile.derivatives(profile.beta * (1.0 - r), 4)
    m = np.arange(_JET + 1)
    fact = np.array([factorial(j) for j in m], dtype=float)
    return norm * d * ((-profile.beta) ** m / fact)[:, None]


def _derivs(jet) -> list:
    return [jet[j] * factorial(j) for j in range(_JET + 1)]


def _approx_op(w, r, params: FlowParams):
    """Wall-layer operator At Ht w with At = i (4 xi Phi/pi)(1 - r) - D^2 + xi^2, Ht = D^2 - xi^2."""
    w0, w1, w2, w3, w4 = _derivs(w)
    xi2 = params.xi ** 2
    kappa = 4.0 * params.xi * params.phi / np.pi
    return 1j * kappa * (1.0 - r) * (w2 - xi2 * w0) - (w4 - 2.0 * xi2 * w2 + xi2 * xi2 * w0)


def _full_op(w, r, params: FlowParams):
    """i xi U (L - xi^2) w - (L - xi^2)^2 w for r > 0."""
    w0, w1, w2, w3, w4 = _derivs(w)
    xi2 = params.xi ** 2
    Lw = w2 + w1 / r - w0 / r ** 2
    L2w = w4 + 2.0 * w3 / r - 3.0 * w2 / r ** 2 + 3.0 * w1 / r ** 3 - 3.0 * w0 / r ** 4
    U = params.centre_velocity * (1.0 - r * r)
    return 1j * params.xi * U * (Lw - xi2 * w0) - (L2w - 2.0 * xi2 * Lw + xi2 * xi2 * w0)


def remainder_parts(r, params: FlowParams, profile: LayerProfile, norm: Optional[complex] = None):
    """The two pieces of the remainder forcing at points ``r`` in (0, 1].

    Returns
    -------
    outer : ndarray
        At Ht ((1 - chi) psi_BL), supported in r < 1/2.
    mismatch : ndarray
        (At Ht - A H)(chi psi_BL), the error of the wall-layer operator.
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r <= 0):
        raise UsageError("remainder forcing is evaluated at r > 0")
    if norm is None:
        norm = c0(params, profile)
    lay = _layer_jet(profile, norm, r)
    chi = _cutoff_jet(r)
    one_minus = -chi
    one_minus[0] += 1.0
    inner = _jet_mul(chi, lay)
    outer = _approx_op(_jet_mul(one_minus, lay), r, params)
    mismatch = _approx_op(inner, r, params) - _full_op(inner, r, params)
    return outer, mismatch


def _require_resolution(grid: RadialGrid, b: float) -> None:
    if grid.n < 4.0 * b:
        raise ResolutionError(f"n = {grid.n} cannot resolve a layer with |beta| = {b:.3g} "
                              f"(need n >= {int(np.ceil(4 * b))})")


def remainder_forcing(grid: RadialGrid, params: FlowParams, profile: LayerProfile,
                      norm: Optional[complex] = None):
    """Right-hand side of the remainder problem at the grid nodes (odd ModeField)."""
    _require_resolution(grid, profile.beta)
    outer, mismatch = remainder_parts(grid.nodes, params, profile, norm)
    return grid.field(outer + mismatch, Parity.ODD)


# ---------------------------------------------------------------------------
# decomposition

@dataclass(frozen=True, eq=False)
class BLDecomposition:
    """Four-part decomposition of one no-slip solve.

    Attributes
    ----------
    params : FlowParams
    beta : float
    c0 : complex
    a, b : complex
        Coefficients of I1(|xi| r) and of the layer plus remainder.
    psi_s : ModeSolution
        Slip solution with the given forcing.
    psi_bl : ModeField
        chi psi_BL at the nodes.
    psi_e : ModeField
        Remainder (slip solution cancelling the layer residual).
    reconstruction_rel_err : float
        W_R distance between the assembled and the direct no-slip solutions,
        relative to the latter.
    wall_values : dict
        psi(1), psi'(1) of the reconstruction, the layer values and slopes.
    part_norms : dict
        W_R norms of the four parts (with their coefficients).
    denominator : complex
        Denominator of the coefficient formula for b.
    forcing_norm : float
        ||(F_r, F_z)||, or nan for forcing given through its curl.
    decay_constant : float
        sup_{rho >= SIGMA_CAL} e^rho |G^(k)(rho)|, k <= 3.
    """

    params: FlowParams
    beta: float
    c0: complex
    a: complex
    b: complex
    psi_s: ModeSolution
    psi_bl: object
    psi_e: object
    reconstruction_rel_err: float
    wall_values: dict
    part_norms: dict
    denominator: complex
    forcing_norm: float
    decay_constant: float
    direct: ModeSolution = field(repr=False, default=None)

    @property
    def grid(self) -> RadialGrid:
        return self.psi_s.grid

    def reconstruction(self) -> np.ndarray:
        """Nodal values of psi_s + a I1(|xi| r) + b (chi psi_BL + psi_e)."""
        r = self.grid.nodes
        i1 = bessel_i1(abs(self.params.xi) * r)
        return (self.psi_s.psi_hat.values + self.a * i1
                + self.b * (self.psi_bl.values + self.psi_e.values))

    def scaled_b(self) -> float:
        """|b| (Phi |xi|)^(5/6) / ||F||."""
        return abs(self.b) * (self.params.phi * abs(self.params.xi)) ** (5.0 / 6.0) / self.forcing_norm

    def to_dict(self) -> dict:
        def c(z):
            return [float(np.real(z)), float(np.imag(z))]
        return {
            "phi": self.params.phi, "xi": self.params.xi, "beta": self.beta,
            "c0": c(self.c0), "a": c(self.a), "b": c(self.b),
            "reconstruction_rel_err": self.reconstruction_rel_err,
            "part_norms": self.part_norms,
            "forcing_norm": self.forcing_norm,
            "n": self.grid.n,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _wall_slope(sol: ModeSolution) -> complex:
    """psi'(1) = phi(1) + phi'(1) from the lifted representation."""
    p = sol.rep.profiles(np.array([1.0]))
    return complex(p["phi"][0] + p["dphi"][0])


def _wr_norm(grid: RadialGrid, values: np.ndarray) -> float:
    w = grid.weights(WeightKind.W_R, Parity.ODD)
    return float(np.sqrt(max(float(w @ np.abs(values) ** 2), 0.0)))


def _decompose_on(g: RadialGrid, params: FlowParams, forcing: ForcingMode, profile, norm):
    f = forcing if forcing.grid is g else forcing.resample(g)
    kw = dict(max_doublings=0)
    psi_s = solve_stream(g, params, f, BoundaryKind.SLIP, **kw)
    fe = remainder_forcing(g, params, profile, norm)
    psi_e = solve_stream(g, params, ForcingMode.from_curl(fe), BoundaryKind.SLIP, tol=REMAINDER_TOL, **kw)
    direct = solve_stream(g, params, f, BoundaryKind.NOSLIP, **kw)
    return psi_s, psi_e, direct


def decompose(grid: RadialGrid, params: FlowParams, forcing: ForcingMode, *,
              max_doublings: int = 3) -> BLDecomposition:
    """Four-part decomposition of the no-slip solve and its validation.

    The slip, remainder and direct no-slip problems are solved on a common
    grid (doubled up to ``max_doublings`` times until every residual meets
    the solver tolerance).

    Raises
    ------
    UsageError
        Outside the intermediate band or for Phi below MIN_FLUX.
    ResolutionError
        If n < 4 |beta|.
    DegeneracyError
        If the denominator of the coefficient formula is below 1e-12 |beta|.
    """
    _check_intermediate(params)
    if params.phi < MIN_FLUX:
        raise UsageError(f"layer decomposition is used for Phi >= {MIN_FLUX:g}")
    profile = layer_profile(params)
    b_scale = profile.beta
    _require_resolution(grid, b_scale)
    norm = c0(params, profile)
    last = None
    for level in range(max_doublings + 1):
        g = grid if level == 0 else grid_of_size(grid.n * 2 ** level)
        try:
            psi_s, psi_e, direct = _decompose_on(g, params, forcing, profile, norm)
            break
        except SolverError as exc:
            last = exc
    else:
        raise last
    ax = abs(params.xi)
    i1, i1p = bessel_i1(ax), bessel_i1_prime(ax)
    G = profile.derivatives(np.array([0.0]), 1)[:, 0]
    bl_wall = norm * G[0]
    bl_slope = -b_scale * norm * G[1]
    s_slope = _wall_slope(psi_s)
    e_slope = _wall_slope(psi_e)
    denom = bl_wall * ax * i1p - (bl_slope + e_slope) * i1
    if abs(denom) < DEGENERACY_TOL * b_scale:
        raise DegeneracyError(f"coefficient system degenerate (|denominator| = {abs(denom):.3e}); "
                              "the frequency band is too wide")
    bcoef = s_slope * i1 / denom
    acoef = -bcoef * bl_wall / i1
    r = g.nodes
    chi_bl = g.field(cutoff(r) * norm * profile.derivatives(b_scale * (1.0 - r), 0)[0], Parity.ODD)
    i1r = bessel_i1(ax * r)
    psi = psi_s.psi_hat.values + acoef * i1r + bcoef * (chi_bl.values + psi_e.psi_hat.values)
    ref = direct.psi_hat.values
    err = _wr_norm(g, psi - ref) / max(_wr_norm(g, ref), 1e-300)
    wall = {
        "psi": complex(acoef * i1 + bcoef * bl_wall),
        "dpsi": complex(s_slope + acoef * ax * i1p + bcoef * (bl_slope + e_slope)),
        "layer": complex(bl_wall), "layer_slope": complex(bl_slope),
        "slip_slope": s_slope, "remainder_slope": e_slope,
    }
    parts = {
        "slip": _wr_norm(g, psi_s.psi_hat.values),
        "bessel": _wr_norm(g, acoef * i1r),
        "layer": _wr_norm(g, bcoef * chi_bl.values),
        "remainder": _wr_norm(g, bcoef * psi_e.psi_hat.values),
    }
    try:
        fnorm = float(np.sqrt(forcing.meridional_norm_sq()))
    except UsageError:
        fnorm = float("nan")
    return BLDecomposition(params, b_scale, norm, complex(acoef), complex(bcoef), psi_s, chi_bl,
                           psi_e.psi_hat, float(err), wall, parts, complex(denom), fnorm,
                           profile.decay_constant(), direct)


def worst_wall_forcing(grid: RadialGrid, params: FlowParams) -> ForcingMode:
    """Unit forcing maximising the slip wall slope |psi_s'(1)|.

    Since b is proportional to psi_s'(1) with a forcing-independent factor,
    this forcing also maximises |b| / ||F||.
    """
    resp = MeridionalResponse(grid, params, BoundaryKind.SLIP)
    fr, fz, _ = resp.representer(resp.wall_slope_functional())
    return ForcingMode.from_components(grid, fr, fz)
