"""Per-frequency linear solves around Hagen-Poiseuille flow.

For one axial wavenumber xi the meridional perturbation is described by a
stream function psi(r) solving

    i xi U(r) (L - xi^2) psi - (L - xi^2)^2 psi = f,    U(r) = (2 Phi/pi)(1 - r^2),

with psi(1) = psi'(1) = 0 (no-slip) or psi(1) = L psi(1) = 0 (slip), and the
swirl component solves i xi U v - (L - xi^2) v = F_theta with v(1) = 0.

Discretisation
--------------
With psi = r phi the unknown of the fourth-order problem is chi = Delta4^2 phi
at the grid nodes; phi = K K chi + alpha + beta r^2 where K inverts Delta4
(see :class:`pipeflow.grid.LiftTables`).  The equation is collocated at every
node and the boundary conditions fix alpha and beta.  No derivative of a
sampled profile is ever taken, so the residual can be evaluated to near
machine precision; it is measured between the collocation nodes (on the nodes
of the doubled grid), where it reflects the truncation error.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from functools import lru_cache
from typing import Optional

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

from .errors import DomainError, NumericalError, SolverError, UsageError, ValidationError
from .grid import (ModeField, OperatorKind, Parity, RadialGrid, WeightKind,
                   apply_operator, build_grid, chebyshev_eval_matrix, gauss_radial,
                   interpolant_norm_sq)

__all__ = [
    "BoundaryKind",
    "FlowParams",
    "ForcingMode",
    "StreamRep",
    "SwirlRep",
    "ModeSolution",
    "GalerkinBasis",
    "u_bar",
    "grid_of_size",
    "solve_stream",
    "solve_swirl",
    "solve_mode",
    "galerkin_basis",
    "solve_stream_galerkin",
    "derive_velocity",
    "residual_norm",
    "swirl_residual_norm",
    "stream_operator",
    "swirl_operator",
    "RESIDUAL_TOL",
]

RESIDUAL_TOL = 1e-9
MAX_DOUBLINGS = 2
_EPS_GUARD = 1e-300


class BoundaryKind(Enum):
    NOSLIP = "noslip"
    SLIP = "slip"


@dataclass(frozen=True)
class FlowParams:
    """Flux ``phi`` (>= 0) of the base flow and axial wavenumber ``xi``."""

    phi: float
    xi: float

    def __post_init__(self):
        if not np.isfinite(self.phi) or self.phi < 0:
            raise ValidationError(f"flux phi must be finite and >= 0, got {self.phi}")
        if not np.isfinite(self.xi):
            raise ValidationError(f"wavenumber xi must be finite, got {self.xi}")
        object.__setattr__(self, "phi", float(self.phi))
        object.__setattr__(self, "xi", float(self.xi))

    @property
    def centre_velocity(self) -> float:
        return 2.0 * self.phi / np.pi


def u_bar(params: FlowParams, r):
    """Hagen-Poiseuille profile (2 Phi/pi)(1 - r^2)."""
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0) or np.any(arr > 1):
        raise DomainError("u_bar is defined for r in [0, 1]")
    out = params.centre_velocity * (1.0 - arr * arr)
    return float(out) if np.ndim(r) == 0 else out


@lru_cache(maxsize=32)
def grid_of_size(n: int) -> RadialGrid:
    """Cached grid constructor used for refinement and residual checks."""
    return build_grid(n)


def _same_grid(a: RadialGrid, b: RadialGrid) -> bool:
    return a is b


# ---------------------------------------------------------------------------
# forcing

@dataclass(frozen=True, eq=False)
class ForcingMode:
    """Fourier coefficients of a body force at one wavenumber.

    Either the three velocity-space components are given, or the curl ``f``
    (the right-hand side of the stream-function equation) directly.

    Notes
    -----
    The azimuthal vorticity of the force is
    f = dF_r/dz - dF_z/dr, i.e. f_hat = i xi F_r - dF_z/dr.
    """

    fr_hat: Optional[ModeField] = None
    fz_hat: Optional[ModeField] = None
    ftheta_hat: Optional[ModeField] = None
    curl_hat: Optional[ModeField] = None

    def __post_init__(self):
        fields = [f for f in (self.fr_hat, self.fz_hat, self.ftheta_hat, self.curl_hat) if f is not None]
        if not fields:
            raise ValidationError("forcing needs at least one component")
        g = fields[0].grid
        for f in fields:
            if f.grid is not g:
                raise UsageError("forcing components live on different grids")
            if not np.all(np.isfinite(f.values)):
                raise ValidationError("forcing contains NaN or Inf")
        expected = {"fr_hat": Parity.ODD, "fz_hat": Parity.EVEN,
                    "ftheta_hat": Parity.ODD, "curl_hat": Parity.ODD}
        for name, par in expected.items():
            f = getattr(self, name)
            if f is not None and f.parity is not par:
                raise UsageError(f"{name} must have {par.value} parity")

    @property
    def grid(self) -> RadialGrid:
        for f in (self.fr_hat, self.fz_hat, self.ftheta_hat, self.curl_hat):
            if f is not None:
                return f.grid
        raise AssertionError

    @classmethod
    def from_components(cls, grid: RadialGrid, fr=None, fz=None, ftheta=None) -> "ForcingMode":
        """Build from callables of r or arrays of nodal values (None = zero)."""
        def make(obj, parity):
            if obj is None:
                return grid.field(np.zeros(grid.n), parity)
            if callable(obj):
                return grid.sample(obj, parity)
            return grid.field(obj, parity)
        return cls(make(fr, Parity.ODD), make(fz, Parity.EVEN), make(ftheta, Parity.ODD))

    @classmethod
    def from_curl(cls, f_hat: ModeField, ftheta_hat: Optional[ModeField] = None) -> "ForcingMode":
        return cls(curl_hat=f_hat, ftheta_hat=ftheta_hat)

    def f_hat(self, xi: float) -> ModeField:
        """Right-hand side of the stream-function equation."""
        g = self.grid
        if self.curl_hat is not None:
            return self.curl_hat
        out = np.zeros(g.n, dtype=complex)
        if self.fr_hat is not None:
            out += 1j * xi * self.fr_hat.values
        if self.fz_hat is not None:
            out -= apply_operator(g, OperatorKind.D, self.fz_hat).values
        return g.field(out, Parity.ODD)

    def theta(self) -> ModeField:
        g = self.grid
        return self.ftheta_hat if self.ftheta_hat is not None else g.field(np.zeros(g.n), Parity.ODD)

    def meridional_norm_sq(self) -> float:
        """sum over (F_r, F_z) of int |F|^2 r dr (exact for the interpolants)."""
        if self.fr_hat is None and self.fz_hat is None:
            raise UsageError("forcing given only through its curl")
        return float(sum(interpolant_norm_sq(self.grid, f) for f in (self.fr_hat, self.fz_hat)
                         if f is not None))

    def norm_sq(self) -> float:
        """int (|F_r|^2 + |F_z|^2 + |F_theta|^2) r dr."""
        return self.meridional_norm_sq() + interpolant_norm_sq(self.grid, self.theta())

    def resample(self, other: RadialGrid) -> "ForcingMode":
        g = self.grid
        if other is g:
            return self
        conv = {name: (None if getattr(self, name) is None else g.resample(getattr(self, name), other))
                for name in ("fr_hat", "fz_hat", "ftheta_hat", "curl_hat")}
        return ForcingMode(**conv)

    def scaled(self, factor: complex) -> "ForcingMode":
        conv = {name: (None if getattr(self, name) is None else getattr(self, name) * factor)
                for name in ("fr_hat", "fz_hat", "ftheta_hat", "curl_hat")}
        return ForcingMode(**conv)


# ---------------------------------------------------------------------------
# lifted representations

@dataclass(frozen=True, eq=False)
class StreamRep:
    """psi = r phi with phi = K K chi + alpha + beta r^2 and chi = Delta4^2 phi."""

    grid: RadialGrid
    chi: np.ndarray
    alpha: complex
    beta: complex

    def _coef(self, which: str) -> np.ndarray:
        return getattr(self.grid.lift, "coef_" + which) @ self.chi

    def profiles(self, r=None) -> dict:
        """phi, phi', Delta4 phi, (Delta4 phi)' and chi at nodes or at points ``r``."""
        g = self.grid
        if r is None:
            r = g.nodes
            lift = g.lift
            k2 = lift.k2_nodes @ self.chi
            k2p = lift.k2p_nodes @ self.chi
            k1 = lift.k_nodes @ self.chi
            kp = lift.kp_nodes @ self.chi
            chi = self.chi.astype(complex)
        else:
            r = np.asarray(r, dtype=float)
            T = chebyshev_eval_matrix(r, g.lift.length)
            k2 = T @ self._coef("k2")
            k2p = T @ self._coef("k2p")
            k1 = T @ self._coef("k")
            kp = T @ self._coef("kp")
            chi = T @ self._coef("h")
        return {
            "r": r,
            "phi": k2 + self.alpha + self.beta * r * r,
            "dphi": k2p + 2.0 * self.beta * r,
            "d4phi": k1 + 8.0 * self.beta,
            "d4phi_p": kp,
            "chi": chi,
        }


@dataclass(frozen=True, eq=False)
class SwirlRep:
    """v = r phi with phi = K chi and chi = Delta4 phi (so v(1) = 0)."""

    grid: RadialGrid
    chi: np.ndarray

    def profiles(self, r=None) -> dict:
        g = self.grid
        if r is None:
            r = g.nodes
            phi = g.lift.k_nodes @ self.chi
            dphi = g.lift.kp_nodes @ self.chi
            chi = self.chi.astype(complex)
        else:
            r = np.asarray(r, dtype=float)
            T = chebyshev_eval_matrix(r, g.lift.length)
            phi = T @ (g.lift.coef_k @ self.chi)
            dphi = T @ (g.lift.coef_kp @ self.chi)
            chi = T @ (g.lift.coef_h @ self.chi)
        return {"r": r, "phi": phi, "dphi": dphi, "chi": chi}


@dataclass(frozen=True, eq=False)
class ModeSolution:
    """Solution of one per-frequency problem.

    Attributes
    ----------
    psi_hat : ModeField
        Stream function (odd).
    vr_hat, vz_hat, omega_hat : ModeField or None
        i xi psi, -(1/r) d(r psi)/dr and (L - xi^2) psi, filled by
        :func:`derive_velocity`.
    vtheta_hat : ModeField or None
        Swirl velocity when a swirl solve was performed.
    bc_kind : BoundaryKind
    params : FlowParams
    rep, swirl_rep :
        Lifted integral representations (None for solutions built from samples).
    condition : float
        1-norm condition estimate of the collocation system.
    residual : float
        Relative residual measured by :func:`residual_norm`.
    """

    psi_hat: ModeField
    bc_kind: BoundaryKind
    params: FlowParams
    vr_hat: Optional[ModeField] = None
    vz_hat: Optional[ModeField] = None
    omega_hat: Optional[ModeField] = None
    vtheta_hat: Optional[ModeField] = None
    rep: Optional[StreamRep] = None
    swirl_rep: Optional[SwirlRep] = None
    condition: float = float("nan")
    residual: float = float("nan")

    @property
    def grid(self) -> RadialGrid:
        return self.psi_hat.grid

    @classmethod
    def from_lifted(cls, grid: RadialGrid, params: FlowParams, chi, bc: BoundaryKind) -> "ModeSolution":
        """Solution whose lifted fourth derivative chi = Delta4^2 phi is given.

        The homogeneous part is fixed by the boundary conditions ``bc``.
        """
        chi = np.asarray(chi, dtype=complex) * np.ones(grid.n)
        beta = _beta_from_bc(grid, chi, bc)
        rep = StreamRep(grid, chi, -beta, beta)
        return derive_velocity(cls(_psi_from_rep(rep), bc, params, rep=rep))

    @classmethod
    def from_samples(cls, psi_hat: ModeField, params: FlowParams, bc: BoundaryKind) -> "ModeSolution":
        """Solution defined only by nodal values (derivatives by differentiation matrices)."""
        return derive_velocity(cls(psi_hat, bc, params))


def _beta_from_bc(grid: RadialGrid, chi: np.ndarray, bc: BoundaryKind) -> complex:
    if bc is BoundaryKind.SLIP:
        return 0.0
    return complex(-0.5 * (grid.lift.k2p_wall @ chi))


def _psi_from_rep(rep: StreamRep) -> ModeField:
    p = rep.profiles()
    return rep.grid.field(rep.grid.nodes * p["phi"], Parity.ODD)


# ---------------------------------------------------------------------------
# collocation systems

def _rcond(lu_piv, anorm: float) -> float:
    lu, _ = lu_piv
    func = lapack.zgecon if np.iscomplexobj(lu) else lapack.dgecon
    rc, info = func(lu, anorm, norm="1")
    return float(rc)


def stream_operator(grid: RadialGrid, params: FlowParams, bc: BoundaryKind) -> np.ndarray:
    """Collocation matrix acting on the unknowns (chi, beta).

    The first n rows are the equation divided by r at the nodes, the last row
    is the wall condition: (K K chi)'(1) + 2 beta = 0 for no-slip and beta = 0
    for slip (alpha = -beta always gives psi(1) = 0).
    """
    xi = params.xi
    r = grid.nodes
    U = params.centre_velocity * (1.0 - r * r)
    lift = grid.lift
    K1, K2 = lift.k_nodes, lift.k2_nodes
    n = grid.n
    xi2 = xi * xi
    s = r * r - 1.0
    A = np.zeros((n + 1, n + 1), dtype=complex)
    A[:n, :n] = (1j * xi) * U[:, None] * (K1 - xi2 * K2) - (np.eye(n) - 2.0 * xi2 * K1 + xi2 * xi2 * K2)
    A[:n, n] = (1j * xi) * U * (8.0 - xi2 * s) - (-16.0 * xi2 + xi2 * xi2 * s)
    if bc is BoundaryKind.NOSLIP:
        A[n, :n] = lift.k2p_wall
        A[n, n] = 2.0
    else:
        A[n, n] = 1.0
    return A


def swirl_operator(grid: RadialGrid, params: FlowParams) -> np.ndarray:
    """Collocation matrix of the swirl equation divided by r, acting on chi = Delta4 phi."""
    r = grid.nodes
    U = params.centre_velocity * (1.0 - r * r)
    K1 = grid.lift.k_nodes
    return (1j * params.xi) * U[:, None] * K1 - np.eye(grid.n) + params.xi ** 2 * K1


def _solve_stream_once(grid, params, f_hat: ModeField, bc):
    A = stream_operator(grid, params, bc)
    rhs = np.zeros(A.shape[0], dtype=complex)
    rhs[:grid.n] = f_hat.values / grid.nodes
    lu = sla.lu_factor(A, check_finite=False)
    cond = 1.0 / max(_rcond(lu, np.linalg.norm(A, 1)), 1e-300)
    x = sla.lu_solve(lu, rhs)
    if not np.all(np.isfinite(x)):
        raise SolverError("stream-function solve produced non-finite values", cond)
    chi = x[:grid.n]
    beta = complex(x[grid.n])
    return StreamRep(grid, chi, -beta, beta), cond


def _check_points(grid: RadialGrid) -> RadialGrid:
    return grid_of_size(2 * grid.n)


def _stream_lhs(rep: StreamRep, params: FlowParams, r=None) -> np.ndarray:
    """i xi U (L - xi^2) psi - (L - xi^2)^2 psi at nodes or points ``r``."""
    p = rep.profiles(r)
    rr = p["r"]
    xi2 = params.xi ** 2
    U = params.centre_velocity * (1.0 - rr * rr)
    H = p["d4phi"] - xi2 * p["phi"]
    HH = p["chi"] - 2.0 * xi2 * p["d4phi"] + xi2 * xi2 * p["phi"]
    return rr * ((1j * params.xi) * U * H - HH)


def _weighted_rel(check: RadialGrid, resid: np.ndarray, ref: np.ndarray) -> float:
    w = check.weights(WeightKind.W_R, Parity.EVEN)
    num = np.sqrt(max(float(w @ np.abs(resid) ** 2), 0.0))
    den = np.sqrt(max(float(w @ np.abs(ref) ** 2), 0.0))
    return num / max(den, _EPS_GUARD)


def residual_norm(sol: ModeSolution, forcing: ForcingMode) -> float:
    """Relative W_R residual of the stream-function equation.

    For solutions carrying a lifted representation the residual is evaluated
    on the nodes of the doubled grid, i.e. between the collocation points.
    Solutions built from samples fall back to differentiation matrices, whose
    round-off grows like n^8 machine epsilon for the fourth-order operator.
    """
    g = sol.grid
    f = forcing.resample(g).f_hat(sol.params.xi) if forcing.grid is not g else forcing.f_hat(sol.params.xi)
    if sol.rep is not None:
        check = _check_points(g)
        lhs = _stream_lhs(sol.rep, sol.params, check.nodes)
        fc = g.evaluate(f, check.nodes)
        return _weighted_rel(check, lhs - fc, fc)
    params = sol.params
    xi2 = params.xi ** 2
    psi = sol.psi_hat
    Lpsi = apply_operator(g, OperatorKind.L, psi).values
    L2psi = apply_operator(g, OperatorKind.L2, psi).values
    U = params.centre_velocity * (1.0 - g.nodes ** 2)
    lhs = 1j * params.xi * U * (Lpsi - xi2 * psi.values) - (L2psi - 2 * xi2 * Lpsi + xi2 * xi2 * psi.values)
    w = g.weights(WeightKind.W_R, Parity.EVEN)
    num = np.sqrt(float(w @ np.abs(lhs - f.values) ** 2))
    den = np.sqrt(float(w @ np.abs(f.values) ** 2))
    return num / max(den, _EPS_GUARD)


def solve_stream(grid: RadialGrid, params: FlowParams, forcing: ForcingMode,
                 bc: BoundaryKind = BoundaryKind.NOSLIP, *, tol: float = RESIDUAL_TOL,
                 max_doublings: int = MAX_DOUBLINGS) -> ModeSolution:
    """Solve the stream-function equation for one wavenumber.

    Parameters
    ----------
    grid : RadialGrid
        Starting resolution.  If the residual exceeds ``tol`` the resolution is
        doubled (at most ``max_doublings`` times) and the returned solution
        lives on the finer grid.
    params : FlowParams
    forcing : ForcingMode
    bc : BoundaryKind

    Returns
    -------
    ModeSolution
        With velocities and vorticity filled in.

    Raises
    ------
    SolverError
        If the residual still exceeds ``tol`` after refinement.
    """
    if forcing.grid is not grid:
        raise UsageError("forcing lives on a different grid")
    bc = BoundaryKind(bc)
    f0 = forcing.f_hat(params.xi)
    g = grid
    last = None
    for level in range(max_doublings + 1):
        if level:
            g = grid_of_size(grid.n * 2 ** level)
        f = f0 if g is grid else grid.resample(f0, g)
        rep, cond = _solve_stream_once(g, params, f, bc)
        sol = ModeSolution(_psi_from_rep(rep), bc, params, rep=rep, condition=cond)
        res = residual_norm(sol, ForcingMode.from_curl(f))
        sol = replace(sol, residual=res)
        if res <= tol:
            return derive_velocity(sol)
        last = (res, cond)
    raise SolverError(
        f"stream-function residual {last[0]:.3e} exceeds {tol:.1e} at n = {g.n} "
        f"(condition estimate {last[1]:.3e})", last[1])


def _solve_swirl_once(grid, params, ftheta: ModeField):
    A = swirl_operator(grid, params)
    lu = sla.lu_factor(A, check_finite=False)
    cond = 1.0 / max(_rcond(lu, np.linalg.norm(A, 1)), 1e-300)
    chi = sla.lu_solve(lu, ftheta.values / grid.nodes)
    if not np.all(np.isfinite(chi)):
        raise SolverError("swirl solve produced non-finite values", cond)
    return SwirlRep(grid, chi), cond


def _swirl_lhs(rep: SwirlRep, params: FlowParams, r=None) -> np.ndarray:
    p = rep.profiles(r)
    rr = p["r"]
    U = params.centre_velocity * (1.0 - rr * rr)
    return rr * ((1j * params.xi) * U * p["phi"] - p["chi"] + params.xi ** 2 * p["phi"])


def swirl_residual_norm(rep: SwirlRep, params: FlowParams, ftheta: ModeField) -> float:
    """Relative W_R residual of the swirl equation between collocation nodes."""
    g = rep.grid
    f = ftheta if ftheta.grid is g else ftheta.grid.resample(ftheta, g)
    check = _check_points(g)
    lhs = _swirl_lhs(rep, params, check.nodes)
    fc = g.evaluate(f, check.nodes)
    return _weighted_rel(check, lhs - fc, fc)


def solve_swirl(grid: RadialGrid, params: FlowParams, ftheta_hat: ModeField, *,
                tol: float = RESIDUAL_TOL, max_doublings: int = MAX_DOUBLINGS,
                return_rep: bool = False):
    """Solve i xi U v - (L - xi^2) v = F_theta with v(1) = 0.

    Returns the swirl velocity as a ModeField (on the refined grid if the
    residual check required refinement); with ``return_rep`` also the lifted
    representation and the condition estimate.
    """
    if ftheta_hat.grid is not grid:
        raise UsageError("forcing lives on a different grid")
    if not np.all(np.isfinite(ftheta_hat.values)):
        raise ValidationError("forcing contains NaN or Inf")
    g = grid
    last = None
    for level in range(max_doublings + 1):
        if level:
            g = grid_of_size(grid.n * 2 ** level)
        f = ftheta_hat if g is grid else grid.resample(ftheta_hat, g)
        rep, cond = _solve_swirl_once(g, params, f)
        res = swirl_residual_norm(rep, params, f)
        if res <= tol:
            v = g.field(g.nodes * rep.profiles()["phi"], Parity.ODD)
            return (v, rep, cond) if return_rep else v
        last = (res, cond)
    raise SolverError(
        f"swirl residual {last[0]:.3e} exceeds {tol:.1e} at n = {g.n} "
        f"(condition estimate {last[1]:.3e})", last[1])


def solve_mode(grid: RadialGrid, params: FlowParams, forcing: ForcingMode,
               bc: BoundaryKind = BoundaryKind.NOSLIP) -> ModeSolution:
    """Stream-function and swirl solves for one wavenumber on a common grid."""
    sol = solve_stream(grid, params, forcing, bc)
    v, rep, cond = solve_swirl(grid, params, forcing.theta(), return_rep=True)
    # both solves refine independently; bring them to the finer grid
    if rep.grid.n > sol.grid.n:
        sol = solve_stream(rep.grid, params, forcing.resample(rep.grid), bc, max_doublings=0)
    elif sol.grid.n > rep.grid.n:
        g = sol.grid
        v, rep, cond = solve_swirl(g, params, grid.resample(forcing.theta(), g),
                                   return_rep=True, max_doublings=0)
    return replace(sol, vtheta_hat=v, swirl_rep=rep)


# ---------------------------------------------------------------------------
# derived fields

def derive_velocity(sol: ModeSolution) -> ModeSolution:
    """Fill v_r = i xi psi, v_z = -(1/r) d(r psi)/dr and omega = (L - xi^2) psi."""
    g = sol.grid
    xi = sol.params.xi
    psi = sol.psi_hat
    if sol.rep is not None:
        p = sol.rep.profiles()
        r = g.nodes
        vz = -(2.0 * p["phi"] + r * p["dphi"])
        omega = r * (p["d4phi"] - xi * xi * p["phi"])
        vz_f = g.field(vz, Parity.EVEN)
        om_f = g.field(omega, Parity.ODD)
    else:
        drpsi = apply_operator(g, OperatorKind.D_R_TIMES, psi)
        vz_f = g.field(-drpsi.values / g.nodes, Parity.EVEN)
        om_f = apply_operator(g, OperatorKind.L, psi) - psi * (xi * xi)
    return replace(sol, vr_hat=psi * (1j * xi), vz_hat=vz_f, omega_hat=om_f)


# ---------------------------------------------------------------------------
# Galerkin path

@dataclass(frozen=True, eq=False)
class GalerkinBasis:
    """Eigenfunctions of L^2 with clamped conditions, W_R-orthonormal.

    Attributes
    ----------
    m : int
    functions : list of ModeField
    eigenvalues : ndarray
        Ascending eigenvalues of the clamped L^2 problem.
    chis : ndarray
        Lifted fourth derivatives chi = Delta4^2 (psi / r) of the basis
        functions at the nodes (columns).
    """

    grid: RadialGrid
    m: int
    functions: list
    eigenvalues: np.ndarray
    chis: np.ndarray


def _noslip_maps(grid: RadialGrid, r=None):
    """Linear maps chi -> phi, chi -> Delta4 phi and chi -> chi at ``r`` for clamped profiles.

    psi = r phi, L psi = r Delta4 phi and L^2 psi = r chi.
    """
    lift = grid.lift
    # beta = -k2p_wall . chi / 2 and alpha = -beta
    b = -0.5 * lift.k2p_wall
    if r is None:
        r = grid.nodes
        k2, k1, h = lift.k2_nodes, lift.k_nodes, np.eye(grid.n)
    else:
        T = chebyshev_eval_matrix(r, lift.length)
        k2, k1, h = T @ lift.coef_k2, T @ lift.coef_k, T @ lift.coef_h
    return k2 + np.outer(r * r - 1.0, b), k1 + 8.0 * b[None, :], h


def _galerkin_quadrature(grid: RadialGrid):
    """Gauss-Legendre r dr rule exact for products of two lifted profiles and U.

    Lifted profiles psi have degree <= length, so the integrands have degree
    <= 2 length + 2.
    """
    return gauss_radial(grid.lift.length + 2)


def galerkin_basis(grid: RadialGrid, m: int) -> GalerkinBasis:
    """First ``m`` clamped eigenfunctions of L^2.

    With psi = r phi and chi = Delta4^2 phi, the clamped inverse of L^2 is the
    map chi -> phi of the lifted representation, so its dominant eigenvectors
    give the eigenfunctions without differentiating sampled data.  They are
    then orthonormalised in the exact W_R inner product of the lifted
    profiles (Cholesky, ascending order).
    """
    if m < 1 or m > grid.n - 4:
        raise ValidationError(f"basis size must satisfy 1 <= m <= n - 4, got {m}")
    P_phi, _, _ = _noslip_maps(grid)
    try:
        mu, X = np.linalg.eig(P_phi)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"clamped eigenproblem failed: {exc}") from exc
    order = np.argsort(-np.abs(mu))[:m]
    mu, X = mu[order], X[:, order]
    if np.any(np.abs(mu.imag) > 1e-8 * np.abs(mu)) or np.any(mu.real <= 0):
        raise NumericalError("clamped eigenvalues are not real and positive")
    vals = 1.0 / mu.real
    if np.any(np.diff(vals) <= 0):
        raise NumericalError("clamped eigenvalues are not strictly increasing")
    X = X.real
    q, w = _galerkin_quadrature(grid)
    psi_q = q[:, None] * (_noslip_maps(grid, q)[0] @ X)
    gram = psi_q.T @ (w[:, None] * psi_q)
    try:
        Lc = sla.cholesky(0.5 * (gram + gram.T), lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"basis orthonormalisation failed: {exc}") from exc
    X = sla.solve_triangular(Lc, X.T, lower=True).T
    psi = grid.nodes[:, None] * (P_phi @ X)
    funcs = [grid.field(psi[:, j], Parity.ODD) for j in range(m)]
    return GalerkinBasis(grid, m, funcs, vals, X)


def solve_stream_galerkin(grid: RadialGrid, params: FlowParams, forcing: ForcingMode,
                          basis: GalerkinBasis) -> ModeSolution:
    """Galerkin projection of the no-slip problem onto ``basis``.

    The stiffness and load integrals are evaluated exactly with Gauss-Legendre
    quadrature on the lifted profiles of the basis functions.
    """
    if basis.grid is not grid or forcing.grid is not grid:
        raise UsageError("basis and forcing must live on the given grid")
    xi = params.xi
    xi2 = xi * xi
    q, w = _galerkin_quadrature(grid)
    U = params.centre_velocity * (1.0 - q * q)
    P_phi, P_d4, P_h = _noslip_maps(grid, q)
    C = basis.chis
    psi = q[:, None] * (P_phi @ C)
    lpsi = q[:, None] * (P_d4 @ C)
    l2psi = q[:, None] * (P_h @ C)
    Epsi = (1j * xi) * U[:, None] * (lpsi - xi2 * psi) - (l2psi - 2 * xi2 * lpsi + xi2 * xi2 * psi)
    A = psi.T @ (w[:, None] * Epsi)
    f = grid.evaluate(forcing.f_hat(xi), q)
    rhs = psi.T @ (w * f)
    lu = sla.lu_factor(A)
    cond = 1.0 / max(_rcond(lu, np.linalg.norm(A, 1)), 1e-300)
    c = sla.lu_solve(lu, rhs)
    if not np.all(np.isfinite(c)):
        raise SolverError("Galerkin solve produced non-finite values", cond)
    chi = C @ c
    beta = _beta_from_bc(grid, chi, BoundaryKind.NOSLIP)
    rep = StreamRep(grid, chi, -beta, beta)
    sol = ModeSolution(_psi_from_rep(rep), BoundaryKind.NOSLIP, params, rep=rep, condition=cond)
    sol = replace(sol, residual=residual_norm(sol, forcing))
    return derive_velocity(sol)
