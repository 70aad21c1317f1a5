"""Forcing-to-solution maps and weighted quadratic forms for one wavenumber.

Every norm used by the estimates and the gain scans is a sum of weighted
integrals of |linear functional of the solution|^2.  This module builds those
linear functionals once, either applied to a concrete lifted profile or as
matrices acting on the unknowns of the collocation systems, so that solution
norms, worst-case ratios and operator-norm gains all share one definition.

All integrands are polynomials in r, so norms are evaluated exactly with a
Gauss-Legendre rule; forcing norms are the exact W_R norms of the nodal
interpolants, which keeps grid-scale forcing from being mismeasured.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg as sla

from .errors import ConvergenceError, DegeneracyError, SolverError, UsageError
from .grid import Parity, RadialGrid, chebyshev_eval_matrix, gauss_radial
from .modes import BoundaryKind, FlowParams, _rcond, stream_operator, swirl_operator

__all__ = [
    "STREAM_SEMINORMS",
    "VELOCITY_NORMS",
    "stream_rows",
    "meridional_velocity_rows",
    "swirl_velocity_rows",
    "MeridionalResponse",
    "SwirlResponse",
    "largest_singular_value",
]

STREAM_SEMINORMS = ("L2", "DR", "LPSI", "DLPSI", "L2PSI", "DR_W", "L2_W", "L2_DR")
VELOCITY_NORMS = ("H0", "H1", "H2")


def _rs(v: np.ndarray, m):
    """Row scaling that works for profile vectors and profile maps alike."""
    return v[:, None] * m if np.ndim(m) == 2 else v * m


def stream_rows(p: dict, q: np.ndarray, w_even: np.ndarray, w_odd: np.ndarray) -> dict:
    """Square-root-weighted integrands of the stream-function seminorms.

    For each key the seminorm is the squared 2-norm of the returned array
    (summed over the list entries).  ``p`` holds phi, dphi, d4phi, d4phi_p and
    chi at the points ``q``; psi = r phi.

    Keys
    ----
    L2 : int |psi|^2 r dr
    DR : int |(r psi)'|^2 / r dr
    LPSI : int |L psi|^2 r dr
    DLPSI : int |(r L psi)'|^2 / r dr
    L2PSI : int |L^2 psi|^2 r dr
    DR_W : int (1 - r^2)/r |(r psi)'|^2 dr
    L2_W : int (1 - r^2) |psi|^2 r dr
    L2_DR : int |psi|^2 dr
    """
    se = np.sqrt(w_even)
    bulk = np.sqrt(w_even * (1.0 - q * q))
    phi, dphi, d4, d4p, chi = p["phi"], p["dphi"], p["d4phi"], p["d4phi_p"], p["chi"]
    drpsi = 2.0 * phi + _rs(q, dphi)          # (r psi)' / r
    return {
        "L2": [_rs(se * q, phi)],
        "DR": [_rs(se, drpsi)],
        "LPSI": [_rs(se * q, d4)],
        "DLPSI": [_rs(se, 2.0 * d4 + _rs(q, d4p))],
        "L2PSI": [_rs(se * q, chi)],
        "DR_W": [_rs(bulk, drpsi)],
        "L2_W": [_rs(bulk * q, phi)],
        "L2_DR": [_rs(np.sqrt(w_odd * q), phi)],
    }


def meridional_velocity_rows(p: dict, q: np.ndarray, w_even: np.ndarray, xi: float) -> dict:
    """Cumulative H0, H1, H2 integrands of (v_r, v_z) = (i xi psi, -(r psi)'/r).

    H1 adds |dv/dr|^2, |v_r/r|^2 and xi^2 |v|^2; H2 adds |Delta v|^2 with
    (Delta v)_r = i xi omega and (Delta v)_z = -(r omega)'/r.
    """
    se = np.sqrt(w_even)
    phi, dphi, d4, d4p = p["phi"], p["dphi"], p["d4phi"], p["d4phi_p"]
    ax = abs(xi)
    vr = (1j * xi) * _rs(q, phi)
    vz = -(2.0 * phi + _rs(q, dphi))
    h0 = [_rs(se, vr), _rs(se, vz)]
    dvr = (1j * xi) * (phi + _rs(q, dphi))
    dvz = -_rs(q, d4)
    h1 = h0 + [_rs(se, dvr), _rs(se, (1j * xi) * phi), ax * h0[0], _rs(se, dvz), ax * h0[1]]
    om = d4 - xi * xi * phi                    # omega / r
    lap_r = (1j * xi) * _rs(q, om)
    lap_z = -(2.0 * om + _rs(q, d4p - xi * xi * dphi))
    h2 = h1 + [_rs(se, lap_r), _rs(se, lap_z)]
    return {"H0": h0, "H1": h1, "H2": h2}


def swirl_velocity_rows(p: dict, q: np.ndarray, w_even: np.ndarray, xi: float) -> dict:
    """Cumulative H0, H1, H2 integrands of v_theta = r phi (chi = Delta4 phi)."""
    se = np.sqrt(w_even)
    phi, dphi, chi = p["phi"], p["dphi"], p["chi"]
    v = _rs(se * q, phi)
    h0 = [v]
    h1 = h0 + [_rs(se, phi + _rs(q, dphi)), _rs(se, phi), abs(xi) * v]
    h2 = h1 + [_rs(se * q, chi - xi * xi * phi)]
    return {"H0": h0, "H1": h1, "H2": h2}


def swirl_seminorm_rows(p: dict, q: np.ndarray, w_even: np.ndarray) -> dict:
    """L2 (int |v|^2 r dr), DR (int |(r v)'|^2/r dr) and L2_W of the swirl."""
    se = np.sqrt(w_even)
    bulk = np.sqrt(w_even * (1.0 - q * q))
    phi, dphi = p["phi"], p["dphi"]
    return {
        "L2": [_rs(se * q, phi)],
        "DR": [_rs(se, 2.0 * phi + _rs(q, dphi))],
        "L2_W": [_rs(bulk * q, phi)],
    }


def sum_squares(rows) -> float:
    return float(sum(np.vdot(a, a).real for a in rows))


def stack(rows) -> np.ndarray:
    return np.vstack(rows)


# ---------------------------------------------------------------------------
# profile maps

def stream_profile_maps(grid: RadialGrid, q: np.ndarray) -> dict:
    """Matrices taking (chi, beta) with alpha = -beta to profiles at ``q``."""
    lift = grid.lift
    T = chebyshev_eval_matrix(q, lift.length)
    n = grid.n

    def aug(core, col):
        out = np.zeros((q.size, n + 1))
        out[:, :n] = core
        out[:, n] = col
        return out

    return {
        "phi": aug(T @ lift.coef_k2, q * q - 1.0),
        "dphi": aug(T @ lift.coef_k2p, 2.0 * q),
        "d4phi": aug(T @ lift.coef_k, 8.0 * np.ones_like(q)),
        "d4phi_p": aug(T @ lift.coef_kp, np.zeros_like(q)),
        "chi": aug(T @ lift.coef_h, np.zeros_like(q)),
    }


def swirl_profile_maps(grid: RadialGrid, q: np.ndarray) -> dict:
    lift = grid.lift
    T = chebyshev_eval_matrix(q, lift.length)
    return {"phi": T @ lift.coef_k, "dphi": T @ lift.coef_kp, "chi": T @ lift.coef_h}


@dataclass(frozen=True)
class QuadratureSet:
    points: np.ndarray
    w_even: np.ndarray
    w_odd: np.ndarray


_QUAD_CACHE: dict = {}
_CHOL_CACHE: dict = {}


def quadrature_for(grid: RadialGrid) -> QuadratureSet:
    """Gauss-Legendre set exact for every seminorm integrand of the lifted profiles."""
    key = grid.n
    if key not in _QUAD_CACHE:
        r, w = gauss_radial(2 * grid.n + 16)
        _QUAD_CACHE[key] = QuadratureSet(r, w, w)
    return _QUAD_CACHE[key]


def forcing_factor(grid: RadialGrid, parity: Parity) -> np.ndarray:
    """Upper factor R with ||R f||^2 = int |f|^2 r dr for nodal interpolants."""
    key = (grid.n, parity)
    if key not in _CHOL_CACHE:
        r, w = gauss_radial(2 * grid.n + 2)
        E = grid.interpolation_matrix(r, parity)
        M = E.T @ (w[:, None] * E)
        _CHOL_CACHE[key] = sla.cholesky(0.5 * (M + M.T), lower=False)
    return _CHOL_CACHE[key]


class _ForcingMetric:
    """Change of variables z = R f so the forcing norm becomes Euclidean."""

    def __init__(self, factors):
        self.factors = factors
        self.sizes = [R.shape[0] for R in factors]

    @property
    def dim(self) -> int:
        return sum(self.sizes)

    def to_nodal(self, z):
        out, i = [], 0
        for R, m in zip(self.factors, self.sizes):
            out.append(sla.solve_triangular(R, z[i:i + m], lower=False))
            i += m
        return np.concatenate(out)

    def to_nodal_adjoint(self, x):
        out, i = [], 0
        for R, m in zip(self.factors, self.sizes):
            out.append(sla.solve_triangular(R, x[i:i + m], lower=False, trans=2))
            i += m
        return np.concatenate(out)

    def matrix(self) -> np.ndarray:
        return sla.block_diag(*[sla.solve_triangular(R, np.eye(R.shape[0])) for R in self.factors])


# ---------------------------------------------------------------------------
# responses

def _embedding(coarse: Optional[RadialGrid], fine: RadialGrid, parities) -> Optional[np.ndarray]:
    """Block-diagonal map from nodal values on ``coarse`` to their interpolants on ``fine``."""
    if coarse is None or coarse is fine:
        return None
    if coarse.n > fine.n:
        raise UsageError("forcing grid must not be finer than the solve grid")
    return sla.block_diag(*[coarse.interpolation_matrix(fine.nodes, p) for p in parities])


class MeridionalResponse:
    """Map from nodal (F_r, F_z) to the lifted stream-function unknowns.

    Parameters
    ----------
    grid, params, bc :
        Problem definition; the collocation matrix is factored once.
    forcing_grid : RadialGrid, optional
        Coarser grid whose interpolants form the forcing space; the solve
        still happens on ``grid``.  Oversampling this way keeps the top of
        the forcing space resolved, so gains converge monotonically.
    """

    def __init__(self, grid: RadialGrid, params: FlowParams, bc: BoundaryKind = BoundaryKind.NOSLIP,
                 forcing_grid: Optional[RadialGrid] = None):
        self.grid, self.params, self.bc = grid, params, BoundaryKind(bc)
        n = grid.n
        A = stream_operator(grid, params, self.bc)
        self._lu = sla.lu_factor(A, check_finite=False)
        self.condition = 1.0 / max(_rcond(self._lu, np.linalg.norm(A, 1)), 1e-300)
        inv_r = 1.0 / grid.nodes
        B = np.zeros((n + 1, 2 * n), dtype=complex)
        B[:n, :n] = np.diag((1j * params.xi) * inv_r)
        B[:n, n:] = -inv_r[:, None] * grid.d_even
        parities = (Parity.ODD, Parity.EVEN)
        self.forcing_grid = forcing_grid or grid
        P = _embedding(forcing_grid, grid, parities)
        self.B = B if P is None else B @ P
        self.metric = _ForcingMetric([forcing_factor(self.forcing_grid, p) for p in parities])
        self.quad = quadrature_for(grid)
        self.maps = stream_profile_maps(grid, self.quad.points)

    def solve(self, x: np.ndarray) -> np.ndarray:
        return sla.lu_solve(self._lu, self.B @ x)

    def solve_adjoint(self, y: np.ndarray) -> np.ndarray:
        return self.B.conj().T @ sla.lu_solve(self._lu, y, trans=2)

    def velocity_operator(self, kind: str) -> np.ndarray:
        q = self.quad
        return stack(meridional_velocity_rows(self.maps, q.points, q.w_even, self.params.xi)[kind])

    def seminorm_operator(self, keys) -> np.ndarray:
        """Stacked rows of a sum of stream seminorms; ``keys`` maps name -> factor."""
        q = self.quad
        rows = stream_rows(self.maps, q.points, q.w_even, q.w_odd)
        return stack([np.sqrt(c) * m for k, c in keys.items() for m in rows[k]])

    def wall_slope_functional(self) -> np.ndarray:
        """Row vector giving (r psi)'(1) = 2 phi(1) + phi'(1) from (chi, beta)."""
        lift = self.grid.lift
        row = np.zeros(self.grid.n + 1)
        row[:self.grid.n] = lift.k2p_wall
        row[self.grid.n] = 2.0
        return row

    def representer(self, row: np.ndarray):
        """Unit forcing maximising |row . y(F)| and the maximum itself.

        Returns ``(fr, fz, value)`` with nodal values of the forcing
        components; ``value`` is the norm of the functional F -> row . y(F).
        """
        g = self.metric.to_nodal_adjoint(self.solve_adjoint(np.conj(row)))
        value = float(np.linalg.norm(g))
        if value == 0.0:
            raise DegeneracyError("functional vanishes on every forcing")
        nodal = self.metric.to_nodal(g / value)
        n = self.forcing_grid.n
        return nodal[:n], nodal[n:], value

    def gain(self, G: np.ndarray, **kw) -> float:
        """sup_F ||G y(F)|| / ||F|| over interpolated meridional forcing.

        ``method`` is "auto", "dense" or "power"; extra keywords go to
        :func:`largest_singular_value`.
        """
        return _gain(self, G, **kw)

    def dense(self, G: np.ndarray) -> np.ndarray:
        """Dense matrix of F -> G y(F) in orthonormal forcing coordinates."""
        S = sla.lu_solve(self._lu, self.B)
        return G @ S @ self.metric.matrix()


class SwirlResponse:
    """Map from nodal F_theta to chi_v = Delta4 (v / r)."""

    def __init__(self, grid: RadialGrid, params: FlowParams, forcing_grid: Optional[RadialGrid] = None):
        self.grid, self.params = grid, params
        A = swirl_operator(grid, params)
        self._lu = sla.lu_factor(A, check_finite=False)
        self.condition = 1.0 / max(_rcond(self._lu, np.linalg.norm(A, 1)), 1e-300)
        self.forcing_grid = forcing_grid or grid
        P = _embedding(forcing_grid, grid, (Parity.ODD,))
        inv_r = np.diag(1.0 / grid.nodes)
        self.B = (inv_r if P is None else inv_r @ P).astype(complex)
        self.metric = _ForcingMetric([forcing_factor(self.forcing_grid, Parity.ODD)])
        self.quad = quadrature_for(grid)
        self.maps = swirl_profile_maps(grid, self.quad.points)

    def solve(self, x):
        return sla.lu_solve(self._lu, self.B @ x)

    def solve_adjoint(self, y):
        return self.B.conj().T @ sla.lu_solve(self._lu, y, trans=2)

    def velocity_operator(self, kind: str) -> np.ndarray:
        q = self.quad
        return stack(swirl_velocity_rows(self.maps, q.points, q.w_even, self.params.xi)[kind])

    def seminorm_operator(self, keys) -> np.ndarray:
        q = self.quad
        rows = swirl_seminorm_rows(self.maps, q.points, q.w_even)
        return stack([np.sqrt(c) * m for k, c in keys.items() for m in rows[k]])

    def gain(self, G: np.ndarray, **kw) -> float:
        return _gain(self, G, **kw)

    def dense(self, G: np.ndarray) -> np.ndarray:
        S = sla.lu_solve(self._lu, self.B)
        return G @ S @ self.metric.matrix()


DENSE_LIMIT = 2048


def _gain(resp, G: np.ndarray, method: str = "auto", **kw) -> float:
    """sup_F ||G y(F)|| / ||F||: dense SVD for moderate sizes, else power iteration."""
    metric = resp.metric
    if method == "dense" or (method == "auto" and metric.dim <= DENSE_LIMIT):
        return float(sla.svdvals(resp.dense(G), check_finite=False)[0])

    def fwd(z):
        return G @ resp.solve(metric.to_nodal(z))

    def adj(y):
        return metric.to_nodal_adjoint(resp.solve_adjoint(G.conj().T @ y))

    return largest_singular_value(fwd, adj, metric.dim, **kw)


def largest_singular_value(fwd, adj, dim: int, *, block: int = 8, rtol: float = 1e-6,
                           max_iter: int = 500, seed: int = 0) -> float:
    """Largest singular value of a linear map by block power iteration.

    Iterates X <- orth(A^H A X) with a Rayleigh-Ritz estimate of sigma_max.
    The stopping test requires the change per step to fall below
    ``rtol / 100`` so that the estimate itself is within about ``rtol`` even
    when the leading singular values are clustered.  The start block is
    seeded deterministically.
    """
    rng = np.random.default_rng(seed)
    k = min(block, dim)
    X = rng.standard_normal((dim, k)) + 1j * rng.standard_normal((dim, k))
    X, _ = np.linalg.qr(X)
    prev = None
    for _ in range(max_iter):
        Y = np.column_stack([fwd(X[:, j]) for j in range(k)])
        # Rayleigh-Ritz on span(X): singular values of A X
        s = np.linalg.svd(Y, compute_uv=False)
        est = float(s[0])
        if not np.isfinite(est):
            raise SolverError("non-finite values in power iteration", float("nan"))
        if est == 0.0:
            return 0.0
        if prev is not None and abs(est - prev) <= 0.01 * rtol * est:
            return est
        prev = est
        Z = np.column_stack([adj(Y[:, j]) for j in range(k)])
        X, _ = np.linalg.qr(Z)
    raise ConvergenceError(f"power iteration did not reach rel. tol {rtol:g} in {max_iter} steps")
