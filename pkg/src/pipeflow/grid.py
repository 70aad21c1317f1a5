"""Radial collocation grid on (0, 1] with parity-aware spectral operators.

A radial profile is stored by its values at the positive half of a
Chebyshev-Gauss-Lobatto grid on [-1, 1] with an even number of points, so the
axis r = 0 is never a node and r = 1 always is.  Every field carries a parity:
stream-function-like fields (psi, v_r, v_theta, the vorticity) are odd in r,
while v_z and F_z are even.  Odd fields are handled through the lift
psi = r * phi with phi even, which turns the cylindrical operator
L = d^2/dr^2 + (1/r) d/dr - 1/r^2 into r * Delta4 acting on phi, where
Delta4 = d^2/dr^2 + (3/r) d/dr is the radial Laplacian in four dimensions.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np
import numpy.polynomial.chebyshev as cheb
import scipy.linalg as sla

from .errors import UsageError, ValidationError

__all__ = [
    "Parity",
    "WeightKind",
    "OperatorKind",
    "RadialGrid",
    "ModeField",
    "build_grid",
    "apply_operator",
    "integrate",
    "inner",
    "cheb_diff_matrix",
    "LiftTables",
    "chebyshev_eval_matrix",
    "gauss_radial",
    "interpolant_norm_sq",
]


# relative size below which trailing Chebyshev coefficients count as round-off
CHOP_TOL = 1e-15


class Parity(Enum):
    """Symmetry of a radial profile under r -> -r."""

    ODD = "odd"
    EVEN = "even"

    def times(self, other: "Parity") -> "Parity":
        return Parity.EVEN if self is other else Parity.ODD


class WeightKind(Enum):
    """Radial weights appearing in the energy estimates."""

    W_R = "r"               # r dr
    W_INV = "1/r"           # dr / r
    W_HLP = "(1-r^2)/r"     # (1 - r^2)/r dr
    W_BULK = "r(1-r^2)"     # r (1 - r^2) dr


class OperatorKind(Enum):
    D = "D"
    L = "L"
    L2 = "L2"
    DELTA4 = "DELTA4"
    D_R_TIMES = "D_R_TIMES"


def cheb_diff_matrix(N: int) -> tuple[np.ndarray, np.ndarray]:
    """Chebyshev-Gauss-Lobatto nodes x_j = cos(pi j / N) and the derivative matrix.

    Off-diagonal entries use the trigonometric form of x_i - x_j and the
    diagonal is fixed by the negative-sum rule, which keeps round-off low for
    large N.
    """
    j = np.arange(N + 1)
    theta = np.pi * j / N
    x = np.cos(theta)
    c = np.ones(N + 1)
    c[0] = c[-1] = 2.0
    c = c * (-1.0) ** j
    i_idx, j_idx = np.meshgrid(j, j, indexing="ij")
    dx = 2.0 * np.sin((i_idx + j_idx) * np.pi / (2 * N)) * np.sin((j_idx - i_idx) * np.pi / (2 * N))
    np.fill_diagonal(dx, 1.0)
    D = np.outer(c, 1.0 / c) / dx
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))
    return x, D


def _moments(kind: WeightKind, degrees: np.ndarray, parity: Parity) -> np.ndarray:
    """Exact moments int_0^1 T_k(r) w(r) dr by Gauss-Legendre quadrature."""
    npts = int(degrees.max()) // 2 + 8
    t, wt = np.polynomial.legendre.leggauss(npts)
    r = 0.5 * (t + 1.0)
    wt = 0.5 * wt
    Tk = np.cos(np.outer(degrees, np.arccos(r)))
    if kind is WeightKind.W_R:
        wr = r
    elif kind is WeightKind.W_INV and parity is Parity.ODD:
        wr = 1.0 / r
    else:
        raise AssertionError(f"no direct moment rule for {kind} with {parity}")
    return Tk @ (wt * wr)


def chebyshev_eval_matrix(r, length: int) -> np.ndarray:
    """Matrix of T_k(r_i) for k = 0..length-1."""
    r = np.asarray(r, dtype=float)
    return np.cos(np.multiply.outer(np.arccos(np.clip(r, -1.0, 1.0)), np.arange(length)))


def _mulx(c: np.ndarray) -> np.ndarray:
    """Multiply Chebyshev series (columns of ``c``) by x."""
    out = np.zeros((c.shape[0] + 1,) + c.shape[1:])
    out[1] += c[0]
    out[2:] += 0.5 * c[1:]
    out[:-2] += 0.5 * c[1:]
    return out


def _divx(c: np.ndarray) -> np.ndarray:
    """Divide Chebyshev series exactly divisible by x (backward recurrence)."""
    d = c.shape[0] - 1
    u = np.zeros((d + 2,) + c.shape[1:])
    for k in range(d, 1, -1):
        u[k - 1] = 2.0 * c[k] - u[k + 1]
    u[0] = c[1] - 0.5 * u[2]
    return u[:d]


def _inverse_delta4(h: np.ndarray):
    """Apply the inverse of Delta4 to even Chebyshev series (columns of ``h``).

    Returns the coefficients of g and g' where Delta4 g = h, g is even and
    g(1) = 0:  g'(r) = r^-3 int_0^r s^3 h(s) ds and g(r) = -int_r^1 g'(t) dt.
    """
    cheb = np.polynomial.chebyshev
    p = _mulx(_mulx(_mulx(h)))
    q = cheb.chebint(p, lbnd=0, axis=0)
    gp = _divx(_divx(_divx(q)))
    g = cheb.chebint(gp, lbnd=1, axis=0)
    return g, gp


def _pad(c: np.ndarray, length: int) -> np.ndarray:
    out = np.zeros((length,) + c.shape[1:])
    m = min(length, c.shape[0])
    out[:m] = c[:m]
    return out


@dataclass(frozen=True, eq=False)
class LiftTables:
    """Integral representation of lifted profiles.

    An odd profile psi = r phi is represented through chi = Delta4^2 phi (or
    chi = Delta4 phi for second-order problems) sampled at the nodes, so that
    psi and all of its derivatives are obtained by integration only.  ``K``
    inverts Delta4 on even polynomials with the normalisation (K h)(1) = 0.

    The ``coef_*`` arrays map nodal values of chi to full-index Chebyshev
    coefficients of the named quantity; the ``*_nodes`` arrays give its values
    at the grid nodes.
    """

    length: int
    coef_h: np.ndarray      # chi itself
    coef_k: np.ndarray      # K chi
    coef_kp: np.ndarray     # (K chi)'
    coef_k2: np.ndarray     # K K chi
    coef_k2p: np.ndarray    # (K K chi)'
    k_nodes: np.ndarray
    kp_nodes: np.ndarray
    k2_nodes: np.ndarray
    k2p_nodes: np.ndarray
    k2p_wall: np.ndarray

    def at(self, r, which: str) -> np.ndarray:
        """Value matrix of the named quantity at arbitrary points ``r``."""
        return chebyshev_eval_matrix(r, self.length) @ getattr(self, "coef_" + which)


def _build_lift(n: int, vander_even) -> LiftTables:
    length = 2 * n + 8
    # values -> even coefficients -> full-index coefficients
    a = sla.lu_solve(vander_even, np.eye(n))
    h = np.zeros((length, n))
    h[0:2 * n:2] = a
    k1, kp = _inverse_delta4(h)
    k1 = _pad(k1, length)
    k2, k2p = _inverse_delta4(k1)
    k2 = _pad(k2, length)
    kp = _pad(kp, length)
    k2p = _pad(k2p, length)
    for c in (k1, kp, k2, k2p):
        c[np.abs(c) < 1e-300] = 0.0
    return h, k1, kp, k2, k2p, length


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Immutable collocation grid with operator tables and quadrature rules.

    Attributes
    ----------
    n : int
        Number of nodes in (0, 1].
    nodes : ndarray
        Strictly increasing nodes; ``nodes[-1] == 1``.
    d_even, d_odd : ndarray
        First-derivative matrices acting on even and odd profiles.
    delta4 : ndarray
        Delta4 acting on even profiles.
    lop, lop2 : ndarray
        The cylindrical operator L and L^2 acting on odd profiles.
    """

    n: int
    nodes: np.ndarray
    d_even: np.ndarray
    d_odd: np.ndarray
    delta4: np.ndarray
    lop: np.ndarray
    lop2: np.ndarray
    _weights: dict = field(repr=False)
    _vander: dict = field(repr=False)
    lift: "LiftTables" = field(repr=False, default=None)

    def weights(self, kind: WeightKind, parity: Parity = Parity.EVEN) -> np.ndarray:
        """Quadrature weights for ``int_0^1 f w dr`` with f of the given parity."""
        return self._weights[(kind, parity)]

    def field(self, values, parity: Parity = Parity.ODD) -> "ModeField":
        return ModeField(np.asarray(values, dtype=complex), self, parity)

    def sample(self, fn: Callable[[np.ndarray], np.ndarray], parity: Parity = Parity.ODD) -> "ModeField":
        """Sample a callable at the nodes."""
        return self.field(np.asarray(fn(self.nodes), dtype=complex) * np.ones(self.n), parity)

    def coefficients(self, values: np.ndarray, parity: Parity) -> np.ndarray:
        """Chebyshev coefficients of the parity-restricted interpolant."""
        return sla.lu_solve(self._vander[parity], values)

    def evaluate(self, f: "ModeField", r) -> np.ndarray:
        """Evaluate the interpolant of ``f`` at arbitrary points in [0, 1]."""
        r = np.asarray(r, dtype=float)
        coef = self.coefficients(f.values, f.parity)
        k = 2 * np.arange(self.n) + (1 if f.parity is Parity.ODD else 0)
        T = np.cos(np.multiply.outer(np.arccos(np.clip(r, -1.0, 1.0)), k))
        return T @ coef

    def interpolation_matrix(self, r, parity: Parity) -> np.ndarray:
        """Matrix taking nodal values of a ``parity`` profile to its interpolant at ``r``."""
        r = np.asarray(r, dtype=float)
        k = 2 * np.arange(self.n) + (1 if parity is Parity.ODD else 0)
        T = np.cos(np.multiply.outer(np.arccos(np.clip(r, -1.0, 1.0)), k))
        inv = sla.lu_solve(self._vander[parity], np.eye(self.n))
        return T @ inv

    def resample(self, f: "ModeField", other: "RadialGrid") -> "ModeField":
        """Interpolate ``f`` onto another grid."""
        return ModeField(self.evaluate(f, other.nodes).astype(complex), other, f.parity)

    def delta4_of(self, phi: np.ndarray) -> np.ndarray:
        """Delta4 of the even interpolant of ``phi`` at the nodes.

        Evaluated in Chebyshev coefficient space after chopping the round-off
        tail, so repeated application does not amplify noise by N^4 per step.
        """
        c = self.coefficients(np.asarray(phi, dtype=complex), Parity.EVEN)
        mag = np.abs(c)
        big = np.nonzero(mag > CHOP_TOL * mag.max())[0] if mag.max() > 0 else np.array([], int)
        if big.size == 0:
            return np.zeros(self.n, dtype=complex)
        full = np.zeros(2 * (int(big[-1]) + 1), dtype=complex)
        full[0::2] = c[:big[-1] + 1]
        r = self.nodes
        d1 = cheb.chebval(r, cheb.chebder(full))
        d2 = cheb.chebval(r, cheb.chebder(full, 2))
        return d2 + 3.0 * d1 / r


@dataclass(frozen=True, eq=False)
class ModeField:
    """Complex radial profile sampled at the nodes of a grid.

    Attributes
    ----------
    values : ndarray of complex
        One value per node.
    grid : RadialGrid
        The grid the values live on.
    parity : Parity
        Symmetry of the profile; ``ODD`` for stream-function-like fields.
    """

    values: np.ndarray
    grid: RadialGrid
    parity: Parity = Parity.ODD

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (self.grid.n,):
            raise UsageError(f"field length {vals.shape} does not match grid size {self.grid.n}")
        object.__setattr__(self, "values", vals)

    def _check(self, other: "ModeField"):
        if other.grid is not self.grid:
            raise UsageError("fields live on different grids")
        if other.parity is not self.parity:
            raise UsageError("cannot add fields of different parity")

    def __add__(self, other: "ModeField") -> "ModeField":
        self._check(other)
        return ModeField(self.values + other.values, self.grid, self.parity)

    def __sub__(self, other: "ModeField") -> "ModeField":
        self._check(other)
        return ModeField(self.values - other.values, self.grid, self.parity)

    def __neg__(self) -> "ModeField":
        return ModeField(-self.values, self.grid, self.parity)

    def __mul__(self, scalar) -> "ModeField":
        return ModeField(self.values * scalar, self.grid, self.parity)

    __rmul__ = __mul__

    def conj(self) -> "ModeField":
        return ModeField(self.values.conj(), self.grid, self.parity)

    def times(self, other: "ModeField", conjugate: bool = False) -> "ModeField":
        """Pointwise product ``self * other`` (or ``self * conj(other)``)."""
        if other.grid is not self.grid:
            raise UsageError("fields live on different grids")
        vals = other.values.conj() if conjugate else other.values
        return ModeField(self.values * vals, self.grid, self.parity.times(other.parity))

    def at_wall(self) -> complex:
        return complex(self.values[-1])


def build_grid(n: int = 96) -> RadialGrid:
    """Build the collocation grid with ``n`` nodes in (0, 1].

    The nodes are the positive half of the 2n-point Chebyshev-Gauss-Lobatto
    grid on [-1, 1].

    Raises
    ------
    ValidationError
        If ``n < 8``.
    """
    if int(n) != n or n < 8:
        raise ValidationError(f"grid needs n >= 8 nodes, got {n}")
    n = int(n)
    N = 2 * n - 1
    x, D = cheb_diff_matrix(N)
    # positive half, reordered so that r increases
    pos = np.arange(n)[::-1]
    mirror = N - pos
    r = x[pos]
    r[-1] = 1.0
    d_even = D[np.ix_(pos, pos)] + D[np.ix_(pos, mirror)]
    d_odd = D[np.ix_(pos, pos)] - D[np.ix_(pos, mirror)]
    inv_r = 1.0 / r
    delta4 = d_odd @ d_even + inv_r[:, None] * 3.0 * d_even
    lop = r[:, None] * delta4 * inv_r[None, :]
    lop2 = lop @ lop

    theta = np.arccos(r)
    vander = {}
    weights = {}
    for parity, offset in ((Parity.EVEN, 0), (Parity.ODD, 1)):
        k = 2 * np.arange(n) + offset
        V = np.cos(np.outer(theta, k))
        vander[parity] = sla.lu_factor(V)
        weights[(WeightKind.W_R, parity)] = sla.solve(V.T, _moments(WeightKind.W_R, k, parity))
        if parity is Parity.ODD:
            weights[(WeightKind.W_INV, parity)] = sla.solve(V.T, _moments(WeightKind.W_INV, k, parity))
    h, k1, kp, k2, k2p, length = _build_lift(n, vander[Parity.EVEN])
    T = chebyshev_eval_matrix(r, length)
    lift = LiftTables(length, h, k1, kp, k2, k2p, T @ k1, T @ kp, T @ k2, T @ k2p,
                      np.ones(length) @ k2p)
    for arr in (h, k1, kp, k2, k2p, lift.k_nodes, lift.kp_nodes, lift.k2_nodes, lift.k2p_nodes):
        arr.setflags(write=False)

    # even integrands that vanish at the axis: f/r^2 is again even
    weights[(WeightKind.W_INV, Parity.EVEN)] = weights[(WeightKind.W_R, Parity.EVEN)] / r ** 2
    # weights vanishing at the wall: product rules keep every weight nonnegative
    for parity in Parity:
        weights[(WeightKind.W_BULK, parity)] = weights[(WeightKind.W_R, parity)] * (1.0 - r * r)
        weights[(WeightKind.W_HLP, parity)] = weights[(WeightKind.W_INV, parity)] * (1.0 - r * r)

    for arr in (r, d_even, d_odd, delta4, lop, lop2, *weights.values()):
        arr.setflags(write=False)
    return RadialGrid(n, r, d_even, d_odd, delta4, lop, lop2, weights, vander, lift)


def apply_operator(grid: RadialGrid, kind: OperatorKind | str, f: ModeField) -> ModeField:
    """Apply a differential operator to the interpolant of ``f``.

    Parameters
    ----------
    grid : RadialGrid
    kind : OperatorKind or str
        ``D`` (d/dr), ``L``, ``L2`` (odd fields), ``DELTA4`` (even fields) or
        ``D_R_TIMES`` (d(r f)/dr).
    f : ModeField

    Returns
    -------
    ModeField
        Result with the parity implied by the operator.
    """
    if f.grid is not grid:
        raise UsageError("field does not belong to this grid")
    kind = OperatorKind(kind) if not isinstance(kind, OperatorKind) else kind
    v = f.values
    if kind is OperatorKind.D:
        mat = grid.d_even if f.parity is Parity.EVEN else grid.d_odd
        other = Parity.ODD if f.parity is Parity.EVEN else Parity.EVEN
        return ModeField(mat @ v, grid, other)
    if kind is OperatorKind.D_R_TIMES:
        rv = grid.nodes * v
        if f.parity is Parity.ODD:
            return ModeField(grid.d_even @ rv, grid, Parity.ODD)
        return ModeField(grid.d_odd @ rv, grid, Parity.EVEN)
    if kind in (OperatorKind.L, OperatorKind.L2):
        if f.parity is not Parity.ODD:
            raise UsageError(f"{kind.value} acts on odd (stream-function-like) fields")
        # L (r phi) = r Delta4 phi
        out = grid.delta4_of(v / grid.nodes)
        if kind is OperatorKind.L2:
            out = grid.delta4_of(out)
        return ModeField(grid.nodes * out, grid, Parity.ODD)
    if f.parity is not Parity.EVEN:
        raise UsageError("DELTA4 acts on even fields")
    return ModeField(grid.delta4_of(v), grid, Parity.EVEN)


def gauss_radial(m: int):
    """Gauss-Legendre points and ``r dr`` weights on [0, 1] (exact to degree 2m - 2)."""
    x, w = np.polynomial.legendre.leggauss(m)
    r = 0.5 * (x + 1.0)
    return r, 0.5 * w * r


def interpolant_norm_sq(grid: RadialGrid, f: "ModeField") -> float:
    """Exact int_0^1 |f|^2 r dr of the nodal interpolant of ``f``."""
    r, w = gauss_radial(2 * grid.n + 2)
    vals = grid.interpolation_matrix(r, f.parity) @ f.values
    return float(w @ np.abs(vals) ** 2)


def integrate(grid: RadialGrid, f: ModeField, w: WeightKind = WeightKind.W_R):
    """Quadrature of ``int_0^1 f(r) w(r) dr``; linear in ``f``.

    For norms pass the pointwise product, e.g. ``f.times(f, conjugate=True)``.
    For ``W_INV`` and ``W_HLP`` an even ``f`` must vanish at the axis.
    """
    if f.grid is not grid:
        raise UsageError("field does not belong to this grid")
    val = grid.weights(w, f.parity) @ f.values
    if np.iscomplexobj(val) and abs(val.imag) > 0:
        return complex(val)
    return float(np.real(val))


def inner(grid: RadialGrid, f: ModeField, g: ModeField, w: WeightKind = WeightKind.W_R) -> complex:
    """Weighted inner product ``int f conj(g) w dr``."""
    return complex(grid.weights(w, f.parity.times(g.parity)) @ (f.values * g.values.conj()))
