"""Bilinear fixed points and the steady nonlinear problem in a periodic pipe.

The perturbation v of Hagen-Poiseuille flow solves v = T(F - (v . grad) v),
where T is the linear no-slip solution operator.  The problem is truncated to
a pipe of period 2 pi / xi0 with axial modes k = -K..K, and solved by the
Picard iteration zeta_n = zeta* + B(zeta_{n-1}, zeta_{n-1}) with zeta* = T F
and B(u, v) = -T((u . grad) v).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Any, Callable, List, Optional, Sequence

import numpy as np

from ._version import __version__
from .errors import ContractionError, ConvergenceError, UsageError, ValidationError
from .estimates import mode_norm_report
from .grid import Parity, RadialGrid, WeightKind
from .modes import (BoundaryKind, FlowParams, ForcingMode, _check_points,
                    _stream_lhs, _swirl_lhs, solve_stream, solve_swirl)

__all__ = [
    "MAX_PICARD",
    "FixedPointProblem",
    "picard_fixed_point",
    "SpectralVelocity",
    "bilinear_convection",
    "convection_arrays",
    "linear_solve",
    "measure_eta",
    "SteadyResult",
    "solve_steady",
    "random_forcing",
    "amplitude_scaling_order",
]

MAX_PICARD = 200


# ---------------------------------------------------------------------------
# abstract fixed point

@dataclass
class FixedPointProblem:
    """zeta = zeta_star + bilinear(zeta, zeta) with ||B(x, y)|| <= eta ||x|| ||y||.

    Elements only need ``+``, ``-`` and the ``norm`` callable.
    """

    zeta_star: Any
    bilinear: Callable[[Any, Any], Any]
    norm: Callable[[Any], float]
    eta: float
    tol: float = 1e-12
    max_iter: int = MAX_PICARD

    def __post_init__(self):
        if not np.isfinite(self.eta) or self.eta <= 0:
            raise ValidationError(f"bilinear bound eta must be > 0, got {self.eta}")
        if not 0 < self.tol < 1:
            raise ValidationError(f"tolerance must lie in (0, 1), got {self.tol}")

    @property
    def contraction(self) -> float:
        """4 eta ||zeta_star||; the iteration is guaranteed to converge below 1."""
        return 4.0 * self.eta * self.norm(self.zeta_star)


def picard_fixed_point(p: FixedPointProblem, *, history: Optional[list] = None):
    """Picard iteration started from zeta_star.

    Stops when ||zeta_{n+1} - zeta_n|| <= tol ||zeta_n||.  Increments are
    appended to ``history`` when a list is passed.

    Raises
    ------
    ContractionError
        If 4 eta ||zeta_star|| >= 1 (the measured value is attached).
    ConvergenceError
        After ``max_iter`` steps, or if the limit violates ||zeta|| <= 2 ||zeta_star||.
    """
    measured = p.contraction
    if not measured < 1.0:
        raise ContractionError(f"4 eta ||zeta*|| = {measured:.6g} is not below 1", measured)
    star_norm = p.norm(p.zeta_star)
    zeta = p.zeta_star
    for _ in range(p.max_iter):
        nxt = p.zeta_star + p.bilinear(zeta, zeta)
        step = p.norm(nxt - zeta)
        if history is not None:
            history.append(step)
        done = step <= p.tol * p.norm(zeta)
        zeta = nxt
        if done:
            if p.norm(zeta) > 2.0 * star_norm * (1.0 + 1e-12):
                raise ConvergenceError("fixed point violates ||zeta|| <= 2 ||zeta*||")
            return zeta
    raise ConvergenceError(f"Picard iteration did not converge in {p.max_iter} steps")


# ---------------------------------------------------------------------------
# periodic-pipe fields

def _zeros(K: int, n: int) -> np.ndarray:
    return np.zeros((2 * K + 1, n), dtype=complex)


@dataclass(frozen=True, eq=False)
class SpectralVelocity:
    """Axial Fourier modes k = -K..K of an axisymmetric vector field.

    Attributes
    ----------
    grid : RadialGrid
    xi0 : float
        Base wavenumber; the period in z is 2 pi / xi0.
    vr, vz, vtheta : ndarray, shape (2K+1, n)
        Nodal values; row ``k + K`` holds mode k.
    dvr, dvz, dvtheta : ndarray or None
        Radial derivatives.  Filled from the lifted profiles for solver
        output; otherwise obtained by differentiating the interpolants.
    solutions : tuple of ModeSolution, optional
        Solver output for k = 0..K, used for exact norms.
    """

    grid: RadialGrid
    xi0: float
    vr: np.ndarray
    vz: np.ndarray
    vtheta: np.ndarray
    dvr: Optional[np.ndarray] = None
    dvz: Optional[np.ndarray] = None
    dvtheta: Optional[np.ndarray] = None
    solutions: Optional[tuple] = field(default=None, repr=False)

    def __post_init__(self):
        if not np.isfinite(self.xi0) or self.xi0 <= 0:
            raise ValidationError(f"base wavenumber xi0 must be > 0, got {self.xi0}")
        shape = np.shape(self.vr)
        if len(shape) != 2 or shape[1] != self.grid.n or shape[0] % 2 != 1:
            raise UsageError(f"mode arrays must have shape (2K+1, {self.grid.n}), got {shape}")
        for name in ("vr", "vz", "vtheta", "dvr", "dvz", "dvtheta"):
            a = getattr(self, name)
            if a is None:
                continue
            a = np.asarray(a, dtype=complex)
            if a.shape != shape:
                raise UsageError(f"{name} has shape {a.shape}, expected {shape}")
            object.__setattr__(self, name, a)
        if self.dvr is None:
            g = self.grid
            object.__setattr__(self, "dvr", self.vr @ g.d_odd.T)
            object.__setattr__(self, "dvz", self.vz @ g.d_even.T)
            object.__setattr__(self, "dvtheta", self.vtheta @ g.d_odd.T)

    @classmethod
    def zeros(cls, grid: RadialGrid, xi0: float, K: int) -> "SpectralVelocity":
        z = _zeros(K, grid.n)
        return cls(grid, xi0, z, z.copy(), z.copy(), z.copy(), z.copy(), z.copy())

    @property
    def K(self) -> int:
        return (self.vr.shape[0] - 1) // 2

    @property
    def wavenumbers(self) -> np.ndarray:
        return self.xi0 * np.arange(-self.K, self.K + 1)

    def mode(self, k: int) -> tuple:
        """(v_r, v_z, v_theta) of mode k."""
        if abs(k) > self.K:
            raise UsageError(f"mode {k} outside -{self.K}..{self.K}")
        i = k + self.K
        return self.vr[i], self.vz[i], self.vtheta[i]

    def _compatible(self, other: "SpectralVelocity"):
        if other.grid is not self.grid or other.K != self.K or other.xi0 != self.xi0:
            raise UsageError("fields have different grids, mode ranges or periods")

    def _combine(self, other: "SpectralVelocity", sign: float) -> "SpectralVelocity":
        self._compatible(other)
        arrs = [getattr(self, a) + sign * getattr(other, a)
                for a in ("vr", "vz", "vtheta", "dvr", "dvz", "dvtheta")]
        return SpectralVelocity(self.grid, self.xi0, *arrs)

    def __add__(self, other):
        return self._combine(other, 1.0)

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __mul__(self, a: float) -> "SpectralVelocity":
        arrs = [a * getattr(self, x) for x in ("vr", "vz", "vtheta", "dvr", "dvz", "dvtheta")]
        return SpectralVelocity(self.grid, self.xi0, *arrs)

    __rmul__ = __mul__

    # -- norms -------------------------------------------------------------

    def _weights(self) -> np.ndarray:
        return self.grid.weights(WeightKind.W_R, Parity.EVEN)

    def l2_norm(self) -> float:
        """sqrt(sum_k int |v_k|^2 r dr), nodal quadrature."""
        w = self._weights()
        s = sum(float(np.sum(np.abs(a) ** 2 @ w)) for a in (self.vr, self.vz, self.vtheta))
        return float(np.sqrt(s))

    def h1_norm(self) -> float:
        """Discrete H1 norm: |v|^2 + |v'|^2 + xi_k^2 |v|^2 + (|v_r|^2 + |v_theta|^2)/r^2."""
        w = self._weights()
        xi2 = self.wavenumbers[:, None] ** 2
        inv_r = 1.0 / self.grid.nodes
        dens = 0.0
        for v, dv in ((self.vr, self.dvr), (self.vz, self.dvz), (self.vtheta, self.dvtheta)):
            dens = dens + (1.0 + xi2) * np.abs(v) ** 2 + np.abs(dv) ** 2
        dens = dens + np.abs(self.vr * inv_r) ** 2 + np.abs(self.vtheta * inv_r) ** 2
        return float(np.sqrt(np.sum(dens @ w)))

    # -- invariants --------------------------------------------------------

    def invariants(self) -> dict:
        """Reality, divergence and mode-0 flux defects.

        reality: max |v_{-k} - conj(v_k)| / max |v|;
        divergence: max |(r v_r)'/r + i xi v_z| / (max |v'| + max |xi v|);
        flux: |int v_z r dr| of mode 0 (exact for the interpolant).
        """
        scale = max(float(np.max(np.abs(np.stack([self.vr, self.vz, self.vtheta])))), 1e-300)
        flip = slice(None, None, -1)
        reality = max(float(np.max(np.abs(a[flip] - np.conj(a)))) for a in (self.vr, self.vz, self.vtheta))
        xi = self.wavenumbers[:, None]
        div = self.dvr + self.vr / self.grid.nodes + 1j * xi * self.vz
        dscale = max(float(np.max(np.abs(self.dvr))) + float(np.max(np.abs(xi * self.vz))), 1e-300)
        flux = abs(complex(self.grid.weights(WeightKind.W_R, Parity.EVEN) @ self.vz[self.K]))
        return {"reality": reality / scale, "divergence": float(np.max(np.abs(div))) / dscale,
                "flux": flux}

    def forcing_modes(self) -> List[ForcingMode]:
        """One ForcingMode per k = -K..K with these fields as components."""
        g = self.grid
        return [ForcingMode(g.field(self.vr[i], Parity.ODD), g.field(self.vz[i], Parity.EVEN),
                            g.field(self.vtheta[i], Parity.ODD)) for i in range(2 * self.K + 1)]

    def forcing_norm(self) -> float:
        """sqrt(sum_k int |F_k|^2 r dr) of the interpolants."""
        return float(np.sqrt(sum(f.norm_sq() for f in self.forcing_modes())))


# ---------------------------------------------------------------------------
# convection

def _conv(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Axial convolution sum_{p+q=k} a_p b_q truncated to |k| <= K.

    The direct sum is exact, which is what zero-padding to 2K achieves.
    """
    K = (a.shape[0] - 1) // 2
    out = np.zeros_like(a, dtype=complex)
    for ip in range(2 * K + 1):
        p = ip - K
        lo, hi = max(-K, -K - p), min(K, K - p)        # range of q
        if lo > hi:
            continue
        out[lo + p + K:hi + p + K + 1] += a[ip] * b[lo + K:hi + K + 1]
    return out


def convection_arrays(u: SpectralVelocity, v: SpectralVelocity) -> tuple:
    """Mode arrays of -(u . grad) v in cylindrical components (r, z, theta)."""
    u._compatible(v)
    inv_r = 1.0 / u.grid.nodes
    ixi = 1j * v.wavenumbers[:, None]
    nr = _conv(u.vr, v.dvr) + _conv(u.vz, ixi * v.vr) - _conv(u.vtheta, v.vtheta * inv_r)
    nz = _conv(u.vr, v.dvz) + _conv(u.vz, ixi * v.vz)
    nt = _conv(u.vr, v.dvtheta) + _conv(u.vz, ixi * v.vtheta) + _conv(u.vtheta, v.vr * inv_r)
    return -nr, -nz, -nt


def bilinear_convection(u: SpectralVelocity, v: SpectralVelocity) -> List[ForcingMode]:
    """-(u . grad) v as one ForcingMode per axial mode k = -K..K."""
    nr, nz, nt = convection_arrays(u, v)
    return SpectralVelocity(u.grid, u.xi0, nr, nz, nt).forcing_modes()


# ---------------------------------------------------------------------------
# linear solution operator

def linear_solve(phi: float, f: SpectralVelocity) -> SpectralVelocity:
    """T F: per-mode no-slip stream and swirl solves on the grid of ``f``.

    Modes k >= 0 are solved; negative modes are their conjugates, so ``f``
    must be the transform of a real field.  Resolution is not refined: a
    residual above the solver tolerance raises SolverError.
    """
    g, K = f.grid, f.K
    arrs = [_zeros(K, g.n) for _ in range(6)]
    sols = []
    r = g.nodes
    for k in range(K + 1):
        i = k + K
        params = FlowParams(phi, k * f.xi0)
        fr, fz, ft = f.vr[i], f.vz[i], f.vtheta[i]
        if k == 0:
            # the zero mode of a real field is real
            fr, fz, ft = fr.real, fz.real, ft.real
        forcing = ForcingMode(g.field(fr, Parity.ODD), g.field(fz, Parity.EVEN), g.field(ft, Parity.ODD))
        sol = solve_stream(g, params, forcing, BoundaryKind.NOSLIP, max_doublings=0)
        vt, srep, _ = solve_swirl(g, params, forcing.theta(), return_rep=True, max_doublings=0)
        sol = replace(sol, vtheta_hat=vt, swirl_rep=srep)
        p = sol.rep.profiles()
        ps = srep.profiles()
        xi = params.xi
        vals = [
            sol.vr_hat.values, sol.vz_hat.values, vt.values,
            (1j * xi) * (p["phi"] + r * p["dphi"]),          # d(i xi r phi)/dr
            -r * p["d4phi"],                                 # -(Delta4 phi) r
            ps["phi"] + r * ps["dphi"],
        ]
        for a, val in zip(arrs, vals):
            a[i] = val
            if k:
                a[K - k] = np.conj(val)
        sols.append(sol)
    return SpectralVelocity(g, f.xi0, *arrs, solutions=tuple(sols))


def _bilinear_map(phi: float):
    def B(u: SpectralVelocity, v: SpectralVelocity) -> SpectralVelocity:
        nr, nz, nt = convection_arrays(u, v)
        return linear_solve(phi, SpectralVelocity(u.grid, u.xi0, nr, nz, nt))
    return B


def measure_eta(phi: float, probes: Sequence[SpectralVelocity]) -> float:
    """max over probe pairs of ||T(-(u . grad) v)||_H1 / (||u||_H1 ||v||_H1).

    An empirical lower estimate of the bilinear bound on the discrete space.
    """
    B = _bilinear_map(phi)
    best = 0.0
    for u in probes:
        for v in probes:
            nu, nv = u.h1_norm(), v.h1_norm()
            if nu == 0.0 or nv == 0.0:
                continue
            best = max(best, B(u, v).h1_norm() / (nu * nv))
    return best


# ---------------------------------------------------------------------------
# steady solve

@dataclass
class SteadyResult:
    """Outcome of :func:`solve_steady`."""

    velocity: SpectralVelocity
    linear: SpectralVelocity
    phi: float
    forcing_norm: float
    iterations: int
    final_residual: float
    eta: float
    contraction: float
    increments: List[float]
    v_norms: dict

    def report(self) -> dict:
        v = self.velocity
        return {"phi": self.phi, "xi0": v.xi0, "K": v.K, "forcing_norm": self.forcing_norm,
                "iterations": self.iterations, "final_residual": self.final_residual,
                "v_norms": dict(self.v_norms), "eta": self.eta, "contraction": self.contraction,
                "invariants": v.invariants(), "version": __version__}

    def to_json(self) -> str:
        return json.dumps(self.report(), indent=2, sort_keys=True)


def velocity_norms(v: SpectralVelocity) -> dict:
    """L2, H1, H2 and H53 over the period cell, exact per-mode quadrature."""
    if v.solutions is None:
        raise UsageError("exact norms need solver output")
    sq = {"L2": 0.0, "H1": 0.0, "H2": 0.0}
    for k, sol in enumerate(v.solutions):
        rep = mode_norm_report(sol)
        for key, src in (("L2", "H0"), ("H1", "H1"), ("H2", "H2")):
            sq[key] += (1.0 if k == 0 else 2.0) * rep[src] ** 2
    out = {k: float(np.sqrt(s)) for k, s in sq.items()}
    out["H53"] = out["H1"] ** (1.0 / 3.0) * out["H2"] ** (2.0 / 3.0)
    return out


def steady_residual(phi: float, v: SpectralVelocity, forcing: SpectralVelocity) -> float:
    """Relative residual of the steady equations in stream and swirl form.

    Both sides are evaluated between the collocation nodes; the right-hand
    side is F - (v . grad) v with the convection of ``v`` itself.
    """
    if v.solutions is None:
        raise UsageError("the residual needs solver output")
    nr, nz, nt = convection_arrays(v, v)
    rhs = SpectralVelocity(v.grid, v.xi0, forcing.vr + nr, forcing.vz + nz, forcing.vtheta + nt)
    modes = rhs.forcing_modes()
    num = den = 0.0
    for k, sol in enumerate(v.solutions):
        g = sol.rep.grid
        check = _check_points(g)
        w = check.weights(WeightKind.W_R, Parity.EVEN)
        fm = modes[k + v.K]
        fc = g.evaluate(fm.f_hat(sol.params.xi), check.nodes)
        tc = g.evaluate(fm.theta(), check.nodes)
        rs = _stream_lhs(sol.rep, sol.params, check.nodes) - fc
        rt = _swirl_lhs(sol.swirl_rep, sol.params, check.nodes) - tc
        mult = 1.0 if k == 0 else 2.0
        num += mult * float(w @ (np.abs(rs) ** 2 + np.abs(rt) ** 2))
        den += mult * float(w @ (np.abs(fc) ** 2 + np.abs(tc) ** 2))
    return float(np.sqrt(num / den)) if den > 0 else float(np.sqrt(num))


def solve_steady(grid: RadialGrid, phi: float, forcing: SpectralVelocity, xi0: Optional[float] = None,
                 K: Optional[int] = None, *, tol: float = 1e-12, probes: int = 3,
                 seed: int = 0) -> SteadyResult:
    """Steady perturbation of Hagen-Poiseuille flow in a periodic pipe.

    Parameters
    ----------
    grid : RadialGrid
    phi : float
        Flux of the base flow.
    forcing : SpectralVelocity
        Body force modes; ``xi0`` and ``K`` default to (and must match) its own.
    tol : float
        Picard stopping tolerance on the relative H1 increment.
    probes : int
        Number of random unit fields added to T F when measuring eta.

    Raises
    ------
    ContractionError
        If the measured 4 eta ||T F|| is not below 1 (forcing beyond the
        contraction threshold).
    """
    FlowParams(phi, 0.0)
    if xi0 is not None and xi0 != forcing.xi0 or K is not None and K != forcing.K:
        raise UsageError("xi0 and K must match the forcing")
    if forcing.grid is not grid:
        raise UsageError("forcing lives on a different grid")
    fnorm = forcing.forcing_norm()
    star = linear_solve(phi, forcing)
    if fnorm == 0.0:
        return SteadyResult(star, star, phi, 0.0, 0, 0.0, 0.0, 0.0, [],
                            {"L2": 0.0, "H1": 0.0, "H2": 0.0, "H53": 0.0})
    rng = np.random.default_rng(seed)
    probe_set = [star] + [linear_solve(phi, random_forcing(grid, forcing.xi0, forcing.K, 1.0, rng=rng))
                          for _ in range(probes)]
    eta = measure_eta(phi, probe_set)
    problem = FixedPointProblem(star, _bilinear_map(phi), SpectralVelocity.h1_norm, max(eta, 1e-300), tol)
    measured = problem.contraction
    if not measured < 1.0:
        raise ContractionError(
            f"forcing beyond the contraction threshold: 4 eta ||T F|| = {measured:.4g} >= 1", measured)
    hist: list = []
    v = picard_fixed_point(problem, history=hist)
    # one more step so that the returned field carries solver output
    nr, nz, nt = convection_arrays(v, v)
    v = linear_solve(phi, SpectralVelocity(grid, forcing.xi0, forcing.vr + nr,
                                           forcing.vz + nz, forcing.vtheta + nt))
    res = steady_residual(phi, v, forcing)
    return SteadyResult(v, star, phi, fnorm, len(hist) + 1, res, eta, measured, hist, velocity_norms(v))


def random_forcing(grid: RadialGrid, xi0: float, K: int, amplitude: float, *,
                   rng: Optional[np.random.Generator] = None, seed: int = 0,
                   decay: float = 1.0) -> SpectralVelocity:
    """Smooth random body force of norm ``amplitude``.

    Each component of mode k is a random low-degree polynomial of the right
    parity, damped by exp(-decay |k|); mode -k is the conjugate of mode k.
    """
    rng = np.random.default_rng(seed) if rng is None else rng
    r = grid.nodes
    arrs = [_zeros(K, grid.n) for _ in range(3)]
    for k in range(K + 1):
        damp = np.exp(-decay * k)
        for a, odd in zip(arrs, (True, False, True)):
            c = rng.standard_normal(4) + (1j * rng.standard_normal(4) if k else 0.0)
            prof = sum(cj * r ** (2 * j + (1 if odd else 0)) for j, cj in enumerate(c))
            a[k + K] = damp * prof * (1.0 - r * r)
            if k:
                a[K - k] = np.conj(a[k + K])
    f = SpectralVelocity(grid, xi0, *arrs)
    nrm = f.forcing_norm()
    return f * (amplitude / nrm) if nrm > 0 else f


def amplitude_scaling_order(grid: RadialGrid, phi: float, forcing: SpectralVelocity,
                            eps: float = 1.0, halvings: int = 2) -> tuple:
    """Observed order p in ||v(e F) - e T F|| = O(e^p).

    Solves at e = eps, eps/2, ... (``halvings`` halvings) and returns
    ``(orders, defects)`` with defects measured in the H1 iteration norm.
    """
    defects = []
    for j in range(halvings + 1):
        e = eps / 2.0 ** j
        res = solve_steady(grid, phi, forcing * e)
        defects.append((res.velocity - res.linear).h1_norm())
    orders = [float(np.log2(defects[j] / defects[j + 1])) for j in range(halvings)]
    return orders, defects
