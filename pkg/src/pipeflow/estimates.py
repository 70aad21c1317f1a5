"""Weighted seminorms, energy identities, regime estimates and inequality trials.

Norms of a single solution are evaluated on its lifted representation with an
exact Gauss-Legendre rule.  Worst-case ratios replace "random F" by the
supremum over all forcings, computed as a squared operator norm.

Regimes
-------
With eps1 = 0.05, fluxes below 1/eps1^2 are treated as small.  Otherwise
|xi| <= 1/(eps1 Phi) is low frequency, |xi| >= eps1 sqrt(Phi) is high
frequency and the band in between is the intermediate regime.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, Iterable, Optional

import numpy as np

from .errors import NumericalError, UsageError, ValidationError
from .grid import Parity, RadialGrid, WeightKind, gauss_radial
from .modes import BoundaryKind, FlowParams, ForcingMode, ModeSolution, grid_of_size
from .response import (MeridionalResponse, SwirlResponse, meridional_velocity_rows,
                       quadrature_for, stream_rows, sum_squares, swirl_seminorm_rows,
                       swirl_velocity_rows)
from .specfun import bessel_i1, bessel_i1_prime

__all__ = [
    "EPS1",
    "RegimeId",
    "NormReport",
    "IdentityReport",
    "RatioRecord",
    "InequalityKind",
    "TrialRecord",
    "classify",
    "mode_norm_report",
    "verify_energy_identities",
    "verify_regime_estimate",
    "worst_case_ratios",
    "regime_ratio_names",
    "inequality_trial",
    "inequality_suite",
    "suite_report_json",
]

EPS1 = 0.05
SOLVED_TOL = 1e-8


class RegimeId(Enum):
    SMALL_FLUX = "small_flux"
    LOW_FREQ = "low_freq"
    HIGH_FREQ = "high_freq"
    MED_FREQ_SLIP = "med_freq_slip"
    MED_FREQ_FULL = "med_freq_full"
    SWIRL = "swirl"


def classify(params: FlowParams, eps1: float = EPS1) -> RegimeId:
    """Frequency regime of ``params`` (the intermediate band maps to MED_FREQ_FULL)."""
    phi, ax = params.phi, abs(params.xi)
    if phi < 1.0 / eps1 ** 2:
        return RegimeId.SMALL_FLUX
    if ax <= 1.0 / (eps1 * phi):
        return RegimeId.LOW_FREQ
    if ax >= eps1 * np.sqrt(phi):
        return RegimeId.HIGH_FREQ
    return RegimeId.MED_FREQ_FULL


# ---------------------------------------------------------------------------
# norm reports

@dataclass(frozen=True)
class NormReport:
    """Named nonnegative norms of one mode solution.

    Keys: L2, DR, LPSI, DLPSI, L2PSI (stream seminorms), DR_W, L2_W (with the
    weight 1 - r^2), L2_DR (int |psi|^2 dr), frequency-weighted combinations
    XI2_DR, XI4_L2, XI2_LPSI, XI4_DR, XI6_L2, XI4_LPSI, XI6_DR, XI8_L2,
    velocity norms H0, H1, H2 (including swirl when present) and
    H53 = H1^(1/3) H2^(2/3).
    """

    values: Dict[str, float]

    def __getitem__(self, key: str) -> float:
        return self.values[key]

    def keys(self):
        return self.values.keys()

    def to_dict(self) -> dict:
        return dict(self.values)


def _stream_profiles(sol: ModeSolution):
    """Profiles, points and W_R weights for the quadratic forms of ``sol``."""
    g = sol.grid
    if sol.rep is not None:
        q = quadrature_for(g)
        return sol.rep.profiles(q.points), q.points, q.w_even, q.w_odd
    r = g.nodes
    phi = sol.psi_hat.values / r
    d4 = g.delta4_of(phi)
    p = {"phi": phi, "dphi": g.d_even @ phi, "d4phi": d4, "d4phi_p": g.d_even @ d4,
         "chi": g.delta4_of(d4)}
    return p, r, g.weights(WeightKind.W_R, Parity.EVEN), g.weights(WeightKind.W_R, Parity.ODD)


def _swirl_profiles(sol: ModeSolution):
    g = sol.grid
    if sol.swirl_rep is not None:
        q = quadrature_for(sol.swirl_rep.grid)
        return sol.swirl_rep.profiles(q.points), q.points, q.w_even
    if sol.vtheta_hat is None:
        return None
    r = g.nodes
    phi = sol.vtheta_hat.values / r
    return ({"phi": phi, "dphi": g.d_even @ phi, "chi": g.delta4_of(phi)}, r,
            g.weights(WeightKind.W_R, Parity.EVEN))


def mode_norm_report(sol: ModeSolution) -> NormReport:
    """All seminorms and velocity norms of ``sol`` by quadrature."""
    xi2 = sol.params.xi ** 2
    p, q, we, wo = _stream_profiles(sol)
    rows = stream_rows(p, q, we, wo)
    v = {k: sum_squares(rows[k]) for k in rows}
    v.update({
        "XI2_DR": xi2 * v["DR"], "XI4_L2": xi2 ** 2 * v["L2"],
        "XI2_LPSI": xi2 * v["LPSI"], "XI4_DR": xi2 ** 2 * v["DR"], "XI6_L2": xi2 ** 3 * v["L2"],
        "XI4_LPSI": xi2 ** 2 * v["LPSI"], "XI6_DR": xi2 ** 3 * v["DR"], "XI8_L2": xi2 ** 4 * v["L2"],
    })
    vel = meridional_velocity_rows(p, q, we, sol.params.xi)
    sq = {k: sum_squares(vel[k]) for k in ("H0", "H1", "H2")}
    sw = _swirl_profiles(sol)
    if sw is not None:
        ps, qs, ws = sw
        svel = swirl_velocity_rows(ps, qs, ws, sol.params.xi)
        for k in sq:
            sq[k] += sum_squares(svel[k])
        srows = swirl_seminorm_rows(ps, qs, ws)
        v["SWIRL_L2"] = sum_squares(srows["L2"])
        v["SWIRL_DR"] = sum_squares(srows["DR"])
    for k in sq:
        v[k] = float(np.sqrt(max(sq[k], 0.0)))
    v["H53"] = v["H1"] ** (1.0 / 3.0) * v["H2"] ** (2.0 / 3.0)
    return NormReport({k: float(x) for k, x in v.items()})


# ---------------------------------------------------------------------------
# energy identities

@dataclass(frozen=True)
class IdentityReport:
    """Normalised residuals |LHS - RHS| / scale of the energy identities.

    ``terms`` holds the raw left and right sides.  The scale is the largest of
    |LHS|, |RHS| and |int f conj(psi) r dr| so that identities whose sides
    both vanish (for instance at Phi = 0) stay well defined.
    """

    residuals: Dict[str, float]
    terms: Dict[str, tuple]

    @property
    def worst(self) -> float:
        return max(self.residuals.values()) if self.residuals else 0.0


def _balance(lhs: float, rhs: float, ref: float) -> float:
    scale = max(abs(lhs), abs(rhs), abs(ref))
    return 0.0 if scale == 0.0 else abs(lhs - rhs) / scale


def verify_energy_identities(sol: ModeSolution, forcing: ForcingMode) -> IdentityReport:
    """Check the real/imaginary energy balances of the stream and swirl solves.

    Stream function (psi = r phi)::

        LPSI + 2 xi^2 DR + xi^4 L2 = -Re <f, psi> - (4 Phi/pi) xi Im X
        xi int U |(r psi)'|^2 / r dr + xi^3 int U |psi|^2 r dr = -Im <f, psi>
        Re X = 0,   X = int (r psi)' r conj(psi) dr

    Swirl::

        int |(r v)'|^2 / r dr + xi^2 int |v|^2 r dr = Re <F, v>
        (2 Phi/pi) xi int (1 - r^2) |v|^2 r dr = Im <F, v>

    with <a, b> = int a conj(b) r dr.
    """
    if not (np.isfinite(sol.residual) and sol.residual <= SOLVED_TOL):
        raise UsageError("energy identities need a solution solved to residual tolerance")
    params = sol.params
    xi, Phi = params.xi, params.phi
    p, q, we, _ = _stream_profiles(sol)
    fg = forcing.grid
    f = fg.evaluate(forcing.f_hat(xi), q)
    psi = q * p["phi"]
    drpsi = 2.0 * p["phi"] + q * p["dphi"]
    U = params.centre_velocity * (1.0 - q * q)
    L2 = float(we @ np.abs(psi) ** 2)
    DR = float(we @ np.abs(drpsi) ** 2)
    LPSI = float(we @ np.abs(q * p["d4phi"]) ** 2)
    fpsi = complex(we @ (f * np.conj(psi)))
    X = complex(we @ (q * drpsi * np.conj(psi)))
    lhs1 = LPSI + 2 * xi * xi * DR + xi ** 4 * L2
    rhs1 = -fpsi.real - (4.0 * Phi / np.pi) * xi * X.imag
    lhs2 = xi * float(we @ (U * np.abs(drpsi) ** 2)) + xi ** 3 * float(we @ (U * np.abs(psi) ** 2))
    rhs2 = -fpsi.imag
    res = {
        "stream_real": _balance(lhs1, rhs1, abs(fpsi)),
        "stream_imag": _balance(lhs2, rhs2, abs(fpsi)),
        "flux_term_real": abs(X.real) / max(abs(X), np.sqrt(max(L2 * DR, 0.0)), 1e-300)
        if (L2 > 0) else 0.0,
    }
    terms = {"stream_real": (lhs1, rhs1), "stream_imag": (lhs2, rhs2), "flux_term_real": (X.real, 0.0)}
    sw = _swirl_profiles(sol)
    if sw is not None and sol.swirl_rep is not None:
        ps, qs, ws = sw
        F = fg.evaluate(forcing.theta(), qs)
        v = qs * ps["phi"]
        drv = 2.0 * ps["phi"] + qs * ps["dphi"]
        Fv = complex(ws @ (F * np.conj(v)))
        lhs3 = float(ws @ np.abs(drv) ** 2) + xi * xi * float(ws @ np.abs(v) ** 2)
        lhs4 = (2.0 * Phi / np.pi) * xi * float(ws @ ((1.0 - qs * qs) * np.abs(v) ** 2))
        res["swirl_real"] = _balance(lhs3, Fv.real, abs(Fv))
        res["swirl_imag"] = _balance(lhs4, Fv.imag, abs(Fv))
        terms["swirl_real"] = (lhs3, Fv.real)
        terms["swirl_imag"] = (lhs4, Fv.imag)
    return IdentityReport(res, terms)


# ---------------------------------------------------------------------------
# regime estimates
#
# Each ratio is LHS / (scaling * ||F||^2) where LHS is a weighted sum of the
# seminorms named in ``terms`` (factors are functions of (Phi, xi)).

def _px(P: FlowParams) -> float:
    return P.phi * abs(P.xi)


@dataclass(frozen=True)
class _RatioDef:
    block: str                       # "stream", "velocity" or "swirl"
    terms: Callable[[FlowParams], dict]
    scaling: Callable[[FlowParams], float]
    bc: BoundaryKind = BoundaryKind.NOSLIP
    bound: Optional[float] = None    # explicit constant when the inequality has one


_RATIOS: Dict[str, _RatioDef] = {
    # ||v||_H2 <= C (1 + Phi^2) ||F||
    "small_flux_h2": _RatioDef("velocity", lambda P: {"H2": 1.0},
                               lambda P: (1.0 + P.phi ** 2) ** 2),
    # LPSI + 2 xi^2 DR + xi^4 L2 <= C ||F||^2
    "low_freq_energy": _RatioDef("stream", lambda P: {"LPSI": 1.0, "DR": 2 * P.xi ** 2, "L2": P.xi ** 4},
                                 lambda P: 1.0),
    # LPSI + xi^2 DR + xi^4 L2 <= C xi^-2 ||F||^2
    "high_freq_energy": _RatioDef("stream", lambda P: {"LPSI": 1.0, "DR": P.xi ** 2, "L2": P.xi ** 4},
                                  lambda P: P.xi ** -2),
    # Phi|xi| DR_W + Phi|xi|^3 L2_W <= C xi^-2 ||F||^2
    "high_freq_weighted": _RatioDef("stream", lambda P: {"DR_W": _px(P), "L2_W": _px(P) * P.xi ** 2},
                                    lambda P: P.xi ** -2),
    # slip problem: L2 <= C (Phi|xi|)^(-5/3) ||F||^2
    "slip_l2": _RatioDef("stream", lambda P: {"L2": 1.0}, lambda P: _px(P) ** (-5.0 / 3.0),
                         BoundaryKind.SLIP),
    # DR + xi^2 L2 <= C (Phi|xi|)^(-4/3) ||F||^2
    "slip_h1": _RatioDef("stream", lambda P: {"DR": 1.0, "L2": P.xi ** 2},
                         lambda P: _px(P) ** (-4.0 / 3.0), BoundaryKind.SLIP),
    # LPSI + xi^2 DR + xi^4 L2 <= C (Phi|xi|)^(-2/3) ||F||^2
    "slip_h2": _RatioDef("stream", lambda P: {"LPSI": 1.0, "DR": P.xi ** 2, "L2": P.xi ** 4},
                         lambda P: _px(P) ** (-2.0 / 3.0), BoundaryKind.SLIP),
    # DLPSI + xi^2 LPSI + xi^4 DR + xi^6 L2_DR <= C ||F||^2
    "slip_h3": _RatioDef("stream", lambda P: {"DLPSI": 1.0, "LPSI": P.xi ** 2, "DR": P.xi ** 4,
                                              "L2_DR": P.xi ** 6},
                         lambda P: 1.0, BoundaryKind.SLIP),
    # full no-slip problem, combined second- and third-order control
    "full_h3": _RatioDef("stream", lambda P: {"LPSI": 1.0 + P.xi ** 2, "DR": 1.0 + P.xi ** 4,
                                              "L2": 1.0 + P.xi ** 6, "DLPSI": 1.0},
                         lambda P: 1.0),
    # swirl: int |v|^2 r dr <= C (Phi|xi|)^(-4/3) ||F_theta||^2
    "swirl_l2": _RatioDef("swirl", lambda P: {"L2": 1.0}, lambda P: _px(P) ** (-4.0 / 3.0)),
    # swirl: ||v||_H2 <= C ||F_theta||
    "swirl_h2": _RatioDef("swirl", lambda P: {"H2": 1.0}, lambda P: 1.0),
    # swirl: DR + xi^2 L2 <= ||F_theta||^2 (constant one)
    "swirl_energy": _RatioDef("swirl", lambda P: {"DR": 1.0, "L2": P.xi ** 2}, lambda P: 1.0, bound=1.0),
}

_REGIME_RATIOS = {
    RegimeId.SMALL_FLUX: ("small_flux_h2",),
    RegimeId.LOW_FREQ: ("low_freq_energy",),
    RegimeId.HIGH_FREQ: ("high_freq_energy", "high_freq_weighted"),
    RegimeId.MED_FREQ_SLIP: ("slip_l2", "slip_h1", "slip_h2", "slip_h3"),
    RegimeId.MED_FREQ_FULL: ("full_h3",),
    RegimeId.SWIRL: ("swirl_l2", "swirl_h2", "swirl_energy"),
}


def regime_ratio_names(regime: RegimeId) -> tuple:
    return _REGIME_RATIOS[RegimeId(regime)]


@dataclass(frozen=True)
class RatioRecord:
    """Empirical constants C of the estimates of one regime."""

    regime: RegimeId
    params: FlowParams
    ratios: Dict[str, float]
    forcing_norm_sq: float
    worst_case: bool = False

    def to_dict(self) -> dict:
        return {"regime": self.regime.value, "phi": self.params.phi, "xi": self.params.xi,
                "ratios": self.ratios, "forcing_norm_sq": self.forcing_norm_sq,
                "worst_case": self.worst_case}


def _check_regime(regime: RegimeId, params: FlowParams) -> None:
    if regime is RegimeId.SWIRL:
        return
    found = classify(params)
    ok = found is regime or (found is RegimeId.MED_FREQ_FULL and regime is RegimeId.MED_FREQ_SLIP)
    if not ok:
        raise UsageError(f"parameters (phi={params.phi}, xi={params.xi}) lie in regime "
                         f"{found.value}, not {regime.value}")


def _lhs_value(defn: _RatioDef, params: FlowParams, report: NormReport) -> float:
    terms = defn.terms(params)
    if defn.block == "velocity":
        return sum(c * report[k] ** 2 for k, c in terms.items())
    if defn.block == "swirl":
        vals = {"L2": report["SWIRL_L2"], "DR": report["SWIRL_DR"], "H2": report.values.get("SWIRL_H2")}
        return sum(c * (vals[k] ** 2 if k == "H2" else vals[k]) for k, c in terms.items())
    return sum(c * report[k] for k, c in terms.items())


def verify_regime_estimate(regime: RegimeId, params: FlowParams, forcing: ForcingMode,
                           sol: ModeSolution) -> RatioRecord:
    """Ratios LHS / (scaling * ||F||^2) of the regime's estimates for one solve.

    The meridional estimates use ||(F_r, F_z)||^2, the swirl estimates
    ||F_theta||^2.  Zero forcing gives ratio 0.
    """
    regime = RegimeId(regime)
    _check_regime(regime, params)
    if sol.params != params:
        raise UsageError("solution parameters differ from the given parameters")
    names = _REGIME_RATIOS[regime]
    if regime is RegimeId.MED_FREQ_SLIP and sol.bc_kind is not BoundaryKind.SLIP:
        raise UsageError("slip-regime ratios need a slip solution")
    if regime is not RegimeId.MED_FREQ_SLIP and regime is not RegimeId.SWIRL \
            and sol.bc_kind is not BoundaryKind.NOSLIP:
        raise UsageError("regime ratios need a no-slip solution")
    if regime is RegimeId.SWIRL:
        if sol.swirl_rep is None:
            raise UsageError("swirl ratios need a swirl solve")
        fn = forcing.norm_sq() - forcing.meridional_norm_sq()
        report = _swirl_report(sol)
    else:
        fn = forcing.meridional_norm_sq()
        report = _meridional_only_report(sol)
    ratios = {}
    for name in names:
        d = _RATIOS[name]
        ratios[name] = 0.0 if fn == 0.0 else _lhs_value(d, params, report) / (d.scaling(params) * fn)
    return RatioRecord(regime, params, ratios, fn)


def _meridional_only_report(sol: ModeSolution) -> NormReport:
    from dataclasses import replace as _replace
    return mode_norm_report(_replace(sol, vtheta_hat=None, swirl_rep=None))


def _swirl_report(sol: ModeSolution) -> NormReport:
    ps, qs, ws = _swirl_profiles(sol)
    rows = swirl_seminorm_rows(ps, qs, ws)
    vel = swirl_velocity_rows(ps, qs, ws, sol.params.xi)
    return NormReport({"SWIRL_L2": sum_squares(rows["L2"]), "SWIRL_DR": sum_squares(rows["DR"]),
                       "SWIRL_H2": float(np.sqrt(sum_squares(vel["H2"])))})


def worst_case_ratios(grid: RadialGrid, params: FlowParams, regime: RegimeId, *,
                      oversample: int = 2) -> RatioRecord:
    """Supremum over all forcings of each ratio of ``regime``.

    Each LHS is a quadratic form ||G y||^2 in the solution unknowns y, so the
    supremum of LHS / ||F||^2 is the squared largest singular value of the
    forcing-to-G y map (forcing measured by the exact W_R norm of its
    interpolant).  Forcings are the interpolants on ``grid``; solutions are
    computed on a grid ``oversample`` times finer.
    """
    regime = RegimeId(regime)
    _check_regime(regime, params)
    fine = grid if oversample == 1 else grid_of_size(oversample * grid.n)
    ratios = {}
    responses = {}
    for name in _REGIME_RATIOS[regime]:
        d = _RATIOS[name]
        terms = d.terms(params)
        if d.block == "swirl":
            resp = responses.setdefault("swirl", SwirlResponse(fine, params, forcing_grid=grid))
            if "H2" in terms:
                G = resp.velocity_operator("H2")
            else:
                G = resp.seminorm_operator(terms)
        else:
            key = ("merid", d.bc)
            resp = responses.setdefault(key, MeridionalResponse(fine, params, d.bc, forcing_grid=grid))
            G = resp.velocity_operator("H2") if d.block == "velocity" else resp.seminorm_operator(terms)
        ratios[name] = resp.gain(G) ** 2 / d.scaling(params)
    return RatioRecord(regime, params, ratios, 1.0, worst_case=True)


# ---------------------------------------------------------------------------
# inequality trials

class InequalityKind(Enum):
    """Elementary inequalities on [0, 1] used by the estimates.

    POINCARE : int |g|^2 r dr <= int |(r g)'|^2 / r dr
    POINCARE_L : int |(rg)'|^2/r dr <= (int |Lg|^2 r dr)^(1/2) (int |g|^2 r dr)^(1/2), g(1) = 0
    WALL_TRACE : bounds on |(r g)'(1)| and |L g(1)| by interior integrals (explicit constants)
    HLP : int |g|^2 dr <= (1/2) int |g'|^2 (1 - r^2) dr for g(0) = 0 (sharp for g = r)
    WEIGHTED_L2 : int |g|^2 r dr <= C [A^(2/3) B^(1/3) + A], A = int (1-r^2)|g|^2 r dr
    WEIGHTED_DR : the same interpolation one derivative higher
    BESSEL : ratio, growth and derivative bounds of I1 and integrals of I1(|xi| r)
    """

    POINCARE = "poincare"
    POINCARE_L = "poincare_l"
    WALL_TRACE = "wall_trace"
    HLP = "hlp"
    WEIGHTED_L2 = "weighted_l2"
    WEIGHTED_DR = "weighted_dr"
    BESSEL = "bessel"


CONSTANT_FREE = (InequalityKind.POINCARE, InequalityKind.POINCARE_L, InequalityKind.WALL_TRACE,
                 InequalityKind.HLP)


@dataclass(frozen=True)
class TrialRecord:
    """One trial: left side, right side and ratio (several sub-checks allowed)."""

    kind: InequalityKind
    lhs: tuple
    rhs: tuple
    ratios: tuple
    asserted: bool
    empirical: Optional[dict] = None

    @property
    def worst(self) -> float:
        return max(self.ratios)

    @property
    def holds(self) -> bool:
        return (not self.asserted) or self.worst <= 1.0 + 1e-9


_P = np.polynomial.Polynomial
_X = _P([0.0, 1.0])


def _int(p, a: float = 0.0, b: float = 1.0) -> float:
    q = p.integ()
    return float(q(b) - q(a))


def _random_factor(rng: np.random.Generator, max_degree: int = 11) -> np.polynomial.Polynomial:
    """Random polynomial P; trials use g = r P(r) so that g(0) = 0."""
    while True:
        deg = int(rng.integers(0, max_degree + 1))
        c = rng.standard_normal(deg + 1) * 10.0 ** rng.uniform(-1, 1, deg + 1)
        p = _P(c)
        if np.any(p.coef != 0):
            return p


def _as_factor(g) -> np.polynomial.Polynomial:
    """Given g as Polynomial with g(0) = 0, return P = g / r."""
    if not isinstance(g, np.polynomial.Polynomial):
        g = _P(np.asarray(g, dtype=float))
    if abs(g(0.0)) > 1e-14 * max(1.0, np.max(np.abs(g.coef))):
        raise ValidationError("trial function must vanish at r = 0")
    q, _ = divmod(g, _X)
    return q


_GL_HALF = np.polynomial.legendre.leggauss(64)


def _int_half(fn) -> float:
    """Gauss-Legendre integral over [1/2, 1] of a smooth callable."""
    x, w = _GL_HALF
    r = 0.75 + 0.25 * x
    return float(np.sum(0.25 * w * fn(r)))


def _trial_poincare(P):
    g = _X * P
    d = 2 * P + _X * P.deriv()                  # (r g)' / r
    lhs = _int(g * g * _X)
    rhs = _int(d * d * _X)
    return (lhs,), (rhs,)


def _clamp_wall(P):
    """Factor of g - r g(1): keeps g(0) = 0 and enforces g(1) = 0.

    Built as sum_k c_k (r^k - 1) so the constant term never cancels, then
    scaled to unit largest coefficient (all inequalities are homogeneous).
    """
    c = np.asarray(P.coef, dtype=float)[1:]
    if not np.any(c != 0):
        return _P([1.0, 0.0, -1.0])
    c = c / np.max(np.abs(c))
    return _P(np.concatenate([[-np.sum(c)], c]))


def _trial_poincare_l(P):
    P = _clamp_wall(P)
    g = _X * P
    d = 2 * P + _X * P.deriv()
    Lg = d.deriv()
    a, b, c = _int(d * d * _X), _int(Lg * Lg * _X), _int(g * g * _X)
    return (a, np.sqrt(b * c)), (np.sqrt(b * c), b)


def _unit(Q):
    """Q scaled to unit largest coefficient, and the scale (squares stay representable)."""
    s = float(np.max(np.abs(Q.coef)))
    return (Q / s, s) if s > 0 else (Q, 1.0)


def _trial_wall_trace(P):
    """Wall values of (rg)', Lg and (r Lg)' against interior integrals.

    Every bound is homogeneous, so each group is evaluated on a normalised
    polynomial and scaled back; this keeps widely separated coefficients
    from underflowing in the squared integrands.
    """
    d, sd = _unit(2 * P + _X * P.deriv())      # (r g)' / r
    Lg = d.deriv()
    a, b = _int(d * d * _X), _int(Lg * Lg * _X)
    lhs1 = sd * abs(d(1.0))
    rhs1 = sd * (2.0 * a ** 0.25 * b ** 0.25 + 4.0 * np.sqrt(a))
    Lg, sl = _unit(Lg)
    sl *= sd
    dl = (_X * Lg).deriv()                      # (r L g)'
    dl2 = dl.deriv()
    A = _int_half(lambda r: Lg(r) ** 2 * r)
    B = _int_half(lambda r: dl(r) ** 2 / r)
    lhs2 = sl * abs(Lg(1.0))
    rhs2 = sl * (2.0 * np.sqrt(A) + 2.0 * B ** 0.25 * A ** 0.25)
    # L^2 g = ((r L g)'/r)' = (r L g)''/r - (r L g)'/r^2, needed on [1/2, 1] only
    C = _int_half(lambda r: (dl2(r) / r - dl(r) / r ** 2) ** 2 * r)
    lhs3 = sl ** 2 * dl(1.0) ** 2
    rhs3 = sl ** 2 * (4.0 * B + 8.0 * np.sqrt(C) * np.sqrt(B))
    P1 = _clamp_wall(P)
    g1 = _X * P1
    d1 = 2 * P1 + _X * P1.deriv()
    Lg1 = d1.deriv()
    lhs4 = abs(d1(1.0))
    rhs4 = 2.0 * np.sqrt(3.0) * _int(g1 * g1 * _X) ** 0.125 * _int(Lg1 * Lg1 * _X) ** 0.375
    return (lhs1, lhs2, lhs3, lhs4), (rhs1, rhs2, rhs3, rhs4)


def _trial_hlp(P):
    g = _X * P
    lhs = _int(g * g)
    rhs = 0.5 * _int(g.deriv() ** 2 * (1 - _X * _X))
    return (lhs,), (rhs,)


def _trial_weighted_l2(P):
    g = _X * P
    d = 2 * P + _X * P.deriv()
    A = _int((1 - _X * _X) * g * g * _X)
    B = _int(d * d * _X)
    return (_int(g * g * _X),), (A ** (2.0 / 3.0) * B ** (1.0 / 3.0) + A,)


def _trial_weighted_dr(P):
    d = 2 * P + _X * P.deriv()
    Lg = d.deriv()
    A = _int((1 - _X * _X) * d * d * _X)
    B = _int(Lg * Lg * _X)
    return (_int(d * d * _X),), (A ** (2.0 / 3.0) * B ** (1.0 / 3.0) + A,)


def _bessel_integrals(xi: float, m: int = 200):
    """int |I1(xi r)|^2 r dr and int |(r I1(xi r))'|^2 / r dr by Gauss-Legendre."""
    r, w = gauss_radial(m)
    i1 = bessel_i1(xi * r)
    d = i1 + xi * r * bessel_i1_prime(xi * r)          # (r I1(xi r))'
    return float(w @ i1 ** 2), float(w @ (d / r) ** 2)


def _trial_bessel(args):
    """Bessel checks at (x, y, xi): constant-free bounds then integral ratios."""
    x, y, xi = args
    i1x, i1y = bessel_i1(x), bessel_i1(y)
    ratio = i1x / i1y
    lo = np.exp(x - y) * x / y
    hi = np.exp(x - y) * np.sqrt(y / x)
    dp = bessel_i1_prime(x)
    lhs = (lo, ratio, x / 2.0, i1x, 0.0, dp)
    rhs = (ratio, hi, i1x, 0.5 * x * np.cosh(x), dp, i1x + i1x / x)
    return lhs, rhs


def _bessel_integral_ratios(xi: float) -> tuple:
    """Empirical constants of the four I1(|xi| r) integral bounds."""
    i1 = bessel_i1(xi)
    l2, dr = _bessel_integrals(xi)
    small, big = min(1.0, 1.0 / xi), max(1.0, xi)
    xi4 = xi ** 4
    # L I1(xi r) = xi^2 I1(xi r), (r L I1)' = xi^2 (r I1)'
    return (l2 / (small * i1 ** 2), dr / (big * i1 ** 2),
            xi4 * l2 / (small * xi4 * i1 ** 2), xi4 * dr / (big * xi4 * i1 ** 2))


_TRIALS = {
    InequalityKind.POINCARE: _trial_poincare,
    InequalityKind.POINCARE_L: _trial_poincare_l,
    InequalityKind.WALL_TRACE: _trial_wall_trace,
    InequalityKind.HLP: _trial_hlp,
    InequalityKind.WEIGHTED_L2: _trial_weighted_l2,
    InequalityKind.WEIGHTED_DR: _trial_weighted_dr,
}


def inequality_trial(kind: InequalityKind, g=None, *, rng: Optional[np.random.Generator] = None) -> TrialRecord:
    """Evaluate one inequality on a trial function.

    Parameters
    ----------
    kind : InequalityKind
    g : Polynomial, coefficient array or tuple, optional
        Trial function with g(0) = 0 for the polynomial inequalities, or
        (x, y, xi) with 0 < x < y for BESSEL.  Drawn from ``rng`` if omitted.

    Returns
    -------
    TrialRecord
        For inequalities with explicit constants the ratios are asserted
        (``holds``); for the C-inequalities they are the empirical constants.
    """
    kind = InequalityKind(kind)
    if kind is InequalityKind.BESSEL:
        if g is None:
            rng = rng or np.random.default_rng()
            x, y = np.sort(rng.uniform(1e-3, 40.0, 2))
            if y - x < 1e-6:
                y = x + 1.0
            g = (float(x), float(y), float(10 ** rng.uniform(-2, np.log10(50.0))))
        x, y, xi = g
        if not (0 < x < y) or xi <= 0:
            raise ValidationError("BESSEL trial needs 0 < x < y and xi > 0")
        lhs, rhs = _trial_bessel(g)
        ratios = tuple(l / r if r > 0 else (0.0 if l <= 0 else np.inf) for l, r in zip(lhs, rhs))
        c = _bessel_integral_ratios(xi)
        emp = {"xi": xi, "l2": c[0], "dr": c[1], "lpsi": c[2], "dlpsi": c[3]}
        return TrialRecord(kind, lhs, rhs, ratios, True, emp)
    if g is None:
        rng = rng or np.random.default_rng()
        P = _random_factor(rng)
    else:
        P = _as_factor(g)
    lhs, rhs = _TRIALS[kind](P)
    ratios = tuple((l / r) if r > 0 else (0.0 if l == 0 else np.inf) for l, r in zip(lhs, rhs))
    return TrialRecord(kind, tuple(lhs), tuple(rhs), ratios, kind in CONSTANT_FREE)


@dataclass(frozen=True)
class SuiteResult:
    kind: InequalityKind
    trials: int
    worst_ratio: float
    passed: bool
    sharp_witness: Optional[dict] = None
    empirical_constants: Optional[dict] = None

    def to_dict(self) -> dict:
        return {"lemma": self.kind.value, "trials": self.trials, "worst_ratio": self.worst_ratio,
                "passed": self.passed, "sharp_witness": self.sharp_witness,
                "empirical_constants": self.empirical_constants}


def inequality_suite(kind: InequalityKind, trials: int = 1000, seed: int = 0) -> SuiteResult:
    """Run ``trials`` random trials of ``kind`` (seeded per trial index)."""
    kind = InequalityKind(kind)
    worst = 0.0
    ok = True
    integral_c = np.zeros(4)
    for i in range(trials):
        rng = np.random.default_rng([seed, i])
        rec = inequality_trial(kind, rng=rng)
        if rec.empirical is not None:
            e = rec.empirical
            integral_c = np.maximum(integral_c, [e["l2"], e["dr"], e["lpsi"], e["dlpsi"]])
        if not np.all(np.isfinite(rec.ratios)):
            raise NumericalError(f"non-finite ratio in {kind.value} trial {i}")
        worst = max(worst, rec.worst)
        ok = ok and rec.holds
    witness = None
    if kind is InequalityKind.HLP:
        w = inequality_trial(kind, _X)
        witness = {"g": "r", "lhs": w.lhs[0], "rhs": w.rhs[0], "ratio": w.ratios[0]}
    emp = None
    if kind is InequalityKind.BESSEL:
        emp = dict(zip(("l2", "dr", "lpsi", "dlpsi"), map(float, integral_c)))
    elif kind not in CONSTANT_FREE:
        emp = {"constant": float(worst)}
    return SuiteResult(kind, trials, float(worst), bool(ok), witness, emp)


def suite_report_json(results: Iterable[SuiteResult]) -> str:
    return json.dumps([r.to_dict() for r in results], indent=2, sort_keys=True)
