"""Operator-norm gain sweeps over flux and axial frequency.

For one mode the forcing-to-velocity map is block diagonal: (F_r, F_z) drive
the meridional velocity through the stream function and F_theta drives the
swirl.  Its norm in each target space is therefore the larger of the two
block norms.  Sweeps evaluate these gains cell by cell, cache every cell
under a content-addressed key and fit power laws to the suprema over xi.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from ._version import __version__
from .errors import NumericalError, ValidationError
from .estimates import RegimeId, classify
from .grid import RadialGrid
from .modes import BoundaryKind, FlowParams, grid_of_size
from .response import MeridionalResponse, SwirlResponse

__all__ = [
    "GAIN_KEYS",
    "CSV_HEADER",
    "ScanRecord",
    "ExponentFit",
    "cache_key",
    "resolution_for",
    "mode_gain",
    "frequency_grid",
    "sweep",
    "write_csv",
    "records_to_csv",
    "sup_gain",
    "resolvent_norm_at_zero",
    "fit_exponent",
    "summarize",
]

GAIN_KEYS = ("L2", "H1", "H2", "H53")
CSV_HEADER = ("phi", "xi", "regime", "gain_l2", "gain_h1", "gain_h2", "gain_h53", "cond", "n")
CACHE_ENV = "PIPEFLOW_CACHE_DIR"
OVERSAMPLE = 2          # solve grid / forcing grid
MAX_REFINE = 4          # resolution may grow to MAX_REFINE * grid.n
_LAYER_POINTS = 0.5     # radial nodes per unit of the layer scale beta
_NORM_OF = {"L2": "H0", "H1": "H1", "H2": "H2"}


@dataclass(frozen=True)
class ScanRecord:
    """Gains of one (phi, xi) cell.

    ``gains`` are sup ||v||_X / ||F||_{L2} over forcing interpolants with the
    target norm X in L2, H1, H2 and H53; ``block_gains`` splits them into the
    meridional and swirl parts.  Failed cells carry NaN gains and ``error``.
    """

    phi: float
    xi: float
    regime: RegimeId
    gains: Dict[str, float]
    cond: float
    n: int
    block_gains: Dict[str, Dict[str, float]] = field(default_factory=dict)
    error: Optional[str] = None

    def __post_init__(self):
        for k, v in self.gains.items():
            if np.isfinite(v) and v < 0:
                raise ValidationError(f"gain {k} must be >= 0, got {v}")

    @property
    def ok(self) -> bool:
        return self.error is None

    def to_dict(self) -> dict:
        return {"phi": self.phi, "xi": self.xi, "regime": self.regime.value,
                "gains": dict(self.gains), "cond": self.cond, "n": self.n,
                "block_gains": {k: dict(v) for k, v in self.block_gains.items()},
                "error": self.error}

    @classmethod
    def from_dict(cls, d: dict) -> "ScanRecord":
        return cls(phi=float(d["phi"]), xi=float(d["xi"]), regime=RegimeId(d["regime"]),
                   gains={k: float(v) for k, v in d["gains"].items()}, cond=float(d["cond"]),
                   n=int(d["n"]), block_gains={k: {kk: float(vv) for kk, vv in v.items()}
                                               for k, v in d.get("block_gains", {}).items()},
                   error=d.get("error"))


@dataclass(frozen=True)
class ExponentFit:
    """Least-squares line log y = slope log x + intercept."""

    slope: float
    intercept: float
    r_squared: float
    count: int

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept,
                "r_squared": self.r_squared, "count": self.count}


# ---------------------------------------------------------------------------
# single cell

def resolution_for(grid: RadialGrid, params: FlowParams) -> int:
    """Radial size for a gain evaluation.

    Starting from ``grid.n`` the size is doubled until it reaches the layer
    scale (4 Phi |xi| / pi)^(1/3), at most ``MAX_REFINE`` times the start.
    """
    scale = _LAYER_POINTS * np.cbrt(4.0 * params.phi * abs(params.xi) / np.pi)
    n = grid.n
    while n < scale and n < MAX_REFINE * grid.n:
        n *= 2
    return n


def _block_gains(resp, method: str) -> Dict[str, float]:
    g = {k: resp.gain(resp.velocity_operator(kind), method=method) for k, kind in _NORM_OF.items()}
    g["H53"] = g["H1"] ** (1.0 / 3.0) * g["H2"] ** (2.0 / 3.0)
    return g


def mode_gain(grid: RadialGrid, params: FlowParams, *, method: str = "auto",
              refine: bool = True) -> ScanRecord:
    """Operator-norm gains of the no-slip forcing-to-velocity map.

    Parameters
    ----------
    grid : RadialGrid
        Starting resolution; see :func:`resolution_for`.
    params : FlowParams
    method : {"auto", "dense", "power"}
        Singular value evaluation, passed to the response objects.
    refine : bool
        Apply the layer-based resolution rule; ``False`` uses ``grid`` as is.

    Notes
    -----
    The forcing space is the set of interpolants on the n-point grid, and the
    solution is computed on a grid ``OVERSAMPLE`` times finer.  Without the
    oversampling, forcings at the grid scale get under-resolved solutions
    and the gain overshoots.

    Returns
    -------
    ScanRecord
        ``gains[X]`` is the larger of the meridional and swirl block norms.
        The H53 entry is H1^(1/3) H2^(2/3) of the gains, an upper bound for
        sup ||v||_H1^(1/3) ||v||_H2^(2/3) / ||F||.
    """
    n = resolution_for(grid, params) if refine else grid.n
    g = grid if n == grid.n else grid_of_size(n)
    fine = grid_of_size(OVERSAMPLE * n)
    mer = MeridionalResponse(fine, params, BoundaryKind.NOSLIP, forcing_grid=g)
    swl = SwirlResponse(fine, params, forcing_grid=g)
    blocks = {"meridional": _block_gains(mer, method), "swirl": _block_gains(swl, method)}
    gains = {k: max(blocks["meridional"][k], blocks["swirl"][k]) for k in ("L2", "H1", "H2")}
    gains["H53"] = gains["H1"] ** (1.0 / 3.0) * gains["H2"] ** (2.0 / 3.0)
    return ScanRecord(params.phi, params.xi, classify(params), gains,
                      max(mer.condition, swl.condition), n, blocks)


# ---------------------------------------------------------------------------
# sweeps

def frequency_grid(xi_min: float = 1e-3, xi_max: float = 1e2, count: int = 61,
                   both_signs: bool = True) -> np.ndarray:
    """``count`` log-spaced frequencies per sign, sorted ascending."""
    if not (0 < xi_min <= xi_max) or count < 1:
        raise ValidationError("need 0 < xi_min <= xi_max and count >= 1")
    pos = np.geomspace(xi_min, xi_max, count)
    return np.concatenate([-pos[::-1], pos]) if both_signs else pos


def cache_key(n: int, phi: float, xi: float, bc: BoundaryKind = BoundaryKind.NOSLIP,
              command: str = "scan") -> str:
    """Hex digest of (command, n, phi, xi, bc, version)."""
    blob = json.dumps({"command": command, "n": n, "phi": repr(float(phi)), "xi": repr(float(xi)),
                       "bc": BoundaryKind(bc).value, "version": __version__}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


def _cache_store(root: Path, key: str, rec: ScanRecord) -> None:
    """Write ``<key>.bin`` atomically and append a line to the readable index."""
    path = root / f"{key}.bin"
    tmp = root / f"{key}.tmp{os.getpid()}"
    tmp.write_bytes(json.dumps(rec.to_dict(), sort_keys=True).encode())
    os.replace(tmp, path)
    with open(root / "index.tsv", "a") as fh:
        fh.write(f"{key}\tscan\tn={rec.n}\tphi={rec.phi!r}\txi={rec.xi!r}\n")


def _cache_dir(cache_dir) -> Optional[Path]:
    if cache_dir is None:
        cache_dir = os.environ.get(CACHE_ENV)
    return Path(cache_dir) if cache_dir else None


def _cell(args) -> ScanRecord:
    n, phi, xi, method = args
    params = FlowParams(phi, xi)
    try:
        return mode_gain(grid_of_size(n), params, method=method)
    except (NumericalError, ValidationError, np.linalg.LinAlgError) as exc:
        nan = float("nan")
        return ScanRecord(params.phi, params.xi, classify(params), {k: nan for k in GAIN_KEYS},
                          nan, n, error=f"{type(exc).__name__}: {exc}")


def sweep(grid: RadialGrid, phi_list: Iterable[float], xi_list: Iterable[float], *,
          cache_dir=None, workers: Optional[int] = None, method: str = "auto") -> List[ScanRecord]:
    """Gains on the product grid ``phi_list x xi_list``.

    Records are returned sorted by (phi, xi).  Cells found in the cache
    (``cache_dir`` or ``$PIPEFLOW_CACHE_DIR``) are reused; failed cells are
    recorded with their error and never cached.  ``workers > 1`` evaluates
    missing cells in a process pool.
    """
    phis = [float(p) for p in phi_list]
    xis = [float(x) for x in xi_list]
    if not phis:
        raise ValidationError("phi_list must be nonempty")
    for p in phis:
        FlowParams(p, 0.0)
    cells = sorted({(p, x) for p in phis for x in xis})
    root = _cache_dir(cache_dir)
    if root is not None:
        root.mkdir(parents=True, exist_ok=True)
    out: Dict[tuple, ScanRecord] = {}
    todo = []
    for p, x in cells:
        key = cache_key(grid.n, p, x)
        path = root / f"{key}.bin" if root else None
        if path is not None and path.exists():
            out[(p, x)] = ScanRecord.from_dict(json.loads(path.read_bytes()))
        else:
            todo.append((p, x, key))
    jobs = [(grid.n, p, x, method) for p, x, _ in todo]
    if workers and workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_cell, jobs))
    else:
        results = [_cell(j) for j in jobs]
    for (p, x, key), rec in zip(todo, results):
        out[(p, x)] = rec
        if root is not None and rec.ok:
            _cache_store(root, key, rec)
    return [out[c] for c in cells]


def records_to_csv(records: Sequence[ScanRecord]) -> str:
    """CSV text with floats written by ``repr`` so that reruns are bitwise equal."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow([repr(r.phi), repr(r.xi), r.regime.value]
                   + [repr(float(r.gains[k])) for k in GAIN_KEYS] + [repr(float(r.cond)), r.n])
    return buf.getvalue()


def write_csv(records: Sequence[ScanRecord], path) -> None:
    Path(path).write_text(records_to_csv(records))


# ---------------------------------------------------------------------------
# reductions

def sup_gain(records: Sequence[ScanRecord], key: str = "H53", block: Optional[str] = None) -> Dict[float, float]:
    """sup over xi of one gain for each phi (failed cells are skipped)."""
    out: Dict[float, float] = {}
    for r in records:
        if not r.ok:
            continue
        v = r.block_gains[block][key] if block else r.gains[key]
        out[r.phi] = max(out.get(r.phi, 0.0), v)
    return dict(sorted(out.items()))


def resolvent_norm_at_zero(grid: RadialGrid, Re: float, xi_list: Iterable[float]) -> float:
    """L2 -> L2 norm at s = 0 of the Re-scaled perturbation resolvent.

    With F = Re F~ and Phi = pi Re / 2 the steady problem reproduces the
    resolvent problem, so the norm restricted to ``xi_list`` is
    ``Re * sup_xi gain_L2(pi Re / 2, xi)``.
    """
    if not np.isfinite(Re) or Re <= 0:
        raise ValidationError(f"Reynolds number must be > 0, got {Re}")
    phi = np.pi * Re / 2.0
    best = 0.0
    for xi in xi_list:
        best = max(best, mode_gain(grid, FlowParams(phi, xi)).gains["L2"])
    return Re * best


def fit_exponent(records, x_key: str, y_key: str) -> ExponentFit:
    """Log-log least-squares slope of ``y_key`` against ``x_key``.

    ``records`` is a sequence of mappings (or objects with attributes);
    gain names such as "H2" are looked up in ``gains`` when present.
    """
    def get(rec, key):
        if isinstance(rec, dict):
            return rec[key]
        if hasattr(rec, "gains") and key in rec.gains:
            return rec.gains[key]
        return getattr(rec, key)

    x = np.array([float(get(r, x_key)) for r in records])
    y = np.array([float(get(r, y_key)) for r in records])
    if x.size < 3:
        raise ValidationError("fit_exponent needs at least 3 records")
    if np.any(~np.isfinite(x)) or np.any(~np.isfinite(y)) or np.any(x <= 0) or np.any(y <= 0):
        raise ValidationError("fit_exponent needs finite positive values")
    lx, ly = np.log(x), np.log(y)
    (slope, intercept), res, *_ = np.polyfit(lx, ly, 1, full=True)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    ss_res = float(res[0]) if res.size else 0.0
    r2 = 1.0 if ss_tot == 0.0 else min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    return ExponentFit(float(slope), float(intercept), r2, int(x.size))


def summarize(records: Sequence[ScanRecord]) -> dict:
    """JSON-ready summary: suprema over xi, their spread and power-law fits."""
    out = {"cells": len(records), "failed": [r.to_dict() for r in records if not r.ok], "sup": {}}
    for key in GAIN_KEYS:
        sup = sup_gain(records, key)
        out["sup"][key] = {repr(p): v for p, v in sup.items()}
    h53 = list(sup_gain(records, "H53").values())
    sw = list(sup_gain(records, "H2", block="swirl").values()) if records and records[0].block_gains else []
    if h53:
        out["h53_ratio"] = max(h53) / min(h53)
    if sw:
        out["swirl_h2_ratio"] = max(sw) / min(sw)
    pos = [{"phi": p, "g": v} for p, v in sup_gain(records, "H2").items() if p > 0]
    if len(pos) >= 3:
        out["fits"] = {"H2_vs_phi": fit_exponent(pos, "phi", "g").to_dict()}
    return out
