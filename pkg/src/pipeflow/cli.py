"""Command-line front end.

Each subcommand validates its parameters, runs one computation and writes
plot-ready CSV and JSON files into the output directory.  Every JSON report
embeds the run configuration and the package versions, and parsing that
configuration back gives the same :class:`RunConfig`.

Exit status: 0 on success, 1 for invalid input or configuration, 2 for
numerical failures.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import scipy

from ._version import __version__
from .errors import NumericalError, UsageError, ValidationError

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

__all__ = ["COMMANDS", "DEFAULTS", "RunConfig", "load_config", "build_parser", "run", "main"]

COMMANDS = ("solve-mode", "scan", "decompose", "check-inequalities", "resolvent", "nonlinear")

DEFAULTS = {
    "solve-mode": {"phi": 100.0, "xi": 1.0, "bc": "noslip", "forcing": "smooth", "n": 96},
    "scan": {"phi_list": [1.0, 10.0, 100.0, 1000.0, 10000.0], "xi_min": 1e-3, "xi_max": 1e2,
             "xi_count": 61, "n": 48, "workers": 1},
    "decompose": {"phi": 1000.0, "xi": 1.0, "n": 64},
    "check-inequalities": {"trials": 1000, "seed": 0},
    "resolvent": {"re_list": [100.0, 1000.0, 10000.0], "xi_count": 61, "n": 48},
    "nonlinear": {"phi": 100.0, "xi0": 1.0, "modes": 8, "forcing_amp": 1.0, "tol": 1e-12, "n": 48,
                  "seed": 0},
}

PRESETS = ("smooth", "closed-form")


@dataclass
class RunConfig:
    """One validated run: command, its parameters and output locations."""

    command: str
    params: dict = field(default_factory=dict)
    output_dir: str = "pipeflow-out"
    cache_dir: Optional[str] = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}; choose from {', '.join(COMMANDS)}")
        unknown = set(self.params) - set(DEFAULTS[self.command])
        if unknown:
            raise UsageError(f"unknown parameters for {self.command}: {sorted(unknown)}")
        merged = dict(DEFAULTS[self.command])
        merged.update(self.params)
        self.params = _normalise(self.command, merged)
        _validate(self.command, self.params)

    @property
    def seed(self) -> Optional[int]:
        return self.params.get("seed")

    @property
    def n(self) -> Optional[int]:
        return self.params.get("n")

    def to_dict(self) -> dict:
        return {"command": self.command, "params": dict(self.params),
                "output_dir": self.output_dir, "cache_dir": self.cache_dir}

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        return cls(d["command"], dict(d.get("params", {})), d.get("output_dir", "pipeflow-out"),
                   d.get("cache_dir"))


def _normalise(command: str, p: dict) -> dict:
    out = {}
    for k, v in p.items():
        ref = DEFAULTS[command][k]
        try:
            if isinstance(ref, bool):
                out[k] = bool(v)
            elif isinstance(ref, int):
                if isinstance(v, float) and not v.is_integer():
                    raise ValueError
                out[k] = int(v)
            elif isinstance(ref, float):
                out[k] = float(v)
            elif isinstance(ref, list):
                items = v.split(",") if isinstance(v, str) else list(v)
                out[k] = [float(x) for x in items]
            else:
                out[k] = str(v)
        except (TypeError, ValueError):
            raise UsageError(f"parameter {k} has invalid value {v!r}") from None
    return out


def _require(cond: bool, message: str):
    if not cond:
        raise UsageError(message)


def _validate(command: str, p: dict) -> None:
    for k, v in p.items():
        vals = v if isinstance(v, list) else [v]
        for x in vals:
            if isinstance(x, float):
                _require(np.isfinite(x), f"{k} must be finite, got {x}")
    if "phi" in p:
        _require(p["phi"] >= 0, f"invariant violated: phi >= 0 (got phi = {p['phi']})")
    if "phi_list" in p:
        _require(len(p["phi_list"]) > 0, "phi_list must be nonempty")
        _require(all(x >= 0 for x in p["phi_list"]), "invariant violated: phi >= 0 for every entry of phi_list")
    if "n" in p:
        _require(p["n"] >= 8, f"invariant violated: n >= 8 (got n = {p['n']})")
    if "modes" in p:
        _require(p["modes"] >= 1, f"invariant violated: K >= 1 (got K = {p['modes']})")
    if "tol" in p:
        _require(0 < p["tol"] < 1, f"invariant violated: tol in (0, 1) (got {p['tol']})")
    if "bc" in p:
        _require(p["bc"] in ("noslip", "slip"), f"bc must be noslip or slip, got {p['bc']!r}")
    if "forcing" in p:
        _require(p["forcing"] in PRESETS or Path(p["forcing"]).suffix in (".json", ".npz"),
                 f"forcing must be one of {PRESETS} or a .json/.npz file")
    if "xi_min" in p:
        _require(0 < p["xi_min"] <= p["xi_max"], "need 0 < xi_min <= xi_max")
    if "xi_count" in p:
        _require(p["xi_count"] >= 1, "xi_count must be >= 1")
    if "re_list" in p:
        _require(len(p["re_list"]) > 0 and all(x > 0 for x in p["re_list"]), "re_list entries must be > 0")
    if "trials" in p:
        _require(p["trials"] >= 1, "trials must be >= 1")
    if "xi0" in p:
        _require(p["xi0"] > 0, "xi0 must be > 0")
    if "forcing_amp" in p:
        _require(p["forcing_amp"] >= 0, "forcing_amp must be >= 0")
    if "workers" in p:
        _require(p["workers"] >= 1, "workers must be >= 1")


def load_config(path) -> dict:
    """Read a TOML file: top-level command/output_dir/cache_dir and one table per command."""
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise UsageError(f"invalid TOML in {path}: {exc}") from None
    return data


# ---------------------------------------------------------------------------
# argument parsing

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="pipeflow", description="Axisymmetric perturbations of Hagen-Poiseuille pipe flow.")
    ap.add_argument("--version", action="version", version=f"pipeflow {__version__}")
    ap.add_argument("--config", help="TOML file; command-line flags override its values")
    ap.add_argument("--output-dir", help="directory for reports (default pipeflow-out)")
    ap.add_argument("--cache-dir", help="cache directory (also $PIPEFLOW_CACHE_DIR)")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("solve-mode", help="solve one wavenumber and report norms and identities")
    s.add_argument("--phi", type=float)
    s.add_argument("--xi", type=float)
    s.add_argument("--bc", choices=("noslip", "slip"))
    s.add_argument("--forcing", help=f"preset ({', '.join(PRESETS)}) or .json/.npz file")
    s.add_argument("--n", type=int)

    s = sub.add_parser("scan", help="operator-norm gains over a flux/frequency grid")
    s.add_argument("--phi-list", help="comma-separated fluxes")
    s.add_argument("--xi-min", type=float)
    s.add_argument("--xi-max", type=float)
    s.add_argument("--xi-count", type=int, help="frequencies per sign")
    s.add_argument("--n", type=int)
    s.add_argument("--workers", type=int)

    s = sub.add_parser("decompose", help="four-part boundary-layer decomposition")
    s.add_argument("--phi", type=float)
    s.add_argument("--xi", type=float)
    s.add_argument("--n", type=int)

    s = sub.add_parser("check-inequalities", help="randomized inequality suite")
    s.add_argument("--trials", type=int)
    s.add_argument("--seed", type=int)

    s = sub.add_parser("resolvent", help="s = 0 resolvent norm against the Reynolds number")
    s.add_argument("--re-list", help="comma-separated Reynolds numbers")
    s.add_argument("--xi-count", type=int)
    s.add_argument("--n", type=int)

    s = sub.add_parser("nonlinear", help="steady nonlinear solve in a periodic pipe")
    s.add_argument("--phi", type=float)
    s.add_argument("--xi0", type=float)
    s.add_argument("--modes", type=int, metavar="K")
    s.add_argument("--forcing-amp", type=float)
    s.add_argument("--tol", type=float)
    s.add_argument("--n", type=int)
    s.add_argument("--seed", type=int)
    return ap


def config_from_args(argv=None) -> RunConfig:
    ns = build_parser().parse_args(argv)
    file_cfg = load_config(ns.config) if ns.config else {}
    command = ns.command or file_cfg.get("command")
    if command is None:
        raise UsageError("no command given")
    if command not in COMMANDS:
        raise UsageError(f"unknown command {command!r}; choose from {', '.join(COMMANDS)}")
    params = dict(file_cfg.get(command, {}))
    for k in DEFAULTS[command]:
        v = getattr(ns, k, None)
        if v is not None:
            params[k] = v
    output_dir = ns.output_dir or file_cfg.get("output_dir", "pipeflow-out")
    cache_dir = ns.cache_dir or os.environ.get("PIPEFLOW_CACHE_DIR") or file_cfg.get("cache_dir")
    return RunConfig(command, params, output_dir, cache_dir)


# ---------------------------------------------------------------------------
# commands

def _versions() -> dict:
    return {"pipeflow": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": sys.version.split()[0]}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    if hasattr(obj, "value") and not isinstance(obj, (int, float, str)):
        return obj.value
    return obj


def _write_json(out: Path, name: str, cfg: RunConfig, body: dict) -> Path:
    report = {"config": cfg.to_dict(), "versions": _versions(), "result": _jsonable(body)}
    path = out / name
    path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return path


def _load_forcing_file(path: str, grid):
    from scipy.interpolate import CubicSpline
    from .modes import ForcingMode

    p = Path(path)
    if p.suffix == ".npz":
        with np.load(p) as z:
            data = {k: z[k] for k in z.files}
    else:
        raw = json.loads(p.read_text())
        data = {}
        for k, v in raw.items():
            a = np.asarray(v, dtype=float)
            data[k] = a[..., 0] + 1j * a[..., 1] if a.ndim == 2 and a.shape[1] == 2 else a
    comps = {}
    for name in ("fr", "fz", "ftheta"):
        if name not in data:
            continue
        vals = np.asarray(data[name], dtype=complex)
        if "r" in data:
            r = np.asarray(data["r"], dtype=float)
            vals = (CubicSpline(r, vals.real)(grid.nodes) + 1j * CubicSpline(r, vals.imag)(grid.nodes))
        elif vals.shape != (grid.n,):
            raise UsageError(f"{name} needs {grid.n} nodal values or an 'r' array")
        comps[name] = vals
    if not comps:
        raise UsageError(f"{path} contains none of fr, fz, ftheta")
    return ForcingMode.from_components(grid, **comps)


def preset_forcing(name: str, grid):
    """Named forcings: ``smooth`` and ``closed-form`` (F_z = r^2/2, F_theta = r)."""
    from .modes import ForcingMode

    if name == "closed-form":
        return ForcingMode.from_components(grid, fz=lambda r: 0.5 * r * r, ftheta=lambda r: r)
    return ForcingMode.from_components(grid, fr=lambda r: r * (1 - r * r), fz=lambda r: 1 - r * r,
                                       ftheta=lambda r: r * (1 - r * r) ** 2)


def _cmd_solve_mode(cfg: RunConfig, out: Path):
    from .estimates import mode_norm_report, verify_energy_identities
    from .modes import BoundaryKind, FlowParams, grid_of_size, solve_mode

    p = cfg.params
    grid = grid_of_size(p["n"])
    params = FlowParams(p["phi"], p["xi"])
    forcing = (preset_forcing(p["forcing"], grid) if p["forcing"] in PRESETS
               else _load_forcing_file(p["forcing"], grid))
    sol = solve_mode(grid, params, forcing, BoundaryKind(p["bc"]))
    norms = mode_norm_report(sol).to_dict()
    ident = verify_energy_identities(sol, forcing)
    g = sol.grid
    rows = np.column_stack([g.nodes, sol.psi_hat.values.real, sol.psi_hat.values.imag,
                            sol.vr_hat.values.real, sol.vr_hat.values.imag,
                            sol.vz_hat.values.real, sol.vz_hat.values.imag,
                            sol.vtheta_hat.values.real, sol.vtheta_hat.values.imag])
    lines = ["r,psi_re,psi_im,vr_re,vr_im,vz_re,vz_im,vtheta_re,vtheta_im"]
    lines += [",".join(repr(float(x)) for x in row) for row in rows]
    (out / "profiles.csv").write_text("\n".join(lines) + "\n")
    _write_json(out, "solve_mode.json", cfg, {
        "n_used": g.n, "residual": sol.residual, "condition": sol.condition,
        "norms": norms, "identities": ident.residuals})
    return f"solved at n = {g.n}, residual {sol.residual:.2e}, H53 = {norms['H53']:.6g}"


def _cmd_scan(cfg: RunConfig, out: Path):
    from .modes import grid_of_size
    from .scan import frequency_grid, summarize, sweep, write_csv

    p = cfg.params
    xis = frequency_grid(p["xi_min"], p["xi_max"], p["xi_count"])
    recs = sweep(grid_of_size(p["n"]), p["phi_list"], xis, cache_dir=cfg.cache_dir, workers=p["workers"])
    write_csv(recs, out / "scan.csv")
    summary = summarize(recs)
    _write_json(out, "scan_summary.json", cfg, summary)
    failed = len(summary["failed"])
    msg = f"{len(recs)} cells, {failed} failed, H53 ratio {summary.get('h53_ratio', float('nan')):.4g}"
    if failed:
        raise NumericalError(msg)
    return msg


def _cmd_decompose(cfg: RunConfig, out: Path):
    from .blayer import decompose, worst_wall_forcing
    from .modes import FlowParams, grid_of_size

    p = cfg.params
    grid = grid_of_size(p["n"])
    params = FlowParams(p["phi"], p["xi"])
    dec = decompose(grid, params, worst_wall_forcing(grid, params))
    _write_json(out, "decompose.json", cfg, dec.to_dict())
    return f"reconstruction error {dec.reconstruction_rel_err:.2e}, scaled b = {dec.scaled_b():.6g}"


def _cmd_check_inequalities(cfg: RunConfig, out: Path):
    from .estimates import InequalityKind, inequality_suite

    p = cfg.params
    results = [inequality_suite(kind, p["trials"], p["seed"]) for kind in InequalityKind]
    _write_json(out, "inequalities.json", cfg, {r.kind.value: r.to_dict() for r in results})
    bad = [r.kind.value for r in results if not r.passed]
    if bad:
        raise NumericalError(f"inequalities violated: {', '.join(bad)}")
    return "all inequalities hold: " + ", ".join(f"{r.kind.value} {r.worst_ratio:.4g}" for r in results)


def _cmd_resolvent(cfg: RunConfig, out: Path):
    from .modes import grid_of_size
    from .scan import fit_exponent, frequency_grid, resolvent_norm_at_zero

    p = cfg.params
    grid = grid_of_size(p["n"])
    xis = frequency_grid(1e-3, 1e2, p["xi_count"], both_signs=False)
    rows = [{"re": re, "norm": resolvent_norm_at_zero(grid, re, xis)} for re in p["re_list"]]
    (out / "resolvent.csv").write_text("re,norm\n" + "".join(f"{r['re']!r},{r['norm']!r}\n" for r in rows))
    body = {"rows": rows}
    if len(rows) >= 3:
        body["fit"] = fit_exponent(rows, "re", "norm").to_dict()
    _write_json(out, "resolvent.json", cfg, body)
    return f"slope {body['fit']['slope']:.4f}" if "fit" in body else f"{len(rows)} Reynolds numbers"


def _cmd_nonlinear(cfg: RunConfig, out: Path):
    from .modes import grid_of_size
    from .nonlinear import random_forcing, solve_steady

    p = cfg.params
    grid = grid_of_size(p["n"])
    F = random_forcing(grid, p["xi0"], p["modes"], p["forcing_amp"], seed=p["seed"])
    res = solve_steady(grid, p["phi"], F, tol=p["tol"])
    _write_json(out, "nonlinear.json", cfg, res.report())
    return f"{res.iterations} iterations, residual {res.final_residual:.2e}"


_HANDLERS = {
    "solve-mode": _cmd_solve_mode, "scan": _cmd_scan, "decompose": _cmd_decompose,
    "check-inequalities": _cmd_check_inequalities, "resolvent": _cmd_resolvent,
    "nonlinear": _cmd_nonlinear,
}


def run(config: RunConfig) -> int:
    """Execute ``config``; returns the exit status and prints one summary line."""
    out = Path(config.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        if not os.access(out, os.W_OK):
            raise PermissionError(f"output directory {out} is not writable")
        msg = _HANDLERS[config.command](config, out)
    except ValidationError as exc:
        print(f"pipeflow {config.command}: invalid input: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"pipeflow {config.command}: numerical failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"pipeflow {config.command}: I/O error: {exc}", file=sys.stderr)
        return 1
    print(f"pipeflow {config.command}: {msg}")
    return 0


def main(argv=None) -> int:
    try:
        cfg = config_from_args(argv)
    except ValidationError as exc:
        print(f"pipeflow: {exc}", file=sys.stderr)
        return 1
    return run(cfg)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
