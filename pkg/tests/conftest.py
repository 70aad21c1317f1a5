"""Shared fixtures and polynomial oracles.

Manufactured solutions are odd polynomials psi = sum c_m r^m (m odd), for
which every operator is exact:  L r^m = (m^2 - 1) r^(m-2).
"""
import numpy as np
import pytest

from pipeflow.grid import Parity
from pipeflow.modes import grid_of_size

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def report(k: int, ok: bool, detail: str) -> None:
    line = f"ACCEPTANCE {k} {'PASS' if ok else 'FAIL'}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


@pytest.fixture(scope="session")
def grid48():
    return grid_of_size(48)


@pytest.fixture(scope="session")
def grid96():
    return grid_of_size(96)


# ---------------------------------------------------------------------------
# odd-polynomial algebra: dict {power: coefficient}

def poly_eval(p: dict, r):
    r = np.asarray(r, dtype=float)
    return sum(c * r ** m for m, c in p.items())


def poly_add(*ps):
    out = {}
    for p in ps:
        for m, c in p.items():
            out[m] = out.get(m, 0) + c
    return out


def poly_scale(p: dict, s):
    return {m: s * c for m, c in p.items()}


def poly_L(p: dict) -> dict:
    """L r^m = (m^2 - 1) r^(m-2); the m = 1 term is annihilated."""
    return {m - 2: (m * m - 1) * c for m, c in p.items() if m != 1}


def poly_deriv(p: dict) -> dict:
    return {m - 1: m * c for m, c in p.items() if m != 0}


def poly_mul_r2(p: dict, a, b) -> dict:
    """(a + b r^2) p."""
    return poly_add(poly_scale(p, a), {m + 2: b * c for m, c in p.items()})


def stream_forcing(p: dict, phi: float, xi: float) -> dict:
    """i xi U (L - xi^2) psi - (L - xi^2)^2 psi for polynomial psi."""
    H = poly_add(poly_L(p), poly_scale(p, -xi * xi))
    HH = poly_add(poly_L(H), poly_scale(H, -xi * xi))
    u0 = 2.0 * phi / np.pi
    return poly_add(poly_mul_r2(H, 1j * xi * u0, -1j * xi * u0), poly_scale(HH, -1))


def swirl_forcing(p: dict, phi: float, xi: float) -> dict:
    """i xi U v - (L - xi^2) v for polynomial v."""
    u0 = 2.0 * phi / np.pi
    return poly_add(poly_mul_r2(p, 1j * xi * u0, -1j * xi * u0),
                    poly_scale(poly_L(p), -1), poly_scale(p, xi * xi))


def random_noslip_poly(rng, degree: int = 4) -> dict:
    """r (1 - r^2)^2 q(r^2): psi(1) = psi'(1) = 0."""
    q = rng.standard_normal(degree + 1) + 1j * rng.standard_normal(degree + 1)
    base = {1: 1.0, 3: -2.0, 5: 1.0}
    out = {}
    for j, c in enumerate(q):
        out = poly_add(out, {m + 2 * j: c * b for m, b in base.items()})
    return out


def random_slip_poly(rng, degree: int = 8) -> dict:
    """Random odd polynomial corrected by c1 r + c3 r^3 so psi(1) = L psi(1) = 0."""
    c = rng.standard_normal(degree) + 1j * rng.standard_normal(degree)
    p = {2 * j + 5: c[j] for j in range(degree)}
    # L psi(1) = 8 c3 + sum (m^2 - 1) c_m, psi(1) = c1 + c3 + sum c_m
    s0 = sum(p.values())
    s2 = sum((m * m - 1) * v for m, v in p.items())
    c3 = -s2 / 8.0
    c1 = -s0 - c3
    return poly_add(p, {1: c1, 3: c3})


def random_swirl_poly(rng, degree: int = 4) -> dict:
    """r (1 - r^2) q(r^2): v(1) = 0."""
    q = rng.standard_normal(degree + 1) + 1j * rng.standard_normal(degree + 1)
    out = {}
    for j, c in enumerate(q):
        out = poly_add(out, {1 + 2 * j: c, 3 + 2 * j: -c})
    return out


def field_of(grid, p: dict, parity=Parity.ODD):
    return grid.field(poly_eval(p, grid.nodes), parity)


def rel_err(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))
