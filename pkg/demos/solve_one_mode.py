"""Solve one axial wavenumber and inspect norms and energy balances.

Run:  python3 demos/solve_one_mode.py
"""
import numpy as np

from pipeflow.estimates import mode_norm_report, verify_energy_identities
from pipeflow.modes import BoundaryKind, FlowParams, ForcingMode, grid_of_size, solve_mode

grid = grid_of_size(96)
forcing = ForcingMode.from_components(
    grid, fr=lambda r: r * (1 - r * r), fz=lambda r: 1 - r ** 4, ftheta=lambda r: r * (1 - r * r))

for phi, xi in [(0.0, 0.0), (100.0, 1.0), (1e4, 3.0)]:
    sol = solve_mode(grid, FlowParams(phi, xi), forcing, BoundaryKind.NOSLIP)
    norms = mode_norm_report(sol)
    ident = verify_energy_identities(sol, forcing)
    print(f"Phi={phi:>7g} xi={xi:<4g} n={sol.grid.n:<4d} residual={sol.residual:.1e} "
          f"H1={norms['H1']:.4e} H2={norms['H2']:.4e} identities={ident.worst:.1e}")

# static closed form: F_z = r^2 / 2 gives psi = r (1 - r^2)^2 / 192
r = grid.nodes
sol = solve_mode(grid, FlowParams(0, 0), ForcingMode.from_components(grid, fz=lambda r: 0.5 * r * r))
print("closed-form error:", np.max(np.abs(sol.psi_hat.values - r * (1 - r * r) ** 2 / 192)))
