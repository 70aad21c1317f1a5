"""Four-part decomposition of a no-slip solve at large flux.

psi = psi_slip + a I1(|xi| r) + b (chi psi_layer + psi_remainder), checked
against the direct no-slip solve; |b| (Phi |xi|)^(5/6) stays O(1).

Run:  python3 demos/boundary_layer.py
"""
import numpy as np

from pipeflow.blayer import decompose, layer_profile, worst_wall_forcing
from pipeflow.modes import FlowParams, grid_of_size

for phi in (1e3, 1e4):
    for xi in np.geomspace(0.1, 0.025 * np.sqrt(phi), 3):
        P = FlowParams(phi, xi)
        beta = layer_profile(P).beta
        g = grid_of_size(max(64, 16 * int(np.ceil(beta / 4))))
        d = decompose(g, P, worst_wall_forcing(g, P))
        print(f"Phi={phi:g} xi={xi:.3f} beta={beta:.2f} n={d.grid.n} "
              f"reconstruction={d.reconstruction_rel_err:.1e} scaled_b={d.scaled_b():.4f}")
