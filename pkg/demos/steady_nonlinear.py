"""Steady nonlinear perturbation in a periodic pipe by Picard iteration.

Run:  python3 demos/steady_nonlinear.py
"""
from pipeflow.modes import grid_of_size
from pipeflow.nonlinear import (FixedPointProblem, amplitude_scaling_order, picard_fixed_point,
                                random_forcing, solve_steady)

# scalar model: zeta = 0.1 + zeta^2
print("scalar fixed point", picard_fixed_point(FixedPointProblem(0.1, lambda x, y: x * y, abs, 1.0)))

grid = grid_of_size(48)
forcing = random_forcing(grid, xi0=1.0, K=8, amplitude=1.0, seed=0)
for phi in (10.0, 1e2, 1e3):
    res = solve_steady(grid, phi, forcing)
    print(f"Phi={phi:g} iterations={res.iterations} residual={res.final_residual:.1e} "
          f"4 eta |T F|={res.contraction:.2e} H53/|F|={res.v_norms['H53'] / res.forcing_norm:.4f}")
orders, _ = amplitude_scaling_order(grid, 100.0, forcing)
print("amplitude-scaling orders", [round(o, 3) for o in orders])
