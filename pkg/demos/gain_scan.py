"""Worst-case forcing-to-velocity gains across flux and frequency.

The supremum over xi of the H^{5/3}-type gain stays O(1) as the flux grows
by four decades, and the resolvent norm at s = 0 grows linearly in Re.

Run:  python3 demos/gain_scan.py   (about a minute; cached under ./demo-cache)
"""
from pipeflow.modes import grid_of_size
from pipeflow.scan import fit_exponent, frequency_grid, resolvent_norm_at_zero, sup_gain, sweep

grid = grid_of_size(48)
recs = sweep(grid, [1.0, 10.0, 1e2, 1e3, 1e4], frequency_grid(1e-3, 1e2, 31), cache_dir="demo-cache")
for key in ("H53", "H2"):
    print(key, {p: round(v, 4) for p, v in sup_gain(recs, key).items()})

xis = frequency_grid(1e-3, 1e2, 31, both_signs=False)
rows = [{"re": re, "norm": resolvent_norm_at_zero(grid, re, xis)} for re in (1e2, 1e3, 1e4)]
print("resolvent norms", [round(r["norm"], 3) for r in rows])
print("growth exponent", round(fit_exponent(rows, "re", "norm").slope, 3))
