"""Axisymmetric perturbations of Hagen-Poiseuille flow in a circular pipe.

Per-frequency stream-function and swirl solvers, a priori norms and energy
identities, regime estimates, the near-wall Airy layer construction,
operator-norm gain scans and a periodic-pipe nonlinear solver.
"""
from ._version import __version__
from .errors import (ContractionError, ConvergenceError, DegeneracyError, DomainError, NumericalError,
                     PipeflowError, RangeError, ResolutionError, SolverError, UsageError, ValidationError)
from .grid import ModeField, Parity, RadialGrid, WeightKind, build_grid
from .modes import (BoundaryKind, FlowParams, ForcingMode, ModeSolution, grid_of_size, solve_mode,
                    solve_stream, solve_swirl)
from .estimates import (InequalityKind, RegimeId, classify, inequality_suite, mode_norm_report,
                        verify_energy_identities, verify_regime_estimate, worst_case_ratios)
from .blayer import BLDecomposition, decompose, layer_profile, worst_wall_forcing
from .scan import ScanRecord, fit_exponent, mode_gain, resolvent_norm_at_zero, sweep
from .nonlinear import (FixedPointProblem, SpectralVelocity, picard_fixed_point, random_forcing,
                        solve_steady)

__all__ = [
    "__version__",
    "PipeflowError", "ValidationError", "DomainError", "RangeError", "UsageError",
    "NumericalError", "SolverError", "ResolutionError", "ConvergenceError", "DegeneracyError",
    "ContractionError",
    "RadialGrid", "ModeField", "Parity", "WeightKind", "build_grid",
    "BoundaryKind", "FlowParams", "ForcingMode", "ModeSolution", "grid_of_size",
    "solve_stream", "solve_swirl", "solve_mode",
    "RegimeId", "InequalityKind", "classify", "mode_norm_report", "verify_energy_identities",
    "verify_regime_estimate", "worst_case_ratios", "inequality_suite",
    "BLDecomposition", "layer_profile", "decompose", "worst_wall_forcing",
    "ScanRecord", "mode_gain", "sweep", "resolvent_norm_at_zero", "fit_exponent",
    "FixedPointProblem", "picard_fixed_point", "SpectralVelocity", "solve_steady", "random_forcing",
]
