"""Variational bound states of a charge held by its image in a conducting wedge.

Modules
-------
numerics      adaptive and Gauss-Legendre quadrature helpers
potential     image potential of the wedge, ``(k - f(theta)) / (4 r)``
trial         trial states, normalisation, overlaps and densities
energy        energy expectation values and closed-form cross-checks
optimize      Nelder-Mead search of the variational parameters
degeneracy    opening-angle sweeps and pair-splitting diagnostics
checks        analytic limits run by ``limits-check``
cli           command-line front end
"""

__version__ = "0.1.0"

from .degeneracy import SweepRecord, degeneracy_onset, splitting_eq2, sweep
from .energy import EnergyBreakdown, expectation_reduced
from .optimize import OptimizationResult, OptimizerConfig, optimize_state
from .potential import HARTREE_EV, WedgeGeometry, image_potential_energy, k_coefficient
from .trial import TrialParams, make_state

__all__ = [
    "__version__",
    "HARTREE_EV",
    "WedgeGeometry",
    "k_coefficient",
    "image_potential_energy",
    "TrialParams",
    "make_state",
    "EnergyBreakdown",
    "expectation_reduced",
    "OptimizerConfig",
    "OptimizationResult",
    "optimize_state",
    "SweepRecord",
    "sweep",
    "splitting_eq2",
    "degeneracy_onset",
]
