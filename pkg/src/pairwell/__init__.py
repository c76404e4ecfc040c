"""Vacuum pair creation in a binding potential well, with and without a laser.

Split-operator evolution of the full free Dirac basis, Bogoliubov
transition amplitudes, and the derived observables: pair numbers, momentum
and energy spectra, instantaneous-eigenstate occupations and decay rates.
"""

from .errors import ConfigError, ConvergenceError, InvariantError, PairwellError
from .fields import FieldConfig, envelope, laser_vector_potential, sauter_step, well_potential
from .units import Grid, free_energy, make_grid

__all__ = [
    "ConfigError",
    "ConvergenceError",
    "FieldConfig",
    "Grid",
    "InvariantError",
    "PairwellError",
    "envelope",
    "free_energy",
    "laser_vector_potential",
    "make_grid",
    "sauter_step",
    "well_potential",
]

__version__ = "0.1.0"
