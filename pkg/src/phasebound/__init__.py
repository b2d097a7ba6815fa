"""Bound states of 2D massless Dirac-Weyl particles in 1D potentials via the
variable phase method and the relativistic Levinson theorem."""

from .errors import NumericalError, PhaseboundError, PreconditionError
from .estimator import DiracFiniteDifference, LevinsonSpectrum
from .limits import (
    bohr_sommerfeld_levels,
    delta_limit_energy,
    delta_transmission,
    delta_transmission_matching,
    nonrelativistic_levels,
    zero_mode_condition,
)
from .phase_ode import (
    IntegratorControl,
    PhaseProblem,
    PhaseTrajectory,
    integrate_phase,
    left_separatrix,
    right_separatrix,
)
from .portrait import field_grid, separatrix_in_phase_space, stable_trajectory
from .potentials import (
    Kind,
    Potential,
    evaluate,
    make_potential,
    monotone_decomposition,
    parse_potential_spec,
    primitive,
)
from .spectrum import count_between, count_levels, find_eigenvalues, staircase_value
from .wavefunction import delta_limit_phase, eigenstate_trajectory, reconstruct

__version__ = "0.1.0"

__all__ = [
    "PhaseboundError",
    "PreconditionError",
    "NumericalError",
    "Kind",
    "Potential",
    "make_potential",
    "evaluate",
    "primitive",
    "monotone_decomposition",
    "parse_potential_spec",
    "IntegratorControl",
    "PhaseProblem",
    "PhaseTrajectory",
    "integrate_phase",
    "left_separatrix",
    "right_separatrix",
    "staircase_value",
    "count_levels",
    "count_between",
    "find_eigenvalues",
    "eigenstate_trajectory",
    "reconstruct",
    "delta_limit_phase",
    "delta_limit_energy",
    "zero_mode_condition",
    "nonrelativistic_levels",
    "bohr_sommerfeld_levels",
    "delta_transmission",
    "delta_transmission_matching",
    "field_grid",
    "separatrix_in_phase_space",
    "stable_trajectory",
    "LevinsonSpectrum",
    "DiracFiniteDifference",
]
