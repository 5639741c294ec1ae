"""relorbit: special-relativistic central-force dynamics.

Integrates planar relativistic motion in attractive central potentials,
measures period functions of the Clairaut reduction, certifies the
non-existence of Bertrand potentials through the period-constant
obstruction, classifies Coulomb energy-momentum pairs, propagates the
relativistic Runge-Lenz vector, and verifies collision asymptotics through
a partial regularization.
"""

__version__ = "0.1.0"

from .core import (PhaseState, PhysicalParams, Potential, angular_momentum, hamiltonian,
                   lorentz_gamma, make_potential, momentum_from_velocity,
                   velocity_from_momentum)
from .dynamics import IntegratorConfig, Trajectory, apsis_times, cartesian_rhs, \
    conservation_report, integrate
from .circular import CircularOrbit, circular_orbit, circular_state, \
    momentum_profile_is_constant
from .clairaut import (ClairautState, PeriodFit, TimeReconstruction, clairaut_rhs,
                       equilibrium_solve, integrate_clairaut, linearized_frequency,
                       period_function, time_reconstruction)
from .bertrand import (BertrandFamily, ObstructionReport, build_family, family_rhs,
                       obstruction_certificate, period_constant_formula, q_polynomial)
from .coulomb import (EMClass, EMPoint, MotionClass, apsidal_precession, classify,
                      existence_witness, fit_closed_form, orbit_closed_form,
                      rl_components_and_invariant, runge_lenz_vector,
                      sigma_and_min_energy)
from .collision import (CollisionConfig, CollisionFit, CollisionVars,
                        integrate_regularized, integrate_to_collision, regularized_rhs,
                        w_inverse, w_transform)
from . import errors

__all__ = [name for name in dir() if not name.startswith("_")]
