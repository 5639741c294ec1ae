"""Circular motions: frequency, angular momentum and Lorentz factor vs radius.

For an attractive potential the balance V'(r0) = m gamma r0 w^2 has exactly
one frequency in (0, c/r0); it is found by bracketed root solving. A scan of
L(r0) across radii detects the special potential whose circular orbits all
carry the same angular momentum.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import InvalidParameterError, NoCircularOrbitError


@dataclass(frozen=True)
class CircularOrbit:
    r0: float
    Omega: float
    L: float
    Gamma: float


def circular_orbit(r0, pot, params):
    """Solve for the unique circular motion of radius r0.

    Returns the orbit record (frequency, angular momentum, Lorentz factor).
    Raises NoCircularOrbitError when the radial force cannot support one.
    """
    if not (r0 > 0):
        raise InvalidParameterError("radius must be positive")
    vp = float(pot.dV(r0))
    if not (vp > 0) or not pot.attractive:
        raise NoCircularOrbitError("V'(r0) must be positive for a circular orbit")
    m, c = params.m, params.c
    w_max = c / r0 * (1.0 - 1e-15)

    def g(w):
        beta2 = (r0 * w / c) ** 2
        return vp - m * r0 * w * w / math.sqrt(1.0 - beta2)

    if g(w_max) > 0:
        raise NoCircularOrbitError("no bracketed root below the superluminal bound")
    w = brentq(g, 0.0, w_max, rtol=1e-15, xtol=1e-300, maxiter=200)
    gamma = 1.0 / math.sqrt(1.0 - (r0 * w / c) ** 2)
    ell = m * gamma * r0 * r0 * w
    return CircularOrbit(r0=float(r0), Omega=float(w), L=float(ell), Gamma=float(gamma))


@dataclass(frozen=True)
class MomentumProfile:
    constant: bool
    max_rel_deviation: float
    r_grid: np.ndarray
    L_values: np.ndarray


def momentum_profile_is_constant(pot, params, r_grid, threshold=1e-8):
    """Decide whether L(r0) is the same for every circular orbit on the grid.

    The grid must hold at least 10 radii spanning at least two decades.
    """
    r_grid = np.asarray(r_grid, dtype=float)
    if r_grid.ndim != 1 or len(r_grid) < 10:
        raise InvalidParameterError("need a grid of at least 10 radii")
    if np.min(r_grid) <= 0 or np.max(r_grid) / np.min(r_grid) < 100.0:
        raise InvalidParameterError("grid must span at least two decades of radius")
    ells = np.array([circular_orbit(r, pot, params).L for r in r_grid])
    dev = float(np.max(np.abs(ells - ells[0])) / abs(ells[0]))
    return MomentumProfile(constant=dev < threshold, max_rel_deviation=dev,
                           r_grid=r_grid, L_values=ells)


def circular_state(r0, pot, params):
    """Phase-space point of the circular orbit at radius r0 (tangential p)."""
    from .core import PhaseState

    orb = circular_orbit(r0, pot, params)
    pmag = params.m * orb.Gamma * r0 * orb.Omega
    return PhaseState(q=np.array([r0, 0.0]), p=np.array([0.0, pmag])), orb
