"""Physical parameters, central potentials and the basic kinematic maps.

Units are free; the default scale m = c = k = 1 is used throughout the test
suite and the CLI defaults. All scalars are 64-bit floats, all states are
planar: positions and momenta are length-2 arrays.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError, SingularityError, SuperluminalError


@dataclass(frozen=True)
class PhysicalParams:
    """Particle mass and speed of light."""

    m: float = 1.0
    c: float = 1.0

    def __post_init__(self):
        if not (self.m > 0):
            raise InvalidParameterError("mass m must be positive, got %r" % (self.m,))
        if not (self.c > 0):
            raise InvalidParameterError("light speed c must be positive, got %r" % (self.c,))

    @property
    def mc(self):
        return self.m * self.c

    @property
    def mc2(self):
        return self.m * self.c * self.c


def _vec2(x, name):
    v = np.asarray(x, dtype=float)
    if v.shape != (2,):
        raise InvalidParameterError("%s must be a length-2 vector, got shape %r" % (name, v.shape))
    return v


@dataclass(frozen=True)
class PhaseState:
    """Cartesian phase-space point (q, p). Treated as immutable."""

    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "q", _vec2(self.q, "q"))
        object.__setattr__(self, "p", _vec2(self.p, "p"))
        if not (self.r > 0):
            raise SingularityError("position must be away from the origin")

    @property
    def r(self):
        return float(np.hypot(self.q[0], self.q[1]))

    @property
    def theta(self):
        return float(np.arctan2(self.q[1], self.q[0]))

    def reflected(self):
        """Mirror image (q2, p2 -> -q2, -p2); flips the angular momentum sign."""
        return PhaseState(q=self.q * np.array([1.0, -1.0]), p=self.p * np.array([1.0, -1.0]))


class Potential:
    """Attractive central potential V(r) with derivatives up to third order.

    The Clairaut form W(rho) = V(1/rho) and its rho-derivatives are exposed
    alongside the radial ones; subclasses implement whichever side is natural
    and inherit the other through the exact chain-rule relations.
    """

    kind = "abstract"
    k = None
    attractive = True

    # radial side ------------------------------------------------------
    def V(self, r):
        rho = 1.0 / np.asarray(r, dtype=float)
        return self.W(rho)

    def dV(self, r):
        rho = 1.0 / np.asarray(r, dtype=float)
        return -self.dW(rho) * rho**2

    def d2V(self, r):
        rho = 1.0 / np.asarray(r, dtype=float)
        return self.d2W(rho) * rho**4 + 2.0 * self.dW(rho) * rho**3

    def d3V(self, r):
        rho = 1.0 / np.asarray(r, dtype=float)
        return -self.d3W(rho) * rho**6 - 6.0 * self.d2W(rho) * rho**5 - 6.0 * self.dW(rho) * rho**4

    # Clairaut side ----------------------------------------------------
    def W(self, rho):
        r = 1.0 / np.asarray(rho, dtype=float)
        return self.V(r)

    def dW(self, rho):
        rho = np.asarray(rho, dtype=float)
        return -self.dV(1.0 / rho) / rho**2

    def d2W(self, rho):
        rho = np.asarray(rho, dtype=float)
        r = 1.0 / rho
        return self.d2V(r) / rho**4 + 2.0 * self.dV(r) / rho**3

    def d3W(self, rho):
        rho = np.asarray(rho, dtype=float)
        r = 1.0 / rho
        return -self.d3V(r) / rho**6 - 6.0 * self.d2V(r) / rho**5 - 6.0 * self.dV(r) / rho**4


class CoulombPotential(Potential):
    """V(r) = -k/r."""

    kind = "coulomb"

    def __init__(self, k, params):
        if not (k > 0):
            raise InvalidParameterError("coupling k must be positive, got %r" % (k,))
        self.k = float(k)
        self.params = params

    def V(self, r):
        return -self.k / np.asarray(r, dtype=float)

    def dV(self, r):
        return self.k / np.asarray(r, dtype=float) ** 2

    def d2V(self, r):
        return -2.0 * self.k / np.asarray(r, dtype=float) ** 3

    def d3V(self, r):
        return 6.0 * self.k / np.asarray(r, dtype=float) ** 4

    def W(self, rho):
        return -self.k * np.asarray(rho, dtype=float)

    def dW(self, rho):
        return -self.k * np.ones_like(np.asarray(rho, dtype=float))

    def d2W(self, rho):
        return np.zeros_like(np.asarray(rho, dtype=float))

    d3W = d2W


class ConstantMomentumPotential(Potential):
    """The potential whose circular orbits all share the same angular momentum.

    V(r) = -c sqrt(k/r^2 + c^2 m^2); every circular orbit has L = sqrt(k).
    """

    kind = "constant-momentum"

    def __init__(self, k, params):
        if not (k > 0):
            raise InvalidParameterError("coupling k must be positive, got %r" % (k,))
        self.k = float(k)
        self.params = params

    def V(self, r):
        r = np.asarray(r, dtype=float)
        c, m = self.params.c, self.params.m
        return -c * np.sqrt(self.k / r**2 + c**2 * m**2)

    def dV(self, r):
        r = np.asarray(r, dtype=float)
        c, m = self.params.c, self.params.m
        return c * self.k / (r**2 * np.sqrt(self.k + c**2 * m**2 * r**2))

    def d2V(self, r):
        r = np.asarray(r, dtype=float)
        c = self.params.c
        mt = c**2 * self.params.m**2
        u = self.k + mt * r**2
        return -c * self.k * (2.0 * self.k + 3.0 * mt * r**2) / (r**3 * u**1.5)

    def d3V(self, r):
        r = np.asarray(r, dtype=float)
        c = self.params.c
        mt = c**2 * self.params.m**2
        u = self.k + mt * r**2
        return 3.0 * c * self.k * (2.0 * self.k**2 + 5.0 * self.k * mt * r**2 + 4.0 * mt**2 * r**4) / (r**4 * u**2.5)

    def W(self, rho):
        rho = np.asarray(rho, dtype=float)
        c, m = self.params.c, self.params.m
        return -c * np.sqrt(self.k * rho**2 + c**2 * m**2)

    def dW(self, rho):
        rho = np.asarray(rho, dtype=float)
        c, m = self.params.c, self.params.m
        return -c * self.k * rho / np.sqrt(self.k * rho**2 + c**2 * m**2)

    def d2W(self, rho):
        rho = np.asarray(rho, dtype=float)
        c = self.params.c
        mt = c**2 * self.params.m**2
        return -c * self.k * mt / (self.k * rho**2 + mt) ** 1.5

    def d3W(self, rho):
        rho = np.asarray(rho, dtype=float)
        c = self.params.c
        mt = c**2 * self.params.m**2
        return 3.0 * c * self.k**2 * mt * rho / (self.k * rho**2 + mt) ** 2.5


class TabulatedPotential(Potential):
    """Potential defined by Hermite interpolation of W'(rho) on a grid.

    Nodes carry exact values of W' together with W'' (interpolant slopes),
    and separately tabulated W''/W''' and W'''/W'''' pairs so that the second
    and third derivatives stay node-exact as well. W is recovered by
    antidifferentiation, fixed by W(rho_grid[0]) = w_anchor.
    """

    kind = "tabulated"

    def __init__(self, rho_grid, w1, w2, w3, w4, params, k=None, w_anchor=0.0):
        from scipy.interpolate import CubicHermiteSpline

        rho_grid = np.asarray(rho_grid, dtype=float)
        if rho_grid.ndim != 1 or len(rho_grid) < 2 or np.any(np.diff(rho_grid) <= 0):
            raise InvalidParameterError("tabulated potential needs a strictly increasing rho grid")
        self.rho_grid = rho_grid
        self.params = params
        self.k = k
        self._s_dw = CubicHermiteSpline(rho_grid, w1, w2)
        self._s_w = self._s_dw.antiderivative()
        self._w_offset = float(w_anchor) - float(self._s_w(rho_grid[0]))
        self._s_d2w = CubicHermiteSpline(rho_grid, w2, w3)
        self._s_d3w = CubicHermiteSpline(rho_grid, w3, w4)
        self.attractive = bool(np.all(np.asarray(w1) < 0))

    def _check(self, rho):
        rho = np.asarray(rho, dtype=float)
        lo, hi = self.rho_grid[0], self.rho_grid[-1]
        if np.any(rho < lo) or np.any(rho > hi):
            raise InvalidParameterError(
                "rho outside tabulated range [%g, %g]" % (lo, hi))
        return rho

    def W(self, rho):
        return self._s_w(self._check(rho)) + self._w_offset

    def dW(self, rho):
        return self._s_dw(self._check(rho))

    def d2W(self, rho):
        return self._s_d2w(self._check(rho))

    def d3W(self, rho):
        return self._s_d3w(self._check(rho))


def make_potential(kind, k, params):
    """Build one of the closed-form potentials.

    Parameters
    ----------
    kind : str
        "coulomb" or "constant-momentum". Tabulated potentials are produced
        by the Bertrand family builder, not here.
    k : float
        Coupling strength, > 0.
    params : PhysicalParams
    """
    if kind == "coulomb":
        return CoulombPotential(k, params)
    if kind == "constant-momentum":
        return ConstantMomentumPotential(k, params)
    raise InvalidParameterError("unknown potential kind %r" % (kind,))


def lorentz_gamma(p, params):
    """Lorentz factor of a momentum vector: sqrt(c^2 m^2 + |p|^2)/(c m) >= 1.

    Accepts a single vector or an (..., 2) array.
    """
    p = np.asarray(p, dtype=float)
    p2 = np.sum(p * p, axis=-1)
    cm = params.c * params.m
    out = np.sqrt(cm * cm + p2) / cm
    return float(out) if out.ndim == 0 else out


def hamiltonian_qp(q, p, pot, params):
    """Energy at (q, p) arrays of shape (..., 2); vectorized."""
    q = np.asarray(q, dtype=float)
    r = np.sqrt(np.sum(q * q, axis=-1))
    if np.any(r == 0):
        raise SingularityError("hamiltonian undefined at the origin")
    return params.mc2 * (lorentz_gamma(p, params) - 1.0) + pot.V(r)


def hamiltonian(state, pot, params):
    """Energy of a phase-space point: m c^2 (gamma - 1) + V(|q|)."""
    return float(hamiltonian_qp(state.q, state.p, pot, params))


def angular_momentum_qp(q, p):
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    return q[..., 0] * p[..., 1] - q[..., 1] * p[..., 0]


def angular_momentum(state):
    """Third component of the angular momentum, q1 p2 - q2 p1."""
    return float(angular_momentum_qp(state.q, state.p))


def momentum_from_velocity(v, params):
    """Relativistic momentum p = m v / sqrt(1 - |v|^2/c^2); requires |v| < c."""
    v = np.asarray(v, dtype=float)
    beta2 = np.sum(v * v, axis=-1) / params.c**2
    if np.any(beta2 >= 1.0):
        raise SuperluminalError("|v| must be below the light speed")
    return params.m * v / np.sqrt(1.0 - beta2)[..., None] if v.ndim > 1 else params.m * v / np.sqrt(1.0 - beta2)


def velocity_from_momentum(p, params):
    """Inverse momentum map v = p/(m gamma(p)); always subluminal."""
    p = np.asarray(p, dtype=float)
    g = lorentz_gamma(p, params)
    return p / (params.m * (g[..., None] if np.ndim(g) > 0 else g))
