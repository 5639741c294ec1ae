"""Candidate isochronous families and the period-constant obstruction.

A family of centres sharing one angular period is pinned down by two coupled
ODEs in the equilibrium radius: one propagates W', the other the angular
momentum profile. Integrating them yields a tabulated potential whose period
function can be measured and compared against the closed-form xi^2
coefficient, whose numerator polynomial Q has no admissible root: the
Bertrand property fails for every such candidate.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline

from .clairaut import gamma_factor
from .core import TabulatedPotential
from .errors import InvalidParameterError

_TINY_L = 1e-12


def _check_family_point(rho0, L):
    if not (rho0 > 0):
        raise InvalidParameterError("rho0 must be positive")
    if not (L > 0):
        raise InvalidParameterError("angular momentum must be positive along the family")


def family_rhs(rho0, Wp, L, a, params):
    """Right-hand side (dW'/drho0, dL/drho0) of the family ODEs."""
    _check_family_point(rho0, L)
    c, m = params.c, params.m
    dWp = -(a / rho0) * Wp - Wp**3 / (c**2 * L**2 * rho0)
    dL = -(1.0 + a) * L * (c**2 * m**2 + rho0**2 * L**2) / (2.0 * c**2 * m**2 * rho0 + rho0**3 * L**2)
    return dWp, dL


def _w2(rho, w1, L, a, params):
    c = params.c
    return -(a / rho) * w1 - w1**3 / (c**2 * L**2 * rho)


def _w3(rho, w1, L, a, params):
    c, m = params.c, params.m
    L2 = L * L
    X = rho * rho * L2
    mu0 = a * (1 + a) * c**4 * L2**2 * (2 * c**2 * m**2 + X)
    mu1 = c**2 * L2 * (6 * a * c**2 * m**2 + (-1 + 2 * a) * X)
    mu2 = 6 * c**2 * m**2 + 3 * X
    return w1 * (mu0 + mu1 * w1**2 + mu2 * w1**4) / (c**4 * rho**2 * L2**2 * (2 * c**2 * m**2 + X))


def _w4(rho, w1, L, a, params):
    c, m = params.c, params.m
    L2 = L * L
    X = rho * rho * L2
    s = 2 * c**2 * m**2 + X
    eta0 = a * (1 + a) * (2 + a) * c**6 * L2**3 * s**3
    eta1 = c**4 * L2**2 * (8 * a * (4 + 7 * a) * c**6 * m**6
                           + 12 * a * (2 + 5 * a) * c**4 * m**4 * X
                           + 2 * (-1 + 10 * a**2) * c**2 * m**2 * X**2
                           + 3 * a**2 * X**3)
    eta2 = 9 * c**2 * L2 * (4 * a * c**2 * m**2 + (-1 + a) * X) * s**2
    eta3 = 15 * s**3
    return -w1 * (eta0 + eta1 * w1**2 + eta2 * w1**4 + eta3 * w1**6) / (c**6 * rho**3 * L2**3 * s**3)


class BertrandFamily:
    """Tabulated candidate family at isochrony parameter ``a``.

    Carries the (rho0, W', L) grids with the derived higher derivatives, the
    interpolated potential, and an angular-momentum profile interpolant.
    """

    def __init__(self, a, rho_star, ell_star, grid, w1, ell, params, truncated=False):
        self.a = float(a)
        self.rho_star = float(rho_star)
        self.ell_star = float(ell_star)
        self.params = params
        self.rho0 = grid
        self.Wp = w1
        self.L = ell
        self.truncated = truncated
        self.W2 = _w2(grid, w1, ell, a, params)
        self.W3 = _w3(grid, w1, ell, a, params)
        self.W4 = _w4(grid, w1, ell, a, params)
        dL = np.array([family_rhs(r, w, l, a, params)[1] for r, w, l in zip(grid, w1, ell)])
        self._ell_spline = CubicHermiteSpline(grid, ell, dL)
        self.potential = TabulatedPotential(grid, w1, self.W2, self.W3, self.W4, params)
        self.W = self.potential.W(grid)
        g = gamma_factor(grid, 0.0, ell, params)
        self.equilibrium_residual = np.abs(grid + params.m / ell**2 * g * w1) / grid

    def ell_of(self, rho0):
        return self._ell_spline(rho0)

    def x_of(self, rho0):
        """The dimensionless combination rho0^2 L(rho0)^2 / (c m)^2."""
        return np.asarray(rho0) ** 2 * self.ell_of(rho0) ** 2 / (self.params.c * self.params.m) ** 2

    def csv_text(self):
        lines = ["rho0,Wprime,L,W"]
        for r, wp, l, w in zip(self.rho0, self.Wp, self.L, self.W):
            lines.append("%.17g,%.17g,%.17g,%.17g" % (r, wp, l, w))
        return "\n".join(lines) + "\n"

    def metadata(self):
        return {"a": self.a, "rho_star": self.rho_star, "ell_star": self.ell_star}


def build_family(a, rho_star, ell_star, rho_range, params, rtol=1e-12, atol=1e-14,
                 n_grid=801):
    """Integrate the family ODEs across ``rho_range`` and tabulate the potential.

    Initial data come from the equilibrium identity at (rho_star, ell_star):
    W'(rho_star) = -rho_star ell_star^2 / (m gamma). The equilibrium identity
    is a first integral of the coupled system, so it holds on the whole grid.
    """
    if not (a > -1):
        raise InvalidParameterError("isochrony parameter must satisfy a > -1")
    if not (ell_star > 0):
        raise InvalidParameterError("ell_star must be positive")
    lo, hi = float(rho_range[0]), float(rho_range[1])
    if not (0 < lo < rho_star < hi):
        raise InvalidParameterError("rho_range must bracket rho_star")
    g_star = float(gamma_factor(rho_star, 0.0, ell_star, params))
    w1_star = -rho_star * ell_star**2 / (params.m * g_star)

    def f(rho, y):
        return family_rhs(rho, y[0], y[1], a, params)

    def ev_small_L(rho, y):
        return y[1] - _TINY_L * ell_star
    ev_small_L.terminal = True

    truncated = False
    sols = {}
    for t0, t1, key in ((rho_star, hi, "up"), (rho_star, lo, "down")):
        res = solve_ivp(f, (t0, t1), [w1_star, ell_star], rtol=rtol, atol=atol,
                        dense_output=True, events=[ev_small_L], method="RK45")
        if not res.success:
            raise InvalidParameterError("family integration failed: %s" % res.message)
        if res.t[-1] != t1:
            truncated = True
            if key == "up":
                hi = float(res.t[-1]) * (1 - 1e-12)
            else:
                lo = float(res.t[-1]) * (1 + 1e-12)
        sols[key] = res.sol

    grid = np.geomspace(lo, hi, n_grid)
    w1 = np.empty(n_grid)
    ell = np.empty(n_grid)
    for i, r in enumerate(grid):
        y = sols["up"](r) if r >= rho_star else sols["down"](r)
        w1[i], ell[i] = y[0], y[1]
    return BertrandFamily(a, rho_star, ell_star, grid, w1, ell, params, truncated=truncated)


def q_polynomial(x, a):
    """Obstruction polynomial in x = rho0^2 L^2/(c m)^2 at parameter a."""
    return (8 * (3 - a) * a
            + 28 * (3 - a) * a * x
            + 2 * (3 - a) * (8 + 19 * a) * x**2
            + (63 + 46 * a - 25 * a**2) * x**3
            + (22 + 10 * a - 8 * a**2) * x**4
            + (2 + 2 * a - a**2) * x**5)


def period_constant_formula(rho0, ell, a, params):
    """Closed-form xi^2 coefficient of the period function along a family."""
    c, m = params.c, params.m
    x = rho0**2 * ell**2 / (c * m) ** 2
    X = rho0**2 * ell**2
    den = 12.0 * math.sqrt(1.0 + a) * rho0**2 * (2 * c**2 * m**2 + X) ** 3 * (c**2 * m**2 + X) ** 2
    return -math.pi * c**10 * m**10 * q_polynomial(x, a) / den


def orbit_amplitude_first_order(phi, a):
    """First-order shape factor of the loop around the centre."""
    return math.sqrt(1.0 + a) / math.sqrt(1.0 + a * math.cos(phi) ** 2)


def orbit_amplitude_second_order(phi, rho0, ell, a, params):
    """Second-order shape factor (lambda-coefficient form)."""
    c, m = params.c, params.m
    X = rho0**2 * ell**2
    lam1 = -(2 * a * c**4 * m**4 + 3 * (2 + a) * c**2 * m**2 * X + (2 + a) * X**2)
    lam2 = 3 * X * (2 * c**2 * m**2 + X)
    lam3 = (2 * a * (1 + a) * c**4 * m**4 + 3 * a * (3 + a) * c**2 * m**2 * X
            + (-1 + 3 * a + a**2) * X**2)
    r1 = orbit_amplitude_first_order(phi, a)
    cp = math.cos(phi)
    num = r1 * (lam1 + r1 / (1.0 + a * cp * cp) * (lam2 * cp + lam3 * cp**3))
    return num / (6.0 * rho0 * (2 * c**4 * m**4 + 3 * c**2 * m**2 * X + X**2))


def gamma_tilde(rho0, Wp, params):
    """Lorentz factor of the circular motion, from rho0 and W' alone."""
    mc2 = params.mc2
    z = rho0 * Wp / mc2
    return 0.5 * (-z + math.sqrt(z * z + 4.0))


@dataclass(frozen=True)
class ObstructionReport:
    a: float
    K: float                 # (1-a)/a; nan for a = 0
    Q_at_K: float            # direct polynomial evaluation; nan for a = 0
    Q_at_K_identity: float   # 2(1+a)(1+6a-9a^2+6a^3)/a^5; nan for a = 0
    cubic_p0: float
    cubic_p1: float
    cubic_disc: float
    cubic_positive: bool
    gamma_tilde_min: float   # min over the family grid; nan when no family given
    no_isochronous_family: bool


def obstruction_certificate(a, family=None):
    """Certify that the candidate family at parameter ``a`` cannot be isochronous.

    The only admissible root of Q would be K = (1-a)/a, and Q(K) is a positive
    multiple of 6a^3 - 9a^2 + 6a + 1, which is certified root-free on [0, 1]
    by its endpoint values and the negative discriminant of its derivative.
    """
    if not (a > -1):
        raise InvalidParameterError("isochrony parameter must satisfy a > -1")
    cubic = lambda t: 6.0 * t**3 - 9.0 * t**2 + 6.0 * t + 1.0
    p0, p1 = cubic(0.0), cubic(1.0)
    disc = 18.0**2 - 4.0 * 18.0 * 6.0  # of the derivative 18 a^2 - 18 a + 6
    cubic_positive = p0 > 0 and p1 > 0 and disc < 0
    if a == 0:
        K = qk = qk_id = math.nan
    else:
        K = (1.0 - a) / a
        qk = q_polynomial(K, a)
        qk_id = 2.0 * (1.0 + a) * cubic(a) / a**5
    gt_min = math.nan
    if family is not None:
        gt_min = float(min(gamma_tilde(r, w, family.params)
                           for r, w in zip(family.rho0, family.Wp)))
    conclusion = cubic_positive and (a == 0 or qk != 0.0)
    return ObstructionReport(a=float(a), K=K, Q_at_K=qk, Q_at_K_identity=qk_id,
                             cubic_p0=p0, cubic_p1=p1, cubic_disc=disc,
                             cubic_positive=cubic_positive, gamma_tilde_min=gt_min,
                             no_isochronous_family=conclusion)
