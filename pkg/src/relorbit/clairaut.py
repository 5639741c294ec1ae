"""Clairaut reduction: rho = 1/r with the polar angle as independent variable.

The radial dynamics becomes the planar system

    d rho / d theta = eta,
    d eta / d theta = -rho - (m/ell^2) gamma(rho, eta; ell) W'(rho),

whose equilibria are the circular motions. This module locates equilibria,
linearizes around them, measures the period function P(xi) of a centre (by
the polar-coordinate angular ODE, cross-checked by a return map), and
reconstructs physical time along periodic rho(theta) profiles.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .core import angular_momentum
from .errors import (BasinExceededError, InvalidParameterError, NonEquilibriumError,
                     PreconditionError)


@dataclass(frozen=True)
class ClairautState:
    rho: float
    eta: float
    ell: float

    def __post_init__(self):
        if not (self.rho > 0):
            raise InvalidParameterError("rho must be positive")
        if self.ell == 0:
            raise InvalidParameterError("ell must be nonzero (radial motion is handled "
                                        "by the collision module)")


def gamma_factor(rho, eta, ell, params):
    """Lorentz factor in Clairaut variables at fixed angular momentum."""
    cm = params.c * params.m
    return np.sqrt(1.0 + (ell / cm) ** 2 * (np.asarray(rho) ** 2 + np.asarray(eta) ** 2))


def clairaut_rhs(s, pot, params):
    """(d rho/d theta, d eta/d theta) at a Clairaut state."""
    g = gamma_factor(s.rho, s.eta, s.ell, params)
    return s.eta, float(-s.rho - params.m / s.ell**2 * g * pot.dW(s.rho))


def _rhs_func(ell, pot, params):
    m = params.m
    cm2 = (params.c * params.m) ** 2
    l2 = ell * ell

    def f(theta, y):
        rho, eta = y
        g = math.sqrt(1.0 + l2 * (rho * rho + eta * eta) / cm2)
        return (eta, -rho - m / l2 * g * float(pot.dW(rho)))

    return f


class ClairautTrajectory:
    """Dense (rho, eta)(theta) solution at fixed ell."""

    def __init__(self, ivp_result, ell, complete):
        self.theta = ivp_result.t
        self.rho = ivp_result.y[0]
        self.eta = ivp_result.y[1]
        self.ell = ell
        self.complete = complete
        self._sol = ivp_result.sol

    def at(self, theta):
        y = self._sol(theta)
        return y[0], y[1]


def integrate_clairaut(s0, theta_span, pot, params, rtol=1e-12, atol=1e-14):
    """Integrate the reduced system over a theta interval with dense output.

    Terminates early (complete=False) if rho collapses to zero, where the
    reduction loses meaning.
    """
    f = _rhs_func(s0.ell, pot, params)

    def ev_zero(theta, y):
        return y[0] - 1e-12
    ev_zero.terminal = True
    ev_zero.direction = -1.0

    res = solve_ivp(f, theta_span, [s0.rho, s0.eta], rtol=rtol, atol=atol,
                    dense_output=True, events=[ev_zero], method="RK45")
    if not res.success and res.status != 1:
        raise InvalidParameterError("clairaut integration failed: %s" % res.message)
    return ClairautTrajectory(res, s0.ell, complete=res.t[-1] == theta_span[1])


def clairaut_from_state(state, params):
    """Map a Cartesian phase point to Clairaut variables at its own ell."""
    ell = angular_momentum(state)
    r = state.r
    rho = 1.0 / r
    eta = -float(np.dot(state.q, state.p)) * rho / ell
    return ClairautState(rho=rho, eta=eta, ell=ell)


@dataclass(frozen=True)
class EquilibriumResult:
    roots: tuple
    continuum: bool
    max_rel_residual: float


def _equilibrium_f(ell, pot, params):
    m = params.m
    l2 = ell * ell

    def f(rho):
        g = gamma_factor(rho, 0.0, ell, params)
        return rho + m / l2 * g * pot.dW(rho)

    return f


def equilibrium_solve(ell, pot, params, search=None, n_scan=4000):
    """All equilibrium radii rho0 of the reduced system at momentum ell.

    Returns continuum=True when the residual vanishes identically on the scan
    grid (the constant-momentum potential at ell = sqrt(k)).
    """
    if ell == 0:
        raise InvalidParameterError("ell must be nonzero")
    if search is None:
        if pot.kind == "tabulated":
            search = (pot.rho_grid[0], pot.rho_grid[-1])
        else:
            search = (1e-4, 1e4)
    lo, hi = search
    grid = np.geomspace(lo, hi, n_scan)
    f = _equilibrium_f(ell, pot, params)
    vals = f(grid)
    scale = np.maximum(grid, np.abs(params.m / ell**2
                                    * gamma_factor(grid, 0.0, ell, params) * pot.dW(grid)))
    rel = np.abs(vals) / scale
    max_rel = float(np.max(rel))
    if max_rel < 1e-10:
        return EquilibriumResult(roots=(), continuum=True, max_rel_residual=max_rel)
    roots = []
    sign = np.sign(vals)
    for i in np.nonzero(sign[:-1] * sign[1:] < 0)[0]:
        root = brentq(lambda x: float(f(x)), grid[i], grid[i + 1], rtol=8.9e-16, maxiter=200)
        roots.append(float(root))
    exact = [float(g) for g, v in zip(grid, vals) if v == 0.0]
    roots = sorted(set(roots) | set(exact))
    return EquilibriumResult(roots=tuple(roots), continuum=False, max_rel_residual=max_rel)


@dataclass(frozen=True)
class Linearization:
    A: float
    B: float
    Theta0: float  # 2 pi / sqrt(A); nan when A <= 0
    saddle: bool


def linearized_frequency(rho0, ell, pot, params, eq_tol=1e-8):
    """Jacobian data of the reduced system at an equilibrium (rho0, 0)."""
    f = _equilibrium_f(ell, pot, params)
    if abs(float(f(rho0))) > eq_tol * max(1.0, abs(rho0)):
        raise NonEquilibriumError("(%g, 0) is not an equilibrium at ell=%g" % (rho0, ell))
    g = float(gamma_factor(rho0, 0.0, ell, params))
    c2m = params.c**2 * params.m
    A = 1.0 + rho0 * float(pot.dW(rho0)) / (c2m * g) + params.m / ell**2 * g * float(pot.d2W(rho0))
    theta0 = 2.0 * math.pi / math.sqrt(A) if A > 0 else math.nan
    return Linearization(A=float(A), B=0.0, Theta0=theta0, saddle=A < 0)


def _polar_F(rho0, ell, pot, params):
    m = params.m
    cm2 = (params.c * params.m) ** 2
    l2 = ell * ell

    def F(R, phi):
        cphi = math.cos(phi)
        rho = rho0 + R * cphi
        g = math.sqrt(1.0 + (R * R + rho0 * rho0 + 2.0 * R * rho0 * cphi) * l2 / cm2)
        return rho0 + m / l2 * g * float(pot.dW(rho))

    return F


def _period_phi_method(xi, rho0, ell, pot, params, rtol, atol):
    """P(xi) from the angular ODE dR/dphi with the flight time integrated along."""
    F = _polar_F(rho0, ell, pot, params)

    def f(phi, y):
        R = y[0]
        fv = F(R, phi)
        den = 1.0 + math.cos(phi) * fv / R
        return (math.sin(phi) * fv / den, 1.0 / den)

    def ev_den(phi, y):
        return 1.0 + math.cos(phi) * F(y[0], phi) / y[0] - 1e-3
    ev_den.terminal = True

    def ev_rho_floor(phi, y):
        return rho0 + y[0] * math.cos(phi) - 1e-6 * rho0
    ev_rho_floor.terminal = True
    ev_rho_floor.direction = -1.0

    try:
        res = solve_ivp(f, (0.0, 2.0 * math.pi), [xi, 0.0], rtol=rtol, atol=atol,
                        events=[ev_den, ev_rho_floor], method="RK45")
    except InvalidParameterError as exc:
        raise BasinExceededError("xi=%g leaves the tabulated range: %s" % (xi, exc))
    if not res.success or res.t[-1] < 2.0 * math.pi:
        raise BasinExceededError("xi=%g leaves the centre basin" % (xi,))
    return float(res.y[1, -1]), float(res.y[0, -1])


def _period_return_map(xi, rho0, ell, pot, params, theta_max, rtol, atol):
    """P(xi) as twice the flight time to the opposite crossing of {eta = 0}."""
    f = _rhs_func(ell, pot, params)

    def ev(theta, y):
        return y[1]
    ev.terminal = True
    ev.direction = 1.0

    res = solve_ivp(f, (0.0, theta_max), [rho0 + xi, 0.0], rtol=rtol, atol=atol,
                    events=[ev], method="RK45")
    if len(res.t_events[0]) == 0:
        raise BasinExceededError("no return crossing found for xi=%g" % (xi,))
    return 2.0 * float(res.t_events[0][0])


@dataclass(frozen=True)
class PeriodFit:
    rho0: float
    ell: float
    xi: np.ndarray
    P: np.ndarray
    P_return_map: np.ndarray
    Theta0: float
    c2: float
    c2_gap: float
    c1: float
    fit_residual: float
    method_agreement: float

    def csv_text(self):
        lines = ["xi,P"]
        for x, p in zip(self.xi, self.P):
            lines.append("%.17g,%.17g" % (x, p))
        return "\n".join(lines) + "\n"

    def sidecar(self):
        return {"rho0": self.rho0, "ell": self.ell, "Theta0": self.Theta0,
                "c2": self.c2, "residual": self.fit_residual}


def _eliminate_c2(xis, Es):
    """Value at xi=0 of the polynomial through (xi, E) — kills odd/even tails."""
    V = np.vander(xis, increasing=True)
    coef = np.linalg.solve(V, Es)
    return float(coef[0])


def _measure_one_xi(args):
    xi, rho0, ell, pot, params, theta_max, rtol, atol = args
    p, _ = _period_phi_method(xi, rho0, ell, pot, params, rtol, atol)
    prm = _period_return_map(xi, rho0, ell, pot, params, theta_max, rtol, atol)
    return p, prm


def period_function(rho0, ell, pot, params, xi_list=None, rtol=1e-12, atol=1e-14,
                    jobs=1):
    """Measure the period function P(xi) of the centre at (rho0, 0).

    xi parametrizes the transversal {eta = 0, rho = rho0 + xi}. The primary
    computation integrates the angular ODE over a full turn; an independent
    return-map time of flight is recorded for each xi as a cross-check. The
    xi^2 coefficient is extracted by polynomial elimination against the
    analytic linearized period. ``jobs`` > 1 fans the xi sweep out over worker
    processes (results keep the sorted-xi order).
    """
    lin = linearized_frequency(rho0, ell, pot, params)
    if not (lin.A > 0):
        raise NonEquilibriumError("(%g, 0) is not a centre (A = %g)" % (rho0, lin.A))
    if xi_list is None:
        xi0 = 0.05 * rho0
        xi_list = [xi0, xi0 / 2, xi0 / 4, xi0 / 8]
    xis = np.asarray(sorted(xi_list, reverse=True), dtype=float)
    if np.any(xis <= 0):
        raise InvalidParameterError("xi values must be positive")
    arglist = [(xi, rho0, ell, pot, params, 3.0 * lin.Theta0, rtol, atol) for xi in xis]
    if jobs > 1 and len(arglist) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as ex:
            measured = list(ex.map(_measure_one_xi, arglist))
    else:
        measured = [_measure_one_xi(a) for a in arglist]
    Ps = np.asarray([m[0] for m in measured])
    Prm = np.asarray([m[1] for m in measured])
    E = (Ps - lin.Theta0) / xis**2
    c2 = _eliminate_c2(xis, E)
    c2_gap = abs(c2 - _eliminate_c2(xis[1:], E[1:])) if len(xis) >= 3 else math.nan
    # cubic fit with the odd terms kept: the xi^1 coefficient must be
    # negligible against the xi^2 one at the measurement scale
    B = np.vstack([np.ones_like(xis), xis, xis**2, xis**3]).T
    coef, *_ = np.linalg.lstsq(B, Ps, rcond=None)
    resid = float(np.max(np.abs(B @ coef - Ps)))
    return PeriodFit(rho0=float(rho0), ell=float(ell), xi=xis, P=Ps, P_return_map=Prm,
                     Theta0=lin.Theta0, c2=c2, c2_gap=float(c2_gap), c1=float(coef[1]),
                     fit_residual=resid, method_agreement=float(np.max(np.abs(Ps - Prm))))


@dataclass(frozen=True)
class TimeReconstruction:
    Theta: float
    sigma_drift: float
    theta_grid: np.ndarray
    psi: np.ndarray
    drift_identity_error: float
    closed: bool
    rational: tuple  # (p, q) approximation of Theta/pi when closed, else None
    orbit_period: float  # physical period of the closed orbit, nan when dense

    def verdict(self):
        return "closed-orbit" if self.closed else "dense-torus"


def _rational_closure(theta_period, q_max=64, tol=1e-9):
    x = theta_period / math.pi
    frac = Fraction(x).limit_denominator(q_max)
    if abs(x - float(frac)) < tol:
        return frac.numerator, frac.denominator
    return None


def time_reconstruction(s0, pot, params, Theta=None, n_psi=257, q_max=64,
                        closure_tol=1e-9, rtol=1e-12, atol=1e-14):
    """Physical time along a periodic rho(theta) profile anchored at an apsis.

    t(theta) = integral of m gamma/(ell rho^2); it splits into a linear drift
    plus a Theta-periodic part psi. The orbit closes exactly when Theta is a
    rational multiple of pi, detected here by a bounded-denominator rational
    approximation (q <= q_max at tolerance closure_tol; exact arithmetic has
    no such cutoff, floats do).
    """
    if abs(s0.eta) > 1e-9 * max(1.0, s0.rho):
        raise PreconditionError("anchor the reconstruction at an apsis (eta = 0)")
    m, ell = params.m, s0.ell
    f_eq = _equilibrium_f(ell, pot, params)
    is_circular = abs(float(f_eq(s0.rho))) < 1e-9 * max(1.0, s0.rho)

    if is_circular:
        lin = linearized_frequency(s0.rho, ell, pot, params)
        theta_p = Theta if Theta is not None else lin.Theta0
        g = float(gamma_factor(s0.rho, 0.0, ell, params))
        sigma = m * g / (ell * s0.rho**2)
        grid = np.linspace(0.0, theta_p, n_psi)
        psi = np.zeros_like(grid)
        ident_err = 0.0
    else:
        if Theta is None:
            lin_guess = 8.0 * math.pi
            rho_eq = equilibrium_solve(ell, pot, params)
            if rho_eq.roots:
                lin = linearized_frequency(rho_eq.roots[0], ell, pot, params)
                lin_guess = 3.0 * lin.Theta0
            xi0 = s0.rho  # return map from the anchor point itself
            f = _rhs_func(ell, pot, params)

            def ev(theta, y):
                return y[1]
            ev.terminal = True
            ev.direction = 1.0
            res = solve_ivp(f, (0.0, lin_guess), [s0.rho, 0.0], rtol=rtol, atol=atol,
                            events=[ev], method="RK45")
            if len(res.t_events[0]) == 0:
                raise PreconditionError("input orbit does not return to the section")
            theta_p = 2.0 * float(res.t_events[0][0])
        else:
            theta_p = float(Theta)
        fext = _rhs_func(ell, pot, params)
        cm = params.c * params.m

        def f_aug(theta, y):
            rho, eta, _ = y
            d = fext(theta, (rho, eta))
            g = math.sqrt(1.0 + (ell / cm) ** 2 * (rho * rho + eta * eta))
            return (d[0], d[1], m * g / (ell * rho * rho))

        res = solve_ivp(f_aug, (0.0, 2.0 * theta_p), [s0.rho, s0.eta, 0.0],
                        rtol=rtol, atol=atol, dense_output=True, method="RK45")
        y_t = res.sol(theta_p)
        scale = max(1.0, abs(s0.rho))
        if abs(y_t[0] - s0.rho) > 1e-9 * scale or abs(y_t[1] - s0.eta) > 1e-9 * scale:
            raise PreconditionError("profile is not Theta-periodic within 1e-9")
        t_of = lambda th: res.sol(th)[2]
        sigma = (t_of(theta_p) - t_of(0.0)) / theta_p
        grid = np.linspace(0.0, theta_p, n_psi)
        tvals = np.array([t_of(th) for th in grid])
        psi = tvals - sigma * grid
        shifted = np.array([t_of(th + theta_p) for th in grid])
        ident_err = float(np.max(np.abs(shifted - tvals - sigma * theta_p)))

    rat = _rational_closure(theta_p, q_max=q_max, tol=closure_tol)
    if rat is None:
        closed, period = False, math.nan
    else:
        p_num, q_den = rat
        m_den = q_den if p_num % 2 == 0 else 2 * q_den
        closed, period = True, m_den * sigma * theta_p
    return TimeReconstruction(Theta=float(theta_p), sigma_drift=float(sigma),
                              theta_grid=grid, psi=psi, drift_identity_error=ident_err,
                              closed=closed, rational=rat,
                              orbit_period=float(period))
