"""Everything specific to the attractive Coulomb potential V = -k/r.

Covers the energy-momentum classification of admissible (ell, h) pairs with
an explicit existence-witness construction, the relativistic Runge-Lenz
vector together with its rotating-frame linear ODE and conserved quadratic
form, the closed-form precessing orbit, and apsidal-angle measurement.
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import brentq

from .core import PhaseState, angular_momentum, hamiltonian_qp, lorentz_gamma
from .dynamics import apsis_times
from .errors import (InsufficientDataError, InvalidParameterError, OrientationError,
                     OutOfBranchError, SingularityError)


class MotionClass(str, Enum):
    EMPTY = "Empty"
    CIRCULAR = "Circular"
    BOUNDED = "BoundedNonCollision"
    UNBOUNDED = "UnboundedSupercritical"
    SUBCRITICAL = "Subcritical"
    CRITICAL = "CriticalMomentum"
    EXCLUDED = "ExcludedPoint"


CLASS_CODES = {
    MotionClass.EMPTY: 0,
    MotionClass.CIRCULAR: 1,
    MotionClass.BOUNDED: 2,
    MotionClass.UNBOUNDED: 3,
    MotionClass.SUBCRITICAL: 4,
    MotionClass.CRITICAL: 5,
    MotionClass.EXCLUDED: 6,
}


@dataclass(frozen=True)
class EMPoint:
    ell: float
    h: float


@dataclass(frozen=True)
class EMClass:
    label: MotionClass
    sigma_sq: float  # nan for ell = 0
    h_min: float     # nan when undefined (|ell| < k/c)
    note: str = ""

    @property
    def code(self):
        return CLASS_CODES[self.label]


@dataclass(frozen=True)
class SigmaInfo:
    sigma_sq: float  # nan for ell = 0
    sigma: float     # nan when sigma_sq < 0 or undefined
    h_min: float     # nan when |ell| < k/c


def sigma_and_min_energy(ell, k, params):
    """sigma^2 = 1 - k^2/(ell^2 c^2) and the circular-boundary energy.

    h_min = -m c^2 (1 - sigma) exists for |ell| >= k/c; below that the
    momentum is subcritical and the energy is unbounded from below.
    """
    if ell == 0:
        return SigmaInfo(sigma_sq=math.nan, sigma=math.nan, h_min=math.nan)
    s2 = 1.0 - k**2 / (ell**2 * params.c**2)
    sigma = math.sqrt(s2) if s2 >= 0 else math.nan
    h_min = -params.mc2 * (1.0 - sigma) if s2 >= 0 else math.nan
    return SigmaInfo(sigma_sq=s2, sigma=sigma, h_min=h_min)


def classify(pt, k, params, tol=1e-9):
    """Partition of the energy-momentum plane by admissible motions.

    Equality comparisons use the relative tolerance ``tol`` (the underlying
    sets are exact; floats need a declared cutoff).
    """
    ell, h = pt.ell, pt.h
    c, mc2 = params.c, params.mc2
    lc2 = ell * ell * c * c
    k2 = k * k
    tol_h = tol * max(1.0, mc2)
    if abs(abs(ell) - k / c) <= tol * (k / c) and abs(h + mc2) <= tol_h:
        return EMClass(label=MotionClass.EXCLUDED, sigma_sq=0.0, h_min=-mc2,
                       note="removed point (+-k/c, -mc^2)")
    if abs(lc2 - k2) <= tol * k2:
        return EMClass(label=MotionClass.CRITICAL, sigma_sq=0.0, h_min=-mc2,
                       note="sigma = 0; infimum -mc^2 not attained: level sets "
                            "nonempty exactly for h > -mc^2")
    if lc2 < k2:
        s2 = math.nan if ell == 0 else 1.0 - k2 / lc2
        return EMClass(label=MotionClass.SUBCRITICAL, sigma_sq=s2, h_min=math.nan,
                       note="nonempty for every h; collision regime")
    info = sigma_and_min_energy(ell, k, params)
    if h < info.h_min - tol_h:
        return EMClass(label=MotionClass.EMPTY, sigma_sq=info.sigma_sq, h_min=info.h_min)
    if abs(h - info.h_min) <= tol_h:
        return EMClass(label=MotionClass.CIRCULAR, sigma_sq=info.sigma_sq, h_min=info.h_min)
    if h < 0:
        return EMClass(label=MotionClass.BOUNDED, sigma_sq=info.sigma_sq, h_min=info.h_min)
    return EMClass(label=MotionClass.UNBOUNDED, sigma_sq=info.sigma_sq, h_min=info.h_min)


def _psi(x, ell_abs, k, params):
    c, m = params.c, params.m
    return c * c * math.sqrt(m * m + x * x / (c * c)) - k / ell_abs * x - params.mc2


def existence_witness(ell, h, k, params, tol=1e-9):
    """Explicit (q, p) on the level set {H = h, L = ell}, or None.

    Perpendicular configurations q = lambda e1, p = mu e2 realize every
    admissible pair except the supercritical escape states of subcritical
    momentum, which need an extra radial momentum component.
    """
    c, m, mc2 = params.c, params.m, params.mc2

    if ell == 0:
        if h < 0:
            return PhaseState(q=np.array([k / (-h), 0.0]), p=np.zeros(2))
        etot = h + mc2 + k  # q = e1
        mu = math.sqrt(etot * etot / (c * c) - (m * c) ** 2)
        return PhaseState(q=np.array([1.0, 0.0]), p=np.array([mu, 0.0]))

    ell_abs = abs(ell)
    lc2 = ell_abs * ell_abs * c * c
    k2 = k * k

    def perpendicular(x):
        return PhaseState(q=np.array([ell_abs / x, 0.0]),
                          p=np.array([0.0, math.copysign(x, ell)]))

    def boosted():
        x_s = m * c
        etot = h + mc2 + k * x_s / ell_abs
        p2 = etot * etot / (c * c) - (m * c) ** 2
        p1sq = p2 - x_s * x_s
        if p1sq < 0:
            return None
        return PhaseState(q=np.array([ell_abs / x_s, 0.0]),
                          p=np.array([math.sqrt(p1sq), math.copysign(x_s, ell)]))

    if lc2 > k2 * (1.0 + tol):
        info = sigma_and_min_energy(ell, k, params)
        if h < info.h_min - tol * max(1.0, mc2):
            return None
        x_min = k * m / (ell_abs * info.sigma)
        if h <= _psi(x_min, ell_abs, k, params):
            return perpendicular(x_min)
        x_hi = 2.0 * x_min + m * c
        while _psi(x_hi, ell_abs, k, params) < h:
            x_hi *= 2.0
        x = brentq(lambda x: _psi(x, ell_abs, k, params) - h, x_min, x_hi, rtol=8.9e-16)
        return perpendicular(x)

    # critical or subcritical momentum: psi is strictly decreasing from 0
    if abs(lc2 - k2) <= tol * k2 and h <= -mc2 * (1.0 - tol):
        return None  # vertical boundary below and including the removed point
    if h < 0:
        x_hi = m * c
        while _psi(x_hi, ell_abs, k, params) > h:
            x_hi *= 2.0
        x = brentq(lambda x: _psi(x, ell_abs, k, params) - h, 1e-300, x_hi, rtol=8.9e-16)
        return perpendicular(x)
    return boosted()


def runge_lenz_vector(state, k, params):
    """R = -m k gamma(p) q/|q| + p x (q x p), reduced to the plane."""
    q, p = state.q, state.p
    r = state.r
    if r == 0:
        raise SingularityError("Runge-Lenz vector undefined at the origin")
    g = lorentz_gamma(p, params)
    return (-params.m * k * g / r) * q + q * float(np.dot(p, p)) - p * float(np.dot(q, p))


def _rl_arrays(q, p, k, params):
    r = np.hypot(q[:, 0], q[:, 1])
    g = lorentz_gamma(p, params)
    qp = np.sum(q * p, axis=1)
    pp = np.sum(p * p, axis=1)
    R = (-params.m * k * g / r)[:, None] * q + pp[:, None] * q - qp[:, None] * p
    alpha = q / r[:, None]
    beta = np.stack([-alpha[:, 1], alpha[:, 0]], axis=1)
    Ra = np.sum(R * alpha, axis=1)
    Rb = np.sum(R * beta, axis=1)
    return R, Ra, Rb, g


def conic_residual(state, k, params):
    """|q| + <R,q>/(m k gamma) - |q x p|^2/(m k gamma); identically zero."""
    R = runge_lenz_vector(state, k, params)
    g = lorentz_gamma(state.p, params)
    mkg = params.m * k * g
    ell = angular_momentum(state)
    return float(state.r + np.dot(R, state.q) / mkg - ell * ell / mkg)


@dataclass(frozen=True)
class RLReport:
    sigma_sq: float
    theta: np.ndarray          # unwrapped angle at the trajectory samples
    R_alpha: np.ndarray
    R_beta: np.ndarray
    invariant_drift: float     # max |I - I0| with I = Ra^2 + sigma^2 Rb^2
    invariant_scale: float
    ode_residual: float        # FD residual of the frame ODE at step d_theta
    ode_residual_half: float   # same at d_theta/2 (expect ~ 1/4 ratio)
    gamma_link_residual: float  # Ra vs gamma affine relation
    dRdt_residual: float       # dR/dt + m k (d gamma/dt) q/|q|, FD in time


def _resample_uniform_theta(traj, n):
    th0, th1 = traj.theta[0], traj.theta[-1]
    margin = 1e-6 * (th1 - th0)
    thetas = np.linspace(th0 + margin, th1 - margin, n)
    ts = np.empty(n)
    for j, tht in enumerate(thetas):
        i = int(np.clip(np.searchsorted(traj.theta, tht) - 1, 0, len(traj.theta) - 2))
        ts[j] = brentq(lambda t: traj.theta_at(t) - tht, traj.t[i], traj.t[i + 1],
                       xtol=1e-13)
    qs, ps = traj.qp_at(ts)
    return thetas, qs, ps


def rl_components_and_invariant(traj, k, params, n_theta=256, n_time=4000):
    """Runge-Lenz components in the rotating frame along a trajectory.

    Reports the drift of the quadratic invariant Ra^2 + sigma^2 Rb^2, the
    finite-difference residuals of the frame ODE (at two resolutions to expose
    the quadratic convergence), the affine link between Ra and gamma, and the
    time-domain residual of dR/dt against -m k gamma' q/|q|.
    """
    ell = traj.ell
    if ell <= 0:
        raise OrientationError("positive orientation required; reflect the state first")
    c = params.c
    s2 = 1.0 - k * k / (ell * ell * c * c)
    h0 = float(traj.H[0])

    R, Ra, Rb, g = _rl_arrays(traj.q, traj.p, k, params)
    inv = Ra**2 + s2 * Rb**2
    inv_scale = float(np.max(np.abs(Ra)) ** 2 + abs(s2) * np.max(np.abs(Rb)) ** 2)
    drift = float(np.max(np.abs(inv - inv[0])))
    link = Ra + ell * ell / k * (h0 + params.mc2) - params.m / k * (ell * ell * c * c - k * k) * g
    link_res = float(np.max(np.abs(link)))

    def fd_residual(n):
        thetas, qs, ps = _resample_uniform_theta(traj, n)
        _, ra, rb, _ = _rl_arrays(qs, ps, k, params)
        d = thetas[1] - thetas[0]
        dra = (ra[2:] - ra[:-2]) / (2 * d)
        drb = (rb[2:] - rb[:-2]) / (2 * d)
        r1 = np.max(np.abs(dra - s2 * rb[1:-1]))
        r2 = np.max(np.abs(drb + ra[1:-1]))
        return float(max(r1, r2))

    res_h = fd_residual(n_theta)
    res_h2 = fd_residual(2 * n_theta)

    # time-domain check of dR/dt = -m k gamma' q/|q|
    ts = np.linspace(traj.t[0], traj.t[-1], n_time)
    qs, ps = traj.qp_at(ts)
    Rt, _, _, gt = _rl_arrays(qs, ps, k, params)
    rt = np.hypot(qs[:, 0], qs[:, 1])
    dt = ts[1] - ts[0]
    dR = (Rt[2:] - Rt[:-2]) / (2 * dt)
    dg = (gt[2:] - gt[:-2]) / (2 * dt)
    rhs = -params.m * k * dg[:, None] * (qs[1:-1] / rt[1:-1, None])
    vres = float(np.max(np.abs(dR - rhs)))

    return RLReport(sigma_sq=s2, theta=traj.theta.copy(), R_alpha=Ra, R_beta=Rb,
                    invariant_drift=drift, invariant_scale=inv_scale,
                    ode_residual=res_h, ode_residual_half=res_h2,
                    gamma_link_residual=link_res, dRdt_residual=vres)


def orbit_closed_form(theta, A_amp, theta0, ell, h, k, params):
    """Radius of the closed-form orbit at angle(s) theta.

    1/r = [c^2 A cos(sigma (theta - theta0)) + k (h + m c^2)] / (ell^2 c^2 - k^2)
    with cos -> cosh for subcritical momentum. Raises when the requested
    branch has nonpositive radius.
    """
    c = params.c
    denom = ell * ell * c * c - k * k
    if denom == 0:
        raise InvalidParameterError("closed form undefined at critical momentum")
    theta = np.asarray(theta, dtype=float)
    s2 = 1.0 - k * k / (ell * ell * c * c)
    if s2 > 0:
        osc = np.cos(math.sqrt(s2) * (theta - theta0))
    else:
        osc = np.cosh(math.sqrt(-s2) * (theta - theta0))
    u = (c * c * A_amp * osc + k * (h + params.mc2)) / denom
    if np.any(u <= 0):
        raise OutOfBranchError("closed-form radius is nonpositive at the requested angle")
    out = 1.0 / u
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ClosedFormFit:
    A_amp: float
    theta0: float
    a0: float            # fitted constant term of 1/r
    a0_predicted: float  # k (h + m c^2) / (ell^2 c^2 - k^2)
    rms: float           # rms misfit of 1/r over the samples


def fit_closed_form(traj, k, params):
    """Least-squares recovery of (A_amp, theta0) from a trajectory."""
    ell = traj.ell
    c = params.c
    denom = ell * ell * c * c - k * k
    if denom == 0:
        raise InvalidParameterError("closed form undefined at critical momentum")
    s2 = 1.0 - k * k / (ell * ell * c * c)
    th = traj.theta
    u = 1.0 / traj.r
    s_abs = math.sqrt(abs(s2))
    if s2 > 0:
        basis = np.vstack([np.ones_like(th), np.cos(s_abs * th), np.sin(s_abs * th)]).T
    else:
        basis = np.vstack([np.ones_like(th), np.cosh(s_abs * th), np.sinh(s_abs * th)]).T
    coef, *_ = np.linalg.lstsq(basis, u, rcond=None)
    a0, bc, bs = coef
    rms = float(np.sqrt(np.mean((basis @ coef - u) ** 2)))
    if s2 > 0:
        amp = math.hypot(bc, bs) * denom / (c * c)
        th0 = math.atan2(bs, bc) / s_abs
    else:
        if abs(bc) > abs(bs):
            amp = math.copysign(math.sqrt(bc * bc - bs * bs), bc) * denom / (c * c)
            th0 = -math.atanh(bs / bc) / s_abs
        else:
            amp, th0 = math.nan, math.nan
    h0 = float(traj.H[0])
    return ClosedFormFit(A_amp=float(amp), theta0=float(th0), a0=float(a0),
                         a0_predicted=k * (h0 + params.mc2) / denom, rms=rms)


@dataclass(frozen=True)
class PrecessionReport:
    apsidal_angle: float        # mean perihelion-to-perihelion angle
    predicted: float            # 2 pi / sigma
    precession_per_period: float
    n_perihelia: int
    gaps: np.ndarray


def apsidal_precession(traj, k, params):
    """Measured apsidal angle between consecutive perihelia vs 2 pi / sigma."""
    peri = [e for e in apsis_times(traj) if e.kind == "perihelion"]
    if len(peri) < 2:
        raise InsufficientDataError("need at least 2 perihelion passages")
    thetas = np.array([traj.theta_at(e.t) for e in peri])
    gaps = np.abs(np.diff(thetas))
    info = sigma_and_min_energy(traj.ell, k, params)
    predicted = 2.0 * math.pi / info.sigma if info.sigma_sq > 0 else math.nan
    mean_gap = float(np.mean(gaps))
    return PrecessionReport(apsidal_angle=mean_gap, predicted=predicted,
                            precession_per_period=mean_gap - 2.0 * math.pi,
                            n_perihelia=len(peri), gaps=gaps)


def diagram_grid(ell_values, h_values, k, params, tol=1e-9):
    """Class codes over a rectangular (ell, h) grid, row-major in ell."""
    ell_values = np.asarray(ell_values, dtype=float)
    h_values = np.asarray(h_values, dtype=float)
    codes = np.empty((len(ell_values), len(h_values)), dtype=int)
    for i, ell in enumerate(ell_values):
        for j, h in enumerate(h_values):
            codes[i, j] = classify(EMPoint(ell=ell, h=h), k, params, tol=tol).code
    return codes


def diagram_csv(ell_values, h_values, codes):
    lines = ["ell,h,class_code"]
    for i, ell in enumerate(ell_values):
        for j, h in enumerate(h_values):
            lines.append("%.17g,%.17g,%d" % (ell, h, codes[i, j]))
    return "\n".join(lines) + "\n"
