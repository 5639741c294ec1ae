"""Partial regularization of collision orbits via w = (<q,p>, q1 p2 - q2 p1).

In the variables (r, theta, w1, w2) the vector field stays bounded up to the
collision (only the angle rate is singular), so trajectories can be driven
arbitrarily close to r = 0 and the leading asymptotics

    r(t) ~ (c^2 w10 / k) t,    theta(t) ~ theta0 + (w2 / w10) ln t

extracted by regression on a geometric window.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .core import PhaseState, angular_momentum, hamiltonian_qp, make_potential
from .coulomb import EMPoint, MotionClass, classify
from .errors import (InconsistencyError, InvalidParameterError, SingularityError,
                     TruncationError, WrongRegimeError)


@dataclass(frozen=True)
class CollisionVars:
    r: float
    theta: float
    w1: float
    w2: float
    h: float  # nan when not supplied


def w_transform(state, k=None, params=None):
    """Map a phase point to (r, theta, w1, w2[, h])."""
    q, p = state.q, state.p
    r = state.r
    w1 = float(np.dot(q, p))
    w2 = angular_momentum(state)
    h = math.nan
    if k is not None and params is not None:
        h = float(hamiltonian_qp(q, p, make_potential("coulomb", k, params), params))
    return CollisionVars(r=r, theta=state.theta, w1=w1, w2=w2, h=h)


def w_inverse(q, w):
    """Reconstruct the momentum from (q, w1, w2): p = (w1 q + w2 J q)/|q|^2.

    J here is the counterclockwise quarter turn, so that q1 p2 - q2 p1 = w2.
    """
    q = np.asarray(q, dtype=float)
    r2 = float(np.dot(q, q))
    if r2 == 0.0:
        raise SingularityError("inverse map undefined at the origin")
    w1, w2 = float(w[0]), float(w[1])
    jq = np.array([-q[1], q[0]])
    return PhaseState(q=q, p=(w1 * q + w2 * jq) / r2)


def _S(r, w1, w2, params):
    m, c = params.m, params.c
    return np.sqrt(m * m * r * r + (w1 * w1 + w2 * w2) / (c * c))


@dataclass(frozen=True)
class RegularizedRates:
    dr: float
    dtheta: float
    dw1: float
    dw2: float
    dh: float
    singular_angle: bool


def regularized_rhs(vars_, k, params):
    """Bounded collision-ready vector field; the angle rate alone blows up at r=0."""
    r, w1, w2, h = vars_.r, vars_.w1, vars_.w2, vars_.h
    if r < 0:
        raise InvalidParameterError("radius must be nonnegative")
    c, m = params.c, params.m
    S = float(_S(r, w1, w2, params))
    dr = w1 / S
    dw1 = h + params.mc2 - m * m * c * c * r / S
    singular = False
    if r == 0.0:
        if w2 == 0.0:
            dtheta = 0.0
        else:
            dtheta = math.copysign(math.inf, w2)
            singular = True
    else:
        dtheta = w2 / (r * S)
    return RegularizedRates(dr=dr, dtheta=dtheta, dw1=dw1, dw2=0.0, dh=0.0,
                            singular_angle=singular)


def manifold_residual(r, w1, w2, h, k, params):
    """Normalized defect of the invariant-manifold identity (h+mc^2) r = c^2 S - k."""
    c = params.c
    S = _S(np.asarray(r, dtype=float), np.asarray(w1, dtype=float), w2, params)
    lhs = (h + params.mc2) * np.asarray(r, dtype=float)
    rhs = c * c * S - k
    return np.abs(lhs - rhs) / np.maximum(k, np.abs(c * c * S))


class RegularizedPath:
    """Dense (r, theta, w1) history of a regularized integration."""

    def __init__(self, t, r, theta, w1, w2, h):
        self.t = t
        self.r = r
        self.theta = theta
        self.w1 = w1
        self.w2 = w2
        self.h = h


def integrate_regularized(vars0, k, params, t_span, rtol=1e-12, atol=1e-14,
                          r_stop=None):
    """Integrate the full (r, theta, w1) system; optional terminal radius."""
    c, m = params.c, params.m
    w2, h = vars0.w2, vars0.h
    hp = h + params.mc2

    def f(t, y):
        r, th, w1 = y
        S = math.sqrt(m * m * r * r + (w1 * w1 + w2 * w2) / (c * c))
        return (w1 / S, w2 / (r * S), hp - m * m * c * c * r / S)

    events = []
    if r_stop is not None:
        def ev(t, y):
            return y[0] - r_stop
        ev.terminal = True
        ev.direction = -1.0
        events.append(ev)
    res = solve_ivp(f, t_span, [vars0.r, vars0.theta, vars0.w1], rtol=rtol, atol=atol,
                    dense_output=True, events=events or None, method="RK45")
    if not res.success and res.status != 1:
        raise InvalidParameterError("regularized integration failed: %s" % res.message)
    path = RegularizedPath(res.t, res.y[0], res.y[1], res.y[2], w2, h)
    path._sol = res.sol
    return path


@dataclass(frozen=True)
class CollisionConfig:
    rtol: float = 1e-12
    atol: float = 1e-14
    r_stop: float = 1e-10
    n_window: int = 21
    window_fraction: float = 0.1
    max_time: float = 1e6


@dataclass(frozen=True)
class CollisionFit:
    w10: float            # limiting <q,p> of the outgoing branch (> 0)
    theta0: float
    slope: float          # fitted d r / d tau
    slope_pred: float     # c^2 w10 / k
    lam: float            # fitted d theta / d ln tau
    lambda_pred: float    # w2 / w10 (outgoing branch values)
    lambda_pred_ell: float  # ell / w10; identical because w2 is the angular momentum
    w_limit_norm: float   # |w| at the collision, -> k/c
    r_fit_residual: float
    theta_fit_residual: float
    r_resid_exponent: float     # log-log slope of |r - s tau| vs tau (~2, o(t))
    theta_resid_ln_slope: float  # residual growth per ln tau (~0, o(|ln t|))
    manifold_residual_max: float
    t_collision: float
    branch: str
    window: np.ndarray    # tau offsets used for the fits
    ell: float
    h: float

    def to_json(self):
        return {
            "w10": self.w10,
            "theta0": self.theta0,
            "slope": self.slope,
            "slope_pred": self.slope_pred,
            "lambda": self.lam,
            "lambda_pred": self.lambda_pred,
            "lambda_pred_ell": self.lambda_pred_ell,
            "w_limit_norm": self.w_limit_norm,
            "residuals": {
                "r_fit": self.r_fit_residual,
                "theta_fit": self.theta_fit_residual,
                "r_exponent": self.r_resid_exponent,
                "theta_ln_slope": self.theta_resid_ln_slope,
                "manifold": self.manifold_residual_max,
            },
            "window": list(self.window),
            "t_collision": self.t_collision,
            "branch": self.branch,
            "ell": self.ell,
            "h": self.h,
        }


def integrate_to_collision(state0, k, params, cfg=None):
    """Drive a subcritical state into the collision and fit the asymptotics.

    Escaping initial data (h >= 0 moving outward) are time-reflected first;
    the fitted quantities are reported for the outgoing branch, whose slope
    is positive. Returns (RegularizedPath, CollisionFit).
    """
    cfg = cfg or CollisionConfig()
    v0 = w_transform(state0, k, params)
    ell, h = v0.w2, v0.h
    label = classify(EMPoint(ell=ell, h=h), k, params).label
    if label not in (MotionClass.SUBCRITICAL,):
        raise WrongRegimeError("collision analysis needs subcritical momentum, got %s"
                               % (label.value,))
    branch = "incoming"
    w1_0, w2 = v0.w1, v0.w2
    if v0.w1 > 0 and h >= 0:
        branch = "outgoing-reflected"
        w1_0, w2 = -v0.w1, -v0.w2

    c, m = params.c, params.m
    hp = h + params.mc2

    def f(t, y):
        r, w1 = y
        S = math.sqrt(m * m * r * r + (w1 * w1 + w2 * w2) / (c * c))
        return (w1 / S, hp - m * m * c * c * r / S)

    def ev_stop(t, y):
        return y[0] - cfg.r_stop
    ev_stop.terminal = True
    ev_stop.direction = -1.0

    def ev_aphelion(t, y):
        return y[1]
    ev_aphelion.direction = -1.0

    res = solve_ivp(f, (0.0, cfg.max_time), [v0.r, w1_0], rtol=cfg.rtol, atol=cfg.atol,
                    dense_output=True, events=[ev_stop, ev_aphelion], method="RK45")
    if len(res.t_events[0]) == 0:
        raise TruncationError("no collision reached before t=%g" % cfg.max_time)
    t_stop = float(res.t_events[0][0])
    r_s, w1_s = res.sol(t_stop)
    S_s = math.sqrt(m * m * r_s * r_s + (w1_s * w1_s + w2 * w2) / (c * c))
    t_c = t_stop + r_s / (-w1_s / S_s)

    t_anchor = float(res.t_events[1][-1]) if len(res.t_events[1]) else 0.0
    tau_w = cfg.window_fraction * (t_c - t_anchor)
    taus = tau_w * 0.5 ** np.arange(cfg.n_window)
    if t_c - taus[-1] > t_stop:
        raise TruncationError("fit window extends past the integrated range")
    return _finish_fit(res, v0, w2, h, k, params, cfg, t_c, taus, branch)


def _finish_fit(res, v0, w2, h, k, params, cfg, t_c, taus, branch):
    c, m = params.c, params.m
    vals = np.array([res.sol(t_c - tau) for tau in taus])
    r_n, w1_n = vals[:, 0], vals[:, 1]

    # w10 from the smallest window offset, corrected by the exact linear rate
    # dw1/dt -> h + mc^2 (the remaining error is O(tau_min^2))
    w10_in = float(w1_n[-1] + (h + params.mc2) * taus[-1])
    if abs(w10_in) < 1e-8 * k / params.c:
        # would force |ell| = k/c, impossible strictly inside the subcritical set
        raise InconsistencyError("limiting <q,p> vanished at the collision")

    # r(tau) = s tau + b tau^2 + e tau^3
    Br = np.vstack([taus, taus**2, taus**3]).T
    coef_r = np.linalg.lstsq(Br, r_n, rcond=None)[0]
    s_fit = float(coef_r[0])
    r_fit_residual = float(np.max(np.abs(Br @ coef_r - r_n)))

    # theta on the window: integrate d theta / du with u = ln tau
    if w2 == 0.0:
        theta_n = np.full_like(taus, v0.theta)
        lam_fit, theta0_fit, th_resid = 0.0, float(v0.theta), 0.0
        th_resid_slope = 0.0
    else:
        def f_th(t, y):
            r, w1 = res.sol(t)
            S = math.sqrt(m * m * r * r + (w1 * w1 + w2 * w2) / (c * c))
            return (w2 / (r * S),)

        head = solve_ivp(f_th, (0.0, t_c - taus[0]), [v0.theta], rtol=cfg.rtol,
                         atol=cfg.atol, method="RK45")
        theta_w = float(head.y[0, -1])

        def f_u(u, y):
            tau = math.exp(u)
            r, w1 = res.sol(t_c - tau)
            S = math.sqrt(m * m * r * r + (w1 * w1 + w2 * w2) / (c * c))
            return (-tau * w2 / (r * S),)

        u_grid = np.log(taus)
        tail = solve_ivp(f_u, (u_grid[0], u_grid[-1]), [theta_w], rtol=cfg.rtol,
                         atol=cfg.atol, dense_output=True, method="RK45")
        theta_n = tail.sol(u_grid)[0]
        # theta0 + lam ln(tau) plus the analytic O(tau) remainder shape
        Bt = np.vstack([np.ones_like(u_grid), u_grid, taus]).T
        coef_t = np.linalg.lstsq(Bt, theta_n, rcond=None)[0]
        theta0_fit, lam_fit = float(coef_t[0]), float(coef_t[1])
        resid_t = np.abs(theta_n - (theta0_fit + lam_fit * u_grid))
        th_resid = float(np.max(resid_t))
        # residual trend against ln tau: slope of a straight-line fit
        mask = resid_t > 0
        if np.count_nonzero(mask) >= 2:
            th_resid_slope = float(np.polyfit(u_grid[mask], resid_t[mask], 1)[0])
        else:
            th_resid_slope = 0.0

    # remainder exponent of r - s tau against the sharp slope c^2 w10/k
    s_sharp = c * c * (-w10_in) / k
    rres = np.abs(r_n - s_sharp * taus)
    mask = rres > 0
    if np.count_nonzero(mask) >= 2:
        r_exp = float(np.polyfit(np.log(taus[mask]), np.log(rres[mask]), 1)[0])
    else:
        r_exp = math.inf

    man = manifold_residual(res.y[0], res.y[1], w2, h, k, params)
    w_limit = math.hypot(w10_in, w2)

    # outgoing normalization: positive limiting w1, positive slope
    w10_out = -w10_in
    w2_out = -w2
    fit = CollisionFit(
        w10=float(w10_out), theta0=theta0_fit, slope=s_fit,
        slope_pred=float(c * c * w10_out / k), lam=lam_fit,
        lambda_pred=float(w2_out / w10_out) if w10_out != 0 else math.nan,
        lambda_pred_ell=float(w2_out / w10_out) if w10_out != 0 else math.nan,
        w_limit_norm=float(w_limit), r_fit_residual=r_fit_residual,
        theta_fit_residual=th_resid, r_resid_exponent=r_exp,
        theta_resid_ln_slope=th_resid_slope,
        manifold_residual_max=float(np.max(man)), t_collision=float(t_c),
        branch=branch, window=taus, ell=float(v0.w2), h=float(h))

    path = RegularizedPath(res.t, res.y[0], None, res.y[1], w2, h)
    path._sol = res.sol
    path.n_aphelion = len(res.t_events[1])
    path.fit_taus = taus
    path.fit_r = r_n
    path.fit_w1 = w1_n
    return path, fit
