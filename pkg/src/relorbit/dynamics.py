"""Equations of motion in Cartesian phase space and an adaptive integrator.

The integrator drives scipy's embedded Runge-Kutta steppers (Dormand-Prince
5(4) by default, 8th-order "dop853" optionally) through a manual step loop so
that collision events, step budgets and continuous angle unwrapping stay under
explicit control. Dense output is kept for every accepted step.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import DOP853, RK45, OdeSolution
from scipy.optimize import brentq

from .core import PhaseState, angular_momentum_qp, hamiltonian_qp, lorentz_gamma
from .errors import InvalidParameterError, RelorbitError, SingularityError, TruncationError

_METHODS = {"rk45": RK45, "dop853": DOP853}


@dataclass(frozen=True)
class IntegratorConfig:
    rtol: float = 1e-12
    atol: float = 1e-14
    max_step: float = math.inf
    max_steps: int = 2_000_000
    event_tol: float = 1e-12
    collision_radius: float = 1e-8
    method: str = "rk45"

    def __post_init__(self):
        if self.rtol <= 0 or self.atol <= 0 or self.event_tol <= 0:
            raise InvalidParameterError("tolerances must be positive")
        if self.method not in _METHODS:
            raise InvalidParameterError("unknown method %r" % (self.method,))


def cartesian_rhs(state, pot, params):
    """Hamiltonian vector field: dq/dt = p/(m gamma), dp/dt = -V'(|q|) q/|q|."""
    q, p = state.q, state.p
    r = state.r
    g = lorentz_gamma(p, params)
    dq = p / (params.m * g)
    dp = -pot.dV(r) * q / r
    return dq, dp


def _rhs_func(pot, params):
    m = params.m
    cm2 = (params.c * params.m) ** 2

    def f(t, y):
        q1, q2, p1, p2 = y
        r = math.hypot(q1, q2)
        if r == 0.0:
            raise SingularityError("trajectory reached the origin")
        g = math.sqrt(cm2 + p1 * p1 + p2 * p2) / math.sqrt(cm2)
        inv = 1.0 / (m * g)
        a = -pot.dV(r) / r
        return (p1 * inv, p2 * inv, a * q1, a * q2)

    return f


def _angle_increment(sol, t0, q0, t1, q1, depth=0):
    """Continuous polar-angle increment along the dense solution.

    Splits the interval until each piece swings less than pi/2, so the
    atan2-based increment is unambiguous.
    """
    cross = q0[0] * q1[1] - q0[1] * q1[0]
    dot = q0[0] * q1[0] + q0[1] * q1[1]
    d = math.atan2(cross, dot)
    if abs(d) < 0.5 * math.pi or depth >= 48:
        return d
    tm = 0.5 * (t0 + t1)
    qm = np.asarray(sol(tm))[:2]
    return (_angle_increment(sol, t0, q0, tm, qm, depth + 1)
            + _angle_increment(sol, tm, qm, t1, q1, depth + 1))


class Trajectory:
    """Dense, interpolable solution record.

    Samples are the accepted solver steps (always stored with strictly
    increasing times). The unwrapped polar angle is free of 2 pi jumps.
    """

    def __init__(self, ts, ys, sol, events, pot, params):
        order = np.argsort(ts)
        self.t = np.asarray(ts, dtype=float)[order]
        ys = np.asarray(ys, dtype=float)[order]
        self.q = ys[:, 0:2]
        self.p = ys[:, 2:4]
        self.r = np.hypot(self.q[:, 0], self.q[:, 1])
        self.events = list(events)
        self.pot = pot
        self.params = params
        self._sol = sol
        self.H = np.asarray(hamiltonian_qp(self.q, self.p, pot, params), dtype=float)
        self.L = np.asarray(angular_momentum_qp(self.q, self.p), dtype=float)
        theta = np.empty(len(self.t))
        theta[0] = math.atan2(self.q[0, 1], self.q[0, 0])
        for i in range(len(self.t) - 1):
            theta[i + 1] = theta[i] + _angle_increment(
                sol, self.t[i], self.q[i], self.t[i + 1], self.q[i + 1])
        self.theta = theta

    def __len__(self):
        return len(self.t)

    @property
    def ell(self):
        return float(self.L[0])

    def qp_at(self, t):
        """Dense-output evaluation of (q, p); vectorized over t."""
        y = np.asarray(self._sol(t))
        if y.ndim == 1:
            return y[0:2], y[2:4]
        return y[0:2].T, y[2:4].T

    def theta_at(self, t):
        """Unwrapped angle at arbitrary times inside the integration span."""
        tarr = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty_like(tarr)
        idx = np.clip(np.searchsorted(self.t, tarr, side="right") - 1, 0, len(self.t) - 2)
        for j, (tv, i) in enumerate(zip(tarr, idx)):
            q = np.asarray(self._sol(tv))[:2]
            out[j] = self.theta[i] + _angle_increment(self._sol, self.t[i], self.q[i], tv, q)
        return float(out[0]) if np.ndim(t) == 0 else out

    def final_state(self):
        return PhaseState(q=self.q[-1].copy(), p=self.p[-1].copy())

    def csv_text(self):
        """CSV export: t,q1,q2,p1,p2,r,theta,H,L with 17 significant digits."""
        lines = ["t,q1,q2,p1,p2,r,theta,H,L"]
        for i in range(len(self.t)):
            vals = (self.t[i], self.q[i, 0], self.q[i, 1], self.p[i, 0], self.p[i, 1],
                    self.r[i], self.theta[i], self.H[i], self.L[i])
            lines.append(",".join("%.17g" % v for v in vals))
        return "\n".join(lines) + "\n"

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(self.csv_text())


def integrate(state0, t_span, pot, params, cfg=None):
    """Integrate the equations of motion over ``t_span`` (forward or backward).

    Stops early with a flagged ("collision", t) event when |q| crosses the
    configured collision radius; raises TruncationError (carrying the partial
    trajectory) when the step budget is exhausted.
    """
    cfg = cfg or IntegratorConfig()
    t0, t1 = float(t_span[0]), float(t_span[1])
    if t0 == t1:
        raise InvalidParameterError("degenerate time span")
    f = _rhs_func(pot, params)
    y0 = np.concatenate([state0.q, state0.p])
    solver = _METHODS[cfg.method](f, t0, y0, t_bound=t1, rtol=cfg.rtol, atol=cfg.atol,
                                  max_step=cfg.max_step)
    ts = [t0]
    ys = [y0]
    interps = []
    events = []
    rcol = cfg.collision_radius

    def radius(t, dense):
        q = dense(t)[:2]
        return math.hypot(q[0], q[1])

    while solver.status == "running":
        if len(interps) >= cfg.max_steps:
            sol = OdeSolution(ts, interps)
            partial = Trajectory(ts, ys, sol, events, pot, params)
            raise TruncationError("step budget exhausted at t=%g" % solver.t, partial)
        message = solver.step()
        if solver.status == "failed":
            r_here = math.hypot(solver.y[0], solver.y[1])
            if r_here < 1e3 * rcol:
                events.append(("collision", float(solver.t)))
                break
            raise RelorbitError("integrator failure: %s" % message)
        dense = solver.dense_output()
        interps.append(dense)
        ts.append(solver.t)
        ys.append(solver.y.copy())
        # collision detection: endpoint sign change, plus an interior scan
        # when the step comes close to the singular region
        ra, rb = radius(ts[-2], dense), radius(ts[-1], dense)
        hit = None
        if (ra - rcol) > 0 >= (rb - rcol):
            hit = (ts[-2], ts[-1])
        elif min(ra, rb) < 100.0 * rcol:
            probe = np.linspace(ts[-2], ts[-1], 7)[1:-1]
            rv = [radius(tp, dense) for tp in probe]
            grid = [ts[-2]] + list(probe) + [ts[-1]]
            gv = [ra] + rv + [rb]
            for a, b, ga, gb in zip(grid[:-1], grid[1:], gv[:-1], gv[1:]):
                if (ga - rcol) > 0 >= (gb - rcol):
                    hit = (a, b)
                    break
        if hit is not None:
            tc = brentq(lambda t: radius(t, dense) - rcol, hit[0], hit[1],
                        xtol=cfg.event_tol)
            ts[-1] = tc
            ys[-1] = np.asarray(dense(tc))
            events.append(("collision", float(tc)))
            break

    sol = OdeSolution(ts, interps)
    return Trajectory(ts, ys, sol, events, pot, params)


@dataclass(frozen=True)
class ApsisEvent:
    t: float
    r: float
    kind: str  # "perihelion" | "aphelion"


def _radial_momentum(traj, t):
    q, p = traj.qp_at(t)
    return float(np.dot(q, p))


def apsis_times(traj):
    """Interior times where dr/dt changes sign, polished on the dense output.

    Sign changes whose amplitude never rises above the noise floor (circular
    orbits) are discarded. Returns a possibly empty list of ApsisEvent.
    """
    if len(traj) < 2:
        raise InvalidParameterError("trajectory needs at least 2 samples")
    w1 = np.sum(traj.q * traj.p, axis=1)
    scale = float(np.max(np.hypot(traj.q[:, 0], traj.q[:, 1])
                         * np.hypot(traj.p[:, 0], traj.p[:, 1])))
    if scale == 0.0:
        return []
    floor = 1e-9 * scale
    sign = np.sign(w1)
    idx = np.nonzero(sign[:-1] * sign[1:] < 0)[0]
    if len(idx) == 0:
        return []
    # amplitude guard: between consecutive crossings |w1| must clear the floor
    bounds = [0] + [int(i) + 1 for i in idx] + [len(w1)]
    seg_ok = [np.max(np.abs(w1[a:b])) > floor if b > a else False
              for a, b in zip(bounds[:-1], bounds[1:])]
    events = []
    pot, params = traj.pot, traj.params
    m = params.m
    for n, i in enumerate(idx):
        if not (seg_ok[n] and seg_ok[n + 1]):
            continue
        ta, tb = traj.t[i], traj.t[i + 1]
        tc = brentq(lambda t: _radial_momentum(traj, t), ta, tb, xtol=1e-12)
        # one Newton polish: d<q,p>/dt = |p|^2/(m gamma) - r V'(r)
        q, p = traj.qp_at(tc)
        g = lorentz_gamma(p, params)
        r = float(np.hypot(q[0], q[1]))
        fp = float(np.dot(p, p)) / (m * g) - r * float(pot.dV(r))
        if fp != 0.0:
            t_new = tc - _radial_momentum(traj, tc) / fp
            if ta <= t_new <= tb:
                tc = t_new
        q, _ = traj.qp_at(tc)
        kind = "aphelion" if w1[i] > 0 else "perihelion"
        events.append(ApsisEvent(t=float(tc), r=float(np.hypot(q[0], q[1])), kind=kind))
    return events


def conservation_report(traj, pot=None, params=None):
    """Max drift of the two first integrals over the samples."""
    h0, l0 = traj.H[0], traj.L[0]
    dh = float(np.max(np.abs(traj.H - h0)))
    dl = float(np.max(np.abs(traj.L - l0)))
    return {
        "H": {"abs": dh, "rel": dh / max(1.0, abs(h0))},
        "L": {"abs": dl, "rel": dl / max(1.0, abs(l0))},
    }
