"""Command orchestration behind the service endpoints.

Each runner takes a validated RunConfig, drives the library, and builds the
typed response. Multi-family sweeps fan out over worker processes when asked
to; results are gathered in submission order so output stays deterministic.
"""

import math
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .. import bertrand, clairaut, collision, coulomb
from ..circular import circular_orbit, momentum_profile_is_constant
from ..core import (PhaseState, PhysicalParams, angular_momentum, hamiltonian,
                    lorentz_gamma, make_potential)
from ..dynamics import IntegratorConfig, apsis_times, conservation_report, integrate
from ..errors import InvalidParameterError
from . import schemas as S


def _params(cfg):
    return PhysicalParams(m=cfg.m, c=cfg.c)


def _nn(x):
    """None for NaN/inf floats (JSON responses must stay finite)."""
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def _nan_to_none(obj):
    if isinstance(obj, dict):
        return {k: _nan_to_none(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_nan_to_none(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _state_from_init(init, cfg):
    params = _params(cfg)
    if init.q is not None and init.p is not None:
        return PhaseState(q=np.asarray(init.q, dtype=float),
                          p=np.asarray(init.p, dtype=float))
    if init.ell is not None and init.h is not None:
        if cfg.potential != "coulomb":
            raise InvalidParameterError("(ell, h) initial data is defined for the "
                                        "coulomb potential only")
        w = coulomb.existence_witness(init.ell, init.h, cfg.k, params)
        if w is None:
            raise InvalidParameterError("empty level set: no motion with ell=%g, h=%g"
                                        % (init.ell, init.h))
        return w
    raise InvalidParameterError("init needs either q and p, or ell and h")


def run_simulate(cfg):
    p = S.SimulateParams(**cfg.params)
    params = _params(cfg)
    pot = make_potential(cfg.potential, cfg.k, params)
    state0 = _state_from_init(p.init, cfg)
    icfg = IntegratorConfig(rtol=p.rtol, atol=p.atol, method=p.method,
                            max_steps=p.max_steps, collision_radius=p.collision_radius)
    traj = integrate(state0, (p.t0, p.t1), pot, params, icfg)
    rep = conservation_report(traj)
    aps = apsis_times(traj)
    n_peri = sum(1 for a in aps if a.kind == "perihelion")
    n_aph = len(aps) - n_peri
    summary = ("simulate: %d samples to t=%.6g, H drift %.3e, L drift %.3e, "
               "%d perihelia, %d aphelia%s"
               % (len(traj), traj.t[-1], rep["H"]["rel"], rep["L"]["rel"], n_peri,
                  n_aph, ", events: %s" % traj.events if traj.events else ""))
    return S.SimulateResponse(
        summary=summary, n_samples=len(traj), t_final=float(traj.t[-1]),
        events=[[k, t] for k, t in traj.events],
        H_drift_rel=rep["H"]["rel"], L_drift_rel=rep["L"]["rel"],
        n_perihelia=n_peri, n_aphelia=n_aph,
        final_q=list(traj.q[-1]), final_p=list(traj.p[-1]),
        csv=traj.csv_text(), config=cfg)


def run_classify(cfg):
    p = S.ClassifyParams(**cfg.params)
    params = _params(cfg)
    cls = coulomb.classify(coulomb.EMPoint(ell=p.ell, h=p.h), cfg.k, params, tol=p.tol)
    witness = None
    if p.witness:
        w = coulomb.existence_witness(p.ell, p.h, cfg.k, params, tol=p.tol)
        if w is not None:
            pot = make_potential("coulomb", cfg.k, params)
            witness = S.WitnessOut(q=list(w.q), p=list(w.p),
                                   H=hamiltonian(w, pot, params), L=angular_momentum(w))
    return S.ClassifyResponse(
        summary="classify: (ell=%g, h=%g) -> %s" % (p.ell, p.h, cls.label.value),
        label=cls.label.value, code=cls.code, sigma_sq=_nn(cls.sigma_sq),
        h_min=_nn(cls.h_min), note=cls.note, witness=witness, config=cfg)


def _grid_chunk(args):
    ells, hs, k, m, c, tol = args
    return coulomb.diagram_grid(ells, hs, k, PhysicalParams(m=m, c=c), tol=tol)


def run_classify_grid(cfg):
    p = S.ClassifyGridParams(**cfg.params)
    params = _params(cfg)
    ells = np.linspace(p.ell_min, p.ell_max, p.n_ell)
    hs = np.linspace(p.h_min, p.h_max, p.n_h)
    if p.jobs > 1:
        chunks = np.array_split(ells, p.jobs)
        with ProcessPoolExecutor(max_workers=p.jobs) as ex:
            parts = list(ex.map(_grid_chunk,
                                [(ch, hs, cfg.k, cfg.m, cfg.c, p.tol) for ch in chunks]))
        codes = np.vstack(parts)
    else:
        codes = coulomb.diagram_grid(ells, hs, cfg.k, params, tol=p.tol)
    counts = {}
    for label, code in coulomb.CLASS_CODES.items():
        n = int(np.sum(codes == code))
        if n:
            counts[label.value] = n
    csv = coulomb.diagram_csv(ells, hs, codes)
    return S.ClassifyGridResponse(
        summary="classify-grid: %dx%d points, %s" % (p.n_ell, p.n_h, counts),
        counts=counts, csv=csv, config=cfg)


def run_circular(cfg):
    p = S.CircularParams(**cfg.params)
    params = _params(cfg)
    pot = make_potential(cfg.potential, cfg.k, params)
    orb = circular_orbit(p.r0, pot, params)
    scan = None
    if p.scan:
        prof = momentum_profile_is_constant(
            pot, params, np.geomspace(p.scan_r_min, p.scan_r_max, p.scan_n))
        scan = S.MomentumScanOut(constant=prof.constant,
                                 max_rel_deviation=prof.max_rel_deviation)
    summary = "circular: r0=%g Omega=%.10g L=%.10g Gamma=%.10g" % (
        orb.r0, orb.Omega, orb.L, orb.Gamma)
    if scan:
        summary += " | L(r0) %s (max rel dev %.3e)" % (
            "constant" if scan.constant else "not constant", scan.max_rel_deviation)
    return S.CircularResponse(
        summary=summary,
        orbit=S.CircularOrbitOut(r0=orb.r0, Omega=orb.Omega, L=orb.L, Gamma=orb.Gamma),
        scan=scan, config=cfg)


def run_period(cfg):
    p = S.PeriodParams(**cfg.params)
    params = _params(cfg)
    pot = make_potential(cfg.potential, cfg.k, params)
    rho0 = p.rho0
    if rho0 is None:
        eq = clairaut.equilibrium_solve(p.ell, pot, params)
        if eq.continuum:
            raise InvalidParameterError("continuum of equilibria: pass rho0 explicitly")
        if not eq.roots:
            raise InvalidParameterError("no equilibrium at ell=%g" % p.ell)
        rho0 = eq.roots[0]
    fit = clairaut.period_function(rho0, p.ell, pot, params, xi_list=p.xi, rtol=p.rtol,
                                   jobs=p.jobs)
    return S.PeriodResponse(
        summary=("period: rho0=%.10g ell=%g Theta0=%.10g c2=%.6g "
                 "(two-method agreement %.2e)"
                 % (fit.rho0, fit.ell, fit.Theta0, fit.c2, fit.method_agreement)),
        rho0=fit.rho0, ell=fit.ell, Theta0=fit.Theta0, c2=fit.c2, c2_gap=fit.c2_gap,
        c1=fit.c1, residual=fit.fit_residual, method_agreement=fit.method_agreement,
        xi=list(fit.xi), P=list(fit.P), P_return_map=list(fit.P_return_map),
        csv=fit.csv_text(), sidecar=fit.sidecar(), config=cfg)


def _bertrand_one(args):
    (a, rho_star, ell_star, rho_range, rho0_list, xi0_fraction, n_grid, rtol, m, c) = args
    params = PhysicalParams(m=m, c=c)
    fam = bertrand.build_family(a, rho_star, ell_star, rho_range, params,
                                rtol=rtol, n_grid=n_grid)
    report = bertrand.obstruction_certificate(a, family=fam)
    if rho0_list is None:
        lo, hi = fam.rho0[0], fam.rho0[-1]
        rho0_list = [lo ** (1 - f) * hi ** f for f in (0.3, 0.5, 0.7)]
    points = []
    for rho0 in rho0_list:
        ell = float(fam.ell_of(rho0))
        x = float(fam.x_of(rho0))
        c2_f = bertrand.period_constant_formula(rho0, ell, a, params)
        xi0 = xi0_fraction * rho0
        pf = clairaut.period_function(rho0, ell, fam.potential, params,
                                      xi_list=[xi0, xi0 / 2, xi0 / 4, xi0 / 8],
                                      rtol=rtol)
        rel = abs(pf.c2 - c2_f) / abs(c2_f) if c2_f != 0 else math.inf
        points.append({"rho0": float(rho0), "ell": ell, "x": x,
                       "Q_x": float(bertrand.q_polynomial(x, a)),
                       "c2_formula": c2_f, "c2_measured": pf.c2, "rel_err": rel})
    xs = fam.x_of(fam.rho0)
    dx = np.diff(xs)
    x_mono = bool(np.all(dx > 0) or np.all(dx < 0))
    return {
        "a": a, "K": _nn(report.K), "Q_at_K": _nn(report.Q_at_K),
        "Q_at_K_identity": _nn(report.Q_at_K_identity),
        "cubic_positive": report.cubic_positive,
        "no_isochronous_family": report.no_isochronous_family,
        "gamma_tilde_min": _nn(report.gamma_tilde_min),
        "truncated": fam.truncated, "x_monotone": x_mono, "points": points,
        "family_csv": fam.csv_text(), "metadata": fam.metadata(),
    }


def run_bertrand(cfg):
    p = S.BertrandParams(**cfg.params)
    jobs = max(1, p.jobs)
    arglist = [(a, p.rho_star, p.ell_star, tuple(p.rho_range), p.rho0,
                p.xi0_fraction, p.n_grid, p.rtol, cfg.m, cfg.c) for a in p.a]
    if jobs > 1 and len(arglist) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_bertrand_one, arglist))
    else:
        results = [_bertrand_one(args) for args in arglist]
    families = [S.BertrandFamilyOut(**r) for r in results]
    worst = max((pt.rel_err for f in families for pt in f.points), default=math.nan)
    all_ok = all(f.no_isochronous_family for f in families)
    return S.BertrandResponse(
        summary=("bertrand: %d families, obstruction %s, worst c2 mismatch %.3g"
                 % (len(families), "certified" if all_ok else "NOT certified", worst)),
        families=families, config=cfg)


def run_rungelenz(cfg):
    p = S.RungeLenzParams(**cfg.params)
    params = _params(cfg)
    if cfg.potential != "coulomb":
        raise InvalidParameterError("Runge-Lenz analysis is defined for the coulomb "
                                    "potential")
    pot = make_potential("coulomb", cfg.k, params)
    state0 = _state_from_init(p.init, cfg)
    ell = angular_momentum(state0)
    if ell < 0:
        state0 = state0.reflected()
        ell = -ell
    info = coulomb.sigma_and_min_energy(ell, cfg.k, params)
    if not (info.sigma_sq > 0):
        raise InvalidParameterError("bounded precessing orbit needs sigma^2 > 0")
    h0 = hamiltonian(state0, pot, params)
    if h0 < 0:
        # bounded orbit: Kepler-like radial period from the energy scale
        a_est = cfg.k / (2.0 * abs(h0))
        t_period = 2.0 * math.pi * math.sqrt(params.m * a_est**3 / cfg.k) / info.sigma
    else:
        g0 = lorentz_gamma(state0.p, params)
        t_period = (2 * math.pi / info.sigma) * params.m * g0 * state0.r**2 / ell
    t1 = 1.5 * p.n_periods * t_period
    traj = integrate(state0, (0.0, t1), pot, params,
                     IntegratorConfig(rtol=p.rtol, atol=p.rtol * 1e-2))
    rep = coulomb.rl_components_and_invariant(traj, cfg.k, params, n_theta=p.n_theta)
    prec = None
    try:
        pr = coulomb.apsidal_precession(traj, cfg.k, params)
        prec = S.PrecessionOut(apsidal_angle=pr.apsidal_angle, predicted=pr.predicted,
                               precession_per_period=pr.precession_per_period,
                               n_perihelia=pr.n_perihelia)
    except Exception:
        prec = None
    lines = ["theta,R_alpha,R_beta"]
    for th, ra, rb in zip(rep.theta, rep.R_alpha, rep.R_beta):
        lines.append("%.17g,%.17g,%.17g" % (th, ra, rb))
    return S.RungeLenzResponse(
        summary=("rungelenz: sigma^2=%.10g invariant drift %.3e, ODE residual %.3e"
                 % (rep.sigma_sq, rep.invariant_drift, rep.ode_residual)),
        sigma_sq=rep.sigma_sq, invariant_drift=rep.invariant_drift,
        invariant_scale=rep.invariant_scale, ode_residual=rep.ode_residual,
        ode_residual_half=rep.ode_residual_half,
        gamma_link_residual=rep.gamma_link_residual, dRdt_residual=rep.dRdt_residual,
        precession=prec, csv="\n".join(lines) + "\n", config=cfg)


def run_collision(cfg):
    p = S.CollisionParams(**cfg.params)
    params = _params(cfg)
    state0 = _state_from_init(p.init, cfg)
    ccfg = collision.CollisionConfig(rtol=p.rtol, atol=p.rtol * 1e-2, r_stop=p.r_stop,
                                     n_window=p.n_window,
                                     window_fraction=p.window_fraction)
    _, fit = collision.integrate_to_collision(state0, cfg.k, params, ccfg)
    return S.CollisionResponse(
        summary=("collision: w10=%.8g slope=%.8g (pred %.8g), lambda=%.8g (pred %.8g), "
                 "|w|->%.8g" % (fit.w10, fit.slope, fit.slope_pred, fit.lam,
                                fit.lambda_pred, fit.w_limit_norm)),
        fit=_nan_to_none(fit.to_json()), config=cfg)


RUNNERS = {
    "simulate": run_simulate,
    "classify": run_classify,
    "classify-grid": run_classify_grid,
    "circular": run_circular,
    "period": run_period,
    "bertrand": run_bertrand,
    "rungelenz": run_rungelenz,
    "collision": run_collision,
}
