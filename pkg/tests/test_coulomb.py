import math

import numpy as np
import pytest

from relorbit.circular import circular_state
from relorbit.core import PhaseState, PhysicalParams, angular_momentum, hamiltonian, \
    make_potential
from relorbit.coulomb import (EMPoint, MotionClass, apsidal_precession, classify,
                              conic_residual, diagram_csv, diagram_grid,
                              existence_witness, fit_closed_form, orbit_closed_form,
                              rl_components_and_invariant, runge_lenz_vector,
                              sigma_and_min_energy)
from relorbit.dynamics import IntegratorConfig, integrate
from relorbit.errors import (InsufficientDataError, InvalidParameterError,
                             OrientationError, OutOfBranchError)

SQRT3 = math.sqrt(3.0)
H_MIN_L2 = -(1.0 - SQRT3 / 2.0)     # -0.13397459621556135


def test_sigma_values(params):
    info = sigma_and_min_energy(2.0, 1.0, params)
    assert info.sigma == pytest.approx(SQRT3 / 2.0, abs=1e-15)
    assert info.h_min == pytest.approx(H_MIN_L2, abs=1e-15)
    crit = sigma_and_min_energy(1.0, 1.0, params)   # ell = k/c
    assert crit.sigma == 0.0
    assert crit.h_min == -1.0                       # -m c^2
    sub = sigma_and_min_energy(0.5, 1.0, params)
    assert sub.sigma_sq == pytest.approx(-3.0, abs=1e-14)
    assert math.isnan(sub.h_min) and math.isnan(sub.sigma)
    zero = sigma_and_min_energy(0.0, 1.0, params)
    assert math.isnan(zero.sigma_sq)


def test_classify_examples(params):
    assert classify(EMPoint(2.0, -0.05), 1.0, params).label is MotionClass.BOUNDED
    assert classify(EMPoint(2.0, -0.1339746), 1.0, params, tol=1e-6).label \
        is MotionClass.CIRCULAR
    assert classify(EMPoint(1.0, -1.0), 1.0, params).label is MotionClass.EXCLUDED
    assert classify(EMPoint(2.0, -0.2), 1.0, params).label is MotionClass.EMPTY
    assert classify(EMPoint(2.0, 0.3), 1.0, params).label is MotionClass.UNBOUNDED
    assert classify(EMPoint(0.5, 5.0), 1.0, params).label is MotionClass.SUBCRITICAL
    assert classify(EMPoint(0.0, -2.0), 1.0, params).label is MotionClass.SUBCRITICAL
    assert classify(EMPoint(1.0, 0.5), 1.0, params).label is MotionClass.CRITICAL


def test_classify_reflection_symmetry(params):
    rng = np.random.default_rng(7)
    for _ in range(60):
        ell = rng.uniform(-3, 3)
        h = rng.uniform(-2, 1)
        a = classify(EMPoint(ell, h), 1.0, params)
        b = classify(EMPoint(-ell, h), 1.0, params)
        assert a.label is b.label


def test_classify_exact_circular_boundary(params):
    info = sigma_and_min_energy(2.0, 1.0, params)
    assert classify(EMPoint(2.0, info.h_min), 1.0, params).label is MotionClass.CIRCULAR


def test_witness_reproduces_level_set(params):
    pot = make_potential("coulomb", 1.0, params)
    cases = [(2.0, -0.05), (2.0, 0.4), (2.0, H_MIN_L2), (0.5, -1.7), (0.5, 0.0),
             (0.5, 2.0), (-1.8, -0.1), (0.0, -0.5), (0.0, 1.2), (1.0, -0.3)]
    for ell, h in cases:
        w = existence_witness(ell, h, 1.0, params)
        assert w is not None, (ell, h)
        assert hamiltonian(w, pot, params) == pytest.approx(h, abs=1e-10)
        assert angular_momentum(w) == pytest.approx(ell, abs=1e-10)


def test_witness_empty_regions(params):
    assert existence_witness(2.0, -0.2, 1.0, params) is None
    assert existence_witness(2.0, H_MIN_L2 - 1e-6, 1.0, params) is None
    assert existence_witness(1.0, -1.0, 1.0, params) is None       # excluded point
    assert existence_witness(1.0, -1.5, 1.0, params) is None       # below excluded


def test_runge_lenz_hand_values(params):
    R = runge_lenz_vector(PhaseState(q=[1.0, 0.0], p=[0.0, 1.0]), 1.0, params)
    assert R == pytest.approx([1.0 - math.sqrt(2.0), 0.0], abs=1e-15)
    s = PhaseState(q=[0.6, -0.8], p=[0.0, 0.0])
    R0 = runge_lenz_vector(s, 1.0, params)
    assert R0 == pytest.approx([-0.6, 0.8], abs=1e-15)  # -m k q/|q|


def test_runge_lenz_vanishes_on_circular(params, coulomb_pot):
    for r0 in (0.7, 2.0, 11.0):
        state, _ = circular_state(r0, coulomb_pot, params)
        R = runge_lenz_vector(state, 1.0, params)
        assert np.max(np.abs(R)) < 1e-10


def test_conic_residual_identity(params):
    rng = np.random.default_rng(3)
    for _ in range(40):
        q = rng.normal(size=2) * rng.uniform(0.2, 5.0)
        p = rng.normal(size=2) * rng.uniform(0.0, 3.0)
        s = PhaseState(q=q, p=p)
        assert abs(conic_residual(s, 1.0, params)) < 1e-12 * max(1.0, s.r)


def test_rl_report_bounded_orbit(params, bounded_traj):
    rep = rl_components_and_invariant(bounded_traj, 1.0, params)
    assert rep.invariant_drift < 1e-8
    assert rep.gamma_link_residual < 1e-9
    # frame-ODE residual is second order in the step
    ratio = rep.ode_residual / rep.ode_residual_half
    assert 3.0 < ratio < 5.0


def test_rl_time_derivative_second_order(params, bounded_traj):
    # dR/dt = -m k gamma' q/|q|: the FD residual shrinks quadratically
    r1 = rl_components_and_invariant(bounded_traj, 1.0, params, n_time=4000)
    r2 = rl_components_and_invariant(bounded_traj, 1.0, params, n_time=8000)
    ratio = r1.dRdt_residual / r2.dRdt_residual
    assert 3.0 < ratio < 5.0


def test_rl_circular_components_zero(params, coulomb_pot):
    state, _ = circular_state(2.0, coulomb_pot, params)
    traj = integrate(state, (0.0, 40.0), coulomb_pot, params, IntegratorConfig())
    rep = rl_components_and_invariant(traj, 1.0, params, n_theta=64)
    assert np.max(np.abs(rep.R_alpha)) < 1e-10
    assert np.max(np.abs(rep.R_beta)) < 1e-10


def test_rl_orientation_error(params, coulomb_pot):
    s0 = existence_witness(2.0, -0.05, 1.0, params).reflected()
    assert angular_momentum(s0) == pytest.approx(-2.0, abs=1e-12)
    traj = integrate(s0, (0.0, 30.0), coulomb_pot, params, IntegratorConfig())
    with pytest.raises(OrientationError):
        rl_components_and_invariant(traj, 1.0, params)


def test_rl_newtonian_limit_inertial_constancy():
    params = PhysicalParams(m=1.0, c=1e4)
    pot = make_potential("coulomb", 1.0, params)
    s0 = existence_witness(2.0, -0.05, 1.0, params)
    # one revolution of the near-Keplerian ellipse
    traj = integrate(s0, (0.0, 210.0), pot, params, IntegratorConfig())
    assert traj.theta[-1] > 2 * math.pi
    g = np.sqrt(1 + np.sum(traj.p**2, axis=1) / (params.mc * params.c) ** 2)
    R = (-params.m * 1.0 * g / traj.r)[:, None] * traj.q \
        + np.sum(traj.p**2, axis=1)[:, None] * traj.q \
        - np.sum(traj.q * traj.p, axis=1)[:, None] * traj.p
    assert np.max(np.abs(R - R[0])) < 1e-6


def test_invariant_in_subcritical_regime(params, coulomb_pot):
    # sigma^2 < 0 keeps the same quadratic form conserved
    s0 = existence_witness(0.5, -0.3, 1.0, params)
    traj = integrate(s0, (0.0, 2.0), coulomb_pot, params,
                     IntegratorConfig(collision_radius=1e-4))
    ell = traj.ell
    s2 = 1.0 - 1.0 / (ell * ell)
    assert s2 < 0
    g = np.sqrt(1 + np.sum(traj.p**2, axis=1))
    R = (-g / traj.r)[:, None] * traj.q + np.sum(traj.p**2, axis=1)[:, None] * traj.q \
        - np.sum(traj.q * traj.p, axis=1)[:, None] * traj.p
    alpha = traj.q / traj.r[:, None]
    beta = np.stack([-alpha[:, 1], alpha[:, 0]], axis=1)
    Ra = np.sum(R * alpha, axis=1)
    Rb = np.sum(R * beta, axis=1)
    inv = Ra**2 + s2 * Rb**2
    assert np.max(np.abs(inv - inv[0])) < 1e-8


def test_closed_form_circular_consistency(params):
    # A=0 at the circular energy: 1/r = sigma/3 so r = 2 sqrt(3)
    r = orbit_closed_form(0.7, 0.0, 0.0, 2.0, H_MIN_L2, 1.0, params)
    assert r == pytest.approx(2.0 * SQRT3, rel=1e-12)


def test_closed_form_energy_identity(params, bounded_traj):
    g = np.sqrt(1 + np.sum(bounded_traj.p**2, axis=1))
    lhs = g - 1.0 - bounded_traj.H[0]
    assert np.max(np.abs(lhs - 1.0 / bounded_traj.r)) < 1e-9


def test_closed_form_fit_matches_trajectory(params, bounded_traj):
    fit = fit_closed_form(bounded_traj, 1.0, params)
    assert fit.a0 == pytest.approx(fit.a0_predicted, abs=1e-10)
    r_pred = orbit_closed_form(bounded_traj.theta, fit.A_amp, fit.theta0, 2.0,
                               float(bounded_traj.H[0]), 1.0, params)
    assert np.max(np.abs(1.0 / r_pred - 1.0 / bounded_traj.r)) < 1e-7


def test_closed_form_subcritical_cosh_branch(params, coulomb_pot):
    s0 = existence_witness(0.5, -0.3, 1.0, params)
    traj = integrate(s0, (0.0, 2.5), coulomb_pot, params,
                     IntegratorConfig(collision_radius=1e-4))
    fit = fit_closed_form(traj, 1.0, params)
    r_pred = orbit_closed_form(traj.theta, fit.A_amp, fit.theta0, traj.ell,
                               float(traj.H[0]), 1.0, params)
    assert np.max(np.abs(1.0 / r_pred - 1.0 / traj.r)) < 1e-7


def test_closed_form_errors(params):
    with pytest.raises(InvalidParameterError):
        orbit_closed_form(0.0, 0.1, 0.0, 1.0, -0.5, 1.0, params)  # critical momentum
    with pytest.raises(OutOfBranchError):
        # unbound orbit past the asymptote angle: 1/r crosses zero
        orbit_closed_form(math.pi / (SQRT3 / 2.0), 2.0, 0.0, 2.0, 0.5, 1.0, params)


def test_apsidal_precession(params, bounded_traj):
    rep = apsidal_precession(bounded_traj, 1.0, params)
    assert rep.predicted == pytest.approx(4.0 * math.pi / SQRT3, abs=1e-12)
    assert abs(rep.apsidal_angle - rep.predicted) < 1e-6
    assert rep.precession_per_period == pytest.approx(
        2 * math.pi * (2.0 / SQRT3 - 1.0), abs=1e-6)


def test_apsidal_precession_newtonian_limit():
    params = PhysicalParams(m=1.0, c=1e4)
    pot = make_potential("coulomb", 1.0, params)
    s0 = existence_witness(2.0, -0.05, 1.0, params)
    traj = integrate(s0, (0.0, 450.0), pot, params, IntegratorConfig())
    rep = apsidal_precession(traj, 1.0, params)
    assert abs(rep.precession_per_period) < 1e-7


def test_apsidal_insufficient_data(params, coulomb_pot):
    state, _ = circular_state(2.0, coulomb_pot, params)
    traj = integrate(state, (0.0, 50.0), coulomb_pot, params, IntegratorConfig())
    with pytest.raises(InsufficientDataError):
        apsidal_precession(traj, 1.0, params)


def test_diagram_grid_and_csv(params):
    ells = np.linspace(-2.0, 2.0, 9)
    hs = np.linspace(-1.5, 0.5, 7)
    codes = diagram_grid(ells, hs, 1.0, params)
    assert codes.shape == (9, 7)
    for i in (0, 4, 8):
        for j in (0, 3, 6):
            expected = classify(EMPoint(ells[i], hs[j]), 1.0, params).code
            assert codes[i, j] == expected
    text = diagram_csv(ells, hs, codes)
    lines = text.split("\n")
    assert lines[0] == "ell,h,class_code"
    assert len(lines) == 9 * 7 + 2
