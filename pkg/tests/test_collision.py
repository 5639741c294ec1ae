import math

import numpy as np
import pytest

from relorbit.collision import (CollisionConfig, CollisionVars, integrate_regularized,
                                integrate_to_collision, manifold_residual,
                                regularized_rhs, w_inverse, w_transform)
from relorbit.core import PhaseState, angular_momentum
from relorbit.coulomb import existence_witness
from relorbit.dynamics import IntegratorConfig, integrate
from relorbit.errors import WrongRegimeError


def test_w_transform_examples(params):
    v = w_transform(PhaseState(q=[1.0, 0.0], p=[2.0, 3.0]))
    assert (v.w1, v.w2) == (2.0, 3.0)
    assert v.w1**2 + v.w2**2 == pytest.approx(13.0, rel=1e-15)  # = |q|^2 |p|^2
    v2 = w_transform(PhaseState(q=[0.0, 2.0], p=[1.0, 0.0]))
    assert (v2.w1, v2.w2) == (0.0, -2.0)


def test_w_norm_identity(params):
    rng = np.random.default_rng(11)
    for _ in range(30):
        q = rng.normal(size=2) * rng.uniform(0.1, 4.0)
        p = rng.normal(size=2) * rng.uniform(0.0, 4.0)
        s = PhaseState(q=q, p=p)
        v = w_transform(s)
        assert v.w1**2 + v.w2**2 == pytest.approx(
            np.dot(q, q) * np.dot(p, p), rel=1e-12)


def test_w_roundtrip(params):
    rng = np.random.default_rng(5)
    for _ in range(30):
        q = rng.normal(size=2) * rng.uniform(0.1, 4.0)
        p = rng.normal(size=2) * rng.uniform(0.1, 4.0)
        s = PhaseState(q=q, p=p)
        v = w_transform(s)
        back = w_inverse(q, (v.w1, v.w2))
        assert np.max(np.abs(back.p - p)) < 1e-12 * max(1.0, np.max(np.abs(p)))
        # the inverse respects both components by construction
        assert np.dot(back.q, back.p) == pytest.approx(v.w1, rel=1e-12, abs=1e-12)
        assert angular_momentum(back) == pytest.approx(v.w2, rel=1e-12, abs=1e-12)


def test_regularized_rhs_at_origin(params):
    k = 1.0
    # |w| = k/c makes dr/dt = c^2 w1 / k at the collision
    w1 = -0.6
    w2 = math.sqrt((k / params.c) ** 2 - w1**2)
    v = CollisionVars(r=0.0, theta=0.0, w1=w1, w2=w2, h=0.25)
    rates = regularized_rhs(v, k, params)
    assert rates.dw1 == pytest.approx(0.25 + params.mc2, rel=1e-14)
    assert rates.dr == pytest.approx(params.c**2 * w1 / k, rel=1e-12)
    assert rates.dw2 == 0.0 and rates.dh == 0.0
    assert rates.singular_angle and math.isinf(rates.dtheta)
    radial = regularized_rhs(CollisionVars(0.0, 0.0, w1, 0.0, 0.25), k, params)
    assert radial.dtheta == 0.0 and not radial.singular_angle


def test_regularized_matches_cartesian(params, coulomb_pot):
    s0 = existence_witness(0.5, -0.3, 1.0, params)
    v0 = w_transform(s0, 1.0, params)
    path = integrate_regularized(v0, 1.0, params, (0.0, 3.0))
    traj = integrate(s0, (0.0, 3.0), coulomb_pot, params,
                     IntegratorConfig(collision_radius=1e-12))
    ts = np.linspace(0.0, min(path.t[-1], traj.t[-1]) * 0.98, 60)
    r_reg, th_reg = path._sol(ts)[0], path._sol(ts)[1]
    qs, _ = traj.qp_at(ts)
    r_cart = np.hypot(qs[:, 0], qs[:, 1])
    th_cart = traj.theta_at(ts)
    assert np.max(np.abs(r_reg - r_cart)) < 1e-8
    assert np.max(np.abs(th_reg - th_cart)) < 1e-8


def test_manifold_conserved(params):
    s0 = existence_witness(0.5, 0.0, 1.0, params)
    path, fit = integrate_to_collision(s0, 1.0, params)
    res = manifold_residual(path.r, path.w1, path.w2, path.h, 1.0, params)
    assert np.max(res) < 1e-9
    assert fit.manifold_residual_max < 1e-9


def test_collision_fit_self_consistency(params):
    s0 = existence_witness(0.5, 0.0, 1.0, params)
    _, fit = integrate_to_collision(s0, 1.0, params)
    assert abs(fit.slope - fit.slope_pred) / fit.slope_pred < 0.005
    assert abs(fit.lam - fit.lambda_pred) / abs(fit.lambda_pred) < 0.01
    assert abs(fit.w_limit_norm - 1.0) < 1e-6          # |w| -> k/c
    assert fit.slope > 0
    assert fit.w10 > 0
    assert fit.lambda_pred_ell == fit.lambda_pred
    assert len(fit.window) == 21


def test_regularized_radial_speed_subluminal(params):
    # the velocity bound survives regularization all the way to the collision
    s0 = existence_witness(0.5, 0.0, 1.0, params)
    path, _ = integrate_to_collision(s0, 1.0, params)
    S = np.sqrt(params.m**2 * path.r**2 + (path.w1**2 + path.w2**2) / params.c**2)
    assert np.max(np.abs(path.w1 / S)) < params.c


def test_collision_remainder_exponents(params):
    s0 = existence_witness(0.5, 0.0, 1.0, params)
    _, fit = integrate_to_collision(s0, 1.0, params)
    assert fit.r_resid_exponent >= 1.5                  # remainder is o(t)
    assert abs(fit.theta_resid_ln_slope) < 0.05 * abs(fit.lam)   # o(|ln t|)


def test_collision_bounded_incoming_branch(params):
    s0 = existence_witness(0.5, -0.3, 1.0, params)
    _, fit = integrate_to_collision(s0, 1.0, params)
    assert fit.branch == "incoming"
    assert abs(fit.slope - fit.slope_pred) / fit.slope_pred < 0.005
    assert abs(fit.lam - fit.lambda_pred) / abs(fit.lambda_pred) < 0.01


def test_collision_radial(params):
    s0 = existence_witness(0.0, -0.5, 1.0, params)
    _, fit = integrate_to_collision(s0, 1.0, params)
    assert fit.lam == 0.0
    assert fit.theta0 == 0.0
    assert abs(fit.slope - fit.slope_pred) / fit.slope_pred < 0.005


def test_radial_single_aphelion_between_collisions(params):
    # outgoing radial data rises to exactly one turning point, then falls back
    h = -0.5
    r0 = 0.1
    gamma = (h + 1.0 + 1.0 / r0)    # m c^2 gamma = h + mc^2 + k/r
    pmag = math.sqrt(gamma**2 - 1.0)
    s0 = PhaseState(q=[r0, 0.0], p=[pmag, 0.0])
    path, fit = integrate_to_collision(s0, 1.0, params)
    assert fit.branch == "incoming"
    assert path.n_aphelion == 1


def test_collision_wrong_regime(params):
    s0 = existence_witness(2.0, -0.05, 1.0, params)
    with pytest.raises(WrongRegimeError):
        integrate_to_collision(s0, 1.0, params)


def test_collision_json_keys(params):
    s0 = existence_witness(0.5, 0.0, 1.0, params)
    _, fit = integrate_to_collision(s0, 1.0, params)
    d = fit.to_json()
    for key in ("w10", "theta0", "slope", "slope_pred", "lambda", "lambda_pred",
                "residuals", "window"):
        assert key in d
    assert set(d["residuals"]) >= {"r_fit", "theta_fit", "manifold"}
