import math

import numpy as np
import pytest

from relorbit.core import (PhaseState, PhysicalParams, angular_momentum, hamiltonian,
                           lorentz_gamma, make_potential, momentum_from_velocity,
                           velocity_from_momentum)
from relorbit.errors import InvalidParameterError, SingularityError, SuperluminalError

SQRT2 = math.sqrt(2.0)


def test_params_validation():
    with pytest.raises(InvalidParameterError):
        PhysicalParams(m=0.0)
    with pytest.raises(InvalidParameterError):
        PhysicalParams(c=-1.0)


def test_phase_state_origin_rejected():
    with pytest.raises(SingularityError):
        PhaseState(q=[0.0, 0.0], p=[1.0, 0.0])


def test_coulomb_values(params):
    pot = make_potential("coulomb", 1.0, params)
    assert pot.V(2.0) == -0.5
    assert pot.dV(2.0) == 0.25
    assert pot.dW(0.3) == -1.0
    assert pot.d2W(0.3) == 0.0


def test_make_potential_errors(params):
    with pytest.raises(InvalidParameterError):
        make_potential("coulomb", 0.0, params)
    with pytest.raises(InvalidParameterError):
        make_potential("coulomb", -2.0, params)
    with pytest.raises(InvalidParameterError):
        make_potential("yukawa", 1.0, params)


def test_constant_momentum_slope(params):
    pot = make_potential("constant-momentum", 1.0, params)
    # V'(r) = c k / (r^2 sqrt(k + c^2 m^2 r^2))
    assert pot.dV(1.0) == pytest.approx(1.0 / SQRT2, rel=1e-15)
    assert pot.V(1.0) == pytest.approx(-SQRT2, rel=1e-15)


@pytest.mark.parametrize("kind", ["coulomb", "constant-momentum"])
def test_attractive_everywhere(params, kind):
    pot = make_potential(kind, 1.3, params)
    r = np.geomspace(1e-3, 1e3, 41)
    assert np.all(pot.dV(r) > 0)


def test_gamma_basics(params):
    assert lorentz_gamma(np.zeros(2), params) == 1.0
    assert lorentz_gamma(np.array([0.0, 1.0]), params) == pytest.approx(SQRT2, rel=1e-15)


def test_gamma_monotone(params):
    mags = np.linspace(0.0, 5.0, 40)
    gs = [lorentz_gamma(np.array([m, 0.0]), params) for m in mags]
    assert np.all(np.diff(gs) > 0)
    assert min(gs) == 1.0


def test_hamiltonian_values(params):
    pot = make_potential("coulomb", 1.0, params)
    assert hamiltonian(PhaseState(q=[2.0, 0.0], p=[0.0, 0.0]), pot, params) == -0.5
    h = hamiltonian(PhaseState(q=[1.0, 0.0], p=[0.0, 1.0]), pot, params)
    assert h == pytest.approx(SQRT2 - 2.0, abs=1e-15)  # -0.5857864376269049


def test_hamiltonian_circular_matches_min_energy(params):
    # the circular orbit carrying L = 2 sits exactly on the energy boundary
    from relorbit.circular import circular_state

    pot = make_potential("coulomb", 1.0, params)
    state, _ = circular_state(2.0 * math.sqrt(3.0), pot, params)
    assert angular_momentum(state) == pytest.approx(2.0, abs=1e-12)
    h_min = -(1.0 - math.sqrt(3.0) / 2.0)  # -0.13397459621556135
    assert hamiltonian(state, pot, params) == pytest.approx(h_min, abs=1e-12)


def test_hamiltonian_singularity(params):
    pot = make_potential("coulomb", 1.0, params)
    with pytest.raises(SingularityError):
        PhaseState(q=[0.0, 0.0], p=[0.0, 0.0])


def test_angular_momentum_values():
    assert angular_momentum(PhaseState(q=[1.0, 0.0], p=[0.0, 1.0])) == 1.0
    assert angular_momentum(PhaseState(q=[0.0, 2.0], p=[1.0, 0.0])) == -2.0
    for lam in (0.5, -3.0, 7.25):
        s = PhaseState(q=[1.2, -0.7], p=[lam * 1.2, lam * -0.7])
        assert angular_momentum(s) == pytest.approx(0.0, abs=1e-14)


def test_momentum_velocity_maps(params):
    assert np.allclose(momentum_from_velocity(np.zeros(2), params), 0.0)
    p = momentum_from_velocity(np.array([0.6, 0.0]), params)
    assert p[0] == pytest.approx(0.75, rel=1e-15)
    with pytest.raises(SuperluminalError):
        momentum_from_velocity(np.array([1.0, 0.0]), params)
    with pytest.raises(SuperluminalError):
        momentum_from_velocity(np.array([0.8, 0.8]), params)


def test_momentum_velocity_roundtrip(params):
    rng = np.random.default_rng(42)
    for _ in range(50):
        direction = rng.normal(size=2)
        direction /= np.hypot(*direction)
        v = direction * rng.uniform(0.0, 0.99)
        p = momentum_from_velocity(v, params)
        back = velocity_from_momentum(p, params)
        assert np.max(np.abs(back - v)) < 1e-12 * max(1.0, np.max(np.abs(v)))


def test_inverse_map_subluminal(params):
    p = np.array([1e6, 0.0])
    v = velocity_from_momentum(p, params)
    assert np.hypot(*v) < params.c


@pytest.mark.parametrize("kind", ["coulomb", "constant-momentum"])
def test_derivatives_match_finite_differences(params, kind):
    pot = make_potential(kind, 1.0, params)
    r = np.array([0.3, 1.0, 2.7])
    pairs = [(pot.V, pot.dV), (pot.dV, pot.d2V), (pot.d2V, pot.d3V)]
    for f, df in pairs:
        errs = []
        for h in (1e-3, 1e-4):
            fd = (f(r + h) - f(r - h)) / (2 * h)
            errs.append(np.max(np.abs(fd - df(r)) / np.abs(df(r))))
        assert errs[1] < 1e-6
        # central differences: error drops ~100x when h drops 10x
        assert 20 < errs[0] / errs[1] < 500


@pytest.mark.parametrize("kind", ["coulomb", "constant-momentum"])
def test_clairaut_chain_rule(params, kind):
    pot = make_potential(kind, 1.0, params)
    rho = np.geomspace(1e-3, 1e3, 61)
    lhs = pot.dW(rho)
    rhs = -pot.dV(1.0 / rho) * rho**-2
    assert np.max(np.abs(lhs - rhs) / np.abs(rhs)) < 1e-12
