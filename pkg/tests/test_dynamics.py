import math

import numpy as np
import pytest

from relorbit.circular import circular_state
from relorbit.core import PhaseState, angular_momentum, hamiltonian
from relorbit.coulomb import existence_witness
from relorbit.dynamics import (IntegratorConfig, apsis_times, cartesian_rhs,
                               conservation_report, integrate)
from relorbit.errors import InvalidParameterError, TruncationError

SQRT2 = math.sqrt(2.0)


def test_rhs_hand_value(params, coulomb_pot):
    dq, dp = cartesian_rhs(PhaseState(q=[1.0, 0.0], p=[0.0, 1.0]), coulomb_pot, params)
    assert dq == pytest.approx([0.0, 1.0 / SQRT2], abs=1e-15)
    assert dp == pytest.approx([-1.0, 0.0], abs=1e-15)


def test_rhs_rest_case(params, coulomb_pot):
    s = PhaseState(q=[3.0, 4.0], p=[0.0, 0.0])
    dq, dp = cartesian_rhs(s, coulomb_pot, params)
    assert np.allclose(dq, 0.0)
    expected = -coulomb_pot.dV(5.0) * s.q / 5.0
    assert dp == pytest.approx(list(expected), rel=1e-14)


def test_rhs_velocity_subluminal(params, coulomb_pot):
    for mag in (1.0, 1e3, 1e8):
        s = PhaseState(q=[1.0, 0.0], p=[mag, mag])
        dq, _ = cartesian_rhs(s, coulomb_pot, params)
        assert np.hypot(*dq) < params.c


def test_config_validation():
    with pytest.raises(InvalidParameterError):
        IntegratorConfig(rtol=0.0)
    with pytest.raises(InvalidParameterError):
        IntegratorConfig(method="euler")


def test_circular_orbit_radius_stability(params, coulomb_pot):
    state, orb = circular_state(2.0, coulomb_pot, params)
    traj = integrate(state, (0.0, 100.0), coulomb_pot, params, IntegratorConfig())
    assert np.max(np.abs(traj.r - 2.0)) < 1e-8


def test_conservation_tight_tolerance(bounded_traj):
    rep = conservation_report(bounded_traj)
    h0 = bounded_traj.H[0]
    assert rep["H"]["abs"] <= 1e-9 * (1.0 + abs(h0))
    assert rep["L"]["abs"] <= 1e-9 * (1.0 + abs(bounded_traj.L[0]))


def test_drift_grows_with_tolerance(params, coulomb_pot):
    s0 = existence_witness(2.0, -0.05, 1.0, params)
    loose = integrate(s0, (0.0, 200.0), coulomb_pot, params,
                      IntegratorConfig(rtol=1e-6, atol=1e-8))
    tight = integrate(s0, (0.0, 200.0), coulomb_pot, params, IntegratorConfig())
    assert conservation_report(loose)["H"]["abs"] > conservation_report(tight)["H"]["abs"]


def test_constant_momentum_conservation(params, cm_pot):
    state, _ = circular_state(1.5, cm_pot, params)
    nudged = PhaseState(q=state.q, p=state.p * 1.15)
    traj = integrate(nudged, (0.0, 200.0), cm_pot, params, IntegratorConfig())
    rep = conservation_report(traj)
    assert rep["H"]["rel"] < 1e-9
    assert rep["L"]["rel"] < 1e-9


def test_time_reversal(params, coulomb_pot):
    s0 = existence_witness(2.0, -0.05, 1.0, params)
    fwd = integrate(s0, (0.0, 50.0), coulomb_pot, params, IntegratorConfig())
    back = integrate(fwd.final_state(), (50.0, 0.0), coulomb_pot, params,
                     IntegratorConfig())
    q_end, p_end = back.qp_at(0.0)
    assert np.max(np.abs(q_end - s0.q)) < 1e-8
    assert np.max(np.abs(p_end - s0.p)) < 1e-8


def test_dense_output_reproduces_samples(bounded_traj):
    idx = np.linspace(0, len(bounded_traj) - 1, 25).astype(int)
    for i in idx:
        q, p = bounded_traj.qp_at(bounded_traj.t[i])
        assert np.max(np.abs(q - bounded_traj.q[i])) < 1e-12
        assert np.max(np.abs(p - bounded_traj.p[i])) < 1e-12


def test_theta_unwrapped(bounded_traj):
    dth = np.diff(bounded_traj.theta)
    assert np.all(dth > 0)          # ell > 0: angle strictly increases
    assert np.max(dth) < np.pi      # no 2 pi jumps
    assert bounded_traj.theta[-1] > 4 * np.pi  # several revolutions unwrapped


def test_collision_event_flagged(params, coulomb_pot):
    s0 = existence_witness(0.3, -0.1, 1.0, params)
    cfg = IntegratorConfig(collision_radius=1e-6)
    traj = integrate(s0, (0.0, 1e4), coulomb_pot, params, cfg)
    kinds = [k for k, _ in traj.events]
    assert kinds == ["collision"]
    assert traj.r[-1] <= 1e-6 * (1 + 1e-6)
    assert np.all(traj.r[:-1] > 1e-6)


def test_max_steps_truncation(params, coulomb_pot):
    s0 = existence_witness(2.0, -0.05, 1.0, params)
    with pytest.raises(TruncationError) as exc:
        integrate(s0, (0.0, 1000.0), coulomb_pot, params,
                  IntegratorConfig(max_steps=50))
    partial = exc.value.trajectory
    assert partial is not None and len(partial) == 51
    assert partial.t[-1] < 1000.0


def test_degenerate_span_rejected(params, coulomb_pot):
    s0 = existence_witness(2.0, -0.05, 1.0, params)
    with pytest.raises(InvalidParameterError):
        integrate(s0, (1.0, 1.0), coulomb_pot, params)


def test_apsis_circular_empty(params, coulomb_pot):
    state, _ = circular_state(2.0, coulomb_pot, params)
    traj = integrate(state, (0.0, 60.0), coulomb_pot, params, IntegratorConfig())
    assert apsis_times(traj) == []


def test_apsis_needs_samples():
    single_sample = type("Stub", (), {"__len__": lambda self: 1})()
    with pytest.raises(InvalidParameterError):
        apsis_times(single_sample)


def test_apsis_perihelion_radii_agree(bounded_traj):
    peri = [e for e in apsis_times(bounded_traj) if e.kind == "perihelion"]
    assert len(peri) >= 2
    radii = np.array([e.r for e in peri])
    assert np.max(np.abs(radii - radii[0])) < 1e-7
    kinds = [e.kind for e in apsis_times(bounded_traj)]
    assert all(a != b for a, b in zip(kinds, kinds[1:]))  # alternating


def test_csv_format_and_determinism(params, coulomb_pot, tmp_path):
    s0 = existence_witness(2.0, -0.05, 1.0, params)
    t1 = integrate(s0, (0.0, 20.0), coulomb_pot, params, IntegratorConfig())
    t2 = integrate(s0, (0.0, 20.0), coulomb_pot, params, IntegratorConfig())
    text = t1.csv_text()
    assert text == t2.csv_text()
    lines = text.split("\n")
    assert lines[0] == "t,q1,q2,p1,p2,r,theta,H,L"
    assert len(lines) == len(t1) + 2 and lines[-1] == ""
    assert "\r" not in text
    row = lines[1].split(",")
    assert len(row) == 9
    assert float(row[0]) == 0.0
    # full-precision roundtrip of a sample value
    assert float(lines[2].split(",")[1]) == t1.q[1, 0]
    out = tmp_path / "traj.csv"
    t1.to_csv(out)
    assert out.read_text() == text
