import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mannarm.dynamics import (ArmParams, JointSignal, JumpEvent,
                              NonPositiveMassError, PlantState,
                              SingularMassError, apply_jump, coriolis_matrix,
                              gravity_vector, mass_matrix, plant_derivative,
                              reference_eval, solve_inertia)

ARM = ArmParams(m1=0.8, m2=2.3, l1=1.0, l2=1.0)

angles = st.floats(-10.0, 10.0, allow_nan=False)
rates = st.floats(-20.0, 20.0, allow_nan=False)


def test_lumped_coefficients():
    assert ARM.phi == pytest.approx(3.1)
    assert ARM.rho == pytest.approx(2.3)
    assert ARM.psi == pytest.approx(2.3)
    assert ARM.gamma == pytest.approx(9.8)


def test_mass_matrix_zero_elbow():
    M = mass_matrix(ARM, np.array([0.3, 0.0]))
    assert M == pytest.approx(np.array([[10.0, 4.6], [4.6, 2.3]]))


def test_mass_matrix_right_elbow():
    M = mass_matrix(ARM, np.array([-1.0, math.pi / 2]))
    assert M == pytest.approx(np.array([[5.4, 2.3], [2.3, 2.3]]))


@given(angles, angles)
def test_mass_matrix_symmetric(x1, x2):
    M = mass_matrix(ARM, np.array([x1, x2]))
    assert M[0, 1] == M[1, 0]


def test_coriolis_vanishes_at_rest_and_straight_elbow():
    assert np.all(coriolis_matrix(ARM, np.array([1.0, 2.0]), np.zeros(2))
                  @ np.zeros(2) == 0.0)
    assert coriolis_matrix(ARM, np.array([0.7, 0.0]), np.array([3.0, -2.0])) \
        == pytest.approx(np.zeros((2, 2)))


def test_coriolis_right_elbow():
    C = coriolis_matrix(ARM, np.array([0.0, math.pi / 2]), np.array([1.0, 1.0]))
    assert C == pytest.approx(np.array([[-2.3, -4.6], [2.3, 0.0]]))


def test_gravity_upright_is_zero():
    g = gravity_vector(ARM, np.array([math.pi / 2, 0.0]))
    assert g == pytest.approx(np.zeros(2), abs=1e-12)


def test_gravity_at_zero_posture():
    g = gravity_vector(ARM, np.array([0.0, 0.0]))
    assert g == pytest.approx(np.array([52.92, 22.54]))


def test_gravity_folded_elbow():
    g = gravity_vector(ARM, np.array([0.0, math.pi]))
    assert g == pytest.approx(np.array([7.84, -22.54]))


def test_plant_derivative_equilibria():
    up = PlantState(x=np.array([math.pi / 2, 0.0]), xdot=np.zeros(2))
    d = plant_derivative(ARM, up, np.zeros(2))
    assert d.xdot == pytest.approx(np.zeros(2), abs=1e-12)
    assert d.x == pytest.approx(np.zeros(2))

    flat = PlantState(x=np.zeros(2), xdot=np.zeros(2))
    hold = plant_derivative(ARM, flat, gravity_vector(ARM, flat.x))
    assert hold.xdot == pytest.approx(np.zeros(2), abs=1e-12)


def test_plant_derivative_matches_linear_solve():
    flat = PlantState(x=np.zeros(2), xdot=np.zeros(2))
    d = plant_derivative(ARM, flat, np.zeros(2))
    expect = -np.linalg.solve(np.array([[10.0, 4.6], [4.6, 2.3]]),
                              np.array([52.92, 22.54]))
    assert d.xdot == pytest.approx(expect, rel=1e-12)


@given(angles, angles, rates, rates, st.floats(-50, 50), st.floats(-50, 50))
def test_plant_derivative_agrees_with_numpy_solve(x1, x2, v1, v2, t1, t2):
    state = PlantState(x=np.array([x1, x2]), xdot=np.array([v1, v2]))
    tau = np.array([t1, t2])
    d = plant_derivative(ARM, state, tau)
    M = mass_matrix(ARM, state.x)
    rhs = tau - coriolis_matrix(ARM, state.x, state.xdot) @ state.xdot \
        - gravity_vector(ARM, state.x)
    assert d.xdot == pytest.approx(np.linalg.solve(M, rhs), rel=1e-9, abs=1e-9)


def test_singular_guard_trips_on_tight_bound():
    flat = PlantState(x=np.zeros(2), xdot=np.zeros(2))
    with pytest.raises(SingularMassError):
        solve_inertia(ARM, flat.x, np.zeros(2), cond_bound=1.0)


def test_apply_jump_scale():
    out = apply_jump(ARM, JumpEvent(time=1.0, factor=2.0))
    assert (out.m1, out.m2) == pytest.approx((1.6, 4.6))
    assert out.phi == pytest.approx(6.2)
    assert out.gamma == ARM.gamma
    assert (out.l1, out.l2) == (ARM.l1, ARM.l2)


def test_apply_jump_identity():
    out = apply_jump(ARM, JumpEvent(time=1.0, factor=1.0))
    assert (out.m1, out.m2) == (ARM.m1, ARM.m2)


def test_apply_jump_squared_increment():
    inc = (0.2 * ARM.m1 ** 2, 0.2 * ARM.m2 ** 2)
    out = apply_jump(ARM, JumpEvent(time=1.0, kind="add_squared", dm_squared=inc))
    assert out.m1 ** 2 - ARM.m1 ** 2 == pytest.approx(inc[0])
    assert out.m2 ** 2 - ARM.m2 ** 2 == pytest.approx(inc[1])


def test_apply_jump_inverse_restores():
    for f in (2.0, math.sqrt(10.0), 0.63):
        out = apply_jump(apply_jump(ARM, JumpEvent(0.0, factor=f)),
                         JumpEvent(1.0, factor=1.0 / f))
        assert abs(out.m1 - ARM.m1) < 1e-12
        assert abs(out.m2 - ARM.m2) < 1e-12


def test_apply_jump_rejects_nonpositive():
    with pytest.raises(NonPositiveMassError):
        apply_jump(ARM, JumpEvent(0.0, factor=-1.0))
    with pytest.raises(NonPositiveMassError):
        apply_jump(ARM, JumpEvent(0.0, kind="add_squared",
                                  dm_squared=(-10.0, 0.0)))


def test_reference_eval_sinusoid_and_constants():
    ref = (JointSignal(amplitude=1.0, omega=0.5), JointSignal())
    s, sd, sdd = reference_eval(ref, 0.0)
    assert s == pytest.approx(np.array([0.0, 0.0]))
    assert sd == pytest.approx(np.array([0.5, 0.0]))
    assert sdd == pytest.approx(np.array([0.0, 0.0]))

    ref2 = (JointSignal(), JointSignal(offset=0.1))
    for t in (0.0, 1.7, 42.0):
        s, sd, sdd = reference_eval(ref2, t)
        assert s == pytest.approx(np.array([0.0, 0.1]))
        assert sd == pytest.approx(np.zeros(2))
        assert sdd == pytest.approx(np.zeros(2))


@given(st.floats(0.0, 100.0), st.floats(-2, 2), st.floats(0.05, 3.0))
def test_reference_derivatives_are_analytic(t, amp, omega):
    sig = JointSignal(offset=0.3, amplitude=amp, omega=omega)
    s, sd, sdd = sig.eval(t)
    eps = 1e-6
    sp, _, _ = sig.eval(t + eps)
    sm, _, _ = sig.eval(t - eps)
    assert sd == pytest.approx((sp - sm) / (2 * eps), abs=1e-5)
    # larger step for the curvature: keeps cancellation noise negligible
    eps = 1e-4
    sp, _, _ = sig.eval(t + eps)
    sm, _, _ = sig.eval(t - eps)
    assert sdd == pytest.approx((sp - 2 * s + sm) / eps ** 2, abs=1e-3)


def test_skew_symmetry_of_inertia_rate():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        x = rng.uniform(-math.pi, math.pi, 2)
        xd = rng.uniform(-5, 5, 2)
        dm = np.array([[-2 * ARM.psi * math.sin(x[1]), -ARM.psi * math.sin(x[1])],
                       [-ARM.psi * math.sin(x[1]), 0.0]])
        S = dm * xd[1] - 2.0 * coriolis_matrix(ARM, x, xd)
        assert np.max(np.abs(S + S.T)) < 1e-10


def test_mass_matrix_positive_definite_over_grid():
    for x2 in np.linspace(-math.pi, math.pi, 361):
        eig = np.linalg.eigvalsh(mass_matrix(ARM, np.array([0.0, x2])))
        assert eig[0] > 0.0


def test_trajectory_consistent_with_derivative():
    # central difference of a short simulated trajectory vs the field
    from mannarm.simulation import rk4_step

    def f(t, y):
        st_ = PlantState(x=y[:2], xdot=y[2:])
        d = plant_derivative(ARM, st_, np.array([5.0, -2.0]))
        return np.concatenate([d.x, d.xdot])

    dt = 1e-3
    y = np.array([0.3, -0.2, 0.1, 0.4])
    ys = [y]
    for i in range(200):
        y = rk4_step(f, i * dt, y, dt)
        ys.append(y)
    ys = np.array(ys)
    mid = 100
    fd = (ys[mid + 1] - ys[mid - 1]) / (2 * dt)
    assert fd == pytest.approx(f(mid * dt, ys[mid]), abs=5e-4)
