import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mannarm.dynamics import PlantState
from mannarm.neurocontroller import (ControllerGains, NetworkParams,
                                     augmented_basis, baseline_term,
                                     basis_jacobian, error_state,
                                     hidden_activations, init_network,
                                     nn_output, robustifying_term, sigmoid,
                                     total_torque, weight_derivatives)
GAINS = ControllerGains()


def random_net(seed=0, n_hidden=10):
    rng = np.random.default_rng(seed)
    return NetworkParams(
        W_out=rng.normal(size=(n_hidden, 2)),
        b_out=rng.normal(size=2),
        W_in=rng.normal(scale=0.4, size=(10, n_hidden)),
        b_in=rng.normal(scale=0.4, size=n_hidden))


def random_err(seed=1):
    rng = np.random.default_rng(seed)
    e = rng.normal(size=2)
    edot = rng.normal(size=2)
    s = rng.normal(size=2)
    plant = PlantState(x=s - e, xdot=-edot)
    return error_state(plant, (s, np.zeros(2), rng.normal(size=2)), GAINS)


def test_hidden_all_half_for_zero_weights():
    net = NetworkParams(W_out=np.zeros((10, 2)), b_out=np.zeros(2),
                        W_in=np.zeros((10, 10)), b_in=np.zeros(10))
    assert hidden_activations(net, np.ones(10)) == pytest.approx(0.5 * np.ones(10))


def test_hidden_saturates():
    net = NetworkParams(W_out=np.zeros((10, 2)), b_out=np.zeros(2),
                        W_in=np.zeros((10, 10)), b_in=np.full(10, 800.0))
    assert hidden_activations(net, np.zeros(10)) == pytest.approx(np.ones(10))
    assert sigmoid(np.array([-800.0])) == pytest.approx([0.0])


def test_sigmoid_of_log3():
    assert sigmoid(np.array([math.log(3.0)]))[0] == pytest.approx(0.75)


def test_augmented_basis_structure():
    net = random_net()
    x = np.linspace(-1, 1, 10)
    basis = augmented_basis(net, x)
    assert basis.shape == (11,)
    assert basis[-1] == 1.0
    sig = hidden_activations(net, x)
    jac = basis_jacobian(net, x)
    assert jac.shape == (11, 10)
    assert np.all(jac[-1] == 0.0)
    assert np.diag(jac[:-1]) == pytest.approx(sig * (1 - sig))
    # saturated units have zero sensitivity
    sat = NetworkParams(W_out=np.zeros((10, 2)), b_out=np.zeros(2),
                        W_in=np.zeros((10, 10)), b_in=np.full(10, 500.0))
    assert np.max(np.abs(basis_jacobian(sat, np.zeros(10)))) == 0.0


def test_basis_jacobian_matches_finite_difference():
    net = random_net(3)
    rng = np.random.default_rng(4)
    for _ in range(10):
        x = rng.uniform(-1, 1, 10)
        z = net.W_in.T @ x + net.b_in
        jac = basis_jacobian(net, x)
        eps = 1e-6
        for k in range(10):
            fd = (sigmoid(z[k] + eps) - sigmoid(z[k] - eps)) / (2 * eps)
            assert abs(jac[k, k] - float(fd)) < 1e-6


def test_nn_output_zero_output_layer():
    net = NetworkParams(W_out=np.zeros((10, 2)), b_out=np.zeros(2),
                        W_in=np.ones((10, 10)), b_in=np.ones(10))
    assert nn_output(net, np.ones(10), np.ones(10)) == pytest.approx(np.zeros(2))


def test_nn_output_read_cancellation():
    net = random_net(5)
    x = np.linspace(-0.5, 0.5, 10)
    sig = hidden_activations(net, x)
    assert nn_output(net, x, -sig) == pytest.approx(-net.b_out)


def test_nn_output_affine_in_read():
    net = random_net(6)
    rng = np.random.default_rng(7)
    x = rng.uniform(-1, 1, 10)
    h1, h2 = rng.normal(size=10), rng.normal(size=10)
    lhs = nn_output(net, x, h1) - nn_output(net, x, h2)
    assert lhs == pytest.approx(-(net.W_out.T @ (h1 - h2)), abs=1e-12)


def test_weight_derivatives_zero_without_error_signal():
    net = random_net(8)
    plant = PlantState(x=np.array([0.2, -0.1]), xdot=np.zeros(2))
    ref = (plant.x.copy(), np.zeros(2), np.zeros(2))
    err = error_state(plant, ref, GAINS)  # e = edot = r = 0
    d = weight_derivatives(net, err, GAINS)
    for block in (d.W_out, d.b_out, d.W_in, d.b_in):
        assert np.all(block == 0.0)


def test_weight_derivatives_input_layer_needs_output_weights():
    net = NetworkParams(W_out=np.zeros((10, 2)), b_out=np.zeros(2),
                        W_in=np.ones((10, 10)) * 0.1, b_in=np.zeros(10))
    err = random_err()
    d = weight_derivatives(net, err, GAINS)
    assert np.all(d.W_in == 0.0)
    assert np.all(d.b_in == 0.0)
    assert np.any(d.W_out != 0.0)


def test_weight_derivatives_match_stacked_equations():
    """Independent literal evaluation of the stacked update law."""
    net = random_net(9)
    err = random_err(10)
    gains = ControllerGains(kappa=0.05)
    d = weight_derivatives(net, err, gains)

    z = net.W_in.T @ err.x_tilde + net.b_in
    sig = 1.0 / (1.0 + np.exp(-z))
    sig_hat = np.concatenate([sig, [1.0]])
    jac = np.vstack([np.diag(sig * (1 - sig)), np.zeros((1, 10))])
    Wb = np.vstack([net.W_out, net.b_out])
    Vb = np.vstack([net.W_in, net.b_in])
    h_e = err.r.reshape(1, 2)
    e_norm = np.linalg.norm(err.e)
    dWb = gains.Cw * (sig_hat - jac @ z).reshape(-1, 1) @ h_e \
        - gains.kappa * gains.Cw * e_norm * Wb
    x_aug = np.concatenate([err.x_tilde, [1.0]]).reshape(-1, 1)
    dVb = gains.Cv * x_aug @ h_e @ Wb.T @ jac \
        - gains.kappa * gains.Cv * e_norm * Vb

    assert d.W_out == pytest.approx(dWb[:10], rel=1e-12, abs=1e-12)
    assert d.b_out == pytest.approx(dWb[10], rel=1e-12, abs=1e-12)
    assert d.W_in == pytest.approx(dVb[:10], rel=1e-12, abs=1e-12)
    assert d.b_in == pytest.approx(dVb[10], rel=1e-12, abs=1e-12)


def test_decay_shrinks_output_weights_monotonically():
    # r = 0 but e != 0: only the decay term acts
    gains = ControllerGains(kappa=0.5)
    net = random_net(11)
    x = np.array([0.1, 0.0])
    plant = PlantState(x=x, xdot=-(gains.Lambda @ x))  # edot = -Lambda e
    ref = (np.zeros(2), np.zeros(2), np.zeros(2))
    err = error_state(plant, ref, gains)
    assert err.r == pytest.approx(np.zeros(2), abs=1e-14)

    W = np.vstack([net.W_out, net.b_out])
    norms = [np.linalg.norm(W)]
    state = net
    for _ in range(50):
        d = weight_derivatives(state, err, gains)
        state = NetworkParams(W_out=state.W_out + 1e-2 * d.W_out,
                              b_out=state.b_out + 1e-2 * d.b_out,
                              W_in=state.W_in + 1e-2 * d.W_in,
                              b_in=state.b_in + 1e-2 * d.b_in)
        norms.append(np.linalg.norm(np.vstack([state.W_out, state.b_out])))
    assert all(b < a for a, b in zip(norms, norms[1:]))


def test_robustifying_term_values():
    net = NetworkParams(W_out=np.zeros((10, 2)), b_out=np.zeros(2),
                        W_in=np.zeros((10, 10)), b_in=np.zeros(10))
    gains = ControllerGains(Zm=1.0)
    assert robustifying_term(net, 0.0, np.zeros(2), gains) \
        == pytest.approx(np.zeros(2))
    v = robustifying_term(net, 0.0, np.array([1.0, 0.0]), gains)
    assert v == pytest.approx(np.array([-10.0, 0.0]))


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0.1, 4.0))
def test_robustifying_term_linear_in_r(r1, r2, scale):
    net = random_net(12)
    r = np.array([r1, r2])
    v1 = robustifying_term(net, 2.0, r, GAINS)
    v2 = robustifying_term(net, 2.0, scale * r, GAINS)
    assert v2 == pytest.approx(scale * v1, rel=1e-9, abs=1e-9)


def test_total_torque_values_and_oddness():
    assert total_torque(np.zeros(2), np.zeros(2), np.zeros(2)) \
        == pytest.approx(np.zeros(2))
    # Kv = 20, r = (1, 0): baseline term is (-20, 0); torque flips it
    r = np.array([1.0, 0.0])
    u_bl = baseline_term(r, GAINS)
    assert u_bl == pytest.approx(np.array([-20.0, 0.0]))
    assert total_torque(u_bl, np.zeros(2), np.zeros(2)) \
        == pytest.approx(np.array([20.0, 0.0]))
    rng = np.random.default_rng(13)
    a, b, c = rng.normal(size=(3, 2))
    assert total_torque(-a, -b, -c) == pytest.approx(-total_torque(a, b, c))


def test_error_state_assembly():
    plant = PlantState(x=np.array([0.1, 0.2]), xdot=np.array([0.0, -0.1]))
    s = np.array([0.2, 0.2])
    sdot = np.array([0.0, -0.1])
    sddot = np.array([0.3, 0.4])
    err = error_state(plant, (s, sdot, sddot), GAINS)
    assert err.e == pytest.approx(np.array([0.1, 0.0]))
    assert err.edot == pytest.approx(np.zeros(2))
    assert err.r == pytest.approx(np.array([0.5, 0.0]))  # Lambda = 5 I
    assert err.x_tilde.shape == (10,)
    assert err.x_tilde == pytest.approx(
        np.concatenate([err.e, err.edot, s, sdot, sddot]))
    assert err.h_e is err.r


def test_perfect_tracking_gives_zero_errors():
    plant = PlantState(x=np.array([0.3, -0.4]), xdot=np.array([1.0, 2.0]))
    err = error_state(plant, (plant.x.copy(), plant.xdot.copy(), np.zeros(2)),
                      GAINS)
    assert err.e == pytest.approx(np.zeros(2))
    assert err.r == pytest.approx(np.zeros(2))


def test_init_network_shapes_and_determinism():
    a = init_network(14, seed=7)
    b = init_network(14, seed=7)
    c = init_network(14, seed=8)
    assert a.W_in.shape == (10, 14) and a.W_out.shape == (14, 2)
    assert np.all(a.W_out == 0.0) and np.all(a.b_out == 0.0)
    assert np.max(np.abs(a.W_in)) <= 0.1
    assert np.array_equal(a.W_in, b.W_in) and np.array_equal(a.b_in, b.b_in)
    assert not np.array_equal(a.W_in, c.W_in)
