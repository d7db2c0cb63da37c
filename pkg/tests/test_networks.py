"""Shallow ReLU network forward pass, parameter gradients, and initializers."""

import numpy as np
import pytest

from neurofem.network import (
    ShallowNet,
    from_vector,
    net_from_json,
    net_to_json,
    nn_forward,
    nn_forward_dx,
    nn_interpolate_init,
    nn_param_gradient,
    nn_param_gradient_batch,
    nn_param_gradient_dx_batch,
    random_net,
    to_vector,
)


def xi_bar(x):
    """Closed-form control target recovering the weight 1 + sin(pi x / 2)."""
    return -np.log(2.0 / (np.sin(np.pi * x / 2.0) + 0.5) - 1.0)


class TestForward:
    def test_relu_identity_on_positives(self):
        net = ShallowNet(W=[[1.0]], b=[0.0], c=[1.0])
        assert abs(nn_forward(net, 0.7) - 0.7) < 1e-15

    def test_plateau_hat(self):
        net = ShallowNet(W=[[1.0], [1.0]], b=[0.0, -0.5], c=[1.0, -1.0])
        assert abs(nn_forward(net, 0.8) - 0.5) < 1e-15

    def test_zero_output_layer(self):
        net = ShallowNet(W=[[1.0], [-2.0]], b=[0.3, 0.1], c=[0.0, 0.0])
        for x in (-1.0, 0.0, 2.3):
            assert nn_forward(net, x) == 0.0

    def test_batch_matches_scalar(self):
        net = random_net(5, seed=3)
        xs = np.linspace(-1, 2, 13)
        batch = nn_forward(net, xs)
        np.testing.assert_allclose(batch, [nn_forward(net, float(x)) for x in xs])

    def test_2d_input(self):
        net = ShallowNet(W=[[1.0, 2.0]], b=[-0.5], c=[3.0])
        assert abs(nn_forward(net, np.array([0.5, 0.25])) - 3.0 * 0.5) < 1e-15

    def test_c_scaling_homogeneity(self):
        net = random_net(6, seed=11)
        scaled = ShallowNet(W=net.W.copy(), b=net.b.copy(), c=3.0 * net.c)
        xs = np.linspace(-0.5, 1.5, 50)
        np.testing.assert_allclose(
            nn_forward(scaled, xs), 3.0 * nn_forward(net, xs), atol=1e-13
        )

    def test_lipschitz_bound_sampled(self):
        rng = np.random.default_rng(4)
        net = random_net(8, seed=4)
        L = np.sum(np.abs(net.c) * np.abs(net.W[:, 0]))
        xs = rng.uniform(-2, 2, size=(200, 2))
        vals = nn_forward(net, xs.ravel()).reshape(200, 2)
        diffs = np.abs(vals[:, 0] - vals[:, 1])
        assert np.all(diffs <= L * np.abs(xs[:, 0] - xs[:, 1]) + 1e-12)


class TestParamVector:
    def test_round_trip(self):
        net = random_net(4, seed=9)
        back = from_vector(to_vector(net), 4)
        np.testing.assert_array_equal(back.W, net.W)
        np.testing.assert_array_equal(back.b, net.b)
        np.testing.assert_array_equal(back.c, net.c)

    def test_canonical_length(self):
        assert random_net(5, input_dim=1).n_params == 15
        assert random_net(5, input_dim=2).n_params == 20

    def test_json_round_trip(self):
        net = random_net(3, input_dim=2, seed=1)
        back = net_from_json(net_to_json(net))
        np.testing.assert_allclose(to_vector(back), to_vector(net))

    def test_wrong_length_rejected(self):
        with pytest.raises(ValueError):
            from_vector(np.zeros(10), 4)


class TestParamGradient:
    def test_hand_chain_rule(self):
        # xi = c * relu(W x + b) at x = 0.5 with W=1, b=0, c=2:
        # d/dW = c * x = 1.0, d/db = c = 2.0, d/dc = relu(0.5) = 0.5
        net = ShallowNet(W=[[1.0]], b=[0.0], c=[2.0])
        g = nn_param_gradient(net, 0.5)
        np.testing.assert_allclose(g, [1.0, 2.0, 0.5])

    def test_dead_neuron_has_zero_partials(self):
        net = ShallowNet(W=[[1.0]], b=[-2.0], c=[5.0])
        g = nn_param_gradient(net, 0.5)  # preactivation -1.5 < 0
        np.testing.assert_array_equal(g, [0.0, 0.0, 0.0])

    def test_finite_difference_agreement(self):
        rng = np.random.default_rng(42)
        step = 1e-6
        for trial in range(100):
            n = int(rng.integers(1, 6))
            net = random_net(n, seed=1000 + trial)
            x = float(rng.uniform(-1, 1))
            theta = to_vector(net)
            g = nn_param_gradient(net, x)
            fd = np.empty_like(theta)
            for k in range(len(theta)):
                tp, tm = theta.copy(), theta.copy()
                tp[k] += step
                tm[k] -= step
                fd[k] = (
                    nn_forward(from_vector(tp, n), x)
                    - nn_forward(from_vector(tm, n), x)
                ) / (2 * step)
            scale = max(np.linalg.norm(fd), 1.0)
            assert np.linalg.norm(g - fd) / scale < 1e-7, f"trial {trial}"

    def test_batch_matches_single(self):
        net = random_net(4, seed=2)
        xs = np.linspace(-1, 1, 7)
        batch = nn_param_gradient_batch(net, xs)
        for i, x in enumerate(xs):
            np.testing.assert_allclose(batch[i], nn_param_gradient(net, float(x)))

    def test_2d_gradient_finite_difference(self):
        rng = np.random.default_rng(5)
        net = random_net(3, input_dim=2, seed=5)
        x = rng.uniform(-1, 1, size=2)
        theta = to_vector(net)
        g = nn_param_gradient(net, x)
        step = 1e-6
        fd = np.empty_like(theta)
        for k in range(len(theta)):
            tp, tm = theta.copy(), theta.copy()
            tp[k] += step
            tm[k] -= step
            fd[k] = (
                nn_forward(from_vector(tp, 3, 2), x)
                - nn_forward(from_vector(tm, 3, 2), x)
            ) / (2 * step)
        np.testing.assert_allclose(g, fd, atol=1e-7)


class TestSpatialDerivative:
    def test_piecewise_slope(self):
        net = ShallowNet(W=[[2.0]], b=[-1.0], c=[3.0])
        assert nn_forward_dx(net, 1.0) == 6.0  # active: slope c*W
        assert nn_forward_dx(net, 0.0) == 0.0  # inactive

    def test_dx_param_gradient_matches_fd(self):
        net = random_net(5, seed=8)
        xs = np.array([0.21, 0.47, 0.83])  # generic points away from kinks
        G = nn_param_gradient_dx_batch(net, xs)
        theta = to_vector(net)
        step = 1e-6
        for i, x in enumerate(xs):
            fd = np.empty_like(theta)
            for k in range(len(theta)):
                tp, tm = theta.copy(), theta.copy()
                tp[k] += step
                tm[k] -= step
                fd[k] = (
                    nn_forward_dx(from_vector(tp, 5), float(x))
                    - nn_forward_dx(from_vector(tm, 5), float(x))
                ) / (2 * step)
            np.testing.assert_allclose(G[i], fd, atol=1e-7)


class TestInterpolationInit:
    def test_linear_target_reproduced_everywhere(self):
        net = nn_interpolate_init(lambda x: x, 4)
        xs = np.linspace(0, 1, 101)
        np.testing.assert_allclose(nn_forward(net, xs), xs, atol=1e-12)

    def test_nodal_match_on_curved_target(self):
        n = 9
        net = nn_interpolate_init(xi_bar, n)
        nodes = np.linspace(0, 1, n)
        np.testing.assert_allclose(
            nn_forward(net, nodes), xi_bar(nodes), atol=1e-12
        )
        assert abs(xi_bar(1.0) - np.log(3.0)) < 1e-12

    def test_zero_target(self):
        net = nn_interpolate_init(lambda x: 0.0, 5)
        xs = np.linspace(0, 1, 37)
        np.testing.assert_allclose(nn_forward(net, xs), 0.0, atol=1e-13)

    def test_piecewise_linearity_between_nodes(self):
        n = 6
        net = nn_interpolate_init(np.cos, n)
        nodes = np.linspace(0, 1, n)
        mids = 0.5 * (nodes[:-1] + nodes[1:])
        expected = 0.5 * (np.cos(nodes[:-1]) + np.cos(nodes[1:]))
        np.testing.assert_allclose(nn_forward(net, mids), expected, atol=1e-12)

    def test_too_few_neurons_rejected(self):
        with pytest.raises(ValueError):
            nn_interpolate_init(lambda x: x, 1)


class TestRandomInit:
    def test_seeded_determinism(self):
        a = random_net(6, seed=123)
        b = random_net(6, seed=123)
        np.testing.assert_array_equal(to_vector(a), to_vector(b))

    def test_ranges(self):
        net = random_net(200, seed=0)
        assert np.all(np.abs(net.W) <= 1.0) and np.all(np.abs(net.b) <= 1.0)
        assert np.all(np.abs(net.c) <= 0.5)
