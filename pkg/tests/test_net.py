import numpy as np
import pytest

from greenlift.net import (AdamState, MlpParams, NonFiniteLossError, adam_step,
                           flat_to_params, forward, forward_batch, forward_jet,
                           init_params, jet_batch, load_checkpoint, loss_grad,
                           params_to_flat, save_checkpoint)
from greenlift.net import backend_kernels, kernels_numpy


def zero_net(input_dim=3, width=4):
    return MlpParams(input_dim=input_dim,
                     weights=[np.zeros((width, input_dim)), np.zeros((1, width))],
                     biases=[np.zeros(width), np.zeros(1)])


def fd_grad(f, x, eps):
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = eps
        g[i] = (f(x + e) - f(x - e)) / (2 * eps)
    return g


def fd_hess(f, x, eps):
    d = x.size
    h = np.zeros((d, d))
    for i in range(d):
        for j in range(d):
            ei = np.zeros_like(x); ei[i] = eps
            ej = np.zeros_like(x); ej[j] = eps
            h[i, j] = (f(x + ei + ej) - f(x + ei - ej)
                       - f(x - ei + ej) + f(x - ei - ej)) / (4 * eps * eps)
    return h


class TestForward:
    def test_zero_network_outputs_zero(self):
        p = zero_net()
        assert forward(p, np.array([0.3, -0.2, 1.7])) == 0.0

    def test_single_affine_layer(self):
        # weights [1,2,3], no hidden activation on the output layer
        p = MlpParams(input_dim=3, weights=[np.array([[1.0, 2.0, 3.0]])],
                      biases=[np.zeros(1)])
        assert forward(p, np.array([1.0, 1.0, 1.0])) == 6.0

    def test_repeat_calls_bitwise_equal(self):
        p = init_params(3, [8, 8], np.random.default_rng(5))
        x = np.array([0.1, 0.9, 0.4])
        assert forward(p, x) == forward(p, x)
        X = np.random.default_rng(6).uniform(size=(11, 3))
        assert np.array_equal(forward_batch(p, X), forward_batch(p, X))

    def test_dimension_mismatch_raises(self):
        p = init_params(3, [4], np.random.default_rng(0))
        with pytest.raises(ValueError):
            forward(p, np.array([1.0, 2.0]))
        with pytest.raises(ValueError):
            forward_batch(p, np.ones((5, 4)))

    def test_unsupported_activation_rejected(self):
        with pytest.raises(ValueError, match="activation"):
            MlpParams(input_dim=2, weights=[np.zeros((1, 2))],
                      biases=[np.zeros(1)], activation="relu")


class TestJets:
    def test_affine_net_jet(self):
        p = MlpParams(input_dim=3, weights=[np.array([[2.0, -1.0, 0.5]])],
                      biases=[np.zeros(1)])
        jet = forward_jet(p, np.array([0.3, 0.4, 0.5]))
        assert np.allclose(jet.grad, [2.0, -1.0, 0.5])
        assert np.allclose(jet.hess, 0.0)

    def test_random_net_matches_finite_differences(self):
        rng = np.random.default_rng(42)
        p = init_params(3, [8, 8], rng)
        x = np.array([0.3, 0.7, 0.4])
        jet = forward_jet(p, x)
        f = lambda z: forward(p, z)
        g = fd_grad(f, x, 1e-4)
        h = fd_hess(f, x, 1e-4)
        assert np.abs(jet.grad - g).max() / (1 + np.abs(jet.grad).max()) < 1e-6
        assert np.abs(jet.hess - h).max() / (1 + np.abs(jet.hess).max()) < 1e-6

    def test_jet_consistency_100_random_nets(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            d = int(rng.integers(2, 6))
            widths = [int(rng.integers(2, 17)) for _ in range(int(rng.integers(1, 5)))]
            p = init_params(d, widths, rng)
            x = rng.uniform(-1, 1, size=d)
            jet = forward_jet(p, x)
            f = lambda z: forward(p, z)
            g = fd_grad(f, x, 1e-4)
            h = fd_hess(f, x, 1e-4)
            assert np.abs(jet.grad - g).max() / (1 + np.abs(jet.grad).max()) < 1e-6
            assert np.abs(jet.hess - h).max() / (1 + np.abs(jet.hess).max()) < 1e-6

    def test_hessian_bitwise_symmetric(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            d = int(rng.integers(2, 6))
            p = init_params(d, [int(rng.integers(2, 16))], rng)
            jet = forward_jet(p, rng.uniform(-1, 1, size=d))
            assert np.array_equal(jet.hess, jet.hess.T)

    def test_value_matches_forward(self):
        p = init_params(4, [6], np.random.default_rng(3))
        x = np.array([0.1, 0.2, 0.3, 0.4])
        assert forward_jet(p, x).value == forward(p, x)

    def test_restricted_dirs_match_full_jet(self):
        p = init_params(5, [7, 7], np.random.default_rng(9))
        X = np.random.default_rng(10).uniform(size=(6, 5))
        v, g, h = jet_batch(p, X, 2)
        v2, g2, h2 = jet_batch(p, X, 2, dirs=(1, 2, 4))
        assert np.allclose(v, v2, rtol=1e-15)
        assert np.allclose(g[:, [1, 2, 4]], g2, rtol=1e-13, atol=1e-15)
        assert np.allclose(h[:, [1, 2, 4]][:, :, [1, 2, 4]], h2, rtol=1e-13, atol=1e-15)


class TestLossGrad:
    def test_zero_net_square_loss_zero_grad(self):
        p = zero_net()
        x = np.array([[0.5, 0.5, 0.5]])
        val, grad = loss_grad(p, lambda net: (net.forward(x) ** 2).mean())
        assert val == 0.0
        assert all(np.all(g == 0.0) for g in grad.weights + grad.biases)

    def _fd_check(self, p, loss_fn, step=1e-5, tol=1e-4):
        val, grad = loss_grad(p, loss_fn)
        flat = params_to_flat(p)
        gflat = grad.ravel()
        for i in range(flat.size):
            vp = flat.copy(); vp[i] += step
            vm = flat.copy(); vm[i] -= step
            lp, _ = loss_grad(flat_to_params(p, vp), loss_fn)
            lm, _ = loss_grad(flat_to_params(p, vm), loss_fn)
            fd = (lp - lm) / (2 * step)
            assert abs(gflat[i] - fd) / (1 + abs(gflat[i])) < tol, i

    def test_r_derivative_squared_loss_matches_fd(self):
        rng = np.random.default_rng(11)
        p = init_params(3, [5, 5], rng)
        X = rng.uniform(0.1, 0.9, size=(4, 3))

        def loss_fn(net):
            _, g = net.jet(X, 1, dirs=(2,))
            return (g[:, 0] ** 2).mean()

        self._fd_check(p, loss_fn)

    def test_second_derivative_loss_matches_fd(self):
        rng = np.random.default_rng(12)
        p = init_params(3, [4, 4], rng)
        X = rng.uniform(0.1, 0.9, size=(3, 3))

        def loss_fn(net):
            v, g, h = net.jet(X, 2)
            r = v - 0.3 * g[:, 1] + h[:, 1, 1] + 2.0 * h[:, 1, 2] + h[:, 2, 2]
            return (r ** 2).mean()

        self._fd_check(p, loss_fn)

    def test_dead_unit_gets_zero_gradient(self):
        rng = np.random.default_rng(13)
        p = init_params(2, [3], rng)
        p.weights[1][0, 1] = 0.0  # unit 1 of the hidden layer feeds nothing
        X = rng.uniform(size=(5, 2))
        _, grad = loss_grad(p, lambda net: (net.forward(X) ** 2).mean())
        assert np.all(grad.weights[0][1, :] == 0.0)
        assert grad.biases[0][1] == 0.0

    def test_non_finite_loss_raises(self):
        p = zero_net()
        X = np.ones((1, 3))

        def loss_fn(net):
            return net.forward(X).mean() * np.inf

        with pytest.raises(NonFiniteLossError):
            loss_grad(p, loss_fn)


class TestAdam:
    def test_zero_gradient_leaves_params(self):
        p = init_params(2, [3], np.random.default_rng(0))
        state = AdamState(lr=0.1)
        p2, state = adam_step(p, p.zeros_like(), state)
        assert state.step == 1
        for a, b in zip(p.weights + p.biases, p2.weights + p2.biases):
            assert np.array_equal(a, b)

    def test_first_step_is_signed_lr(self):
        p = zero_net(input_dim=2, width=2)
        g = p.zeros_like()
        for arr in g.weights + g.biases:
            arr[...] = 3.7  # arbitrary nonzero constant
        p2, _ = adam_step(p, g, AdamState(lr=0.1))
        for arr in p2.weights + p2.biases:
            assert np.allclose(arr, -0.1, rtol=1e-7)

    def test_two_runs_identical(self):
        def run():
            rng = np.random.default_rng(21)
            p = init_params(2, [4], rng)
            state = AdamState(lr=1e-2)
            X = rng.uniform(size=(8, 2))
            for _ in range(20):
                _, grad = loss_grad(p, lambda net: ((net.forward(X) - 1.0) ** 2).mean())
                p, state = adam_step(p, grad, state)
            return params_to_flat(p)

        a, b = run(), run()
        assert np.array_equal(a, b)


class TestCheckpoint:
    def test_round_trip_bit_exact(self, tmp_path):
        p = init_params(5, [7, 3], np.random.default_rng(33))
        path = str(tmp_path / "net.ngf")
        save_checkpoint(path, p, metadata={"problem": "interface", "alpha": 0.0})
        q, meta = load_checkpoint(path)
        assert q.input_dim == 5 and q.activation == "tanh"
        for a, b in zip(p.weights + p.biases, q.weights + q.biases):
            assert np.array_equal(a, b)
        assert meta["problem"] == "interface"

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.ngf"
        path.write_bytes(b"NOPE" + b"\x00" * 40)
        with pytest.raises(ValueError, match="magic"):
            load_checkpoint(str(path))


@pytest.mark.skipif(backend_kernels.BACKEND != "compiled",
                    reason="compiled extension not built")
class TestBackendTwins:
    def test_kernels_agree(self):
        from greenlift.net import _speedups
        rng = np.random.default_rng(4)
        for m, order in ((2, 2), (3, 2), (1, 1), (3, 1)):
            c = 1 + m + (m * m if order == 2 else 0)
            A = rng.standard_normal((9, c, 12))
            T = np.tanh(A[:, 0, :])
            Z1 = np.empty_like(A); Z2 = np.empty_like(A)
            kernels_numpy.tanh_jet(A, Z1, T, m, order)
            _speedups.tanh_jet(A, Z2, T, m, order)
            assert np.allclose(Z1, Z2, rtol=1e-14, atol=1e-16)
            Zb = rng.standard_normal(A.shape)
            B1 = np.empty_like(A); B2 = np.empty_like(A)
            kernels_numpy.tanh_jet_vjp(A, Zb, B1, T, m, order)
            _speedups.tanh_jet_vjp(A, Zb, B2, T, m, order)
            assert np.allclose(B1, B2, rtol=1e-13, atol=1e-15)
