"""GAN game oracle: dataset statistics, backprop checks, training plumbing."""

import numpy as np
import pytest

from dgopt.games import JointPoint
from dgopt.mog import (D_LAYOUT, G_LAYOUT, MogGanGame, _fd_hessian_vector,
                       gan_value_and_grads, mlp_backward, mlp_forward,
                       mode_coverage, sample_dataset, train_mog)


class TestDataset:
    def test_mode_counts_within_binomial_3_sigma(self):
        data = sample_dataset(seed=0, n=5000)
        expected = 5000 / 3
        sigma = np.sqrt(5000 * (1 / 3) * (2 / 3))
        for center in (-4.0, 0.0, 4.0):
            count = int(np.sum(np.abs(data - center) <= 0.5))
            assert abs(count - expected) <= 3 * sigma

    def test_samples_hug_the_centers(self):
        data = sample_dataset(seed=0, n=5000)
        dist = np.min(np.abs(data[:, None] - np.array([-4.0, 0.0, 4.0])), axis=1)
        outliers = int(np.sum(dist > 0.5))
        assert outliers <= 1  # > 4.9 sigma events

    def test_mean_near_zero(self):
        data = sample_dataset(seed=0, n=5000)
        assert abs(float(np.mean(data))) <= 0.2

    def test_deterministic(self):
        assert np.array_equal(sample_dataset(seed=3), sample_dataset(seed=3))


class TestModeCoverage:
    def test_point_mass(self):
        fracs = mode_coverage(np.zeros(100), window=0.5)
        assert fracs == (0.0, 1.0, 0.0)

    def test_real_dataset_is_balanced(self):
        data = sample_dataset(seed=1, n=5000)
        fracs = mode_coverage(data)
        for f in fracs:
            assert abs(f - 1 / 3) <= 0.03

    def test_uniform_spread(self):
        rng = np.random.default_rng(0)
        samples = rng.uniform(-6, 6, 200000)
        fracs = mode_coverage(samples, window=0.5)
        for f in fracs:
            assert f == pytest.approx(1 / 12, abs=0.005)

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            mode_coverage(np.array([]))
        with pytest.raises(ValueError, match="window"):
            mode_coverage(np.zeros(3), window=0.0)


class TestGanOracle:
    def test_constant_half_discriminator_value(self):
        game = MogGanGame(seed=2, n=500, dtype=np.float64)
        u, v0 = game.init_params()
        # zero the final discriminator layer: logit = 0 -> D = 1/2
        v = v0.copy()
        (w0, w1, _), (b0, b1, _) = D_LAYOUT.slices[-1]
        v[w0:w1] = 0.0
        v[b0:b1] = 0.0
        assert game.value(u, v) == pytest.approx(2 * np.log(0.5), rel=1e-12)

    def test_backprop_matches_fd_on_20_coordinates(self):
        game = MogGanGame(seed=2, n=400, dtype=np.float64)
        u, v = game.init_params()
        # move off the all-zero-bias init to a generic point
        rng = np.random.default_rng(5)
        u = u + 0.05 * rng.standard_normal(u.size)
        v = v + 0.05 * rng.standard_normal(v.size)
        _, gu, gv = gan_value_and_grads(game, u, v)
        h = 1e-6
        for params, grad, which in ((u, gu, "u"), (v, gv, "v")):
            coords = rng.choice(params.size, size=20, replace=False)
            for c in coords:
                e = np.zeros(params.size)
                e[c] = h
                if which == "u":
                    fd = (game.value(params + e, v) - game.value(params - e, v)) / (2 * h)
                else:
                    fd = (game.value(u, params + e) - game.value(u, params - e)) / (2 * h)
                assert abs(grad[c] - fd) <= max(1e-4 * abs(fd), 1e-9)

    def test_oracle_purity_bit_identical(self):
        game = MogGanGame(seed=4, n=300, dtype=np.float64)
        u, v = game.init_params()
        assert game.value(u, v) == game.value(u, v)
        assert np.array_equal(game.grad_u(u, v), game.grad_u(u, v))
        assert np.array_equal(game.grad_v(u, v), game.grad_v(u, v))

    def test_backprop_matches_fd_at_mid_training_checkpoint(self):
        # gradient check again after some training, away from the
        # zero-bias initialization geometry
        game = MogGanGame(seed=8, n=300, dtype=np.float64)
        log = train_mog("gda", seed=8, iterations=50, log_interval=50,
                        dtype=np.float64, game=game, lr_g=1e-2, lr_d=1e-2)
        u, v = log.final_u, log.final_v
        _, gu, gv = gan_value_and_grads(game, u, v)
        rng = np.random.default_rng(3)
        h = 1e-6
        for c in rng.choice(u.size, size=10, replace=False):
            e = np.zeros(u.size)
            e[c] = h
            fd = (game.value(u + e, v) - game.value(u - e, v)) / (2 * h)
            assert abs(gu[c] - fd) <= max(1e-4 * abs(fd), 1e-9)
        for c in rng.choice(v.size, size=10, replace=False):
            e = np.zeros(v.size)
            e[c] = h
            fd = (game.value(u, v + e) - game.value(u, v - e)) / (2 * h)
            assert abs(gv[c] - fd) <= max(1e-4 * abs(fd), 1e-9)

    def test_loss_finite_under_extreme_discriminator(self):
        # saturate the discriminator head; clamping keeps logs finite
        game = MogGanGame(seed=2, n=200, dtype=np.float64)
        u, v = game.init_params()
        v = v.copy()
        v[-1] = 200.0  # final bias drives D towards 1 everywhere
        val = game.value(u, v)
        assert np.isfinite(val)

    def test_layer_shapes(self):
        assert G_LAYOUT.sizes == (16, 64, 64, 1)
        assert D_LAYOUT.sizes == (1, 64, 64, 1)
        assert G_LAYOUT.dim == 16 * 64 + 64 + 64 * 64 + 64 + 64 + 1
        assert D_LAYOUT.dim == 1 * 64 + 64 + 64 * 64 + 64 + 64 + 1

    def test_mlp_backward_input_gradient(self):
        rng = np.random.default_rng(9)
        params = G_LAYOUT.init(rng, np.float64)
        x = rng.standard_normal((7, 16))
        out, acts = mlp_forward(G_LAYOUT, params, x)
        dout = rng.standard_normal(7)
        _, dx = mlp_backward(G_LAYOUT, params, acts, dout, np.float64)
        h = 1e-6
        for i, j in ((0, 3), (4, 11), (6, 0)):
            xp = x.copy(); xp[i, j] += h
            xm = x.copy(); xm[i, j] -= h
            fd = ((mlp_forward(G_LAYOUT, params, xp)[0] * dout).sum()
                  - (mlp_forward(G_LAYOUT, params, xm)[0] * dout).sum()) / (2 * h)
            assert dx[i, j] == pytest.approx(fd, rel=1e-6, abs=1e-9)


class TestCoHessianVector:
    def test_fd_hvp_matches_exact_on_quadratic_micro_game(self):
        """A 2+2-parameter bilinear-quadratic game with a known Hessian:
        the FD product along the gradient must match H @ grad."""

        class MicroGame:
            dim_u = 2
            dim_v = 2

            def __init__(self):
                # M(u, v) = 0.5 u^T A u - 0.5 v^T B v + u^T C v
                self.A = np.array([[2.0, 0.5], [0.5, 1.0]])
                self.B = np.array([[1.5, -0.2], [-0.2, 0.8]])
                self.C = np.array([[0.7, -0.3], [0.1, 0.9]])

            def grad_u(self, u, v):
                return self.A @ u + self.C @ v

            def grad_v(self, u, v):
                return -self.B @ v + self.C.T @ u

            def joint_grad(self, p):
                return np.concatenate([self.grad_u(p.u, p.v),
                                       self.grad_v(p.u, p.v)])

        game = MicroGame()
        rng = np.random.default_rng(2)
        u, v = rng.standard_normal(2), rng.standard_normal(2)
        p = JointPoint(u, v)
        g = game.joint_grad(p)
        hess = np.block([[game.A, game.C], [game.C.T, -game.B]])
        want = hess @ g
        got = _fd_hessian_vector(game, p, g)
        assert np.max(np.abs(got - want)) < 1e-6

    def test_zero_direction_returns_zero(self):
        game = MogGanGame(seed=2, n=100, dtype=np.float64)
        u, v = game.init_params()
        out = _fd_hessian_vector(game, JointPoint(u, v),
                                 np.zeros(game.dim_u + game.dim_v))
        assert np.all(out == 0.0)


class TestTrainingPlumbing:
    def test_short_run_log_structure(self):
        log = train_mog("gda", seed=1, iterations=20, log_interval=10,
                        dtype=np.float32, n=300)
        assert log.status == "ok"
        assert [int(r[0]) for r in log.rows] == [0, 10, 20]
        assert log.final_samples.shape == (1000,)
        assert log.final_histogram.shape == (121,)
        for row in log.rows:
            assert all(np.isfinite(x) for x in row[1:])

    def test_full_batch_determinism(self):
        runs = [train_mog("dg", seed=6, iterations=6, log_interval=3,
                          dtype=np.float32, n=200, dg_k=3) for _ in range(2)]
        for r1, r2 in zip(runs[0].rows, runs[1].rows):
            assert r1 == r2
        assert np.array_equal(runs[0].final_samples, runs[1].final_samples)

    def test_unknown_algorithm_rejected(self):
        with pytest.raises(ValueError, match="unknown algorithm"):
            train_mog("adam", seed=0, iterations=1)

    def test_csv_outputs(self, tmp_path):
        log = train_mog("eg", seed=3, iterations=10, log_interval=5,
                        dtype=np.float32, n=200)
        log.write_csv(tmp_path / "log.csv")
        log.write_samples_csv(tmp_path / "samples.csv")
        log.write_histogram_csv(tmp_path / "hist.csv")
        header = (tmp_path / "log.csv").read_text().splitlines()[0]
        assert header == ("iter,value,grad_u_norm,grad_v_norm,dg_metric,"
                          "mode_frac_m4,mode_frac_0,mode_frac_4,"
                          "disc_real_median,disc_fake_median")
        assert len((tmp_path / "samples.csv").read_text().splitlines()) == 1001
        assert len((tmp_path / "hist.csv").read_text().splitlines()) == 122
