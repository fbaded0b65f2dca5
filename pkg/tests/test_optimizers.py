import numpy as np
import pytest

from gclr import data, encoders, objectives, optimizers
from gclr.errors import ConfigError, ShapeError
from gclr.numerics import Rng


class TestMomentum:
    def test_zero_gradient_leaves_params(self):
        state = optimizers.momentum_state(4)
        params = Rng(0).normal(4)
        _, new = optimizers.momentum_step(state, params, np.zeros(4))
        assert np.array_equal(new, params)

    def test_beta_one_is_plain_gradient_descent(self):
        state = optimizers.momentum_state(5, lr=0.1, beta=1.0)
        params = Rng(1).normal(5)
        grad = Rng(2).normal(5)
        new_state, new = optimizers.momentum_step(state, params, grad)
        assert np.array_equal(new_state.m1, grad)
        assert np.array_equal(new, params - 0.1 * grad)

    def test_constant_gradient_geometric_accumulation(self):
        beta = 0.3
        grad = Rng(3).normal(6)
        state = optimizers.momentum_state(6, beta=beta)
        params = np.zeros(6)
        for t in range(1, 21):
            state, params = optimizers.momentum_step(state, params, grad)
            expected = (1.0 - (1.0 - beta) ** t) * grad
            assert np.max(np.abs(state.m1 - expected)) < 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            optimizers.momentum_step(optimizers.momentum_state(3), np.zeros(4), np.zeros(4))


class TestAdamW:
    def test_step_magnitude_approaches_lr_under_constant_gradient(self):
        lr = 1e-3
        state = optimizers.adamw_state(4, lr=lr, weight_decay=0.0)
        params = np.zeros(4)
        grad = np.array([0.5, -0.2, 0.05, -1.0])
        prev = params
        for _ in range(200):
            prev = params
            state, params = optimizers.adamw_step(state, params, grad)
        step = params - prev
        assert np.max(np.abs(np.abs(step) - lr)) < 1e-5
        assert np.array_equal(np.sign(step), -np.sign(grad))

    def test_pure_weight_decay_when_gradient_zero(self):
        lr, wd = 0.01, 0.1
        state = optimizers.adamw_state(3, lr=lr, weight_decay=wd)
        params = np.array([1.0, -2.0, 3.0])
        for t in range(1, 11):
            state, params = optimizers.adamw_step(state, params, np.zeros(3))
            expected = np.array([1.0, -2.0, 3.0]) * (1.0 - lr * wd) ** t
            assert np.max(np.abs(params - expected)) < 1e-15

    def test_ten_step_trajectory_matches_scalar_reference(self):
        lr, b1, b2, eps, wd = 2e-3, 0.9, 0.999, 1e-8, 0.01
        rng = Rng(4)
        grads = [rng.child(t).normal(5) for t in range(10)]
        state = optimizers.adamw_state(5, lr=lr, beta1=b1, beta2=b2, eps=eps,
                                       weight_decay=wd)
        params = rng.child("w").normal(5)
        w_ref = params.copy()
        m = np.zeros(5)
        v = np.zeros(5)
        for t, g in enumerate(grads, start=1):
            state, params = optimizers.adamw_step(state, params, g)
            w_ref = w_ref * (1 - lr * wd)
            m = b1 * m + (1 - b1) * g
            v = b2 * v + (1 - b2) * g * g
            m_hat = m / (1 - b1**t)
            v_hat = v / (1 - b2**t)
            w_ref = w_ref - lr * m_hat / (np.sqrt(v_hat) + eps)
            assert np.max(np.abs(params - w_ref)) < 1e-12

    def test_inputs_not_mutated(self):
        state = optimizers.adamw_state(3)
        params = np.array([1.0, 2.0, 3.0])
        grad = np.array([0.1, 0.2, 0.3])
        optimizers.adamw_step(state, params, grad)
        assert np.array_equal(params, [1.0, 2.0, 3.0])
        assert np.all(state.m1 == 0.0) and state.step == 0


class TestAdamP:
    def test_no_groups_identical_to_adamw(self):
        rng = Rng(5)
        params_w = rng.child("w").normal(6)
        params_p = params_w.copy()
        sw = optimizers.adamw_state(6)
        sp = optimizers.adamp_state(6, scale_invariant=())
        for t in range(5):
            g = rng.child("g", t).normal(6)
            sw, params_w = optimizers.adamw_step(sw, params_w, g)
            sp, params_p = optimizers.adamp_step(sp, params_p, g)
        assert np.array_equal(params_w, params_p)

    def test_parallel_update_projected_perpendicular(self):
        w = np.ones(8)
        state = optimizers.adamp_state(8, ((0, 8),), weight_decay=0.0)
        _, new = optimizers.adamp_step(state, w, np.ones(8))
        step = new - w
        assert abs(step @ w) < 1e-10

    def test_projection_primitive(self):
        w = Rng(6).normal(10)
        u = 3.0 * w
        projected = optimizers.project_radial(u, w)
        assert np.max(np.abs(projected)) < 1e-12
        mixed = u + Rng(7).normal(10)
        assert abs(optimizers.project_radial(mixed, w) @ w) < 1e-10

    def test_norm_growth_bounded_by_adamw_on_real_objective(self):
        # on scale-invariant groups the true loss gradient is tangential, so
        # the radial drift AdamW accumulates is removed by the projection
        ds = data.generate(
            data.GenConfig(n=256, class_count=10, latent_dim=4, d_img=12,
                           d_txt=10, noise_sigma=0.3)
        )
        arch = encoders.EncoderArch(d_img=12, d_txt=10, embed_dim=8, hidden_dim=16)
        groups = encoders.scale_invariant_groups(arch)

        def run(rule):
            params = encoders.init(arch, seed=4)
            w = encoders.flatten(params)
            if rule == "adamw":
                st = optimizers.adamw_state(len(w), weight_decay=0.0)
            else:
                st = optimizers.adamp_state(len(w), groups, weight_decay=0.0)
            rng = Rng(7)
            for t in range(100):
                idx = rng.child("b", t).integers(0, ds.n, 32)
                p = encoders.unflatten(arch, w)
                _, grad = objectives.variant_batch_loss_and_gradient(
                    p, [ds.images[idx]], [ds.texts[idx]], 0.1, "sogclr"
                )
                st, w = optimizers.apply_step(st, w, grad)
            return w

        w_adamw = run("adamw")
        w_adamp = run("adamp")
        for a, b in groups:
            assert np.linalg.norm(w_adamp[a:b]) <= np.linalg.norm(w_adamw[a:b]) + 1e-12

    def test_gradient_tangential_on_scale_invariant_group(self):
        ds = data.generate(
            data.GenConfig(n=32, class_count=4, latent_dim=3, d_img=10,
                           d_txt=9, noise_sigma=0.3)
        )
        arch = encoders.EncoderArch(d_img=10, d_txt=9, embed_dim=6, hidden_dim=8)
        params = encoders.init(arch, 8)
        w = encoders.flatten(params)
        _, grad = objectives.variant_batch_loss_and_gradient(
            params, [ds.images], [ds.texts], 0.1, "sogclr"
        )
        for a, b in encoders.scale_invariant_groups(arch):
            cosine = abs(grad[a:b] @ w[a:b]) / (
                np.linalg.norm(grad[a:b]) * np.linalg.norm(w[a:b])
            )
            assert cosine < 1e-12


class TestValidation:
    def test_hyperparameter_ranges(self):
        with pytest.raises(ConfigError):
            optimizers.adamw_state(3, lr=0.0)
        with pytest.raises(ConfigError):
            optimizers.adamw_state(3, beta2=1.0)
        with pytest.raises(ConfigError):
            optimizers.adamw_state(3, weight_decay=-0.1)

    def test_determinism(self):
        state = optimizers.adamw_state(4)
        params = Rng(9).normal(4)
        grad = Rng(10).normal(4)
        a = optimizers.adamw_step(state, params, grad)
        b = optimizers.adamw_step(state, params, grad)
        assert np.array_equal(a[1], b[1])
        assert np.array_equal(a[0].m1, b[0].m1)
