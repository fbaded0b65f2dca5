import numpy as np
import pytest

from gclr import encoders
from gclr.errors import ConfigError, DegenerateEmbeddingError, ShapeError
from gclr.numerics import Rng
from tests.helpers import fd_gradient_check, tiny_arch


class TestInit:
    def test_same_seed_identical(self):
        arch = tiny_arch()
        a, b = encoders.init(arch, 5), encoders.init(arch, 5)
        for name in a.tensors:
            assert np.array_equal(a.tensors[name], b.tensors[name])

    def test_biases_zero(self):
        params = encoders.init(tiny_arch(), 1)
        for name, t in params.tensors.items():
            if ".b" in name:
                assert np.all(t == 0.0)

    def test_weight_spread_matches_uniform_std(self):
        arch = encoders.EncoderArch(d_img=100, d_txt=90, embed_dim=40, hidden_dim=120)
        params = encoders.init(arch, 2)
        w = params.tensors["image.w1"]  # 100 x 120 = 12000 entries
        assert w.size >= 10_000
        bound = 1.0 / np.sqrt(arch.d_img)
        theoretical = bound / np.sqrt(3.0)
        assert abs(np.std(w) - theoretical) / theoretical < 0.2
        assert np.max(np.abs(w)) <= bound


class TestForward:
    def test_identity_weight_linear_encoder(self):
        arch = encoders.EncoderArch(d_img=2, d_txt=2, embed_dim=2, hidden_dim=None)
        params = encoders.init(arch, 0)
        params.tensors["image.w1"] = np.eye(2)
        params.tensors["image.b1"] = np.zeros(2)
        emb, _ = encoders.forward(params, np.array([[3.0, 4.0]]), "image")
        assert np.allclose(emb, [[0.6, 0.8]], atol=1e-15)

    def test_duplicate_input_duplicates_embedding(self):
        params = encoders.init(tiny_arch(), 3)
        x = Rng(1).normal((4, 10))
        x[2] = x[0]
        emb, _ = encoders.forward(params, x, "image")
        assert np.array_equal(emb[2], emb[0])

    def test_forward_is_pure(self):
        params = encoders.init(tiny_arch(), 3)
        x = Rng(2).normal((5, 10))
        a, _ = encoders.forward(params, x, "image")
        b, _ = encoders.forward(params, x, "image")
        assert np.array_equal(a, b)

    def test_rows_unit_norm(self):
        params = encoders.init(tiny_arch(), 4)
        emb, _ = encoders.forward(params, Rng(3).normal((7, 10)), "image")
        assert np.max(np.abs(np.linalg.norm(emb, axis=1) - 1.0)) < 1e-12

    def test_wrong_input_dim(self):
        params = encoders.init(tiny_arch(), 0)
        with pytest.raises(ShapeError):
            encoders.forward(params, np.zeros((3, 4)), "image")

    def test_unknown_modality(self):
        params = encoders.init(tiny_arch(), 0)
        with pytest.raises(ConfigError):
            encoders.forward(params, np.zeros((3, 10)), "audio")

    def test_degenerate_embedding_rejected(self):
        arch = encoders.EncoderArch(d_img=3, d_txt=3, embed_dim=2, hidden_dim=None)
        params = encoders.init(arch, 0)
        params.tensors["image.w1"][:] = 0.0  # all-zero map -> zero pre-norm rows
        with pytest.raises(DegenerateEmbeddingError):
            encoders.forward(params, np.ones((2, 3)), "image")

    def test_normalization_can_be_disabled(self):
        arch = encoders.EncoderArch(d_img=4, d_txt=4, embed_dim=3, hidden_dim=None,
                                    normalize=False)
        params = encoders.init(arch, 1)
        emb, _ = encoders.forward(params, 5.0 * Rng(0).normal((4, 4)), "image")
        assert np.any(np.abs(np.linalg.norm(emb, axis=1) - 1.0) > 1e-3)


class TestBackward:
    def test_zero_upstream_zero_grads(self):
        params = encoders.init(tiny_arch(), 5)
        x = Rng(4).normal((6, 10))
        emb, tape = encoders.forward(params, x, "image")
        grads = encoders.backward(params, tape, np.zeros_like(emb))
        assert all(np.all(g == 0.0) for g in grads.values())

    @pytest.mark.parametrize("hidden", [True, False])
    def test_sum_loss_matches_finite_differences(self, hidden):
        arch = tiny_arch(hidden)
        params = encoders.init(arch, 6)
        x = Rng(5).normal((5, arch.d_img))

        def loss(w):
            p = encoders.unflatten(arch, w)
            emb, _ = encoders.forward(p, x, "image")
            return float(np.sum(emb))

        emb, tape = encoders.forward(params, x, "image")
        grads = encoders.backward(params, tape, np.ones_like(emb))
        analytic = encoders.grads_to_vector(arch, grads)
        w0 = encoders.flatten(params)
        coords = Rng(6).permutation(len(w0))[:40]
        assert fd_gradient_check(loss, analytic, w0, coords, eps=1e-5) < 1e-6

    def test_shape_mismatch(self):
        params = encoders.init(tiny_arch(), 0)
        _, tape = encoders.forward(params, Rng(0).normal((3, 10)), "image")
        with pytest.raises(ShapeError):
            encoders.backward(params, tape, np.zeros((4, 6)))

    def test_modalities_share_no_parameters(self):
        arch = tiny_arch()
        params = encoders.init(arch, 7)
        texts = Rng(8).normal((5, arch.d_txt))
        before, _ = encoders.forward(params, texts, "text")
        params.tensors["image.w1"][0, 0] += 0.5
        after, _ = encoders.forward(params, texts, "text")
        assert np.array_equal(before, after)


class TestFlatten:
    def test_round_trip(self):
        params = encoders.init(tiny_arch(), 8)
        again = encoders.unflatten(params.arch, encoders.flatten(params))
        for name in params.tensors:
            assert np.array_equal(params.tensors[name], again.tensors[name])

    def test_length_matches_count_formula(self):
        for hidden in (True, False):
            arch = tiny_arch(hidden)
            layers = []
            for d_in in (arch.d_img, arch.d_txt):
                if arch.hidden_dim is None:
                    layers.append((d_in, arch.embed_dim))
                else:
                    layers.append((d_in, arch.hidden_dim))
                    layers.append((arch.hidden_dim, arch.embed_dim))
            expected = sum((fan_in + 1) * fan_out for fan_in, fan_out in layers)
            assert encoders.param_count(arch) == expected
            assert len(encoders.flatten(encoders.init(arch, 0))) == expected

    def test_coordinate_perturbation_isolated(self):
        arch = tiny_arch()
        params = encoders.init(arch, 9)
        w = encoders.flatten(params)
        for coord in (0, 17, len(w) - 1):
            w2 = w.copy()
            w2[coord] += 1.0
            perturbed = encoders.unflatten(arch, w2)
            changed = 0
            for name in params.tensors:
                changed += int(
                    np.sum(perturbed.tensors[name] != params.tensors[name])
                )
            assert changed == 1

    def test_wrong_length_rejected(self):
        with pytest.raises(ShapeError):
            encoders.unflatten(tiny_arch(), np.zeros(3))

    def test_scale_invariant_groups_cover_final_layer(self):
        arch = tiny_arch()
        groups = encoders.scale_invariant_groups(arch)
        slices = encoders.param_slices(arch)
        assert groups[0] == (slices["image.w2"].start, slices["image.b2"].stop)
        assert groups[1] == (slices["text.w2"].start, slices["text.b2"].stop)
        no_norm = encoders.EncoderArch(d_img=4, d_txt=4, embed_dim=3, normalize=False)
        assert encoders.scale_invariant_groups(no_norm) == ()

    def test_scaling_final_layer_leaves_embeddings_unchanged(self):
        arch = tiny_arch()
        params = encoders.init(arch, 10)
        x = Rng(11).normal((4, arch.d_img))
        emb, _ = encoders.forward(params, x, "image")
        params.tensors["image.w2"] *= 3.0
        params.tensors["image.b2"] *= 3.0
        scaled, _ = encoders.forward(params, x, "image")
        assert np.max(np.abs(scaled - emb)) < 1e-12
