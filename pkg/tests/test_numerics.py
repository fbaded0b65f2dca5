import math

import numpy as np
import pytest

from gclr.errors import DegenerateEmbeddingError, ShapeError
from gclr.numerics import Rng, logsumexp_rows, matmul, row_l2_normalize


def naive_matmul(a, b):
    out = np.zeros((a.shape[0], b.shape[1]))
    for i in range(a.shape[0]):
        for j in range(b.shape[1]):
            acc = 0.0
            for k in range(a.shape[1]):
                acc += a[i, k] * b[k, j]
            out[i, j] = acc
    return out


class TestMatmul:
    def test_identity(self):
        m = Rng(0).normal((3, 5))
        assert np.array_equal(matmul(np.eye(3), m), m)

    def test_hand_2x2(self):
        out = matmul(np.array([[1.0, 2.0], [3.0, 4.0]]), np.array([[0.0], [1.0]]))
        assert np.array_equal(out, np.array([[2.0], [4.0]]))

    def test_against_triple_loop(self):
        rng = Rng(1)
        a = rng.child("a").normal((5, 7))
        b = rng.child("b").normal((7, 3))
        assert np.max(np.abs(matmul(a, b) - naive_matmul(a, b))) < 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(ShapeError):
            matmul(np.zeros((2, 3)), np.zeros((2, 3)))

    def test_associativity(self):
        rng = Rng(2)
        a = rng.child("a").normal((4, 5))
        b = rng.child("b").normal((5, 6))
        c = rng.child("c").normal((6, 3))
        left = matmul(matmul(a, b), c)
        right = matmul(a, matmul(b, c))
        assert np.max(np.abs(left - right)) < 1e-10


class TestRowNormalize:
    def test_three_four_five(self):
        out = row_l2_normalize(np.array([[3.0, 4.0]]))
        assert np.allclose(out, [[0.6, 0.8]], atol=1e-15)

    def test_idempotent(self):
        m = row_l2_normalize(Rng(3).normal((6, 4)))
        again = row_l2_normalize(m)
        assert np.max(np.abs(again - m)) < 1e-15

    def test_unit_norms(self):
        out = row_l2_normalize(Rng(4).normal((8, 4)))
        norms = np.linalg.norm(out, axis=1)
        assert np.all(np.abs(norms - 1.0) < 1e-12)

    def test_zero_row_rejected(self):
        with pytest.raises(DegenerateEmbeddingError):
            row_l2_normalize(np.array([[1.0, 2.0], [0.0, 0.0]]))


class TestLogsumexp:
    def test_two_zeros(self):
        assert abs(logsumexp_rows(np.array([[0.0, 0.0]]))[0] - math.log(2)) < 1e-15

    def test_no_overflow(self):
        out = logsumexp_rows(np.array([[1000.0, 1000.0]]))
        assert abs(out[0] - (1000.0 + math.log(2))) < 1e-12

    def test_against_high_precision(self):
        import mpmath

        mpmath.mp.dps = 50
        row = Rng(5).uniform(-30, 30, (1, 12))
        mine = logsumexp_rows(row)[0]
        exact = float(mpmath.log(mpmath.fsum(mpmath.exp(x) for x in row[0])))
        assert abs(mine - exact) / abs(exact) < 1e-12

    def test_shift_invariance(self):
        m = Rng(6).normal((5, 7))
        c = 3.7
        shifted = logsumexp_rows(m + c)
        assert np.max(np.abs(shifted - (logsumexp_rows(m) + c))) < 1e-12

    def test_masked_minus_inf(self):
        m = np.array([[0.0, -np.inf, 1.0]])
        expected = math.log(math.exp(0.0) + math.exp(1.0))
        assert abs(logsumexp_rows(m)[0] - expected) < 1e-14

    def test_empty_rejected(self):
        with pytest.raises(ShapeError):
            logsumexp_rows(np.zeros((0, 0)))


class TestRng:
    def test_fixed_seed_byte_identical(self):
        assert Rng(42).bytes(64) == Rng(42).bytes(64)
        assert Rng(42).bytes(64) != Rng(43).bytes(64)

    def test_child_streams_deterministic(self):
        a = Rng(7).child("augment", 3, 11).bytes(32)
        b = Rng(7).child("augment", 3, 11).bytes(32)
        assert a == b

    def test_child_streams_distinct(self):
        base = Rng(7)
        assert base.child("x", 1).bytes(16) != base.child("x", 2).bytes(16)
        assert base.child(1, 2).bytes(16) != base.child(2, 1).bytes(16)
        assert base.child("a").bytes(16) != base.child("b").bytes(16)

    def test_consuming_parent_does_not_shift_child(self):
        a = Rng(9)
        a.normal(100)
        assert a.child("k").bytes(16) == Rng(9).child("k").bytes(16)

    def test_rejects_bad_key_type(self):
        with pytest.raises(TypeError):
            Rng(0).child(1.5)

    def test_equality_by_key_path(self):
        assert Rng(1).child("a", 2) == Rng(1).child("a", 2)
        assert Rng(1).child("a") != Rng(1).child("b")
