import numpy as np
import pytest

from gclr import evaluation
from gclr.errors import ConfigError, ShapeError
from gclr.evaluation import MetricsRecord, retrieval_topk, zero_shot_classify
from gclr.numerics import Rng
from tests.helpers import random_unit_rows


class TestRetrieval:
    def test_self_retrieval_is_perfect(self):
        emb = random_unit_rows(Rng(0), 20, 6)
        rec = retrieval_topk(emb, emb, np.arange(20), "retrieval_text")
        assert rec.top1 == 100.0 and rec.top10 == 100.0

    def test_random_embeddings_match_binomial_baseline(self):
        rng = Rng(1)
        n_q, gallery = 2000, 100
        q = random_unit_rows(rng.child("q"), n_q, 8)
        g = random_unit_rows(rng.child("g"), gallery, 8)
        truth = np.asarray(rng.child("t").integers(0, gallery, n_q))
        rec = retrieval_topk(q, g, truth, "retrieval_text")
        for k, value in ((1, rec.top1), (5, rec.top5), (10, rec.top10)):
            p = k / gallery
            sigma = 100.0 * np.sqrt(p * (1 - p) / n_q)
            assert abs(value - 100.0 * p) < 3 * sigma, (k, value)

    def test_hand_built_ranking(self):
        # gallery along axes; queries with known nearest order
        gallery = np.eye(3)
        queries = np.array(
            [
                [0.9, 0.1, 0.0],  # truth 0 ranks 1st
                [0.2, 0.8, 0.0],  # truth 0 ranks 2nd (behind gallery 1)
                [0.1, 0.3, 0.6],  # truth 1 ranks 2nd (behind gallery 2)
            ]
        )
        top1, top2 = evaluation._topk_percentages(
            queries @ gallery.T, np.array([0, 0, 1]), ks=(1, 2)
        )
        assert top1 == pytest.approx(100.0 / 3)  # only query 0 has truth ranked 1st
        assert top2 == pytest.approx(100.0)  # every truth ranks within the top 2

    def test_tie_broken_by_lower_index(self):
        gallery = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])  # 0 and 1 tie
        queries = np.array([[1.0, 0.0]])
        wins = retrieval_topk(queries, gallery, np.array([0]), "retrieval_text", ks=(1, 2, 3))
        assert wins.top1 == 100.0  # truth index 0 beats the tied index 1
        loses = retrieval_topk(queries, gallery, np.array([1]), "retrieval_text", ks=(1, 2, 3))
        assert loses.top1 == 0.0  # the tied lower index 0 outranks truth 1

    def test_permutation_invariance(self):
        rng = Rng(2)
        q = random_unit_rows(rng.child("q"), 30, 5)
        g = random_unit_rows(rng.child("g"), 40, 5)
        truth = np.asarray(rng.child("t").integers(0, 40, 30))
        base = retrieval_topk(q, g, truth, "retrieval_text")
        perm = rng.child("p").permutation(30)
        shuffled = retrieval_topk(q[perm], g, truth[perm], "retrieval_text")
        assert (base.top1, base.top5, base.top10) == (
            shuffled.top1, shuffled.top5, shuffled.top10,
        )

    def test_swapping_modalities_swaps_tasks_symmetrically(self):
        rng = Rng(3)
        a = random_unit_rows(rng.child("a"), 25, 6)
        b = random_unit_rows(rng.child("b"), 25, 6)
        truth = np.arange(25)
        text_side = retrieval_topk(a, b, truth, "retrieval_text")
        image_side = retrieval_topk(b, a, truth, "retrieval_image")
        swapped_text = retrieval_topk(b, a, truth, "retrieval_text")
        assert (image_side.top1, image_side.top5, image_side.top10) == (
            swapped_text.top1, swapped_text.top5, swapped_text.top10,
        )
        assert text_side.task == "retrieval_text"

    def test_k_exceeding_gallery_rejected(self):
        emb = random_unit_rows(Rng(4), 5, 4)
        with pytest.raises(ConfigError):
            retrieval_topk(emb, emb, np.arange(5), "retrieval_text", ks=(1, 5, 10))

    def test_shape_validation(self):
        with pytest.raises(ShapeError):
            retrieval_topk(np.eye(3), np.eye(4), np.arange(3), "retrieval_text", ks=(1, 2, 3))


class TestZeroShot:
    def test_separated_clusters_classify_perfectly(self):
        protos = np.eye(4)
        labels = np.array([0, 1, 2, 3, 2, 1])
        images = protos[labels] + 0.01 * Rng(5).normal((6, 4))
        images /= np.linalg.norm(images, axis=1, keepdims=True)
        rec = zero_shot_classify(images, protos, labels, ks=(1, 2, 4))
        assert rec.top1 == 100.0

    def test_random_matches_binomial_baseline(self):
        rng = Rng(6)
        n, classes = 2500, 20
        images = random_unit_rows(rng.child("i"), n, 8)
        protos = random_unit_rows(rng.child("p"), classes, 8)
        labels = np.asarray(rng.child("l").integers(0, classes, n))
        rec = zero_shot_classify(images, protos, labels)
        for k, value in ((1, rec.top1), (5, rec.top5), (10, rec.top10)):
            p = k / classes
            sigma = 100.0 * np.sqrt(p * (1 - p) / n)
            assert abs(value - 100.0 * p) < 3 * sigma

    def test_two_class_hand_case(self):
        protos = np.array([[1.0, 0.0], [0.0, 1.0]])
        images = np.array([[0.9, 0.1], [0.2, 0.8], [0.7, 0.3]])
        labels = np.array([0, 1, 1])  # last image is closer to class 0
        rec = zero_shot_classify(images, protos, labels, ks=(1, 2, 2))
        assert rec.top1 == pytest.approx(200.0 / 3)
        assert rec.mean is None

    def test_zero_shot_has_no_mean(self):
        protos = np.eye(3)
        rec = zero_shot_classify(protos, protos, np.arange(3), ks=(1, 2, 3))
        assert rec.mean is None


class TestMetricsRecord:
    def test_monotonicity_enforced(self):
        with pytest.raises(ConfigError):
            MetricsRecord("retrieval_text", 50.0, 40.0, 60.0, None, 10)

    def test_mean_consistency_enforced(self):
        with pytest.raises(ConfigError):
            MetricsRecord("retrieval_text", 10.0, 20.0, 30.0, 25.0, 10)
        rec = MetricsRecord("retrieval_text", 10.0, 20.0, 30.0, 20.0, 10)
        assert rec.mean == 20.0

    def test_table_style_mean_spot_value(self):
        rec = MetricsRecord(
            "retrieval_text", 13.1, 33.36, 45.1, (13.1 + 33.36 + 45.1) / 3.0, 100
        )
        assert abs(rec.mean - 30.52) < 1e-9

    def test_unknown_task_rejected(self):
        with pytest.raises(ConfigError):
            MetricsRecord("classification", 1.0, 2.0, 3.0, 2.0, 10)

    def test_emitted_records_always_monotone(self):
        rng = Rng(7)
        for trial in range(25):
            q = random_unit_rows(rng.child("q", trial), 40, 5)
            g = random_unit_rows(rng.child("g", trial), 60, 5)
            truth = np.asarray(rng.child("t", trial).integers(0, 60, 40))
            rec = retrieval_topk(q, g, truth, "retrieval_text")
            assert 0.0 <= rec.top1 <= rec.top5 <= rec.top10 <= 100.0
