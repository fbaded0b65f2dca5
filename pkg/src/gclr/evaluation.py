"""Top-k retrieval and zero-shot classification metrics.

Ranking is by descending dot product of the given embeddings (callers pass
normalized embeddings, making this cosine similarity). Ties rank the lower
gallery index first so results are deterministic across platforms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeError

TASKS = ("retrieval_text", "retrieval_image", "zero_shot")
DEFAULT_KS = (1, 5, 10)


@dataclass
class MetricsRecord:
    """Top-1/5/10 percentages for one evaluation, plus run metadata.

    ``mean`` is the arithmetic mean of the three (retrieval tasks only;
    zero-shot records leave it None).
    """

    task: str
    top1: float
    top5: float
    top10: float
    mean: float | None
    n_eval: int
    variant: str = ""
    optimizer: str = ""
    seed: int = 0
    epoch: int = 0

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}")
        if not (0.0 <= self.top1 <= self.top5 <= self.top10 <= 100.0):
            raise ConfigError(
                f"top-k must be monotone percentages, got "
                f"{self.top1}/{self.top5}/{self.top10}"
            )
        if self.mean is not None:
            expected = (self.top1 + self.top5 + self.top10) / 3.0
            if abs(self.mean - expected) > 1e-9:
                raise ConfigError(f"mean {self.mean} != {(expected)}")

    def to_json_dict(self) -> dict:
        return {
            "task": self.task,
            "top1": self.top1,
            "top5": self.top5,
            "top10": self.top10,
            "mean": self.mean,
            "n_eval": self.n_eval,
            "variant": self.variant,
            "optimizer": self.optimizer,
            "seed": self.seed,
            "epoch": self.epoch,
        }


@dataclass
class RunMeta:
    variant: str = ""
    optimizer: str = ""
    seed: int = 0
    epoch: int = 0


def _topk_percentages(
    scores: np.ndarray, true_index: np.ndarray, ks: tuple[int, ...]
) -> list[float]:
    """Fraction (as %) of rows whose true column ranks within each k."""
    n_q, gallery = scores.shape
    for k in ks:
        if k > gallery:
            raise ConfigError(f"k={k} exceeds gallery size {gallery}")
    rows = np.arange(n_q)
    true_scores = scores[rows, true_index]
    better = (scores > true_scores[:, None]).sum(axis=1)
    tied_lower = (
        (scores == true_scores[:, None]) & (np.arange(gallery)[None, :] < true_index[:, None])
    ).sum(axis=1)
    rank = better + tied_lower + 1
    return [float(100.0 * np.mean(rank <= k)) for k in ks]


def retrieval_topk(
    emb_queries: np.ndarray,
    emb_gallery: np.ndarray,
    true_index: np.ndarray,
    task: str,
    ks: tuple[int, ...] = DEFAULT_KS,
    meta: RunMeta | None = None,
) -> MetricsRecord:
    """Top-k retrieval accuracy of each query's true gallery item."""
    q = np.asarray(emb_queries, dtype=np.float64)
    g = np.asarray(emb_gallery, dtype=np.float64)
    truth = np.asarray(true_index, dtype=np.int64)
    if q.ndim != 2 or g.ndim != 2 or q.shape[1] != g.shape[1]:
        raise ShapeError(f"query/gallery dims mismatch: {q.shape} vs {g.shape}")
    if truth.shape != (q.shape[0],):
        raise ShapeError("need one true gallery index per query")
    top1, top5, top10 = _topk_percentages(q @ g.T, truth, ks)
    meta = meta or RunMeta()
    return MetricsRecord(
        task=task,
        top1=top1,
        top5=top5,
        top10=top10,
        mean=(top1 + top5 + top10) / 3.0,
        n_eval=q.shape[0],
        variant=meta.variant,
        optimizer=meta.optimizer,
        seed=meta.seed,
        epoch=meta.epoch,
    )


def zero_shot_classify(
    emb_images: np.ndarray,
    emb_prototypes: np.ndarray,
    labels: np.ndarray,
    ks: tuple[int, ...] = DEFAULT_KS,
    meta: RunMeta | None = None,
) -> MetricsRecord:
    """Top-k accuracy of nearest-prototype classification."""
    q = np.asarray(emb_images, dtype=np.float64)
    protos = np.asarray(emb_prototypes, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if q.ndim != 2 or protos.ndim != 2 or q.shape[1] != protos.shape[1]:
        raise ShapeError(f"image/prototype dims mismatch: {q.shape} vs {protos.shape}")
    if y.shape != (q.shape[0],):
        raise ShapeError("need one label per image")
    top1, top5, top10 = _topk_percentages(q @ protos.T, y, ks)
    meta = meta or RunMeta()
    return MetricsRecord(
        task="zero_shot",
        top1=top1,
        top5=top5,
        top10=top10,
        mean=None,
        n_eval=q.shape[0],
        variant=meta.variant,
        optimizer=meta.optimizer,
        seed=meta.seed,
        epoch=meta.epoch,
    )
