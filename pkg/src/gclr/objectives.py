"""Contrastive loss definitions and their exact gradients.

All losses are built from one kernel over a similarity matrix
``s = anchor_embeddings @ contrast_embeddings.T`` whose diagonal holds the
positive pairs:

    loss = -(tau/m) * sum_i [ s_ii/tau - log sum_{j in den(i)} exp(s_ij/tau) ]

where ``den(i)`` is all columns except ``i`` when positive-exclusion is on
(the default for the multi-view objectives) or all columns when off. The
kernel also reports ``g_i``, the *mean* of the denominator exponentials per
anchor, which the moving-average estimator tracks.

The multi-view objective families enumerate which (modality, view) pairs act
as anchor and contrast:

* ``amclr``: every (image view) x (text view) pair in both directions,
  2*(omega+1)^2 combinations.
* ``xamclr``: additionally every ordered pair of *distinct* views within
  each modality, adding 4*C(omega+1, 2) intra-modal combinations.

``clip``/``infonce`` are the classic batch losses (1/m prefactor, positive
included in the denominator), and ``global_objective_exact`` evaluates the
dataset-wide objective whose denominators range over every sample, which the
estimator module approximates from mini-batches.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from . import encoders
from .errors import (
    ConfigError,
    EmptyDenominatorError,
    OracleScaleError,
    ShapeError,
)
from .numerics import logsumexp_rows

DEFAULT_TAU = 0.1
ORACLE_MAX_N = 4096
VARIANTS = ("clip", "infonce", "sogclr", "amclr", "xamclr")


def check_tau(tau: float) -> float:
    if not (tau > 0):
        raise ConfigError(f"temperature must be > 0, got {tau}")
    return float(tau)


@dataclass(frozen=True)
class ViewRef:
    """One view of one modality: variant 0 is the original, k >= 1 augmented."""

    modality: str  # "image" | "text"
    variant: int

    def describe(self) -> str:
        tag = "orig" if self.variant == 0 else f"aug{self.variant}"
        return f"{self.modality}:{tag}"


@dataclass(frozen=True)
class CombinationDescriptor:
    """Anchor rows vs contrast columns of one loss combination.

    The denominator always sums over the contrast side; cross-modal
    descriptors pair different modalities, intra-modal ones pair distinct
    views of the same modality.
    """

    anchor: ViewRef
    contrast: ViewRef

    def __post_init__(self):
        if self.anchor.modality == self.contrast.modality:
            if self.anchor.variant == self.contrast.variant:
                raise ConfigError(
                    "intra-modal combinations need distinct views, got "
                    f"{self.anchor} vs {self.contrast}"
                )

    @property
    def kind(self) -> str:
        return (
            "cross_modal"
            if self.anchor.modality != self.contrast.modality
            else "intra_modal"
        )

    def describe(self) -> str:
        return f"{self.anchor.describe()}->{self.contrast.describe()}"


def closed_form_kappa(omega: int, variant: str) -> int:
    base = 2 * (omega + 1) ** 2
    if variant == "xamclr":
        return base + 4 * comb(omega + 1, 2)
    return base


def enumerate_combinations(omega: int, variant: str) -> list[CombinationDescriptor]:
    """All loss combinations for ``omega`` augmented views per modality.

    Ordering is fixed: image-anchored cross-modal pairs (contrast view
    varying fastest), text-anchored cross-modal pairs, then for ``xamclr``
    the intra-modal pairs of each modality (image first), each unordered
    view pair emitting low-variant-anchored then high-variant-anchored.
    """
    if omega < 0:
        raise ConfigError(f"omega must be >= 0, got {omega}")
    if variant == "sogclr":
        if omega != 0:
            raise ConfigError("sogclr has no augmented views; omega must be 0")
        variant = "amclr"
    if variant not in ("amclr", "xamclr"):
        raise ConfigError(f"unknown combination variant {variant!r}")
    views = range(omega + 1)
    combos = []
    for anchor_mod, contrast_mod in (("image", "text"), ("text", "image")):
        for a in views:
            for b in views:
                combos.append(
                    CombinationDescriptor(
                        ViewRef(anchor_mod, a), ViewRef(contrast_mod, b)
                    )
                )
    if variant == "xamclr":
        for modality in ("image", "text"):
            for lo in views:
                for hi in range(lo + 1, omega + 1):
                    combos.append(
                        CombinationDescriptor(
                            ViewRef(modality, lo), ViewRef(modality, hi)
                        )
                    )
                    combos.append(
                        CombinationDescriptor(
                            ViewRef(modality, hi), ViewRef(modality, lo)
                        )
                    )
    assert len(combos) == closed_form_kappa(omega, variant)
    return combos


@dataclass
class EmbeddedViews:
    """Embeddings of every view, aligned by sample row across all views."""

    images: list[np.ndarray]
    texts: list[np.ndarray]

    def __post_init__(self):
        if len(self.images) != len(self.texts):
            raise ShapeError("image and text view counts differ")
        if not self.images:
            raise ShapeError("need at least the original views")
        rows = {a.shape[0] for a in self.images + self.texts}
        if len(rows) != 1:
            raise ShapeError(f"views disagree on batch size: {sorted(rows)}")

    @property
    def omega(self) -> int:
        return len(self.images) - 1

    @property
    def batch_size(self) -> int:
        return self.images[0].shape[0]

    def get(self, ref: ViewRef) -> np.ndarray:
        bank = self.images if ref.modality == "image" else self.texts
        if ref.variant >= len(bank):
            raise ShapeError(f"view {ref.describe()} not present (omega={self.omega})")
        return bank[ref.variant]


@dataclass
class LossBreakdown:
    per_combination: list[tuple[CombinationDescriptor, float]]
    total: float
    per_anchor_g: np.ndarray  # (kappa, m), row k aligned with per_combination[k]

    @property
    def kappa(self) -> int:
        return len(self.per_combination)

    def values(self) -> np.ndarray:
        return np.array([v for _, v in self.per_combination])

    def named_scalars(self) -> dict[str, float]:
        out = {f"F_{k + 1}": v for k, (_, v) in enumerate(self.per_combination)}
        out["F_total"] = self.total
        return out


def loss_and_g_from_similarity(
    s: np.ndarray, tau: float, exclude: bool = True
) -> tuple[float, np.ndarray]:
    """The shared kernel: scalar loss and per-anchor mean denominator exp."""
    tau = check_tau(tau)
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ShapeError(f"similarity must be square, got {s.shape}")
    m = s.shape[0]
    z = s / tau
    e = np.exp(z)
    if exclude:
        if m < 2:
            raise EmptyDenominatorError(
                "positive-exclusion needs at least 2 samples in the batch"
            )
        z_masked = z.copy()
        np.fill_diagonal(z_masked, -np.inf)
        lse = logsumexp_rows(z_masked)
        g = (e.sum(axis=1) - np.diag(e)) / (m - 1)
    else:
        lse = logsumexp_rows(z)
        g = e.mean(axis=1)
    loss = (tau / m) * float(np.sum(lse - np.diag(z)))
    return loss, g


def combination_loss(
    emb_anchor: np.ndarray,
    emb_contrast: np.ndarray,
    tau: float,
    exclude: bool = True,
) -> tuple[float, np.ndarray]:
    """Loss of one combination; row i of each matrix is the positive pair."""
    a = np.asarray(emb_anchor, dtype=np.float64)
    c = np.asarray(emb_contrast, dtype=np.float64)
    if a.shape != c.shape:
        raise ShapeError(f"anchor/contrast shapes differ: {a.shape} vs {c.shape}")
    return loss_and_g_from_similarity(a @ c.T, tau, exclude)


def weighted_grad_matrix(
    s: np.ndarray, tau: float, exclude: bool, weights: np.ndarray
) -> np.ndarray:
    """d(combination loss)/d(s) with 1/denominator replaced by 1/weights.

    With ``weights = g`` (the batch mean itself) this is the exact gradient
    (P - I)/m with P the masked row softmax; the estimator passes its
    moving-average state instead.
    """
    m = s.shape[0]
    e = np.exp(np.asarray(s, dtype=np.float64) / tau)
    if exclude:
        np.fill_diagonal(e, 0.0)
        den_count = m - 1
    else:
        den_count = m
    w = e / (den_count * np.asarray(weights, dtype=np.float64)[:, None])
    return (w - np.eye(m)) / m


def pair_similarities(
    views: EmbeddedViews, descriptors: list[CombinationDescriptor]
) -> dict[tuple[ViewRef, ViewRef], np.ndarray]:
    """Similarity matrix of every (anchor, contrast) pair, computed once."""
    sims = {}
    for desc in descriptors:
        key = (desc.anchor, desc.contrast)
        if key not in sims:
            sims[key] = views.get(desc.anchor) @ views.get(desc.contrast).T
    return sims


def multi_view_losses(
    views: EmbeddedViews,
    tau: float,
    descriptors: list[CombinationDescriptor],
    exclude: bool = True,
    sims: dict | None = None,
) -> LossBreakdown:
    """Per-combination losses and per-anchor g over all descriptors."""
    if sims is None:
        sims = pair_similarities(views, descriptors)
    per_combo, g_rows, total = [], [], 0.0
    for desc in descriptors:
        loss, g = loss_and_g_from_similarity(
            sims[(desc.anchor, desc.contrast)], tau, exclude
        )
        per_combo.append((desc, loss))
        g_rows.append(g)
        total += loss
    return LossBreakdown(per_combo, total, np.array(g_rows))


def multi_view_embedding_grads(
    views: EmbeddedViews,
    tau: float,
    descriptors: list[CombinationDescriptor],
    exclude: bool = True,
    sims: dict | None = None,
    u_img: np.ndarray | None = None,
    u_txt: np.ndarray | None = None,
    breakdown: LossBreakdown | None = None,
) -> dict[ViewRef, np.ndarray]:
    """Accumulated d(loss)/d(view embeddings) over all descriptors.

    When ``u_img``/``u_txt`` are given, every combination's denominator
    weight is the supplied per-anchor moving average (the estimator path);
    otherwise each combination uses its own batch ``g``, which makes the
    result the exact gradient of the summed batch loss.
    """
    if sims is None:
        sims = pair_similarities(views, descriptors)
    if u_img is None and breakdown is None:
        breakdown = multi_view_losses(views, tau, descriptors, exclude, sims)
    demb: dict[ViewRef, np.ndarray] = {}
    for k, desc in enumerate(descriptors):
        s = sims[(desc.anchor, desc.contrast)]
        if u_img is None:
            weights = breakdown.per_anchor_g[k]
        else:
            weights = u_img if desc.anchor.modality == "image" else u_txt
        ds = weighted_grad_matrix(s, tau, exclude, weights)
        a = views.get(desc.anchor)
        c = views.get(desc.contrast)
        demb.setdefault(desc.anchor, np.zeros_like(a))
        demb.setdefault(desc.contrast, np.zeros_like(c))
        demb[desc.anchor] += ds @ c
        demb[desc.contrast] += ds.T @ a
    return demb


def amclr_batch_loss(
    views: EmbeddedViews, tau: float, exclude: bool = True
) -> LossBreakdown:
    """Sum of all cross-modal view combinations (omega inferred from views)."""
    descriptors = enumerate_combinations(views.omega, "amclr")
    return multi_view_losses(views, tau, descriptors, exclude)


def xamclr_batch_loss(
    views: EmbeddedViews, tau: float, exclude: bool = True
) -> LossBreakdown:
    """Cross-modal combinations plus intra-modal original/augmented pairs."""
    descriptors = enumerate_combinations(views.omega, "xamclr")
    return multi_view_losses(views, tau, descriptors, exclude)


def softmax_rows(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _check_aligned(emb_a: np.ndarray, emb_b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(emb_a, dtype=np.float64)
    b = np.asarray(emb_b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape != b.shape:
        raise ShapeError(f"embeddings must be aligned 2-D, got {a.shape} vs {b.shape}")
    return a, b


def infonce_from_similarity(s: np.ndarray, tau: float) -> float:
    """-(1/m) sum_i log softmax row i at the diagonal (positive included)."""
    tau = check_tau(tau)
    z = np.asarray(s, dtype=np.float64) / tau
    m = z.shape[0]
    return float(np.sum(logsumexp_rows(z) - np.diag(z)) / m)


def infonce_loss(emb_images: np.ndarray, emb_texts: np.ndarray, tau: float) -> float:
    a, b = _check_aligned(emb_images, emb_texts)
    return infonce_from_similarity(a @ b.T, tau)


def clip_loss_from_similarity(s: np.ndarray, tau: float) -> float:
    """Both-direction batch loss in difference form, averaged over the batch.

    Each direction's term log sum_j exp((s_ij - s_ii)/tau) equals the row's
    softmax loss by shift invariance, so this also equals the sum of the two
    directional positive-included softmax losses.
    """
    tau = check_tau(tau)
    z = np.asarray(s, dtype=np.float64) / tau
    m = z.shape[0]
    diag = np.diag(z)
    rows = logsumexp_rows(z - diag[:, None])
    cols = logsumexp_rows(z.T - diag[:, None])
    return float(np.sum(rows + cols) / m)


def clip_batch_loss(emb_images: np.ndarray, emb_texts: np.ndarray, tau: float) -> float:
    a, b = _check_aligned(emb_images, emb_texts)
    return clip_loss_from_similarity(a @ b.T, tau)


def infonce_similarity_grad(s: np.ndarray, tau: float) -> np.ndarray:
    m = s.shape[0]
    p = softmax_rows(np.asarray(s, dtype=np.float64) / tau)
    return (p - np.eye(m)) / (m * tau)


def clip_similarity_grad(s: np.ndarray, tau: float) -> np.ndarray:
    z = np.asarray(s, dtype=np.float64) / tau
    m = z.shape[0]
    p = softmax_rows(z)
    q = softmax_rows(z.T).T
    return (p + q - 2.0 * np.eye(m)) / (m * tau)


def pair_loss_and_grad(
    variant: str, emb_images: np.ndarray, emb_texts: np.ndarray, tau: float
) -> tuple[float, np.ndarray, np.ndarray]:
    """Loss and d(loss)/d(embeddings) for the single-view batch objectives."""
    a, b = _check_aligned(emb_images, emb_texts)
    s = a @ b.T
    if variant == "clip":
        loss = clip_loss_from_similarity(s, tau)
        ds = clip_similarity_grad(s, tau)
    elif variant == "infonce":
        loss = infonce_from_similarity(s, tau)
        ds = infonce_similarity_grad(s, tau)
    else:
        raise ConfigError(f"pair_loss_and_grad handles clip/infonce, not {variant!r}")
    return loss, ds @ b, ds.T @ a


def global_objective_exact(params, dataset, tau: float) -> float:
    """The dataset-wide objective: denominators range over every sample.

    Both directions are included and the positive term is part of each
    denominator. O(n^2) similarities, guarded at n <= 4096.
    """
    tau = check_tau(tau)
    n = dataset.n
    if n > ORACLE_MAX_N:
        raise OracleScaleError(f"exact objective limited to n <= {ORACLE_MAX_N}")
    emb_i, _ = encoders.forward(params, dataset.images, "image")
    emb_t, _ = encoders.forward(params, dataset.texts, "text")
    z = (emb_i @ emb_t.T) / tau
    diag = np.diag(z)
    total = float(np.sum(logsumexp_rows(z) - diag) + np.sum(logsumexp_rows(z.T) - diag))
    return tau / n * total


def global_objective_exact_gradient(params, dataset, tau: float) -> np.ndarray:
    """Exact flattened-parameter gradient of ``global_objective_exact``."""
    tau = check_tau(tau)
    n = dataset.n
    if n > ORACLE_MAX_N:
        raise OracleScaleError(f"exact gradient limited to n <= {ORACLE_MAX_N}")
    emb_i, tape_i = encoders.forward(params, dataset.images, "image")
    emb_t, tape_t = encoders.forward(params, dataset.texts, "text")
    z = (emb_i @ emb_t.T) / tau
    p = softmax_rows(z)
    q = softmax_rows(z.T).T
    ds = (p + q - 2.0 * np.eye(n)) / n
    grads = encoders.backward(params, tape_i, ds @ emb_t)
    grads.update(encoders.backward(params, tape_t, ds.T @ emb_i))
    return encoders.grads_to_vector(params.arch, grads)


def embed_views(
    params, raw_image_views: list[np.ndarray], raw_text_views: list[np.ndarray]
) -> tuple[EmbeddedViews, list, list]:
    """Forward every raw view; returns embeddings plus per-view tapes."""
    img_embs, img_tapes, txt_embs, txt_tapes = [], [], [], []
    for x in raw_image_views:
        e, t = encoders.forward(params, x, "image")
        img_embs.append(e)
        img_tapes.append(t)
    for x in raw_text_views:
        e, t = encoders.forward(params, x, "text")
        txt_embs.append(e)
        txt_tapes.append(t)
    return EmbeddedViews(img_embs, txt_embs), img_tapes, txt_tapes


def views_grads_to_vector(
    params, demb: dict[ViewRef, np.ndarray], img_tapes: list, txt_tapes: list
) -> np.ndarray:
    """Backpropagate accumulated embedding gradients through every view."""
    out = np.zeros(encoders.param_count(params.arch))
    for ref, upstream in demb.items():
        tape = (img_tapes if ref.modality == "image" else txt_tapes)[ref.variant]
        out += encoders.grads_to_vector(
            params.arch, encoders.backward(params, tape, upstream)
        )
    return out


def variant_batch_loss_and_gradient(
    params,
    raw_image_views: list[np.ndarray],
    raw_text_views: list[np.ndarray],
    tau: float,
    variant: str,
    exclude: bool = True,
) -> tuple[float, np.ndarray]:
    """Exact (loss, flat gradient) of any variant's batch loss.

    For clip/infonce only the original views are used. The multi-view
    variants differentiate the full combination sum with each combination's
    own batch denominators (no moving-average state involved).
    """
    if variant not in VARIANTS:
        raise ConfigError(f"unknown variant {variant!r}")
    if variant in ("clip", "infonce"):
        emb_i, tape_i = encoders.forward(params, raw_image_views[0], "image")
        emb_t, tape_t = encoders.forward(params, raw_text_views[0], "text")
        loss, d_img, d_txt = pair_loss_and_grad(variant, emb_i, emb_t, tau)
        grads = encoders.backward(params, tape_i, d_img)
        grads.update(encoders.backward(params, tape_t, d_txt))
        return loss, encoders.grads_to_vector(params.arch, grads)
    views, img_tapes, txt_tapes = embed_views(params, raw_image_views, raw_text_views)
    descriptors = enumerate_combinations(views.omega, variant)
    sims = pair_similarities(views, descriptors)
    breakdown = multi_view_losses(views, tau, descriptors, exclude, sims)
    demb = multi_view_embedding_grads(
        views, tau, descriptors, exclude, sims, breakdown=breakdown
    )
    return breakdown.total, views_grads_to_vector(params, demb, img_tapes, txt_tapes)
