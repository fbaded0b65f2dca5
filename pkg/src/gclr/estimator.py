"""Moving-average denominator state and the mini-batch gradient estimator.

The dataset-wide objective needs, per anchor, the mean exponentiated
similarity against *every* sample. A mini-batch only sees its own slice, so
each sample keeps a running estimate ``u`` of that mean, one scalar per
modality, updated as a convex combination with rate ``gamma``:

    u[i] <- (1 - gamma) * u[i] + gamma * g_batch[i]

A step then assembles the gradient surrogate ``m_t`` by differentiating each
loss combination with its batch denominator replaced by ``tau / u``, plus
the alignment (positive-pair) gradient of each combination. With gamma = 1
and the batch equal to the whole dataset (positive included in the
denominators, no augmented views) this reproduces the exact gradient of the
dataset-wide objective, which is the anchor correctness test.

When several combinations share an anchor sample (augmented views), their
``g`` values are averaged with equal weight into the single per-sample ``u``
of that modality; state size stays at one scalar per sample per modality.
Entries start at zero, and the first update of an entry writes ``g``
directly (a gamma = 1 first step) so ``tau / u`` is always well defined.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import augment, objectives
from .errors import ColdStartError, ConfigError, ShapeError
from .numerics import Rng
from .objectives import EmbeddedViews, LossBreakdown

ESTIMATOR_VARIANTS = ("sogclr", "amclr", "xamclr")


@dataclass
class EstimatorState:
    u_img: np.ndarray  # (n,) per-sample moving averages, image-anchored
    u_txt: np.ndarray  # (n,) text-anchored
    gamma: float
    step: int = 0

    def __post_init__(self):
        if not (0 < self.gamma <= 1):
            raise ConfigError(f"gamma must be in (0, 1], got {self.gamma}")
        if self.u_img.shape != self.u_txt.shape or self.u_img.ndim != 1:
            raise ShapeError("u vectors must be 1-D and equally sized")

    @property
    def n(self) -> int:
        return len(self.u_img)

    def copy(self) -> "EstimatorState":
        return EstimatorState(self.u_img.copy(), self.u_txt.copy(), self.gamma, self.step)


def init_state(n: int, gamma: float) -> EstimatorState:
    return EstimatorState(np.zeros(n), np.zeros(n), gamma)


def batch_g(
    emb_anchor: np.ndarray,
    emb_contrast: np.ndarray,
    tau: float,
    exclude: bool = True,
) -> np.ndarray:
    """Per-anchor mean denominator exponential over the batch."""
    _, g = objectives.combination_loss(emb_anchor, emb_contrast, tau, exclude)
    return g


def update_u(
    state: EstimatorState,
    indices: np.ndarray,
    g_img: np.ndarray,
    g_txt: np.ndarray,
) -> EstimatorState:
    """Convex-combination update at ``indices``; untouched entries unchanged.

    Entries still at their zero cold-start value take ``g`` directly.
    """
    idx = np.asarray(indices, dtype=np.int64)
    if idx.min(initial=0) < 0 or (len(idx) and idx.max() >= state.n):
        raise ShapeError(f"batch indices out of range [0, {state.n})")
    g_img = np.asarray(g_img, dtype=np.float64)
    g_txt = np.asarray(g_txt, dtype=np.float64)
    if g_img.shape != idx.shape or g_txt.shape != idx.shape:
        raise ShapeError("g vectors must align with indices")
    if (g_img <= 0).any() or (g_txt <= 0).any():
        raise ConfigError("g values must be positive")
    out = state.copy()
    for u, g in ((out.u_img, g_img), (out.u_txt, g_txt)):
        old = u[idx]
        fresh = old == 0.0
        u[idx] = np.where(fresh, g, (1.0 - state.gamma) * old + state.gamma * g)
    return out


def _side_mean_g(breakdown: LossBreakdown) -> tuple[np.ndarray, np.ndarray]:
    """Average per-anchor g over all combinations anchored on each modality."""
    img_rows = [
        breakdown.per_anchor_g[k]
        for k, (desc, _) in enumerate(breakdown.per_combination)
        if desc.anchor.modality == "image"
    ]
    txt_rows = [
        breakdown.per_anchor_g[k]
        for k, (desc, _) in enumerate(breakdown.per_combination)
        if desc.anchor.modality == "text"
    ]
    return np.mean(img_rows, axis=0), np.mean(txt_rows, axis=0)


def _assemble_m_t(
    params,
    views: EmbeddedViews,
    img_tapes: list,
    txt_tapes: list,
    indices: np.ndarray,
    state: EstimatorState,
    tau: float,
    descriptors,
    exclude: bool,
    sims: dict | None = None,
) -> np.ndarray:
    u_img = state.u_img[indices]
    u_txt = state.u_txt[indices]
    if (u_img <= 0).any() or (u_txt <= 0).any():
        raise ColdStartError(
            "moving-average entries are zero for this batch; update them first"
        )
    demb = objectives.multi_view_embedding_grads(
        views, tau, descriptors, exclude, sims, u_img=u_img, u_txt=u_txt
    )
    return objectives.views_grads_to_vector(params, demb, img_tapes, txt_tapes)


def gradient_estimator(
    params,
    raw_image_views: list[np.ndarray],
    raw_text_views: list[np.ndarray],
    indices: np.ndarray,
    state: EstimatorState,
    tau: float,
    variant: str,
    exclude: bool = True,
) -> np.ndarray:
    """Assemble ``m_t`` from the current state, without touching it."""
    views, img_tapes, txt_tapes = objectives.embed_views(
        params, raw_image_views, raw_text_views
    )
    descriptors = objectives.enumerate_combinations(views.omega, variant)
    return _assemble_m_t(
        params, views, img_tapes, txt_tapes,
        np.asarray(indices, dtype=np.int64), state, tau, descriptors, exclude,
    )


@dataclass
class StepReport:
    indices: np.ndarray
    breakdown: LossBreakdown
    m_t: np.ndarray
    u_summary: dict[str, tuple[float, float, float]]  # side -> (min, mean, max)


def _step(
    params,
    raw_image_views: list[np.ndarray],
    raw_text_views: list[np.ndarray],
    indices: np.ndarray,
    state: EstimatorState,
    tau: float,
    variant: str,
    exclude: bool,
) -> tuple[np.ndarray, EstimatorState, StepReport]:
    """Shared inner loop: forward views, g, u update, then m_t assembly."""
    indices = np.asarray(indices, dtype=np.int64)
    views, img_tapes, txt_tapes = objectives.embed_views(
        params, raw_image_views, raw_text_views
    )
    descriptors = objectives.enumerate_combinations(views.omega, variant)
    sims = objectives.pair_similarities(views, descriptors)
    breakdown = objectives.multi_view_losses(views, tau, descriptors, exclude, sims)
    g_img, g_txt = _side_mean_g(breakdown)
    new_state = update_u(state, indices, g_img, g_txt)
    new_state.step = state.step + 1
    m_t = _assemble_m_t(
        params, views, img_tapes, txt_tapes, indices, new_state, tau,
        descriptors, exclude, sims,
    )
    summary = {
        "u_img": _summary(new_state.u_img[indices]),
        "u_txt": _summary(new_state.u_txt[indices]),
    }
    report = StepReport(indices, breakdown, m_t, summary)
    return m_t, new_state, report


def _summary(values: np.ndarray) -> tuple[float, float, float]:
    return float(values.min()), float(values.mean()), float(values.max())


def sogclr_step(
    params,
    images: np.ndarray,
    texts: np.ndarray,
    indices: np.ndarray,
    state: EstimatorState,
    tau: float,
    exclude: bool = True,
) -> tuple[np.ndarray, EstimatorState, StepReport]:
    """One estimator step on the original views only."""
    return _step(params, [images], [texts], indices, state, tau, "sogclr", exclude)


def amclr_step(
    params,
    images: np.ndarray,
    texts: np.ndarray,
    indices: np.ndarray,
    state: EstimatorState,
    tau: float,
    plan: augment.AugmentPlan,
    epoch: int,
    rng: Rng,
    exclude: bool = True,
) -> tuple[np.ndarray, EstimatorState, StepReport]:
    """One estimator step over original plus sampled augmented views."""
    image_views, text_views = augment.augment_batch(
        plan, images, texts, indices, epoch, rng
    )
    variant = "amclr" if plan.omega > 0 else "sogclr"
    return _step(params, image_views, text_views, indices, state, tau, variant, exclude)


def xamclr_step(
    params,
    images: np.ndarray,
    texts: np.ndarray,
    indices: np.ndarray,
    state: EstimatorState,
    tau: float,
    plan: augment.AugmentPlan,
    epoch: int,
    rng: Rng,
    exclude: bool = True,
) -> tuple[np.ndarray, EstimatorState, StepReport]:
    """As ``amclr_step`` with the intra-modal combinations included."""
    image_views, text_views = augment.augment_batch(
        plan, images, texts, indices, epoch, rng
    )
    variant = "xamclr" if plan.omega > 0 else "sogclr"
    return _step(params, image_views, text_views, indices, state, tau, variant, exclude)
