"""Vector-space augmentation families and per-sample transform sampling.

Augmentations are modeled as parameterized perturbations of the raw input
vectors (noise, coordinate dropout, scaling): the objectives only consume
encoder embeddings, so the content of a transform is irrelevant to them,
while its strength must stay controllable for tests. Each sampled transform
carries its own derived random key, so applying it is pure and repeatable
and no sample's augmentation depends on any other sample.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .numerics import Rng

FAMILIES = ("gaussian_noise", "coordinate_dropout", "random_scale")


@dataclass(frozen=True)
class AugmentSpec:
    """One augmentation family with its parameters.

    ``sigma`` is the noise scale for ``gaussian_noise``, ``drop_p`` the
    zeroing probability for ``coordinate_dropout``, and ``scale_range`` the
    multiplier interval for ``random_scale`` (must exclude 0). ``draw_seed``
    is folded into every per-sample key derived from this spec.
    """

    family: str
    sigma: float = 0.0
    drop_p: float = 0.0
    scale_range: tuple[float, float] = (1.0, 1.0)
    draw_seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown augmentation family {self.family!r}")
        if self.sigma < 0:
            raise ConfigError(f"sigma must be >= 0, got {self.sigma}")
        if not (0 <= self.drop_p < 1):
            raise ConfigError(f"drop_p must be in [0, 1), got {self.drop_p}")
        lo, hi = self.scale_range
        if lo > hi:
            raise ConfigError(f"scale range is empty: {self.scale_range}")
        if lo <= 0 <= hi:
            raise ConfigError(f"scale range must exclude 0, got {self.scale_range}")

    @staticmethod
    def parse(text: str) -> "AugmentSpec":
        """Parse ``family[:param[:param]]``, e.g. ``gaussian_noise:0.1``."""
        parts = [p.strip() for p in text.split(":")]
        family, args = parts[0], parts[1:]
        try:
            if family == "gaussian_noise":
                return AugmentSpec(family, sigma=float(args[0]) if args else 0.0)
            if family == "coordinate_dropout":
                return AugmentSpec(family, drop_p=float(args[0]) if args else 0.0)
            if family == "random_scale":
                lo, hi = (float(args[0]), float(args[1])) if args else (1.0, 1.0)
                return AugmentSpec(family, scale_range=(lo, hi))
        except (ValueError, IndexError) as exc:
            raise ConfigError(f"bad augmentation spec {text!r}: {exc}") from exc
        raise ConfigError(f"unknown augmentation family {family!r}")

    def describe(self) -> str:
        if self.family == "gaussian_noise":
            return f"gaussian_noise:{self.sigma:g}"
        if self.family == "coordinate_dropout":
            return f"coordinate_dropout:{self.drop_p:g}"
        return f"random_scale:{self.scale_range[0]:g}:{self.scale_range[1]:g}"


@dataclass(frozen=True)
class AugmentPlan:
    """How many augmented views to draw per modality, and from which specs."""

    omega: int
    image_specs: tuple[AugmentSpec, ...] = ()
    text_specs: tuple[AugmentSpec, ...] = ()

    def __post_init__(self):
        if self.omega < 0:
            raise ConfigError(f"omega must be >= 0, got {self.omega}")
        if self.omega > 0 and (not self.image_specs or not self.text_specs):
            raise ConfigError("omega > 0 requires at least one spec per modality")

    def check_batch_size(self, batch_size: int) -> None:
        # The estimator's small-batch approximation degrades if views multiply
        # the effective batch toward dataset scale; cap omega at m/8.
        if self.omega > batch_size / 8:
            raise ConfigError(
                f"omega={self.omega} too large for batch_size={batch_size}; "
                f"need omega <= batch_size/8"
            )


@dataclass(frozen=True)
class SampledTransform:
    """A concrete draw from a spec, with a private stream for its own noise."""

    spec: AugmentSpec
    noise_rng: Rng


def sample_transforms(
    plan: AugmentPlan, sample_index: int, epoch: int, rng: Rng
) -> tuple[tuple[SampledTransform, ...], tuple[SampledTransform, ...]]:
    """Draw ``omega`` transforms per modality for one sample.

    Deterministic in (rng seed, sample_index, epoch); the two modalities use
    independent child streams. Specs are chosen uniformly with replacement.
    """
    out = []
    for modality_id, specs in ((0, plan.image_specs), (1, plan.text_specs)):
        if plan.omega == 0:
            out.append(())
            continue
        base = rng.child("augment", epoch, sample_index, modality_id)
        picks = base.child("choose").integers(0, len(specs), plan.omega)
        transforms = []
        for slot, pick in enumerate(picks):
            spec = specs[int(pick)]
            noise = base.child("noise", slot, spec.draw_seed)
            transforms.append(SampledTransform(spec=spec, noise_rng=noise))
        out.append(tuple(transforms))
    return out[0], out[1]


def apply(transform: SampledTransform, v: np.ndarray) -> np.ndarray:
    """Apply one sampled transform to a vector; pure and repeatable."""
    v = np.asarray(v, dtype=np.float64)
    spec = transform.spec
    gen = transform.noise_rng.fresh_generator()
    if spec.family == "gaussian_noise":
        return v + spec.sigma * gen.standard_normal(v.shape)
    if spec.family == "coordinate_dropout":
        mask = gen.uniform(0.0, 1.0, v.shape) < spec.drop_p
        return np.where(mask, 0.0, v)
    factor = gen.uniform(spec.scale_range[0], spec.scale_range[1])
    return factor * v


def identity_plan(omega: int) -> AugmentPlan:
    """A plan whose transforms leave inputs bit-identical (sigma = 0 noise)."""
    spec = (AugmentSpec("gaussian_noise", sigma=0.0),)
    return AugmentPlan(omega=omega, image_specs=spec, text_specs=spec)


def augment_batch(
    plan: AugmentPlan,
    images: np.ndarray,
    texts: np.ndarray,
    indices: np.ndarray,
    epoch: int,
    rng: Rng,
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Build view lists [original, aug_1, ..., aug_omega] for both modalities.

    ``indices`` are dataset sample ids, used as augmentation keys so a
    sample's views do not depend on its batch position.
    """
    m = images.shape[0]
    image_views = [images] + [np.empty_like(images) for _ in range(plan.omega)]
    text_views = [texts] + [np.empty_like(texts) for _ in range(plan.omega)]
    for row in range(m):
        img_ts, txt_ts = sample_transforms(plan, int(indices[row]), epoch, rng)
        for j in range(plan.omega):
            image_views[j + 1][row] = apply(img_ts[j], images[row])
            text_views[j + 1][row] = apply(txt_ts[j], texts[row])
    return image_views, text_views
