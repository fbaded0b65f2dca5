#!/usr/bin/env python3
"""Tour of the loss zoo: combination enumeration, batch losses, reductions.

Walks through how the multi-view objectives are assembled from one kernel,
and shows the collapse identities that make them easy to sanity-check.
"""

import numpy as np

from gclr import encoders, objectives
from gclr.numerics import Rng
from gclr.objectives import EmbeddedViews, enumerate_combinations

TAU = 0.1

print("=" * 70)
print("1. Combination enumeration")
print("=" * 70)
for omega in range(3):
    for variant in ("amclr", "xamclr"):
        combos = enumerate_combinations(omega, variant)
        print(f"  {variant}, omega={omega}: kappa={len(combos)}")
print()
print("The twelve combinations at one augmented view per modality:")
for k, c in enumerate(enumerate_combinations(1, "xamclr"), start=1):
    print(f"  F_{k:<2d} {c.describe():28s} [{c.kind}]")

print()
print("=" * 70)
print("2. Batch losses on random embeddings")
print("=" * 70)
rng = Rng(0)
arch = encoders.EncoderArch(d_img=12, d_txt=10, embed_dim=8, hidden_dim=16)
params = encoders.init(arch, seed=1)
m = 8
images = rng.child("img").normal((m, 12))
texts = rng.child("txt").normal((m, 10))
images_aug = images + 0.1 * rng.child("n1").normal(images.shape)
texts_aug = texts + 0.1 * rng.child("n2").normal(texts.shape)

emb = {}
for name, raw, modality in (
    ("img", images, "image"),
    ("img_aug", images_aug, "image"),
    ("txt", texts, "text"),
    ("txt_aug", texts_aug, "text"),
):
    emb[name], _ = encoders.forward(params, raw, modality)

views = EmbeddedViews([emb["img"], emb["img_aug"]], [emb["txt"], emb["txt_aug"]])
breakdown = objectives.xamclr_batch_loss(views, TAU)
for name, value in breakdown.named_scalars().items():
    print(f"  {name:8s} = {value:+.6f}")

print()
print("=" * 70)
print("3. Classic batch losses and the difference-form identity")
print("=" * 70)
clip = objectives.clip_batch_loss(emb["img"], emb["txt"], TAU)
nce_it = objectives.infonce_loss(emb["img"], emb["txt"], TAU)
nce_ti = objectives.infonce_loss(emb["txt"], emb["img"], TAU)
print(f"  clip batch loss                  = {clip:.12f}")
print(f"  softmax losses, both directions  = {nce_it + nce_ti:.12f}")
print(f"  |difference|                     = {abs(clip - nce_it - nce_ti):.2e}")

print()
print("=" * 70)
print("4. Degenerate-augmentation collapse")
print("=" * 70)
dup = EmbeddedViews([emb["img"], emb["img"].copy()], [emb["txt"], emb["txt"].copy()])
collapsed = objectives.amclr_batch_loss(dup, TAU)
base = objectives.amclr_batch_loss(
    EmbeddedViews([emb["img"]], [emb["txt"]]), TAU
)
v = collapsed.values()
print(f"  with identity augmentations: F_2..F_4 - F_1 max = "
      f"{max(abs(v[k] - v[0]) for k in (1, 2, 3)):.2e}")
print(f"  total = {collapsed.total:+.6f} = 4 x (F_1 + F_5) = "
      f"{4 * base.total:+.6f}")
