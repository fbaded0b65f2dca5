"""Shared fixtures and finite-difference utilities for the test suite."""

from __future__ import annotations

import numpy as np

from gclr import encoders
from gclr.numerics import Rng


def rel_err(a: float, b: float) -> float:
    """Error normalized against max(1, |a|, |b|); losses here are O(1)."""
    return abs(a - b) / max(1.0, abs(a), abs(b))


def central_fd(loss_fn, w: np.ndarray, coord: int, eps: float = 1e-5) -> float:
    wp = w.copy()
    wp[coord] += eps
    wm = w.copy()
    wm[coord] -= eps
    return (loss_fn(wp) - loss_fn(wm)) / (2.0 * eps)


def fd_gradient_check(
    loss_fn, analytic: np.ndarray, w: np.ndarray, coords, eps: float = 1e-5
) -> float:
    """Worst relative error between analytic gradient and central differences."""
    worst = 0.0
    for c in coords:
        c = int(c)
        worst = max(worst, rel_err(analytic[c], central_fd(loss_fn, w, c, eps)))
    return worst


def random_unit_rows(rng: Rng, m: int, d: int) -> np.ndarray:
    x = rng.normal((m, d))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def tiny_arch(hidden: bool = True) -> encoders.EncoderArch:
    return encoders.EncoderArch(
        d_img=10, d_txt=9, embed_dim=6, hidden_dim=8 if hidden else None
    )
