"""Small per-modality MLP encoders with hand-written forward/backward passes.

Both encoders map raw vectors to a shared embedding dimension. Hidden layers
use tanh (smooth everywhere, so finite-difference gradient checks are clean),
and the output is row-L2-normalized by default: normalized embeddings bound
the similarity magnitudes fed into exponentials by 1, which keeps every loss
overflow-free at practical temperatures. Normalization can be disabled per
architecture for ablations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateEmbeddingError, ShapeError
from .numerics import NORM_FLOOR, Rng, ensure_finite, row_norms

MODALITIES = ("image", "text")


@dataclass(frozen=True)
class EncoderArch:
    """Shapes of the two encoders. ``hidden_dim=None`` means one linear layer."""

    d_img: int = 32
    d_txt: int = 24
    embed_dim: int = 16
    hidden_dim: int | None = 64
    normalize: bool = True

    def __post_init__(self):
        for name in ("d_img", "d_txt", "embed_dim"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.hidden_dim is not None and self.hidden_dim < 1:
            raise ConfigError("hidden_dim must be >= 1 or None")

    def input_dim(self, modality: str) -> int:
        return self.d_img if modality == "image" else self.d_txt

    def to_json(self) -> str:
        return json.dumps(
            {
                "d_img": self.d_img,
                "d_txt": self.d_txt,
                "embed_dim": self.embed_dim,
                "hidden_dim": self.hidden_dim,
                "normalize": self.normalize,
            },
            sort_keys=True,
        )

    @staticmethod
    def from_json(text: str) -> "EncoderArch":
        return EncoderArch(**json.loads(text))


def tensor_specs(arch: EncoderArch) -> list[tuple[str, tuple[int, ...]]]:
    """Canonical tensor order: image layers first, then text; W before b."""
    specs = []
    for modality in MODALITIES:
        d_in = arch.input_dim(modality)
        if arch.hidden_dim is None:
            specs.append((f"{modality}.w1", (d_in, arch.embed_dim)))
            specs.append((f"{modality}.b1", (arch.embed_dim,)))
        else:
            specs.append((f"{modality}.w1", (d_in, arch.hidden_dim)))
            specs.append((f"{modality}.b1", (arch.hidden_dim,)))
            specs.append((f"{modality}.w2", (arch.hidden_dim, arch.embed_dim)))
            specs.append((f"{modality}.b2", (arch.embed_dim,)))
    return specs


def param_count(arch: EncoderArch) -> int:
    return sum(int(np.prod(shape)) for _, shape in tensor_specs(arch))


def param_slices(arch: EncoderArch) -> dict[str, slice]:
    """Position of each tensor inside the flattened parameter vector."""
    out, offset = {}, 0
    for name, shape in tensor_specs(arch):
        size = int(np.prod(shape))
        out[name] = slice(offset, offset + size)
        offset += size
    return out


def scale_invariant_groups(arch: EncoderArch) -> tuple[tuple[int, int], ...]:
    """Flat-vector spans of the output layer (W and b) of each encoder.

    Scaling an encoder's final layer by c > 0 scales its pre-normalization
    embeddings by c and leaves normalized outputs unchanged, so these groups
    are scale-invariant whenever ``arch.normalize`` is set.
    """
    if not arch.normalize:
        return ()
    slices = param_slices(arch)
    groups = []
    for modality in MODALITIES:
        last = "2" if arch.hidden_dim is not None else "1"
        w = slices[f"{modality}.w{last}"]
        b = slices[f"{modality}.b{last}"]
        groups.append((w.start, b.stop))
    return tuple(groups)


@dataclass
class EncoderParams:
    arch: EncoderArch
    tensors: dict[str, np.ndarray]

    def copy(self) -> "EncoderParams":
        return EncoderParams(self.arch, {k: v.copy() for k, v in self.tensors.items()})


@dataclass
class ForwardTape:
    """Intermediate activations cached for the backward pass."""

    modality: str
    inputs: np.ndarray
    hidden: np.ndarray | None  # tanh activations, None for linear encoders
    pre_norm: np.ndarray
    norms: np.ndarray | None  # None when normalization is disabled


def init(arch: EncoderArch, seed: int) -> EncoderParams:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases."""
    rng = Rng(seed)
    tensors = {}
    for name, shape in tensor_specs(arch):
        if name.split(".")[1].startswith("w"):
            bound = 1.0 / np.sqrt(shape[0])
            tensors[name] = rng.child("init", name).uniform(-bound, bound, shape)
        else:
            tensors[name] = np.zeros(shape)
    return EncoderParams(arch, tensors)


def forward(
    params: EncoderParams, inputs: np.ndarray, modality: str
) -> tuple[np.ndarray, ForwardTape]:
    """Encode a batch of raw vectors; returns embeddings and the tape."""
    if modality not in MODALITIES:
        raise ConfigError(f"unknown modality {modality!r}")
    arch = params.arch
    x = np.asarray(inputs, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != arch.input_dim(modality):
        raise ShapeError(
            f"{modality} inputs must be (m, {arch.input_dim(modality)}), got {x.shape}"
        )
    t = params.tensors
    if arch.hidden_dim is None:
        hidden = None
        pre_norm = x @ t[f"{modality}.w1"] + t[f"{modality}.b1"]
    else:
        hidden = np.tanh(x @ t[f"{modality}.w1"] + t[f"{modality}.b1"])
        pre_norm = hidden @ t[f"{modality}.w2"] + t[f"{modality}.b2"]
    ensure_finite(pre_norm, "embeddings")
    if arch.normalize:
        norms = row_norms(pre_norm)
        if (norms < NORM_FLOOR).any():
            bad = int(np.argmin(norms))
            raise DegenerateEmbeddingError(
                f"{modality} row {bad} has pre-normalization norm {norms[bad]:.3e}"
            )
        emb = pre_norm / norms[:, None]
    else:
        norms = None
        emb = pre_norm
    tape = ForwardTape(modality, x, hidden, pre_norm, norms)
    return emb, tape


def backward(
    params: EncoderParams, tape: ForwardTape, upstream: np.ndarray
) -> dict[str, np.ndarray]:
    """Exact VJP: d(loss)/d(tensor) for the tape's modality.

    ``upstream`` is d(loss)/d(embeddings) for the batch the tape came from.
    """
    arch = params.arch
    g = np.asarray(upstream, dtype=np.float64)
    if g.shape != tape.pre_norm.shape:
        raise ShapeError(
            f"upstream shape {g.shape} != embeddings shape {tape.pre_norm.shape}"
        )
    modality = tape.modality
    if arch.normalize:
        norms = tape.norms
        emb = tape.pre_norm / norms[:, None]
        # d/dy of y/|y|: remove the radial component, then rescale.
        radial = np.sum(g * emb, axis=1, keepdims=True)
        d_pre = (g - radial * emb) / norms[:, None]
    else:
        d_pre = g
    grads: dict[str, np.ndarray] = {}
    t = params.tensors
    if arch.hidden_dim is None:
        grads[f"{modality}.w1"] = tape.inputs.T @ d_pre
        grads[f"{modality}.b1"] = d_pre.sum(axis=0)
    else:
        grads[f"{modality}.w2"] = tape.hidden.T @ d_pre
        grads[f"{modality}.b2"] = d_pre.sum(axis=0)
        d_hidden = d_pre @ t[f"{modality}.w2"].T
        d_z = d_hidden * (1.0 - tape.hidden**2)
        grads[f"{modality}.w1"] = tape.inputs.T @ d_z
        grads[f"{modality}.b1"] = d_z.sum(axis=0)
    return grads


def flatten(params: EncoderParams) -> np.ndarray:
    """Concatenate all tensors into one vector in canonical order."""
    return np.concatenate(
        [params.tensors[name].ravel() for name, _ in tensor_specs(params.arch)]
    )


def unflatten(arch: EncoderArch, vector: np.ndarray) -> EncoderParams:
    vector = np.asarray(vector, dtype=np.float64)
    expected = param_count(arch)
    if vector.shape != (expected,):
        raise ShapeError(f"expected a vector of length {expected}, got {vector.shape}")
    tensors, offset = {}, 0
    for name, shape in tensor_specs(arch):
        size = int(np.prod(shape))
        tensors[name] = vector[offset : offset + size].reshape(shape).copy()
        offset += size
    return EncoderParams(arch, tensors)


def grads_to_vector(arch: EncoderArch, grads: dict[str, np.ndarray]) -> np.ndarray:
    """Place (possibly partial) per-tensor gradients into a flat vector."""
    out = np.zeros(param_count(arch))
    slices = param_slices(arch)
    for name, g in grads.items():
        out[slices[name]] += g.ravel()
    return out
