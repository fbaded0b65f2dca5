"""Synthetic paired bimodal datasets with known latent class structure.

Each sample draws a class ``c``, a latent ``z = mu_c + eps`` with
``eps ~ N(0, sigma^2 I)``, and emits the pair ``image = A z``, ``text = B z``
through fixed random linear maps. Because both modalities are linear images
of the *same* latent draw, a linear encoder can provably align them, which
makes end-to-end training success a meaningful signal rather than luck.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace

import numpy as np

from . import container
from .errors import ConfigError, DataFormatError, UnsupportedDatasetError
from .numerics import Rng

MAGIC = b"GCLD"

# Calibrated so that with the default geometry (50 classes, latent_dim 8) the
# nearest text of an image shares its label >= 95% of the time; see tests.
DEFAULT_NOISE_SIGMA = 0.25


@dataclass(frozen=True)
class GenConfig:
    """Parameters of the generative model.

    ``map_seed`` fixes the task structure (class means and the two modal
    maps); ``data_seed`` fixes the per-sample draws. ``noise_sigma`` is the
    within-class latent standard deviation.
    """

    n: int
    class_count: int
    latent_dim: int
    d_img: int
    d_txt: int
    noise_sigma: float = DEFAULT_NOISE_SIGMA
    map_seed: int = 7
    data_seed: int = 11

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError(f"n must be >= 1, got {self.n}")
        if self.class_count < 2:
            raise ConfigError(f"class_count must be >= 2, got {self.class_count}")
        if self.latent_dim < 1:
            raise ConfigError(f"latent_dim must be >= 1, got {self.latent_dim}")
        if self.noise_sigma < 0:
            raise ConfigError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if self.d_img < self.latent_dim or self.d_txt < self.latent_dim:
            raise ConfigError(
                "d_img and d_txt must be >= latent_dim "
                f"(got d_img={self.d_img}, d_txt={self.d_txt}, "
                f"latent_dim={self.latent_dim}); smaller maps would lose rank"
            )


@dataclass
class BimodalDataset:
    n: int
    d_img: int
    d_txt: int
    images: np.ndarray  # (n, d_img)
    texts: np.ndarray  # (n, d_txt)
    labels: np.ndarray  # (n,) int class ids
    class_count: int
    gen_config: GenConfig | None = None

    def __post_init__(self):
        if not (self.images.shape == (self.n, self.d_img)):
            raise ConfigError("images shape inconsistent with n/d_img")
        if not (self.texts.shape == (self.n, self.d_txt)):
            raise ConfigError("texts shape inconsistent with n/d_txt")
        if self.labels.shape != (self.n,):
            raise ConfigError("labels length inconsistent with n")
        if self.n and (self.labels.min() < 0 or self.labels.max() >= self.class_count):
            raise ConfigError("labels must lie in [0, class_count)")

    def take(self, indices) -> "BimodalDataset":
        """Subset/permute samples; pairing (image, text, label) is preserved."""
        idx = np.asarray(indices, dtype=np.int64)
        return BimodalDataset(
            n=len(idx),
            d_img=self.d_img,
            d_txt=self.d_txt,
            images=self.images[idx].copy(),
            texts=self.texts[idx].copy(),
            labels=self.labels[idx].copy(),
            class_count=self.class_count,
            gen_config=self.gen_config,
        )

    def equals(self, other: "BimodalDataset") -> bool:
        return (
            self.n == other.n
            and self.d_img == other.d_img
            and self.d_txt == other.d_txt
            and self.class_count == other.class_count
            and np.array_equal(self.images, other.images)
            and np.array_equal(self.texts, other.texts)
            and np.array_equal(self.labels, other.labels)
            and self.gen_config == other.gen_config
        )


def _orthonormal_columns(rng: Rng, rows: int, cols: int) -> np.ndarray:
    """Random map with orthonormal columns, so latent geometry is preserved."""
    gauss = rng.normal((rows, cols))
    q, r = np.linalg.qr(gauss)
    # Fix the sign ambiguity of QR so the map is deterministic.
    q = q * np.sign(np.diag(r))[None, :]
    return q


def class_means(config: GenConfig) -> np.ndarray:
    """Latent class centers mu_c, (class_count, latent_dim)."""
    rng = Rng(config.map_seed).child("class_means")
    return rng.normal((config.class_count, config.latent_dim))


def modal_maps(config: GenConfig) -> tuple[np.ndarray, np.ndarray]:
    """The fixed linear maps (A, B): latent -> image space / text space."""
    root = Rng(config.map_seed)
    a = _orthonormal_columns(root.child("map_img"), config.d_img, config.latent_dim)
    b = _orthonormal_columns(root.child("map_txt"), config.d_txt, config.latent_dim)
    return a, b


def generate(config: GenConfig) -> BimodalDataset:
    """Deterministically generate a dataset from ``config``."""
    mu = class_means(config)
    a, b = modal_maps(config)
    data_rng = Rng(config.data_seed)
    labels = np.asarray(
        data_rng.child("labels").integers(0, config.class_count, config.n),
        dtype=np.int64,
    )
    eps = data_rng.child("latents").normal((config.n, config.latent_dim))
    z = mu[labels] + config.noise_sigma * eps
    return BimodalDataset(
        n=config.n,
        d_img=config.d_img,
        d_txt=config.d_txt,
        images=z @ a.T,
        texts=z @ b.T,
        labels=labels,
        class_count=config.class_count,
        gen_config=config,
    )


def make_class_prototypes(dataset: BimodalDataset) -> np.ndarray:
    """Noise-free text vector of each class mean: row c is ``B mu_c``."""
    if dataset.gen_config is None:
        raise UnsupportedDatasetError(
            "dataset has no generation config; prototypes are undefined"
        )
    mu = class_means(dataset.gen_config)
    _, b = modal_maps(dataset.gen_config)
    return mu @ b.T


def save(dataset: BimodalDataset, path) -> None:
    """Write the binary dataset file (magic GCLD, version, arrays, CRC32)."""
    parts = [
        container.pack_u64(dataset.n),
        container.pack_u64(dataset.d_img),
        container.pack_u64(dataset.d_txt),
        container.pack_u64(dataset.class_count),
        container.pack_f64_array(dataset.images),
        container.pack_f64_array(dataset.texts),
        container.pack_u32_array(dataset.labels),
    ]
    if dataset.gen_config is not None:
        cfg = json.dumps(asdict(dataset.gen_config), sort_keys=True).encode()
    else:
        cfg = b""
    parts.append(container.pack_blob(cfg))
    container.write_file(path, MAGIC, b"".join(parts))


def load(path) -> BimodalDataset:
    """Read a dataset file; raises on bad magic, truncation, or CRC mismatch."""
    r = container.read_file(path, MAGIC)
    n = r.u64()
    d_img = r.u64()
    d_txt = r.u64()
    class_count = r.u64()
    images = r.f64_array(n * d_img).reshape(n, d_img)
    texts = r.f64_array(n * d_txt).reshape(n, d_txt)
    labels = r.u32_array(n)
    cfg_blob = r.blob()
    if r.pos != len(r.data):
        raise DataFormatError(f"{path}: {len(r.data) - r.pos} trailing bytes")
    gen_config = None
    if cfg_blob:
        fields = json.loads(cfg_blob.decode())
        gen_config = GenConfig(**fields)
    return BimodalDataset(
        n=n,
        d_img=d_img,
        d_txt=d_txt,
        images=images,
        texts=texts,
        labels=labels,
        class_count=class_count,
        gen_config=gen_config,
    )


def strip_gen_config(dataset: BimodalDataset) -> BimodalDataset:
    """Copy of the dataset without generation metadata (for error-path tests)."""
    out = dataset.take(np.arange(dataset.n))
    out.gen_config = None
    return out


def with_noise_sigma(config: GenConfig, sigma: float) -> GenConfig:
    return replace(config, noise_sigma=sigma)
