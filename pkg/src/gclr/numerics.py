"""Dense float64 linear algebra, stable reductions, and keyed deterministic RNG.

Everything here is pure: outputs depend only on inputs, and exported
operations guarantee finite results. Matrices are plain 2-D float64
``numpy`` arrays in row-major layout.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .errors import DegenerateEmbeddingError, ShapeError

NORM_FLOOR = 1e-12


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce ``a`` to a 2-D float64 array and validate finiteness."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got ndim={m.ndim}")
    if not np.isfinite(m).all():
        raise ShapeError(f"{name} contains non-finite entries")
    return m


def ensure_finite(m: np.ndarray, name: str = "result") -> np.ndarray:
    if not np.isfinite(m).all():
        raise ShapeError(f"{name} contains non-finite entries")
    return m


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with shape validation and a finiteness guarantee."""
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"inner dimensions differ: {a.shape} x {b.shape}")
    return ensure_finite(a @ b, "matmul result")


def row_norms(m: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(np.asarray(m, dtype=np.float64) ** 2, axis=1))


def row_l2_normalize(m: np.ndarray) -> np.ndarray:
    """Scale every row to unit Euclidean norm.

    Raises ``DegenerateEmbeddingError`` if any row norm falls below
    ``NORM_FLOOR``; normalizing such a row would amplify noise without bound.
    """
    m = as_matrix(m)
    norms = row_norms(m)
    if (norms < NORM_FLOOR).any():
        bad = int(np.argmin(norms))
        raise DegenerateEmbeddingError(
            f"row {bad} has norm {norms[bad]:.3e} < {NORM_FLOOR:.0e}"
        )
    return m / norms[:, None]


def logsumexp_rows(m: np.ndarray) -> np.ndarray:
    """Per-row log(sum(exp(.))) via max-subtraction.

    Rows may contain ``-inf`` entries (used to mask excluded terms); every
    row must keep at least one finite entry.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.size == 0:
        raise ShapeError(f"need a nonempty 2-D array, got shape {m.shape}")
    mx = np.max(m, axis=1)
    if not np.isfinite(mx).all():
        raise ShapeError("a row has no finite entries")
    # exp(-inf - mx) underflows to exactly 0, so masked entries drop out.
    out = mx + np.log(np.sum(np.exp(m - mx[:, None]), axis=1))
    return ensure_finite(out, "logsumexp result")


_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    """One round of the splitmix64 mixer (pure 64-bit integer arithmetic)."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _key_to_word(key) -> int:
    """Map a child-stream key (int or str) to a 64-bit word, deterministically."""
    if isinstance(key, (int, np.integer)):
        return int(key) & _MASK64
    if isinstance(key, str):
        digest = hashlib.sha256(key.encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "little")
    raise TypeError(f"rng keys must be int or str, got {type(key).__name__}")


class Rng:
    """Counter-based (Philox) random stream, splittable by key.

    The same ``(seed, key path)`` always reproduces the same draws, on any
    platform and regardless of how sibling streams are consumed. Child
    streams are derived with :meth:`child`, so per-sample draws can be made
    independent of iteration order. Key derivation is plain 64-bit mixing,
    cheap enough to call once per sample per step.
    """

    __slots__ = ("seed", "_key_words", "_philox_key", "_gen")

    def __init__(self, seed: int, _key_words: tuple[int, ...] = ()):
        self.seed = int(seed)
        self._key_words = tuple(_key_words)
        state = _splitmix64(self.seed & _MASK64)
        for i, word in enumerate(self._key_words):
            state = _splitmix64(state ^ _splitmix64(word ^ (i + 1)))
        lo = _splitmix64(state ^ 0xA5A5A5A5A5A5A5A5)
        hi = _splitmix64(state ^ 0x3C3C3C3C3C3C3C3C)
        self._philox_key = (hi << 64) | lo
        self._gen: np.random.Generator | None = None

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Rng)
            and self.seed == other.seed
            and self._key_words == other._key_words
        )

    def __hash__(self) -> int:
        return hash((self.seed, self._key_words))

    def child(self, *keys) -> "Rng":
        """Derive an independent stream keyed by ``keys`` (ints or strings)."""
        words = tuple(_key_to_word(k) for k in keys)
        return Rng(self.seed, self._key_words + words)

    def fresh_generator(self) -> np.random.Generator:
        """A new generator at this stream's start (for pure re-draws)."""
        return np.random.Generator(np.random.Philox(key=self._philox_key))

    @property
    def _generator(self) -> np.random.Generator:
        if self._gen is None:
            self._gen = self.fresh_generator()
        return self._gen

    # -- draws (thin delegation to numpy's Generator) --

    def normal(self, size=None) -> np.ndarray:
        return self._generator.standard_normal(size)

    def uniform(self, low: float, high: float, size=None) -> np.ndarray:
        return self._generator.uniform(low, high, size)

    def integers(self, low: int, high: int, size=None):
        return self._generator.integers(low, high, size=size)

    def permutation(self, n: int) -> np.ndarray:
        return self._generator.permutation(n)

    def bytes(self, n: int) -> bytes:
        return self._generator.bytes(n)
