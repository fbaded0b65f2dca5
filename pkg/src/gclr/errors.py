"""Exception types shared across the package."""

from __future__ import annotations

import numpy as np


class GclrError(Exception):
    """Base class for all package errors."""


class ShapeError(GclrError):
    """Operand dimensions are incompatible with the requested operation."""


class DegenerateEmbeddingError(GclrError):
    """A vector that must be normalized has (near-)zero norm."""


class ConfigError(GclrError):
    """Invalid or inconsistent configuration values."""


class DataFormatError(GclrError):
    """A serialized file is truncated or has the wrong magic/version."""


class DataIntegrityError(GclrError):
    """A serialized file fails its checksum."""


class UnsupportedDatasetError(GclrError):
    """The dataset lacks the generation metadata an operation needs."""


class OracleScaleError(GclrError):
    """Exact full-dataset evaluation requested beyond its size guard."""


class EmptyDenominatorError(GclrError):
    """A contrastive denominator set is empty (batch too small)."""


class ColdStartError(GclrError):
    """A moving-average entry is still zero at the point of use."""


class NumericAbortError(GclrError):
    """Training hit a non-finite loss; carries the offending batch indices."""

    def __init__(self, message: str, batch_indices=None):
        super().__init__(message)
        self.batch_indices = (
            np.asarray(batch_indices).tolist() if batch_indices is not None else []
        )
