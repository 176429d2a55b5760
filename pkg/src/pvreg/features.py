"""Fixed polynomial feature maps built from an input vector's outer product.

Every map is a pure function of the (normalized) input vector x of length nf:

    linear  raw features                                   -> nf
    nl1     pairwise products x_i*x_j, i < j                -> nf*(nf-1)/2
    nl2     squares x_i^2                                   -> nf
    nl3     pairs then squares                              -> nf*(nf+1)/2
    nl4     linear then pairs                               -> nf + nf*(nf-1)/2
    nl5     linear then squares                             -> 2*nf
    nl6     linear then pairs then squares                  -> nf + nf*(nf+1)/2

Pairs are the strict upper triangle of the outer-product matrix in row-major
order: (1,2),(1,3),...,(1,nf),(2,3),...  Composite maps concatenate their
blocks in the order listed, so downstream weight layouts are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class FeatureMapKind(str, Enum):
    LINEAR = "linear"
    NL1 = "nl1"
    NL2 = "nl2"
    NL3 = "nl3"
    NL4 = "nl4"
    NL5 = "nl5"
    NL6 = "nl6"


#: Maps that contain a pairwise-product block and therefore need nf >= 2.
CROSS_PRODUCT_KINDS = frozenset(
    {FeatureMapKind.NL1, FeatureMapKind.NL3, FeatureMapKind.NL4, FeatureMapKind.NL6})

#: Fixed order used by comparison runs and reports.
ALL_KINDS = (FeatureMapKind.LINEAR, FeatureMapKind.NL1, FeatureMapKind.NL2,
             FeatureMapKind.NL3, FeatureMapKind.NL4, FeatureMapKind.NL5,
             FeatureMapKind.NL6)


class FeatureError(ValueError):
    """Raised for inputs a feature map is not defined on."""


@dataclass(frozen=True)
class FeatureVector:
    kind: FeatureMapKind
    values: np.ndarray

    def __len__(self) -> int:
        return len(self.values)


def outer_product(x) -> np.ndarray:
    """nf x nf matrix with entry (i, j) = x_i * x_j."""
    x = _as_vector(x)
    return np.outer(x, x)


def _as_vector(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise FeatureError("input must be a non-empty 1-D vector")
    if not np.all(np.isfinite(x)):
        raise FeatureError("input vector contains non-finite entries")
    return x


def _pairs(x: np.ndarray) -> np.ndarray:
    i, j = np.triu_indices(len(x), k=1)
    return x[i] * x[j]


def featurize(x, kind: FeatureMapKind) -> FeatureVector:
    """Apply one feature map to a vector.

    Maps with a pairwise block (nl1/nl3/nl4/nl6) are undefined for nf = 1
    because no off-diagonal products exist.
    """
    kind = FeatureMapKind(kind)
    x = _as_vector(x)
    if len(x) < 2 and kind in CROSS_PRODUCT_KINDS:
        raise FeatureError("feature map undefined for single-feature input")

    if kind is FeatureMapKind.LINEAR:
        values = x.copy()
    elif kind is FeatureMapKind.NL1:
        values = _pairs(x)
    elif kind is FeatureMapKind.NL2:
        values = x * x
    elif kind is FeatureMapKind.NL3:
        values = np.concatenate([_pairs(x), x * x])
    elif kind is FeatureMapKind.NL4:
        values = np.concatenate([x, _pairs(x)])
    elif kind is FeatureMapKind.NL5:
        values = np.concatenate([x, x * x])
    else:
        values = np.concatenate([x, _pairs(x), x * x])

    return FeatureVector(kind=kind, values=values)


def dimensionality(kind: FeatureMapKind, nf: int) -> int:
    """Closed-form output length of a feature map for nf input features."""
    kind = FeatureMapKind(kind)
    if nf < 1:
        raise FeatureError(f"nf must be >= 1, got {nf}")
    pairs = nf * (nf - 1) // 2
    return {
        FeatureMapKind.LINEAR: nf,
        FeatureMapKind.NL1: pairs,
        FeatureMapKind.NL2: nf,
        FeatureMapKind.NL3: pairs + nf,
        FeatureMapKind.NL4: nf + pairs,
        FeatureMapKind.NL5: 2 * nf,
        FeatureMapKind.NL6: nf + pairs + nf,
    }[kind]


def featurize_matrix(rows: np.ndarray, kind: FeatureMapKind) -> np.ndarray:
    """Featurize each row of a (n, nf) matrix into a (n, dim) matrix."""
    rows = np.asarray(rows, dtype=float)
    return np.array([featurize(row, kind).values for row in rows])
