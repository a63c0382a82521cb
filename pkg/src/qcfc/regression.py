"""Least-squares residualization on labeled design and signal matrices.

Every fit demeans signals and regressors first, which is equivalent to
carrying an implicit intercept, and then removes the fitted regressor
contribution by projecting onto the orthogonal complement of the design's
column space. The projector comes from a rank-revealing pivoted QR, so
collinear, constant, or otherwise rank-deficient designs are handled; the
residuals are the same ones a minimum-norm least-squares solve leaves behind.

Applying `ols_residualize` block by block only guarantees orthogonality to
the last block regressed: earlier blocks can re-enter through later,
correlated ones. `sequential_residualize` deliberately preserves that
behavior; use a single concatenated design when joint removal is wanted.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import DataIntegrityError, DegenerateInputError, DimensionError

__all__ = [
    "RegressorSource",
    "DesignMatrix",
    "SignalMatrix",
    "demean",
    "demean_columns",
    "residualize_columns",
    "ols_residualize",
    "concat_designs",
    "sequential_residualize",
    "max_abs_correlation",
]


class RegressorSource(Enum):
    """Provenance tag for a design block."""

    HMP = "HMP"
    AROMA = "AROMA"
    PHYSIO = "PHYSIO"
    MIXED = "MIXED"


def _validated_matrix(values, what: str, min_rows: int) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != 2:
        raise DimensionError(f"{what} must be a 2-d matrix, got shape {arr.shape}")
    if arr.shape[0] < min_rows:
        raise DimensionError(f"{what} needs at least {min_rows} rows, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise DataIntegrityError(f"{what} contains NaN or infinite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class DesignMatrix:
    """One block of nuisance regressors: n_timepoints rows by k labeled columns.

    Values are validated (finite, at least two rows) and frozen read-only at
    construction; k may be zero for an empty block.
    """

    values: np.ndarray
    column_labels: tuple[str, ...]
    source: RegressorSource

    def __post_init__(self):
        arr = _validated_matrix(self.values, "design matrix", min_rows=2)
        labels = tuple(str(lab) for lab in self.column_labels)
        if len(labels) != arr.shape[1]:
            raise DimensionError(
                f"design matrix has {arr.shape[1]} columns but {len(labels)} labels"
            )
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "column_labels", labels)

    @property
    def n_timepoints(self) -> int:
        return self.values.shape[0]

    @property
    def k(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class SignalMatrix:
    """n_timepoints rows by m columns of signals, one column per voxel or ROI.

    `column_labels` is optional; when present it names the ROIs and is carried
    through residualization unchanged.
    """

    values: np.ndarray
    column_labels: tuple[str, ...] | None = None

    def __post_init__(self):
        arr = _validated_matrix(self.values, "signal matrix", min_rows=1)
        labels = self.column_labels
        if labels is not None:
            labels = tuple(str(lab) for lab in labels)
            if len(labels) != arr.shape[1]:
                raise DimensionError(
                    f"signal matrix has {arr.shape[1]} columns but {len(labels)} labels"
                )
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "column_labels", labels)

    @property
    def n_timepoints(self) -> int:
        return self.values.shape[0]

    @property
    def m_signals(self) -> int:
        return self.values.shape[1]


def demean_columns(arr: np.ndarray) -> np.ndarray:
    """Subtract each column's mean.

    Two passes keep the residual mean at the rounding floor of the centered
    data instead of at the scale of the raw input.
    """
    out = arr - arr.mean(axis=0, keepdims=True)
    out -= out.mean(axis=0, keepdims=True)
    return out


def demean(m: SignalMatrix | DesignMatrix) -> SignalMatrix | DesignMatrix:
    """Return a copy of a signal or design matrix with zero-mean columns."""
    if isinstance(m, DesignMatrix):
        return DesignMatrix(demean_columns(m.values), m.column_labels, m.source)
    if isinstance(m, SignalMatrix):
        return SignalMatrix(demean_columns(m.values), m.column_labels)
    raise TypeError(f"demean expects a SignalMatrix or DesignMatrix, got {type(m).__name__}")


def residualize_columns(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Residualize already-demeaned arrays: y (n, m) against x (n, k).

    Rank is decided from the pivoted QR with tolerance
    max(n, k) * eps * |R[0, 0]|, so exactly collinear or zero columns drop
    out. The projection is applied twice; the second pass clears the
    numerical correlation floor left by the first.
    """
    if x.shape[1] == 0:
        return y.copy()
    q, r, _ = scipy.linalg.qr(x, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    scale = diag[0] if diag.size else 0.0
    tol = max(x.shape) * np.finfo(float).eps * scale
    rank = int(np.count_nonzero(diag > tol))
    if rank == 0:
        return y.copy()
    qb = q[:, :rank]
    resid = y - qb @ (qb.T @ y)
    resid -= qb @ (qb.T @ resid)
    return resid


def ols_residualize(Y: SignalMatrix, X: DesignMatrix) -> SignalMatrix:
    """Remove the least-squares fit of X from every column of Y.

    Both inputs are demeaned internally. The residuals are orthogonal to
    every design column; for rank-deficient X they equal the residuals of
    the minimum-norm solution. Column labels of Y are preserved.
    """
    if Y.n_timepoints != X.n_timepoints:
        raise DimensionError(
            f"signals have {Y.n_timepoints} rows but design has {X.n_timepoints}"
        )
    e = residualize_columns(demean_columns(Y.values), demean_columns(X.values))
    return SignalMatrix(e, Y.column_labels)


def concat_designs(
    blocks: Sequence[DesignMatrix], n_timepoints: int | None = None
) -> DesignMatrix:
    """Column-concatenate blocks into one MIXED design.

    Column labels gain a source prefix so provenance survives the merge.
    An empty block list carries no row count, so `n_timepoints` must be
    given explicitly in that case.
    """
    blocks = list(blocks)
    if not blocks:
        if n_timepoints is None:
            raise DimensionError("concatenating zero blocks requires an explicit n_timepoints")
        return DesignMatrix(np.zeros((n_timepoints, 0)), (), RegressorSource.MIXED)
    n = blocks[0].n_timepoints
    for b in blocks[1:]:
        if b.n_timepoints != n:
            raise DimensionError(
                f"blocks disagree on row count: {n} vs {b.n_timepoints}"
            )
    values = np.hstack([b.values for b in blocks])
    labels = tuple(
        f"{b.source.value}:{lab}" for b in blocks for lab in b.column_labels
    )
    return DesignMatrix(values, labels, RegressorSource.MIXED)


def sequential_residualize(
    Y: SignalMatrix, blocks: Sequence[DesignMatrix]
) -> SignalMatrix:
    """Regress out blocks one at a time, in the order given.

    Each step is a projection, so the output is guaranteed orthogonal to the
    LAST block only. When blocks correlate, later steps reintroduce signal
    aligned with earlier blocks; that reintroduction is a real property of
    ordered filtering and is left intact here.
    """
    e = demean(Y)
    for b in blocks:
        e = ols_residualize(e, b)
    return e


def max_abs_correlation(E: SignalMatrix, X: DesignMatrix) -> float:
    """Largest |Pearson r| over all (signal column, design column) pairs.

    Columns that are constant to within rounding of their own scale are
    skipped. If one side has no varying column at all there is nothing to
    correlate.
    """
    if E.n_timepoints != X.n_timepoints:
        raise DimensionError(
            f"signals have {E.n_timepoints} rows but design has {X.n_timepoints}"
        )
    n = E.n_timepoints
    eps = np.finfo(float).eps

    def varying(values: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        centered = demean_columns(values)
        ss = np.einsum("ij,ij->j", centered, centered)
        norms = np.sqrt(ss)
        col_scale = np.max(np.abs(values), axis=0, initial=0.0)
        mask = norms > n * eps * np.maximum(col_scale, 1e-300)
        return centered[:, mask], ss[mask], mask

    e_centered, e_ss, e_mask = varying(E.values)
    x_centered, x_ss, x_mask = varying(X.values)
    if not e_mask.any() or not x_mask.any():
        raise DegenerateInputError(
            "all columns are constant on one side; no correlation is defined"
        )
    # One square root of the product keeps an exact column match at exactly 1.
    corr = (e_centered.T @ x_centered) / np.sqrt(np.multiply.outer(e_ss, x_ss))
    return float(min(1.0, float(np.abs(corr).max())))
