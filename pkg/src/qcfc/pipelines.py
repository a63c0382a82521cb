"""Nuisance blocks per subject and the four correction strategies.

A subject carries ROI timeseries, a 6-parameter rigid-body motion trace,
a per-subject motion-component block (width varies, may be empty), and two
physiological mean signals. The motion trace expands to 24 regressors:
the 6 parameters, their backward-difference derivatives, and the squares
of both sets. Correction is either no-op demeaning, one of two sequential
block orderings, or a single regression on all blocks concatenated.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DataIntegrityError, DimensionError, ValidationError
from .regression import (
    DesignMatrix,
    RegressorSource,
    SignalMatrix,
    concat_designs,
    demean,
    ols_residualize,
    sequential_residualize,
)

__all__ = [
    "HMP_PARAM_LABELS",
    "HeadMotion",
    "PipelineKind",
    "PipelineSpec",
    "SubjectBundle",
    "RoiTimeSeries",
    "expand_hmp24",
    "build_blocks",
    "run_pipeline",
]

# Column order of every motion file and HeadMotion matrix: translations in
# mm, then rotations in radians.
HMP_PARAM_LABELS = ("dx_mm", "dy_mm", "dz_mm", "rx_rad", "ry_rad", "rz_rad")

# A signal matrix whose columns are ROI timeseries.
RoiTimeSeries = SignalMatrix


@dataclass(frozen=True)
class HeadMotion:
    """Rigid-body realignment trace: n_timepoints rows by 6 parameters."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 6:
            raise DimensionError(
                f"head motion must be n x 6 (dx, dy, dz, rx, ry, rz), got shape {arr.shape}"
            )
        if arr.shape[0] < 2:
            raise DimensionError(f"head motion needs at least 2 rows, got {arr.shape[0]}")
        if not np.all(np.isfinite(arr)):
            raise DataIntegrityError("head motion contains NaN or infinite entries")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def n_timepoints(self) -> int:
        return self.values.shape[0]


class PipelineKind(Enum):
    """The four correction strategies, named as the CLI spells them."""

    BASELINE = "baseline"
    SEQ_HMP_AROMA_PHYSIO = "seq-hmp-aroma-physio"
    SEQ_AROMA_HMP_PHYSIO = "seq-aroma-hmp-physio"
    CONCAT_ALL = "concat"

    @classmethod
    def from_name(cls, name: str) -> "PipelineKind":
        for kind in cls:
            if kind.value == name:
                return kind
        valid = ", ".join(kind.value for kind in cls)
        raise ValidationError(f"unknown pipeline {name!r}; valid names: {valid}")


@dataclass(frozen=True)
class PipelineSpec:
    """Selects exactly one correction strategy."""

    kind: PipelineKind

    def __post_init__(self):
        if not isinstance(self.kind, PipelineKind):
            raise ValidationError(f"kind must be a PipelineKind, got {self.kind!r}")


@dataclass(frozen=True)
class SubjectBundle:
    """Everything one subject contributes: timeseries plus nuisance inputs.

    The motion-component block may be empty (zero columns) for a subject
    where none were flagged; the physio block is always the two mask means.
    """

    subject_id: str
    ts: RoiTimeSeries
    motion: HeadMotion
    aroma: DesignMatrix
    physio: DesignMatrix

    def __post_init__(self):
        n = self.ts.n_timepoints
        for name, rows in (
            ("motion", self.motion.n_timepoints),
            ("aroma", self.aroma.n_timepoints),
            ("physio", self.physio.n_timepoints),
        ):
            if rows != n:
                raise DimensionError(
                    f"subject {self.subject_id!r}: {name} has {rows} rows, timeseries has {n}"
                )
        if self.physio.k != 2:
            raise DimensionError(
                f"subject {self.subject_id!r}: physio must have exactly 2 columns "
                f"(white-matter mean, non-brain mean), got {self.physio.k}"
            )

    @property
    def n_timepoints(self) -> int:
        return self.ts.n_timepoints


def expand_hmp24(motion: HeadMotion) -> DesignMatrix:
    """Expand 6 motion parameters to the standard 24-regressor block.

    Fixed column order keeps file outputs byte-stable: the 6 parameters,
    their 6 backward-difference derivatives (first row 0), the 6 squared
    parameters, the 6 squared derivatives.
    """
    params = motion.values
    deriv = np.zeros_like(params)
    deriv[1:] = np.diff(params, axis=0)
    values = np.hstack([params, deriv, params**2, deriv**2])
    labels = (
        tuple(HMP_PARAM_LABELS)
        + tuple(f"{p}_deriv" for p in HMP_PARAM_LABELS)
        + tuple(f"{p}_sq" for p in HMP_PARAM_LABELS)
        + tuple(f"{p}_deriv_sq" for p in HMP_PARAM_LABELS)
    )
    return DesignMatrix(values, labels, RegressorSource.HMP)


def build_blocks(bundle: SubjectBundle) -> dict[RegressorSource, DesignMatrix]:
    """Assemble the three nuisance blocks for one subject.

    The motion block is the 24-regressor expansion; the other two pass
    through with their source tags normalized.
    """
    return {
        RegressorSource.HMP: expand_hmp24(bundle.motion),
        RegressorSource.AROMA: DesignMatrix(
            bundle.aroma.values, bundle.aroma.column_labels, RegressorSource.AROMA
        ),
        RegressorSource.PHYSIO: DesignMatrix(
            bundle.physio.values, bundle.physio.column_labels, RegressorSource.PHYSIO
        ),
    }


def run_pipeline(bundle: SubjectBundle, spec: PipelineSpec) -> RoiTimeSeries:
    """Apply one correction strategy to a subject's timeseries.

    Sequential strategies regress the blocks out one at a time in the
    stated order, so only the final (physio) block is guaranteed removed;
    the concatenated strategy projects once onto the joint column space
    and removes all three simultaneously. ROI labels pass through.
    """
    if spec.kind is PipelineKind.BASELINE:
        return demean(bundle.ts)
    blocks = build_blocks(bundle)
    hmp = blocks[RegressorSource.HMP]
    aroma = blocks[RegressorSource.AROMA]
    physio = blocks[RegressorSource.PHYSIO]
    if spec.kind is PipelineKind.SEQ_HMP_AROMA_PHYSIO:
        return sequential_residualize(bundle.ts, [hmp, aroma, physio])
    if spec.kind is PipelineKind.SEQ_AROMA_HMP_PHYSIO:
        return sequential_residualize(bundle.ts, [aroma, hmp, physio])
    if spec.kind is PipelineKind.CONCAT_ALL:
        return ols_residualize(bundle.ts, concat_designs([aroma, hmp, physio]))
    raise ValidationError(f"unhandled pipeline kind {spec.kind!r}")
