"""Motion summaries, connectivity matrices, and the two quality metrics.

Framewise displacement condenses the 6-parameter motion trace to one
scalar per timepoint (rotations converted to mm on a 50 mm sphere) and its
mean summarizes a subject. Connectivity is plain Pearson correlation
between ROI columns. The quality metrics correlate, across subjects, each
edge's connectivity with mean framewise displacement (QC-FC), then rank-
correlate those per-edge values with inter-ROI Euclidean distance
(distance dependence). Significance uses the t transform with m - 2
degrees of freedom for both Pearson and Spearman; no permutation tests.

Edges whose connectivity does not vary across subjects have no defined
QC-FC value: they are excluded pairwise from the median and the distance
dependence, stored as NaN, and counted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.special
import scipy.stats

from .errors import (
    DataIntegrityError,
    DegenerateInputError,
    DimensionError,
    SchemaError,
)
from .pipelines import HeadMotion, RoiTimeSeries

__all__ = [
    "FcMatrix",
    "Parcellation",
    "QcFcReport",
    "default_roi_labels",
    "framewise_displacement",
    "mean_fd",
    "pearson",
    "spearman",
    "fc_matrix",
    "edge_lengths",
    "qcfc",
    "distance_dependence",
]


def default_roi_labels(r: int) -> tuple[str, ...]:
    """Zero-padded ROI names used when the caller supplies none."""
    width = max(3, len(str(max(r - 1, 0))))
    return tuple(f"roi_{i:0{width}d}" for i in range(r))


@dataclass(frozen=True)
class FcMatrix:
    """Square connectivity matrix with labeled ROIs.

    Diagonal is exactly 1, symmetry holds within 1e-12, and off-diagonal
    entries sit in [-1, 1]; construction rejects anything else.
    """

    values: np.ndarray
    roi_labels: tuple[str, ...]

    def __post_init__(self):
        arr = np.array(self.values, dtype=float)
        labels = tuple(str(lab) for lab in self.roi_labels)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise DimensionError(f"connectivity matrix must be square, got shape {arr.shape}")
        r = arr.shape[0]
        if len(labels) != r:
            raise DimensionError(f"matrix has {r} ROIs but {len(labels)} labels")
        if not np.all(np.isfinite(arr)):
            raise DataIntegrityError("connectivity matrix contains NaN or infinite entries")
        if np.abs(arr - arr.T).max(initial=0.0) > 1e-12:
            raise DataIntegrityError("connectivity matrix is not symmetric within 1e-12")
        if not np.all(np.diag(arr) == 1.0):
            raise DataIntegrityError("connectivity diagonal must be exactly 1")
        if arr.min(initial=1.0) < -1.0 or arr.max(initial=-1.0) > 1.0:
            raise DataIntegrityError("connectivity entries must lie in [-1, 1]")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "roi_labels", labels)

    @property
    def n_rois(self) -> int:
        return self.values.shape[0]

    def upper_triangle(self) -> np.ndarray:
        """Edge values in row-major upper-triangle order, length r(r-1)/2."""
        iu, ju = np.triu_indices(self.n_rois, k=1)
        return self.values[iu, ju]


@dataclass(frozen=True)
class Parcellation:
    """ROI labels plus centroid coordinates in mm."""

    roi_labels: tuple[str, ...]
    centroids: np.ndarray

    def __post_init__(self):
        labels = tuple(str(lab) for lab in self.roi_labels)
        arr = np.array(self.centroids, dtype=float)
        if len(labels) < 2:
            raise DimensionError(f"parcellation needs at least 2 ROIs, got {len(labels)}")
        if len(set(labels)) != len(labels):
            raise SchemaError("parcellation labels must be unique")
        if arr.ndim != 2 or arr.shape != (len(labels), 3):
            raise DimensionError(
                f"centroids must be {len(labels)} x 3 coordinates, got shape {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise DataIntegrityError("centroids contain NaN or infinite entries")
        arr.setflags(write=False)
        object.__setattr__(self, "roi_labels", labels)
        object.__setattr__(self, "centroids", arr)

    @property
    def n_rois(self) -> int:
        return len(self.roi_labels)


@dataclass
class QcFcReport:
    """Per-edge QC-FC values plus summary statistics.

    `edge_qcfc` and `edge_pvalues` hold NaN at undefined edges (those with
    zero connectivity variance across subjects). `dist_dependence_rho` and
    `dist_dependence_p` stay None until `distance_dependence` fills them.
    """

    edge_qcfc: np.ndarray
    edge_pvalues: np.ndarray
    median_abs_qcfc: float
    n_subjects: int
    undefined_edge_count: int = 0
    dist_dependence_rho: float | None = None
    dist_dependence_p: float | None = None
    roi_labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        r_vals = np.asarray(self.edge_qcfc, dtype=float)
        p_vals = np.asarray(self.edge_pvalues, dtype=float)
        if r_vals.shape != p_vals.shape or r_vals.ndim != 1:
            raise DimensionError("edge r and p vectors must be 1-d and the same length")
        defined = ~np.isnan(r_vals)
        if int((~defined).sum()) != self.undefined_edge_count:
            raise DimensionError("undefined_edge_count does not match NaN count")
        if defined.any():
            if r_vals[defined].min() < -1.0 or r_vals[defined].max() > 1.0:
                raise DataIntegrityError("edge QC-FC values must lie in [-1, 1]")
            if p_vals[defined].min() < 0.0 or p_vals[defined].max() > 1.0:
                raise DataIntegrityError("edge p-values must lie in [0, 1]")
        self.edge_qcfc = r_vals
        self.edge_pvalues = p_vals

    @property
    def n_edges(self) -> int:
        return int(self.edge_qcfc.shape[0])

    @property
    def defined_edge_count(self) -> int:
        return self.n_edges - self.undefined_edge_count


def framewise_displacement(motion: HeadMotion, radius_mm: float = 50.0) -> np.ndarray:
    """Per-timepoint displacement: sum of absolute backward differences.

    Translations contribute in mm directly; rotations (radians) are
    converted to arc length on a sphere of `radius_mm`. The first frame has
    no predecessor and gets 0 by convention. Per-frame sums are correctly
    rounded (math.fsum) so hand-checkable decimal examples come out exact.
    """
    if not np.isfinite(radius_mm) or radius_mm <= 0:
        raise DegenerateInputError(f"radius_mm must be positive and finite, got {radius_mm}")
    diffs = np.abs(np.diff(motion.values, axis=0))
    fd = np.zeros(motion.n_timepoints)
    for t, row in enumerate(diffs, start=1):
        fd[t] = math.fsum(row[:3]) + radius_mm * math.fsum(row[3:])
    return fd


def mean_fd(fd) -> float:
    """Arithmetic mean displacement over all timepoints, leading 0 included."""
    arr = np.asarray(fd, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise DegenerateInputError("mean_fd needs a non-empty 1-d vector")
    if not np.all(np.isfinite(arr)):
        raise DataIntegrityError("framewise displacement contains NaN or infinite entries")
    return float(arr.mean())


def _as_pair(x, y) -> tuple[np.ndarray, np.ndarray]:
    xa = np.asarray(x, dtype=float).ravel()
    ya = np.asarray(y, dtype=float).ravel()
    if xa.size != ya.size:
        raise DimensionError(f"vectors differ in length: {xa.size} vs {ya.size}")
    if xa.size < 3:
        raise DegenerateInputError(f"need at least 3 paired samples, got {xa.size}")
    if not (np.all(np.isfinite(xa)) and np.all(np.isfinite(ya))):
        raise DataIntegrityError("correlation input contains NaN or infinite entries")
    return xa, ya


def _t_pvalue(r: float, m: int) -> float:
    """Two-sided p for a correlation of m samples via the t transform."""
    df = m - 2
    if abs(r) >= 1.0:
        return 0.0
    t = r * np.sqrt(df / (1.0 - r * r))
    return float(2.0 * scipy.special.stdtr(df, -abs(t)))


def pearson(x, y) -> tuple[float, float]:
    """Sample Pearson correlation with a two-sided parametric p-value.

    The denominator is one square root of the product of the two sums of
    squares, so exactly collinear inputs land on exactly +/-1 instead of an
    ulp short; r is clamped to [-1, 1] against rounding the other way.
    """
    xa, ya = _as_pair(x, y)
    xc = xa - xa.mean()
    yc = ya - ya.mean()
    ssx = float(xc @ xc)
    ssy = float(yc @ yc)
    if ssx == 0.0 or ssy == 0.0:
        raise DegenerateInputError("correlation is undefined for a constant input")
    prod = ssx * ssy
    denom = math.sqrt(prod) if math.isfinite(prod) else math.sqrt(ssx) * math.sqrt(ssy)
    r = float(np.clip(float(xc @ yc) / denom, -1.0, 1.0))
    return r, _t_pvalue(r, xa.size)


def spearman(x, y) -> tuple[float, float]:
    """Rank correlation: Pearson on average ranks, ties get the mean rank."""
    xa, ya = _as_pair(x, y)
    rx = scipy.stats.rankdata(xa, method="average")
    ry = scipy.stats.rankdata(ya, method="average")
    if np.all(rx == rx[0]) or np.all(ry == ry[0]):
        raise DegenerateInputError("rank correlation is undefined for a constant input")
    return pearson(rx, ry)


def fc_matrix(ts: RoiTimeSeries) -> FcMatrix:
    """Pairwise Pearson correlation of ROI columns.

    Diagonal is set to exactly 1 and the result is symmetrized; off-
    diagonal rounding is clipped into [-1, 1]. A constant ROI column has
    no defined correlation and is reported by name.
    """
    values = ts.values
    n, r = values.shape
    if n < 3:
        raise DegenerateInputError(f"need at least 3 timepoints for correlation, got {n}")
    labels = ts.column_labels if ts.column_labels is not None else default_roi_labels(r)
    centered = values - values.mean(axis=0, keepdims=True)
    gram = centered.T @ centered
    ss = np.diag(gram).copy()
    tol = n * np.finfo(float).eps * np.max(np.abs(values), axis=0)
    dead = np.flatnonzero(np.sqrt(ss) <= tol)
    if dead.size:
        raise DegenerateInputError(f"ROI column {labels[dead[0]]!r} is constant")
    corr = gram / np.sqrt(np.multiply.outer(ss, ss))
    corr = np.clip((corr + corr.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(corr, 1.0)
    return FcMatrix(corr, labels)


def edge_lengths(p: Parcellation) -> np.ndarray:
    """Euclidean centroid distances in row-major upper-triangle order."""
    iu, ju = np.triu_indices(p.n_rois, k=1)
    return np.linalg.norm(p.centroids[iu] - p.centroids[ju], axis=1)


def qcfc(fc_per_subject: list[FcMatrix], mfd_per_subject) -> QcFcReport:
    """Correlate each edge's connectivity with mean FD across subjects.

    Returns a report whose distance-dependence fields are still unset.
    Undefined edges (no connectivity variance across subjects) carry NaN
    and are excluded from the median.
    """
    mfd = np.asarray(mfd_per_subject, dtype=float).ravel()
    s = len(fc_per_subject)
    if s < 3:
        raise DegenerateInputError(f"need at least 3 subjects, got {s}")
    if mfd.size != s:
        raise DimensionError(f"{s} FC matrices but {mfd.size} mean-FD values")
    if not np.all(np.isfinite(mfd)):
        raise DataIntegrityError("mean FD contains NaN or infinite entries")
    labels = fc_per_subject[0].roi_labels
    for k, fc in enumerate(fc_per_subject):
        if fc.roi_labels != labels:
            raise SchemaError(f"FC matrix {k} has different ROI labels than the first")

    edges = np.stack([fc.upper_triangle() for fc in fc_per_subject])
    g = mfd - mfd.mean()
    ssg = float(g @ g)
    gn = math.sqrt(ssg)
    if gn == 0.0 or gn <= s * np.finfo(float).eps * np.max(np.abs(mfd), initial=0.0):
        raise DegenerateInputError("mean FD is constant across subjects")

    centered = edges - edges.mean(axis=0, keepdims=True)
    ss_edges = np.einsum("ij,ij->j", centered, centered)
    norms = np.sqrt(ss_edges)
    scale = np.max(np.abs(edges), axis=0, initial=0.0)
    defined = norms > s * np.finfo(float).eps * scale

    r_vals = np.full(edges.shape[1], np.nan)
    p_vals = np.full(edges.shape[1], np.nan)
    if defined.any():
        r_def = (centered[:, defined].T @ g) / np.sqrt(ss_edges[defined] * ssg)
        r_def = np.clip(r_def, -1.0, 1.0)
        df = s - 2
        p_def = np.zeros_like(r_def)
        open_interval = np.abs(r_def) < 1.0
        t = r_def[open_interval] * np.sqrt(df / (1.0 - r_def[open_interval] ** 2))
        p_def[open_interval] = 2.0 * scipy.special.stdtr(df, -np.abs(t))
        r_vals[defined] = r_def
        p_vals[defined] = p_def
        median_abs = float(np.median(np.abs(r_def)))
    else:
        median_abs = float("nan")

    return QcFcReport(
        edge_qcfc=r_vals,
        edge_pvalues=p_vals,
        median_abs_qcfc=median_abs,
        n_subjects=s,
        undefined_edge_count=int((~defined).sum()),
        roi_labels=labels,
    )


def distance_dependence(report: QcFcReport, lengths) -> tuple[float, float]:
    """Spearman correlation of per-edge QC-FC with edge length.

    Undefined edges are dropped pairwise. The result is written back into
    the report as well as returned.
    """
    lengths = np.asarray(lengths, dtype=float).ravel()
    if lengths.size != report.n_edges:
        raise DimensionError(
            f"report has {report.n_edges} edges but {lengths.size} lengths given"
        )
    defined = ~np.isnan(report.edge_qcfc)
    if int(defined.sum()) < 3:
        raise DegenerateInputError(
            f"need at least 3 defined edges, got {int(defined.sum())}"
        )
    rho, p = spearman(report.edge_qcfc[defined], lengths[defined])
    report.dist_dependence_rho = rho
    report.dist_dependence_p = p
    return rho, p
