"""Deterministic synthetic cohort with known truth and injected artifact.

The generator builds, from one seed: ROI centroids inside a 140 mm sphere,
a shared ground-truth connectivity structure (sparse latent factors), and
per subject a smooth motion trace, motion-component stand-ins, two physio
confounds, and ROI timeseries contaminated by spatially decaying artifact
sources. Every contaminating timeseries is constructed as a linear
combination of columns of the subject's own nuisance blocks, so a single
regression on all blocks concatenated can remove it exactly; the artifact
sources deliberately mix motion-derived and component-derived parts so
that either sequential ordering leaves a systematic remainder.

Artifact coupling decays exponentially with distance from a handful of
source locations, which inflates connectivity between nearby ROIs for
high-motion subjects and produces a distance-dependent QC-FC profile at
baseline. All random draws happen in a fixed order independent of
artifact_gain, so regenerating with a different gain changes only the
injected amplitude, not the realization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SchemaError, ValidationError
from .metrics import FcMatrix, Parcellation, default_roi_labels
from .pipelines import HeadMotion, SubjectBundle, expand_hmp24
from .regression import (
    DesignMatrix,
    RegressorSource,
    SignalMatrix,
    demean_columns,
    residualize_columns,
)

__all__ = [
    "PhantomConfig",
    "PhantomCohort",
    "PHYSIO_LABELS",
    "generate_cohort",
    "truth_error",
]

PHYSIO_LABELS = ("wm_mean", "nonbrain_mean")

_SPHERE_RADIUS_MM = 70.0
_LOWPASS_FRACTION = 0.1
_MIN_LOWPASS_BINS = 2
_ROTATION_SCALE = 1.0 / 50.0
_FACTOR_LOADING_LOW = 0.3
_FACTOR_LOADING_HIGH = 0.8
_PHYSIO_LOADING_STD = 0.3

_CONFIG_FIELDS = (
    "n_subjects",
    "n_rois",
    "n_timepoints",
    "motion_amplitude_range",
    "artifact_gain",
    "artifact_length_scale",
    "n_aroma_components",
    "aroma_hmp_mixing",
    "seed",
)


def _require_int(value, field: str, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"{field} must be an integer, got {value!r}")
    if value < minimum:
        raise ValidationError(f"{field} must be >= {minimum}, got {value}")
    return value


def _require_float(value, field: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{field} must be a number, got {value!r}")
    out = float(value)
    if not np.isfinite(out):
        raise ValidationError(f"{field} must be finite, got {out}")
    return out


@dataclass(frozen=True)
class PhantomConfig:
    """Everything the generator needs; two identical configs give identical cohorts."""

    n_subjects: int
    n_rois: int
    n_timepoints: int
    motion_amplitude_range: tuple[float, float]
    artifact_gain: float
    artifact_length_scale: float
    n_aroma_components: int
    aroma_hmp_mixing: float
    seed: int

    def __post_init__(self):
        _require_int(self.n_subjects, "n_subjects", 3)
        _require_int(self.n_rois, "n_rois", 4)
        _require_int(self.n_timepoints, "n_timepoints", 24)
        rng_pair = self.motion_amplitude_range
        if not isinstance(rng_pair, (tuple, list)) or len(rng_pair) != 2:
            raise ValidationError(
                f"motion_amplitude_range must be a (low, high) pair, got {rng_pair!r}"
            )
        low = _require_float(rng_pair[0], "motion_amplitude_range low")
        high = _require_float(rng_pair[1], "motion_amplitude_range high")
        if not (0.0 < low < high):
            raise ValidationError(
                f"motion_amplitude_range must satisfy 0 < low < high, got ({low}, {high})"
            )
        object.__setattr__(self, "motion_amplitude_range", (low, high))
        gain = _require_float(self.artifact_gain, "artifact_gain")
        if gain < 0.0:
            raise ValidationError(f"artifact_gain must be >= 0, got {gain}")
        object.__setattr__(self, "artifact_gain", gain)
        scale = _require_float(self.artifact_length_scale, "artifact_length_scale")
        if scale <= 0.0:
            raise ValidationError(f"artifact_length_scale must be > 0, got {scale}")
        object.__setattr__(self, "artifact_length_scale", scale)
        _require_int(self.n_aroma_components, "n_aroma_components", 0)
        mixing = _require_float(self.aroma_hmp_mixing, "aroma_hmp_mixing")
        if not (0.0 <= mixing <= 1.0):
            raise ValidationError(f"aroma_hmp_mixing must lie in [0, 1], got {mixing}")
        object.__setattr__(self, "aroma_hmp_mixing", mixing)
        if isinstance(self.seed, bool) or not isinstance(self.seed, int):
            raise ValidationError(f"seed must be an integer, got {self.seed!r}")
        if not (0 <= self.seed < 2**64):
            raise ValidationError(f"seed must fit in 64 unsigned bits, got {self.seed}")

    @classmethod
    def from_dict(cls, raw: dict) -> "PhantomConfig":
        if not isinstance(raw, dict):
            raise ValidationError(f"config must be a JSON object, got {type(raw).__name__}")
        unknown = sorted(set(raw) - set(_CONFIG_FIELDS))
        if unknown:
            raise ValidationError(f"unknown config field {unknown[0]!r}")
        missing = [f for f in _CONFIG_FIELDS if f not in raw]
        if missing:
            raise ValidationError(f"missing config field {missing[0]!r}")
        pair = raw["motion_amplitude_range"]
        if isinstance(pair, list):
            pair = tuple(pair)
        return cls(
            n_subjects=raw["n_subjects"],
            n_rois=raw["n_rois"],
            n_timepoints=raw["n_timepoints"],
            motion_amplitude_range=pair,
            artifact_gain=raw["artifact_gain"],
            artifact_length_scale=raw["artifact_length_scale"],
            n_aroma_components=raw["n_aroma_components"],
            aroma_hmp_mixing=raw["aroma_hmp_mixing"],
            seed=raw["seed"],
        )

    def to_dict(self) -> dict:
        return {
            "n_subjects": self.n_subjects,
            "n_rois": self.n_rois,
            "n_timepoints": self.n_timepoints,
            "motion_amplitude_range": list(self.motion_amplitude_range),
            "artifact_gain": self.artifact_gain,
            "artifact_length_scale": self.artifact_length_scale,
            "n_aroma_components": self.n_aroma_components,
            "aroma_hmp_mixing": self.aroma_hmp_mixing,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class PhantomCohort:
    """Generated bundles plus the ground truth they were built from.

    `injected_contamination` keeps, per subject, the exact n x r nuisance
    timeseries that was added to the neural signal; tests use it to verify
    the contamination lies in the span of the subject's nuisance blocks.
    """

    bundles: tuple[SubjectBundle, ...]
    parcellation: Parcellation
    truth_fc: FcMatrix
    per_subject_motion_amplitude: np.ndarray
    injected_contamination: tuple[np.ndarray, ...]


def _standardize(arr: np.ndarray) -> np.ndarray:
    """Zero-mean, unit-population-std columns; scale parity with the neural signal."""
    centered = arr - arr.mean(axis=0, keepdims=True)
    std = centered.std(axis=0, ddof=0)
    if np.any(std == 0.0):
        raise ValidationError("degenerate draw: a generated column has zero variance")
    return centered / std


def _smooth_noise(rng: np.random.Generator, n: int, cols: int) -> np.ndarray:
    """Low-pass filtered Gaussian noise, standardized per column.

    The cutoff keeps the lowest 10% of positive frequency bins (at least
    2), giving slow drifts rather than white jitter.
    """
    white = rng.standard_normal((n, cols))
    spectrum = np.fft.rfft(white, axis=0)
    cutoff = max(_MIN_LOWPASS_BINS, int(round(_LOWPASS_FRACTION * (n // 2))))
    spectrum[cutoff + 1 :] = 0.0
    smooth = np.fft.irfft(spectrum, n=n, axis=0)
    return _standardize(smooth)


def _truth_structure(rng: np.random.Generator, r: int) -> tuple[np.ndarray, np.ndarray]:
    """Sparse latent-factor correlation matrix and its Cholesky factor.

    Each ROI loads on exactly one of max(1, r // 10) factors with strength
    in [0.3, 0.8]; same-factor pairs correlate by the loading product,
    cross-factor pairs are 0, and the diagonal is exactly 1. The matrix is
    positive definite because the residual diagonal stays >= 1 - 0.8^2.
    """
    n_factors = max(1, r // 10)
    assign = rng.integers(0, n_factors, size=r)
    loadings = rng.uniform(_FACTOR_LOADING_LOW, _FACTOR_LOADING_HIGH, size=r)
    same = assign[:, None] == assign[None, :]
    sigma = np.where(same, loadings[:, None] * loadings[None, :], 0.0)
    np.fill_diagonal(sigma, 1.0)
    chol = np.linalg.cholesky(sigma)
    return sigma, chol


def generate_cohort(cfg: PhantomConfig) -> PhantomCohort:
    """Build the full cohort for one config; same config, same bytes.

    Draw order is fixed: geometry and truth structure first, then per
    subject (in id order) amplitude, motion, neural noise, component
    ingredients, source mixtures, physio. Nothing conditions on
    artifact_gain, which only scales the injected artifact at the end.
    """
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n_timepoints
    r = cfg.n_rois
    p = cfg.n_aroma_components
    mixing = cfg.aroma_hmp_mixing

    directions = rng.standard_normal((r, 3))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = _SPHERE_RADIUS_MM * np.cbrt(rng.uniform(size=r))
    centroids = directions * radii[:, None]
    roi_labels = default_roi_labels(r)
    parcellation = Parcellation(roi_labels, centroids)

    sigma, chol = _truth_structure(rng, r)
    truth_fc = FcMatrix(sigma, roi_labels)

    n_sources = max(2, r // 25)
    source_idx = rng.choice(r, size=n_sources, replace=False)
    dist_to_source = np.linalg.norm(
        centroids[:, None, :] - centroids[source_idx][None, :, :], axis=2
    )
    coupling = np.exp(-dist_to_source / cfg.artifact_length_scale)

    low, high = cfg.motion_amplitude_range
    bundles = []
    amplitudes = np.zeros(cfg.n_subjects)
    contaminations = []
    aroma_labels = tuple(f"comp_{i:02d}" for i in range(p))

    for j in range(cfg.n_subjects):
        amp = rng.uniform(low, high)
        amplitudes[j] = amp

        trace = _smooth_noise(rng, n, 6)
        motion_values = np.hstack(
            [trace[:, :3] * amp, trace[:, 3:] * (amp * _ROTATION_SCALE)]
        )
        motion = HeadMotion(motion_values)
        hmp_centered = demean_columns(expand_hmp24(motion).values)

        neural = rng.standard_normal((n, r)) @ chol.T

        v_mix = rng.standard_normal((24, p))
        noise = rng.standard_normal((n, p))
        if p > 0:
            motion_derived = _standardize(hmp_centered @ v_mix)
            independent = _standardize(
                residualize_columns(demean_columns(noise), hmp_centered)
            )
            aroma_values = _standardize(
                mixing * motion_derived + (1.0 - mixing) * independent
            )
        else:
            aroma_values = np.zeros((n, 0))
        aroma = DesignMatrix(aroma_values, aroma_labels, RegressorSource.AROMA)

        alpha = rng.standard_normal((24, n_sources))
        beta = rng.standard_normal((p, n_sources))
        source_ts = _standardize(hmp_centered @ alpha)
        if p > 0:
            source_ts = _standardize(source_ts + _standardize(aroma_values @ beta))

        artifact = (cfg.artifact_gain * amp) * (source_ts @ coupling.T)

        physio_values = _smooth_noise(rng, n, 2)
        physio = DesignMatrix(physio_values, PHYSIO_LABELS, RegressorSource.PHYSIO)
        physio_loadings = rng.standard_normal((r, 2)) * _PHYSIO_LOADING_STD
        physio_leak = physio_values @ physio_loadings.T

        contamination = artifact + physio_leak
        ts = SignalMatrix(neural + contamination, roi_labels)

        bundles.append(
            SubjectBundle(
                subject_id=f"sub-{j:03d}",
                ts=ts,
                motion=motion,
                aroma=aroma,
                physio=physio,
            )
        )
        contaminations.append(contamination)

    amplitudes.setflags(write=False)
    return PhantomCohort(
        bundles=tuple(bundles),
        parcellation=parcellation,
        truth_fc=truth_fc,
        per_subject_motion_amplitude=amplitudes,
        injected_contamination=tuple(contaminations),
    )


def truth_error(corrected_fc: FcMatrix, truth_fc: FcMatrix) -> float:
    """Mean absolute difference over upper-triangle edges."""
    if corrected_fc.roi_labels != truth_fc.roi_labels:
        raise SchemaError("connectivity matrices have different ROI labels")
    return float(np.mean(np.abs(corrected_fc.upper_triangle() - truth_fc.upper_triangle())))
