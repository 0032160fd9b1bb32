"""Factor score curves and PCA feature manifolds.

A score curve plots the model's true-class score against a swept factor
value. Curve statistics smooth with a centered moving average before
extrema detection; azimuth curves wrap circularly, other factors do not.
PCA is computed from the SVD of the mean-centered sample matrix with a
deterministic sign convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .metrics import PredictionRecord

CIRCULAR_FACTORS = ("azimuth",)


class AnalysisError(Exception):
    pass


@dataclass(frozen=True)
class SweepCurve:
    factor_name: str
    xs: tuple[float, ...]
    ys: tuple[float, ...]
    metadata: Mapping[str, str]

    def __post_init__(self):
        xs = tuple(float(x) for x in self.xs)
        ys = tuple(float(y) for y in self.ys)
        if len(xs) != len(ys):
            raise AnalysisError("xs and ys must have equal length")
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise AnalysisError("xs must be strictly increasing")
        if not all(math.isfinite(y) for y in ys):
            raise AnalysisError("ys must be finite")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "metadata", dict(self.metadata))

    def to_json(self) -> dict:
        return {
            "factor_name": self.factor_name,
            "xs": list(self.xs),
            "ys": list(self.ys),
            "metadata": dict(self.metadata),
        }


@dataclass(frozen=True)
class CurveStats:
    peaks: tuple[float, ...]
    valleys: tuple[float, ...]
    value_range: tuple[float, float]
    mean: float

    def to_json(self) -> dict:
        return {
            "peaks": list(self.peaks),
            "valleys": list(self.valleys),
            "range": list(self.value_range),
            "mean": self.mean,
        }


@dataclass(frozen=True, eq=False)
class PcaEmbedding:
    """Top-d principal axes of a sample matrix plus the projected samples."""

    components: np.ndarray          # (d, m) rows orthonormal
    explained_variance: np.ndarray  # (d,) non-increasing
    coords: np.ndarray              # (n, d)
    mean: np.ndarray                # (m,)
    rank_deficient: bool = False

    def to_json(self) -> dict:
        return {
            "components": self.components.tolist(),
            "explained_variance": self.explained_variance.tolist(),
            "coords": self.coords.tolist(),
            "mean": self.mean.tolist(),
            "rank_deficient": self.rank_deficient,
        }


def build_curve(records: Sequence[PredictionRecord], class_id: int,
                metadata: Mapping[str, str] | None = None) -> SweepCurve:
    """Assemble a score curve from sweep-condition records for one class."""
    if not records:
        raise AnalysisError("no records")
    factors = {r.condition.factor for r in records}
    if None in factors or len(factors) != 1:
        raise AnalysisError(f"records must share one sweep factor, got {factors}")
    factor = next(iter(factors))
    by_value: dict[float, PredictionRecord] = {}
    for r in records:
        value = r.condition.value
        if value in by_value:
            raise AnalysisError(f"duplicate factor value {value} "
                                f"({by_value[value].video_id!r}, {r.video_id!r})")
        by_value[value] = r
    xs = sorted(by_value)
    ys = []
    for x in xs:
        scores = by_value[x].scores
        if not 0 <= class_id < len(scores):
            raise AnalysisError(f"class_id {class_id} outside score vector")
        ys.append(scores[class_id])
    return SweepCurve(factor, tuple(xs), tuple(ys), dict(metadata or {}))


def moving_average(ys: Sequence[float], window: int, circular: bool) -> np.ndarray:
    """Centered moving average; windows shrink at the edges when not circular."""
    ys = np.asarray(ys, dtype=np.float64)
    n = ys.size
    if window == 1:
        return ys.copy()
    half = window // 2
    out = np.empty(n)
    for i in range(n):
        if circular:
            idx = (np.arange(i - half, i + half + 1)) % n
            out[i] = ys[idx].mean()
        else:
            lo = max(0, i - half)
            hi = min(n, i + half + 1)
            out[i] = ys[lo:hi].mean()
    return out


def curve_stats(curve: SweepCurve, smoothing_window: int) -> CurveStats:
    """Strict local extrema of the smoothed curve plus range and mean."""
    n = len(curve.xs)
    if smoothing_window < 1 or smoothing_window % 2 == 0:
        raise AnalysisError("smoothing window must be a positive odd integer")
    if smoothing_window > n:
        raise AnalysisError(f"window {smoothing_window} larger than curve ({n})")
    circular = curve.factor_name in CIRCULAR_FACTORS
    smooth = moving_average(curve.ys, smoothing_window, circular)

    peaks, valleys = [], []
    for i in range(n):
        if circular:
            left = smooth[(i - 1) % n]
            right = smooth[(i + 1) % n]
            if smooth[i] > left and smooth[i] > right:
                peaks.append(curve.xs[i])
            elif smooth[i] < left and smooth[i] < right:
                valleys.append(curve.xs[i])
        else:
            neighbors = []
            if i > 0:
                neighbors.append(smooth[i - 1])
            if i < n - 1:
                neighbors.append(smooth[i + 1])
            if all(smooth[i] > v for v in neighbors):
                peaks.append(curve.xs[i])
            elif all(smooth[i] < v for v in neighbors):
                valleys.append(curve.xs[i])
    return CurveStats(
        peaks=tuple(peaks),
        valleys=tuple(valleys),
        value_range=(float(smooth.min()), float(smooth.max())),
        mean=float(smooth.mean()),
    )


def pca(features: np.ndarray, d: int) -> PcaEmbedding:
    """Top-d principal components of an (n, m) sample matrix.

    Mean-centers, takes the SVD, and fixes each component's sign so its
    largest-magnitude entry is non-negative. When the data has rank below
    d, only the real components are returned and the embedding is flagged
    rank_deficient rather than padded with fabricated directions.
    """
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2:
        raise AnalysisError("feature matrix must be 2-D")
    n, m = x.shape
    if n < 2:
        raise AnalysisError("need at least 2 samples")
    if not 1 <= d <= min(n - 1, m):
        raise AnalysisError(f"d must be in 1..min(n-1, m) = {min(n - 1, m)}")
    mean = x.mean(axis=0)
    centered = x - mean
    u, s, vt = np.linalg.svd(centered, full_matrices=False)
    tol = max(n, m) * np.finfo(np.float64).eps * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > tol))
    k = min(d, rank)
    components = vt[:k].copy()
    coords = u[:, :k] * s[:k]
    for row in range(k):
        pivot = int(np.argmax(np.abs(components[row])))
        if components[row, pivot] < 0:
            components[row] = -components[row]
            coords[:, row] = -coords[:, row]
    variance = (s[:k] ** 2) / (n - 1)
    return PcaEmbedding(
        components=components,
        explained_variance=variance,
        coords=coords,
        mean=mean,
        rank_deficient=k < d,
    )


def loop_closure(embedding: PcaEmbedding) -> float:
    """First-to-last gap over the mean consecutive step, in embedded space.

    Samples must already be ordered by the periodic factor. A closed loop
    sampled uniformly gives a ratio near 1; an open curve gives a ratio
    much larger than 1.
    """
    coords = embedding.coords
    if coords.shape[0] < 3:
        raise AnalysisError("need at least 3 samples for loop closure")
    steps = np.linalg.norm(np.diff(coords, axis=0), axis=1)
    mean_step = float(steps.mean())
    if mean_step == 0.0:
        raise AnalysisError("all samples coincide; loop closure undefined")
    gap = float(np.linalg.norm(coords[0] - coords[-1]))
    return gap / mean_step
