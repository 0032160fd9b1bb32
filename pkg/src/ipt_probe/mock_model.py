"""Deterministic in-repo model endpoint for pipeline tests.

Three modes:

- uniform: every class scores 1/N.
- centroid: softmax over negative distances between the video's mean
  downsampled frame and seeded per-class prototypes; also serves that
  mean-frame vector as a feature tensor under the tags "pooled" and
  "consensus" (two tags so multi-layer feature plumbing is testable).
- azimuth_oracle: class 0 scores (1 + cos(2 az)) / 2 where az comes from
  the dataset manifest's factor vector; the remaining mass is spread
  uniformly. Gives closed-form score curves for end-to-end tests.
"""

from __future__ import annotations

import math
from typing import Mapping, Sequence

import numpy as np

from .core import LabelSpace, ScoreVector, Video
from .protocol import InferRequest

MODES = ("uniform", "centroid", "azimuth_oracle")

_POOL_GRID = 8
_CENTROID_SCALE = 100.0


class MockModelError(Exception):
    pass


def _mean_pooled(pixels: np.ndarray, frame_count: int, height: int, width: int
                 ) -> np.ndarray:
    """Time-mean frame, block-pooled to at most an 8x8 grid, flattened."""
    frames = pixels.reshape(frame_count, height, width, 3).astype(np.float64)
    mean_frame = frames.mean(axis=0)
    gh, gw = min(_POOL_GRID, height), min(_POOL_GRID, width)
    row_edges = np.linspace(0, height, gh + 1).astype(int)
    col_edges = np.linspace(0, width, gw + 1).astype(int)
    pooled = np.empty((gh, gw, 3))
    for i in range(gh):
        for j in range(gw):
            block = mean_frame[row_edges[i]:row_edges[i + 1],
                               col_edges[j]:col_edges[j + 1]]
            pooled[i, j] = block.mean(axis=(0, 1))
    return pooled.reshape(-1)


def _softmax(values: np.ndarray) -> np.ndarray:
    shifted = values - values.max()
    e = np.exp(shifted)
    return e / e.sum()


def _centroid_scores(pooled: np.ndarray, n_labels: int, seed: int) -> list[float]:
    distances = np.empty(n_labels)
    for cls in range(n_labels):
        rng = np.random.default_rng([int(seed), cls, pooled.size])
        prototype = rng.uniform(0.0, 255.0, size=pooled.size)
        distances[cls] = np.linalg.norm(pooled - prototype)
    return _softmax(-distances / _CENTROID_SCALE).tolist()


def _azimuth_scores(azimuth_deg: float, n_labels: int) -> list[float]:
    s0 = (1.0 + math.cos(2.0 * math.radians(azimuth_deg))) / 2.0
    if n_labels == 1:
        return [s0]
    rest = (1.0 - s0) / (n_labels - 1)
    return [s0] + [rest] * (n_labels - 1)


def mock_scores(video: Video, label_space: LabelSpace, mode: str,
                seed: int = 0, azimuth: float | None = None) -> ScoreVector:
    """Score one in-memory video; see the module docstring for the modes."""
    n = len(label_space)
    if mode == "uniform":
        return ScoreVector(tuple([1.0 / n] * n))
    if mode == "centroid":
        pooled = _mean_pooled(
            np.frombuffer(video.tobytes(), dtype=np.uint8),
            video.frame_count, video.height, video.width,
        )
        return ScoreVector(tuple(_centroid_scores(pooled, n, seed)))
    if mode == "azimuth_oracle":
        if azimuth is None:
            raise MockModelError(
                "azimuth_oracle mode needs a factor vector with an azimuth"
            )
        return ScoreVector(tuple(_azimuth_scores(azimuth, n)))
    raise MockModelError(f"unknown mock mode {mode!r}")


class MockModel:
    """Protocol-servable wrapper around mock_scores."""

    def __init__(self, label_space: LabelSpace, mode: str = "uniform",
                 seed: int = 0,
                 azimuth_by_video: Mapping[str, float] | None = None):
        if mode not in MODES:
            raise MockModelError(f"unknown mock mode {mode!r}; choose from {MODES}")
        self.label_space = label_space
        self.mode = mode
        self.seed = seed
        self.azimuth_by_video = dict(azimuth_by_video or {})

    # ModelServer interface -------------------------------------------------
    def labels(self) -> Sequence[str]:
        return list(self.label_space.labels)

    def feature_tags(self) -> Sequence[str]:
        return ["pooled", "consensus"] if self.mode == "centroid" else []

    def _pooled(self, request: InferRequest) -> np.ndarray:
        return _mean_pooled(
            np.frombuffer(request.payload, dtype=np.uint8),
            request.frame_count, request.height, request.width,
        )

    def score(self, request: InferRequest) -> Sequence[float]:
        n = len(self.label_space)
        if self.mode == "uniform":
            return [1.0 / n] * n
        if self.mode == "centroid":
            return _centroid_scores(self._pooled(request), n, self.seed)
        if request.video_id not in self.azimuth_by_video:
            raise MockModelError(
                f"no azimuth factor recorded for video {request.video_id!r}"
            )
        return _azimuth_scores(self.azimuth_by_video[request.video_id], n)

    def features(self, request: InferRequest
                 ) -> Mapping[str, tuple[Sequence[int], Sequence[float]]]:
        pooled = self._pooled(request)
        tensor = ((pooled.size,), pooled.astype(np.float32))
        return {"pooled": tensor, "consensus": tensor}


def score_video(model: MockModel, video: Video) -> ScoreVector:
    """In-process scoring shortcut used by tests."""
    azimuth = model.azimuth_by_video.get(video.video_id)
    return mock_scores(video, model.label_space, model.mode, model.seed, azimuth)
