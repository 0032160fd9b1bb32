"""Trivial nearest-centroid baseline classifier, plain lists only.

Scores a video by the negative Euclidean distance between its mean RGB
color and one prototype color per class. Prototypes come from the
labels file when given there, otherwise from a seeded generator, so the
baseline is deterministic and needs no ML stack.
"""

from __future__ import annotations

import math
import random


def video_mean_color(pixels: bytes) -> list[float]:
    """Mean R, G, B over every pixel of every frame."""
    if not pixels:
        return [0.0, 0.0, 0.0]
    totals = [0, 0, 0]
    n = len(pixels) // 3
    for c in range(3):
        totals[c] = sum(pixels[c::3])
    return [t / n for t in totals]


class CentroidBaseline:
    """Callable model: video dict -> per-class score list."""

    FEATURE_TAG = "mean_rgb"

    def __init__(self, labels: list[str],
                 prototypes: dict[str, list[float]] | None = None,
                 seed: int = 0):
        self.labels = list(labels)
        rng = random.Random(seed)
        self.prototypes = []
        for name in self.labels:
            if prototypes and name in prototypes:
                self.prototypes.append([float(v) for v in prototypes[name]])
            else:
                self.prototypes.append([rng.uniform(0, 255) for _ in range(3)])

    def __call__(self, video: dict):
        mean = video_mean_color(video["pixels"])
        scores = [
            -math.dist(mean, prototype) for prototype in self.prototypes
        ]
        features = {self.FEATURE_TAG: ([3], [float(v) for v in mean])}
        return scores, features
