"""Seeded, deterministic per-frame image operators applied uniformly to a video.

Every operator preserves frame count, dimensions and fps; only pixel
values change. Semantics are pinned exactly (integer arithmetic or
explicit round-half-up) so outputs are bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .core import Frame, Video

KINDS = (
    "identity",
    "average_blur",
    "hist_equalization",
    "grayscale",
    "gaussian_noise",
    "rotate_cw",
)

DEFAULT_BLUR_KERNEL = 5
DEFAULT_NOISE_SIGMA = 20.0
DEFAULT_ROTATE_DEGREES = 25.0


class TransformError(Exception):
    pass


@dataclass(frozen=True)
class ImageTransformSpec:
    """A named transform plus its kind-specific parameters."""

    kind: str
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "params", dict(self.params))
        if self.kind not in KINDS:
            raise TransformError(f"unknown transform kind {self.kind!r}")
        if self.kind == "average_blur":
            k = self.params.setdefault("kernel", DEFAULT_BLUR_KERNEL)
            if int(k) != k or k < 1 or k % 2 == 0:
                raise TransformError(f"blur kernel must be an odd integer >= 1, got {k}")
            self.params["kernel"] = int(k)
        elif self.kind == "gaussian_noise":
            sigma = float(self.params.setdefault("sigma", DEFAULT_NOISE_SIGMA))
            if sigma < 0:
                raise TransformError("noise sigma must be >= 0")
            self.params["sigma"] = sigma
            self.params.setdefault("seed", 0)
        elif self.kind == "rotate_cw":
            self.params["angle"] = float(
                self.params.setdefault("angle", DEFAULT_ROTATE_DEGREES)
            )

    def to_json(self) -> dict:
        return {"kind": self.kind, "params": dict(self.params)}

    @classmethod
    def from_json(cls, obj: Mapping) -> "ImageTransformSpec":
        if "kind" not in obj:
            raise TransformError(f"transform spec missing 'kind': {obj!r}")
        return cls(str(obj["kind"]), dict(obj.get("params") or {}))

    @property
    def name(self) -> str:
        if self.kind == "rotate_cw":
            return f"rotate_cw_{self.params['angle']:g}"
        return self.kind


def _round_half_up(values: np.ndarray) -> np.ndarray:
    return np.floor(values + 0.5)


def _box_blur(pixels: np.ndarray, kernel: int) -> np.ndarray:
    """k x k box mean with edge clamping, exact integer round-half-up."""
    if kernel == 1:
        return pixels.copy()
    pad = kernel // 2
    padded = np.pad(pixels.astype(np.int64), ((pad, pad), (pad, pad), (0, 0)), "edge")
    # summed-area table per channel
    sat = padded.cumsum(axis=0).cumsum(axis=1)
    sat = np.pad(sat, ((1, 0), (1, 0), (0, 0)))
    h, w = pixels.shape[:2]
    total = (
        sat[kernel : kernel + h, kernel : kernel + w]
        - sat[:h, kernel : kernel + w]
        - sat[kernel : kernel + h, :w]
        + sat[:h, :w]
    )
    denom = kernel * kernel
    return ((2 * total + denom) // (2 * denom)).astype(np.uint8)


def _equalize_channel(channel: np.ndarray) -> np.ndarray:
    counts = np.bincount(channel.ravel(), minlength=256)
    cdf = np.cumsum(counts) / channel.size
    cdf_min = cdf[np.nonzero(counts)[0][0]]
    if cdf_min == 1.0:
        return channel.copy()  # constant channel: nothing to redistribute
    lut = _round_half_up(255.0 * (cdf - cdf_min) / (1.0 - cdf_min))
    return np.clip(lut, 0, 255).astype(np.uint8)[channel]


def _equalize(pixels: np.ndarray) -> np.ndarray:
    return np.stack(
        [_equalize_channel(pixels[:, :, c]) for c in range(3)], axis=2
    )


def _grayscale(pixels: np.ndarray) -> np.ndarray:
    p = pixels.astype(np.float64)
    y = 0.299 * p[:, :, 0] + 0.587 * p[:, :, 1] + 0.114 * p[:, :, 2]
    y = np.clip(_round_half_up(y), 0, 255).astype(np.uint8)
    return np.repeat(y[:, :, None], 3, axis=2)


def _add_noise(pixels: np.ndarray, sigma: float, seed: int, frame_index: int
               ) -> np.ndarray:
    if sigma == 0.0:
        return pixels.copy()
    rng = np.random.default_rng([int(seed), int(frame_index)])
    noise = rng.standard_normal(pixels.shape) * sigma
    out = pixels.astype(np.int64) + _round_half_up(noise).astype(np.int64)
    return np.clip(out, 0, 255).astype(np.uint8)


def _rotate_cw(pixels: np.ndarray, degrees: float) -> np.ndarray:
    """Clockwise rotation about the frame center; bilinear, black outside."""
    if degrees % 360.0 == 0.0:
        return pixels.copy()
    h, w = pixels.shape[:2]
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    rad = math.radians(degrees)
    cos_a, sin_a = math.cos(rad), math.sin(rad)
    ys, xs = np.mgrid[0:h, 0:w]
    dx = xs - cx
    dy = ys - cy
    # inverse of the clockwise map in y-down pixel coordinates
    src_x = cos_a * dx + sin_a * dy + cx
    src_y = -sin_a * dx + cos_a * dy + cy

    x0 = np.floor(src_x).astype(np.int64)
    y0 = np.floor(src_y).astype(np.int64)
    fx = src_x - x0
    fy = src_y - y0

    out = np.zeros((h, w, 3), dtype=np.float64)
    src = pixels.astype(np.float64)
    for dy_i, dx_i, weight in (
        (0, 0, (1 - fx) * (1 - fy)),
        (0, 1, fx * (1 - fy)),
        (1, 0, (1 - fx) * fy),
        (1, 1, fx * fy),
    ):
        yy = y0 + dy_i
        xx = x0 + dx_i
        inside = (yy >= 0) & (yy < h) & (xx >= 0) & (xx < w)
        sample = np.zeros((h, w, 3), dtype=np.float64)
        sample[inside] = src[yy[inside], xx[inside]]
        out += weight[:, :, None] * sample
    return np.clip(_round_half_up(out), 0, 255).astype(np.uint8)


def apply_transform(video: Video, spec: ImageTransformSpec) -> Video:
    """Apply one transform to every frame; dimensions, count and fps unchanged."""
    kind = spec.kind
    out_frames = []
    for index, frame in enumerate(video.frames):
        p = frame.pixels
        if kind == "identity":
            out = p.copy()
        elif kind == "average_blur":
            out = _box_blur(p, spec.params["kernel"])
        elif kind == "hist_equalization":
            out = _equalize(p)
        elif kind == "grayscale":
            out = _grayscale(p)
        elif kind == "gaussian_noise":
            out = _add_noise(p, spec.params["sigma"], spec.params["seed"], index)
        elif kind == "rotate_cw":
            out = _rotate_cw(p, spec.params["angle"])
        else:  # pragma: no cover - guarded by spec validation
            raise TransformError(f"unknown transform kind {kind!r}")
        out_frames.append(Frame(out))
    return Video(tuple(out_frames), video.fps, video.class_label, video.video_id)


def default_suite(noise_seed: int = 0) -> list[ImageTransformSpec]:
    """The standard six-transform battery, identity first, 25-degree rotation last."""
    return [
        ImageTransformSpec("identity"),
        ImageTransformSpec("average_blur", {"kernel": DEFAULT_BLUR_KERNEL}),
        ImageTransformSpec("hist_equalization"),
        ImageTransformSpec("grayscale"),
        ImageTransformSpec(
            "gaussian_noise", {"sigma": DEFAULT_NOISE_SIGMA, "seed": noise_seed}
        ),
        ImageTransformSpec("rotate_cw", {"angle": DEFAULT_ROTATE_DEGREES}),
    ]
