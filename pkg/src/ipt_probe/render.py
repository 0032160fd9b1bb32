"""Deterministic synthetic rendering of motion clips under controlled factors.

Realizes the generation step: a motion clip (the identity factor) is
rasterized as a stick figure or point-light display under a factor
vector (viewpoint, appearance, background, lighting), yielding a video
plus a ground-truth foreground mask per frame. Rendering is pure and
bit-deterministic: integer-center sampling, no anti-aliasing, no
platform-dependent state.

Factor changes never touch the clip: the forward-kinematics positions
fed to the rasterizer are a function of the clip alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from .bvh import MotionClip, forward_kinematics
from .core import FactorVector, Frame, MaskSequence, Video

SWEEPABLE_FACTORS = ("azimuth", "elevation", "distance")
STYLES = ("stick-figure", "point-light")

# Clip coordinates are Y-up (mocap convention); the scene is Z-up.
# This is a +90 degree rotation about X, applied uniformly to all clips.
_CLIP_TO_WORLD = np.array(
    [[1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]], dtype=np.float64
)

_NEAR_PLANE = 1e-6


class RenderError(Exception):
    pass


class DegenerateViewError(RenderError):
    """Camera up direction undefined: |elevation| is exactly 90 degrees."""


@dataclass(frozen=True)
class AppearanceProfile:
    """Figure drawing style: colors plus limb radius in pixels at unit distance."""

    appearance_id: str
    limb_color: tuple[int, int, int]
    limb_radius: float
    joint_color: tuple[int, int, int]

    def __post_init__(self):
        if not self.limb_radius > 0:
            raise ValueError("limb_radius must be positive")


DEFAULT_APPEARANCES: dict[str, AppearanceProfile] = {
    p.appearance_id: p
    for p in [
        AppearanceProfile("a0", (214, 64, 48), 260.0, (255, 214, 64)),
        AppearanceProfile("a1", (48, 112, 214), 300.0, (222, 222, 222)),
        AppearanceProfile("a2", (64, 176, 88), 220.0, (255, 128, 32)),
        AppearanceProfile("a3", (232, 232, 240), 280.0, (160, 48, 192)),
        AppearanceProfile("a4", (255, 160, 32), 340.0, (32, 32, 32)),
        AppearanceProfile("a5", (160, 64, 200), 240.0, (96, 255, 208)),
        AppearanceProfile("a6", (24, 24, 28), 320.0, (240, 240, 64)),
        AppearanceProfile("a7", (120, 200, 255), 200.0, (255, 64, 128)),
    ]
}


@dataclass(frozen=True, eq=False)
class SceneSpec:
    """Everything needed to render one video deterministically."""

    clip: MotionClip
    factors: FactorVector
    image_size: tuple[int, int]
    focal_length: float
    seed: int
    style: str = "stick-figure"

    def __post_init__(self):
        w, h = self.image_size
        if w < 32 or h < 32:
            raise ValueError("image size must be at least 32x32")
        if not self.focal_length > 0:
            raise ValueError("focal_length must be positive")
        if self.style not in STYLES:
            raise ValueError(f"style must be one of {STYLES}, got {self.style!r}")

    def with_factors(self, factors: FactorVector) -> "SceneSpec":
        return replace(self, factors=factors)


@dataclass(frozen=True, eq=False)
class FactorSweep:
    """An ordered single-factor split: value i is x1 + i*delta."""

    factor_name: str
    x1: float
    delta: float
    count: int
    base: SceneSpec

    def __post_init__(self):
        if self.factor_name not in SWEEPABLE_FACTORS:
            raise ValueError(f"factor_name must be one of {SWEEPABLE_FACTORS}")
        if self.count < 1:
            raise ValueError("count must be at least 1")
        if self.delta == 0:
            raise ValueError("delta must be nonzero")


@dataclass(frozen=True)
class NuisancePools:
    background_ids: tuple[str, ...]
    appearance_ids: tuple[str, ...]
    light_levels: tuple[float, ...]


DEFAULT_POOLS = NuisancePools(
    background_ids=("gray", "navy", "checker", "gradient_h"),
    appearance_ids=tuple(sorted(DEFAULT_APPEARANCES)),
    light_levels=(0.6, 0.8, 1.0, 1.2),
)


@dataclass(frozen=True)
class CameraPose:
    position: np.ndarray
    look_at: np.ndarray
    up: np.ndarray


def camera_from_factors(factors: FactorVector, target: Sequence[float]) -> CameraPose:
    """Orbit camera: position on the sphere around target, roll-free, +Z up."""
    if abs(factors.elevation_deg) == 90.0:
        raise DegenerateViewError(
            "camera up vector undefined at elevation +-90 degrees"
        )
    az = math.radians(factors.azimuth_deg)
    el = math.radians(factors.elevation_deg)
    target = np.asarray(target, dtype=np.float64)
    direction = np.array(
        [math.cos(el) * math.cos(az), math.cos(el) * math.sin(az), math.sin(el)]
    )
    position = target + factors.distance * direction
    return CameraPose(position, target, np.array([0.0, 0.0, 1.0]))


def _camera_basis(pose: CameraPose) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    forward = pose.look_at - pose.position
    forward = forward / np.linalg.norm(forward)
    right = np.cross(forward, pose.up)
    norm = np.linalg.norm(right)
    if norm == 0.0:
        raise DegenerateViewError("view direction parallel to up vector")
    right = right / norm
    up = np.cross(right, forward)
    return right, up, forward


_BACKGROUND_IDS = (
    "black", "white", "gray", "navy", "forest",
    "checker", "checker_small", "gradient_h", "gradient_v",
)


def make_background(background_id: str, width: int, height: int,
                    light_intensity: float) -> np.ndarray:
    """Procedural background raster scaled by light intensity."""
    if background_id not in _BACKGROUND_IDS:
        raise RenderError(f"unknown background_id {background_id!r}")
    if background_id == "black":
        base = np.zeros((height, width, 3), dtype=np.float64)
    elif background_id == "white":
        base = np.full((height, width, 3), 235.0)
    elif background_id == "gray":
        base = np.full((height, width, 3), 128.0)
    elif background_id == "navy":
        base = np.tile(np.array([24.0, 32.0, 96.0]), (height, width, 1))
    elif background_id == "forest":
        base = np.tile(np.array([30.0, 88.0, 42.0]), (height, width, 1))
    elif background_id in ("checker", "checker_small"):
        tile = 4 if background_id == "checker_small" else 8
        yy, xx = np.mgrid[0:height, 0:width]
        cells = ((yy // tile + xx // tile) % 2).astype(np.float64)
        base = (96.0 + 64.0 * cells)[:, :, None] * np.ones(3)
    elif background_id == "gradient_h":
        ramp = np.linspace(40.0, 216.0, width)
        base = np.tile(ramp[None, :, None], (height, 1, 3))
    else:  # gradient_v
        ramp = np.linspace(40.0, 216.0, height)
        base = np.tile(ramp[:, None, None], (1, width, 3))
    return _apply_light(base, light_intensity)


def _apply_light(values: np.ndarray, light: float) -> np.ndarray:
    return np.clip(np.floor(values * light + 0.5), 0.0, 255.0).astype(np.uint8)


def _project(points: np.ndarray, pose: CameraPose, focal: float,
             width: int, height: int):
    """Pinhole projection to pixel coordinates; returns (u, v, depth)."""
    right, up, forward = _camera_basis(pose)
    rel = points - pose.position
    x = rel @ right
    y = rel @ up
    z = rel @ forward
    cx = (width - 1) / 2.0
    cy = (height - 1) / 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        u = cx + focal * x / z
        v = cy - focal * y / z
    return u, v, z


def _paint_capsule(color_px: np.ndarray, cover: np.ndarray, p0, p1, r0, r1, rgb):
    """Rasterize a thick segment with per-end radius; integer-center sampling."""
    height, width = cover.shape
    x_min = int(math.floor(min(p0[0] - r0, p1[0] - r1)))
    x_max = int(math.ceil(max(p0[0] + r0, p1[0] + r1)))
    y_min = int(math.floor(min(p0[1] - r0, p1[1] - r1)))
    y_max = int(math.ceil(max(p0[1] + r0, p1[1] + r1)))
    x_min = max(x_min, 0)
    y_min = max(y_min, 0)
    x_max = min(x_max, width - 1)
    y_max = min(y_max, height - 1)
    if x_min > x_max or y_min > y_max:
        return
    ys, xs = np.mgrid[y_min : y_max + 1, x_min : x_max + 1]
    dx = xs - p0[0]
    dy = ys - p0[1]
    ex = p1[0] - p0[0]
    ey = p1[1] - p0[1]
    seg_sq = ex * ex + ey * ey
    if seg_sq == 0.0:
        t = np.zeros_like(dx, dtype=np.float64)
    else:
        t = np.clip((dx * ex + dy * ey) / seg_sq, 0.0, 1.0)
    ddx = dx - t * ex
    ddy = dy - t * ey
    radius = r0 + t * (r1 - r0)
    hit = ddx * ddx + ddy * ddy <= radius * radius
    if not hit.any():
        return
    color_px[y_min : y_max + 1, x_min : x_max + 1][hit] = rgb
    cover[y_min : y_max + 1, x_min : x_max + 1][hit] = True


def render(spec: SceneSpec, *,
           appearances: Mapping[str, AppearanceProfile] | None = None,
           video_id: str = "render", fps: float = 30.0, class_label: int = 0,
           ) -> tuple[Video, MaskSequence]:
    """Render a clip under its factors into a video plus ground-truth masks.

    The mask marks exactly the pixels where the output differs from the
    pure-background render of the same spec. Frames whose subject lies
    entirely behind the camera cannot be rendered; those frame indices
    are collected into one RenderError.
    """
    registry = DEFAULT_APPEARANCES if appearances is None else appearances
    appearance = registry.get(spec.factors.appearance_id)
    if appearance is None:
        raise RenderError(f"unknown appearance_id {spec.factors.appearance_id!r}")

    width, height = spec.image_size
    clip = spec.clip
    poses = [
        forward_kinematics(clip, t).joint_positions @ _CLIP_TO_WORLD.T
        for t in range(clip.frame_count)
    ]
    target = np.mean(np.concatenate(poses, axis=0), axis=0)
    pose = camera_from_factors(spec.factors, target)
    edges = clip.skeleton.edges()
    background = make_background(
        spec.factors.background_id, width, height, spec.factors.light_intensity
    )
    limb_rgb = _apply_light(
        np.array(appearance.limb_color, dtype=np.float64),
        spec.factors.light_intensity,
    )
    joint_rgb = _apply_light(
        np.array(appearance.joint_color, dtype=np.float64),
        spec.factors.light_intensity,
    )

    frames: list[Frame] = []
    masks: list[np.ndarray] = []
    behind: list[int] = []
    for t, points in enumerate(poses):
        u, v, z = _project(points, pose, spec.focal_length, width, height)
        visible = z > _NEAR_PLANE
        if not visible.any():
            behind.append(t)
            continue
        color = background.copy()
        cover = np.zeros((height, width), dtype=bool)
        radii = np.where(visible, appearance.limb_radius / np.where(visible, z, 1.0), 0.0)
        if spec.style == "stick-figure":
            for a, b in edges:
                if visible[a] and visible[b]:
                    _paint_capsule(
                        color, cover, (u[a], v[a]), (u[b], v[b]),
                        radii[a], radii[b], limb_rgb,
                    )
            joint_scale = 1.25
        else:
            joint_scale = 1.5
        for j in range(points.shape[0]):
            if visible[j]:
                r = radii[j] * joint_scale
                _paint_capsule(color, cover, (u[j], v[j]), (u[j], v[j]), r, r, joint_rgb)

        # Guarantee mask exactness: any covered pixel that happens to match
        # the background color gets its green low bit flipped.
        same = cover & np.all(color == background, axis=2)
        if same.any():
            color[same, 1] ^= 1
        frames.append(Frame(color))
        masks.append(cover.astype(np.uint8))

    if behind:
        raise RenderError(
            f"subject entirely behind camera in frames {behind} "
            f"(azimuth={spec.factors.azimuth_deg}, distance={spec.factors.distance})"
        )
    video = Video(tuple(frames), fps=fps, class_label=class_label, video_id=video_id)
    return video, MaskSequence(tuple(masks))


def figure_height(clip: MotionClip) -> float:
    """Vertical (scene Z) extent of the posed figure over all frames.

    Used to calibrate focal length so a target distance yields a chosen
    on-screen figure fraction.
    """
    zs = []
    for t in range(clip.frame_count):
        world = forward_kinematics(clip, t).joint_positions @ _CLIP_TO_WORLD.T
        zs.append(world[:, 2])
    stacked = np.concatenate(zs)
    extent = float(stacked.max() - stacked.min())
    return extent if extent > 0 else 1.0


def enumerate_sweep(sweep: FactorSweep) -> list[SceneSpec]:
    """Specs for one controlled split: element i carries value x1 + i*delta."""
    specs = []
    for i in range(sweep.count):
        value = sweep.x1 + i * sweep.delta
        factors = sweep.base.factors
        if sweep.factor_name == "azimuth":
            factors = factors.replace(azimuth_deg=value)
        elif sweep.factor_name == "elevation":
            factors = factors.replace(elevation_deg=value)
        else:
            factors = factors.replace(distance=value)
        specs.append(sweep.base.with_factors(factors))
    return specs


def sweep_values(sweep: FactorSweep) -> list[float]:
    return [sweep.x1 + i * sweep.delta for i in range(sweep.count)]


def randomize_nuisance(spec: SceneSpec, seed: int,
                       pools: NuisancePools = DEFAULT_POOLS) -> SceneSpec:
    """Resample background, light and appearance from pools; the clip is untouched."""
    for name in ("background_ids", "appearance_ids", "light_levels"):
        if not getattr(pools, name):
            raise ValueError(f"empty nuisance pool: {name}")
    rng = np.random.default_rng(seed)
    factors = spec.factors.replace(
        background_id=pools.background_ids[rng.integers(len(pools.background_ids))],
        appearance_id=pools.appearance_ids[rng.integers(len(pools.appearance_ids))],
        light_intensity=pools.light_levels[rng.integers(len(pools.light_levels))],
    )
    return spec.with_factors(factors)
