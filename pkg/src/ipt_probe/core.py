"""Shared domain types and the on-disk dataset model.

A dataset on disk is a directory with a ``manifest.json`` plus one
directory per video holding 8-bit RGB PNG frames (``frame_%06d.png``)
and, optionally, binary masks stored as 8-bit grayscale PNGs with
values 0/255 (``mask_%06d.png``).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from PIL import Image

FRAME_PATTERN = "frame_%06d.png"
MASK_PATTERN = "mask_%06d.png"
MANIFEST_NAME = "manifest.json"


class DatasetError(Exception):
    """Raised for any malformed or inconsistent dataset on disk."""


def _freeze(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Frame:
    """One RGB time-slice: a (height, width, 3) uint8 raster."""

    pixels: np.ndarray

    def __post_init__(self):
        p = self.pixels
        if not isinstance(p, np.ndarray) or p.dtype != np.uint8:
            raise ValueError("frame pixels must be a uint8 ndarray")
        if p.ndim != 3 or p.shape[2] != 3:
            raise ValueError(f"frame pixels must have shape (h, w, 3), got {p.shape}")
        if p.shape[0] < 1 or p.shape[1] < 1:
            raise ValueError("frame dimensions must be positive")
        object.__setattr__(self, "pixels", _freeze(np.ascontiguousarray(p)))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @classmethod
    def from_bytes(cls, width: int, height: int, data: bytes) -> "Frame":
        if len(data) != width * height * 3:
            raise ValueError(
                f"pixel buffer has {len(data)} bytes, expected {width * height * 3}"
            )
        arr = np.frombuffer(data, dtype=np.uint8).reshape(height, width, 3).copy()
        return cls(arr)

    def tobytes(self) -> bytes:
        return self.pixels.tobytes()


@dataclass(frozen=True, eq=False)
class Video:
    """An ordered frame sequence with its label and identity."""

    frames: tuple[Frame, ...]
    fps: float
    class_label: int
    video_id: str

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        if not self.frames:
            raise ValueError(f"video {self.video_id!r} has no frames")
        if not (self.fps > 0 and math.isfinite(self.fps)):
            raise ValueError(f"video {self.video_id!r}: fps must be positive")
        w, h = self.frames[0].width, self.frames[0].height
        for i, f in enumerate(self.frames):
            if f.width != w or f.height != h:
                raise ValueError(
                    f"video {self.video_id!r}: frame {i} is {f.width}x{f.height}, "
                    f"expected {w}x{h}"
                )

    @property
    def width(self) -> int:
        return self.frames[0].width

    @property
    def height(self) -> int:
        return self.frames[0].height

    @property
    def frame_count(self) -> int:
        return len(self.frames)

    def tobytes(self) -> bytes:
        """Frame-major, row-major RGB8 payload."""
        return b"".join(f.tobytes() for f in self.frames)


@dataclass(frozen=True, eq=False)
class MaskSequence:
    """Per-frame binary person masks; 1 marks foreground pixels."""

    masks: tuple[np.ndarray, ...]

    def __post_init__(self):
        masks = []
        for i, m in enumerate(self.masks):
            m = np.asarray(m)
            if m.dtype != np.uint8 or m.ndim != 2:
                raise ValueError(f"mask {i} must be a 2-D uint8 array")
            bad = np.setdiff1d(np.unique(m), [0, 1])
            if bad.size:
                raise ValueError(f"mask {i} contains values other than 0/1: {bad.tolist()}")
            masks.append(_freeze(np.ascontiguousarray(m)))
        object.__setattr__(self, "masks", tuple(masks))

    def __len__(self) -> int:
        return len(self.masks)


@dataclass(frozen=True)
class FactorVector:
    """Nuisance rendering factors: viewpoint, appearance, background, light."""

    azimuth_deg: float
    elevation_deg: float
    distance: float
    appearance_id: str
    background_id: str
    light_intensity: float

    def __post_init__(self):
        if not self.distance > 0:
            raise ValueError("distance must be positive")
        if self.light_intensity < 0:
            raise ValueError("light_intensity must be non-negative")
        object.__setattr__(self, "azimuth_deg", float(self.azimuth_deg) % 360.0)
        object.__setattr__(self, "elevation_deg", float(self.elevation_deg))
        object.__setattr__(self, "distance", float(self.distance))
        object.__setattr__(self, "light_intensity", float(self.light_intensity))

    def replace(self, **kwargs) -> "FactorVector":
        fields = {
            "azimuth_deg": self.azimuth_deg,
            "elevation_deg": self.elevation_deg,
            "distance": self.distance,
            "appearance_id": self.appearance_id,
            "background_id": self.background_id,
            "light_intensity": self.light_intensity,
        }
        fields.update(kwargs)
        return FactorVector(**fields)

    def to_json(self) -> dict:
        return {
            "azimuth_deg": self.azimuth_deg,
            "elevation_deg": self.elevation_deg,
            "distance": self.distance,
            "appearance_id": self.appearance_id,
            "background_id": self.background_id,
            "light_intensity": self.light_intensity,
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "FactorVector":
        try:
            return cls(
                azimuth_deg=float(obj["azimuth_deg"]),
                elevation_deg=float(obj["elevation_deg"]),
                distance=float(obj["distance"]),
                appearance_id=str(obj["appearance_id"]),
                background_id=str(obj["background_id"]),
                light_intensity=float(obj["light_intensity"]),
            )
        except KeyError as exc:
            raise DatasetError(f"factor vector missing key {exc}") from None


@dataclass(frozen=True)
class LabelSpace:
    """Ordered class names; list index is the class id."""

    labels: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(str(x) for x in self.labels))
        if not self.labels:
            raise ValueError("label space is empty")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("label names must be unique")

    def __len__(self) -> int:
        return len(self.labels)

    def index_of(self, name: str) -> int:
        try:
            return self.labels.index(name)
        except ValueError:
            raise KeyError(f"label {name!r} not in label space") from None


@dataclass(frozen=True)
class ScoreVector:
    """Raw per-class model outputs; recorded as returned, no normalization."""

    scores: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(s) for s in self.scores)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("scores must be finite")
        object.__setattr__(self, "scores", vals)

    def __len__(self) -> int:
        return len(self.scores)


@dataclass(frozen=True)
class VideoEntry:
    video_id: str
    path: str
    class_label: int
    mask_path: str | None = None
    factors: FactorVector | None = None


@dataclass(frozen=True)
class DatasetManifest:
    videos: tuple[VideoEntry, ...]
    label_space: LabelSpace
    fps: float

    def __post_init__(self):
        object.__setattr__(self, "videos", tuple(self.videos))
        ids = [v.video_id for v in self.videos]
        dupes = {i for i in ids if ids.count(i) > 1}
        if dupes:
            raise DatasetError(f"duplicate video_id: {sorted(dupes)}")

    def entry(self, video_id: str) -> VideoEntry:
        for v in self.videos:
            if v.video_id == video_id:
                return v
        raise DatasetError(f"unknown video_id {video_id!r}")

    def video_ids(self) -> list[str]:
        return [v.video_id for v in self.videos]


def _manifest_to_json(manifest: DatasetManifest) -> dict:
    return {
        "fps": manifest.fps,
        "labels": list(manifest.label_space.labels),
        "videos": [
            {
                "id": v.video_id,
                "path": v.path,
                "label": v.class_label,
                "mask_path": v.mask_path,
                "factors": v.factors.to_json() if v.factors is not None else None,
            }
            for v in manifest.videos
        ],
    }


def _manifest_from_json(obj: Mapping) -> DatasetManifest:
    for key in ("fps", "labels", "videos"):
        if key not in obj:
            raise DatasetError(f"manifest missing {key!r}")
    label_space = LabelSpace(tuple(obj["labels"]))
    entries = []
    for rec in obj["videos"]:
        for key in ("id", "path", "label"):
            if key not in rec:
                raise DatasetError(f"manifest video entry missing {key!r}: {rec}")
        factors = rec.get("factors")
        entries.append(
            VideoEntry(
                video_id=str(rec["id"]),
                path=str(rec["path"]),
                class_label=int(rec["label"]),
                mask_path=rec.get("mask_path"),
                factors=FactorVector.from_json(factors) if factors else None,
            )
        )
        label = entries[-1].class_label
        if not 0 <= label < len(label_space):
            raise DatasetError(
                f"video {entries[-1].video_id!r}: label {label} outside label space"
            )
    return DatasetManifest(tuple(entries), label_space, float(obj["fps"]))


def _load_frame_png(path: Path) -> np.ndarray:
    with Image.open(path) as img:
        arr = np.asarray(img.convert("RGB"), dtype=np.uint8)
    return arr


def _load_mask_png(path: Path) -> np.ndarray:
    with Image.open(path) as img:
        if img.mode != "L":
            raise DatasetError(f"{path}: mask PNG must be 8-bit grayscale, got {img.mode}")
        arr = np.asarray(img, dtype=np.uint8)
    bad = np.setdiff1d(np.unique(arr), [0, 255])
    if bad.size:
        raise DatasetError(f"{path}: mask values must be 0 or 255, found {bad.tolist()}")
    return (arr // 255).astype(np.uint8)


class Dataset:
    """A parsed manifest plus lazy, per-video pixel loading."""

    def __init__(self, root: Path, manifest: DatasetManifest):
        self.root = Path(root)
        self.manifest = manifest

    def video_ids(self) -> list[str]:
        return self.manifest.video_ids()

    def _frame_paths(self, entry: VideoEntry) -> list[Path]:
        video_dir = self.root / entry.path
        paths = sorted(video_dir.glob("frame_*.png"))
        if not paths:
            raise DatasetError(f"video {entry.video_id!r}: no frames in {video_dir}")
        return paths

    def load_video(self, video_id: str) -> Video:
        entry = self.manifest.entry(video_id)
        frames = tuple(Frame(_load_frame_png(p)) for p in self._frame_paths(entry))
        return Video(frames, self.manifest.fps, entry.class_label, video_id)

    def load_masks(self, video_id: str) -> MaskSequence | None:
        entry = self.manifest.entry(video_id)
        if entry.mask_path is None:
            return None
        mask_dir = self.root / entry.mask_path
        paths = sorted(mask_dir.glob("mask_*.png"))
        if not paths:
            raise DatasetError(f"video {video_id!r}: no masks in {mask_dir}")
        n_frames = len(self._frame_paths(entry))
        if len(paths) != n_frames:
            raise DatasetError(
                f"video {video_id!r}: {len(paths)} masks for {n_frames} frames"
            )
        return MaskSequence(tuple(_load_mask_png(p) for p in paths))


def load_dataset(root: str | Path) -> Dataset:
    """Parse ``manifest.json`` under root and verify every referenced path."""
    root = Path(root)
    manifest_path = root / MANIFEST_NAME
    if not manifest_path.is_file():
        raise DatasetError(f"missing {MANIFEST_NAME} in {root}")
    try:
        obj = json.loads(manifest_path.read_text("utf-8"))
    except json.JSONDecodeError as exc:
        raise DatasetError(f"{manifest_path}: malformed JSON: {exc}") from None
    manifest = _manifest_from_json(obj)
    for entry in manifest.videos:
        if not (root / entry.path).is_dir():
            raise DatasetError(
                f"video {entry.video_id!r}: frame directory {entry.path!r} does not exist"
            )
        if entry.mask_path is not None and not (root / entry.mask_path).is_dir():
            raise DatasetError(
                f"video {entry.video_id!r}: mask directory {entry.mask_path!r} does not exist"
            )
    return Dataset(root, manifest)


def save_dataset(
    root: str | Path,
    videos: Sequence[Video],
    label_space: LabelSpace,
    *,
    masks: Mapping[str, MaskSequence] | None = None,
    factors: Mapping[str, FactorVector] | None = None,
) -> DatasetManifest:
    """Write videos as PNG frame directories plus a manifest.

    Output is byte-deterministic for identical input: frames are encoded
    with fixed PNG settings and manifest entries are sorted by video_id.
    """
    root = Path(root)
    masks = masks or {}
    factors = factors or {}
    videos = sorted(videos, key=lambda v: v.video_id)
    fps_values = {v.fps for v in videos}
    if len(fps_values) > 1:
        raise DatasetError(f"videos disagree on fps: {sorted(fps_values)}")
    fps = videos[0].fps if videos else 0.0
    if not videos:
        raise DatasetError("refusing to save an empty dataset")

    entries = []
    for video in videos:
        rel = f"videos/{video.video_id}"
        video_dir = root / rel
        video_dir.mkdir(parents=True, exist_ok=True)
        for i, frame in enumerate(video.frames):
            out = video_dir / (FRAME_PATTERN % i)
            try:
                Image.fromarray(frame.pixels, mode="RGB").save(out, format="PNG")
            except OSError as exc:
                raise DatasetError(f"failed writing {out}: {exc}") from None
        mask_rel = None
        seq = masks.get(video.video_id)
        if seq is not None:
            if len(seq) != video.frame_count:
                raise DatasetError(
                    f"video {video.video_id!r}: {len(seq)} masks for "
                    f"{video.frame_count} frames"
                )
            for i, m in enumerate(seq.masks):
                out = video_dir / (MASK_PATTERN % i)
                Image.fromarray((m * 255).astype(np.uint8), mode="L").save(out, format="PNG")
            mask_rel = rel
        entries.append(
            VideoEntry(
                video_id=video.video_id,
                path=rel,
                class_label=video.class_label,
                mask_path=mask_rel,
                factors=factors.get(video.video_id),
            )
        )

    manifest = DatasetManifest(tuple(entries), label_space, fps)
    payload = json.dumps(_manifest_to_json(manifest), indent=2, sort_keys=True)
    (root / MANIFEST_NAME).write_text(payload + "\n", "utf-8")
    return manifest
