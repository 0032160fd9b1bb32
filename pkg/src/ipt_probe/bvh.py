"""BVH motion-capture parsing and forward kinematics.

Parses BVH 1.0 text (HIERARCHY + MOTION, ASCII, LF or CRLF) into a
skeleton plus per-frame channel rows and evaluates world-space joint
positions. Rotations are intrinsic, in degrees, applied in the file's
channel order; no unit conversion is performed.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

CHANNEL_NAMES = frozenset(
    ["Xposition", "Yposition", "Zposition", "Xrotation", "Yrotation", "Zrotation"]
)


class BvhError(Exception):
    """Parse or evaluation failure; message carries the source line."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True, eq=False)
class BvhJoint:
    name: str
    parent: int | None
    offset: np.ndarray
    channels: tuple[str, ...]


@dataclass(frozen=True, eq=False)
class EndSite:
    parent: int
    offset: np.ndarray


@dataclass(frozen=True, eq=False)
class Skeleton:
    """Joint tree in declaration order; parents precede children."""

    joints: tuple[BvhJoint, ...]
    end_sites: tuple[EndSite, ...]

    def __post_init__(self):
        roots = [j for j in self.joints if j.parent is None]
        if len(roots) != 1:
            raise ValueError(f"skeleton must have exactly one root, got {len(roots)}")
        for i, j in enumerate(self.joints):
            if j.parent is not None and not 0 <= j.parent < i:
                raise ValueError(f"joint {j.name!r}: parent must be declared earlier")
            for ch in j.channels:
                if ch not in CHANNEL_NAMES:
                    raise ValueError(f"joint {j.name!r}: unknown channel {ch!r}")

    @property
    def channel_count(self) -> int:
        return sum(len(j.channels) for j in self.joints)

    @property
    def position_count(self) -> int:
        """Number of FK output positions: joints first, then end sites."""
        return len(self.joints) + len(self.end_sites)

    def edges(self) -> list[tuple[int, int]]:
        """Bone segments as (parent, child) position indices, end sites included."""
        out = [(j.parent, i) for i, j in enumerate(self.joints) if j.parent is not None]
        out.extend(
            (e.parent, len(self.joints) + k) for k, e in enumerate(self.end_sites)
        )
        return out


@dataclass(frozen=True, eq=False)
class MotionClip:
    """A skeleton with its channel-value rows; the identity factor."""

    skeleton: Skeleton
    frame_time: float
    frames: np.ndarray
    activity_label: str = ""

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float64)
        if frames.ndim != 2:
            raise ValueError("motion frames must be a 2-D array")
        if frames.shape[0] < 1:
            raise ValueError("clip must have at least one frame")
        if frames.shape[1] != self.skeleton.channel_count:
            raise ValueError(
                f"rows have {frames.shape[1]} values, skeleton declares "
                f"{self.skeleton.channel_count} channels"
            )
        if not self.frame_time > 0:
            raise ValueError("frame_time must be positive")
        frames.setflags(write=False)
        object.__setattr__(self, "frames", frames)

    @property
    def frame_count(self) -> int:
        return self.frames.shape[0]

    def sliced(self, max_frames: int) -> "MotionClip":
        """First max_frames frames; the temporal order is untouched."""
        if max_frames >= self.frame_count:
            return self
        return MotionClip(
            self.skeleton, self.frame_time, self.frames[:max_frames].copy(),
            self.activity_label,
        )


@dataclass(frozen=True, eq=False)
class PoseFrame:
    """World-space positions, one per skeleton position (end sites last)."""

    joint_positions: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.joint_positions, dtype=np.float64)
        if pos.ndim != 2 or pos.shape[1] != 3:
            raise ValueError("joint positions must be (n, 3)")
        if not np.all(np.isfinite(pos)):
            raise ValueError("joint positions must be finite")
        pos.setflags(write=False)
        object.__setattr__(self, "joint_positions", pos)


class _Tokens:
    """Whitespace tokenizer that remembers the line of each token."""

    def __init__(self, text: str):
        self.items: list[tuple[str, int]] = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            for match in re.finditer(r"\S+", line):
                self.items.append((match.group(0), lineno))
        self.pos = 0

    def peek(self) -> tuple[str, int] | None:
        return self.items[self.pos] if self.pos < len(self.items) else None

    def next(self, expect: str | None = None) -> tuple[str, int]:
        if self.pos >= len(self.items):
            last_line = self.items[-1][1] if self.items else 1
            raise BvhError("unexpected end of file", last_line)
        tok, line = self.items[self.pos]
        self.pos += 1
        if expect is not None and tok != expect:
            raise BvhError(f"expected {expect!r}, found {tok!r}", line)
        return tok, line

    def next_float(self) -> tuple[float, int]:
        tok, line = self.next()
        try:
            return float(tok), line
        except ValueError:
            raise BvhError(f"expected a number, found {tok!r}", line) from None

    def next_int(self) -> tuple[int, int]:
        tok, line = self.next()
        try:
            return int(tok), line
        except ValueError:
            raise BvhError(f"expected an integer, found {tok!r}", line) from None


def _parse_offset(tokens: _Tokens) -> np.ndarray:
    tokens.next("OFFSET")
    return np.array([tokens.next_float()[0] for _ in range(3)], dtype=np.float64)


def _parse_joint_body(tokens, joints, end_sites, parent: int | None):
    """Parse the block after a ROOT/JOINT name token; returns at the closing brace."""
    name, name_line = tokens.next()
    index = len(joints)
    tokens.next("{")
    offset = _parse_offset(tokens)
    tok, line = tokens.next("CHANNELS")
    n, _ = tokens.next_int()
    channels = []
    for _ in range(n):
        ch, ch_line = tokens.next()
        if ch not in CHANNEL_NAMES:
            raise BvhError(f"unknown channel name {ch!r}", ch_line)
        channels.append(ch)
    joints.append(BvhJoint(name, parent, offset, tuple(channels)))

    while True:
        tok, line = tokens.next()
        if tok == "}":
            return
        if tok == "JOINT":
            _parse_joint_body(tokens, joints, end_sites, index)
        elif tok == "End":
            tokens.next("Site")
            tokens.next("{")
            end_sites.append(EndSite(index, _parse_offset(tokens)))
            tokens.next("}")
        else:
            raise BvhError(f"expected JOINT, End Site or '}}', found {tok!r}", line)


def parse_bvh(text: str, activity_label: str = "") -> MotionClip:
    """Parse BVH source text into a MotionClip; values are kept as declared."""
    tokens = _Tokens(text)
    tokens.next("HIERARCHY")
    tokens.next("ROOT")
    joints: list[BvhJoint] = []
    end_sites: list[EndSite] = []
    _parse_joint_body(tokens, joints, end_sites, None)

    nxt = tokens.peek()
    if nxt is not None and nxt[0] == "ROOT":
        raise BvhError("multiple ROOT declarations are not supported", nxt[1])
    tokens.next("MOTION")
    tok, line = tokens.next("Frames:")
    declared, _ = tokens.next_int()
    if declared < 1:
        raise BvhError("Frames: must be at least 1", line)
    tokens.next("Frame")
    tok, line = tokens.next()
    if tok != "Time:":
        raise BvhError(f"expected 'Frame Time:', found 'Frame {tok}'", line)
    frame_time, ft_line = tokens.next_float()
    if not frame_time > 0:
        raise BvhError("frame time must be positive", ft_line)

    try:
        skeleton = Skeleton(tuple(joints), tuple(end_sites))
    except ValueError as exc:
        raise BvhError(str(exc)) from None
    n_channels = skeleton.channel_count

    # Motion rows are one frame per line; validate each row's width.
    rows: list[list[float]] = []
    row_lines: list[int] = []
    motion_line = None
    while tokens.peek() is not None:
        tok, line = tokens.peek()
        if motion_line is None or line != motion_line:
            rows.append([])
            row_lines.append(line)
            motion_line = line
        value, line = tokens.next_float()
        rows[-1].append(value)
    for row, line in zip(rows, row_lines):
        if len(row) != n_channels:
            raise BvhError(
                f"motion row has {len(row)} values, expected {n_channels}", line
            )
    if len(rows) != declared:
        raise BvhError(
            f"declared Frames: {declared} but found {len(rows)} motion rows", ft_line
        )

    return MotionClip(skeleton, frame_time, np.array(rows, dtype=np.float64),
                      activity_label)


def _rotation(axis: str, degrees: float) -> np.ndarray:
    c = math.cos(math.radians(degrees))
    s = math.sin(math.radians(degrees))
    if axis == "X":
        return np.array([[1, 0, 0], [0, c, -s], [0, s, c]], dtype=np.float64)
    if axis == "Y":
        return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]], dtype=np.float64)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]], dtype=np.float64)


_AXIS_INDEX = {"X": 0, "Y": 1, "Z": 2}


def forward_kinematics(clip: MotionClip, frame_index: int) -> PoseFrame:
    """World positions for one frame, composed root to leaf.

    Each joint applies its constant offset translation, then its channels
    in declared order (translations move the joint, rotations re-orient
    everything below it).
    """
    if not 0 <= frame_index < clip.frame_count:
        raise IndexError(
            f"frame_index {frame_index} out of range 0..{clip.frame_count - 1}"
        )
    row = clip.frames[frame_index]
    skeleton = clip.skeleton
    n = len(skeleton.joints)
    rotations = [None] * n
    positions = np.empty((skeleton.position_count, 3), dtype=np.float64)

    cursor = 0
    for i, joint in enumerate(skeleton.joints):
        if joint.parent is None:
            rot = np.eye(3)
            pos = np.zeros(3)
        else:
            rot = rotations[joint.parent]
            pos = positions[joint.parent]
        pos = pos + rot @ joint.offset
        for ch in joint.channels:
            value = row[cursor]
            cursor += 1
            axis = ch[0]
            if ch.endswith("position"):
                step = np.zeros(3)
                step[_AXIS_INDEX[axis]] = value
                pos = pos + rot @ step
            else:
                rot = rot @ _rotation(axis, value)
        rotations[i] = rot
        positions[i] = pos

    for k, site in enumerate(skeleton.end_sites):
        positions[n + k] = positions[site.parent] + rotations[site.parent] @ site.offset

    return PoseFrame(positions)


def clip_duration(clip: MotionClip) -> float:
    """Total clip length in seconds: frame count times frame time."""
    return clip.frame_count * clip.frame_time
