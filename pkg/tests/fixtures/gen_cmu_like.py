"""Regenerate cmu_like.bvh: a full humanoid skeleton with smooth motion.

The joint tree mirrors the layout of common motion-capture skeleton
exports (31 joints, six root channels, three rotation channels per
joint, end sites at the extremities). Motion rows are deterministic
sinusoids so the fixture is stable and self-contained.

Run from this directory: python3 gen_cmu_like.py
"""

import math
from pathlib import Path

import numpy as np

# (name, parent, offset)
JOINTS = [
    ("Hips", None, (0.0, 17.0, 0.0)),
    ("LHipJoint", "Hips", (0.0, 0.0, 0.0)),
    ("LeftUpLeg", "LHipJoint", (1.65, -1.8, 0.6)),
    ("LeftLeg", "LeftUpLeg", (2.6, -7.0, 0.0)),
    ("LeftFoot", "LeftLeg", (2.5, -7.2, 0.0)),
    ("LeftToeBase", "LeftFoot", (0.15, -0.6, 2.1)),
    ("RHipJoint", "Hips", (0.0, 0.0, 0.0)),
    ("RightUpLeg", "RHipJoint", (-1.65, -1.8, 0.6)),
    ("RightLeg", "RightUpLeg", (-2.6, -7.0, 0.0)),
    ("RightFoot", "RightLeg", (-2.5, -7.2, 0.0)),
    ("RightToeBase", "RightFoot", (-0.15, -0.6, 2.1)),
    ("LowerBack", "Hips", (0.0, 0.0, 0.0)),
    ("Spine", "LowerBack", (0.0, 2.2, -0.1)),
    ("Spine1", "Spine", (0.0, 2.3, 0.0)),
    ("Neck", "Spine1", (0.0, 0.0, 0.0)),
    ("Neck1", "Neck", (0.0, 1.6, 0.2)),
    ("Head", "Neck1", (0.0, 1.7, 0.1)),
    ("LeftShoulder", "Spine1", (0.0, 0.0, 0.0)),
    ("LeftArm", "LeftShoulder", (3.4, 1.0, -0.4)),
    ("LeftForeArm", "LeftArm", (5.2, 0.0, 0.0)),
    ("LeftHand", "LeftForeArm", (3.9, 0.0, 0.0)),
    ("LeftFingerBase", "LeftHand", (0.0, 0.0, 0.0)),
    ("LeftHandIndex1", "LeftFingerBase", (0.9, 0.0, 0.0)),
    ("LThumb", "LeftHand", (0.6, 0.0, 0.6)),
    ("RightShoulder", "Spine1", (0.0, 0.0, 0.0)),
    ("RightArm", "RightShoulder", (-3.4, 1.0, -0.4)),
    ("RightForeArm", "RightArm", (-5.2, 0.0, 0.0)),
    ("RightHand", "RightForeArm", (-3.9, 0.0, 0.0)),
    ("RightFingerBase", "RightHand", (0.0, 0.0, 0.0)),
    ("RightHandIndex1", "RightFingerBase", (-0.9, 0.0, 0.0)),
    ("RThumb", "RightHand", (-0.6, 0.0, 0.6)),
]

END_SITES = {
    "Head": (0.0, 1.6, 0.0),
    "LeftToeBase": (0.0, 0.0, 1.2),
    "RightToeBase": (0.0, 0.0, 1.2),
    "LeftHandIndex1": (0.7, 0.0, 0.0),
    "RightHandIndex1": (-0.7, 0.0, 0.0),
    "LThumb": (0.5, 0.0, 0.5),
    "RThumb": (-0.5, 0.0, 0.5),
}

N_FRAMES = 120
FRAME_TIME = 0.0083333


def children_of(name):
    return [j for j in JOINTS if j[1] == name]


def emit_joint(lines, joint, depth):
    name, parent, offset = joint
    indent = "  " * depth
    keyword = "ROOT" if parent is None else "JOINT"
    lines.append(f"{indent}{keyword} {name}")
    lines.append(f"{indent}{{")
    inner = "  " * (depth + 1)
    lines.append(f"{inner}OFFSET {offset[0]:.4f} {offset[1]:.4f} {offset[2]:.4f}")
    if parent is None:
        lines.append(
            f"{inner}CHANNELS 6 Xposition Yposition Zposition "
            "Zrotation Xrotation Yrotation"
        )
    else:
        lines.append(f"{inner}CHANNELS 3 Zrotation Xrotation Yrotation")
    for child in children_of(name):
        emit_joint(lines, child, depth + 1)
    if name in END_SITES:
        ex, ey, ez = END_SITES[name]
        lines.append(f"{inner}End Site")
        lines.append(f"{inner}{{")
        lines.append(f"{inner}  OFFSET {ex:.4f} {ey:.4f} {ez:.4f}")
        lines.append(f"{inner}}}")
    lines.append(f"{indent}}}")


def motion_rows():
    rng = np.random.default_rng(20240131)
    n_rot = len(JOINTS) * 3
    amp = rng.uniform(4.0, 38.0, size=n_rot)
    freq = rng.integers(1, 4, size=n_rot)
    phase = rng.uniform(0.0, 2 * math.pi, size=n_rot)
    rows = []
    for t in range(N_FRAMES):
        u = t / N_FRAMES
        root_pos = [
            0.8 * math.sin(2 * math.pi * u),
            17.0 + 0.5 * math.sin(4 * math.pi * u),
            2.0 * u,
        ]
        angles = amp * np.sin(2 * math.pi * freq * u + phase)
        rows.append(list(root_pos) + [float(a) for a in angles])
    return rows


def main():
    lines = ["HIERARCHY"]
    emit_joint(lines, JOINTS[0], 0)
    lines.append("MOTION")
    lines.append(f"Frames: {N_FRAMES}")
    lines.append(f"Frame Time: {FRAME_TIME}")
    for row in motion_rows():
        lines.append(" ".join(f"{v:.4f}" for v in row))
    out = Path(__file__).parent / "cmu_like.bvh"
    out.write_text("\n".join(lines) + "\n")
    print(f"wrote {out} ({len(lines)} lines)")


if __name__ == "__main__":
    main()
