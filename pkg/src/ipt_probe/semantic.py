"""Foreground/background splitting of a video by its binary person masks.

Superimposes black onto the background (foreground-only output) and onto
the foreground (background-only output). Frames whose mask is entirely
zero carry no usable foreground and are dropped from both outputs.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .core import Frame, MaskSequence, Video

DEFAULT_DROP_THRESHOLD = 0.2


class SemanticError(Exception):
    pass


def split_fg_bg(video: Video, masks: MaskSequence
                ) -> tuple[Video, Video, list[int]]:
    """Build the foreground-only and background-only variants of a video.

    Returns (fg_video, bg_video, dropped_frames). Retained pixels are
    copied verbatim; the removed region is zeroed. The two outputs stay
    frame-aligned: a frame dropped from one is dropped from the other.
    """
    if len(masks) != video.frame_count:
        raise SemanticError(
            f"video {video.video_id!r}: {len(masks)} masks for "
            f"{video.frame_count} frames"
        )
    fg_frames, bg_frames, dropped = [], [], []
    for i, (frame, mask) in enumerate(zip(video.frames, masks.masks)):
        if mask.shape != (video.height, video.width):
            raise SemanticError(
                f"video {video.video_id!r}: mask {i} is {mask.shape}, "
                f"frame is {(video.height, video.width)}"
            )
        if not mask.any():
            dropped.append(i)
            continue
        keep = mask[:, :, None].astype(bool)
        fg_frames.append(Frame(np.where(keep, frame.pixels, 0).astype(np.uint8)))
        bg_frames.append(Frame(np.where(keep, 0, frame.pixels).astype(np.uint8)))
    if not fg_frames:
        raise SemanticError(
            f"video {video.video_id!r}: every mask frame is empty, nothing to split"
        )
    fg = Video(tuple(fg_frames), video.fps, video.class_label, video.video_id + "_fg")
    bg = Video(tuple(bg_frames), video.fps, video.class_label, video.video_id + "_bg")
    return fg, bg, dropped


def filter_undetected(pairs: Iterable[tuple[str, float]], threshold: float
                      ) -> list[str]:
    """Video ids whose dropped-frame fraction is at most the threshold."""
    retained = []
    for video_id, fraction in pairs:
        if not 0.0 <= fraction <= 1.0:
            raise ValueError(
                f"video {video_id!r}: dropped fraction {fraction} outside [0, 1]"
            )
        if fraction <= threshold:
            retained.append(video_id)
    return retained
