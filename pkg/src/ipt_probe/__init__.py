"""Diagnostics toolkit for probing video activity classifiers.

Applies identity-preserving transforms (image-space operators, mask-based
foreground/background splits, and factor-controlled synthetic rendering)
to video datasets, drives a black-box classifier over a framed wire
protocol, and reports sensitivity metrics.
"""

__version__ = "0.1.0"

from .core import (
    Dataset,
    DatasetError,
    DatasetManifest,
    FactorVector,
    Frame,
    LabelSpace,
    MaskSequence,
    ScoreVector,
    Video,
    VideoEntry,
    load_dataset,
    save_dataset,
)
from .seeding import derive_seed

__all__ = [
    "Dataset",
    "DatasetError",
    "DatasetManifest",
    "FactorVector",
    "Frame",
    "LabelSpace",
    "MaskSequence",
    "ScoreVector",
    "Video",
    "VideoEntry",
    "derive_seed",
    "load_dataset",
    "save_dataset",
]
