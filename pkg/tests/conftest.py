import numpy as np
import pytest

from ipt_probe.core import Frame, LabelSpace, MaskSequence, Video

FIXTURES = __import__("pathlib").Path(__file__).parent / "fixtures"


def make_video(video_id="v0", width=8, height=6, n_frames=3, fps=10.0,
               class_label=0, seed=None, fill=None):
    """Small test video: solid fill, or seeded random pixels."""
    frames = []
    for i in range(n_frames):
        if fill is not None:
            arr = np.full((height, width, 3), fill, dtype=np.uint8)
        else:
            rng = np.random.default_rng(0 if seed is None else [seed, i])
            arr = rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8)
        frames.append(Frame(arr))
    return Video(tuple(frames), fps, class_label, video_id)


def make_masks(video, pattern="checker"):
    masks = []
    h, w = video.height, video.width
    for i in range(video.frame_count):
        if pattern == "checker":
            yy, xx = np.mgrid[0:h, 0:w]
            m = ((yy + xx) % 2).astype(np.uint8)
        elif pattern == "ones":
            m = np.ones((h, w), dtype=np.uint8)
        elif pattern == "zeros":
            m = np.zeros((h, w), dtype=np.uint8)
        else:
            raise ValueError(pattern)
        masks.append(m)
    return MaskSequence(tuple(masks))


@pytest.fixture
def labels3():
    return LabelSpace(("walk", "wave", "jump"))


@pytest.fixture
def fixtures_dir():
    return FIXTURES
