import json

import numpy as np
import pytest

from ipt_probe.core import (
    DatasetError,
    FactorVector,
    Frame,
    LabelSpace,
    MaskSequence,
    ScoreVector,
    Video,
    load_dataset,
    save_dataset,
)

from conftest import make_masks, make_video


def tree_bytes(root):
    """Map of relative path -> file bytes for an entire directory tree."""
    return {
        str(p.relative_to(root)): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


class TestTypes:
    def test_frame_rejects_wrong_buffer_length(self):
        with pytest.raises(ValueError):
            Frame.from_bytes(4, 4, b"\x00" * 10)

    def test_frame_buffer_roundtrip(self):
        data = bytes(range(48))
        f = Frame.from_bytes(4, 4, data)
        assert f.tobytes() == data
        assert (f.width, f.height) == (4, 4)

    def test_frame_pixels_immutable(self):
        f = make_video().frames[0]
        with pytest.raises(ValueError):
            f.pixels[0, 0, 0] = 1

    def test_video_requires_uniform_dimensions(self):
        a = Frame(np.zeros((4, 4, 3), dtype=np.uint8))
        b = Frame(np.zeros((4, 5, 3), dtype=np.uint8))
        with pytest.raises(ValueError, match="frame 1"):
            Video((a, b), 10.0, 0, "v")

    def test_video_requires_frames(self):
        with pytest.raises(ValueError):
            Video((), 10.0, 0, "v")

    def test_mask_values_strict(self):
        m = np.full((4, 4), 2, dtype=np.uint8)
        with pytest.raises(ValueError, match="other than 0/1"):
            MaskSequence((m,))

    def test_factor_vector_normalizes_azimuth(self):
        f = FactorVector(725.5, 0.0, 1.0, "a", "b", 1.0)
        assert f.azimuth_deg == 5.5
        assert FactorVector(-90.0, 0, 1, "a", "b", 1).azimuth_deg == 270.0
        assert FactorVector(360.0, 0, 1, "a", "b", 1).azimuth_deg == 0.0

    def test_factor_vector_rejects_bad_distance(self):
        with pytest.raises(ValueError):
            FactorVector(0, 0, 0.0, "a", "b", 1)

    def test_label_space_unique_nonempty(self):
        with pytest.raises(ValueError):
            LabelSpace(())
        with pytest.raises(ValueError):
            LabelSpace(("a", "a"))
        assert LabelSpace(("a", "b")).index_of("b") == 1

    def test_score_vector_finite(self):
        with pytest.raises(ValueError):
            ScoreVector((1.0, float("nan")))


class TestDatasetIO:
    def test_write_then_read_two_videos(self, tmp_path, labels3):
        vids = [make_video("a", seed=1), make_video("b", seed=2, class_label=1)]
        save_dataset(tmp_path, vids, labels3)
        ds = load_dataset(tmp_path)
        assert ds.video_ids() == ["a", "b"]
        assert ds.manifest.label_space == labels3

    def test_round_trip_preserves_pixels_and_manifest(self, tmp_path, labels3):
        video = make_video("clipx", seed=7, n_frames=4, class_label=2)
        fv = FactorVector(30.0, 10.0, 5.0, "app", "bg", 1.0)
        save_dataset(
            tmp_path, [video], labels3,
            masks={"clipx": make_masks(video)},
            factors={"clipx": fv},
        )
        ds = load_dataset(tmp_path)
        loaded = ds.load_video("clipx")
        assert loaded.tobytes() == video.tobytes()
        assert loaded.class_label == 2
        assert ds.manifest.entry("clipx").factors == fv
        masks = ds.load_masks("clipx")
        assert len(masks) == 4
        for got, want in zip(masks.masks, make_masks(video).masks):
            assert np.array_equal(got, want)

    def test_second_save_and_load_round_trip(self, tmp_path, labels3):
        # save -> load -> save again -> identical trees
        video = make_video("v", seed=3)
        save_dataset(tmp_path / "one", [video], labels3)
        ds = load_dataset(tmp_path / "one")
        save_dataset(tmp_path / "two", [ds.load_video("v")], ds.manifest.label_space)
        assert tree_bytes(tmp_path / "one") == tree_bytes(tmp_path / "two")

    def test_save_is_byte_deterministic(self, tmp_path, labels3):
        vids = [make_video("a", seed=5), make_video("b", seed=6)]
        mask_map = {"a": make_masks(vids[0])}
        save_dataset(tmp_path / "x", vids, labels3, masks=mask_map)
        save_dataset(tmp_path / "y", vids, labels3, masks=mask_map)
        assert tree_bytes(tmp_path / "x") == tree_bytes(tmp_path / "y")

    def test_masks_written_alongside_frames(self, tmp_path, labels3):
        video = make_video("m")
        save_dataset(tmp_path, [video], labels3, masks={"m": make_masks(video)})
        files = sorted(p.name for p in (tmp_path / "videos" / "m").iterdir())
        assert "mask_000000.png" in files and "frame_000000.png" in files

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(DatasetError, match="missing manifest.json"):
            load_dataset(tmp_path)

    def test_malformed_json(self, tmp_path):
        (tmp_path / "manifest.json").write_text("{not json")
        with pytest.raises(DatasetError, match="malformed JSON"):
            load_dataset(tmp_path)

    def test_dangling_path_names_video(self, tmp_path, labels3):
        save_dataset(tmp_path, [make_video("gone")], labels3)
        frames_dir = tmp_path / "videos" / "gone"
        for p in frames_dir.iterdir():
            p.unlink()
        frames_dir.rmdir()
        with pytest.raises(DatasetError, match="gone"):
            load_dataset(tmp_path)

    def test_duplicate_video_id(self, tmp_path, labels3):
        save_dataset(tmp_path, [make_video("dup")], labels3)
        obj = json.loads((tmp_path / "manifest.json").read_text())
        obj["videos"].append(dict(obj["videos"][0]))
        (tmp_path / "manifest.json").write_text(json.dumps(obj))
        with pytest.raises(DatasetError, match="dup"):
            load_dataset(tmp_path)

    def test_mask_png_values_validated(self, tmp_path, labels3):
        from PIL import Image

        video = make_video("v")
        save_dataset(tmp_path, [video], labels3, masks={"v": make_masks(video)})
        bad = np.full((video.height, video.width), 7, dtype=np.uint8)
        Image.fromarray(bad, mode="L").save(
            tmp_path / "videos" / "v" / "mask_000000.png"
        )
        ds = load_dataset(tmp_path)
        with pytest.raises(DatasetError, match="0 or 255"):
            ds.load_masks("v")
