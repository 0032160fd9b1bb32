import math

import numpy as np
import pytest

from ipt_probe.analysis import (
    AnalysisError,
    SweepCurve,
    build_curve,
    curve_stats,
    loop_closure,
    pca,
)
from ipt_probe.metrics import Condition, PredictionRecord


def sweep_records(values, score_fn, factor="azimuth", class_id=0, n_classes=3):
    records = []
    for v in values:
        scores = [0.1] * n_classes
        scores[class_id] = score_fn(v)
        records.append(
            PredictionRecord(
                f"v_{factor}_{v:07.2f}", class_id, tuple(scores),
                Condition.sweep(factor, v),
            )
        )
    return records


class TestBuildCurve:
    def test_constant_mock_flat_curve(self):
        records = sweep_records(range(10), lambda v: 0.5)
        curve = build_curve(records, 0)
        assert set(curve.ys) == {0.5}

    def test_azimuth_360_values(self):
        records = sweep_records(range(360), lambda v: v / 360.0)
        curve = build_curve(records, 0)
        assert curve.xs == tuple(float(i) for i in range(360))

    def test_shuffled_input_same_curve(self):
        rng = np.random.default_rng(5)
        records = sweep_records(range(50), lambda v: math.sin(v))
        shuffled = list(records)
        rng.shuffle(shuffled)
        a = build_curve(records, 0)
        b = build_curve(shuffled, 0)
        assert a.xs == b.xs and a.ys == b.ys

    def test_duplicate_value_rejected(self):
        records = sweep_records([1.0, 1.0], lambda v: 0.5)
        with pytest.raises(AnalysisError, match="duplicate"):
            build_curve(records, 0)

    def test_gaps_permitted(self):
        records = sweep_records([0.0, 1.0, 5.0], lambda v: 0.5)
        curve = build_curve(records, 0)
        assert curve.xs == (0.0, 1.0, 5.0)

    def test_mixed_factors_rejected(self):
        records = sweep_records([0.0], lambda v: 0.5, factor="azimuth")
        records += sweep_records([1.0], lambda v: 0.5, factor="distance")
        with pytest.raises(AnalysisError, match="one sweep factor"):
            build_curve(records, 0)


class TestCurveStats:
    def test_cos_double_angle_extrema(self):
        records = sweep_records(
            range(360), lambda v: math.cos(2 * math.radians(v))
        )
        curve = build_curve(records, 0)
        stats = curve_stats(curve, 1)
        assert stats.peaks == (0.0, 180.0)
        assert stats.valleys == (90.0, 270.0)

    def test_smoothing_preserves_cos_extrema(self):
        records = sweep_records(
            range(360), lambda v: math.cos(2 * math.radians(v))
        )
        stats = curve_stats(build_curve(records, 0), 5)
        assert stats.peaks == (0.0, 180.0)
        assert stats.valleys == (90.0, 270.0)

    def test_monotone_decreasing_non_circular(self):
        records = sweep_records(
            range(20), lambda v: 1.0 - v / 20.0, factor="distance"
        )
        stats = curve_stats(build_curve(records, 0), 1)
        assert stats.peaks == (0.0,)       # first point is a boundary peak
        assert stats.valleys == (19.0,)    # valley at the last x

    def test_unimodal_single_peak(self):
        records = sweep_records(
            range(21), lambda v: -((v - 10.0) ** 2), factor="elevation"
        )
        stats = curve_stats(build_curve(records, 0), 1)
        assert stats.peaks == (10.0,)

    def test_extrema_match_bruteforce_scan(self):
        rng = np.random.default_rng(11)
        ys = rng.random(80)
        curve = SweepCurve("elevation", tuple(float(i) for i in range(80)),
                           tuple(ys), {})
        stats = curve_stats(curve, 1)
        peaks, valleys = [], []
        for i in range(80):
            neigh = [ys[j] for j in (i - 1, i + 1) if 0 <= j < 80]
            if all(ys[i] > v for v in neigh):
                peaks.append(float(i))
            if all(ys[i] < v for v in neigh):
                valleys.append(float(i))
        assert stats.peaks == tuple(peaks)
        assert stats.valleys == tuple(valleys)

    def test_window_validation(self):
        curve = SweepCurve("azimuth", (0.0, 1.0, 2.0), (0.0, 1.0, 0.0), {})
        with pytest.raises(AnalysisError):
            curve_stats(curve, 2)
        with pytest.raises(AnalysisError, match="larger than curve"):
            curve_stats(curve, 5)

    def test_range_and_mean(self):
        curve = SweepCurve("distance", (0.0, 1.0, 2.0, 3.0),
                           (1.0, 3.0, 5.0, 7.0), {})
        stats = curve_stats(curve, 1)
        assert stats.value_range == (1.0, 7.0)
        assert stats.mean == 4.0


class TestPca:
    def test_rank_one_line(self):
        t = np.linspace(-3, 3, 40)
        data = np.stack([t, 2 * t], axis=1)
        emb = pca(data, 2)
        # rank 1: a single true component comes back, flagged deficient
        assert emb.rank_deficient
        assert emb.components.shape == (1, 2)
        want = np.array([1.0, 2.0]) / math.sqrt(5.0)
        assert np.allclose(emb.components[0], want, atol=1e-10)

    def test_mean_shift_invariance_exact(self):
        rng = np.random.default_rng(23)
        # integer data, power-of-two sample count: column means are dyadic,
        # so centering the shifted matrix is bit-exact and the PCA must match
        data = rng.integers(-20, 21, size=(16, 6)).astype(np.float64)
        shift = np.arange(1, 7, dtype=np.float64) * 8
        a = pca(data, 3)
        b = pca(data + shift, 3)
        assert np.array_equal(a.components, b.components)
        assert np.array_equal(a.coords, b.coords)

    def test_matches_covariance_eigendecomposition(self):
        rng = np.random.default_rng(31)
        data = rng.normal(size=(20, 8))
        emb = pca(data, 5)
        centered = data - data.mean(axis=0)
        cov = centered.T @ centered / (20 - 1)
        eigvals, eigvecs = np.linalg.eigh(cov)
        order = np.argsort(eigvals)[::-1]
        eigvals = eigvals[order]
        eigvecs = eigvecs[:, order]
        for i in range(5):
            vec = eigvecs[:, i]
            pivot = int(np.argmax(np.abs(vec)))
            if vec[pivot] < 0:
                vec = -vec
            assert np.allclose(emb.components[i], vec, atol=1e-6)
            assert emb.explained_variance[i] == pytest.approx(eigvals[i], abs=1e-6)

    def test_components_orthonormal(self):
        rng = np.random.default_rng(37)
        emb = pca(rng.normal(size=(30, 10)), 6)
        gram = emb.components @ emb.components.T
        assert np.allclose(gram, np.eye(6), atol=1e-8)

    def test_full_rank_reconstruction(self):
        rng = np.random.default_rng(41)
        data = rng.normal(size=(12, 7))
        emb = pca(data, 7)  # min(n-1, m) = 7
        centered = data - emb.mean
        recon = emb.coords @ emb.components
        err = np.linalg.norm(recon - centered) / np.linalg.norm(centered)
        assert err < 1e-8

    def test_sign_convention(self):
        rng = np.random.default_rng(43)
        emb = pca(rng.normal(size=(25, 9)), 4)
        for row in emb.components:
            assert row[int(np.argmax(np.abs(row)))] >= 0

    def test_variance_non_increasing(self):
        rng = np.random.default_rng(47)
        emb = pca(rng.normal(size=(40, 12)), 8)
        assert np.all(np.diff(emb.explained_variance) <= 1e-12)

    def test_input_validation(self):
        with pytest.raises(AnalysisError):
            pca(np.zeros((1, 5)), 1)
        with pytest.raises(AnalysisError):
            pca(np.zeros((10, 5)), 6)


class TestLoopClosure:
    def test_circle_gap_near_one(self):
        angles = np.radians(np.arange(0, 360, 4.0))
        pts = np.stack([np.cos(angles), np.sin(angles)], axis=1)
        emb = pca(pts, 2)
        assert abs(loop_closure(emb) - 1.0) < 0.1

    def test_line_segment_gap_large(self):
        t = np.linspace(0, 1, 50)
        pts = np.stack([t, 2 * t + 1], axis=1)
        emb = pca(pts + np.random.default_rng(0).normal(0, 1e-6, pts.shape), 2)
        assert loop_closure(emb) > 10.0

    def test_direct_norm_ratio_oracle(self):
        rng = np.random.default_rng(53)
        coords = rng.normal(size=(30, 3))
        from ipt_probe.analysis import PcaEmbedding

        emb = PcaEmbedding(
            components=np.eye(3),
            explained_variance=np.ones(3),
            coords=coords,
            mean=np.zeros(3),
        )
        steps = [np.linalg.norm(coords[i + 1] - coords[i]) for i in range(29)]
        want = np.linalg.norm(coords[0] - coords[-1]) / np.mean(steps)
        assert loop_closure(emb) == pytest.approx(want, rel=1e-12)

    def test_too_few_samples(self):
        from ipt_probe.analysis import PcaEmbedding

        emb = PcaEmbedding(np.eye(2), np.ones(2), np.zeros((2, 2)), np.zeros(2))
        with pytest.raises(AnalysisError):
            loop_closure(emb)
