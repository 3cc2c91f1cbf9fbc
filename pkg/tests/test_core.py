import math

import numpy as np
import pytest

from avguard._rng import stream
from avguard.core import (
    CameraModel,
    DisparityMap,
    OrientedBox,
    RigidTransform,
    apply_transform,
    depth_to_disparity,
    disparity_to_depth,
    footprints_overlap,
    normalize_angle,
    rotated_iou,
)
from avguard.errors import DomainError


def mc_iou(a: OrientedBox, b: OrientedBox, n=1_200_000, seed=7):
    """Monte-Carlo footprint-area oracle, independent of the clipping code."""
    corners = np.vstack([a.footprint(), b.footprint()])
    lo = corners.min(axis=0)
    hi = corners.max(axis=0)
    rng = stream(seed, "mc-iou")
    pts = rng.uniform(lo, hi, size=(n, 2))
    in_a = np.fromiter((a.contains_xy(x, y) for x, y in pts), bool, n)
    in_b = np.fromiter((b.contains_xy(x, y) for x, y in pts), bool, n)
    box_area = float(np.prod(hi - lo))
    inter = in_a.__and__(in_b).mean() * box_area
    union = in_a.__or__(in_b).mean() * box_area
    return inter / union


class TestDisparityDepth:
    def test_direct_substitution(self):
        assert disparity_to_depth(1.0, 1000.0, 0.5) == 500.0

    def test_round_trip_at_10m(self):
        d = depth_to_disparity(10.0, 721.0, 0.54)
        assert disparity_to_depth(d, 721.0, 0.54) == pytest.approx(10.0, rel=1e-12)

    def test_arithmetic_value(self):
        # oracle: full-precision evaluation of f*b/d
        assert 721.0 * 0.54 / 38.934 == pytest.approx(10.0, abs=1e-3)
        assert disparity_to_depth(38.934, 721.0, 0.54) == pytest.approx(10.0, abs=1e-3)

    def test_round_trip_law_random(self):
        rng = stream(3, "roundtrip")
        for _ in range(200):
            d = rng.uniform(0.5, 300.0)
            f = rng.uniform(100.0, 2000.0)
            b = rng.uniform(0.05, 2.0)
            back = depth_to_disparity(disparity_to_depth(d, f, b), f, b)
            assert back == pytest.approx(d, rel=1e-12)

    @pytest.mark.parametrize("d,f,b", [(0, 1, 1), (-1, 1, 1), (1, 0, 1), (1, 1, -2)])
    def test_domain_errors(self, d, f, b):
        with pytest.raises(DomainError):
            disparity_to_depth(d, f, b)
        with pytest.raises(DomainError):
            depth_to_disparity(d, f, b)


class TestRigidTransform:
    def test_identity(self):
        t = RigidTransform.identity()
        assert np.allclose(apply_transform(t, [3, 4, 5]), [3, 4, 5])

    def test_translation(self):
        t = RigidTransform(np.eye(3), [1, 0, 0])
        assert np.allclose(t.apply([0, 0, 0]), [1, 0, 0])

    def test_yaw_quarter_turn(self):
        t = RigidTransform.from_yaw(math.pi / 2)
        assert np.allclose(t.apply([1, 0, 0]), [0, 1, 0], atol=1e-12)

    def test_rejects_non_rotation(self):
        with pytest.raises(DomainError):
            RigidTransform(np.eye(3) * 2.0, np.zeros(3))
        refl = np.diag([1.0, 1.0, -1.0])
        with pytest.raises(DomainError):
            RigidTransform(refl, np.zeros(3))

    def _random_transform(self, rng):
        # quaternion-based uniform rotation, exactly orthonormal to fp precision
        q = rng.normal(size=4)
        q /= np.linalg.norm(q)
        w, x, y, z = q
        R = np.array([
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ])
        return RigidTransform(R, rng.normal(scale=5.0, size=3))

    def test_group_laws(self):
        rng = stream(11, "transforms")
        for _ in range(100):
            a = self._random_transform(rng)
            b = self._random_transform(rng)
            c = self._random_transform(rng)
            p = rng.normal(scale=10.0, size=3)
            left = a.compose(b).compose(c).apply(p)
            right = a.compose(b.compose(c)).apply(p)
            assert np.allclose(left, right, atol=1e-9)
            assert np.allclose(a.inverse().apply(a.apply(p)), p, atol=1e-9)

    def test_distance_preservation(self):
        rng = stream(12, "isometry")
        for _ in range(50):
            t = self._random_transform(rng)
            p = rng.normal(scale=8.0, size=3)
            q = rng.normal(scale=8.0, size=3)
            d0 = np.linalg.norm(p - q)
            d1 = np.linalg.norm(t.apply(p) - t.apply(q))
            assert d1 == pytest.approx(d0, abs=1e-9)

    def test_batch_apply_matches_scalar(self):
        rng = stream(13, "batch")
        t = self._random_transform(rng)
        pts = rng.normal(size=(17, 3))
        batch = t.apply(pts)
        for i, p in enumerate(pts):
            assert np.allclose(batch[i], t.apply(p))


class TestOrientedBox:
    def test_yaw_normalized(self):
        b = OrientedBox([0, 0, 0], (1, 1, 1), yaw=3 * math.pi)
        assert -math.pi < b.yaw <= math.pi
        assert b.yaw == pytest.approx(math.pi)

    def test_rejects_bad_dims(self):
        with pytest.raises(DomainError):
            OrientedBox([0, 0, 0], (0, 1, 1))

    def test_contains_xy(self):
        b = OrientedBox([0, 0, 0], (4, 2, 1), yaw=math.pi / 2)
        assert b.contains_xy(0.0, 1.9)   # length now runs along y
        assert not b.contains_xy(1.9, 0.0)


class TestRotatedIoU:
    def test_identical(self):
        b = OrientedBox([1, 2, 0], (4.5, 1.8, 1.5), yaw=0.3)
        assert rotated_iou(b, b) == pytest.approx(1.0)

    def test_disjoint(self):
        a = OrientedBox([0, 0, 0], (1, 1, 1))
        b = OrientedBox([10, 0, 0], (1, 1, 1))
        assert rotated_iou(a, b) == 0.0

    def test_half_offset_squares(self):
        a = OrientedBox([0, 0, 0], (1, 1, 1))
        b = OrientedBox([0.5, 0, 0], (1, 1, 1))
        assert rotated_iou(a, b) == pytest.approx(1.0 / 3.0, abs=1e-12)

    def test_rotated_square_against_area_oracle(self):
        a = OrientedBox([0, 0, 0], (1, 1, 1))
        b = OrientedBox([0, 0, 0], (1, 1, 1), yaw=math.pi / 4)
        oracle = mc_iou(a, b)
        assert rotated_iou(a, b) == pytest.approx(oracle, abs=1e-3)

    def test_random_pairs_against_oracle(self):
        rng = stream(21, "iou-oracle")
        for k in range(6):
            a = OrientedBox(np.append(rng.uniform(-1, 1, 2), 0), tuple(rng.uniform(0.5, 3, 2)) + (1,), rng.uniform(-3, 3))
            b = OrientedBox(np.append(rng.uniform(-1, 1, 2), 0), tuple(rng.uniform(0.5, 3, 2)) + (1,), rng.uniform(-3, 3))
            got = rotated_iou(a, b)
            if got < 1e-3:
                continue
            assert got == pytest.approx(mc_iou(a, b, n=400_000, seed=100 + k), abs=3e-3)

    def test_symmetry_and_bounds_property(self):
        rng = stream(22, "iou-props")
        for _ in range(10_000):
            a = OrientedBox(np.append(rng.uniform(-5, 5, 2), 0), tuple(rng.uniform(0.2, 6, 2)) + (1,), rng.uniform(-4, 4))
            b = OrientedBox(np.append(rng.uniform(-5, 5, 2), 0), tuple(rng.uniform(0.2, 6, 2)) + (1,), rng.uniform(-4, 4))
            ab = rotated_iou(a, b)
            ba = rotated_iou(b, a)
            assert ab == pytest.approx(ba, abs=1e-9)
            assert 0.0 <= ab <= 1.0
            assert footprints_overlap(a, b) == footprints_overlap(b, a)
        assert rotated_iou(a, a) == pytest.approx(1.0)

    def test_overlap_agrees_with_iou(self):
        rng = stream(23, "overlap")
        for _ in range(2000):
            a = OrientedBox(np.append(rng.uniform(-3, 3, 2), 0), tuple(rng.uniform(0.3, 4, 2)) + (1,), rng.uniform(-4, 4))
            b = OrientedBox(np.append(rng.uniform(-3, 3, 2), 0), tuple(rng.uniform(0.3, 4, 2)) + (1,), rng.uniform(-4, 4))
            iou = rotated_iou(a, b)
            if iou > 1e-9:
                assert footprints_overlap(a, b)
            # touching-edge cases can disagree at exactly zero area; skip them


class TestDisparityMap:
    def test_valid_values_enforced(self):
        vals = np.ones((4, 5))
        mask = np.ones((4, 5), bool)
        DisparityMap(vals, mask)
        vals[1, 1] = -2.0
        with pytest.raises(DomainError):
            DisparityMap(vals, mask)
        # invalid pixels may carry anything
        mask[1, 1] = False
        DisparityMap(vals, mask)

    def test_scaled(self):
        m = DisparityMap(np.full((2, 2), 4.0), np.ones((2, 2), bool))
        assert np.allclose(m.scaled(0.5).values, 2.0)


class TestCameraModel:
    def test_invariants(self):
        with pytest.raises(DomainError):
            CameraModel(-1, 100, 100, (50, 50), 0.0)
        with pytest.raises(DomainError):
            CameraModel(700, 0, 100, (50, 50), 0.0)

    def test_projection_geometry(self):
        cam = CameraModel(721.0, 1242, 375, (621.0, 187.5), rig_offset=0.0)
        u, v, z = cam.project(np.array([0.0, 0.0, 1.65]), 1.65, np.array([[10.0, 0.0, 1.65]]))
        assert u[0] == pytest.approx(621.0)
        assert v[0] == pytest.approx(187.5)
        assert z[0] == pytest.approx(10.0)
        # a point to the LEFT (+y) lands at smaller u
        u2, _, _ = cam.project(np.array([0.0, 0.0, 1.65]), 1.65, np.array([[10.0, 1.0, 1.65]]))
        assert u2[0] < 621.0


def test_normalize_angle():
    assert normalize_angle(math.pi) == pytest.approx(math.pi)
    assert normalize_angle(-math.pi) == pytest.approx(math.pi)
    assert normalize_angle(2 * math.pi) == pytest.approx(0.0, abs=1e-15)
