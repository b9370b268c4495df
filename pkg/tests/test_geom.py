import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from voxmol.atomtypes import CoordinateSet
from voxmol.geom import (IDENTITY_QUATERNION, Quaternion, Transform, make_transform,
                         random_unit_quaternion, transform_example)
from voxmol.sampling import Example

SQ2 = math.sqrt(2.0) / 2.0


class TestQuaternion:
    def test_identity(self):
        q = Quaternion()
        assert (q.w, q.x, q.y, q.z) == (1.0, 0.0, 0.0, 0.0)
        np.testing.assert_allclose(q.rotation_matrix(), np.eye(3), atol=1e-12)

    def test_normalizes_on_construction(self):
        q = Quaternion(2.0, 0.0, 0.0, 0.0)
        assert abs(q.norm - 1.0) < 1e-6
        assert q.w == 1.0

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            Quaternion(0.0, 0.0, 0.0, 0.0)

    def test_90_degrees_about_z(self):
        q = Quaternion(SQ2, 0.0, 0.0, SQ2)
        np.testing.assert_allclose(q.rotate([1.0, 0.0, 0.0]), [0.0, 1.0, 0.0],
                                   atol=1e-7)

    def test_angle(self):
        assert Quaternion().angle == 0.0
        q = Quaternion(SQ2, 0.0, 0.0, SQ2)
        assert abs(q.angle - math.pi / 2) < 1e-6

    def test_conjugate_inverts_rotation(self):
        q = random_unit_quaternion(np.random.default_rng(7))
        rt = q.rotation_matrix() @ q.conjugate().rotation_matrix()
        np.testing.assert_allclose(rt, np.eye(3), atol=1e-12)


class TestRandomQuaternion:
    def test_reproducible(self):
        a = random_unit_quaternion(np.random.default_rng(42))
        b = random_unit_quaternion(np.random.default_rng(42))
        assert (a.w, a.x, a.y, a.z) == (b.w, b.x, b.y, b.z)

    def test_unit_norm(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            assert abs(random_unit_quaternion(rng).norm - 1.0) <= 1e-6

    def test_mean_rotation_angle_matches_uniform_so3(self):
        # uniform SO(3): E[angle] = pi/2 + 2/pi (about 126.476 degrees)
        rng = np.random.default_rng(2024)
        angles = [random_unit_quaternion(rng).angle for _ in range(10_000)]
        mean_deg = math.degrees(sum(angles) / len(angles))
        expected = math.degrees(math.pi / 2 + 2 / math.pi)
        assert abs(mean_deg - expected) < 2.0


class TestTransform:
    def test_identity_is_identity_map(self):
        coords = np.array([[1.0, -2.0, 3.0], [0.5, 0.25, -0.125]], dtype=np.float32)
        out = Transform().forward(coords)
        np.testing.assert_allclose(out, coords, atol=1e-6)

    def test_rotation_about_origin(self):
        t = Transform(Quaternion(SQ2, 0.0, 0.0, SQ2))
        out = t.forward(np.array([[1.0, 0.0, 0.0]]))
        np.testing.assert_allclose(out, [[0.0, 1.0, 0.0]], atol=1e-6)

    def test_pure_translation(self):
        t = Transform(translation=(0.0, 0.0, 1.0))
        out = t.forward(np.array([[1.0, 2.0, 3.0]]))
        np.testing.assert_allclose(out, [[1.0, 2.0, 4.0]], atol=1e-7)

    def test_rotation_about_center_fixes_center(self):
        center = np.array([1.0, 2.0, 3.0])
        t = Transform(Quaternion(SQ2, 0.0, SQ2, 0.0), center=center)
        out = t.forward(center.reshape(1, 3))
        np.testing.assert_allclose(out, center.reshape(1, 3), atol=1e-6)

    def test_aliasing_in_place(self):
        coords = np.array([[1.0, 2.0, 3.0]], dtype=np.float64)
        t = Transform(translation=(1.0, 0.0, 0.0))
        t.forward(coords, coords)
        np.testing.assert_allclose(coords, [[2.0, 2.0, 3.0]])

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            Transform().forward(np.zeros((2, 3)), np.zeros((3, 3)))

    def test_inverse_restores(self):
        rng = np.random.default_rng(11)
        t = make_transform((0.5, -0.5, 1.0), 2.0, True, rng)
        coords = rng.uniform(-5, 5, (10, 3))
        back = t.inverse().forward(t.forward(coords))
        np.testing.assert_allclose(back, coords, atol=1e-4)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(min_value=0, max_value=2 ** 31))
    def test_rigid_distance_preservation(self, seed):
        rng = np.random.default_rng(seed)
        coords = rng.uniform(-10, 10, (8, 3))
        t = make_transform(rng.uniform(-3, 3, 3), 4.0, True, rng)
        moved = t.forward(coords)
        before = np.linalg.norm(coords[:, None] - coords[None, :], axis=-1)
        after = np.linalg.norm(moved[:, None] - moved[None, :], axis=-1)
        assert np.abs(before - after).max() < 1e-4

    def test_rotation_then_inverse_about_same_center(self):
        rng = np.random.default_rng(5)
        q = random_unit_quaternion(rng)
        center = (1.0, -2.0, 0.5)
        coords = rng.uniform(-8, 8, (20, 3))
        fwd = Transform(q, center).forward(coords)
        back = Transform(q.conjugate(), center).forward(fwd)
        assert np.abs(back - coords).max() < 1e-4


class TestMakeTransform:
    def test_no_augmentation_is_identity(self):
        t = make_transform((0.0, 0.0, 0.0), 0.0, False, np.random.default_rng(0))
        assert t.rotation == IDENTITY_QUATERNION
        assert not t.translation.any()

    def test_translation_bound(self):
        rng = np.random.default_rng(9)
        for _ in range(100):
            t = make_transform((0, 0, 0), 2.0, False, rng)
            assert (np.abs(t.translation) <= 2.0).all()

    def test_rotation_flag_off_keeps_identity(self):
        t = make_transform((0, 0, 0), 1.5, False, np.random.default_rng(1))
        assert t.rotation == IDENTITY_QUATERNION

    def test_negative_translate_rejected(self):
        with pytest.raises(ValueError):
            make_transform((0, 0, 0), -1.0, False, np.random.default_rng(0))

    def test_deterministic_stream(self):
        stream1 = [make_transform((0, 0, 0), 2.0, True, np.random.default_rng(77))
                   for _ in range(1)]
        stream2 = [make_transform((0, 0, 0), 2.0, True, np.random.default_rng(77))
                   for _ in range(1)]
        for a, b in zip(stream1, stream2):
            assert a.rotation == b.rotation
            np.testing.assert_array_equal(a.translation, b.translation)


def _example_with_two_sets(rng):
    sets = []
    for n in (5, 3):
        sets.append(CoordinateSet(
            coords=rng.uniform(-4, 4, (n, 3)).astype(np.float32),
            radii=np.ones(n, dtype=np.float32),
            num_types=2,
            type_index=rng.integers(0, 2, n)))
    return Example(coord_sets=sets, labels=[1.0, 2.5])


class TestTransformExample:
    def test_identity_unchanged(self, rng):
        ex = _example_with_two_sets(rng)
        out = transform_example(Transform(), ex)
        for a, b in zip(ex.coord_sets, out.coord_sets):
            np.testing.assert_allclose(a.coords, b.coords, atol=1e-6)
        assert out.labels == ex.labels

    def test_cross_set_geometry_preserved(self, rng):
        ex = _example_with_two_sets(rng)
        t = make_transform((1, 1, 1), 3.0, True, rng)
        out = transform_example(t, ex)
        before = np.linalg.norm(
            ex.coord_sets[0].coords[:, None] - ex.coord_sets[1].coords[None, :],
            axis=-1)
        after = np.linalg.norm(
            out.coord_sets[0].coords[:, None] - out.coord_sets[1].coords[None, :],
            axis=-1)
        assert np.abs(before - after).max() < 1e-4

    def test_rotation_about_centroid_fixes_centroid(self, rng):
        ex = _example_with_two_sets(rng)
        allc = np.vstack([cs.coords for cs in ex.coord_sets])
        centroid = allc.mean(axis=0)
        t = Transform(random_unit_quaternion(rng), centroid)
        out = transform_example(t, ex)
        moved = np.vstack([cs.coords for cs in out.coord_sets]).mean(axis=0)
        assert np.abs(moved - centroid).max() < 1e-5

    def test_types_and_radii_untouched(self, rng):
        ex = _example_with_two_sets(rng)
        t = make_transform((0, 0, 0), 2.0, True, rng)
        out = transform_example(t, ex)
        for a, b in zip(ex.coord_sets, out.coord_sets):
            np.testing.assert_array_equal(a.type_index, b.type_index)
            np.testing.assert_array_equal(a.radii, b.radii)
