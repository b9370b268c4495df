"""Rigid-body transforms: quaternion rotations about a center plus translations.

Random transforms drive data augmentation; rotations sample uniformly over
SO(3) and translations sample per-axis uniform in [-t, +t] (a cube, not a
ball; "maximum distance" is interpreted per axis and this choice affects
augmentation statistics).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .validation import check_non_negative, check_rng, check_vector3


@dataclass(frozen=True)
class Quaternion:
    """Unit quaternion (w, x, y, z). Construction normalizes defensively."""

    w: float = 1.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def __post_init__(self):
        n = self.norm
        if not math.isfinite(n) or n == 0.0:
            raise ValueError("cannot normalize a zero or non-finite quaternion")
        if abs(n - 1.0) > 1e-6:
            object.__setattr__(self, "w", self.w / n)
            object.__setattr__(self, "x", self.x / n)
            object.__setattr__(self, "y", self.y / n)
            object.__setattr__(self, "z", self.z / n)

    @property
    def norm(self) -> float:
        return math.sqrt(self.w ** 2 + self.x ** 2 + self.y ** 2 + self.z ** 2)

    def conjugate(self) -> "Quaternion":
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    @property
    def angle(self) -> float:
        """Rotation angle in radians, in [0, pi]."""
        return 2.0 * math.acos(min(1.0, abs(self.w)))

    def rotation_matrix(self) -> np.ndarray:
        """3x3 float64 rotation matrix (acts on column vectors)."""
        w, x, y, z = self.w, self.x, self.y, self.z
        return np.array([
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ], dtype=np.float64)

    def rotate(self, vec) -> np.ndarray:
        return self.rotation_matrix() @ np.asarray(vec, dtype=np.float64)


IDENTITY_QUATERNION = Quaternion(1.0, 0.0, 0.0, 0.0)


def random_unit_quaternion(rng=None) -> Quaternion:
    """Sample uniformly over SO(3) via the subgroup-algorithm construction.

    Three uniform variates map to a point uniform on the unit 3-sphere
    (Shoemake); with a seeded generator the stream is reproducible.
    """
    rng = check_rng(rng)
    u1, u2, u3 = rng.random(3)
    a, b = math.sqrt(1.0 - u1), math.sqrt(u1)
    t2, t3 = 2.0 * math.pi * u2, 2.0 * math.pi * u3
    return Quaternion(b * math.cos(t3), a * math.sin(t2), a * math.cos(t2), b * math.sin(t3))


def _as_vec3(value):
    return check_vector3(value if value is not None else (0.0, 0.0, 0.0))


@dataclass(frozen=True)
class Transform:
    """Rotation about a center followed by a translation.

    ``forward`` maps x to R (x - center) + center + translation. The
    identity transform is the identity map on coordinates.
    """

    rotation: Quaternion = field(default_factory=Quaternion)
    center: np.ndarray = None
    translation: np.ndarray = None

    def __post_init__(self):
        object.__setattr__(self, "center", _as_vec3(self.center))
        object.__setattr__(self, "translation", _as_vec3(self.translation))

    def forward(self, coords_in, coords_out=None) -> np.ndarray:
        """Transform an (N, 3) coordinate array; in and out may alias."""
        src = np.asarray(coords_in)
        if src.ndim != 2 or src.shape[1] != 3:
            raise ValueError(f"coordinates must have shape (N, 3), got {src.shape}")
        rot = self.rotation.rotation_matrix()
        moved = (src.astype(np.float64) - self.center) @ rot.T + self.center + self.translation
        if coords_out is None:
            return moved.astype(src.dtype if src.dtype.kind == "f" else np.float32)
        out = coords_out.array if hasattr(coords_out, "array") else np.asarray(coords_out)
        if out.shape != src.shape:
            raise ValueError(f"output shape {out.shape} does not match input {src.shape}")
        out[...] = moved
        return out

    def inverse(self) -> "Transform":
        """The transform undoing this one (same center)."""
        inv_rot = self.rotation.conjugate()
        back = inv_rot.rotation_matrix() @ (-np.asarray(self.translation))
        return Transform(inv_rot, self.center, back)


def make_transform(center, random_translate=0.0, random_rotation=False, rng=None) -> Transform:
    """Build an augmentation transform about ``center``.

    Translation components are i.i.d. uniform in [-random_translate,
    +random_translate]; the rotation is uniform over SO(3) when requested
    and the identity otherwise.
    """
    center = check_vector3(center, "center")
    random_translate = check_non_negative(random_translate, "random_translate")
    rng = check_rng(rng)
    rotation = random_unit_quaternion(rng) if random_rotation else IDENTITY_QUATERNION
    if random_translate > 0:
        translation = rng.uniform(-random_translate, random_translate, size=3)
    else:
        translation = np.zeros(3)
    return Transform(rotation, center, translation)


def transform_example(t: Transform, example):
    """Apply one transform to every coordinate set of an example.

    Labels, types, and radii pass through untouched; returns a new example
    of the same type (anything with ``coord_sets`` built like an Example).
    """
    new_sets = [cs.with_coords(t.forward(cs.coords)) for cs in example.coord_sets]
    return type(example)(
        coord_sets=new_sets,
        labels=list(example.labels),
        group=example.group,
        seqcont=example.seqcont,
    )
