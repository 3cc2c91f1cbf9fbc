"""Geometry and measurement primitives shared by all pipelines.

Conventions used throughout the package:

- World frame: x forward, y left, z up; the ground plane is z = 0.
- All angles are radians internally; degrees appear only at CLI boundaries.
- A camera looks along world +x. Its pixel axes are u (rightward in the
  image, i.e. toward -y in the world) and v (downward, toward -z), so a
  point at forward distance ``zf`` from the focal plane projects to
  ``u = cx + f * (offset - Y) / zf`` and ``v = cy + f * (height - Z) / zf``.
- Disparity between two cameras with lateral offsets ``o_l > o_r`` is
  ``d = f * (o_l - o_r) / zf``, always positive for points in front.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

_ORTHO_TOL = 1e-9


def disparity_to_depth(d: float, f: float, b: float) -> float:
    """Depth (meters) of a point seen with disparity `d` pixels.

    `f` is the focal length in pixels and `b` the stereo baseline in meters.
    """
    if d <= 0 or f <= 0 or b <= 0:
        raise DomainError(f"disparity_to_depth requires positive inputs, got d={d}, f={f}, b={b}")
    return f * b / d


def depth_to_disparity(z: float, f: float, b: float) -> float:
    """Inverse of :func:`disparity_to_depth`."""
    if z <= 0 or f <= 0 or b <= 0:
        raise DomainError(f"depth_to_disparity requires positive inputs, got z={z}, f={f}, b={b}")
    return f * b / z


def normalize_angle(a: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    a = math.remainder(a, 2.0 * math.pi)
    if a <= -math.pi:
        a += 2.0 * math.pi
    return a


@dataclass(frozen=True)
class RigidTransform:
    """Proper rigid transform p -> R @ p + t.

    `rotation` must be orthonormal with determinant +1 (checked to 1e-9).
    """

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        err = np.abs(R @ R.T - np.eye(3)).max()
        if err > _ORTHO_TOL:
            raise DomainError(f"rotation is not orthonormal (max deviation {err:.3e})")
        if abs(np.linalg.det(R) - 1.0) > _ORTHO_TOL:
            raise DomainError("rotation must have determinant +1")
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @staticmethod
    def identity() -> "RigidTransform":
        return RigidTransform(np.eye(3), np.zeros(3))

    @staticmethod
    def from_yaw(yaw: float, translation=(0.0, 0.0, 0.0)) -> "RigidTransform":
        c, s = math.cos(yaw), math.sin(yaw)
        R = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        return RigidTransform(R, np.asarray(translation, dtype=np.float64))

    def apply(self, p) -> np.ndarray:
        """Transform one point (3,) or a batch (N, 3)."""
        p = np.asarray(p, dtype=np.float64)
        if p.ndim == 1:
            return self.rotation @ p + self.translation
        return p @ self.rotation.T + self.translation

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """self after other: (self.compose(other)).apply(p) == self.apply(other.apply(p))."""
        return RigidTransform(self.rotation @ other.rotation,
                              self.rotation @ other.translation + self.translation)

    def inverse(self) -> "RigidTransform":
        Rt = self.rotation.T
        return RigidTransform(Rt, -(Rt @ self.translation))

    def __eq__(self, other):
        if not isinstance(other, RigidTransform):
            return NotImplemented
        return (np.array_equal(self.rotation, other.rotation)
                and np.array_equal(self.translation, other.translation))


def apply_transform(t: RigidTransform, p) -> np.ndarray:
    """Functional form of :meth:`RigidTransform.apply`."""
    return t.apply(p)


@dataclass(frozen=True)
class CameraModel:
    """Pinhole camera on a lateral rig.

    `rig_offset` is the camera position (meters) along the rig's lateral
    axis (world +y); cameras further left carry larger offsets.
    """

    focal_length: float
    image_width: int
    image_height: int
    principal_point: tuple[float, float]
    rig_offset: float

    def __post_init__(self):
        if self.focal_length <= 0:
            raise DomainError("focal_length must be positive")
        if self.image_width <= 0 or self.image_height <= 0:
            raise DomainError("image dimensions must be positive")

    @property
    def cx(self) -> float:
        return self.principal_point[0]

    @property
    def cy(self) -> float:
        return self.principal_point[1]

    def project(self, position: np.ndarray, height: float, points: np.ndarray):
        """Project world points into this camera mounted at (x, y, z) = position.

        `position` is the full 3D camera position; `height` is kept for the
        caller's convenience when position is assembled (ignored if position
        already carries z). Returns (u, v, depth) arrays where depth is the
        forward (x) distance; callers mask on depth > 0 and image bounds.
        """
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        rel = pts - np.asarray(position, dtype=np.float64)
        zf = rel[:, 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            u = self.cx + self.focal_length * (-rel[:, 1]) / zf
            v = self.cy + self.focal_length * (-rel[:, 2]) / zf
        return u, v, zf


@dataclass
class DisparityMap:
    """Per-pixel disparity grid with a validity mask.

    `values` is (height, width) float64, finite and strictly positive
    wherever `valid` is True.
    """

    values: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.valid = np.asarray(self.valid, dtype=bool)
        if self.values.ndim != 2 or self.values.shape != self.valid.shape:
            raise DomainError("values and valid must be equal-shaped 2-D arrays")
        v = self.values[self.valid]
        if v.size and (not np.all(np.isfinite(v)) or np.any(v <= 0)):
            raise DomainError("valid disparities must be finite and > 0")

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def scaled(self, factor: float) -> "DisparityMap":
        """Same map with disparities multiplied by `factor` (baseline rescaling)."""
        if factor <= 0:
            raise DomainError("scale factor must be positive")
        return DisparityMap(self.values * factor, self.valid.copy())

    def copy(self) -> "DisparityMap":
        return DisparityMap(self.values.copy(), self.valid.copy())

    def __eq__(self, other):
        if not isinstance(other, DisparityMap):
            return NotImplemented
        return (np.array_equal(self.valid, other.valid)
                and np.array_equal(self.values, other.values))


@dataclass(frozen=True)
class OrientedBox:
    """Axis-vertical box: 3D center, (length, width, height), yaw about z.

    Length runs along the box's local x (heading) axis. Yaw is normalized
    into (-pi, pi] on construction.
    """

    center: np.ndarray
    dims: tuple[float, float, float]
    yaw: float = 0.0

    def __post_init__(self):
        c = np.asarray(self.center, dtype=np.float64).reshape(3)
        if any(d <= 0 for d in self.dims):
            raise DomainError(f"box dims must be positive, got {self.dims}")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "dims", tuple(float(d) for d in self.dims))
        object.__setattr__(self, "yaw", normalize_angle(float(self.yaw)))

    @property
    def length(self) -> float:
        return self.dims[0]

    @property
    def width(self) -> float:
        return self.dims[1]

    @property
    def height(self) -> float:
        return self.dims[2]

    def footprint(self) -> np.ndarray:
        """Counter-clockwise (4, 2) corner array of the bird's-eye footprint."""
        return footprint_corners(self.center[0], self.center[1], self.yaw,
                                 self.length, self.width)

    def contains_xy(self, x: float, y: float) -> bool:
        """True if (x, y) lies inside the bird's-eye footprint."""
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        dx, dy = x - self.center[0], y - self.center[1]
        lx = c * dx + s * dy
        ly = -s * dx + c * dy
        return abs(lx) <= self.length / 2 and abs(ly) <= self.width / 2

    def __eq__(self, other):
        if not isinstance(other, OrientedBox):
            return NotImplemented
        return (np.array_equal(self.center, other.center)
                and self.dims == other.dims and self.yaw == other.yaw)


def footprint_corners(x: float, y: float, yaw: float, length: float, width: float) -> np.ndarray:
    c, s = math.cos(yaw), math.sin(yaw)
    hl, hw = length / 2.0, width / 2.0
    local = np.array([[hl, hw], [-hl, hw], [-hl, -hw], [hl, -hw]])
    R = np.array([[c, -s], [s, c]])
    return local @ R.T + np.array([x, y])


def _polygon_area(poly: np.ndarray) -> float:
    """Shoelace area; positive for counter-clockwise vertex order."""
    if len(poly) < 3:
        return 0.0
    x = poly[:, 0]
    y = poly[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _clip_polygon(subject: np.ndarray, clip: np.ndarray) -> np.ndarray:
    """Sutherland-Hodgman clip of `subject` against convex CCW `clip`."""
    output = list(subject)
    n = len(clip)
    for i in range(n):
        if not output:
            return np.empty((0, 2))
        ax, ay = clip[i]
        bx, by = clip[(i + 1) % n]
        ex, ey = bx - ax, by - ay
        inputs = output
        output = []
        prev = inputs[-1]
        prev_in = ex * (prev[1] - ay) - ey * (prev[0] - ax) >= 0
        for cur in inputs:
            cur_in = ex * (cur[1] - ay) - ey * (cur[0] - ax) >= 0
            if cur_in != prev_in:
                # edge crossing: intersection of prev->cur with clip edge
                dx, dy = cur[0] - prev[0], cur[1] - prev[1]
                denom = ex * dy - ey * dx
                if denom != 0:
                    t = (ex * (ay - prev[1]) - ey * (ax - prev[0])) / denom
                    output.append((prev[0] + t * dx, prev[1] + t * dy))
            if cur_in:
                output.append(tuple(cur))
            prev, prev_in = cur, cur_in
    return np.asarray(output) if output else np.empty((0, 2))


def rotated_iou(a: OrientedBox, b: OrientedBox) -> float:
    """Bird's-eye-view IoU of two boxes' yaw-rotated footprint rectangles."""
    pa = a.footprint()
    pb = b.footprint()
    inter_poly = _clip_polygon(pa, pb)
    inter = abs(_polygon_area(inter_poly)) if len(inter_poly) >= 3 else 0.0
    area_a = a.length * a.width
    area_b = b.length * b.width
    union = area_a + area_b - inter
    if union <= 0:
        return 0.0
    return min(max(inter / union, 0.0), 1.0)


def footprints_overlap(a: OrientedBox, b: OrientedBox) -> bool:
    """Separating-axis overlap test of the two BEV footprints (faster than IoU)."""
    pa = a.footprint()
    pb = b.footprint()
    return _sat_overlap(pa, pb)


def _sat_overlap(pa: np.ndarray, pb: np.ndarray) -> bool:
    for poly_a, poly_b in ((pa, pb), (pb, pa)):
        edges = np.roll(poly_a, -1, axis=0) - poly_a
        axes = np.stack([-edges[:, 1], edges[:, 0]], axis=1)
        proj_a = poly_a @ axes.T
        proj_b = poly_b @ axes.T
        if np.any(proj_a.max(axis=0) < proj_b.min(axis=0)) or \
           np.any(proj_b.max(axis=0) < proj_a.min(axis=0)):
            return False
    return True
