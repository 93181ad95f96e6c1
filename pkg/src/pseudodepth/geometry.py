"""Pinhole projection, rigid transforms, point clouds, and scan subsampling."""

import numpy as np

from .image import DepthImage

__all__ = [
    "CameraIntrinsics",
    "RigidTransform",
    "PointCloud",
    "backproject",
    "project_points",
    "subsample_scan",
]

ORTHONORMAL_TOL = 1e-9

# Vertical field of view of a 64-beam automotive scanner, degrees.
DEFAULT_ELEVATION_RANGE = (-24.9, 2.0)
DEFAULT_ELEVATION_BINS = 64


class CameraIntrinsics:
    """Pinhole camera parameters in pixels (rectified model, no distortion)."""

    __slots__ = ("fx", "fy", "cx", "cy")

    def __init__(self, fx, fy, cx, cy):
        fx, fy, cx, cy = (float(v) for v in (fx, fy, cx, cy))
        for name, v in (("fx", fx), ("fy", fy)):
            if not np.isfinite(v) or v <= 0:
                raise ValueError(f"{name} must be finite and > 0, got {v}")
        if not (np.isfinite(cx) and np.isfinite(cy)):
            raise ValueError("principal point must be finite")
        object.__setattr__(self, "fx", fx)
        object.__setattr__(self, "fy", fy)
        object.__setattr__(self, "cx", cx)
        object.__setattr__(self, "cy", cy)

    def __setattr__(self, name, value):
        raise AttributeError("CameraIntrinsics is immutable")

    def __repr__(self):
        return f"CameraIntrinsics(fx={self.fx}, fy={self.fy}, cx={self.cx}, cy={self.cy})"


class RigidTransform:
    """Proper rigid motion: x -> rotation @ x + translation."""

    __slots__ = ("rotation", "translation")

    def __init__(self, rotation, translation):
        rotation = np.asarray(rotation, dtype=np.float64)
        translation = np.asarray(translation, dtype=np.float64).reshape(3)
        if rotation.shape != (3, 3):
            raise ValueError(f"rotation must be 3x3, got {rotation.shape}")
        if not np.isfinite(rotation).all() or not np.isfinite(translation).all():
            raise ValueError("transform entries must be finite")
        err = np.abs(rotation.T @ rotation - np.eye(3)).max()
        if err > ORTHONORMAL_TOL:
            raise ValueError(f"rotation is not orthonormal (|R'R - I| max {err:.3g})")
        det = np.linalg.det(rotation)
        if abs(det - 1.0) > ORTHONORMAL_TOL:
            raise ValueError(f"rotation must have determinant +1, got {det!r}")
        rotation = rotation.copy()
        translation = translation.copy()
        rotation.flags.writeable = False
        translation.flags.writeable = False
        object.__setattr__(self, "rotation", rotation)
        object.__setattr__(self, "translation", translation)

    def __setattr__(self, name, value):
        raise AttributeError("RigidTransform is immutable")

    @classmethod
    def identity(cls):
        return cls(np.eye(3), np.zeros(3))

    def apply(self, points):
        points = np.asarray(points, dtype=np.float64)
        return points @ self.rotation.T + self.translation

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """Transform equal to applying ``other`` first, then ``self``."""
        return RigidTransform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def inverse(self) -> "RigidTransform":
        rt = self.rotation.T
        return RigidTransform(rt, -rt @ self.translation)

    def __repr__(self):
        return f"RigidTransform(rotation={self.rotation.tolist()}, translation={self.translation.tolist()})"


class PointCloud:
    """Set of 3-D points in meters with optional per-point intensity.

    The coordinate dtype (float32 or float64) is preserved so that file
    round trips are bit-exact.
    """

    __slots__ = ("points", "intensity")

    def __init__(self, points, intensity=None):
        points = np.asarray(points)
        if points.dtype not in (np.float32, np.float64):
            points = points.astype(np.float64)
        points = np.ascontiguousarray(points)
        if points.ndim != 2 or points.shape[1] != 3:
            raise ValueError(f"points must be an Nx3 array, got shape {points.shape}")
        if not np.isfinite(points).all():
            raise ValueError("point coordinates must be finite")
        if intensity is not None:
            intensity = np.ascontiguousarray(intensity, dtype=points.dtype).reshape(-1)
            if intensity.shape[0] != points.shape[0]:
                raise ValueError("intensity length must match the point count")
            if not np.isfinite(intensity).all():
                raise ValueError("intensity must be finite")
            intensity = intensity.copy()
            intensity.flags.writeable = False
        points = points.copy()
        points.flags.writeable = False
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "intensity", intensity)

    def __setattr__(self, name, value):
        raise AttributeError("PointCloud is immutable")

    def __len__(self):
        return self.points.shape[0]

    def __eq__(self, other):
        if not isinstance(other, PointCloud):
            return NotImplemented
        if self.points.dtype != other.points.dtype:
            return False
        if (self.intensity is None) != (other.intensity is None):
            return False
        same = np.array_equal(self.points, other.points)
        if same and self.intensity is not None:
            same = np.array_equal(self.intensity, other.intensity)
        return same

    def __repr__(self):
        extra = ", intensity" if self.intensity is not None else ""
        return f"PointCloud({len(self)} points, {self.points.dtype}{extra})"


def backproject(depth: DepthImage, k: CameraIntrinsics) -> PointCloud:
    """Lift every valid pixel to a 3-D point in the camera frame.

    Pixel (u, v) with depth d maps to ((u-cx)d/fx, (v-cy)d/fy, d). Points
    come out in row-major pixel order.
    """
    vs, us = np.nonzero(depth.valid)
    d = depth.values[vs, us]
    x = (us - k.cx) * d / k.fx
    y = (vs - k.cy) * d / k.fy
    return PointCloud(np.column_stack([x, y, d]))


def project_points(
    cloud: PointCloud,
    k: CameraIntrinsics,
    transform: RigidTransform = None,
    size=None,
    zbuffer: bool = True,
) -> DepthImage:
    """Rasterize a point cloud to a depth image.

    Points are moved to the camera frame by ``transform`` (identity when
    omitted), projected to the nearest pixel, and any point behind the
    camera or outside ``size`` = (width, height) is dropped. When several
    points land on one pixel the nearest depth wins. ``zbuffer=False``
    switches to last-write order, which lets distant points overwrite near
    ones; that mode exists to reproduce the mixed-depth artifact seen when
    raw scans are projected through a displaced sensor, and for tests.
    """
    if size is None:
        raise ValueError("size=(width, height) is required")
    width, height = (int(v) for v in size)
    if width < 1 or height < 1:
        raise ValueError("size must be at least 1x1")

    pts = cloud.points.astype(np.float64)
    if transform is not None:
        pts = transform.apply(pts)
    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]

    front = z > 0
    x, y, z = x[front], y[front], z[front]
    # half-up rounding to the nearest pixel center
    u = np.floor(k.fx * x / z + k.cx + 0.5).astype(np.int64)
    v = np.floor(k.fy * y / z + k.cy + 0.5).astype(np.int64)
    inside = (u >= 0) & (u < width) & (v >= 0) & (v < height)
    u, v, z = u[inside], v[inside], z[inside]
    flat = v * width + u

    values = np.zeros(height * width)
    valid = np.zeros(height * width, dtype=bool)
    if zbuffer:
        buf = np.full(height * width, np.inf)
        np.minimum.at(buf, flat, z)
        valid = np.isfinite(buf)
        values[valid] = buf[valid]
    else:
        # numpy assignment applies duplicate indices in order, so the last
        # point in input order wins
        values[flat] = z
        valid[flat] = True
    return DepthImage(values.reshape(height, width), valid.reshape(height, width))


def subsample_scan(
    cloud: PointCloud,
    keep_every: int,
    bins: int = DEFAULT_ELEVATION_BINS,
    elevation_range=DEFAULT_ELEVATION_RANGE,
) -> PointCloud:
    """Thin a rotating-scanner cloud by dropping whole elevation rows.

    Points are binned by elevation angle into ``bins`` uniform rows across
    ``elevation_range`` (degrees, low to high; out-of-range points are
    clipped into the end rows). Rows whose index is divisible by
    ``keep_every`` survive, which emulates scanners with fewer beams:
    keep_every=2 halves 64 rows to 32, keep_every=4 leaves 16, and
    keep_every=1 keeps the cloud unchanged.
    """
    keep_every = int(keep_every)
    if keep_every < 1:
        raise ValueError("keep_every must be a positive integer")
    bins = int(bins)
    if bins < 1:
        raise ValueError("bins must be a positive integer")
    if len(cloud) == 0:
        raise ValueError("cannot subsample an empty cloud")
    lo, hi = (float(v) for v in elevation_range)
    if not lo < hi:
        raise ValueError("elevation_range must be (low, high) with low < high")

    pts = cloud.points.astype(np.float64)
    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
    elevation = np.degrees(np.arctan2(z, np.hypot(x, y)))
    row = np.floor((elevation - lo) / (hi - lo) * bins).astype(np.int64)
    row = np.clip(row, 0, bins - 1)
    keep = row % keep_every == 0
    intensity = cloud.intensity[keep] if cloud.intensity is not None else None
    return PointCloud(cloud.points[keep], intensity)
