"""KITTI-style file formats: 16-bit depth PNGs, raw scans, calibration text."""

from pathlib import Path

import cv2
import numpy as np

from .geometry import CameraIntrinsics, PointCloud, RigidTransform
from .image import DepthImage

__all__ = [
    "decode_depth_png",
    "encode_depth_png",
    "read_depth_png",
    "write_depth_png",
    "read_velodyne_bin",
    "write_velodyne_bin",
    "parse_calib_text",
    "intrinsics_from_projection",
    "load_velo_to_camera",
    "frame_stems",
]

# Stored code = round(depth_m * 256); code 0 means no measurement.
DEPTH_SCALE = 256.0
MAX_CODE = 65535


def decode_depth_png(data: bytes) -> DepthImage:
    """Decode a 16-bit single-channel depth PNG (code/256 m, 0 invalid)."""
    raw = cv2.imdecode(np.frombuffer(data, np.uint8), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise ValueError("malformed PNG data")
    if raw.ndim != 2:
        raise ValueError(f"depth PNG must be single channel, got shape {raw.shape}")
    if raw.dtype != np.uint16:
        raise ValueError(f"depth PNG must have 16-bit samples, got {raw.dtype}")
    return DepthImage(raw / DEPTH_SCALE, valid=raw > 0)


def encode_depth_png(img: DepthImage) -> bytes:
    """Encode to the 16-bit PNG format; exact inverse of decode.

    Depths quantize by round-to-nearest of depth*256 (ties away from zero).
    Valid depths below half a quantum (1/512 m) would collide with the
    invalid code 0 and are rejected rather than silently dropped, as are
    depths beyond the 16-bit range.
    """
    codes = np.floor(img.values * DEPTH_SCALE + 0.5)
    codes[~img.valid] = 0.0
    if bool((codes[img.valid] < 1.0).any()):
        raise ValueError("valid depth below 1/512 m cannot be encoded (collides with code 0)")
    if bool((codes > MAX_CODE).any()):
        raise ValueError(f"depth exceeds the encodable range ({MAX_CODE}/256 m)")
    ok, buf = cv2.imencode(".png", codes.astype(np.uint16))
    if not ok:
        raise ValueError("PNG encoding failed")
    return buf.tobytes()


def read_depth_png(path) -> DepthImage:
    return decode_depth_png(Path(path).read_bytes())


def write_depth_png(path, img: DepthImage) -> None:
    Path(path).write_bytes(encode_depth_png(img))


def read_velodyne_bin(path) -> PointCloud:
    """Read a raw scan: packed little-endian float32 (x, y, z, reflectance)."""
    raw = np.fromfile(path, dtype="<f4")
    if raw.size % 4 != 0:
        raise ValueError(f"{path}: scan size is not a multiple of 4 floats")
    records = raw.reshape(-1, 4)
    return PointCloud(records[:, :3], intensity=records[:, 3])


def write_velodyne_bin(path, cloud: PointCloud) -> None:
    intensity = cloud.intensity
    if intensity is None:
        intensity = np.zeros(len(cloud), dtype=np.float32)
    records = np.column_stack([cloud.points, intensity]).astype("<f4")
    records.tofile(path)


def parse_calib_text(path) -> dict:
    """Parse ``key: v0 v1 ...`` calibration lines into float arrays.

    Lines whose payload is not numeric (timestamps and the like) are
    skipped.
    """
    out = {}
    for line in Path(path).read_text().splitlines():
        if ":" not in line:
            continue
        key, _, payload = line.partition(":")
        try:
            values = np.array([float(tok) for tok in payload.split()])
        except ValueError:
            continue
        if values.size:
            out[key.strip()] = values
    return out


def intrinsics_from_projection(p) -> CameraIntrinsics:
    """Focal lengths and principal point from a 3x4 projection matrix."""
    p = np.asarray(p, dtype=np.float64).reshape(3, 4)
    return CameraIntrinsics(fx=p[0, 0], fy=p[1, 1], cx=p[0, 2], cy=p[1, 2])


def _nearest_rotation(m):
    # Calibration files carry limited precision, so published rotation
    # matrices miss strict orthonormality; project to the closest rotation.
    u, _, vt = np.linalg.svd(m)
    r = u @ vt
    if np.linalg.det(r) < 0:
        u[:, -1] = -u[:, -1]
        r = u @ vt
    return r


def load_velo_to_camera(cam_to_cam_path, velo_to_cam_path, camera: int = 2):
    """Intrinsics and scanner-to-rectified-camera transform from calib files.

    Reads the usual calibration pair: the camera file supplies
    ``P_rect_0N`` and ``R_rect_00``, the scanner file supplies ``R`` and
    ``T``. The projection's translation column is folded into the returned
    rigid transform so that projecting with it plus the returned intrinsics
    reproduces the full projection chain.
    """
    cam = parse_calib_text(cam_to_cam_path)
    velo = parse_calib_text(velo_to_cam_path)
    key = f"P_rect_0{int(camera)}"
    if key not in cam:
        raise ValueError(f"{cam_to_cam_path}: missing {key}")
    if "R_rect_00" not in cam:
        raise ValueError(f"{cam_to_cam_path}: missing R_rect_00")
    if "R" not in velo or "T" not in velo:
        raise ValueError(f"{velo_to_cam_path}: missing R or T")

    p = cam[key].reshape(3, 4)
    k = intrinsics_from_projection(p)
    r_rect = _nearest_rotation(cam["R_rect_00"].reshape(3, 3))
    r_velo = _nearest_rotation(velo["R"].reshape(3, 3))
    t_velo = velo["T"].reshape(3)

    # P @ [X; 1] = K @ (X + K^-1 p3): the rectified-camera offset becomes a
    # plain translation b in camera coordinates.
    kmat = np.array([[k.fx, 0.0, k.cx], [0.0, k.fy, k.cy], [0.0, 0.0, 1.0]])
    b = np.linalg.solve(kmat, p[:, 3])

    rotation = r_rect @ r_velo
    translation = r_rect @ t_velo + b
    return k, RigidTransform(rotation, translation)


def frame_stems(directory, suffix: str = ".png"):
    """Sorted filename stems with the given suffix inside a directory."""
    directory = Path(directory)
    if not directory.is_dir():
        raise NotADirectoryError(f"{directory} is not a directory")
    return sorted(p.stem for p in directory.iterdir() if p.suffix == suffix and p.is_file())
