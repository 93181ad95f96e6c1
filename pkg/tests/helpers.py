"""Shared test fixtures and random-input builders."""

import numpy as np

from pseudodepth import DepthImage


def make_sparse(rng, height, width, density, low=0.5, high=80.0, integers=False):
    """Random sparse depth image with at least one valid pixel."""
    valid = rng.random((height, width)) < density
    if not valid.any():
        valid[rng.integers(height), rng.integers(width)] = True
    if integers:
        depths = rng.integers(1, 9, (height, width)).astype(np.float64)
    else:
        depths = rng.uniform(low, high, (height, width))
    return DepthImage(np.where(valid, depths, 0.0), valid)


def make_dense(rng, height, width, low=0.5, high=80.0):
    return DepthImage(rng.uniform(low, high, (height, width)))


def make_quantized(rng, height, width, density=1.0, max_code=20480):
    """Depth image whose values sit exactly on the 1/256 m grid."""
    valid = rng.random((height, width)) < density
    if not valid.any():
        valid[rng.integers(height), rng.integers(width)] = True
    codes = rng.integers(1, max_code + 1, (height, width))
    return DepthImage(np.where(valid, codes / 256.0, 0.0), valid)


def write_calib_pair(directory, p, r_rect, r_velo, t_velo):
    """Write a camera/scanner calibration text pair; returns the two paths."""

    def row(values):
        return " ".join(f"{v:.17g}" for v in np.asarray(values).ravel())

    cam = directory / "calib_cam_to_cam.txt"
    cam.write_text(
        "calib_time: 09-Jan-2012 13:57:47\n"
        "S_02: 1392 512\n"
        f"R_rect_00: {row(r_rect)}\n"
        f"P_rect_02: {row(p)}\n"
    )
    velo = directory / "calib_velo_to_cam.txt"
    velo.write_text(
        "calib_time: 09-Jan-2012 13:57:47\n"
        f"R: {row(r_velo)}\n"
        f"T: {row(t_velo)}\n"
    )
    return cam, velo
