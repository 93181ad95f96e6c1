"""Dense pseudo depth from sparse depth by morphological filling.

The pipeline follows the classical densification recipe: invert depths so
that near points dominate dilation, dilate with a small kernel, close the
remaining small holes, fill whatever large holes are left from the nearest
filled rows and columns, optionally blur, and invert back.

Every step here is fill-only: pixels that already carry a depth are never
overwritten (so a dense input passes through unchanged, and with blur
disabled every output value is some input value). Inversion with a ceiling
C maps depth d to C - d, turning "prefer the nearest depth" into an
ordinary morphological maximum. Because min and max filters only select
values and never do arithmetic on them, we run the equivalent min/max
selection directly on the un-inverted depths; results are bit-identical to
working in inverted space and no precision is lost to the subtraction.
"""

from dataclasses import dataclass

import cv2
import numpy as np
from scipy import ndimage
from sklearn.base import BaseEstimator, TransformerMixin

from .image import DepthImage

__all__ = [
    "MorphConfig",
    "pseudo_depth",
    "gradient_magnitude",
    "forward_differences",
    "diamond_kernel",
    "square_kernel",
    "cross_kernel",
    "structuring_element",
    "PseudoDepthCompleter",
]


def diamond_kernel(size: int) -> np.ndarray:
    """L1 ball of odd diameter ``size``."""
    _check_kernel_size(size)
    r = size // 2
    y, x = np.ogrid[-r : r + 1, -r : r + 1]
    return (np.abs(y) + np.abs(x) <= r).astype(np.uint8)


def square_kernel(size: int) -> np.ndarray:
    _check_kernel_size(size)
    return np.ones((size, size), dtype=np.uint8)


def cross_kernel(size: int) -> np.ndarray:
    _check_kernel_size(size)
    k = np.zeros((size, size), dtype=np.uint8)
    k[size // 2, :] = 1
    k[:, size // 2] = 1
    return k


def _check_kernel_size(size):
    if int(size) != size or size < 1 or size % 2 == 0:
        raise ValueError(f"kernel size must be an odd positive integer, got {size}")


_KERNEL_SHAPES = {"diamond": diamond_kernel, "square": square_kernel, "cross": cross_kernel}


def structuring_element(spec) -> np.ndarray:
    """Normalize a kernel spec to a read-only uint8 footprint.

    Accepts a ("diamond"|"square"|"cross", size) pair, a "shape:size"
    string, or an explicit 2-D 0/1 array. Footprints must be nonempty with
    odd dimensions and symmetric about their center, so that the footprint
    of a pixel is just the kernel centered on it.
    """
    if isinstance(spec, str):
        shape, _, size = spec.partition(":")
        if shape not in _KERNEL_SHAPES or not size:
            raise ValueError(f"unknown kernel spec {spec!r}")
        kernel = _KERNEL_SHAPES[shape](int(size))
    elif isinstance(spec, (tuple, list)) and len(spec) == 2 and isinstance(spec[0], str):
        shape, size = spec
        if shape not in _KERNEL_SHAPES:
            raise ValueError(f"unknown kernel shape {shape!r}")
        kernel = _KERNEL_SHAPES[shape](int(size))
    else:
        kernel = (np.asarray(spec) != 0).astype(np.uint8)
        if kernel.ndim != 2 or kernel.shape[0] % 2 == 0 or kernel.shape[1] % 2 == 0:
            raise ValueError("kernel must be 2-D with odd side lengths")
        if not kernel.any():
            raise ValueError("kernel must be nonempty")
        if not np.array_equal(kernel, kernel[::-1, ::-1]):
            raise ValueError("kernel must be symmetric about its center")
    kernel = np.ascontiguousarray(kernel)
    kernel.flags.writeable = False
    return kernel


@dataclass(frozen=True, eq=False)
class MorphConfig:
    """Settings for :func:`pseudo_depth`.

    ``inversion_ceiling`` must strictly exceed every depth in the scene;
    ``top_crop_rows`` marks the sensor-free top band that is passed through
    untouched; ``blur`` is None or "median<odd size>", applied only once
    the map is dense.
    """

    dilation_kernel: object = ("diamond", 5)
    closure_kernel: object = ("square", 5)
    large_fill_enabled: bool = True
    inversion_ceiling: float = 100.0
    top_crop_rows: int = 100
    blur: str = None

    def __post_init__(self):
        object.__setattr__(self, "dilation_kernel", structuring_element(self.dilation_kernel))
        object.__setattr__(self, "closure_kernel", structuring_element(self.closure_kernel))
        if not np.isfinite(self.inversion_ceiling) or self.inversion_ceiling <= 0:
            raise ValueError("inversion_ceiling must be finite and > 0")
        if int(self.top_crop_rows) != self.top_crop_rows or self.top_crop_rows < 0:
            raise ValueError("top_crop_rows must be a non-negative integer")
        object.__setattr__(self, "top_crop_rows", int(self.top_crop_rows))
        if self.blur is not None:
            self._blur_size()

    def _blur_size(self):
        if not (isinstance(self.blur, str) and self.blur.startswith("median")):
            raise ValueError(f"blur must be None or 'median<size>', got {self.blur!r}")
        try:
            size = int(self.blur[len("median") :])
        except ValueError:
            raise ValueError(f"blur must be None or 'median<size>', got {self.blur!r}") from None
        _check_kernel_size(size)
        return size


def _fill_nearest(values, valid, kernel):
    # Fill-only dilation: an empty pixel takes the nearest (smallest) depth
    # among the valid pixels under the kernel footprint, which is the
    # morphological maximum in inverted space. cv2.erode is a sliding min;
    # +inf padding makes invalid pixels and out-of-image neighbors neutral.
    nearest = cv2.erode(np.where(valid, values, np.inf), kernel)
    reach = cv2.dilate(valid.astype(np.uint8), kernel).astype(bool)
    out = np.where(valid, values, np.where(reach, nearest, 0.0))
    return out, valid | reach


def _close_holes(values, valid, kernel):
    # Fill-only closure: grayscale closing in inverted space. First a
    # masked nearest fill (inverted dilation), then the inverted erosion,
    # whose depth-space equivalent takes the farthest footprint value and
    # is only defined where the whole in-image footprint got filled.
    nearest = cv2.erode(np.where(valid, values, np.inf), kernel)
    reach = cv2.dilate(valid.astype(np.uint8), kernel)
    farthest = cv2.dilate(np.where(reach.astype(bool), nearest, -np.inf), kernel)
    closed = cv2.erode(reach, kernel).astype(bool)
    out = np.where(valid, values, np.where(closed, farthest, 0.0))
    return out, valid | closed


def _fill_column_down(values, valid):
    # Each empty pixel takes the nearest valid value looking down its
    # column: the empty band above the first return inherits that return.
    # A valid pixel is its own nearest source, so one gather covers both.
    h, w = values.shape
    rows = np.arange(h, dtype=np.int32)[:, None]
    below = np.where(valid, rows, np.int32(h))
    np.minimum.accumulate(below[::-1], axis=0, out=below[::-1])
    has = below < h
    fill = np.take_along_axis(values, np.minimum(below, h - 1), axis=0)
    return np.where(has, fill, 0.0), valid | has


def _fill_row_nearest(values, valid):
    # Nearest valid value in the same row; ties go to the smaller column.
    h, w = values.shape
    cols = np.arange(w, dtype=np.int32)[None, :]
    left = np.where(valid, cols, np.int32(-1))
    np.maximum.accumulate(left, axis=1, out=left)
    right = np.where(valid, cols, np.int32(w))
    np.minimum.accumulate(right[:, ::-1], axis=1, out=right[:, ::-1])
    dist_left = np.where(left >= 0, cols - left, w + 1)
    dist_right = np.where(right < w, right - cols, w + 1)
    source = np.where(dist_left <= dist_right, np.maximum(left, 0), np.minimum(right, w - 1))
    has = (left >= 0) | (right < w)
    fill = np.take_along_axis(values, source, axis=1)
    return np.where(has, fill, 0.0), valid | has


def _fill_column_up(values, valid):
    # Nearest valid value looking up the column; covers rows below the
    # lowest return once the rows above are dense.
    h, w = values.shape
    rows = np.arange(h, dtype=np.int32)[:, None]
    above = np.where(valid, rows, np.int32(-1))
    np.maximum.accumulate(above, axis=0, out=above)
    has = above >= 0
    fill = np.take_along_axis(values, np.maximum(above, 0), axis=0)
    return np.where(has, fill, 0.0), valid | has


def pseudo_depth(sparse: DepthImage, cfg: MorphConfig = None) -> DepthImage:
    """Densify a sparse depth image below the crop row.

    Rows above ``cfg.top_crop_rows`` are copied through unchanged and take
    no part in the filling; the region below comes out fully dense, built
    by nearest-dominated dilation, small-hole closure, and (when enabled)
    large-hole filling from the nearest valid rows and columns. With
    ``large_fill_enabled=False`` coverage is not guaranteed. The optional
    median blur requires the region to be dense by the time it runs.
    """
    if cfg is None:
        cfg = MorphConfig()
    crop = cfg.top_crop_rows
    if crop >= sparse.height:
        raise ValueError(
            f"top_crop_rows={crop} leaves no rows in a {sparse.height}-row image"
        )

    values = sparse.values[crop:]
    valid = sparse.valid[crop:]
    if not valid.any():
        raise ValueError("no valid pixels below the crop row")
    if float(values[valid].max()) >= cfg.inversion_ceiling:
        raise ValueError("inversion_ceiling must strictly exceed the maximum input depth")

    values, valid = _fill_nearest(values, valid, cfg.dilation_kernel)
    values, valid = _close_holes(values, valid, cfg.closure_kernel)
    if cfg.large_fill_enabled:
        values, valid = _fill_column_down(values, valid)
        values, valid = _fill_row_nearest(values, valid)
        values, valid = _fill_column_up(values, valid)
    if cfg.blur is not None:
        if not valid.all():
            raise ValueError("blur requires a dense map; enable large_fill")
        # The median is an order statistic, so for an odd window the median
        # of inverted depths is the inverted median of depths; filtering
        # the plain depths gives the same result as blurring inverted.
        values = ndimage.median_filter(values, size=cfg._blur_size(), mode="reflect")

    out_values = sparse.values.copy()
    out_valid = sparse.valid.copy()
    out_values[crop:] = values
    out_valid[crop:] = valid
    # every filled value was selected from a valid input pixel, so the
    # arrays are canonical by construction
    return DepthImage._trusted(out_values, out_valid)


def forward_differences(field: np.ndarray):
    """Forward-difference gradients (gx, gy) with a replicated border.

    The replicated border makes the difference vanish on the last column
    and row. This is the one finite-difference stencil used package-wide.
    """
    gx = np.zeros_like(field)
    gy = np.zeros_like(field)
    gx[:, :-1] = field[:, 1:] - field[:, :-1]
    gy[:-1, :] = field[1:, :] - field[:-1, :]
    return gx, gy


def gradient_magnitude(dense: DepthImage, crop_rows: int = 0) -> np.ndarray:
    """Per-pixel |dx| + |dy| in meters/pixel by forward differences.

    Rows above ``crop_rows`` are excluded from the stencil and reported as
    0; the rows below must be fully valid.
    """
    crop = int(crop_rows)
    if crop < 0 or crop >= dense.height:
        raise ValueError(f"crop_rows={crop_rows} out of range for a {dense.height}-row image")
    region = dense.values[crop:]
    if not dense.valid[crop:].all():
        raise ValueError("gradient needs a dense depth map below the crop row")
    gx, gy = forward_differences(region)
    out = np.zeros_like(dense.values)
    out[crop:] = np.abs(gx) + np.abs(gy)
    return out


class PseudoDepthCompleter(BaseEstimator, TransformerMixin):
    """Transformer wrapper around :func:`pseudo_depth`.

    Stateless: ``fit`` only validates the parameters. ``transform`` maps a
    DepthImage to its dense pseudo depth map, or a list of images to a
    list.
    """

    def __init__(
        self,
        dilation_kernel=("diamond", 5),
        closure_kernel=("square", 5),
        large_fill_enabled=True,
        inversion_ceiling=100.0,
        top_crop_rows=100,
        blur=None,
    ):
        self.dilation_kernel = dilation_kernel
        self.closure_kernel = closure_kernel
        self.large_fill_enabled = large_fill_enabled
        self.inversion_ceiling = inversion_ceiling
        self.top_crop_rows = top_crop_rows
        self.blur = blur

    def _config(self):
        return MorphConfig(
            dilation_kernel=self.dilation_kernel,
            closure_kernel=self.closure_kernel,
            large_fill_enabled=self.large_fill_enabled,
            inversion_ceiling=self.inversion_ceiling,
            top_crop_rows=self.top_crop_rows,
            blur=self.blur,
        )

    def fit(self, X=None, y=None):
        self._config()
        return self

    def transform(self, X):
        cfg = self._config()
        if isinstance(X, DepthImage):
            return pseudo_depth(X, cfg)
        return [pseudo_depth(img, cfg) for img in X]
