"""Depth image containers and validity semantics.

A depth image is a rectangular grid of metric depths plus an explicit
validity mask. Invalid pixels carry no value; every reader must consult
the mask. All containers are immutable after construction so they can be
shared freely between threads.
"""

from dataclasses import dataclass

import numpy as np

__all__ = ["DepthImage", "ResidualImage", "DensityStat", "density"]


def _as_grid(values, name):
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-D array, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} needs at least one row and one column")
    return arr


class DepthImage:
    """Grid of depths in meters with a per-pixel validity mask.

    Valid pixels hold a finite depth > 0. Invalid pixels are stored as 0 so
    that equal images compare equal bytewise, but the stored zero is not a
    measurement. When ``valid`` is omitted, every strictly positive finite
    entry of ``values`` is taken as valid.
    """

    __slots__ = ("values", "valid")

    def __init__(self, values, valid=None):
        values = _as_grid(values, "values")
        if valid is None:
            valid = np.isfinite(values) & (values > 0.0)
        else:
            valid = np.ascontiguousarray(valid, dtype=bool)
            if valid.shape != values.shape:
                raise ValueError(
                    f"valid mask shape {valid.shape} does not match values shape {values.shape}"
                )
            bad = valid & ~(np.isfinite(values) & (values > 0.0))
            if bad.any():
                raise ValueError("valid pixels must hold finite depths > 0")
        values = np.where(valid, values, 0.0)
        values.flags.writeable = False
        valid.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "valid", valid)

    def __setattr__(self, name, value):
        raise AttributeError("DepthImage is immutable")

    @classmethod
    def _trusted(cls, values, valid):
        # Internal fast path for pipeline outputs whose arrays are already
        # canonical (float64/bool, zeros at invalid pixels, freshly owned).
        img = object.__new__(cls)
        values.flags.writeable = False
        valid.flags.writeable = False
        object.__setattr__(img, "values", values)
        object.__setattr__(img, "valid", valid)
        return img

    @property
    def height(self):
        return self.values.shape[0]

    @property
    def width(self):
        return self.values.shape[1]

    @property
    def shape(self):
        return self.values.shape

    def __eq__(self, other):
        if not isinstance(other, DepthImage):
            return NotImplemented
        return np.array_equal(self.values, other.values) and np.array_equal(
            self.valid, other.valid
        )

    def __repr__(self):
        n = int(self.valid.sum())
        return f"DepthImage({self.height}x{self.width}, {n} valid)"


class ResidualImage:
    """Dense grid of signed depth corrections in meters.

    Residuals are defined at every pixel and must be finite; they have no
    validity mask of their own and inherit the geometry of the companion
    pseudo depth map.
    """

    __slots__ = ("values",)

    def __init__(self, values):
        values = _as_grid(values, "values")
        if not np.isfinite(values).all():
            raise ValueError("residuals must be finite at every pixel")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def __setattr__(self, name, value):
        raise AttributeError("ResidualImage is immutable")

    @property
    def height(self):
        return self.values.shape[0]

    @property
    def width(self):
        return self.values.shape[1]

    @property
    def shape(self):
        return self.values.shape

    def __eq__(self, other):
        if not isinstance(other, ResidualImage):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    def __repr__(self):
        return f"ResidualImage({self.height}x{self.width})"


@dataclass(frozen=True)
class DensityStat:
    valid_count: int
    total_count: int
    density: float

    def __post_init__(self):
        if self.total_count <= 0:
            raise ValueError("total_count must be positive")
        if not 0 <= self.valid_count <= self.total_count:
            raise ValueError("valid_count out of range")
        if self.density != self.valid_count / self.total_count:
            raise ValueError("density must equal valid_count / total_count exactly")


def density(img: DepthImage) -> DensityStat:
    """Exact fraction of valid pixels in the image."""
    valid_count = int(np.count_nonzero(img.valid))
    total = img.valid.size
    return DensityStat(valid_count, total, valid_count / total)
