"""Binary little-endian PLY export and import for point clouds."""

from pathlib import Path

import numpy as np

from .geometry import PointCloud

__all__ = ["export_ply", "load_ply"]

_PLY_TYPES = {np.dtype(np.float32): "float", np.dtype(np.float64): "double"}
_NUMPY_TYPES = {"float": "<f4", "float32": "<f4", "double": "<f8", "float64": "<f8"}


def export_ply(cloud: PointCloud, path) -> None:
    """Write the cloud as binary little-endian PLY.

    Coordinates keep their dtype (float32 -> ``float``, float64 ->
    ``double``) so a read back through ``load_ply`` is bit-exact.
    """
    scalar = _PLY_TYPES[cloud.points.dtype]
    names = ["x", "y", "z"]
    columns = [cloud.points[:, 0], cloud.points[:, 1], cloud.points[:, 2]]
    if cloud.intensity is not None:
        names.append("intensity")
        columns.append(cloud.intensity)

    header = ["ply", "format binary_little_endian 1.0", f"element vertex {len(cloud)}"]
    header += [f"property {scalar} {n}" for n in names]
    header.append("end_header")

    dtype = np.dtype([(n, cloud.points.dtype.newbyteorder("<")) for n in names])
    record = np.empty(len(cloud), dtype=dtype)
    for n, col in zip(names, columns):
        record[n] = col

    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("ascii"))
        fh.write(record.tobytes())


def load_ply(path) -> PointCloud:
    """Read a binary little-endian PLY written by :func:`export_ply`.

    Understands a single vertex element with float or double properties
    x, y, z and an optional intensity; anything else is rejected.
    """
    data = Path(path).read_bytes()
    end = data.find(b"end_header\n")
    if not data.startswith(b"ply\n") or end < 0:
        raise ValueError(f"{path}: not a PLY file")
    header = data[: end + len(b"end_header\n")]
    body = data[len(header):]

    count = None
    fields = []
    for line in header.decode("ascii").splitlines():
        parts = line.split()
        if not parts or parts[0] in ("ply", "comment", "end_header"):
            continue
        if parts[0] == "format":
            if parts[1] != "binary_little_endian":
                raise ValueError(f"{path}: unsupported format {parts[1]}")
        elif parts[0] == "element":
            if parts[1] != "vertex" or count is not None:
                raise ValueError(f"{path}: only a single vertex element is supported")
            count = int(parts[2])
        elif parts[0] == "property":
            if parts[1] not in _NUMPY_TYPES:
                raise ValueError(f"{path}: unsupported property type {parts[1]}")
            fields.append((parts[2], _NUMPY_TYPES[parts[1]]))
        else:
            raise ValueError(f"{path}: unsupported header line {line!r}")
    if count is None:
        raise ValueError(f"{path}: missing vertex element")
    names = [n for n, _ in fields]
    if names not in (["x", "y", "z"], ["x", "y", "z", "intensity"]):
        raise ValueError(f"{path}: unsupported property layout {names}")
    if len({t for _, t in fields}) != 1:
        raise ValueError(f"{path}: mixed property types are not supported")

    record = np.frombuffer(body, dtype=np.dtype(fields), count=count)
    if record.shape[0] != count:
        raise ValueError(f"{path}: truncated vertex data")
    points = np.column_stack([record["x"], record["y"], record["z"]])
    intensity = record["intensity"] if "intensity" in names else None
    return PointCloud(points, intensity)
