"""Sampled fields on rectangular grids and their finite-difference derivatives.

Snapshots are stored as a flat binary of little-endian 8-byte reals, variables
in sidecar order, with a JSON sidecar ``{dims, spacing, variables, periodic, meta}``.

Classes:
    GridField: named arrays sampled on a grid of any dimension
    GridField4: a GridField on a (t, x, y, z) grid with at least 5 points per axis

Functions:
    centered_diff: centered derivative along one axis, periodic or one-sided at the ends
    embed_1d: lift a (t, x) field to (t, x, y, z) with y and z constant
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import numpy.typing as npt

from .errors import GridTooCoarse, NotNormalized, SchemaError

Array = npt.NDArray[np.float64]


def centered_diff(a: Array, axis: int, h: float, periodic: bool = True, order: int = 2) -> Array:
    """Centered difference of ``a`` along ``axis`` with spacing ``h``.

    Periodic axes wrap around. Non-periodic axes use second-order one-sided
    stencils at the two end points (fourth order is only offered on periodic axes).
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[axis]
    if a.shape[axis] == 1:
        return np.zeros_like(a)
    if order not in (2, 4):
        raise ValueError("order must be 2 or 4")
    if periodic:
        if n < 5:
            raise GridTooCoarse(f"axis {axis} has {n} < 5 points")
        if order == 2:
            return (np.roll(a, -1, axis) - np.roll(a, 1, axis)) / (2.0 * h)
        return (8.0 * (np.roll(a, -1, axis) - np.roll(a, 1, axis))
                - (np.roll(a, -2, axis) - np.roll(a, 2, axis))) / (12.0 * h)
    if n < 3:
        raise GridTooCoarse(f"axis {axis} has {n} < 3 points")
    if order == 4:
        raise ValueError("fourth order is only available on periodic axes")
    return np.gradient(a, h, axis=axis, edge_order=2)


@dataclass
class GridField:
    """Named arrays on a rectangular grid.

    Each entry of ``fields`` has shape ``components + dims``; a scalar has no
    leading component axes, a four-vector has one leading axis of length 4.
    """

    dims: tuple[int, ...]
    spacing: tuple[float, ...]
    fields: dict[str, Array]
    periodic: tuple[bool, ...] = None
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.dims = tuple(int(d) for d in self.dims)
        self.spacing = tuple(float(s) for s in self.spacing)
        if self.periodic is None:
            self.periodic = (True,) * len(self.dims)
        self.periodic = tuple(bool(p) for p in self.periodic)
        if not (len(self.spacing) == len(self.dims) == len(self.periodic)):
            raise SchemaError("dims, spacing and periodic must have equal length")
        for name, arr in self.fields.items():
            arr = np.asarray(arr, dtype=float)
            if tuple(arr.shape[arr.ndim - len(self.dims):]) != self.dims:
                raise SchemaError(f"field {name!r} has shape {arr.shape}, grid is {self.dims}")
            self.fields[name] = arr

    def __getitem__(self, name: str) -> Array:
        return self.fields[name]

    def __contains__(self, name: str) -> bool:
        return name in self.fields

    def diff(self, a: Array, mu: int, order: int = 2) -> Array:
        """Derivative along grid axis ``mu`` of an array whose trailing axes are the grid."""
        axis = a.ndim - len(self.dims) + mu
        return centered_diff(a, axis, self.spacing[mu], self.periodic[mu], order)

    def grad(self, a: Array, order: int = 2) -> Array:
        """Stack of derivatives along every grid axis, new leading axis."""
        return np.stack([self.diff(a, mu, order) for mu in range(len(self.dims))])

    def save(self, path: str | Path) -> None:
        """Write ``path`` (binary) and ``path + '.json'`` (sidecar)."""
        path = Path(path)
        names = sorted(self.fields)
        variables = [{"name": k, "components": list(self.fields[k].shape[:self.fields[k].ndim - len(self.dims)])}
                     for k in names]
        blob = b"".join(np.ascontiguousarray(self.fields[k], dtype="<f8").tobytes() for k in names)
        path.write_bytes(blob)
        side = {"dims": list(self.dims), "spacing": list(self.spacing), "periodic": list(self.periodic),
                "variables": variables, "meta": self.meta}
        Path(str(path) + ".json").write_text(json.dumps(side, sort_keys=True, indent=1) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "GridField":
        path = Path(path)
        side_path = Path(str(path) + ".json")
        try:
            side = json.loads(side_path.read_text())
            dims = tuple(side["dims"])
            spacing = tuple(side["spacing"])
        except (OSError, KeyError, ValueError) as exc:
            raise SchemaError(f"bad sidecar {side_path}: {exc}") from exc
        raw = np.frombuffer(path.read_bytes(), dtype="<f8")
        fields, off = {}, 0
        for var in side["variables"]:
            shape = tuple(var.get("components", [])) + dims
            size = int(np.prod(shape))
            if off + size > raw.size:
                raise SchemaError("binary snapshot shorter than the sidecar declares")
            fields[var["name"]] = raw[off:off + size].reshape(shape).astype(float)
            off += size
        if off != raw.size:
            raise SchemaError("binary snapshot longer than the sidecar declares")
        return cls(dims, spacing, fields, tuple(side.get("periodic", [True] * len(dims))), side.get("meta", {}))


class GridField4(GridField):
    """GridField on (t, x, y, z) with at least 5 points per axis.

    If a four-velocity ``u`` is present it must be normalized pointwise within 1e-10.
    """

    def __post_init__(self) -> None:
        super().__post_init__()
        if len(self.dims) != 4:
            raise SchemaError("GridField4 needs four axes")
        if min(self.dims) < 5:
            raise GridTooCoarse(f"GridField4 needs >= 5 points per axis, got {self.dims}")
        if "u" in self.fields:
            u = self.fields["u"]
            norm = -u[0] ** 2 + u[1] ** 2 + u[2] ** 2 + u[3] ** 2
            if np.max(np.abs(norm + 1.0)) > 1e-10:
                raise NotNormalized("u is not normalized on the grid")

    @classmethod
    def from_field(cls, f: GridField) -> "GridField4":
        return cls(f.dims, f.spacing, dict(f.fields), f.periodic, dict(f.meta))


def embed_1d(f: GridField, n_transverse: int = 5, dy: float = 1.0) -> GridField4:
    """Lift a (t, x) field to (t, x, y, z), constant in y and z.

    Scalars are broadcast. A field named ``v`` (three-velocity along x) is
    turned into a four-velocity ``u``; other fields are broadcast as they are.
    """
    if len(f.dims) != 2:
        raise SchemaError("embed_1d expects a (t, x) field")
    nt, nx = f.dims
    dims = (nt, nx, n_transverse, n_transverse)
    out: dict[str, Array] = {}
    for name, arr in f.fields.items():
        lead = arr.shape[:arr.ndim - 2]
        out[name] = np.broadcast_to(arr[..., None, None], lead + dims).copy()
    if "v" in out and "u" not in out:
        v = out.pop("v")
        w = 1.0 / np.sqrt(1.0 - v * v)
        z = np.zeros_like(v)
        out["u"] = np.stack([w, w * v, z, z])
    return GridField4(dims, (f.spacing[0], f.spacing[1], dy, dy), out,
                      (f.periodic[0], f.periodic[1], True, True), dict(f.meta))
