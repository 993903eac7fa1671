"""Quarter-plane grids, discrete fields and the ISOQF1 field-file format.

The grid is cell-centered in r (first unknown at dr/2, so no point sits on
the r = 0 axis) and node-based in s with the s = 0 Dirichlet row stored as
the first column of the value array.  Values are laid out as an (nr, ns)
array whose rows are s-scans at fixed r.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, asdict, field
from pathlib import Path

import numpy as np

MAGIC = b"ISOQF1"
_HEADER = struct.Struct("<6sIIdddB")


@dataclass(frozen=True)
class Grid2D:
    rmax: float
    smax: float
    nr: int
    ns: int

    def __post_init__(self):
        if self.nr < 16 or self.ns < 16:
            raise ValueError(f"grid too small: nr={self.nr}, ns={self.ns} (need >= 16)")
        if self.rmax < 20 or self.smax < 20:
            raise ValueError(
                f"domain too small: rmax={self.rmax}, smax={self.smax} (need >= 20)"
            )

    @property
    def dr(self) -> float:
        return self.rmax / self.nr

    @property
    def ds(self) -> float:
        return self.smax / self.ns

    def r_centers(self) -> np.ndarray:
        return (np.arange(self.nr) + 0.5) * self.dr

    def r_faces(self) -> np.ndarray:
        return np.arange(self.nr + 1) * self.dr

    def s_nodes(self) -> np.ndarray:
        return np.arange(self.ns) * self.ds


@dataclass(frozen=True)
class Field2D:
    grid: Grid2D
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.shape != (self.grid.nr, self.grid.ns):
            raise ValueError(
                f"value shape {values.shape} does not match grid "
                f"({self.grid.nr}, {self.grid.ns})"
            )
        object.__setattr__(self, "values", values)

    def interpolate(self, r, s):
        """Bilinear probe of the field at (r, s), clamped to the grid hull."""
        from scipy.interpolate import RegularGridInterpolator

        interp = RegularGridInterpolator(
            (self.grid.r_centers(), self.grid.s_nodes()),
            self.values,
            bounds_error=False,
            fill_value=None,
        )
        pts = np.column_stack([np.atleast_1d(r), np.atleast_1d(s)])
        out = interp(pts)
        return float(out[0]) if np.isscalar(r) and np.isscalar(s) else out

    def squared(self) -> "Field2D":
        return Field2D(self.grid, self.values**2)


@dataclass
class SolveReport:
    residual_rel: float
    iterations: int
    decay_fit_exponent: float
    positivity_violations: int

    def to_dict(self) -> dict:
        return asdict(self)


def write_field(path, field2d: Field2D, n: int, p: int,
                report: SolveReport | None = None) -> None:
    """Write a field in the ISOQF1 format plus a JSON meta sidecar.

    Layout: magic ``ISOQF1``; little-endian u32 nr, u32 ns; f64 rmax, smax;
    f64 n; u8 p; then nr*ns f64 values row-major (s-major rows).
    """
    path = Path(path)
    g = field2d.grid
    header = _HEADER.pack(MAGIC, g.nr, g.ns, g.rmax, g.smax, float(n), p)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(field2d.values.astype("<f8").tobytes(order="C"))
    if report is not None:
        meta_path = path.with_name(path.name + ".meta.json")
        meta_path.write_text(
            json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )


def read_field(path) -> tuple[Field2D, int, int, dict | None]:
    """Read an ISOQF1 field file; returns (field, n, p, meta_or_None)."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated ISOQF1 header")
    magic, nr, ns, rmax, smax, nf, p = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    need = _HEADER.size + 8 * nr * ns
    if len(raw) != need:
        raise ValueError(f"{path}: expected {need} bytes, found {len(raw)}")
    values = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(nr, ns)
    grid = Grid2D(rmax, smax, nr, ns)
    meta = None
    meta_path = path.with_name(path.name + ".meta.json")
    if meta_path.exists():
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
    return Field2D(grid, values.copy()), int(nf), int(p), meta
