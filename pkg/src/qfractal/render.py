"""Visit-count histograms on the sphere and 8-bit grayscale output.

Pixel conventions (row 0 at the top, column 0 at the left):

* ``ortho_north``: view from +z; image x is the state's x, image up is +y.
* ``ortho_south``: view from -z; image x is x, image up is -y.
* ``equirectangular``: column from longitude ``atan2(y, x)`` over (-pi, pi],
  row from colatitude ``arccos z`` over [0, pi].
* ``stereographic_south_pole_center_north``: projection from the south pole
  onto the plane tangent at the north pole, ``(x, y) / (1 + z)``.

A zoom window rotates ``center`` to the view axis and restricts the view to
``radius`` radians around it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numba
import numpy as np

KINDS = ("ortho_north", "ortho_south", "equirectangular",
         "stereographic_south_pole_center_north")
_KIND_CODE = {k: i for i, k in enumerate(KINDS)}
_DEFAULT_RADIUS = {"ortho_north": math.pi / 2, "ortho_south": math.pi / 2,
                   "equirectangular": math.pi,
                   "stereographic_south_pole_center_north": 2 * math.pi / 3}


class EmptyHistogram(ValueError):
    pass


def rotation_to_north(center) -> np.ndarray:
    """Rotation matrix taking unit vector ``center`` to (0, 0, 1)."""
    c = np.asarray(center, dtype=float)
    c = c / np.linalg.norm(c)
    z = np.array([0.0, 0.0, 1.0])
    v = np.cross(c, z)
    s = np.linalg.norm(v)
    cos = float(np.dot(c, z))
    if s < 1e-15:
        return np.eye(3) if cos > 0 else np.diag([1.0, -1.0, -1.0])
    k = v / s
    kx = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + s * kx + (1 - cos) * kx @ kx


@dataclass(frozen=True)
class Projection:
    kind: str = "ortho_north"
    width: int = 1024
    height: int = 1024
    center: tuple | None = None
    radius: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown projection {self.kind!r}; choose from {', '.join(KINDS)}")
        if self.width < 1 or self.height < 1:
            raise ValueError("image size must be positive")
        if self.radius is not None and not 0.0 < self.radius <= math.pi:
            raise ValueError("zoom radius must lie in (0, pi]")
        if self.center is not None:
            object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)

    def view_radius(self) -> float:
        return self.radius if self.radius is not None else _DEFAULT_RADIUS[self.kind]

    def rotation(self) -> np.ndarray:
        if self.center is not None:
            return rotation_to_north(self.center)
        if self.kind == "ortho_south":
            return np.diag([1.0, -1.0, -1.0])
        return np.eye(3)

    def pixel_index(self, points) -> np.ndarray:
        """Flat pixel index per point, or -1 when the point is not visible."""
        pts = np.ascontiguousarray(points, dtype=float).reshape(-1, 3)
        out = np.empty(len(pts), dtype=np.int64)
        _project(pts, self.rotation(), _KIND_CODE[self.kind], self.view_radius(),
                 self.width, self.height, out)
        return out

    def describe(self) -> str:
        c = "-" if self.center is None else ",".join(repr(v) for v in self.center)
        return f"{self.kind}:{self.width}x{self.height}:center={c}:radius={self.view_radius()!r}"


@numba.njit(nogil=True, cache=True)
def _project(pts, rot, kind, radius, width, height, out):
    # planar half-extent of the window for the ortho and stereographic views
    if kind <= 1:
        half = math.sin(radius) if radius < math.pi / 2 else 1.0
    elif kind == 3:
        half = math.tan(radius / 2.0)
    else:
        half = 1.0
    for k in range(pts.shape[0]):
        px, py, pz = pts[k, 0], pts[k, 1], pts[k, 2]
        x = rot[0, 0] * px + rot[0, 1] * py + rot[0, 2] * pz
        y = rot[1, 0] * px + rot[1, 1] * py + rot[1, 2] * pz
        z = rot[2, 0] * px + rot[2, 1] * py + rot[2, 2] * pz
        out[k] = -1
        if kind == 2:
            colat = math.acos(min(1.0, max(-1.0, z)))
            if colat > radius:
                continue
            lon = math.atan2(y, x)
            col = int((lon + math.pi) / (2.0 * math.pi) * width)
            row = int(colat / radius * height)
            out[k] = min(row, height - 1) * width + min(col, width - 1)
            continue
        if kind <= 1:
            if z < 0.0 or (radius < math.pi / 2 and z < math.cos(radius)):
                continue
            u, v = x / half, y / half
        else:
            if 1.0 + z <= 1e-12:
                continue
            u, v = x / (1.0 + z) / half, y / (1.0 + z) / half
        if u < -1.0 or u > 1.0 or v < -1.0 or v > 1.0:
            continue
        col = int((u + 1.0) * 0.5 * width)
        row = int((1.0 - v) * 0.5 * height)
        out[k] = min(row, height - 1) * width + min(col, width - 1)


@numba.njit(nogil=True, cache=True)
def _bincount_into(flat, idx):
    dropped = 0
    for k in range(idx.shape[0]):
        i = idx[k]
        if i < 0:
            dropped += 1
        else:
            flat[i] += 1
    return dropped


class SphereHistogram:
    """Per-pixel visit counts (uint64) plus a tally of points not visible."""

    def __init__(self, projection: Projection | None = None):
        self.projection = projection or Projection()
        self.counts = np.zeros(self.projection.shape, dtype=np.uint64)
        self.total_in = 0
        self.total_dropped = 0

    @property
    def total_offered(self) -> int:
        return self.total_in + self.total_dropped

    def accumulate(self, r) -> None:
        self.add_points(np.asarray(r, dtype=float).reshape(1, 3))

    def add_points(self, points) -> None:
        idx = self.projection.pixel_index(points)
        dropped = _bincount_into(self.counts.reshape(-1), idx)
        self.total_dropped += int(dropped)
        self.total_in += len(idx) - int(dropped)

    def merge(self, other: "SphereHistogram") -> "SphereHistogram":
        if other.projection != self.projection:
            raise ValueError("cannot merge histograms with different projections")
        self.counts += other.counts
        self.total_in += other.total_in
        self.total_dropped += other.total_dropped
        return self

    def __eq__(self, other):
        return (isinstance(other, SphereHistogram) and self.projection == other.projection
                and np.array_equal(self.counts, other.counts)
                and self.total_dropped == other.total_dropped)


def tonemap(h: SphereHistogram | np.ndarray, scale: str = "log") -> np.ndarray:
    """8-bit image: ``floor(255 * s(c) / s(c_max) + 0.5)``.

    ``s(x) = ln(1 + x)`` for ``log`` and ``ln(1 + ln(1 + x))`` for ``loglog``.
    """
    counts = h.counts if isinstance(h, SphereHistogram) else np.asarray(h)
    c = counts.astype(np.float64)
    cmax = c.max() if c.size else 0.0
    if cmax <= 0:
        raise EmptyHistogram("histogram has no counts")
    if scale == "log":
        s = np.log1p(c)
    elif scale == "loglog":
        s = np.log1p(np.log1p(c))
    else:
        raise ValueError("scale must be 'log' or 'loglog'")
    return np.floor(255.0 * (s / s.max()) + 0.5).astype(np.uint8)


def pgm_bytes(image: np.ndarray) -> bytes:
    img = np.asarray(image)
    if img.ndim != 2 or img.dtype != np.uint8:
        raise ValueError("PGM output needs a 2-D uint8 image")
    h, w = img.shape
    return b"P5\n%d %d\n255\n" % (w, h) + np.ascontiguousarray(img).tobytes()


def write_pgm(image: np.ndarray, path) -> None:
    Path(path).write_bytes(pgm_bytes(image))


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(maxsplit=4)
    if parts[0] != b"P5" or int(parts[3]) != 255:
        raise ValueError("only 8-bit binary P5 files are supported")
    w, h = int(parts[1]), int(parts[2])
    return np.frombuffer(parts[4][: w * h], dtype=np.uint8).reshape(h, w)


def write_csv(h: SphereHistogram, path) -> None:
    """``row,col,count`` for every nonzero bin, row-major order."""
    rows, cols = np.nonzero(h.counts)
    vals = h.counts[rows, cols]
    with open(path, "w") as fh:
        fh.write("row,col,count\n")
        for r, c, v in zip(rows.tolist(), cols.tolist(), vals.tolist()):
            fh.write(f"{r},{c},{v}\n")


def read_csv(path, shape: tuple[int, int]) -> np.ndarray:
    counts = np.zeros(shape, dtype=np.uint64)
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "row,col,count":
            raise ValueError(f"unexpected CSV header {header!r}")
        for line in fh:
            r, c, v = line.split(",")
            counts[int(r), int(c)] = int(v)
    return counts
