"""Detector direction arrays: the Platonic solids and two extra polyhedra.

Coordinates are assembled from the closed-form radicals in :data:`A`, never
from rounded decimals.  Each built-in has a vertex at the north pole (0, 0, 1).

File format (plain text, ``#`` starts a comment)::

    name N default_epsilon
    x y z
    ...            # N lines
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

UNIT_TOL_BUILTIN = 1e-12
UNIT_TOL_FILE = 1e-9
ZERO_SUM_TOL = 1e-12

_s2, _s3, _s5 = math.sqrt(2.0), math.sqrt(3.0), math.sqrt(5.0)

# a[1..17]; index 0 is unused so indices read the same as the table.
A = (
    math.nan,
    (3 - _s5) / 6,
    (5 - _s5) / 10,
    1 / 3,
    (_s5 - 1) / (2 * _s3),
    1 / _s5,
    _s2 / 3,
    math.sqrt((5 - _s5) / 10),
    1 / _s3,
    2 / 3,
    (5 + _s5) / 10,
    _s5 / 3,
    math.sqrt(2 / 3),
    math.sqrt((5 + _s5) / 10),
    (3 + _s5) / 6,
    2 / _s5,
    math.sqrt((3 + _s5) / 6),
    2 * _s2 / 3,
)

PHI = (1 + _s5) / 2


class ConfigError(ValueError):
    """A detector file could not be parsed or violates a hard invariant."""


@dataclass(frozen=True)
class DetectorConfig:
    name: str
    directions: np.ndarray
    default_epsilon: float | None = None
    zero_sum: bool = field(default=True)

    def __post_init__(self):
        d = np.ascontiguousarray(self.directions, dtype=float)
        if d.ndim != 2 or d.shape[1] != 3 or d.shape[0] < 1:
            raise ConfigError(f"directions must have shape (N, 3), got {d.shape}")
        d.setflags(write=False)
        object.__setattr__(self, "directions", d)

    @property
    def count(self) -> int:
        return self.directions.shape[0]

    def __eq__(self, other):
        if not isinstance(other, DetectorConfig):
            return NotImplemented
        return (self.name == other.name
                and self.default_epsilon == other.default_epsilon
                and np.array_equal(self.directions, other.directions))

    def __hash__(self):
        return hash((self.name, self.directions.tobytes()))


def _tetrahedron():
    a = A
    return [(0, 0, 1.0), (a[17], 0, -a[3]), (-a[6], a[12], -a[3]), (-a[6], -a[12], -a[3])]


def _octahedron():
    return [(0, 0, 1.0), (1.0, 0, 0), (0, 1.0, 0), (-1.0, 0, 0), (0, -1.0, 0), (0, 0, -1.0)]


def _cube():
    a = A
    return [
        (0, 0, 1.0), (a[17], 0, a[3]), (-a[6], a[12], a[3]), (-a[6], -a[12], a[3]),
        (a[6], a[12], -a[3]), (a[6], -a[12], -a[3]), (-a[17], 0, -a[3]), (0, 0, -1.0),
    ]


def _icosahedron():
    a = A
    # the published list prints the second vertex's x as "0.a[15]"; only
    # a[15] = 2/sqrt(5) makes it a unit vector
    return [
        (0, 0, 1.0), (a[15], 0, a[5]), (a[2], a[13], a[5]), (-a[10], a[7], a[5]),
        (-a[10], -a[7], a[5]), (a[2], -a[13], a[5]), (a[10], a[7], -a[5]),
        (a[10], -a[7], -a[5]), (-a[2], a[13], -a[5]), (-a[15], 0, -a[5]),
        (-a[2], -a[13], -a[5]), (0, 0, -1.0),
    ]


def _dodecahedron():
    a = A
    return [
        (0, 0, 1.0), (a[9], 0, a[11]), (-a[3], a[8], a[11]), (-a[3], -a[8], a[11]),
        (a[11], a[8], a[3]), (a[11], -a[8], a[3]), (-a[14], a[4], a[3]),
        (a[1], a[16], a[3]), (a[1], -a[16], a[3]), (-a[14], -a[4], a[3]),
        (a[14], a[4], -a[3]), (a[14], -a[4], -a[3]), (-a[11], a[8], -a[3]),
        (-a[1], a[16], -a[3]), (-a[1], -a[16], -a[3]), (-a[11], -a[8], -a[3]),
        (a[3], a[8], -a[11]), (a[3], -a[8], -a[11]), (-a[9], 0, -a[11]),
        (0, 0, -1.0),
    ]


def _double_tetrahedron():
    t = _tetrahedron()
    return t + [tuple(-c for c in v) for v in t]


def _icosidodecahedron():
    # (+-1, 0, 0) and (1/2)(+-1, +-phi, +-1/phi), each with cyclic permutations;
    # (0, 0, 1) comes first to keep the pole-vertex convention
    base = []
    for s in (1.0, -1.0):
        base.append((0.0, 0.0, s))
    for s in (1.0, -1.0):
        base.append((s, 0.0, 0.0))
        base.append((0.0, s, 0.0))
    for sx, sy, sz in itertools.product((1.0, -1.0), repeat=3):
        v = (0.5 * sx, 0.5 * sy * PHI, 0.5 * sz / PHI)
        base.append(v)
        base.append((v[2], v[0], v[1]))
        base.append((v[1], v[2], v[0]))
    return base


_BUILDERS = {
    "tetrahedron": (_tetrahedron, 0.5),
    "octahedron": (_octahedron, 0.58),
    "cube": (_cube, 0.7),
    "icosahedron": (_icosahedron, 0.75),
    "dodecahedron": (_dodecahedron, 0.78),
    "double_tetrahedron": (_double_tetrahedron, 0.7),
    "icosidodecahedron": (_icosidodecahedron, 0.85),
}

BUILTIN_NAMES = tuple(_BUILDERS)
PLATONIC_NAMES = BUILTIN_NAMES[:5]


def builtin(name: str) -> DetectorConfig:
    try:
        build, eps = _BUILDERS[name]
    except KeyError:
        raise KeyError(f"unknown solid {name!r}; choose from {', '.join(BUILTIN_NAMES)}") from None
    return DetectorConfig(name, np.array(build(), dtype=float), eps)


@dataclass
class ValidationReport:
    name: str
    count: int
    norm_deviation: np.ndarray
    sum_norm: float
    duplicates: list[tuple[int, int]]
    unit_tol: float = UNIT_TOL_BUILTIN
    zero_sum_tol: float = ZERO_SUM_TOL

    @property
    def max_norm_deviation(self) -> float:
        return float(np.max(self.norm_deviation)) if self.count else 0.0

    @property
    def bad_norms(self) -> list[int]:
        return [int(i) for i in np.flatnonzero(self.norm_deviation > self.unit_tol)]

    @property
    def zero_sum(self) -> bool:
        """Whether the simplified N(1+eps^2) probability normalization applies."""
        return self.sum_norm <= self.zero_sum_tol

    @property
    def ok(self) -> bool:
        return not self.bad_norms and self.zero_sum and not self.duplicates

    def failures(self) -> list[str]:
        out = []
        for i in self.bad_norms:
            out.append(f"direction {i} has norm {1.0 + self.norm_deviation[i]:.12g} "
                       f"(deviation {self.norm_deviation[i]:.3e})")
        if not self.zero_sum:
            out.append(f"directions do not sum to zero (|sum| = {self.sum_norm:.3e})")
        for i, j in self.duplicates:
            out.append(f"directions {i} and {j} coincide")
        return out

    def lines(self) -> list[str]:
        return [
            f"name={self.name}",
            f"count={self.count}",
            f"max_norm_deviation={self.max_norm_deviation:.3e}",
            f"sum_norm={self.sum_norm:.3e}",
            f"duplicates={len(self.duplicates)}",
            f"zero_sum={self.zero_sum}",
            f"ok={self.ok}",
        ]


def validate(cfg: DetectorConfig, unit_tol: float = UNIT_TOL_BUILTIN,
             dup_tol: float = 1e-9) -> ValidationReport:
    d = cfg.directions
    dev = np.abs(np.linalg.norm(d, axis=1) - 1.0)
    sum_norm = float(np.linalg.norm(d.sum(axis=0)))
    dist = np.linalg.norm(d[:, None, :] - d[None, :, :], axis=-1)
    i, j = np.nonzero(np.triu(dist < dup_tol, k=1))
    return ValidationReport(cfg.name, cfg.count, dev, sum_norm,
                            list(zip(i.tolist(), j.tolist())), unit_tol)


def edge_lengths(directions: np.ndarray, rel_tol: float = 1e-9) -> np.ndarray:
    """Lengths of all nearest-neighbour pairs (each undirected edge once)."""
    d = np.asarray(directions)
    dist = np.linalg.norm(d[:, None, :] - d[None, :, :], axis=-1)
    np.fill_diagonal(dist, np.inf)
    nearest = dist.min()
    i, j = np.nonzero(np.triu(dist <= nearest * (1 + rel_tol), k=1))
    return dist[i, j]


def save(cfg: DetectorConfig, path) -> None:
    eps = "-" if cfg.default_epsilon is None else repr(float(cfg.default_epsilon))
    lines = [f"{cfg.name} {cfg.count} {eps}"]
    # repr round-trips doubles exactly
    lines += [" ".join(repr(float(c)) for c in row) for row in cfg.directions]
    Path(path).write_text("\n".join(lines) + "\n")


def load(path) -> DetectorConfig:
    """Read a detector file.

    Non-unit directions (beyond 1e-9) are an error naming the offending index.
    A nonzero sum only warns and sets ``zero_sum=False``, which makes the
    engine normalize probabilities explicitly.  I/O failures propagate as
    ``OSError``.
    """
    text = Path(path).read_text()
    rows = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            rows.append(line.split())
    if not rows:
        raise ConfigError(f"{path}: empty detector file")
    header = rows[0]
    if len(header) != 3:
        raise ConfigError(f"{path}: header must be 'name N default_epsilon'")
    name = header[0]
    try:
        count = int(header[1])
        eps = None if header[2] == "-" else float(header[2])
        vecs = [[float(x) for x in r] for r in rows[1:]]
    except ValueError as exc:
        raise ConfigError(f"{path}: parse error: {exc}") from exc
    if any(len(v) != 3 for v in vecs):
        raise ConfigError(f"{path}: every direction needs three components")
    if len(vecs) != count:
        raise ConfigError(f"{path}: header declares {count} directions, found {len(vecs)}")
    if count < 2:
        raise ConfigError(f"{path}: need at least two directions")
    cfg = DetectorConfig(name, np.array(vecs, dtype=float), eps)
    report = validate(cfg, unit_tol=UNIT_TOL_FILE)
    if report.bad_norms:
        raise ConfigError(f"{path}: " + "; ".join(report.failures()[:len(report.bad_norms)]))
    if not report.zero_sum:
        warnings.warn(f"{path}: directions sum to {report.sum_norm:.3e}, "
                      "falling back to explicit probability normalization", stacklevel=2)
        cfg = DetectorConfig(name, cfg.directions, eps, zero_sum=False)
    return cfg


def symmetry_rotations(directions, tol: float = 1e-9) -> list[np.ndarray]:
    """All proper rotations that permute the direction set (identity first)."""
    d = np.asarray(directions, dtype=float)
    # a non-degenerate basis among the directions
    base = None
    for i, j, k in itertools.combinations(range(len(d)), 3):
        if abs(np.linalg.det(d[[i, j, k]])) > 0.1:
            base = [i, j, k]
            break
    if base is None:
        raise ValueError("directions do not span 3-space")
    src = d[base]
    found = [np.eye(3)]
    for img in itertools.permutations(range(len(d)), 3):
        m = np.linalg.solve(src, d[list(img)]).T
        if not (np.allclose(m @ m.T, np.eye(3), atol=tol) and np.linalg.det(m) > 0):
            continue
        if np.allclose(m, np.eye(3), atol=tol):
            continue
        moved = d @ m.T
        dist = np.linalg.norm(moved[:, None, :] - d[None, :, :], axis=-1)
        if np.all(dist.min(axis=1) < tol) and not any(np.allclose(m, f, atol=tol) for f in found):
            found.append(m)
    return found
