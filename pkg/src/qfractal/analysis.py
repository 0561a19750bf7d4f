"""Quantitative checks on the attractors and the averaged dynamics.

* box-counting dimension on the sphere, using geodesic subdivision of the
  octahedron so cells at one level have comparable areas;
* Lindblad (Liouville) evolution of the Bloch vector with a fixed-step RK4;
* per-detector Fubini-Study contraction ratios.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from . import oracle
from .detectors import DetectorConfig
from .geometry import fubini_study_distance_batch, jump_batch

DEFAULT_LEVELS = tuple(range(3, 10))
MIN_POINTS = 10**6
SATURATION = 3.0
RESIDUAL_LIMIT = 0.08
DEFAULT_ORIENTATIONS = 8


class DegenerateFit(RuntimeError):
    def __init__(self, msg, estimate):
        super().__init__(msg)
        self.estimate = estimate


class IntegrationUnstable(RuntimeError):
    pass


# --- box counting ----------------------------------------------------------------

@numba.njit(cache=True, inline="always")
def _mid(ax, ay, az, bx, by, bz):
    x, y, z = ax + bx, ay + by, az + bz
    s = math.sqrt(x * x + y * y + z * z)
    return x / s, y / s, z / s


@numba.njit(cache=True, inline="always")
def _side(ax, ay, az, bx, by, bz, px, py, pz):
    # p . (a x b)
    return px * (ay * bz - az * by) + py * (az * bx - ax * bz) + pz * (ax * by - ay * bx)


@numba.njit(nogil=True, cache=True)
def octahedral_cells(points, level):
    """Cell id of each point in the level-``level`` geodesic octahedron mesh.

    An id is ``face * 4**level + path`` with ``path`` the base-4 child digits,
    so the id one level up is ``id >> 2``.
    """
    m = points.shape[0]
    out = np.empty(m, dtype=np.int64)
    for k in range(m):
        px, py, pz = points[k, 0], points[k, 1], points[k, 2]
        sx = 1.0 if px >= 0.0 else -1.0
        sy = 1.0 if py >= 0.0 else -1.0
        sz = 1.0 if pz >= 0.0 else -1.0
        face = (0 if sx > 0 else 1) + (0 if sy > 0 else 2) + (0 if sz > 0 else 4)
        ax, ay, az = sx, 0.0, 0.0
        bx, by, bz = 0.0, sy, 0.0
        cx, cy, cz = 0.0, 0.0, sz
        cell = face
        for _ in range(level):
            abx, aby, abz = _mid(ax, ay, az, bx, by, bz)
            bcx, bcy, bcz = _mid(bx, by, bz, cx, cy, cz)
            cax, cay, caz = _mid(cx, cy, cz, ax, ay, az)
            ref = _side(abx, aby, abz, cax, cay, caz, ax, ay, az)
            if _side(abx, aby, abz, cax, cay, caz, px, py, pz) * ref > 0.0:
                child = 0
                bx, by, bz = abx, aby, abz
                cx, cy, cz = cax, cay, caz
            else:
                ref = _side(abx, aby, abz, bcx, bcy, bcz, bx, by, bz)
                if _side(abx, aby, abz, bcx, bcy, bcz, px, py, pz) * ref > 0.0:
                    child = 1
                    ax, ay, az = abx, aby, abz
                    cx, cy, cz = bcx, bcy, bcz
                else:
                    ref = _side(bcx, bcy, bcz, cax, cay, caz, cx, cy, cz)
                    if _side(bcx, bcy, bcz, cax, cay, caz, px, py, pz) * ref > 0.0:
                        child = 2
                        ax, ay, az = cax, cay, caz
                        bx, by, bz = bcx, bcy, bcz
                    else:
                        child = 3
                        ax, ay, az = abx, aby, abz
                        bx, by, bz = bcx, bcy, bcz
                        cx, cy, cz = cax, cay, caz
            cell = cell * 4 + child
        out[k] = cell
    return out


def cell_size(level: int) -> float:
    """Nominal angular size of a level-``level`` cell (octant edge / 2**level)."""
    return (math.pi / 2.0) / 2**level


@dataclass
class DimensionEstimate:
    scales: np.ndarray
    counts: np.ndarray
    levels: np.ndarray
    used: np.ndarray
    slope: float
    intercept: float
    residual: float
    points: int
    epsilon: float | None = None
    solid: str | None = None
    decades: float = math.nan
    occupancy: np.ndarray = field(default=None, repr=False)

    @property
    def dimension(self) -> float:
        return self.slope

    def rows(self) -> list[tuple]:
        return [(int(l), float(s), float(c), bool(u))
                for l, s, c, u in zip(self.levels, self.scales, self.counts, self.used)]


def _fit(scales, counts, levels, npoints, drop_saturated=2, min_scales=4,
         residual_limit=RESIDUAL_LIMIT, **meta) -> DimensionEstimate:
    scales = np.asarray(scales, dtype=float)
    counts = np.asarray(counts, dtype=float)
    occupancy = npoints / np.maximum(counts, 1)
    used = np.ones(len(counts), dtype=bool)
    # drop up to the `drop_saturated` finest levels whose cells average < 3 points
    for i in range(len(counts) - 1, max(len(counts) - 1 - drop_saturated, -1), -1):
        if occupancy[i] < SATURATION:
            used[i] = False
        else:
            break
    if used.sum() < min_scales:
        raise ValueError(f"only {used.sum()} usable scales; need {min_scales}")
    span = math.log10(scales[used].max() / scales[used].min())
    x = np.log(1.0 / scales[used])
    y = np.log(counts[used])
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    est = DimensionEstimate(scales, counts, np.asarray(levels), used, float(slope),
                            float(intercept), resid, int(npoints), decades=span,
                            occupancy=occupancy, **meta)
    if resid > residual_limit:
        raise DegenerateFit(f"box-counting fit residual {resid:.3f} exceeds {residual_limit}", est)
    return est


def _grid_rotations(count: int, seed: int) -> list[np.ndarray]:
    """Identity followed by ``count - 1`` seeded uniform random rotations."""
    rng = np.random.default_rng(seed)
    out = [np.eye(3)]
    while len(out) < count:
        q, r = np.linalg.qr(rng.standard_normal((3, 3)))
        q = q * np.sign(np.diag(r))
        if np.linalg.det(q) < 0:
            q[:, 0] = -q[:, 0]
        out.append(q)
    return out


def box_counting_dimension(points, levels=DEFAULT_LEVELS, min_points: int = MIN_POINTS,
                           residual_limit: float = RESIDUAL_LIMIT,
                           orientations: int = DEFAULT_ORIENTATIONS,
                           grid_seed: int = 0, **meta) -> DimensionEstimate:
    """Fit ln N(delta) against ln(1/delta) over geodesic octahedron cells.

    ``points`` is an ``(m, 3)`` array of unit vectors.  The finest one or two
    levels are left out of the fit when they average fewer than three points
    per occupied cell.  With ``orientations > 1`` the cell grid is also laid
    down in that many seeded random orientations and ln N is averaged per
    level, which damps the dependence on how the grid meets a sparse set;
    ``orientations=1`` uses the fixed axis-aligned grid only.
    """
    points = np.ascontiguousarray(points, dtype=float)
    if len(points) < min_points:
        raise ValueError(f"need at least {min_points} points, got {len(points)}")
    levels = sorted(levels)
    if len(levels) < 4 or math.log10(2 ** (levels[-1] - levels[0])) < 1.5:
        raise ValueError("need at least 4 levels spanning 1.5 decades")
    if orientations < 1:
        raise ValueError("orientations must be at least 1")
    finest = levels[-1]
    log_counts = np.zeros(len(levels))
    for rot in _grid_rotations(orientations, grid_seed):
        pts = points if orientations == 1 else np.ascontiguousarray(points @ rot.T)
        ids = np.unique(octahedral_cells(pts, finest))
        log_counts += np.log([len(np.unique(ids >> (2 * (finest - lv)))) for lv in levels])
    counts = np.exp(log_counts / orientations)
    scales = [cell_size(lv) for lv in levels]
    return _fit(scales, counts, levels, len(points), residual_limit=residual_limit, **meta)


def planar_box_counting_dimension(points, levels=tuple(range(2, 11)), bounds=None,
                                  min_points: int = MIN_POINTS,
                                  residual_limit: float = RESIDUAL_LIMIT) -> DimensionEstimate:
    """Square-grid box counting for 2-D point clouds (the IFS baseline).

    ``bounds`` is ``(x0, y0, side)``; defaults to the bounding square of the
    data.  Level ``k`` uses boxes of side ``side / 2**k``.
    """
    pts = np.asarray(points, dtype=float)
    if len(pts) < min_points:
        raise ValueError(f"need at least {min_points} points, got {len(pts)}")
    if bounds is None:
        lo = pts.min(axis=0)
        side = float((pts.max(axis=0) - lo).max())
        x0, y0 = lo
    else:
        x0, y0, side = bounds
    levels = sorted(levels)
    finest = levels[-1]
    g = 2**finest
    ij = np.floor((pts - (x0, y0)) / side * g).astype(np.int64)
    ij = np.clip(ij, 0, g - 1)
    counts = []
    for lv in levels:
        sh = finest - lv
        key = (ij[:, 0] >> sh) * (2**lv) + (ij[:, 1] >> sh)
        counts.append(len(np.unique(key)))
    scales = [side / 2**lv for lv in levels]
    return _fit(scales, counts, levels, len(pts), residual_limit=residual_limit)


def uniform_sphere(count: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((count, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def great_circle(count: int, seed: int, normal=None) -> np.ndarray:
    """Points spread uniformly on the great circle orthogonal to ``normal``."""
    rng = np.random.default_rng(seed)
    if normal is None:
        normal = rng.standard_normal(3)
    normal = np.asarray(normal, dtype=float) / np.linalg.norm(normal)
    u = np.cross(normal, [1.0, 0.0, 0.0])
    if np.linalg.norm(u) < 0.1:
        u = np.cross(normal, [0.0, 1.0, 0.0])
    u /= np.linalg.norm(u)
    w = np.cross(normal, u)
    t = rng.uniform(0.0, 2.0 * np.pi, count)
    return np.cos(t)[:, None] * u + np.sin(t)[:, None] * w


# --- Liouville / Lindblad evolution ---------------------------------------------

@dataclass(frozen=True)
class LiouvilleParams:
    kappa: float = 1.0
    epsilon: float = 0.5
    m0: tuple = (1.0, 0.0, 0.0)
    t_max: float = 3.0
    dt: float = 1e-3
    output_every: int = 1

    def __post_init__(self):
        if self.kappa <= 0 or self.dt <= 0:
            raise ValueError("kappa and dt must be positive")
        if np.linalg.norm(self.m0) > 1.0 + 1e-12:
            raise ValueError("|m0| must not exceed 1")


@dataclass
class LiouvilleResult:
    times: np.ndarray
    bloch: np.ndarray
    trace_deviation: float
    hermiticity_deviation: float
    min_eigenvalue: float
    closed_form_rate: float | None
    measured_rate: float

    def closed_form(self) -> np.ndarray | None:
        if self.closed_form_rate is None:
            return None
        return np.exp(-self.closed_form_rate * self.times)[:, None] * self.bloch[0]


def lindblad_rhs(rho, ops, ops_sq_sum, kappa):
    """kappa (sum_i L_i rho L_i - {sum_i L_i^2, rho} / 2) for Hermitian L_i."""
    jump_term = np.einsum("nij,jk,nkl->il", ops, rho, ops)
    return kappa * (jump_term - 0.5 * (ops_sq_sum @ rho + rho @ ops_sq_sum))


def lindblad_bloch_evolution(p: LiouvilleParams, cfg: DetectorConfig) -> LiouvilleResult:
    """Integrate the averaged (Liouville) equation with fixed-step RK4.

    The closed-form decay ``exp(-N kappa eps^2 t / 3)`` is reported alongside
    when the configuration sums to zero; the measured rate is the
    least-squares slope of ``-ln |m(t)|``.
    """
    ops = oracle.fuzzy_projector(cfg.directions, p.epsilon)
    ops_sq_sum = np.sum(ops @ ops, axis=0)
    rho = 0.5 * (oracle.pauli(0) + oracle.sigma(np.asarray(p.m0, dtype=float)))
    steps = int(round(p.t_max / p.dt))
    h = p.dt
    norm0 = float(np.linalg.norm(p.m0))
    times, blochs = [0.0], [oracle.bloch_components(rho)]
    tr_dev = herm_dev = 0.0
    min_eig = float(np.linalg.eigvalsh(rho).min())

    def f(r):
        return lindblad_rhs(r, ops, ops_sq_sum, p.kappa)

    for k in range(1, steps + 1):
        k1 = f(rho)
        k2 = f(rho + 0.5 * h * k1)
        k3 = f(rho + 0.5 * h * k2)
        k4 = f(rho + h * k3)
        rho = rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        herm_dev = max(herm_dev, float(np.max(np.abs(rho - oracle.dagger(rho)))))
        tr_dev = max(tr_dev, abs(complex(oracle.trace(rho)) - 1.0))
        m = oracle.bloch_components(0.5 * (rho + oracle.dagger(rho)))
        if not np.all(np.isfinite(m)) or np.linalg.norm(m) > norm0 * (1 + 1e-9) + 1e-12:
            raise IntegrationUnstable(f"Bloch norm grew at step {k}; reduce dt")
        min_eig = min(min_eig, float(np.linalg.eigvalsh(0.5 * (rho + oracle.dagger(rho))).min()))
        if k % p.output_every == 0:
            times.append(k * h)
            blochs.append(m)

    times = np.array(times)
    bloch = np.array(blochs)
    norms = np.linalg.norm(bloch, axis=1)
    rate = float("nan")
    if norm0 > 0 and np.all(norms > 0):
        rate = -float(np.polyfit(times, np.log(norms), 1)[0])
    closed = None
    if validate_zero_sum(cfg):
        closed = cfg.count * p.kappa * p.epsilon ** 2 / 3.0
    return LiouvilleResult(times, bloch, tr_dev, herm_dev, min_eig, closed, rate)


def validate_zero_sum(cfg: DetectorConfig) -> bool:
    return bool(cfg.zero_sum and np.linalg.norm(cfg.directions.sum(axis=0)) <= 1e-12)


# --- contraction statistics ------------------------------------------------------

@dataclass
class ContractionStats:
    epsilon: float
    ratios: np.ndarray  # shape (N, samples)

    def summary(self) -> list[tuple[int, float, float, float, float]]:
        """Per detector: (index, min, median, max, fraction above 1)."""
        out = []
        for i, r in enumerate(self.ratios):
            out.append((i, float(r.min()), float(np.median(r)), float(r.max()),
                        float(np.mean(r > 1.0))))
        return out

    @property
    def expands_somewhere(self) -> bool:
        return bool(np.all(self.ratios.max(axis=1) > 1.0))

    @property
    def contracts_somewhere(self) -> bool:
        return bool(np.all(self.ratios.min(axis=1) < 1.0))


def contraction_ratios(n, epsilon: float, r, s) -> np.ndarray:
    """d_FS(F(r), F(s)) / d_FS(r, s) for the map of detector axis ``n``."""
    n = np.broadcast_to(np.asarray(n, dtype=float), np.shape(r))
    eps = np.full(np.shape(r)[:-1], float(epsilon))
    fr, _ = jump_batch(n, eps, r)
    fs, _ = jump_batch(n, eps, s)
    return fubini_study_distance_batch(fr, fs) / fubini_study_distance_batch(r, s)


def contraction_statistics(cfg: DetectorConfig, epsilon: float, samples: int = 10**4,
                           seed: int = 0, max_separation: float | None = None) -> ContractionStats:
    """Fubini-Study distance ratios over random state pairs, per detector.

    Pairs are independent uniform states, or, with ``max_separation``, a
    uniform state and a partner at a uniform angle up to that separation.
    """
    if samples < 10**4:
        raise ValueError("need at least 10^4 sample pairs")
    rng = np.random.default_rng(seed)
    r = uniform_sphere(samples, rng.integers(2**63))
    if max_separation is None:
        s = uniform_sphere(samples, rng.integers(2**63))
    else:
        t = rng.standard_normal((samples, 3))
        t -= np.einsum("ij,ij->i", t, r)[:, None] * r
        t /= np.linalg.norm(t, axis=1, keepdims=True)
        ang = rng.uniform(0.0, max_separation, samples)
        s = np.cos(ang)[:, None] * r + np.sin(ang)[:, None] * t
    ok = fubini_study_distance_batch(r, s) > 1e-9
    r, s = r[ok], s[ok]
    ratios = np.array([contraction_ratios(n, epsilon, r, s) for n in cfg.directions])
    return ContractionStats(epsilon, ratios)


# --- rotation invariance of the attractor ----------------------------------------

def equirect_counts(points, rows: int = 12, cols: int = 24) -> np.ndarray:
    p = np.asarray(points, dtype=float)
    colat = np.arccos(np.clip(p[:, 2], -1.0, 1.0))
    lon = np.arctan2(p[:, 1], p[:, 0])
    i = np.minimum((colat / np.pi * rows).astype(np.int64), rows - 1)
    j = np.minimum(((lon + np.pi) / (2 * np.pi) * cols).astype(np.int64), cols - 1)
    return np.bincount(i * cols + j, minlength=rows * cols)


@dataclass
class SymmetryTest:
    statistics: np.ndarray
    dofs: np.ndarray
    pvalues: np.ndarray
    alpha: float

    @property
    def passed(self) -> bool:
        # Bonferroni over the group elements
        return bool(np.all(self.pvalues >= self.alpha / len(self.pvalues)))


def rotation_invariance_test(points_a, points_b, rotations, alpha: float = 0.01,
                             rows: int = 12, cols: int = 24) -> SymmetryTest:
    """Two-sample chi-square of hist(A) against hist(R B) for each rotation R.

    ``points_a`` and ``points_b`` must come from independent chains and be
    thinned enough that successive points are effectively uncorrelated.
    """
    from scipy import stats

    ha = equirect_counts(points_a, rows, cols).astype(float)
    na = ha.sum()
    chis, dofs, pvals = [], [], []
    for rot in rotations:
        hb = equirect_counts(np.asarray(points_b) @ np.asarray(rot).T, rows, cols).astype(float)
        nb = hb.sum()
        k1, k2 = math.sqrt(nb / na), math.sqrt(na / nb)
        used = (ha + hb) > 0
        chi = float(np.sum((k1 * ha[used] - k2 * hb[used]) ** 2 / (ha[used] + hb[used])))
        dof = int(used.sum()) - 1
        chis.append(chi)
        dofs.append(dof)
        pvals.append(float(stats.chi2.sf(chi, dof)))
    return SymmetryTest(np.array(chis), np.array(dofs), np.array(pvals), alpha)


class Thinner:
    """Sink adaptor keeping every ``k``-th point of a chain."""

    def __init__(self, k: int, capacity: int):
        self.k = k
        self.points = np.empty((capacity, 3))
        self.size = 0
        self._phase = 0

    def __call__(self, block):
        start = (-self._phase) % self.k
        kept = block[start::self.k]
        take = min(len(kept), len(self.points) - self.size)
        self.points[self.size:self.size + take] = kept[:take]
        self.size += take
        self._phase = (self._phase + len(block)) % self.k
