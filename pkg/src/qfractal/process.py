"""Chaos-game engine for the detector jump process.

Each chain draws its uniforms from its own numpy ``PCG64`` stream, seeded by
``SeedSequence(seed, spawn_key=(chain_id,))``.  Detector selection is
inverse-CDF on one uniform per step, so step ``k`` of a chain always consumes
variate ``k`` of its stream, whatever the block size.  Waiting times between
jumps are not simulated.
"""
from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numba
import numpy as np

from . import __version__
from .detectors import DetectorConfig
from .geometry import DEGENERATE_TOL, DegenerateJump, FuzzyProjector, jump

GENERATOR_ID = "numpy-PCG64/SeedSequence(entropy=seed,spawn_key=(chain_id,))/random-f64/inverse-cdf-1u"
DEFAULT_BURN_IN = 100
BLOCK = 1 << 16
NORTH = (0.0, 0.0, 1.0)


class AllWeightsZero(ArithmeticError):
    pass


class SinkError(RuntimeError):
    """The point consumer failed; ``manifest`` records how far the chain got."""

    def __init__(self, msg, manifest):
        super().__init__(msg)
        self.manifest = manifest


def probabilities(cfg: DetectorConfig, epsilon: float, r) -> np.ndarray:
    """Flip probability of each detector in state ``r``.

    With sum(n) = 0 the normalization is N(1 + eps^2) in closed form; otherwise
    the weights are normalized explicitly.
    """
    r = np.asarray(r, dtype=float)
    e2 = epsilon * epsilon
    w = 1.0 + e2 + 2.0 * epsilon * (cfg.directions @ r)
    if cfg.zero_sum:
        return w / (cfg.count * (1.0 + e2))
    return _normalize(w)


def probabilities_general(cfg: DetectorConfig, epsilon: float, r) -> np.ndarray:
    """Explicit normalization of the jump weights, valid for any config."""
    e2 = epsilon * epsilon
    w = (1.0 + e2 + 2.0 * epsilon * (cfg.directions @ np.asarray(r, dtype=float))) / 4.0
    return _normalize(w)


def _normalize(w):
    w = np.maximum(w, 0.0)
    total = w.sum()
    if total <= 0.0:
        raise AllWeightsZero("every detector has zero flip weight")
    return w / total


def select(p: np.ndarray, u: float) -> int:
    """Inverse CDF: first index whose cumulative probability exceeds ``u``."""
    cdf = np.cumsum(p)
    i = int(np.searchsorted(cdf, u * cdf[-1], side="right"))
    if i >= len(p):
        i = int(np.flatnonzero(p > 0)[-1])
    return i


def step(cfg: DetectorConfig, epsilon: float, r, rng: np.random.Generator):
    """One jump: returns ``(detector_index, new_state)``."""
    p = probabilities(cfg, epsilon, r)
    i = select(p, rng.random())
    return i, jump(FuzzyProjector(cfg.directions[i], epsilon), r).new_state


# --- compiled hot loop ---------------------------------------------------------

@numba.njit(nogil=True, cache=True)
def _chain_kernel(dirs, eps, zero_sum, state, uniforms, out):
    """Run ``len(uniforms)`` jumps from ``state`` (updated in place).

    Writes each post-jump state to ``out`` when ``out`` has rows; returns -1 on
    success or the step index of a degenerate jump.
    """
    n = dirs.shape[0]
    e2 = eps * eps
    one_e2 = 1.0 + e2
    cum = np.empty(n)
    x, y, z = state[0], state[1], state[2]
    emit = out.shape[0] > 0
    for k in range(uniforms.shape[0]):
        total = 0.0
        for i in range(n):
            w = one_e2 + 2.0 * eps * (dirs[i, 0] * x + dirs[i, 1] * y + dirs[i, 2] * z)
            if w < 0.0:
                w = 0.0
            total += w
            cum[i] = total
        if zero_sum:
            target = uniforms[k] * (n * one_e2)
        else:
            target = uniforms[k] * total
        j = n - 1
        for i in range(n):
            if cum[i] > target:
                j = i
                break
        # rounding overshoot: fall back to the last detector with weight
        while j > 0 and cum[j] == cum[j - 1]:
            j -= 1
        nx, ny, nz = dirs[j, 0], dirs[j, 1], dirs[j, 2]
        c = nx * x + ny * y + nz * z
        denom = one_e2 + 2.0 * eps * c
        if denom < 1e-14:
            state[0], state[1], state[2] = x, y, z
            return k
        # same along/across split as geometry.jump
        a = (1.0 - e2) / denom
        b = (c * one_e2 + 2.0 * eps) / denom
        x = b * nx + a * (x - c * nx)
        y = b * ny + a * (y - c * ny)
        z = b * nz + a * (z - c * nz)
        norm = math.sqrt(x * x + y * y + z * z)
        x /= norm
        y /= norm
        z /= norm
        if emit:
            out[k, 0] = x
            out[k, 1] = y
            out[k, 2] = z
    state[0], state[1], state[2] = x, y, z
    return -1


@numba.njit(nogil=True, cache=True)
def _sierpinski_kernel(v, uniforms, out):
    x, y = v[0], v[1]
    for k in range(uniforms.shape[0]):
        i = min(int(uniforms[k] * 3.0), 2)
        x = 0.5 * x + _SIERPINSKI_T[i, 0]
        y = 0.5 * y + _SIERPINSKI_T[i, 1]
        out[k, 0] = x
        out[k, 1] = y
    v[0], v[1] = x, y


# --- chains ---------------------------------------------------------------------

@dataclass(frozen=True)
class ChainSpec:
    config: DetectorConfig
    epsilon: float
    seed: int
    chain_id: int = 0
    burn_in: int = DEFAULT_BURN_IN
    iterations: int = 1_000_000 + DEFAULT_BURN_IN
    initial_state: tuple | str = NORTH

    def __post_init__(self):
        if not self.iterations > self.burn_in >= 0:
            raise ValueError("need iterations > burn_in >= 0")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        if isinstance(self.initial_state, str):
            if self.initial_state != "random-uniform":
                raise ValueError("initial_state must be a vector or 'random-uniform'")
        else:
            object.__setattr__(self, "initial_state", tuple(float(c) for c in self.initial_state))

    @property
    def points(self) -> int:
        return self.iterations - self.burn_in

    def rng(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.chain_id,))
        return np.random.Generator(np.random.PCG64(ss))

    def echo(self) -> dict:
        st = self.initial_state
        return {
            "solid": self.config.name,
            "detectors": self.config.count,
            "zero_sum": self.config.zero_sum,
            "epsilon": repr(self.epsilon),
            "seed": self.seed,
            "chain_id": self.chain_id,
            "burn_in": self.burn_in,
            "iterations": self.iterations,
            "initial_state": st if isinstance(st, str) else ",".join(repr(c) for c in st),
        }


@dataclass
class RunManifest:
    spec: dict
    points_emitted: int = 0
    wall_time: float = 0.0
    generator: str = GENERATOR_ID
    version: str = __version__
    extra: dict = field(default_factory=dict)

    def items(self) -> list[tuple[str, object]]:
        out = list(self.spec.items())
        out += [("generator", self.generator), ("version", self.version),
                ("points_emitted", self.points_emitted), ("wall_time_s", f"{self.wall_time:.3f}")]
        out += list(self.extra.items())
        return out

    def to_text(self) -> str:
        return "".join(f"{k}={v}\n" for k, v in self.items())


def initial_vector(spec: ChainSpec, rng: np.random.Generator) -> np.ndarray:
    if spec.initial_state == "random-uniform":
        u, v = rng.random(2)
        z = 2.0 * u - 1.0
        s = math.sqrt(max(0.0, 1.0 - z * z))
        return np.array([s * math.cos(2 * math.pi * v), s * math.sin(2 * math.pi * v), z])
    r = np.array(spec.initial_state, dtype=float)
    return r / np.linalg.norm(r)


def run_chain(spec: ChainSpec, sink: Callable[[np.ndarray], object],
              block: int = BLOCK) -> RunManifest:
    """Run one chain and hand its post-burn-in states to ``sink`` in blocks.

    ``sink`` receives float arrays of shape ``(k, 3)``; the buffer is reused,
    so copy it if you keep it.  Exactly ``spec.points`` states are emitted.
    """
    t0 = time.perf_counter()
    manifest = RunManifest(spec.echo())
    rng = spec.rng()
    state = initial_vector(spec, rng)
    dirs = spec.config.directions
    zero_sum = bool(spec.config.zero_sum)
    no_out = np.empty((0, 3))

    remaining = spec.burn_in
    while remaining:
        k = min(block, remaining)
        _check(_chain_kernel(dirs, spec.epsilon, zero_sum, state, rng.random(k), no_out))
        remaining -= k

    buf = np.empty((block, 3))
    remaining = spec.points
    while remaining:
        k = min(block, remaining)
        out = buf[:k]
        _check(_chain_kernel(dirs, spec.epsilon, zero_sum, state, rng.random(k), out))
        try:
            sink(out)
        except Exception as exc:
            manifest.wall_time = time.perf_counter() - t0
            raise SinkError(f"sink failed after {manifest.points_emitted} points: {exc}",
                            manifest) from exc
        manifest.points_emitted += k
        remaining -= k
    manifest.wall_time = time.perf_counter() - t0
    return manifest


def _check(code):
    if code >= 0:
        raise DegenerateJump(f"zero-weight jump selected at block step {code}")


def chain_points(spec: ChainSpec) -> np.ndarray:
    """Collect a whole chain into one ``(points, 3)`` array."""
    out = np.empty((spec.points, 3))
    pos = 0

    def sink(block):
        nonlocal pos
        out[pos:pos + len(block)] = block
        pos += len(block)

    run_chain(spec, sink)
    return out


def split_chains(config: DetectorConfig, epsilon: float, seed: int, points: int,
                 chains: int, burn_in: int = DEFAULT_BURN_IN,
                 initial_state=NORTH) -> list[ChainSpec]:
    """Spread ``points`` emitted states over ``chains`` chains (ids 0..chains-1)."""
    if chains < 1 or points < chains:
        raise ValueError("need at least one point per chain")
    base, extra = divmod(points, chains)
    return [ChainSpec(config, epsilon, seed, i, burn_in,
                      burn_in + base + (1 if i < extra else 0), initial_state)
            for i in range(chains)]


def default_workers() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


def run_ensemble(specs: Sequence[ChainSpec], make_accumulator: Callable[[], object],
                 workers: int | None = None):
    """Run independent chains and merge their private accumulators.

    ``make_accumulator()`` must return an object with ``add_points(block)``
    and ``merge(other)``.  The merge is integer addition, so the result does
    not depend on ``workers`` or on scheduling order.  Returns
    ``(merged, manifests)`` with manifests in spec order.
    """
    ids = [s.chain_id for s in specs]
    if len(set(ids)) != len(ids):
        raise ValueError("chain ids must be pairwise distinct")
    merged = make_accumulator()
    if not specs:
        return merged, []

    def work(spec):
        acc = make_accumulator()
        return acc, run_chain(spec, acc.add_points)

    workers = workers or default_workers()
    if workers == 1:
        results = [work(s) for s in specs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, specs))
    for acc, _ in results:
        merged.merge(acc)
    return merged, [m for _, m in results]


# --- classical IFS baseline ------------------------------------------------------

_SIERPINSKI_T = np.array([[1.0, 1.0], [1.0, 0.5], [0.5, 1.0]])


def sierpinski_matrices() -> np.ndarray:
    """The three homogeneous 3x3 affine maps: halve, then translate."""
    out = np.zeros((3, 3, 3))
    for i, (ax, ay) in enumerate(_SIERPINSKI_T):
        out[i] = [[0.5, 0.0, ax], [0.0, 0.5, ay], [0.0, 0.0, 1.0]]
    return out


def sierpinski_step(v, rng: np.random.Generator, homogeneous: bool = False):
    """Apply one of the three maps, each with probability 1/3."""
    i = min(int(rng.random() * 3.0), 2)
    w = sierpinski_matrices()[i] @ np.array([v[0], v[1], 1.0])
    return w if homogeneous else (float(w[0]), float(w[1]))


def sierpinski_points(count: int, seed: int, burn_in: int = DEFAULT_BURN_IN,
                      start=(0.0, 0.0)) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(seed))
    v = np.array(start, dtype=float)
    _sierpinski_kernel(v, rng.random(burn_in), np.empty((burn_in, 2)))
    out = np.empty((count, 2))
    _sierpinski_kernel(v, rng.random(count), out)
    return out


# --- raw point streams --------------------------------------------------------------

class PointWriter:
    """Sink writing states as little-endian float64 triples or ``x y z`` lines."""

    def __init__(self, path, fmt: str = "bin"):
        if fmt not in ("bin", "text"):
            raise ValueError("format must be 'bin' or 'text'")
        self.fmt = fmt
        self._fh = open(path, "wb" if fmt == "bin" else "w")

    def __call__(self, block: np.ndarray):
        if self.fmt == "bin":
            self._fh.write(np.ascontiguousarray(block, dtype="<f8").tobytes())
        else:
            np.savetxt(self._fh, block, fmt="%.17g")

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_points(path, fmt: str = "bin") -> np.ndarray:
    if fmt == "bin":
        return np.fromfile(path, dtype="<f8").reshape(-1, 3)
    if fmt == "text":
        return np.loadtxt(path, ndmin=2)
    raise ValueError("format must be 'bin' or 'text'")
