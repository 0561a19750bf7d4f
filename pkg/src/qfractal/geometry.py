"""Closed-form jump map on the Bloch sphere.

States, detector axes and Bloch vectors are all plain unit 3-vectors
(numpy arrays of shape ``(3,)``).  Angles are radians throughout this module.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEGENERATE_TOL = 1e-14


class DegenerateJump(ArithmeticError):
    """Raised for the zero-weight antipodal jump (epsilon = 1, r = -n)."""


def unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


@dataclass(frozen=True)
class FuzzyProjector:
    axis: np.ndarray
    epsilon: float

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        axis = np.asarray(self.axis, dtype=float)
        if abs(np.linalg.norm(axis) - 1.0) > 1e-12:
            raise ValueError("detector axis must be a unit vector")
        object.__setattr__(self, "axis", axis)


@dataclass(frozen=True)
class JumpOutcome:
    new_state: np.ndarray
    weight: float


def jump_weight(p: FuzzyProjector, r) -> float:
    """lambda(eps, n, r) = (1 + eps^2 + 2 eps n.r) / 4."""
    eps = p.epsilon
    c = float(np.dot(p.axis, r))
    return (1.0 + eps * eps + 2.0 * eps * c) / 4.0


def jump(p: FuzzyProjector, r) -> JumpOutcome:
    """Apply the fuzzy projection ``p`` to the pure state ``r``.

    The result is re-normalized so repeated iteration does not drift off the
    sphere.
    """
    r = np.asarray(r, dtype=float)
    n = p.axis
    eps = p.epsilon
    c = float(np.dot(n, r))
    denom = 1.0 + eps * eps + 2.0 * eps * c
    if denom < DEGENERATE_TOL:
        raise DegenerateJump(f"antipodal sharp jump: n.r={c}, eps={eps}")
    # split r along and across n: the cancellation near r = -n, eps -> 1 then
    # stays in the n component and cannot tilt the result off the axis
    r_new = ((c * (1.0 + eps * eps) + 2.0 * eps) * n + (1.0 - eps * eps) * (r - c * n)) / denom
    r_new = r_new / np.linalg.norm(r_new)
    return JumpOutcome(new_state=r_new, weight=denom / 4.0)


def jump_batch(n, eps, r) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized jump over rows of ``n`` and ``r`` (shape ``(m, 3)``).

    Returns ``(new_states, weights)``; degenerate rows come back as NaN.
    """
    n = np.asarray(n, dtype=float)
    r = np.asarray(r, dtype=float)
    eps = np.asarray(eps, dtype=float)
    c = np.einsum("...i,...i->...", n, r)
    denom = 1.0 + eps * eps + 2.0 * eps * c
    with np.errstate(invalid="ignore", divide="ignore"):
        along = c * (1.0 + eps * eps) + 2.0 * eps
        out = (along[..., None] * n
               + (1.0 - eps * eps)[..., None] * (r - c[..., None] * n)) / denom[..., None]
        out /= np.linalg.norm(out, axis=-1, keepdims=True)
    out[denom < DEGENERATE_TOL] = np.nan
    return out, denom / 4.0


def latitude_shift(epsilon: float, theta):
    """New polar angle after a jump toward an axis at polar angle 0.

    Evaluated through ``atan2`` of the closed-form sine and cosine, which keeps
    full precision near both poles.
    """
    theta = np.asarray(theta, dtype=float)
    eps = epsilon
    c = np.cos(theta)
    s = np.sin(theta)
    num_cos = (1.0 - eps * eps) * c + 2.0 * eps * (1.0 + eps * c)
    num_sin = (1.0 - eps * eps) * s
    out = np.arctan2(num_sin, num_cos)
    return float(out) if out.ndim == 0 else out


def equilibrium_latitude(epsilon: float) -> float:
    """Polar angle where shrinking of meridians turns into stretching.

    It is where ``theta - theta'(theta)`` peaks, at ``z = -epsilon``.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    return math.acos(-epsilon)


def fubini_study_distance(r1, r2) -> float:
    """arccos(sqrt(Tr P(r1) P(r2))), i.e. half the angle between r1 and r2.

    Computed as the half-angle via ``atan2`` so small separations keep full
    relative precision.
    """
    r1 = np.asarray(r1, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    return 0.5 * math.atan2(float(np.linalg.norm(np.cross(r1, r2))), float(np.dot(r1, r2)))


def fubini_study_distance_batch(r1, r2) -> np.ndarray:
    cross = np.linalg.norm(np.cross(r1, r2), axis=-1)
    return 0.5 * np.arctan2(cross, np.einsum("...i,...i->...", r1, r2))
