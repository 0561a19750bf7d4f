"""Complex 2x2 matrix formulation of the same physics.

Everything here works on numpy arrays of shape ``(..., 2, 2)`` so that a whole
batch of triples can be checked at once.  Nothing in this module calls into
:mod:`qfractal.geometry`; it is kept separate so the two routes can be compared.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

HERMITIAN_TOL = 1e-12
ZERO_PRODUCT_TOL = 1e-14

_PAULI = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)


class ZeroProduct(ArithmeticError):
    """P(n, eps) P(r) P(n, eps) vanished; no post-jump state exists."""


class NotHermitian(ValueError):
    pass


def pauli(mu: int) -> np.ndarray:
    """sigma_0 = I, sigma_1..3 = Pauli x, y, z."""
    if mu not in (0, 1, 2, 3):
        raise IndexError(f"Pauli index must be 0..3, got {mu}")
    return _PAULI[mu].copy()


def sigma(n) -> np.ndarray:
    """n_1 sigma_1 + n_2 sigma_2 + n_3 sigma_3 (batched over leading axes)."""
    n = np.asarray(n, dtype=float)
    return np.einsum("...i,ijk->...jk", n, _PAULI[1:])


def _eye(shape=()) -> np.ndarray:
    return np.broadcast_to(_PAULI[0], tuple(shape) + (2, 2)).astype(complex)


def sharp_projector(n) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    return 0.5 * (_eye(n.shape[:-1]) + sigma(n))


def fuzzy_projector(n, epsilon) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    eps = np.asarray(epsilon, dtype=float)[..., None, None]
    return 0.5 * (_eye(n.shape[:-1]) + eps * sigma(n))


def trace(m) -> np.ndarray:
    return np.trace(m, axis1=-2, axis2=-1)


def dagger(m) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def is_hermitian(m, tol: float = HERMITIAN_TOL) -> bool:
    return bool(np.all(np.abs(m - dagger(m)) <= tol))


def bloch_components(m) -> np.ndarray:
    """Tr(M sigma_i) for i = 1, 2, 3; imaginary parts must vanish."""
    comps = np.einsum("...jk,ikj->...i", m, _PAULI[1:])
    if np.any(np.abs(comps.imag) > HERMITIAN_TOL):
        raise NotHermitian("Bloch components have non-vanishing imaginary part")
    return comps.real


def oracle_jump(n, epsilon, r) -> tuple[np.ndarray, np.ndarray]:
    """Factor P(n,eps) P(r) P(n,eps) as lambda P(r').

    Works on single triples or batches; returns ``(lambda, r_prime)``.
    """
    pe = fuzzy_projector(n, epsilon)
    prod = pe @ sharp_projector(r) @ pe
    lam = trace(prod)
    if np.any(np.abs(lam.imag) > HERMITIAN_TOL):
        raise NotHermitian("trace of the jump product is not real")
    lam = lam.real
    if np.any(lam <= ZERO_PRODUCT_TOL):
        raise ZeroProduct("P(n,eps) P(r) P(n,eps) is zero")
    normalized = prod / lam[..., None, None]
    # normalized - I/2 = sigma(r')/2, whose Tr(. sigma_i) is r'_i
    r_prime = bloch_components(normalized - 0.5 * _eye(lam.shape))
    return lam, r_prime


def transition_trace(n, epsilon, r) -> np.ndarray:
    """Tr(P(r) P(n,eps)^2 P(r)), the unnormalized flip probability."""
    pr = sharp_projector(r)
    pe = fuzzy_projector(n, epsilon)
    return trace(pr @ pe @ pe @ pr).real


def composition_identity_check(n, epsilon: float, tol: float = 1e-12) -> tuple[float, float]:
    """P(n,eps)^2 = ((1+eps^2)/2) P(n, 2eps/(1+eps^2)).

    Returns ``(scale, eps_out)`` after asserting the matrix identity.
    """
    scale = (1.0 + epsilon ** 2) / 2.0
    eps_out = 2.0 * epsilon / (1.0 + epsilon ** 2)
    p = fuzzy_projector(n, epsilon)
    lhs = p @ p
    rhs = scale * fuzzy_projector(n, eps_out)
    dev = float(np.max(np.abs(lhs - rhs)))
    if dev > tol:
        raise AssertionError(f"composition identity off by {dev:.3e}")
    return scale, eps_out


def projector_square_sum(directions, epsilon) -> np.ndarray:
    """Lambda = sum_i P(n_i, eps)^2."""
    p = fuzzy_projector(directions, epsilon)
    return np.sum(p @ p, axis=0)


# --- Minkowski correspondence -------------------------------------------------

@dataclass(frozen=True)
class FourVector:
    p0: float
    p1: float
    p2: float
    p3: float

    def as_array(self) -> np.ndarray:
        return np.array([self.p0, self.p1, self.p2, self.p3])

    def minkowski_square(self) -> float:
        return self.p0 ** 2 - self.p1 ** 2 - self.p2 ** 2 - self.p3 ** 2


def slash(p: FourVector) -> np.ndarray:
    """p^mu sigma_mu."""
    return np.einsum("i,ijk->jk", p.as_array().astype(complex), _PAULI)


def unslash(m) -> FourVector:
    m = np.asarray(m, dtype=complex)
    if not is_hermitian(m):
        raise NotHermitian("unslash needs a Hermitian matrix")
    # Tr(sigma_mu sigma_nu) = 2 delta_mu_nu
    comps = 0.5 * np.einsum("jk,ikj->i", m, _PAULI).real
    return FourVector(*map(float, comps))


def det2(m) -> complex:
    m = np.asarray(m)
    return m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]


@dataclass(frozen=True)
class BoostParams:
    direction: np.ndarray
    beta: float
    alpha: float

    @classmethod
    def from_epsilon(cls, n, epsilon: float) -> "BoostParams":
        """Boost equivalent to the fuzzy projection: alpha = 2 artanh(eps)."""
        alpha = 2.0 * math.atanh(epsilon)
        return cls(np.asarray(n, dtype=float), math.tanh(alpha), alpha)


def boost_matrix(b: BoostParams) -> np.ndarray:
    """4x4 Lorentz boost of rapidity ``alpha`` along ``direction``."""
    n = b.direction
    ch, sh = math.cosh(b.alpha), math.sinh(b.alpha)
    out = np.eye(4)
    out[0, 0] = ch
    out[0, 1:] = sh * n
    out[1:, 0] = sh * n
    out[1:, 1:] += (ch - 1.0) * np.outer(n, n)
    return out


def spinor_boost(n, alpha: float) -> np.ndarray:
    """exp(alpha sigma(n) / 2) = cosh(alpha/2) I + sinh(alpha/2) sigma(n)."""
    return math.cosh(alpha / 2.0) * _eye() + math.sinh(alpha / 2.0) * sigma(n)


def boost_null_direction(n, epsilon: float, r) -> np.ndarray:
    """Boost the null vector (1, r) along n and return its spatial direction."""
    b = BoostParams.from_epsilon(n, epsilon)
    y = boost_matrix(b) @ np.concatenate(([1.0], np.asarray(r, dtype=float)))
    return y[1:] / y[0]


def boost_equivalence(n, epsilon: float, r=None, tol: float = 1e-10) -> float:
    """Check that P(n,eps) is a positive multiple of a spinor boost.

    Returns the max entrywise deviation between P(n,eps) and
    exp(alpha sigma(n)/2) once both are scaled to unit trace.  If ``r`` is
    given, also checks that boosting the null vector (1, r) and projecting
    back to the sphere reproduces the conjugation action P(n,eps) P(r) P(n,eps),
    raising AssertionError beyond ``tol``.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    b = BoostParams.from_epsilon(n, epsilon)
    p = fuzzy_projector(n, epsilon)
    m = spinor_boost(n, b.alpha)
    dev = float(np.max(np.abs(p / trace(p) - m / trace(m))))
    if r is not None:
        y = boost_matrix(b) @ np.concatenate(([1.0], np.asarray(r, dtype=float)))
        r_boost = boost_null_direction(n, epsilon, r)
        _, r_oracle = oracle_jump(n, epsilon, r)
        # also confirm M slash(x) M^dagger = slash(boost x)
        x = FourVector(1.0, *map(float, r))
        y_spinor = unslash(m @ slash(x) @ dagger(m)).as_array()
        dev_vec = max(float(np.max(np.abs(r_boost - r_oracle))),
                      float(np.max(np.abs(y_spinor - y))) / y[0])
        if dev_vec > tol:
            raise AssertionError(f"boost action deviates by {dev_vec:.3e}")
    return dev
