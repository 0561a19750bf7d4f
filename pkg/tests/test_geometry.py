import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qfractal import oracle
from qfractal.geometry import (DegenerateJump, FuzzyProjector, equilibrium_latitude,
                               fubini_study_distance, jump, jump_batch, jump_weight,
                               latitude_shift)

from conftest import epsilons, random_rotation, random_units, unit_vectors

NORTH = np.array([0.0, 0.0, 1.0])
EAST = np.array([1.0, 0.0, 0.0])


def fp(n, eps):
    return FuzzyProjector(np.asarray(n, dtype=float), eps)


def test_jump_example_matches_oracle_values():
    # frozen from oracle_jump(n=(0,0,1), eps=0.5, r=(1,0,0))
    lam, r_prime = oracle.oracle_jump(NORTH, 0.5, EAST)
    assert lam == pytest.approx(0.3125, abs=1e-15)
    np.testing.assert_allclose(r_prime, [0.6, 0.0, 0.8], atol=1e-15)
    out = jump(fp(NORTH, 0.5), EAST)
    np.testing.assert_allclose(out.new_state, [0.6, 0.0, 0.8], atol=1e-15)
    assert out.weight == pytest.approx(0.3125, abs=1e-15)


@given(unit_vectors(), epsilons)
def test_fixed_point_at_axis(n, eps):
    out = jump(fp(n, eps), n)
    np.testing.assert_allclose(out.new_state, n, atol=1e-12)
    assert out.weight == pytest.approx((1 + eps) ** 2 / 4, abs=1e-15)


@given(unit_vectors(), unit_vectors())
def test_zero_fuzziness_is_identity(n, r):
    out = jump(fp(n, 0.0), r)
    np.testing.assert_allclose(out.new_state, r, atol=1e-12)
    assert out.weight == 0.25


@given(unit_vectors(), unit_vectors())
def test_sharp_projection_forgets_state(n, r):
    if np.dot(n, r) < -1 + 1e-6:
        return
    np.testing.assert_allclose(jump(fp(n, 1.0), r).new_state, n, atol=1e-9)


def test_sharp_antipode_is_degenerate():
    with pytest.raises(DegenerateJump):
        jump(fp(NORTH, 1.0), -NORTH)
    assert jump_weight(fp(NORTH, 1.0), -NORTH) == 0.0


@pytest.mark.parametrize("eps,c,expected", [(0.5, 1.0, 0.5625), (0.5, 0.0, 0.3125)])
def test_weight_values_match_trace(eps, c, expected):
    r = np.array([math.sqrt(1 - c * c), 0.0, c])
    assert jump_weight(fp(NORTH, eps), r) == pytest.approx(expected, abs=1e-15)
    # trace of P(n,eps) P(r) P(n,eps)
    assert float(oracle.transition_trace(NORTH, eps, r)) == pytest.approx(expected, abs=1e-15)


@given(unit_vectors(), unit_vectors(), epsilons)
def test_weight_bounds_and_zero_condition(n, r, eps):
    w = jump_weight(fp(n, eps), r)
    assert (1 - eps) ** 2 / 4 - 1e-15 <= w <= (1 + eps) ** 2 / 4 + 1e-15
    assert w > 0


@given(unit_vectors(), unit_vectors(), epsilons)
@settings(max_examples=300)
def test_jump_geometry(n, r, eps):
    out = jump(fp(n, eps), r).new_state
    assert abs(np.linalg.norm(out) - 1) < 1e-12
    assert abs(np.dot(np.cross(n, r), out)) < 1e-12
    assert np.dot(n, out) >= np.dot(n, r) - 1e-12


def test_monotone_attraction_is_strict_off_axis():
    rng = np.random.default_rng(1)
    n, r = random_units(rng, 5000), random_units(rng, 5000)
    eps = rng.uniform(0.01, 0.99, 5000)
    out, _ = jump_batch(n, eps, r)
    before = np.einsum("ij,ij->i", n, r)
    after = np.einsum("ij,ij->i", n, out)
    off_axis = np.abs(before) < 1 - 1e-6
    assert np.all(after[off_axis] > before[off_axis])


@given(epsilons)
def test_south_pole_fixed(eps):
    np.testing.assert_allclose(jump(fp(NORTH, eps), -NORTH).new_state, -NORTH, atol=1e-12)


def test_rotation_equivariance():
    rng = np.random.default_rng(2)
    for _ in range(200):
        rot = random_rotation(rng)
        n, r = random_units(rng, 2)
        eps = rng.uniform(0, 0.999)
        lhs = jump(fp(rot @ n, eps), rot @ r).new_state
        rhs = rot @ jump(fp(n, eps), r).new_state
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_batch_agrees_with_scalar():
    rng = np.random.default_rng(3)
    n, r = random_units(rng, 50), random_units(rng, 50)
    eps = rng.uniform(0, 1, 50)
    out, w = jump_batch(n, eps, r)
    for i in range(50):
        j = jump(fp(n[i], eps[i]), r[i])
        np.testing.assert_allclose(out[i], j.new_state, atol=1e-15)
        assert w[i] == pytest.approx(j.weight, abs=1e-15)


def test_latitude_shift_examples():
    assert math.degrees(latitude_shift(0.5, math.pi / 2)) == pytest.approx(
        math.degrees(math.acos(0.8)), abs=1e-12)
    assert latitude_shift(0.3, 0.0) == 0.0
    assert latitude_shift(0.3, math.pi) == pytest.approx(math.pi, abs=1e-15)
    theta = np.linspace(0, math.pi, 17)
    np.testing.assert_allclose(latitude_shift(0.0, theta), theta, atol=1e-15)


@given(st.floats(0.0, math.pi), epsilons)
def test_latitude_shift_matches_jump(theta, eps):
    r = np.array([math.sin(theta), 0.0, math.cos(theta)])
    out = jump(fp(NORTH, eps), r).new_state
    shifted = latitude_shift(eps, theta)
    assert 0.0 <= shifted <= theta + 1e-12
    assert shifted == pytest.approx(math.atan2(out[0], out[2]), abs=1e-12)


def test_latitude_shift_strictly_increasing():
    theta = np.linspace(1e-6, math.pi - 1e-6, 20001)
    for eps in (0.0, 0.2, 0.5, 0.9, 0.99):
        assert np.all(np.diff(latitude_shift(eps, theta)) > 0)


def _argmax_shift(eps):
    theta = np.arange(0.0, math.pi, 1e-4)
    return theta[np.argmax(theta - latitude_shift(eps, theta))]


def test_equilibrium_latitude():
    assert math.degrees(equilibrium_latitude(0.5)) == pytest.approx(120.0, abs=1e-12)
    assert math.degrees(equilibrium_latitude(1e-9)) == pytest.approx(90.0, abs=1e-6)
    # grid-search oracle over the latitude map
    assert math.degrees(_argmax_shift(0.95)) == pytest.approx(161.8, abs=0.05)
    assert _argmax_shift(0.95) == pytest.approx(equilibrium_latitude(0.95), abs=1e-4)
    with pytest.raises(ValueError):
        equilibrium_latitude(1.0)


def test_fubini_study_examples():
    r = np.array([0.0, 0.6, 0.8])
    assert fubini_study_distance(r, r) == 0.0
    assert fubini_study_distance(r, -r) == pytest.approx(math.pi / 2, abs=1e-15)
    expected = math.acos(math.sqrt(float(np.trace(
        oracle.sharp_projector(NORTH) @ oracle.sharp_projector(EAST)).real)))
    assert fubini_study_distance(NORTH, EAST) == pytest.approx(expected, abs=1e-15)
    assert expected == pytest.approx(math.pi / 4, abs=1e-15)


@given(unit_vectors(), unit_vectors())
def test_fubini_study_matches_trace_formula(a, b):
    d = fubini_study_distance(a, b)
    assert d == pytest.approx(fubini_study_distance(b, a), abs=1e-15)
    assert math.cos(d) ** 2 == pytest.approx((1 + np.dot(a, b)) / 2, abs=1e-12)


def test_projector_rejects_bad_epsilon():
    with pytest.raises(ValueError):
        fp(NORTH, 1.5)
    with pytest.raises(ValueError):
        fp([0, 0, 2.0], 0.5)
