import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from orlicz_eigen.grid import Grid, GridFunction, gradient_magnitude, integrate, random_test_function
from orlicz_eigen.lebesgue import (
    ExponentField,
    NormBracketError,
    holder_pairing,
    luxemburg_norm,
    modular,
    orlicz_luxemburg_norm,
    orlicz_modular,
)
from orlicz_eigen.young import YoungFunctionSpec as Y, indices


def variable_exponent(grid, lo, hi, seed=0):
    rng = np.random.default_rng(seed)
    coords = grid.coordinates()
    phase = rng.uniform(0, 2 * np.pi, len(coords))
    s = sum(np.sin(3 * c + p) for c, p in zip(coords, phase)) / len(coords)
    return ExponentField(lo + (hi - lo) * 0.5 * (1 + s))


def test_exponent_field():
    g = Grid.box(2, 5)
    q = variable_exponent(g, 1.4, 3.0)
    assert q.lo == q.values.min() and q.hi == q.values.max() and not q.is_constant
    np.testing.assert_allclose(q.conjugate().values, q.values / (q.values - 1))
    with pytest.raises(ValueError):
        ExponentField(np.array([2.0, 1.0]))


def test_modular_examples():
    g = Grid.box(2, 9)
    q = variable_exponent(g, 1.5, 2.5)
    assert modular(GridFunction.zeros(g), q) == 0.0
    assert modular(GridFunction.constant(g, 1.0), q) == pytest.approx(1.0, abs=1e-12)
    assert modular(GridFunction.constant(g, 2.0), ExponentField.constant(g, 2.0)) == pytest.approx(4.0)


def test_luxemburg_examples():
    g = Grid.box(3, 6)
    assert luxemburg_norm(GridFunction.zeros(g), ExponentField.constant(g, 2.0)) == 0.0
    for c, p in [(3.0, 2.0), (-0.2, 1.3), (1e5, 4.0)]:
        assert luxemburg_norm(GridFunction.constant(g, c), ExponentField.constant(g, p)) == pytest.approx(
            abs(c), rel=1e-9
        )
    q = variable_exponent(g, 1.2, 3.5)
    assert luxemburg_norm(GridFunction.constant(g, 1.0), q) == pytest.approx(1.0, rel=1e-9)


def test_luxemburg_non_unit_volume():
    g = Grid((9, 5), (0.0, 0.0), (2.0, 3.0))  # volume 6
    for c, p in [(1.0, 2.0), (2.5, 3.0)]:
        expected = abs(c) * 6.0 ** (1.0 / p)
        assert luxemburg_norm(GridFunction.constant(g, c), ExponentField.constant(g, p)) == pytest.approx(
            expected, rel=1e-8
        )


def test_luxemburg_definition():
    g = Grid.box(2, 11)
    q = variable_exponent(g, 1.3, 2.8, seed=5)
    u = random_test_function(g, 2).scaled(7.0)
    n = luxemburg_norm(u, q, tol=1e-12)
    assert modular(u.values / n, q, g) == pytest.approx(1.0, rel=1e-9)


def test_luxemburg_rejects_bad_tol_and_overflow():
    g = Grid.box(1, 5)
    q = ExponentField.constant(g, 2.0)
    with pytest.raises(ValueError):
        luxemburg_norm(GridFunction.constant(g, 1.0), q, tol=0.0)
    with pytest.raises(NormBracketError):
        luxemburg_norm(np.array([0, np.inf, 0, 0, 0.0]), q, grid=g)


@settings(max_examples=40, deadline=None)
@given(c=st.floats(-1e3, 1e3).filter(lambda c: abs(c) > 1e-6), seed=st.integers(0, 10_000))
def test_luxemburg_absolute_homogeneity(c, seed):
    g = Grid.box(2, 7)
    q = variable_exponent(g, 1.2, 4.0, seed)
    u = random_test_function(g, seed)
    assert luxemburg_norm(u.scaled(c), q) == pytest.approx(abs(c) * luxemburg_norm(u, q), rel=1e-9)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_luxemburg_triangle_inequality(seed):
    g = Grid.box(2, 7)
    q = variable_exponent(g, 1.2, 4.0, seed)
    u, v = random_test_function(g, seed), random_test_function(g, seed + 1).scaled(3.0)
    lhs = luxemburg_norm(GridFunction(g, u.values + v.values), q)
    assert lhs <= (luxemburg_norm(u, q) + luxemburg_norm(v, q)) * (1 + 1e-9)


def test_modular_norm_relations():
    """Norm above 1 => q- and q+ powers bracket the modular; reversed below 1."""
    g = Grid.box(2, 9)
    rng = np.random.default_rng(1)
    for k in range(200):
        q = variable_exponent(g, 1.1 + rng.uniform(0, 1), 2.2 + rng.uniform(0, 2), seed=k)
        u = random_test_function(g, k).scaled(10 ** rng.uniform(-2, 2))
        n = luxemburg_norm(u, q)
        rho = modular(u, q)
        slack = 1e-8 * max(n**q.hi, 1.0)
        if n > 1:
            assert n**q.lo - slack <= rho <= n**q.hi + slack
        elif n < 1:
            assert n**q.hi - slack <= rho <= n**q.lo + slack


def test_modular_and_norm_vanish_together():
    g = Grid.box(1, 33)
    q = variable_exponent(g, 1.3, 3.0)
    u = random_test_function(g, 0)
    prev_m = prev_n = math.inf
    for k in range(1, 12):
        d = u.scaled(0.5**k)
        m, n = modular(d, q), luxemburg_norm(d, q)
        assert m < prev_m and n < prev_n
        prev_m, prev_n = m, n
    assert prev_m < 1e-3 and prev_n < 1e-3


# --- Orlicz ------------------------------------------------------------------


def test_orlicz_norm_examples():
    g = Grid.box(2, 9)
    assert orlicz_luxemburg_norm(np.zeros(g.shape), Y.power(2), g) == 0.0
    for p, c in [(2.0, 3.0), (2.7, 0.4)]:
        assert orlicz_luxemburg_norm(np.full(g.shape, c), Y.power(p), g) == pytest.approx(c, rel=1e-9)
    u = random_test_function(g, 3)
    for p in (1.5, 3.0):
        a = orlicz_luxemburg_norm(u.values, Y.power(p), g, tol=1e-11)
        b = luxemburg_norm(u, ExponentField.constant(g, p), tol=1e-11)
        assert a == pytest.approx(b, rel=2e-11 + 1e-12)


@pytest.mark.parametrize("spec", [Y.power(1.7), Y.power(3.0), Y.logpower(2.0, 1.0), Y.logpower(1.5, 2.0)])
def test_orlicz_modular_norm_relations(spec):
    g = Grid.box(2, 9)
    lo, hi = indices(spec)
    rng = np.random.default_rng(2)
    for k in range(30):
        u = random_test_function(g, k).scaled(10 ** rng.uniform(-2, 1))
        gm = gradient_magnitude(u)
        n = orlicz_luxemburg_norm(gm, spec, g)
        rho = orlicz_modular(gm, spec, g)
        slack = 1e-8 * max(rho, 1e-300)
        if n < 1:
            assert n**hi - slack <= rho <= n**lo + slack
        else:
            assert n**lo - slack <= rho <= n**hi + slack


# --- Hoelder -----------------------------------------------------------------


def test_holder_examples():
    g = Grid.box(2, 9)
    p = ExponentField.constant(g, 2.0)
    assert holder_pairing(GridFunction.zeros(g), random_test_function(g, 0), p) == (0.0, 0.0)
    one = GridFunction.constant(g, 1.0)
    lhs, rhs = holder_pairing(one, one, p)
    assert lhs == pytest.approx(1.0, abs=1e-12) and rhs == pytest.approx(1.0, rel=1e-9)


def test_holder_random():
    g = Grid.box(2, 7)
    for seed in range(300):
        p = variable_exponent(g, 1.2, 4.0, seed)
        u, v = random_test_function(g, seed), random_test_function(g, seed + 10_000)
        lhs, rhs = holder_pairing(u, v, p)
        assert lhs <= rhs * (1 + 1e-9)
