import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from orlicz_eigen.lebesgue import ExponentField
from orlicz_eigen.grid import Grid
from orlicz_eigen.young import (
    LOG_GRID,
    YoungFunctionSpec as Y,
    check_conditions,
    check_sqrt_convexity,
    estimate_delta2,
    index_ratio,
    indices,
    phi_capital,
    phi_eval,
    phi_inverse,
    phi_star,
    young_gap,
)

mp.mp.dps = 30

FAMILIES = [
    Y.power(2.0),
    Y.power(1.3),
    Y.power(3.5),
    Y.logpower(2.0, 1.0),
    Y.logpower(1.5, 2.5),
    Y.poweroverlog(3.0),
    Y.poweroverlog(2.2),
    Y.tabulated([(0.5, 1.0), (1.0, 3.0), (2.0, 8.0), (4.0, 20.0), (8.0, 48.0)]),
]
IDS = [f"{s.family}-{s.p}-{s.s}" for s in FAMILIES]


def mp_phi(spec, t):
    t = mp.mpf(t)
    if spec.family == "power":
        return spec.p * t ** (spec.p - 1)
    if spec.family == "logpower":
        return mp.log1p(t**spec.s) * t ** (spec.p - 1)
    if spec.family == "poweroverlog":
        return t ** (spec.p - 1) / mp.log1p(t)
    raise ValueError


# --- spec construction -------------------------------------------------------


@pytest.mark.parametrize(
    "bad",
    [
        lambda: Y.power(1.0),
        lambda: Y.logpower(1.0, 2.0),
        lambda: Y.logpower(2.0, 0.5),
        lambda: Y.poweroverlog(2.0),
        lambda: Y.tabulated([(1.0, 1.0), (0.5, 2.0), (2.0, 3.0), (3.0, 4.0)]),
        lambda: Y.tabulated([(1.0, 2.0), (2.0, 1.0), (3.0, 5.0), (4.0, 6.0)]),
    ],
)
def test_invalid_parameters_rejected(bad):
    with pytest.raises(ValueError):
        bad()


def test_dict_roundtrip():
    for spec in FAMILIES:
        assert Y.from_dict(spec.to_dict()) == spec
    with pytest.raises(KeyError):
        Y.from_dict({"p": 2})


# --- phi ---------------------------------------------------------------------


def test_phi_examples():
    assert phi_eval(Y.power(2), 3.0) == pytest.approx(6.0, abs=1e-15)
    assert phi_eval(Y.logpower(2, 2), 0.0) == 0.0
    expected = float(mp_phi(Y.poweroverlog(3), 1))
    assert phi_eval(Y.poweroverlog(3), 1.0) == pytest.approx(expected, rel=1e-14)
    assert expected == pytest.approx(1 / math.log(2), rel=1e-15)


@pytest.mark.parametrize("spec", FAMILIES[:7], ids=IDS[:7])
def test_phi_matches_high_precision(spec):
    for t in [1e-8, 1e-3, 0.3, 1.0, 7.0, 1e4]:
        assert phi_eval(spec, t) == pytest.approx(float(mp_phi(spec, t)), rel=1e-13)


@pytest.mark.parametrize("spec", FAMILIES, ids=IDS)
def test_phi_odd_increasing(spec):
    t = np.geomspace(1e-6, 1e6, 500)
    v = phi_eval(spec, t)
    assert np.all(np.diff(v) > 0)
    np.testing.assert_array_equal(phi_eval(spec, -t), -v)
    assert phi_eval(spec, 0.0) == 0.0


def test_poweroverlog_small_argument_is_finite():
    spec = Y.poweroverlog(3.0)
    v = phi_eval(spec, np.array([1e-300, 1e-13, 1e-12]))
    assert np.all(np.isfinite(v)) and np.all(v > 0)


# --- Phi ---------------------------------------------------------------------


def test_phi_capital_examples():
    assert phi_capital(Y.power(2), 2.0) == pytest.approx(4.0, abs=1e-14)
    assert phi_capital(Y.power(2.5), 1.0) == pytest.approx(1.0, abs=1e-14)
    oracle = float(mp.quad(lambda s: mp.log1p(s) * s, [0, 1]))
    assert oracle == pytest.approx(0.25, abs=1e-15)
    assert phi_capital(Y.logpower(2, 1), 1.0) == pytest.approx(oracle, abs=1e-10)


@pytest.mark.parametrize("spec", FAMILIES[:7], ids=IDS[:7])
def test_phi_capital_matches_mpmath(spec):
    for t in [1e-6, 0.01, 0.5, 1.0, 3.0, 250.0]:
        ref = mp.quad(lambda s: mp_phi(spec, s), [0, min(t, 1), t] if t > 1 else [0, t])
        assert phi_capital(spec, t) == pytest.approx(float(ref), rel=1e-11, abs=1e-300)


def test_phi_capital_tabulated_piecewise_quadratic():
    spec = FAMILIES[-1]
    # trapezoids under the piecewise-linear phi through (0,0)
    knots = [(0.0, 0.0)] + list(spec.samples)
    total = 0.0
    for (a, fa), (b, fb) in zip(knots, knots[1:]):
        total += 0.5 * (fa + fb) * (b - a)
    assert phi_capital(spec, knots[-1][0]) == pytest.approx(total, rel=1e-14)


@pytest.mark.parametrize("spec", FAMILIES, ids=IDS)
def test_phi_capital_even_convex(spec):
    t = np.linspace(0.0, 20.0, 401)
    P = phi_capital(spec, t)
    np.testing.assert_allclose(phi_capital(spec, -t), P)
    assert P[0] == 0.0 and np.all(P[1:] > 0)
    mid = 0.5 * (P[:-2] + P[2:]) - P[1:-1]
    assert np.all(mid >= -1e-12 * P[1:-1])


# --- inverse and Phi* --------------------------------------------------------


def test_phi_inverse_examples():
    assert phi_inverse(Y.power(2), 6.0) == pytest.approx(3.0, rel=1e-14)
    assert phi_inverse(Y.power(3), 3.0) == pytest.approx(1.0, rel=1e-14)
    for spec in FAMILIES:
        assert phi_inverse(spec, 0.0) == 0.0


@pytest.mark.parametrize("spec", FAMILIES, ids=IDS)
def test_phi_inverse_roundtrip(spec):
    t = np.geomspace(1e-4, 1e4, 60)
    s = phi_eval(spec, t)
    np.testing.assert_allclose(phi_eval(spec, phi_inverse(spec, s)), s, rtol=1e-10)
    np.testing.assert_allclose(phi_inverse(spec, s), t, rtol=1e-8)


def test_phi_star_examples():
    assert phi_star(Y.power(2), 2.0) == pytest.approx(1.0, rel=1e-12)
    for spec in FAMILIES:
        assert phi_star(spec, 0.0) == 0.0
    assert 1.0 <= phi_capital(Y.power(2), 1.0) + phi_star(Y.power(2), 1.0)
    assert phi_capital(Y.power(2), 1.0) + phi_star(Y.power(2), 1.0) == pytest.approx(1.25)


@pytest.mark.parametrize("spec", FAMILIES, ids=IDS)
def test_phi_star_is_legendre_transform(spec):
    # equality case of Young's inequality: s = phi^{-1}(t)
    for t in [1e-3, 0.2, 1.0, 5.0, 80.0]:
        s = phi_inverse(spec, t)
        assert phi_star(spec, t) == pytest.approx(s * t - phi_capital(spec, s), rel=1e-9, abs=1e-14)


@pytest.mark.parametrize("spec", FAMILIES, ids=IDS)
def test_young_inequality_random_pairs(spec):
    rng = np.random.default_rng(7)
    s = 10 ** rng.uniform(-3, 3, 10_000)
    t = 10 ** rng.uniform(-3, 3, 10_000)
    gap = young_gap(spec, s, t)
    assert np.all(gap >= -1e-9 * (s * t))


# --- indices, Delta2, sqrt-convexity ----------------------------------------


def test_indices_closed_forms():
    assert indices(Y.power(2.5)) == (2.5, 2.5)
    assert indices(Y.logpower(2, 1)) == (2.0, 3.0)
    assert indices(Y.poweroverlog(3)) == (2.0, 3.0)


@pytest.mark.parametrize("spec", FAMILIES, ids=IDS)
def test_index_ratio_inside_bounds(spec):
    lo, hi = indices(spec)
    ratio = index_ratio(spec, LOG_GRID)
    assert lo > 1
    assert np.all(ratio >= lo - 1e-8) and np.all(ratio <= hi + 1e-8)


@settings(max_examples=60, deadline=None)
@given(
    fam=st.sampled_from(["power", "logpower", "poweroverlog"]),
    p=st.floats(2.05, 6.0),
    s=st.floats(1.0, 4.0),
    t=st.floats(1e-5, 1e5),
)
def test_index_ratio_property(fam, p, s, t):
    spec = {"power": Y.power(p), "logpower": Y.logpower(p, s), "poweroverlog": Y.poweroverlog(p)}[fam]
    lo, hi = indices(spec)
    r = float(index_ratio(spec, np.array([t]))[0])
    assert lo - 1e-8 <= r <= hi + 1e-8


def test_tabulated_needs_samples():
    with pytest.raises(ValueError):
        indices(Y.tabulated([(1.0, 1.0), (2.0, 3.0)]))


def test_delta2():
    assert estimate_delta2(Y.power(2)) == pytest.approx(4.0, abs=1e-12)
    assert estimate_delta2(Y.power(3)) == pytest.approx(8.0, abs=1e-9)
    for p in (1.3, 2.5, 4.2):
        assert estimate_delta2(Y.power(p)) == pytest.approx(2**p, abs=1e-9)
    k = estimate_delta2(Y.logpower(2, 1))
    assert 4.0 <= k <= 8.0


def test_sqrt_convexity():
    assert check_sqrt_convexity(Y.power(2))
    assert check_sqrt_convexity(Y.power(3))
    res = check_sqrt_convexity(Y.power(1.5))
    assert not res and res.violation is not None and len(res.violation) == 3


# --- structural conditions ---------------------------------------------------


def _fields(N, q1, q2, m, r):
    g = Grid.box(N, 5)
    return [ExponentField.constant(g, v) for v in (q1, q2, m, r)]


def test_conditions_passing_instance():
    rep = check_conditions(Y.power(2.5), Y.power(1.3), *_fields(3, 2.0, 1.5, 1.7, 2.0), 3)
    assert rep.pass_2 and rep.pass_3 and rep.pass_4 and not rep.relaxed_mode
    assert rep.sobolev_bound == pytest.approx(3 * 1.3 / 1.7, rel=1e-14)
    assert len(rep.chain_values) == 12


def test_conditions_degenerate_chain():
    rep = check_conditions(Y.power(2), Y.power(2), *_fields(3, 2, 2, 2, 2), 3)
    assert not rep.pass_2 and rep.relaxed_mode
    assert rep.first_violation is not None and "<" in rep.first_violation


def test_conditions_potential_exponent():
    rep = check_conditions(Y.power(2.5), Y.power(1.3), *_fields(3, 2.0, 1.5, 1.7, 1.5), 3)
    assert rep.pass_2 and rep.pass_3 and not rep.pass_4 and rep.relaxed_mode


def test_conditions_embedding_bound_infinite_when_n_small():
    rep = check_conditions(Y.power(2.5), Y.power(1.3), *_fields(1, 2.0, 1.5, 1.7, 2.0), 1)
    assert rep.sobolev_bound == math.inf and rep.pass_3
    assert not rep.pass_2  # (phi1)^0 < N fails in one dimension
    text = rep.render()
    assert "FAIL" in text and "relaxed_mode: True" in text
