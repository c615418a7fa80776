import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from graphequiv import measures
from graphequiv.measures import (
    EnumerationTooLarge, ProbPair, chi_square_factor, hellinger_bernoulli, hellinger_product,
    product_masses, rho, rho_alt, second_moment_ratio, tv_bounds, tv_exact_enumerate,
)

prob = st.floats(0.0, 1.0, allow_nan=False)
interior = st.floats(0.001, 0.999, allow_nan=False)


def vectors(elem=prob, max_size=8):
    return st.integers(1, max_size).flatmap(
        lambda n: st.tuples(st.lists(elem, min_size=n, max_size=n), st.lists(elem, min_size=n, max_size=n)))


def naive_rho(p, q):
    return (math.sqrt(p) - math.sqrt(q)) ** 2 + (math.sqrt(1 - p) - math.sqrt(1 - q)) ** 2


def brute_masses(p):
    """Outcome masses by explicit iteration over {0,1}^N (itertools order matches product_masses)."""
    out = []
    for x in itertools.product((0, 1), repeat=len(p)):
        m = 1.0
        for xi, pi in zip(x, p):
            m *= pi if xi else 1 - pi
        out.append(m)
    return np.array(out)


def test_rho_known_values():
    assert rho(0.3, 0.3) == 0.0
    assert rho(0.0, 1.0) == 2.0
    assert rho(0.1, 0.2) == pytest.approx(naive_rho(0.1, 0.2), rel=1e-14)
    assert isinstance(rho(0.1, 0.2), float)
    assert rho([0.1, 0.2], [0.2, 0.1]).shape == (2,)


@pytest.mark.parametrize("bad", [-0.1, 1.1, float("nan")])
def test_rho_rejects_non_probabilities(bad):
    with pytest.raises(ValueError):
        rho(bad, 0.5)


@given(prob, prob)
def test_rho_matches_naive_formula_and_is_symmetric(p, q):
    r = rho(p, q)
    assert 0.0 <= r <= 2.0
    assert r == pytest.approx(naive_rho(p, q), abs=1e-12)
    assert r == pytest.approx(rho(q, p), abs=1e-15)


def test_rho_is_accurate_for_close_arguments():
    # the naive formula loses every digit here
    p, q = 1e-3, 1e-3 + 1e-13
    exact = (q - p) ** 2 / (math.sqrt(p) + math.sqrt(q)) ** 2 + (q - p) ** 2 / (
        math.sqrt(1 - p) + math.sqrt(1 - q)) ** 2
    assert rho(p, q) == pytest.approx(exact, rel=1e-9)


@given(prob, prob)
def test_ratio_sum_form_within_analytic_constants(p, q):
    r, a = rho(p, q), rho_alt(p, q, "ratio_sum")
    assert (r == 0) == (a == 0)
    if a > 0:
        assert 0.5 * (1 - 1e-9) <= r / a <= 1.0 + 1e-9


@pytest.mark.parametrize("form", measures.RHO_FORMS)
@given(p=prob, q=prob)
def test_alternative_forms_share_zero_set(form, p, q):
    if form == "small_p" and p > 0.9:
        return
    assert (rho(p, q) == 0) == (rho_alt(p, q, form) == 0)


def test_small_p_form_rejects_large_p():
    with pytest.raises(ValueError):
        rho_alt(0.95, 0.5, "small_p")
    with pytest.raises(ValueError):
        rho_alt(0.5, 0.5, "bogus")


@given(prob, prob)
def test_hellinger_bernoulli_routes(p, q):
    H, d = hellinger_bernoulli(p, q)
    assert H == pytest.approx(math.sqrt(p * q) + math.sqrt((1 - p) * (1 - q)), abs=1e-12)
    assert d * d == pytest.approx(rho(p, q) / 2, abs=1e-15)


@settings(max_examples=60)
@given(vectors())
def test_hellinger_product_against_enumeration(pq):
    p, q = map(np.array, pq)
    brute = float(np.sum(np.sqrt(brute_masses(p) * brute_masses(q))))
    assert hellinger_product(p, q) == pytest.approx(brute, abs=1e-12)


@settings(max_examples=60)
@given(vectors())
def test_tv_sandwich(pq):
    r = tv_bounds(*pq)
    tv = tv_exact_enumerate(*pq)
    assert r.tv_lower - 1e-12 <= tv <= r.tv_upper + 1e-12
    assert r.hellinger_distance ** 2 == pytest.approx(1 - r.hellinger_integral, abs=1e-12)


def test_product_masses_order_matches_itertools():
    p = np.array([0.1, 0.7, 0.4])
    assert_allclose(product_masses(p), brute_masses(p), rtol=0, atol=1e-15)
    assert product_masses(p).sum() == pytest.approx(1.0)


def test_tv_single_coordinate_and_limits():
    assert tv_exact_enumerate([0.1], [0.2]) == pytest.approx(0.1, abs=1e-15)
    with pytest.raises(EnumerationTooLarge):
        tv_exact_enumerate(np.full(21, 0.5), np.full(21, 0.5))
    # multiplicities count toward the limit
    with pytest.raises(EnumerationTooLarge):
        tv_exact_enumerate(ProbPair([0.5], [0.4], weights=[21]))


def test_weights_equal_expanded_pair():
    pair = ProbPair([0.1, 0.3], [0.2, 0.25], weights=[3, 2])
    full = pair.expanded()
    assert pair.N == full.N == 5
    a, b = tv_bounds(pair), tv_bounds(full)
    assert a.rho_sum == pytest.approx(b.rho_sum, rel=1e-14)
    assert a.hellinger_integral == pytest.approx(b.hellinger_integral, rel=1e-14)
    assert tv_exact_enumerate(pair) == pytest.approx(tv_exact_enumerate(full), abs=1e-15)
    assert second_moment_ratio(pair) == pytest.approx(second_moment_ratio(full), rel=1e-13)


@pytest.mark.parametrize("kwargs", [
    dict(left=[0.1, 0.2], right=[0.1]),
    dict(left=[0.1], right=[0.1], weights=[-1]),
    dict(left=[0.1], right=[0.1], weights=[1.5]),
    dict(left=[], right=[]),
])
def test_probpair_validation(kwargs):
    with pytest.raises(ValueError):
        ProbPair(**kwargs)


@settings(max_examples=60)
@given(vectors(interior))
def test_second_moment_against_enumeration(pq):
    p, q = map(np.array, pq)
    P, Q = brute_masses(p), brute_masses(q)
    assert second_moment_ratio(p, q) == pytest.approx(float(np.sum(P * P / Q)), rel=1e-10)
    assert_allclose(chi_square_factor(p, q), p * p / q + (1 - p) ** 2 / (1 - q), rtol=1e-12)


def test_second_moment_infinite_when_support_escapes():
    assert second_moment_ratio([0.5, 0.2], [0.0, 0.2]) == math.inf
    # an escaping coordinate with zero multiplicity does not count
    assert np.isfinite(second_moment_ratio(ProbPair([0.5, 0.2], [0.0, 0.2], weights=[0, 4])))
    assert second_moment_ratio([0.0], [0.0]) == 1.0


def test_hellinger_product_is_multiplicative():
    p, q = np.array([0.1, 0.5, 0.9]), np.array([0.2, 0.4, 0.95])
    parts = [hellinger_bernoulli(a, b)[0] for a, b in zip(p, q)]
    assert hellinger_product(p, q) == pytest.approx(np.prod(parts), rel=1e-14)


def test_log_hellinger_handles_singular_coordinate():
    assert measures.log_hellinger_product([0.0], [1.0]) == -math.inf
    assert hellinger_product([0.0, 0.5], [1.0, 0.5]) == 0.0


def test_rho_symmetry_and_reflection_on_grid():
    g = np.arange(1001) / 1000
    P, Q = np.meshgrid(g, g, indexing="ij")
    r = rho(P.ravel(), Q.ravel()).reshape(P.shape)
    assert np.max(np.abs(r - r.T)) <= 1e-15
    # 1 - k/1000 is (1000 - k)/1000 up to one rounding
    assert np.max(np.abs(r - r[::-1, ::-1])) <= 1e-15
