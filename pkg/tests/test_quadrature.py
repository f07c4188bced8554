import math

import numpy as np
import pytest

from smolyak_qc.quadrature import (
    InvalidArgument,
    Measure,
    gauss_hermite_prob,
    gauss_legendre,
    integrate_1d,
    _hermite_orthonormal,
    _legendre,
)


def test_one_point_rules():
    r = gauss_legendre(1, (-0.5, 0.5))
    assert r.nodes.tolist() == [0.0] and r.weights.tolist() == [1.0]
    h = gauss_hermite_prob(1)
    assert h.nodes.tolist() == [0.0] and h.weights.tolist() == [1.0]


def test_two_point_legendre_closed_form():
    # roots of P_2 are +-1/sqrt(3); scaled onto [-0.5, 0.5]
    r = gauss_legendre(2, (-0.5, 0.5))
    np.testing.assert_allclose(r.nodes, [-0.5 / math.sqrt(3), 0.5 / math.sqrt(3)], atol=1e-15)
    np.testing.assert_allclose(r.nodes, [-0.28867513, 0.28867513], atol=1e-8)
    np.testing.assert_allclose(r.weights, [0.5, 0.5], atol=1e-15)


def test_two_point_hermite_closed_form():
    # He_2(x) = x^2 - 1
    h = gauss_hermite_prob(2)
    np.testing.assert_allclose(h.nodes, [-1.0, 1.0], atol=1e-15)
    np.testing.assert_allclose(h.weights, [0.5, 0.5], atol=1e-15)


def test_uniform_second_moment_against_riemann_sum():
    r = gauss_legendre(3, (-0.5, 0.5))
    quad = integrate_1d(r, lambda x: x * x)
    xs = np.linspace(-0.5, 0.5, 200001)
    riemann = np.trapezoid(xs**2, xs)
    assert quad == pytest.approx(1 / 12, abs=1e-15)
    assert quad == pytest.approx(riemann, abs=1e-10)


def test_hermite_moments():
    h = gauss_hermite_prob(3)
    assert integrate_1d(h, lambda x: x**2) == pytest.approx(1.0, abs=1e-14)
    assert integrate_1d(h, lambda x: x**4) == pytest.approx(3.0, abs=1e-13)


@pytest.mark.parametrize("rule", [gauss_legendre(2), gauss_legendre(5, (-0.1, 0.1)), gauss_hermite_prob(4)])
def test_integrate_trivial(rule):
    assert integrate_1d(rule, lambda x: 1.0) == pytest.approx(1.0, abs=1e-15)
    assert integrate_1d(rule, lambda x: x) == pytest.approx(0.0, abs=1e-15)


def test_legendre_two_point_second_moment():
    assert integrate_1d(gauss_legendre(2), lambda x: x * x) == pytest.approx(1 / 12, abs=1e-16)


@pytest.mark.parametrize("n", range(1, 11))
@pytest.mark.parametrize("measure", [Measure("uniform", -0.5, 0.5), Measure("uniform", -1.0, 3.0), Measure("normal")])
def test_polynomial_exactness(n, measure):
    rule = measure.rule(n)
    for k in range(2 * n):
        exact = measure.moment(k)
        est = float(np.dot(rule.weights, rule.nodes**k))
        # 1e-12 relative to the summed term magnitude E|x|^k (about 3e4 for x^18 under N(0,1))
        scale = max(1.0, float(np.dot(rule.weights, np.abs(rule.nodes) ** k)))
        assert abs(est - exact) < 1e-12 * scale, (n, k, est, exact)


@pytest.mark.parametrize("n", range(2, 11))
def test_nodes_are_polynomial_roots(n):
    x = gauss_legendre(n, (-1.0, 1.0)).nodes
    p, dp = _legendre(n, x)
    assert np.max(np.abs(p / dp)) < 1e-14
    xh = gauss_hermite_prob(n).nodes
    p, p_prev, _ = _hermite_orthonormal(n, xh)
    assert np.max(np.abs(p / (math.sqrt(n) * p_prev))) < 1e-14


@pytest.mark.parametrize("n", range(1, 16))
def test_rule_invariants(n):
    for rule in (gauss_legendre(n, (-0.5, 0.5)), gauss_hermite_prob(n)):
        assert rule.order == n == len(rule.weights)
        assert np.all(rule.weights > 0)
        assert abs(rule.weights.sum() - 1.0) <= 1e-12
        assert np.all(np.diff(rule.nodes) > 0)
        np.testing.assert_allclose(rule.nodes, -rule.nodes[::-1], atol=1e-12)


def test_matches_numpy_reference():
    for n in (3, 7, 12):
        x, w = np.polynomial.legendre.leggauss(n)
        r = gauss_legendre(n, (-1.0, 1.0))
        np.testing.assert_allclose(r.nodes, x, atol=1e-14)
        np.testing.assert_allclose(r.weights, w / 2, atol=1e-14)
        x, w = np.polynomial.hermite_e.hermegauss(n)
        h = gauss_hermite_prob(n)
        np.testing.assert_allclose(h.nodes, x, atol=1e-13)
        np.testing.assert_allclose(h.weights, w / w.sum(), atol=1e-14)


@pytest.mark.parametrize("bad", [0, -1])
def test_invalid_order(bad):
    with pytest.raises(InvalidArgument):
        gauss_legendre(bad)
    with pytest.raises(InvalidArgument):
        gauss_hermite_prob(bad)


def test_invalid_interval():
    with pytest.raises(InvalidArgument):
        gauss_legendre(3, (1.0, 1.0))
    with pytest.raises(InvalidArgument):
        gauss_legendre(3, (1.0, -1.0))


def test_measure_parse_roundtrip():
    m = Measure.parse("legendre:-0.1:0.1")
    assert (m.kind, m.a, m.b) == ("uniform", -0.1, 0.1)
    assert Measure.parse(str(m)) == m
    assert Measure.parse("hermite") == Measure("normal")
    with pytest.raises(InvalidArgument):
        Measure.parse("chebyshev")
