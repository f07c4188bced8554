import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from smolyak_qc.pulses import (
    FixtureError,
    FourierPulse,
    PiecewisePulse,
    PulseDomainError,
    envelope,
    load_pulse,
    pulse_from_dict,
    save_pulse,
)
from smolyak_qc import drivers

coeffs7 = arrays(np.float64, (2, 7), elements=st.floats(-5, 5))


def test_fourier_examples():
    p = FourierPulse(10.0, 3, np.array([[1.0, 0, 0, 0, 0, 0, 0]]))
    assert p.value(0, 0.0) == 0.0
    assert p.value(0, 5.0) == pytest.approx(1.0, abs=1e-15)
    np.testing.assert_array_equal(p.jacobian(0, 0.0), np.zeros(7))
    assert p.jacobian(0, 5.0)[0] == pytest.approx(1.0, abs=1e-15)


def test_hadamard_fixture_at_midpoint():
    # at t = T_p/2: cos(n pi) = (-1)^n, sin(n pi) = 0, G = 1
    doc = json.loads(drivers.fixture_path("hadamard").read_text())
    a = doc["channels"][0]["a"]
    by_hand = sum(an * (-1) ** n for n, an in enumerate(a))
    p = pulse_from_dict(doc, expect_channels=2)
    assert p.value(0, 5.0) == pytest.approx(by_hand, abs=1e-13)
    assert p.labels == ("x", "y")


def test_fourier_domain():
    p = FourierPulse.zeros(2.0, 3, 1)
    for t in (-1e-9, 2.0 + 1e-9):
        with pytest.raises(PulseDomainError):
            p.value(0, t)


@settings(max_examples=50, deadline=None)
@given(c=coeffs7)
def test_fourier_boundary_conditions(c):
    p = FourierPulse(10.0, 3, c)
    scale = max(1.0, np.abs(c).sum())
    for j in range(2):
        assert abs(p.value(j, 0.0)) < 1e-14 * scale
        assert abs(p.value(j, 10.0)) < 1e-14 * scale
        h = 1e-7
        assert abs((p.value(j, h) - p.value(j, 0.0)) / h) < 1e-6 * scale
        assert abs((p.value(j, 10.0) - p.value(j, 10.0 - h)) / h) < 1e-6 * scale


@settings(max_examples=50, deadline=None)
@given(c1=coeffs7, c2=coeffs7, alpha=st.floats(-3, 3), beta=st.floats(-3, 3), t=st.floats(0, 10))
def test_linearity(c1, c2, alpha, beta, t):
    p1, p2 = FourierPulse(10.0, 3, c1), FourierPulse(10.0, 3, c2)
    mix = FourierPulse(10.0, 3, alpha * c1 + beta * c2)
    for j in range(2):
        lhs = mix.value(j, t)
        rhs = alpha * p1.value(j, t) + beta * p2.value(j, t)
        assert lhs == pytest.approx(rhs, abs=1e-12 * (1 + abs(lhs)))
    q1 = PiecewisePulse(1.0, c1)
    q2 = PiecewisePulse(1.0, c2)
    qm = PiecewisePulse(1.0, alpha * c1 + beta * c2)
    s = t / 10
    assert qm.value(1, s) == pytest.approx(alpha * q1.value(1, s) + beta * q2.value(1, s), abs=1e-12)


def test_fourier_jacobian_against_fd():
    rng = np.random.default_rng(0)
    p = FourierPulse(10.0, 3, rng.normal(size=(2, 7)))
    h = 1e-6
    for t in (0.3, 2.5, 7.7):
        jac = p.jacobian(1, t)
        for k in range(7):
            c = p.coeffs.copy()
            c[1, k] += h
            up = FourierPulse(10.0, 3, c).value(1, t)
            c[1, k] -= 2 * h
            dn = FourierPulse(10.0, 3, c).value(1, t)
            assert jac[k] == pytest.approx((up - dn) / (2 * h), abs=1e-9)


def test_sample_jacobian_layout():
    rng = np.random.default_rng(1)
    p = FourierPulse(10.0, 3, rng.normal(size=(2, 7)))
    t = np.array([1.0, 4.0])
    J = p.sample_jacobian(t)
    assert J.shape == (2, 2, 14)
    np.testing.assert_allclose(J[:, 0, :7], p.basis(t))
    np.testing.assert_array_equal(J[:, 0, 7:], 0.0)
    np.testing.assert_allclose(np.einsum("tjk,k->tj", J, p.params), p.samples(t), atol=1e-14)


def test_piecewise_conventions():
    one = PiecewisePulse(3.0, [[2.5]])
    assert all(one.value(0, t) == 2.5 for t in (0.0, 1.3, 3.0))
    p = PiecewisePulse(100.0, [np.arange(1.0, 101.0)])
    assert p.value(0, 1.0) == 2.0  # boundary belongs to the later segment
    assert p.value(0, 100.0) == 100.0  # final segment is closed
    assert p.value(0, 0.0) == 1.0
    np.testing.assert_array_equal(np.nonzero(p.jacobian(0, 42.5))[0], [42])
    with pytest.raises(PulseDomainError):
        p.value(0, 100.5)


def test_piecewise_validation():
    with pytest.raises(FixtureError):
        PiecewisePulse(1.0, [[np.nan]])
    clipped = PiecewisePulse(1.0, [[3.0, -3.0, 0.5]], bound=1.0)
    np.testing.assert_array_equal(clipped.amps, [[1.0, -1.0, 0.5]])


def test_fixture_count_errors():
    doc = {"family": "fourier", "T_p": 10, "N": 3,
           "channels": [{"label": "x", "a": [1, 2, 3, 4], "b": [1, 2, 3]},
                        {"label": "y", "a": [1, 2, 3], "b": [1, 2, 3]}]}
    with pytest.raises(FixtureError, match="'y'"):
        pulse_from_dict(doc)
    with pytest.raises(FixtureError, match="channels"):
        pulse_from_dict(doc | {"channels": doc["channels"][:1]}, expect_channels=2)
    with pytest.raises(FixtureError):
        pulse_from_dict({"family": "crab", "channels": []})


@pytest.mark.parametrize("name", ["hadamard", "pi8", "phase_s", "rx_pi_k3", "rx_pi_k4"])
def test_fixtures_parse(name):
    p = load_pulse(drivers.fixture_path(name), expect_channels=2)
    assert p.N == 3 and p.coeffs.shape == (2, 7)


def test_roundtrip(tmp_path):
    rng = np.random.default_rng(2)
    for p in (FourierPulse(10.0, 3, rng.normal(size=(2, 7)), ("x", "y")),
              PiecewisePulse(4.0, rng.normal(size=(4, 10)), bound=2.0)):
        path = tmp_path / f"{p.family}.json"
        save_pulse(p, path)
        q = load_pulse(path)
        np.testing.assert_array_equal(q.params, p.params)
        assert q.labels == p.labels


def test_load_reports_bad_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"family": "fourier",\n "channels": [}')
    with pytest.raises(FixtureError, match="line 2"):
        load_pulse(path)


def test_envelope():
    assert envelope(0.0, 10.0) == 0.0
    assert envelope(5.0, 10.0) == pytest.approx(1.0)
