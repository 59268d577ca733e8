"""Unit tests for generalized trig tables and the body/polar coupling."""

import math

import numpy as np
import pytest

from subfinsler.convex_body import NormSpec, make_body
from subfinsler.convex_trig import Correspondence, TrigTable


@pytest.fixture(scope="module")
def euclid_corr():
    return Correspondence(make_body(NormSpec("euclidean"), 8192))


@pytest.fixture(scope="module")
def lp15_corr():
    return Correspondence(make_body(NormSpec("lp", params={"p": 1.5}), 8192))


@pytest.fixture(scope="module")
def square_corr():
    body = make_body(
        NormSpec("polygon", params={"vertices": [[1, 1], [-1, 1], [-1, -1], [1, -1]]})
    )
    return Correspondence(body)


def test_euclid_trig_exact(euclid_corr):
    t = euclid_corr.table
    th = np.linspace(0, 2 * math.pi, 101)
    np.testing.assert_allclose(t.cos(th), np.cos(th), atol=1e-15)
    np.testing.assert_allclose(t.sin(th), np.sin(th), atol=1e-15)
    assert t.period == pytest.approx(2 * math.pi, abs=0)


def test_euclid_coupling_is_identity(euclid_corr):
    th = np.linspace(-7, 13, 57)
    np.testing.assert_allclose(euclid_corr.to_polar(th), th, atol=1e-14)
    np.testing.assert_allclose(euclid_corr.deriv_from_polar(th), 1.0)


def test_period_is_twice_area(lp15_corr):
    assert lp15_corr.period == pytest.approx(2 * lp15_corr.body.area, rel=1e-12)


def test_angle_of_direction_inverts_point(lp15_corr):
    t = lp15_corr.table
    th = np.linspace(0.01, t.period - 0.01, 37)
    back = t.angle_of_direction(t.point(th))
    np.testing.assert_allclose(back, th, atol=1e-10)


def test_coupling_roundtrip(lp15_corr):
    c = lp15_corr
    phis = np.linspace(0, c.polar_period, 41)
    np.testing.assert_allclose(c.to_polar(c.from_polar(phis)), phis, atol=1e-10)


def test_pairing_bound_and_equality(lp15_corr):
    c = lp15_corr
    rng = np.random.default_rng(1)
    th = rng.uniform(0, c.period, 300)
    ph = rng.uniform(0, c.polar_period, 300)
    assert np.max(c.pairing(th, ph)) <= 1.0 + 1e-9
    on = c.pairing(c.from_polar(ph), ph)
    np.testing.assert_allclose(on, 1.0, atol=1e-6)


def test_half_period_shift(lp15_corr):
    c = lp15_corr
    th = np.linspace(0, c.period, 29)
    shifted = c.to_polar(th + c.table.half_period)
    np.testing.assert_allclose(
        shifted, c.to_polar(th) + c.polar_table.half_period, atol=1e-9
    )


def test_lp_deriv_matches_finite_difference(lp15_corr):
    c = lp15_corr
    ph = np.linspace(0.1, c.polar_period - 0.1, 60)
    h = 1e-5
    fd = (c.from_polar(ph + h) - c.from_polar(ph - h)) / (2 * h)
    an = c.deriv_from_polar(ph)
    # the finite difference sits on a fine polyline; a few percent agreement
    assert np.max(np.abs(an / fd - 1.0)) < 0.05


def test_deriv_reciprocity(lp15_corr):
    c = lp15_corr
    ph = np.linspace(0.3, 1.1, 20)
    prod = c.deriv_from_polar(ph) * c.deriv_to_polar(c.from_polar(ph))
    np.testing.assert_allclose(prod, 1.0, rtol=1e-5)


def test_trig_derivative(lp15_corr):
    c = lp15_corr
    th = np.linspace(0.2, c.period - 0.2, 40)
    h = 1e-5
    fd = (c.table.point(th + h) - c.table.point(th - h)) / (2 * h)
    np.testing.assert_allclose(c.trig_derivative(th), fd, atol=5e-4)


def test_square_staircase(square_corr):
    c = square_corr
    assert c.period == pytest.approx(8.0)
    assert c.polar_period == pytest.approx(4.0)
    runs = c.plateaus_from_polar()
    assert len(runs) == 4
    lengths = sorted(b - a for a, b in runs)
    np.testing.assert_allclose(lengths, 1.0)
    assert c.flat_extent(0.5) == pytest.approx((0.5, 0.5))
    assert c.flat_extent(2.25) == pytest.approx((0.25, 0.75))


def test_smooth_body_has_no_plateaus(lp15_corr):
    assert lp15_corr.plateaus_from_polar() == []
    assert lp15_corr.flat_extent(1.0) == (0.0, 0.0)
