"""Unit tests for planar convex bodies: gauges, supports, polars, regularity."""

import numpy as np
import pytest

from subfinsler.convex_body import NormSpec, classify_regularity, make_body


@pytest.fixture(scope="module")
def euclid():
    return make_body(NormSpec("euclidean"), 8192)


@pytest.fixture(scope="module")
def square():
    return make_body(
        NormSpec("polygon", params={"vertices": [[1, 1], [-1, 1], [-1, -1], [1, -1]]})
    )


@pytest.fixture(scope="module")
def lp3():
    return make_body(NormSpec("lp", params={"p": 3.0}), 8192)


@pytest.fixture(scope="module")
def lp15():
    return make_body(NormSpec("lp", params={"p": 1.5}), 8192)


@pytest.fixture(scope="module")
def rounded_square():
    return make_body(
        NormSpec(
            "rounded_polygon",
            params={"vertices": [[1, 1], [-1, 1], [-1, -1], [1, -1]], "radius": 0.1},
        ),
        4096,
    )


def test_euclidean_gauge_and_area(euclid):
    assert euclid.gauge(np.array([3.0, 4.0])) == pytest.approx(5.0)
    assert euclid.area == pytest.approx(np.pi, rel=1e-6)


def test_l1_gauge_support_area():
    l1 = make_body(NormSpec("lp", params={"p": 1.0}))
    assert l1.gauge(np.array([1.0, 1.0])) == pytest.approx(2.0)
    assert l1.support(np.array([1.0, 1.0])) == pytest.approx(1.0)
    assert l1.area == pytest.approx(2.0)


def test_linfty_is_square():
    linf = make_body(NormSpec("lp", params={"p": np.inf}))
    assert linf.gauge(np.array([0.3, 1.0])) == pytest.approx(1.0)
    assert linf.area == pytest.approx(4.0)


def test_square_polar_is_diamond(square):
    pol = square.polar()
    assert pol.gauge(np.array([1.0, 1.0])) == pytest.approx(2.0)
    assert pol.area == pytest.approx(2.0)


def test_lp_polar_is_conjugate(lp3):
    pol = lp3.polar()
    q = 1.5
    v = np.array([0.7, -0.4])
    expected = (abs(v[0]) ** q + abs(v[1]) ** q) ** (1.0 / q)
    assert pol.gauge(v) == pytest.approx(expected, rel=1e-10)


def test_gauge_homogeneity(lp15):
    rng = np.random.default_rng(7)
    vs = rng.normal(size=(200, 2))
    lam = rng.uniform(0.1, 10.0, 200)
    g = lp15._gauge_polyline(vs)
    gl = lp15._gauge_polyline(vs * lam[:, None])
    np.testing.assert_allclose(gl, lam * g, rtol=1e-12, atol=1e-12)


def test_support_is_polar_gauge(lp3):
    rng = np.random.default_rng(3)
    vs = rng.normal(size=(100, 2))
    s = lp3._support_polyline(vs)
    pg = lp3.polar()._gauge_polyline(vs)
    np.testing.assert_allclose(s, pg, rtol=1e-5, atol=1e-8)


def test_bipolar_roundtrip(lp3):
    rng = np.random.default_rng(5)
    vs = rng.normal(size=(100, 2))
    bp = lp3.polar()._polar_polyline()
    err = np.max(np.abs(bp._gauge_polyline(vs) / lp3._gauge_polyline(vs) - 1.0))
    assert err < 1e-6


def test_cauchy_schwarz_pairing(lp15):
    rng = np.random.default_rng(11)
    us = rng.normal(size=(100, 2))
    vs = rng.normal(size=(100, 2))
    dots = np.einsum("ij,ij->i", us, vs)
    bound = lp15._gauge_polyline(us) * lp15._support_polyline(vs)
    assert np.all(dots <= bound * (1 + 1e-9) + 1e-12)


def test_polygon_requires_central_symmetry():
    with pytest.raises(ValueError):
        make_body(NormSpec("polygon", params={"vertices": [[1, 0], [0, 1], [-1, -1]]}))


def test_lp_requires_p_at_least_one():
    with pytest.raises(ValueError):
        NormSpec("lp", params={"p": 0.5})


def test_classify_euclidean(euclid):
    r = classify_regularity(euclid)
    assert r.is_C1 and r.is_strictly_convex and r.is_strongly_convex


def test_classify_square(square):
    r = classify_regularity(square)
    assert not r.is_C1 and not r.is_strictly_convex
    assert len(r.flat_segments) == 4
    assert len(r.polar_flat_segments) == 4
    assert len(r.corner_points) == 4


def test_classify_lp3(lp3):
    r = classify_regularity(lp3)
    assert r.is_C1 and r.is_strictly_convex and not r.is_strongly_convex


def test_classify_lp15(lp15):
    r = classify_regularity(lp15)
    assert r.is_C1 and r.is_strictly_convex and r.is_strongly_convex


def test_classify_rounded_square(rounded_square):
    r = classify_regularity(rounded_square)
    assert r.is_C1 and not r.is_strictly_convex
    assert len(r.flat_segments) == 4
    assert len(r.polar_flat_segments) == 0
