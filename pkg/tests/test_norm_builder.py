"""Unit tests for prescribed-coupling norm construction and the catalog."""

import math

import numpy as np
import pytest

from subfinsler import norm_builder as NB
from subfinsler.convex_body import NormSpec, classify_regularity, make_body
from subfinsler.convex_trig import Correspondence


@pytest.fixture(scope="module")
def linear_body():
    return NB.build_body(NB.catalog("example_linear", K=1.0, L=1.0), 8192)


def test_constant_one_gives_disk():
    pres = NB.CorrespondencePrescription(f=lambda v: 1.0, eps=0.5, label="unit")
    body = NB.build_from_correspondence_derivative(pres)
    radii = np.hypot(body.vertices[:, 0], body.vertices[:, 1])
    # patch integration is exact; the blend may deviate slightly from a circle
    assert abs(body.area - math.pi) < 0.02 * math.pi
    assert np.all(np.abs(radii - 1.0) < 0.02)


def test_prescription_validation():
    with pytest.raises(ValueError):
        NB.CorrespondencePrescription(f=lambda v: 1.0, eps=2.0)
    with pytest.raises(ValueError):
        NB.build_from_correspondence_derivative(
            NB.CorrespondencePrescription(f=lambda v: -1.0, eps=0.3)
        )


def test_linear_body_hooks(linear_body):
    c = Correspondence(linear_body)
    # the attached analytic coupling-derivative hook matches the prescription
    phis = np.array([-0.2, -0.05, 0.0, 0.1, 0.25])
    vals = linear_body.cprime_polar(phis)
    np.testing.assert_allclose(vals, 1.0 + phis, atol=1e-12)
    # outside the patch the hook defers to numerics via NaN
    assert np.isnan(linear_body.cprime_polar(0.25 * c.polar_period))
    # deriv_from_polar routes through the hook on the patch
    np.testing.assert_allclose(c.deriv_from_polar(phis), 1.0 + phis, atol=1e-12)


def test_linear_body_measured_coupling(linear_body):
    c = Correspondence(linear_body)
    h = 1e-3
    for phi in (-0.15, 0.0, 0.12):
        fd = float(c.from_polar(phi + h) - c.from_polar(phi - h)) / (2 * h)
        assert fd == pytest.approx(1.0 + phi, abs=5e-3)


def test_built_bodies_are_valid_convex(linear_body):
    rep = classify_regularity(linear_body)
    assert rep.is_C1 and rep.is_strictly_convex
    # bipolarity: polar of polar recovers the gauge
    pp = linear_body.polar().polar()
    rng = np.random.default_rng(0)
    v = rng.normal(size=(50, 2))
    np.testing.assert_allclose(pp.gauge(v), linear_body.gauge(v), rtol=2e-3)


def test_loglinear_body_builds():
    body = NB.build_body(NB.catalog("example_loglinear"), 4096)
    c = Correspondence(body)
    x = 0.1
    assert float(c.deriv_from_polar(x)) == pytest.approx(
        abs(x * math.log(x)), abs=1e-12
    )
    assert float(c.deriv_from_polar(0.0)) == 0.0


def test_oscillation_schedule():
    a, b, ctop = NB.oscillation_schedule(10)
    assert np.all(a < b) and np.all(b < ctop)
    assert np.all(a[1:] < a[:-1])
    # the plateaus sharpen: a_n/b_n = 1/(2n) -> 0
    np.testing.assert_allclose(a / b, 1.0 / (2.0 * np.arange(1, 11)))


def test_oscillation_f_piecewise():
    f, bps = NB._oscillation_f(0.3, n_max=6)
    a, b, _ = NB.oscillation_schedule(6)
    n = 2  # zero-based index for the n=3 band
    x_lin = 0.5 * (a[n] + b[n])
    assert f(x_lin) == pytest.approx(x_lin)
    x_log = 2.0 * b[n]
    assert f(x_log) == pytest.approx(abs(x_log * math.log(x_log)))
    assert f(0.0) == 0.0
    assert f(-x_lin) == f(x_lin)
    assert all(0 < v < 0.3 for v in bps)


def test_oscillation_body_builds():
    body = NB.build_body(NB.catalog("example_oscillation", n_max=8), 4096)
    a, b, _ = NB.oscillation_schedule(8)
    x = 0.5 * (a[3] + b[3])
    assert float(body.cprime_polar(x)) == pytest.approx(x)


def test_catalog_dispatch():
    assert NB.catalog("euclidean").kind == "euclidean"
    assert NB.catalog("lp", p=2.0).kind == "euclidean"
    assert NB.catalog("lp", p=3.0).params["p"] == 3.0
    with pytest.raises(ValueError):
        NB.catalog("nope")


def test_save_load_roundtrip(tmp_path):
    body = make_body(NormSpec("lp", params={"p": 1.5}), 512)
    path = tmp_path / "body.txt"
    NB.save_body(body, str(path))
    back = NB.load_body(str(path))
    np.testing.assert_allclose(back.vertices, body.vertices, atol=1e-15)
    assert back.spec.label == "lp(1.5)" or back.spec.label
    with pytest.raises(ValueError):
        bad = tmp_path / "bad.txt"
        bad.write_text("junk\n")
        NB.load_body(str(bad))
