"""Unit tests for the brute-force verification oracles."""

import math

import numpy as np
import pytest

from subfinsler import heisenberg as heis
from subfinsler import jacobian as jac
from subfinsler import oracle
from subfinsler.convex_body import NormSpec, make_body
from subfinsler.convex_trig import Correspondence


@pytest.fixture(scope="module")
def euclid_body():
    return make_body(NormSpec("euclidean"), 4096)


@pytest.fixture(scope="module")
def euclid(euclid_body):
    return Correspondence(euclid_body)


def test_integrate_controls_exact_area():
    # a unit square loop encloses area 1, so z = area = 1 exactly
    u = np.array([[4.0, 0.0], [0.0, 4.0], [-4.0, 0.0], [0.0, -4.0]])
    end = oracle.integrate_controls(u)
    assert end == pytest.approx([0.0, 0.0, 1.0], abs=1e-15)


def test_control_path_endpoint_invariant(euclid_body):
    cp = oracle.brute_force_geodesic(euclid_body, (1.0, 0.5, 0.1), budget=4)
    re_end = oracle.integrate_controls(cp.controls)
    assert np.linalg.norm(re_end - cp.endpoint) <= 1e-8


def test_straight_line(euclid_body):
    cp = oracle.brute_force_geodesic(euclid_body, (0.6, 0.8, 0.0), budget=3)
    assert cp.length == pytest.approx(1.0, abs=1e-3)


def test_vertical_target(euclid_body):
    cp = oracle.brute_force_geodesic(euclid_body, (0.0, 0.0, 1.0))
    assert math.sqrt(4.0 * math.pi) - 1e-3 <= cp.length <= math.sqrt(4.0 * math.pi) + 1e-2


def test_generic_target_matches_analytic(euclid_body, euclid):
    tgt = heis.exp_map(euclid, heis.make_params(euclid, 1.2, 0.4, 2.0), 1.0)
    d = heis.distance(euclid, np.zeros(3), tgt)
    cp = oracle.brute_force_geodesic(euclid_body, tgt, budget=6)
    assert d - 1e-3 <= cp.length <= d + 1e-2


def test_origin_target(euclid_body):
    cp = oracle.brute_force_geodesic(euclid_body, (0.0, 0.0, 0.0))
    assert cp.length == 0.0


def test_infeasible_tolerance_raises(euclid_body):
    with pytest.raises(RuntimeError, match="no admissible path"):
        oracle.brute_force_geodesic(
            euclid_body, (1.0, 0.0, 5.0), budget=1, feas_tol=1e-16
        )


def test_fd_jacobian_euclid(euclid):
    rng = np.random.default_rng(1)
    for _ in range(10):
        r = rng.uniform(0.5, 2.0)
        phi = rng.uniform(0.0, euclid.polar_period)
        om = rng.uniform(0.3, 0.8) * euclid.polar_period * rng.choice([-1, 1])
        t = rng.uniform(0.2, 0.95)
        fd = oracle.fd_jacobian(euclid, r, phi, om, t)
        full = jac.full_jacobian(euclid, r, phi, om, t)
        assert fd == pytest.approx(full, rel=1e-4)


def test_fd_jacobian_lp():
    c = Correspondence(make_body(NormSpec("lp", params={"p": 1.5}), 32768))
    fd = oracle.fd_jacobian(c, 1.0, 0.37, 2.1, 0.8)
    full = jac.full_jacobian(c, 1.0, 0.37, 2.1, 0.8)
    assert fd == pytest.approx(full, rel=1e-4)


def test_montecarlo_volume_ball():
    # volume of the unit ball from uniform samples in the bounding cube
    def weight(pts):
        return (np.sum(pts**2, axis=1) <= 1.0).astype(float)

    def sampler(rng, n):
        return rng.uniform(-1.0, 1.0, size=(n, 3))

    est, hw = oracle.montecarlo_volume(weight, sampler, 8.0, 200000, seed=5)
    truth = 4.0 * math.pi / 3.0
    assert abs(est - truth) <= 2.0 * hw
    assert hw < 0.05


def test_montecarlo_zero_hits_flagged():
    est, hw = oracle.montecarlo_volume(
        lambda p: np.zeros(len(p)),
        lambda rng, n: rng.uniform(0, 1, size=(n, 3)),
        1.0,
        1000,
    )
    assert est == 0.0 and math.isnan(hw)


def test_montecarlo_reproducible(euclid):
    box = ((0.5, 1.5), (0.2, 1.0), (0.5, 2.0))
    a = oracle.image_volume_mc(euclid, box, n=20000, seed=9)
    b = oracle.image_volume_mc(euclid, box, n=20000, seed=9)
    assert a == b


def test_image_volume_mc_vs_quadrature(euclid):
    box = ((0.5, 1.5), (0.2, 1.0), (0.5, 2.0))
    est, hw = oracle.image_volume_mc(euclid, box, n=200000, seed=3)
    quad = oracle.image_volume_quadrature(euclid, box)
    assert abs(est - quad) <= hw
