"""Unit tests for the endpoint-map Jacobian and its expansion."""

import math

import numpy as np
import pytest

from subfinsler import jacobian as J
from subfinsler.convex_body import NormSpec, make_body
from subfinsler.convex_trig import Correspondence


@pytest.fixture(scope="module")
def euclid():
    return Correspondence(make_body(NormSpec("euclidean"), 8192))


@pytest.fixture(scope="module")
def lp15():
    return Correspondence(make_body(NormSpec("lp", params={"p": 1.5}), 16384))


def euclid_JR(psi):
    return 2.0 - 2.0 * np.cos(psi) - psi * np.sin(psi)


def test_reduced_jacobian_euclid_closed_form(euclid):
    phi = np.linspace(0, 2 * math.pi, 65)
    psi = np.linspace(0.1, 2 * math.pi - 0.1, 41)
    P, S = np.meshgrid(phi, psi)
    vals = J.reduced_jacobian(euclid, P, S)
    np.testing.assert_allclose(vals, euclid_JR(S), atol=1e-12)


def test_reduced_jacobian_at_zero(euclid, lp15):
    assert float(J.reduced_jacobian(euclid, 0.7, 0.0)) == pytest.approx(0.0, abs=1e-12)
    assert float(J.reduced_jacobian(lp15, 0.7, 0.0)) == pytest.approx(0.0, abs=1e-7)


def test_reduced_jacobian_positive_beyond_half_period(euclid):
    assert float(J.reduced_jacobian(euclid, 0.1, 1.5 * math.pi)) == pytest.approx(
        2 + 1.5 * math.pi
    )


def test_K_function_euclid(euclid):
    assert float(J.K_function(euclid, 0.3, math.pi / 2)) == pytest.approx(1.0)
    assert float(J.K_function(euclid, 0.0, math.pi)) == pytest.approx(math.pi)
    assert float(J.K_function(euclid, 0.2, 0.0)) == pytest.approx(0.0, abs=1e-12)


def test_K_positive_on_half_period_strongly_convex(lp15):
    phi = np.linspace(0, lp15.polar_period, 40)
    psi = np.linspace(1e-2, lp15.polar_table.half_period, 40)
    P, S = np.meshgrid(phi, psi)
    assert np.all(J.K_function(lp15, P, S) > 0)


def test_dJR_domega_routes_agree(euclid, lp15):
    for c in (euclid, lp15):
        for om in (0.3, 0.9):
            d1 = J.dJR_domega(c, 0.4, om, method="direct")
            d2 = J.dJR_domega(c, 0.4, om, method="taylor")
            assert d2 == pytest.approx(d1, rel=1e-5, abs=1e-9)


def test_dJR_euclid_closed_form(euclid):
    om = 0.8
    assert J.dJR_domega(euclid, 0.2, om, "direct") == pytest.approx(
        math.sin(om) - om * math.cos(om), abs=1e-12
    )
    assert J.dJR_domega(euclid, 0.2, 0.0) == pytest.approx(0.0, abs=1e-12)


def test_dJR_matches_finite_difference(lp15):
    # h must span many polyline edges: the tabulated trig is piecewise
    # linear, so a too-small step measures chord slopes, not the derivative
    h = 1e-2
    for om in (0.5, 1.4):
        fd = (
            float(J.reduced_jacobian(lp15, 0.7, om + h))
            - float(J.reduced_jacobian(lp15, 0.7, om - h))
        ) / (2 * h)
        assert J.dJR_domega(lp15, 0.7, om, "direct") == pytest.approx(
            fd, rel=5e-3, abs=1e-6
        )


def test_taylor_leading_euclid(euclid):
    for om in (0.05, 0.3):
        assert J.taylor_leading(euclid, 0.4, om) == pytest.approx(
            om**4 / 12.0, rel=1e-10
        )
    assert J.taylor_leading(euclid, 0.4, 0.0) == 0.0


def test_remainder_euclid_small_omega(euclid):
    # for the disk R(phi, omega) = JR - omega^4/12 = -omega^6/180 + ...
    for om in (0.01, 0.1):
        R, dR = J.taylor_remainder(euclid, 0.4, om)
        assert R == pytest.approx(-(om**6) / 180.0, rel=5e-3)
    assert J.taylor_remainder(euclid, 0.4, 0.0) == (0.0, 0.0)


def test_expansion_identity(euclid, lp15):
    rng = np.random.default_rng(5)
    for c in (euclid, lp15):
        for _ in range(25):
            phi = rng.uniform(0, c.polar_period)
            om = rng.uniform(-0.5, 0.5) * c.polar_period
            if abs(om) < 1e-3:
                continue
            JR = float(J.reduced_jacobian(c, phi, om))
            R, _ = J.taylor_remainder(c, phi, om)
            assert abs(JR - J.taylor_leading(c, phi, om) - R) <= 1e-6 * (1 + abs(JR))


def test_N_ratio_euclid(euclid):
    assert J.N_ratio(euclid, 0.3, 1e-2) == pytest.approx(5.0, abs=1e-3)
    assert J.N_ratio(euclid, 0.3, math.pi) == pytest.approx(1 + math.pi**2 / 4)
    with pytest.raises(ValueError):
        J.N_ratio(euclid, 0.3, 0.0)


def test_full_jacobian(euclid):
    assert J.full_jacobian(euclid, 1.0, 0.0, math.pi, 1.0) == pytest.approx(
        4.0 / math.pi**4
    )
    # r^3 scaling
    base = J.full_jacobian(euclid, 1.0, 0.2, 1.1, 0.8)
    assert J.full_jacobian(euclid, 2.0, 0.2, 1.1, 0.8) == pytest.approx(8.0 * base)
    assert J.full_jacobian(euclid, 1.0, 0.2, 1.1, 0.0) == 0.0


def test_positivity_strongly_convex(lp15):
    phi = np.linspace(0, lp15.polar_period, 32, endpoint=False)
    psi = np.linspace(1e-3, lp15.polar_period - 1e-3, 64)
    P, S = np.meshgrid(phi, psi)
    assert np.all(J.reduced_jacobian(lp15, P, S) > 0)


def test_undefined_at_jump():
    sq = Correspondence(
        make_body(
            NormSpec(
                "polygon", params={"vertices": [[1, 1], [-1, 1], [-1, -1], [1, -1]]}
            )
        )
    )
    jumps = J._jump_angles(sq)
    assert len(jumps) == 4
    with pytest.raises(ValueError):
        J.reduced_jacobian(sq, float(jumps[0]), 0.5)
    # off the jumps the staircase coupling is perfectly well-defined
    val = float(J.reduced_jacobian(sq, float(jumps[0]) + 0.3, 1.0))
    assert np.isfinite(val)


def test_P_family_anchors():
    assert J.P_alpha_s(0.0, 2.5) == 0.0
    for al in (2.0, 2.5, 3.0, 4.0):
        assert J.P_ratio(1e-6, al) == pytest.approx(4.0, abs=1e-3)
        assert J.P_ratio(1e6, al) == pytest.approx(2 * al, abs=1e-2)
        assert J.P_ratio(-1e6, al) == pytest.approx(2 * al, abs=1e-2)
        # positivity with unique zero at 0
        for s in (-0.5, -1e-3, 1e-3, 2.0):
            assert J.P_alpha_s(s, al) > 0
    with pytest.raises(ValueError):
        J.P_alpha_s(0.1, 1.5)


def test_P_alpha_two_argument_consistency():
    assert J.P_alpha(1.0, 0.7, 2.5) == pytest.approx(J.P_alpha_s(0.7, 2.5), rel=1e-12)
    # matches brute-force quadrature of the defining double integral
    from scipy.integrate import dblquad

    al, phi, om = 2.5, 0.8, 0.6
    val, _ = dblquad(
        lambda s, t: 0.5 * (t - s) ** 2 * abs(t) ** (al - 2) * abs(s) ** (al - 2),
        phi,
        phi + om,
        phi,
        phi + om,
    )
    assert J.P_alpha(phi, om, al) == pytest.approx(val, rel=1e-8)


def test_jacobian_sample_bundle(lp15):
    s = J.jacobian_sample(lp15, 0.6, 0.9)
    assert s.J_R > 0 and s.N_ratio is not None and np.isfinite(s.dJR_domega)
    assert s.J_R == pytest.approx(float(J.reduced_jacobian(lp15, 0.6, 0.9)))
