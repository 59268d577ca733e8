"""Unit tests for contraction criteria, exponent estimation, detectors."""

import math

import numpy as np
import pytest

from subfinsler import mcp
from subfinsler import norm_builder as NB
from subfinsler.convex_body import NormSpec, make_body
from subfinsler.convex_trig import Correspondence


@pytest.fixture(scope="module")
def euclid():
    return Correspondence(make_body(NormSpec("euclidean"), 8192))


@pytest.fixture(scope="module")
def lp15():
    return Correspondence(make_body(NormSpec("lp", params={"p": 1.5}), 8192))


@pytest.fixture(scope="module")
def square():
    return Correspondence(
        make_body(
            NormSpec(
                "polygon", params={"vertices": [[1, 1], [-1, 1], [-1, -1], [1, -1]]}
            )
        )
    )


def test_sigma_branches():
    assert mcp.sigma(0.0, 5.0, 0.3, 2.0) == 0.3
    assert mcp.sigma(1.0, 1.0, 0.5, math.pi) == math.inf
    x = 1.0 * math.sqrt(2.0 / 4.0)
    assert mcp.sigma(2.0, 4.0, 0.5, 1.0) == pytest.approx(
        math.sin(0.5 * x) / math.sin(x)
    )
    assert mcp.sigma(-2.0, 4.0, 0.5, 1.0) == pytest.approx(
        math.sinh(0.5 * x) / math.sinh(x)
    )


def test_tau_properties():
    # K = 0 collapses to t for any theta and N
    for t in (0.0, 0.3, 1.0):
        assert mcp.tau(0.0, 5.0, t, 7.0) == pytest.approx(t)
    assert mcp.tau(2.0, 5.0, 1.0, 0.5) == pytest.approx(1.0)
    assert mcp.tau(5.0 * math.pi**2, 6.0, 0.5, 1.0) == math.inf
    with pytest.raises(ValueError):
        mcp.tau(0.0, 1.0, 0.5, 1.0)
    d = mcp.DistortionCoeff(K=0.0, N=5.0, t=0.25, theta=3.0)
    assert d.tau == pytest.approx(0.25)


def test_check_necessary_euclid(euclid):
    assert mcp.check_necessary(euclid, 5.0).verdict == "pass"
    rep = mcp.check_necessary(euclid, 4.0)
    assert rep.verdict == "violation"
    assert rep.witnesses
    phi, om, t, lhs, rhs = rep.witnesses[0]
    assert lhs < rhs


def test_check_necessary_square(square):
    rep = mcp.check_necessary(square, 100.0)
    assert rep.verdict == "violation"
    assert rep.statistics["cells_skipped"] > 0


def test_check_sufficient_requires_regularity(square, euclid):
    with pytest.raises(ValueError):
        mcp.check_sufficient_C1_strict(square, 5.0)
    assert mcp.check_sufficient_C1_strict(euclid, 5.0).verdict == "pass"


def test_check_agreement_on_C1_strict(lp15):
    g = mcp.default_grid(lp15, n_phi=64, n_omega=64, t_levels=6)
    for N in (9.0, 5.0):
        a = mcp.check_necessary(lp15, N, g)
        b = mcp.check_sufficient_C1_strict(lp15, N, g)
        assert a.verdict == b.verdict


def test_diff_characterization_euclid(euclid):
    rep = mcp.check_diff_characterization(euclid, 5.0)
    assert rep.verdict == "pass"
    assert rep.statistics["sup_N"] == pytest.approx(5.0, abs=1e-3)
    assert mcp.check_diff_characterization(euclid, 4.9).verdict == "violation"


def test_diff_characterization_lp15(lp15):
    rep = mcp.check_diff_characterization(lp15, 7.0)
    # the exponent exceeds the zero-order bound 2q + 1 = 7 somewhere
    assert rep.statistics["sup_N"] >= 7.0 - 0.1
    with pytest.raises(ValueError):
        mcp.check_diff_characterization(
            Correspondence(make_body(NormSpec("lp", params={"p": 3.0}), 4096)), 7.0
        )


def test_sup_N_near_zero_euclid(euclid):
    res = mcp.estimate_sup_N_near_zero(euclid, 0.7)
    assert res == pytest.approx(5.0, abs=1e-3)


def test_sup_N_probe_schedule_divergence(euclid):
    # a synthetic growing schedule must not fool the detector on the disk
    probes = [(0.0, 1e-2 * 2.0**-k) for k in range(8)]
    res = mcp.estimate_sup_N_near_zero(euclid, 0.0, schedule=probes)
    assert res == pytest.approx(5.0, abs=1e-6)


def test_necessary_ratio_probe_euclid(euclid):
    assert mcp.necessary_ratio_probe(euclid, 0.3) == pytest.approx(1.0, abs=1e-9)


def test_necessary_ratio_probe_flat_order(lp15):
    # at a zero of order alpha = q the ratio tends to alpha - 1 = 2
    z = mcp.zero_set_analysis(lp15).zeros[1]
    res = mcp.necessary_ratio_probe(lp15, z)
    assert res == pytest.approx(2.0, abs=0.05)


def test_zero_set_euclid(euclid):
    z = mcp.zero_set_analysis(euclid)
    assert z.zeros == []
    assert z.q == 2.0 and z.bound == 5.0
    assert z.measure == 0.0


@pytest.mark.parametrize("p", [1.25, 1.5, 1.75])
def test_zero_set_lp(p):
    c = Correspondence(make_body(NormSpec("lp", params={"p": p}), 8192))
    z = mcp.zero_set_analysis(c)
    q = p / (p - 1.0)
    assert len(z.zeros) == 4
    quarter = c.polar_period / 4.0
    for v in z.zeros:
        assert math.remainder(v, quarter) == pytest.approx(0.0, abs=1e-6)
    assert z.q == pytest.approx(q, abs=0.05)
    assert z.bound == pytest.approx(2.0 * q + 1.0, abs=0.1)
    assert all(f.fractional for f in z.fits)


def test_branching_square_and_hexagon(square):
    rep = mcp.branching_probe(square, samples=256)
    assert rep.verdict == "violation"
    assert rep.statistics["max_transverse"] < 1e-9
    assert rep.statistics["max_z"] < 1e-9
    hexa = Correspondence(
        make_body(
            NormSpec(
                "polygon",
                params={
                    "vertices": [
                        [math.cos(k * math.pi / 3), math.sin(k * math.pi / 3)]
                        for k in range(6)
                    ]
                },
            )
        )
    )
    assert mcp.branching_probe(hexa, samples=256).verdict == "violation"


def test_branching_not_applicable(euclid):
    rep = mcp.branching_probe(euclid)
    assert rep.verdict == "inconclusive"
    assert "not applicable" in rep.notes


def test_discontinuity_rounded_square(euclid, lp15):
    rsq = Correspondence(
        make_body(
            NormSpec(
                "rounded_polygon",
                params={
                    "vertices": [[1, 1], [-1, 1], [-1, -1], [1, -1]],
                    "radius": 0.05,
                },
            ),
            32768,
        )
    )
    rep = mcp.discontinuity_probe(rsq, n_cap=100.0)
    assert rep.verdict == "violation"
    assert rep.statistics["jump_size"] > 10.0 * rep.statistics["noise"]
    for (_, om, t, lhs, rhs) in rep.witnesses:
        assert lhs < rhs and 0 < t < 1
    assert "not applicable" in mcp.discontinuity_probe(euclid).notes
    assert "not applicable" in mcp.discontinuity_probe(lp15).notes


def test_lipschitz_probe(euclid):
    for p in (3.0, 4.0):
        c = Correspondence(make_body(NormSpec("lp", params={"p": p}), 8192))
        rep = mcp.lipschitz_probe(c)
        assert rep.verdict == "violation"
        assert rep.statistics["growth"] > 4.0
    assert mcp.lipschitz_probe(euclid).verdict == "inconclusive"


def test_montecarlo_contraction(euclid):
    box = ((0.5, 1.5), (0.2, 1.2), (0.5, 2.5))
    rep = mcp.mcp_montecarlo(euclid, 5.0, box, 0.5, samples=20000, seed=1)
    assert rep.verdict == "pass"
    assert mcp.mcp_montecarlo(euclid, 5.0, box, 1.0, samples=5000).verdict == "pass"
    small = ((0.5, 1.5), (0.2, 1.2), (1e-3, 2e-3))
    rep = mcp.mcp_montecarlo(euclid, 4.5, small, 0.5, samples=20000, seed=1)
    assert rep.verdict == "violation"


def test_montecarlo_deterministic(euclid):
    box = ((0.5, 1.5), (0.2, 1.2), (0.5, 2.5))
    a = mcp.mcp_montecarlo(euclid, 5.0, box, 0.5, samples=5000, seed=7)
    b = mcp.mcp_montecarlo(euclid, 5.0, box, 0.5, samples=5000, seed=7)
    assert a.statistics == b.statistics


def test_brunn_minkowski_self(euclid):
    A = ((2.0, 2.5), (0.0, 0.5), (1.0, 1.5))
    rep = mcp.brunn_minkowski_probe(euclid, 0.0, 5.0, A, A, 0.5, samples=800, seed=2)
    # M_t(A, A) contains A, so the inequality holds with clear margin
    assert rep.verdict == "pass"
    assert rep.statistics["lhs"] >= rep.statistics["rhs"]


def test_example_bodies_probes():
    log = Correspondence(NB.build_body(NB.catalog("example_loglinear"), 4096))
    res = mcp.estimate_sup_N_near_zero(log, 0.0)
    assert isinstance(res, float) and res < 50.0

    osc = Correspondence(NB.build_body(NB.catalog("example_oscillation"), 4096))
    a, b, _ = NB.oscillation_schedule(22)
    probes = [(float(a[n]), float(b[n] + 1e-4 * b[n] - a[n])) for n in range(22)]
    assert mcp.estimate_sup_N_near_zero(osc, 0.0, schedule=probes) == "diverges"


def test_report_serialization(euclid):
    rep = mcp.check_necessary(euclid, 5.0)
    d = rep.as_dict()
    assert d["verdict"] == "pass"
    assert "numerical evidence" in d["notes"]
