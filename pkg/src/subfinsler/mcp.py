"""Volume-contraction criteria, curvature-exponent estimation, and
failure detectors for the sub-Finsler Heisenberg group.

Everything here produces numerical evidence on finite grids, never a
proof; reports say so explicitly.  The dangerous regime for all criteria
is omega -> 0, where the reduced Jacobian degenerates like omega^4, so
grids are log-spaced in omega and evaluation switches to a
cancellation-free quadrature route at small arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .convex_body import classify_regularity
from .convex_trig import Correspondence
from . import jacobian as jac
from . import heisenberg as heis

__all__ = [
    "sigma",
    "tau",
    "DistortionCoeff",
    "McpReport",
    "ZeroPointFit",
    "ZeroSetAnalysis",
    "Grid",
    "default_grid",
    "check_necessary",
    "check_sufficient_C1_strict",
    "check_diff_characterization",
    "estimate_sup_N_near_zero",
    "necessary_ratio_probe",
    "zero_set_analysis",
    "branching_probe",
    "discontinuity_probe",
    "lipschitz_probe",
    "mcp_montecarlo",
    "brunn_minkowski_probe",
]


# ---------------------------------------------------------------------------
# Distortion coefficients
# ---------------------------------------------------------------------------


def sigma(K: float, N: float, t: float, theta: float) -> float:
    """Model distortion rate sigma_{K,N}^{(t)}(theta); +inf past conjugacy."""
    if theta < 0:
        raise ValueError("theta must be nonnegative")
    if K * theta**2 >= N * math.pi**2:
        return math.inf
    if K == 0.0 or theta == 0.0:
        return t
    x = theta * math.sqrt(abs(K) / N)
    if K > 0:
        return math.sin(t * x) / math.sin(x)
    return math.sinh(t * x) / math.sinh(x)


def tau(K: float, N: float, t: float, theta: float) -> float:
    """Distortion coefficient t^(1/N) * sigma_{K,N-1}^(t)(theta)^(1-1/N)."""
    if N <= 1.0:
        raise ValueError("N must exceed 1")
    s = sigma(K, N - 1.0, t, theta)
    if math.isinf(s):
        return math.inf
    if t == 0.0:
        return 0.0
    return t ** (1.0 / N) * s ** (1.0 - 1.0 / N)


@dataclass(frozen=True)
class DistortionCoeff:
    """A (K, N, t, theta) distortion evaluation point."""

    K: float
    N: float
    t: float
    theta: float

    def __post_init__(self):
        if not self.N > 1.0:
            raise ValueError("N must exceed 1")
        if not 0.0 <= self.t <= 1.0:
            raise ValueError("t must lie in [0, 1]")
        if self.theta < 0.0:
            raise ValueError("theta must be nonnegative")

    @property
    def sigma(self) -> float:
        return sigma(self.K, self.N, self.t, self.theta)

    @property
    def tau(self) -> float:
        return tau(self.K, self.N, self.t, self.theta)


# ---------------------------------------------------------------------------
# Report containers
# ---------------------------------------------------------------------------


@dataclass
class McpReport:
    """Outcome of one criterion run; all verdicts are numerical evidence."""

    criterion: str
    norm: str
    grid: str
    verdict: str  # "pass" | "violation" | "inconclusive"
    witnesses: List[Tuple[float, float, float, float, float]] = field(
        default_factory=list
    )  # (phi, omega, t, lhs, rhs)
    statistics: dict = field(default_factory=dict)
    notes: str = ""

    def as_dict(self) -> dict:
        return {
            "criterion": self.criterion,
            "norm": self.norm,
            "grid": self.grid,
            "verdict": self.verdict,
            "witnesses": [list(w) for w in self.witnesses],
            "statistics": self.statistics,
            "notes": self.notes,
        }


@dataclass
class ZeroPointFit:
    """Power-law fit of the coupling derivative at one of its zeros."""

    angle: float
    continuous: bool
    alpha: Optional[float]
    amplitude: Optional[float]
    fit_quality: float
    infinite_order: bool
    fractional: bool


@dataclass
class ZeroSetAnalysis:
    """Structure of the zero set of the coupling derivative."""

    zeros: List[float]
    measure: float
    fits: List[ZeroPointFit]
    q: float
    bound: float
    notes: str = ""


# ---------------------------------------------------------------------------
# Grids
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Grid:
    phi: np.ndarray
    omega: np.ndarray
    t: np.ndarray

    def describe(self) -> str:
        return (
            f"phi: {len(self.phi)} nodes, omega: {len(self.omega)} log-spaced "
            f"nodes (both signs), t: {len(self.t)} dyadic levels"
        )


def default_grid(
    c: Correspondence,
    n_phi: int = 256,
    n_omega: int = 256,
    t_levels: int = 12,
    omega_min_frac: float = 1e-6,
    omega_max_frac: float = 0.995,
) -> Grid:
    """Log-spaced omega per sign down to omega_min_frac of the period;
    dyadic t levels.  The omega -> 0 regime is where criteria fail."""
    pp = c.polar_period
    phi = np.linspace(0.0, pp, n_phi, endpoint=False)
    half = max(n_omega // 2, 4)
    mags = np.geomspace(omega_min_frac * pp, omega_max_frac * pp, half)
    omega = np.concatenate([-mags[::-1], mags])
    # dyadic levels target the t -> 0 regime; the near-1 values catch
    # jump-type failures, whose margin vanishes like t^(N-1) otherwise
    t = np.concatenate(
        [0.5 ** np.arange(1, t_levels + 1), 1.0 - 0.5 ** np.arange(2, 8)]
    )
    return Grid(phi=phi, omega=omega, t=t)


# ---------------------------------------------------------------------------
# Vectorized reduced-Jacobian evaluation with error estimates
# ---------------------------------------------------------------------------

_GL12_X, _GL12_W = np.polynomial.legendre.leggauss(12)
_GL12_X = 0.5 * (_GL12_X + 1.0)  # nodes on [0, 1]
_GL12_W = 0.5 * _GL12_W


def _direct_error_floor(c: Correspondence) -> float:
    """Absolute noise floor of the 4-term closed-form evaluation."""
    if c._euclid_r4 is not None or c.body.spec.kind == "polygon":
        # exact trig table (round disk) or exact piecewise-linear table
        return 2e-14
    return 4.0 * (c.polar_period / c.body.n) ** 2


def _jr_direct_nocheck(c: Correspondence, phi, psi):
    """Closed-form reduced Jacobian without differentiability checks."""
    phi = np.asarray(phi, dtype=float)
    psi = np.asarray(psi, dtype=float)
    Q1 = c.polar_table.point(phi)
    Q2 = c.polar_table.point(phi + psi)
    P1 = c.table.point(c.from_polar(phi))
    P2 = c.table.point(c.from_polar(phi + psi))
    dot12 = Q2[..., 0] * P1[..., 0] + Q2[..., 1] * P1[..., 1]
    dot21 = P2[..., 0] * Q1[..., 0] + P2[..., 1] * Q1[..., 1]
    cr = P1[..., 0] * P2[..., 1] - P1[..., 1] * P2[..., 0]
    return 2.0 - dot12 - dot21 - psi * cr


def _window_kink_mask(c: Correspondence, phi, psi) -> np.ndarray:
    """True where [phi, phi+psi] contains a kink of the coupling derivative."""
    bps = jac._cprime_breakpoints(c)
    if len(bps) == 0:
        return np.zeros(np.shape(phi), dtype=bool)
    pp = c.polar_period
    lo = np.minimum(phi, phi + psi)
    hi = np.maximum(phi, phi + psi)
    # count breakpoints (periodically extended) strictly inside the window
    cum_lo = np.searchsorted(bps, np.mod(lo, pp), side="right") + np.floor(
        lo / pp
    ) * len(bps)
    cum_hi = np.searchsorted(bps, np.mod(hi, pp), side="right") + np.floor(
        hi / pp
    ) * len(bps)
    return cum_hi > cum_lo


def _jr_leading_grid(c: Correspondence, phi, psi):
    """Leading quadratic-form term of J_R, vectorized, cancellation-free.

    Returns (value, absolute error estimate).  Single-panel Gauss-Legendre
    moments of the coupling derivative, centered at the window start; the
    neglected remainder is O(psi^2) relative, kink windows get an inflated
    estimate for the quadrature error across the kink.
    """
    phi = np.asarray(phi, dtype=float)
    psi = np.asarray(psi, dtype=float)
    nodes = phi[..., None] + _GL12_X * psi[..., None]
    f = np.asarray(c.deriv_from_polar(nodes.ravel()), dtype=float).reshape(
        nodes.shape
    )
    f = np.where(np.isfinite(f), f, 0.0)
    w = _GL12_W * psi[..., None]
    shift = _GL12_X * psi[..., None]
    M0 = np.sum(w * f, axis=-1)
    M1 = np.sum(w * f * shift, axis=-1)
    M2 = np.sum(w * f * shift**2, axis=-1)
    val = M0 * M2 - M1**2
    rel = 0.2 * (psi * (2.0 * math.pi / c.polar_period)) ** 2 + 1e-12
    rel = rel + 5e-3 * _window_kink_mask(c, phi, psi)
    return val, np.abs(val) * rel + 1e-300


def _jr_grid(c: Correspondence, phi, psi):
    """Hybrid reduced-Jacobian evaluation: (value, abs error estimate)."""
    phi = np.asarray(phi, dtype=float)
    psi = np.asarray(psi, dtype=float)
    val = _jr_direct_nocheck(c, phi, psi)
    err = np.full(np.shape(val), _direct_error_floor(c))
    small = np.abs(psi) < jac.TAYLOR_SWITCH * c.polar_period
    if np.any(small):
        lead, lead_err = _jr_leading_grid(c, phi[small], psi[small])
        better = lead_err < err[small]
        v = val[small]
        e = err[small]
        v[better] = lead[better]
        e[better] = lead_err[better]
        val[small] = v
        err[small] = e
    return val, err


def _n_grid(c: Correspondence, phi, omega):
    """Vectorized pointwise contraction exponent 1 + omega dJ/J."""
    phi = np.asarray(phi, dtype=float)
    omega = np.asarray(omega, dtype=float)
    small = np.abs(omega) < jac.TAYLOR_SWITCH * c.polar_period
    out = np.full(np.shape(phi), np.nan)

    big = ~small
    if np.any(big):
        J = _jr_direct_nocheck(c, phi[big], omega[big])
        fT = np.asarray(
            c.deriv_from_polar(phi[big] + omega[big]), dtype=float
        )
        K = np.asarray(jac.K_function(c, phi[big], omega[big]), dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out[big] = 1.0 + omega[big] * fT * K / J
    if np.any(small):
        p, o = phi[small], omega[small]
        nodes = p[..., None] + _GL12_X * o[..., None]
        f = np.asarray(c.deriv_from_polar(nodes.ravel()), dtype=float).reshape(
            nodes.shape
        )
        f = np.where(np.isfinite(f), f, 0.0)
        scale = np.maximum(np.max(np.abs(f), axis=-1), 1e-300)
        fs = f / scale[..., None]
        m0 = np.sum(_GL12_W * fs, axis=-1)
        m1 = np.sum(_GL12_W * fs * _GL12_X, axis=-1)
        m2 = np.sum(_GL12_W * fs * _GL12_X**2, axis=-1)
        m2T = np.sum(_GL12_W * fs * (_GL12_X - 1.0) ** 2, axis=-1)
        fT = np.asarray(c.deriv_from_polar(p + o), dtype=float) / scale
        denom = m0 * m2 - m1**2
        with np.errstate(divide="ignore", invalid="ignore"):
            out[small] = 1.0 + fT * m2T / denom
    return out


def _n_ratio_window(c: Correspondence, phi: float, omega: float) -> float:
    """Scalar contraction exponent via overflow-safe unit-window moments.

    Valid in the small-omega regime where the Taylor remainder is
    negligible; works at window scales far below double-precision range
    of the raw Jacobian because only moment ratios enter.
    """
    pp = c.polar_period
    bps = jac._cprime_breakpoints(c)
    lo, hi = sorted((phi, phi + omega))
    cuts = [lo, hi]
    if len(bps):
        k0 = math.floor((lo - bps[-1]) / pp)
        k1 = math.ceil((hi - bps[0]) / pp)
        for k in range(k0, k1 + 1):
            for bp in bps + k * pp:
                if lo < bp < hi:
                    cuts.append(bp)
    cuts = np.unique(np.asarray(cuts))
    # map panels to the unit window x = (t - phi)/omega
    x_cuts = np.sort((cuts - phi) / omega)
    xs = []
    ws = []
    for a, b in zip(x_cuts[:-1], x_cuts[1:]):
        # geometric grading toward both panel ends
        sub = [a, b]
        h = (b - a) / 2.0
        while h > 1e-12:
            sub.append(a + h)
            sub.append(b - h)
            h /= 2.0
        seg = np.unique(np.asarray(sub))
        mid = 0.5 * (seg[:-1] + seg[1:])
        half = 0.5 * (seg[1:] - seg[:-1])
        xs.append((mid[:, None] + half[:, None] * (2.0 * _GL12_X - 1.0)).ravel())
        ws.append((half[:, None] * (2.0 * _GL12_W)).ravel())
    x = np.concatenate(xs)
    w = np.concatenate(ws)
    f = np.asarray(c.deriv_from_polar(phi + x * omega), dtype=float)
    f = np.where(np.isfinite(f), f, 0.0)
    scale = max(float(np.max(np.abs(f))), 1e-300)
    fs = f / scale
    m0 = float(np.sum(w * fs))
    m1 = float(np.sum(w * fs * x))
    m2 = float(np.sum(w * fs * x**2))
    m2T = float(np.sum(w * fs * (x - 1.0) ** 2))
    fT = float(np.asarray(c.deriv_from_polar(np.asarray(phi + omega)))) / scale
    denom = m0 * m2 - m1**2
    if denom <= 0.0 or not np.isfinite(denom):
        raise ValueError("degenerate ratio: vanishing Jacobian")
    return 1.0 + fT * m2T / denom


# ---------------------------------------------------------------------------
# Grid criteria
# ---------------------------------------------------------------------------


def _norm_label(c: Correspondence) -> str:
    return c.body.spec.label or c.body.spec.kind


def _filter_phi(c: Correspondence, phi: np.ndarray):
    """Drop phi nodes too close to coupling jumps; return (kept, n_skipped)."""
    jumps = jac._jump_angles(c)
    if len(jumps) == 0:
        return phi, 0
    pp = c.polar_period
    d = np.abs(np.mod(phi, pp)[:, None] - jumps[None, :])
    d = np.min(np.minimum(d, pp - d), axis=1)
    keep = d > 1e-6 * pp
    return phi[keep], int(np.sum(~keep))


def _skip_near_jumps(c: Correspondence, angles: np.ndarray) -> np.ndarray:
    jumps = jac._jump_angles(c)
    if len(jumps) == 0:
        return np.zeros(np.shape(angles), dtype=bool)
    pp = c.polar_period
    a = np.mod(np.asarray(angles, dtype=float), pp)
    d = np.abs(a[..., None] - jumps)
    d = np.min(np.minimum(d, pp - d), axis=-1)
    return d <= 1e-6 * pp


def _reverify_contraction(
    c: Correspondence, N: float, phi: float, omega: float, t: float, tol: float
) -> bool:
    """Re-evaluate a contraction witness with the high-precision routes."""

    def best(psi: float) -> float:
        if abs(psi) < jac.TAYLOR_SWITCH * c.polar_period:
            return jac.reduced_jacobian_taylor(c, phi, psi)
        return float(jac.reduced_jacobian(c, phi, psi))

    lhs = abs(best(omega * t))
    rhs = t ** (N - 1.0) * abs(best(omega))
    return lhs < rhs - tol


def _contraction_scan(
    c: Correspondence,
    N: float,
    grid: Optional[Grid],
    criterion: str,
    tol_rel: float,
    notes: str,
) -> McpReport:
    if grid is None:
        grid = default_grid(c)
    phi, n_phi_skipped = _filter_phi(c, np.asarray(grid.phi, dtype=float))
    P, Om = np.meshgrid(phi, np.asarray(grid.omega, dtype=float), indexing="ij")
    P = P.ravel()
    Om = Om.ravel()
    J1, e1 = _jr_grid(c, P, Om)
    skip1 = _skip_near_jumps(c, P + Om)
    n_checked = 0
    n_skipped = int(np.sum(skip1)) * len(grid.t) + n_phi_skipped * len(
        grid.omega
    ) * len(grid.t)
    witnesses: list = []
    margins: list = []
    worst = -math.inf
    for t in np.asarray(grid.t, dtype=float):
        Jt, et = _jr_grid(c, P, Om * t)
        skip = skip1 | _skip_near_jumps(c, P + Om * t)
        lhs = np.abs(Jt)
        rhs = t ** (N - 1.0) * np.abs(J1)
        tol = tol_rel * (lhs + rhs) + et + t ** (N - 1.0) * e1
        margin = rhs - lhs - tol
        margin[skip] = -np.inf
        n_checked += int(np.sum(~skip))
        n_skipped += int(np.sum(skip)) - int(np.sum(skip1))
        bad = margin > 0.0
        if np.any(bad):
            order = np.argsort(margin[bad])[::-1][:5]
            idx = np.flatnonzero(bad)[order]
            for i in idx:
                witnesses.append(
                    (float(P[i]), float(Om[i]), float(t), float(lhs[i]), float(rhs[i]))
                )
                margins.append(float(margin[i]))
        finite = np.isfinite(margin)
        if np.any(finite):
            worst = max(worst, float(np.max(margin[finite])))
    # independent re-verification of candidate witnesses at high precision
    confirmed = []
    for (w, m) in zip(witnesses, margins):
        p, om, t, lhs, rhs = w
        tol = tol_rel * (lhs + rhs) + _direct_error_floor(c) * (
            1.0 + t ** (N - 1.0)
        )
        try:
            if _reverify_contraction(c, N, p, om, t, tol):
                confirmed.append(w)
        except ValueError:
            pass  # witness at an undefined cell; drop it
    confirmed.sort(key=lambda w: w[4] - w[3], reverse=True)
    verdict = "violation" if confirmed else "pass"
    return McpReport(
        criterion=criterion,
        norm=_norm_label(c),
        grid=grid.describe(),
        verdict=verdict,
        witnesses=confirmed[:20],
        statistics={
            "N": N,
            "cells_checked": n_checked,
            "cells_skipped": n_skipped,
            "worst_margin": worst,
            "candidates": len(witnesses),
            "confirmed": len(confirmed),
        },
        notes=notes,
    )


def check_necessary(
    c: Correspondence, N: float, grid: Optional[Grid] = None, tol_rel: float = 1e-6
) -> McpReport:
    """Grid check of the necessary contraction inequality
    |J_R(phi, omega t)| >= t^(N-1) |J_R(phi, omega)|.

    Numerical evidence only; undefined cells (coupling jumps) are skipped
    and counted.  Violations are re-verified at higher precision.
    """
    return _contraction_scan(
        c,
        N,
        grid,
        criterion="necessary-contraction",
        tol_rel=tol_rel,
        notes="numerical evidence: necessary condition on a finite grid",
    )


def check_sufficient_C1_strict(
    c: Correspondence, N: float, grid: Optional[Grid] = None, tol_rel: float = 1e-6
) -> McpReport:
    """Same inequality as check_necessary; for C1 strictly convex norms it
    characterizes the contraction property, so a grid pass is a numerical
    certificate (not a proof)."""
    rep = classify_regularity(c.body)
    if not (rep.is_C1 and rep.is_strictly_convex):
        raise ValueError("requires a C1 strictly convex norm")
    return _contraction_scan(
        c,
        N,
        grid,
        criterion="sufficient-C1-strict",
        tol_rel=tol_rel,
        notes=(
            "numerical evidence: for C1 strictly convex norms the grid "
            "inequality is an iff-criterion; pass = numerical certificate"
        ),
    )


def check_diff_characterization(
    c: Correspondence, N: float, grid: Optional[Grid] = None, refine: bool = True
) -> McpReport:
    """Differential characterization for C1 strongly convex norms:
    contraction holds iff sup of the pointwise exponent stays <= N."""
    rep = classify_regularity(c.body)
    if not rep.is_strongly_convex:
        raise ValueError("requires a C1 strongly convex norm")
    if grid is None:
        grid = default_grid(c)
    P, Om = np.meshgrid(
        np.asarray(grid.phi, dtype=float),
        np.asarray(grid.omega, dtype=float),
        indexing="ij",
    )
    vals = _n_grid(c, P.ravel(), Om.ravel())
    finite = np.isfinite(vals)
    sup = float(np.max(vals[finite]))
    i = int(np.flatnonzero(finite)[np.argmax(vals[finite])])
    arg_phi, arg_om = float(P.ravel()[i]), float(Om.ravel()[i])
    if refine:
        # zoom once around the coarse argmax
        pp = c.polar_period
        dphi = pp / max(len(grid.phi), 2)
        phis = np.linspace(arg_phi - dphi, arg_phi + dphi, 64)
        oms = np.sign(arg_om) * np.geomspace(
            abs(arg_om) / 8.0, min(abs(arg_om) * 8.0, 0.995 * pp), 64
        )
        P2, Om2 = np.meshgrid(phis, oms, indexing="ij")
        v2 = _n_grid(c, P2.ravel(), Om2.ravel())
        f2 = np.isfinite(v2)
        if np.any(f2) and float(np.max(v2[f2])) > sup:
            sup = float(np.max(v2[f2]))
            j = int(np.flatnonzero(f2)[np.argmax(v2[f2])])
            arg_phi, arg_om = float(P2.ravel()[j]), float(Om2.ravel()[j])
    verdict = "pass" if sup <= N + 1e-9 else "violation"
    witnesses = []
    if verdict == "violation":
        witnesses.append((arg_phi, arg_om, 1.0, sup, N))
    return McpReport(
        criterion="diff-characterization",
        norm=_norm_label(c),
        grid=grid.describe() + (", one refinement pass" if refine else ""),
        verdict=verdict,
        witnesses=witnesses,
        statistics={"N": N, "sup_N": sup, "argmax_phi": arg_phi, "argmax_omega": arg_om},
        notes=(
            "numerical evidence: sup of the pointwise exponent over a grid; "
            "the criterion is an iff for C1 strongly convex norms"
        ),
    )


# ---------------------------------------------------------------------------
# Limit probes near omega = 0
# ---------------------------------------------------------------------------

Divergence = Union[float, str]


def _diverges(levels: Sequence[float]) -> bool:
    """Growth rule: overall factor >= 2 and still climbing (>= 1 percent per
    step) across the last three consecutive shrink levels."""
    vals = [v for v in levels if np.isfinite(v)]
    if len(vals) < 4:
        return False
    if vals[-1] < 2.0 * vals[0]:
        return False
    tail = vals[-4:]
    return all(b >= 1.01 * a for a, b in zip(tail[:-1], tail[1:]))


def estimate_sup_N_near_zero(
    c: Correspondence,
    phi_star: float,
    schedule: Optional[Sequence] = None,
) -> Divergence:
    """Max pointwise exponent over shrinking boxes around (phi_star, 0).

    ``schedule`` is either a sequence of box widths or a sequence of
    explicit (phi, omega) probe points, one per shrink level.  Returns the
    overall max, or "diverges" when the level maxima keep growing.
    """
    rep = classify_regularity(c.body)
    if not rep.is_strongly_convex:
        raise ValueError("requires a C1 strongly convex norm")
    if schedule is None:
        schedule = [0.02 * c.polar_period * 2.0 ** (-k) for k in range(16)]
    levels = []
    for item in schedule:
        if np.isscalar(item):
            w = float(item)
            best = -math.inf
            for p in np.linspace(phi_star - w, phi_star + w, 9):
                for om in np.geomspace(w / 64.0, w, 8):
                    for s in (om, -om):
                        try:
                            best = max(best, _n_ratio_window(c, float(p), float(s)))
                        except ValueError:
                            pass
            levels.append(best)
        else:
            p, om = item
            try:
                levels.append(_n_ratio_window(c, float(p), float(om)))
            except ValueError:
                levels.append(math.nan)
    if _diverges(levels):
        return "diverges"
    finite = [v for v in levels if np.isfinite(v)]
    if not finite:
        raise ValueError("no defined exponent on the schedule")
    return float(max(finite))


def necessary_ratio_probe(
    c: Correspondence,
    phi_star: float,
    schedule: Optional[Sequence[float]] = None,
) -> Divergence:
    """Limsup probe of omega f(phi*+omega) / integral of f over the window,
    where f is the coupling derivative.  Equals 1 for the round disk and
    alpha - 1 at a zero of fractional order alpha."""
    rep = classify_regularity(c.body)
    if not rep.is_strongly_convex:
        raise ValueError("requires a C1 strongly convex norm")
    if schedule is None:
        schedule = [0.02 * c.polar_period * 2.0 ** (-k) for k in range(24)]
    levels = []
    for om in schedule:
        om = float(om)
        x = phi_star + _GL12_X * om
        f = np.asarray(c.deriv_from_polar(x), dtype=float)
        f = np.where(np.isfinite(f), f, 0.0)
        scale = max(float(np.max(np.abs(f))), 1e-300)
        m0 = float(np.sum(_GL12_W * f / scale))
        fT = float(np.asarray(c.deriv_from_polar(np.asarray(phi_star + om))))
        if m0 <= 0.0:
            levels.append(math.nan)
            continue
        levels.append((fT / scale) / m0)
    if _diverges(levels):
        return "diverges"
    finite = [v for v in levels if np.isfinite(v)]
    if not finite:
        raise ValueError("no defined ratio on the schedule")
    # the limsup is approached along the tail of the shrink schedule
    return float(max(finite[-8:])) if len(finite) >= 8 else float(max(finite))


# ---------------------------------------------------------------------------
# Zero-set structure of the coupling derivative
# ---------------------------------------------------------------------------


def zero_set_analysis(
    c: Correspondence,
    n_samples: int = 16384,
    slope_cap: float = 40.0,
    fit_gate: float = 0.999,
) -> ZeroSetAnalysis:
    """Locate zeros of the coupling derivative and fit their flatness order.

    Per zero: dyadic log-log fit of f(phi* +/- h) over h in
    [1e-6, 1e-2] periods; order alpha = slope + 2; the curvature-exponent
    lower bound is 2q + 1 with q the largest fractional order.
    """
    rep = classify_regularity(c.body)
    if not rep.is_strongly_convex:
        raise ValueError("requires a C1 strongly convex norm")
    pp = c.polar_period
    grid = np.linspace(0.0, pp, n_samples, endpoint=False)
    f = np.asarray(c.deriv_from_polar(grid), dtype=float)
    f = np.where(np.isfinite(f), f, np.nan)
    scale = float(np.nanmax(np.abs(f)))
    thresh = 1e-6 * scale
    below = np.abs(f) < thresh
    measure = float(np.sum(below)) / n_samples * pp

    # zeros: refine each candidate local minimum of |f|; fractional-order
    # zeros are cusps, so a simple threshold on the raw samples misses
    # shallow ones (f ~ h^(alpha-2) decays slowly) and a bounded scalar
    # minimizer is used instead
    from scipy.optimize import minimize_scalar

    zeros = []
    af = np.where(np.isfinite(f), np.abs(f), np.inf)
    is_min = (
        (af <= np.roll(af, 1)) & (af <= np.roll(af, -1)) & (af < 0.3 * scale)
    )
    h = pp / n_samples
    for i in np.flatnonzero(is_min):
        if zeros and abs(grid[i] - zeros[-1]) < 4.0 * h:
            continue
        res = minimize_scalar(
            lambda x: float(np.abs(np.asarray(c.deriv_from_polar(np.asarray(x))))),
            bounds=(grid[i] - h, grid[i] + h),
            method="bounded",
            options={"xatol": 1e-14 * pp},
        )
        if res.fun < 1e-4 * scale:
            zeros.append(float(np.mod(res.x, pp)))

    fits = []
    hs = 1e-2 * pp * 0.5 ** np.arange(0, 14)
    hs = hs[hs >= 1e-6 * pp]
    q = 2.0
    any_infinite = False
    for z in zeros:
        gp = np.asarray(c.deriv_from_polar(z + hs), dtype=float)
        gm = np.asarray(c.deriv_from_polar(z - hs), dtype=float)
        g = 0.5 * (np.abs(gp) + np.abs(gm))
        fz = float(np.abs(np.asarray(c.deriv_from_polar(np.asarray(z)))))
        side = float(np.mean(np.abs(g[-2:])))
        continuous = side - fz <= 1e-2 * scale
        valid = np.isfinite(g) & (g > 0.0)
        if np.sum(valid) < 5:
            fits.append(
                ZeroPointFit(z, continuous, None, None, 0.0, False, False)
            )
            continue
        X = np.log(hs[valid])
        Y = np.log(g[valid])
        A = np.vstack([X, np.ones_like(X)]).T
        coef, res, _, _ = np.linalg.lstsq(A, Y, rcond=None)
        slope, intercept = float(coef[0]), float(coef[1])
        ss_tot = float(np.sum((Y - np.mean(Y)) ** 2))
        ss_res = float(res[0]) if len(res) else float(
            np.sum((Y - A @ coef) ** 2)
        )
        r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
        infinite = slope > slope_cap
        fractional = r2 >= fit_gate and not infinite
        alpha = slope + 2.0 if not infinite else math.inf
        fits.append(
            ZeroPointFit(
                z,
                continuous,
                alpha if (fractional or infinite) else None,
                math.exp(intercept) if fractional else None,
                r2,
                infinite,
                fractional,
            )
        )
        if infinite:
            any_infinite = True
        elif fractional:
            q = max(q, alpha)
    if any_infinite:
        q = math.inf
    bound = 2.0 * q + 1.0
    return ZeroSetAnalysis(
        zeros=zeros,
        measure=measure,
        fits=fits,
        q=q,
        bound=bound,
        notes=(
            "numerical evidence; thresholded zero set at a finite table "
            "cannot certify positive measure"
        ),
    )


# ---------------------------------------------------------------------------
# Failure detectors
# ---------------------------------------------------------------------------


def _voxel_volume(pts: np.ndarray) -> float:
    """Rough occupied-voxel volume of a sample cloud (a few points/cell)."""
    lo = pts.min(axis=0)
    span = np.maximum(pts.max(axis=0) - lo, 1e-12)
    h = float((np.prod(span) / max(len(pts) / 4.0, 1.0)) ** (1.0 / 3.0))
    cells = np.unique(np.floor((pts - lo) / h).astype(np.int64), axis=0)
    return len(cells) * h**3


def branching_probe(
    c: Correspondence,
    t_grid: Optional[Sequence[float]] = None,
    n_cap: float = 1e6,
    samples: int = 2048,
    seed: int = 0,
) -> McpReport:
    """Detect branching-driven contraction failure for non-C1 norms.

    Geodesics started along a flat segment of the polar sphere all share
    one planar direction while the control stays on the segment, so the
    t-intermediate image of a positive-volume endpoint set collapses onto
    a line.  Total collapse defeats the contraction inequality for every
    finite exponent up to the cap.
    """
    runs = c.plateaus_from_polar()
    if not runs:
        return McpReport(
            criterion="branching",
            norm=_norm_label(c),
            grid="n/a",
            verdict="inconclusive",
            notes="not applicable: no flat segment on the polar sphere",
        )
    a, b = max(runs, key=lambda r: r[1] - r[0])
    width = b - a
    phi_lo, phi_hi = a + 0.10 * width, a + 0.20 * width
    om_lo, om_hi = 1.5 * width, 1.7 * width
    t_cap = (b - phi_hi) / om_hi  # all controls stay on the segment below this
    if t_grid is None:
        t_grid = [t for t in (0.1, 0.2, 0.3, 0.95 * t_cap) if t < t_cap]
    rng = np.random.Generator(np.random.Philox(seed))
    r = rng.uniform(0.5, 1.0, samples)
    phi = rng.uniform(phi_lo, phi_hi, samples)
    om = rng.uniform(om_lo, om_hi, samples)
    # collapse direction: rotate the segment chord by -90 degrees
    Qm = c.polar_table.point(np.array([a + 0.4 * width, a + 0.6 * width]))
    chord = Qm[1] - Qm[0]
    u = np.array([chord[1], -chord[0]])
    u /= np.hypot(*u)
    max_off = 0.0
    max_z = 0.0
    for t in t_grid:
        for i in range(samples):
            g = heis.exp_map(c, heis.GeodesicParams(r[i], phi[i], om[i]), t)
            max_off = max(max_off, abs(g[0] * u[1] - g[1] * u[0]))
            max_z = max(max_z, abs(g[2]))
    collapsed = max_off < 1e-9 and max_z < 1e-9
    # positive endpoint volume: voxel occupancy of the unit-time image (the
    # closed-form Jacobian does not apply while the control sits on a flat)
    ends = np.stack(
        [
            heis.exp_map(c, heis.GeodesicParams(r[i], phi[i], om[i]), 1.0)
            for i in range(samples)
        ]
    )
    svals = np.linalg.svd(ends - ends.mean(axis=0), compute_uv=False)
    vol_est = _voxel_volume(ends)
    positive = vol_est > 0.0 and svals[-1] > 1e-6 * svals[0]
    verdict = "violation" if (collapsed and positive) else "inconclusive"
    hw = 0.0
    witnesses = []
    if verdict == "violation":
        for N in (2.0, 10.0, 100.0, min(n_cap, 700.0), n_cap):
            t = t_grid[0]
            rhs = math.exp(min(N * math.log(t) + math.log(vol_est), 700.0))
            if rhs > 1e-300:
                witnesses.append((float(phi_lo), float(om_lo), float(t), 0.0, rhs))
    return McpReport(
        criterion="branching",
        norm=_norm_label(c),
        grid=f"flat segment [{a:.6g}, {b:.6g}], {samples} samples, t {list(t_grid)}",
        verdict=verdict,
        witnesses=witnesses,
        statistics={
            "n_cap": n_cap,
            "max_transverse": max_off,
            "max_z": max_z,
            "endpoint_volume": vol_est,
            "endpoint_volume_hw": hw,
            "collapse_time": t_cap,
        },
        notes=(
            "numerical evidence: intermediate image collapses onto a line "
            "(zero volume) while the endpoint set has positive volume, so "
            "the contraction inequality fails for every exponent up to the "
            "cap"
        ),
    )


def _jump_candidates(c: Correspondence):
    """(phi_bar, psi_jump) pairs crossing each coupling jump from a generic
    start angle."""
    jumps = jac._jump_angles(c)
    pp = c.polar_period
    out = []
    for j in jumps:
        for frac in (0.23, 0.41, 0.68):
            phi_bar = float(np.mod(j - frac * pp, pp))
            psi = float(np.mod(j - phi_bar, pp))
            if psi < 0.05 * pp:
                psi += pp
            out.append((phi_bar, psi))
    return out


def discontinuity_probe(
    c: Correspondence,
    phi_bar: Optional[float] = None,
    n_cap: float = 100.0,
) -> McpReport:
    """Detect contraction failure from a jump of the reduced Jacobian.

    For C1 but not strictly convex norms the coupling jumps, and
    psi -> J_R(phi_bar, psi) jumps upward across the corresponding angle;
    squeezing t toward 1 across the jump violates the contraction
    inequality for every exponent up to the cap.
    """
    cands = _jump_candidates(c)
    if not cands:
        return McpReport(
            criterion="discontinuity",
            norm=_norm_label(c),
            grid="n/a",
            verdict="inconclusive",
            notes="not applicable: the coupling has no jumps",
        )
    if phi_bar is not None:
        jumps = jac._jump_angles(c)
        pp = c.polar_period
        cands = []
        for j in jumps:
            psi = float(np.mod(j - phi_bar, pp))
            if psi < 0.05 * pp:
                psi += pp
            cands.append((float(phi_bar), psi))
    best = None
    hs = 1e-3 * c.polar_period * 0.5 ** np.arange(0, 8)
    for pb, pj in cands:
        try:
            J_minus = float(jac.reduced_jacobian(c, pb, pj - hs[-1]))
            J_plus = float(jac.reduced_jacobian(c, pb, pj + hs[-1]))
            noise_m = abs(
                float(jac.reduced_jacobian(c, pb, pj - hs[-2])) - J_minus
            )
            noise_p = abs(
                float(jac.reduced_jacobian(c, pb, pj + hs[-2])) - J_plus
            )
        except ValueError:
            continue
        noise = max(noise_m, noise_p, 1e-14)
        if J_plus - J_minus > 10.0 * noise and (best is None or J_plus - J_minus > best[2]):
            best = (pb, pj, J_plus - J_minus, J_minus, J_plus, noise)
    if best is None:
        return McpReport(
            criterion="discontinuity",
            norm=_norm_label(c),
            grid=f"{len(cands)} jump crossings scanned",
            verdict="inconclusive",
            notes="no upward jump of the reduced Jacobian detected",
        )
    pb, pj, jump, J1, J2, noise = best
    witnesses = []
    failed = []
    for N in sorted({2.0, 5.0, 10.0, 25.0, 50.0, n_cap}):
        if N > n_cap:
            continue
        # squeeze the jump: t -> 1 makes t^(N-1) exceed J1/J2
        h = pj * (1.0 - J1 / J2) / (8.0 * max(N, 2.0))
        h = max(h, 2.0 * float(hs[-1]))
        t = (pj - h) / (pj + h)
        lhs = abs(float(jac.reduced_jacobian(c, pb, pj - h)))
        rhs = t ** (N - 1.0) * abs(float(jac.reduced_jacobian(c, pb, pj + h)))
        if lhs < rhs - 10.0 * noise:
            witnesses.append((pb, pj + h, t, lhs, rhs))
        else:
            failed.append(N)
    verdict = "violation" if witnesses and not failed else "inconclusive"
    return McpReport(
        criterion="discontinuity",
        norm=_norm_label(c),
        grid=f"jump at phi={pb:.6g}, psi={pj:.6g}; dyadic one-sided limits",
        verdict=verdict,
        witnesses=witnesses,
        statistics={
            "n_cap": n_cap,
            "jump_size": jump,
            "J_minus": J1,
            "J_plus": J2,
            "noise": noise,
            "failed_N": failed,
        },
        notes=(
            "numerical evidence: upward jump of the reduced Jacobian "
            "violates the contraction inequality for every exponent up to "
            "the cap"
        ),
    )


def lipschitz_probe(
    c: Correspondence,
    phi: Optional[float] = None,
    n_cap: float = 200.0,
    n_scales: int = 14,
) -> McpReport:
    """Detect the log-Jacobian Lipschitz blow-up of C1 strictly convex
    norms that are not strongly convex.

    At angles where the coupling derivative is unbounded, the two-point
    Lipschitz quotient of log J_R(phi, .) near half the polar period grows
    without bound across dyadic scales, defeating the differential
    contraction criterion for every exponent up to the cap.
    """
    rep = classify_regularity(c.body)
    if not (rep.is_C1 and rep.is_strictly_convex):
        return McpReport(
            criterion="lipschitz",
            norm=_norm_label(c),
            grid="n/a",
            verdict="inconclusive",
            notes="not applicable: requires a C1 strictly convex norm",
        )
    pp = c.polar_period
    if phi is None:
        # aim the half-period window end at the most singular angle of the
        # coupling derivative
        g = np.linspace(0.0, pp, 4096, endpoint=False)
        f = np.asarray(c.deriv_from_polar(g), dtype=float)
        f = np.where(np.isfinite(f), f, np.inf)
        phi = float(g[int(np.argmax(f))] - 0.5 * pp)
    om0 = 0.5 * pp
    hs = 1e-2 * pp * 0.5 ** np.arange(n_scales)
    quotients = []
    for h in hs:
        jp = float(jac.reduced_jacobian(c, phi, om0 + h))
        jm = float(jac.reduced_jacobian(c, phi, om0 - h))
        if jp <= 0 or jm <= 0:
            quotients.append(math.nan)
            continue
        quotients.append(abs(math.log(jp) - math.log(jm)) / (2.0 * h))
    vals = [v for v in quotients if np.isfinite(v)]
    blow_up = (
        len(vals) >= 5
        and vals[-1] >= 4.0 * vals[0]
        and all(b >= 1.05 * a for a, b in zip(vals[-4:-1], vals[-3:]))
    )
    verdict = "violation" if blow_up else "inconclusive"
    witnesses = [
        (float(phi), float(om0 + h), float(h), float(q), float(vals[0]))
        for h, q in zip(hs, quotients)
        if np.isfinite(q)
    ][-5:]
    return McpReport(
        criterion="lipschitz",
        norm=_norm_label(c),
        grid=f"dyadic scales {hs[0]:.3g} .. {hs[-1]:.3g} at phi={phi:.6g}",
        verdict=verdict,
        witnesses=witnesses if blow_up else [],
        statistics={
            "n_cap": n_cap,
            "quotients": [float(v) for v in quotients],
            "growth": (vals[-1] / vals[0]) if vals else math.nan,
        },
        notes=(
            "numerical evidence: unbounded Lipschitz quotient of the "
            "log-Jacobian implies failure of the differential contraction "
            "criterion for every exponent up to the cap"
            if blow_up
            else "quotient bounded across the probed scales"
        ),
    )


# ---------------------------------------------------------------------------
# Monte-Carlo probes
# ---------------------------------------------------------------------------

ParamBox = Tuple[Tuple[float, float], Tuple[float, float], Tuple[float, float]]


def _sample_box(rng, box: ParamBox, n: int):
    (r0, r1), (p0, p1), (o0, o1) = box
    if o0 * o1 <= 0.0:
        raise ValueError("parameter box must avoid omega = 0")
    return (
        rng.uniform(r0, r1, n),
        rng.uniform(p0, p1, n),
        rng.uniform(o0, o1, n),
    )


def _box_volume(box: ParamBox) -> float:
    return float(
        abs(
            (box[0][1] - box[0][0])
            * (box[1][1] - box[1][0])
            * (box[2][1] - box[2][0])
        )
    )


def mcp_montecarlo(
    c: Correspondence,
    N: float,
    box: ParamBox,
    t: float,
    samples: int = 100000,
    seed: int = 0,
) -> McpReport:
    """Monte-Carlo contraction test on the geodesic image of a parameter box.

    The endpoint set is the image of the (r, phi, omega) box under the
    unit-time geodesic map; volumes of it and of its t-intermediate image
    are integrals of the endpoint-map Jacobian over the box (area formula,
    the map being injective on the uniqueness domain), estimated with a
    paired Monte-Carlo difference for a tight confidence interval.
    """
    rep = classify_regularity(c.body)
    if not (rep.is_C1 and rep.is_strictly_convex):
        raise ValueError("requires a C1 strictly convex norm")
    if not 0.0 < t <= 1.0:
        raise ValueError("t must lie in (0, 1]")
    rng = np.random.Generator(np.random.Philox(seed))
    r, phi, om = _sample_box(rng, box, samples)
    J1, _ = _jr_grid(c, phi, om)
    Jt, _ = _jr_grid(c, phi, om * t)
    dens1 = r**3 / om**4 * np.abs(J1)
    denst = r**3 * t / om**4 * np.abs(Jt)
    vol = _box_volume(box)
    diff = denst - t**N * dens1
    est = vol * float(np.mean(diff))
    hw = 1.96 * vol * float(np.std(diff)) / math.sqrt(samples)
    vol_t = vol * float(np.mean(denst))
    vol_1 = vol * float(np.mean(dens1))
    if est >= -hw:
        verdict = "pass" if est - hw >= -1e-12 * max(vol_1, 1.0) else "inconclusive"
    else:
        verdict = "violation"
    if verdict == "inconclusive":
        notes = "confidence interval straddles the decision boundary; raise samples"
    else:
        notes = "numerical evidence: paired Monte-Carlo volume comparison"
    witnesses = []
    if verdict == "violation":
        i = int(np.argmin(diff))
        witnesses.append(
            (float(phi[i]), float(om[i]), float(t), float(denst[i]), float(t**N * dens1[i]))
        )
    return McpReport(
        criterion="montecarlo-contraction",
        norm=_norm_label(c),
        grid=f"param box {box}, {samples} samples, seed {seed}",
        verdict=verdict,
        witnesses=witnesses,
        statistics={
            "N": N,
            "t": t,
            "volume_t": vol_t,
            "volume_1": vol_1,
            "scaled_volume_1": t**N * vol_1,
            "difference": est,
            "half_width": hw,
        },
        notes=notes,
    )


def brunn_minkowski_probe(
    c: Correspondence,
    K: float,
    N: float,
    A: Sequence[Tuple[float, float]],
    B: Sequence[Tuple[float, float]],
    t: float,
    samples: int = 2000,
    seed: int = 0,
) -> McpReport:
    """Monte-Carlo probe of the set-interpolation volume inequality.

    A and B are axis boxes in the group; the t-intermediate set is sampled
    pairwise through the geodesic inversion, its volume estimated by voxel
    occupancy (a rough lower-bound probe, not a certificate).
    """
    rng = np.random.Generator(np.random.Philox(seed))

    def sample(box, n):
        return np.stack(
            [rng.uniform(lo, hi, n) for lo, hi in box], axis=1
        )

    xa = sample(A, samples)
    xb = sample(B, samples)
    mids = []
    dists = []
    failures = 0
    for x, y in zip(xa, xb):
        d = heis.group_mul(heis.group_inv(x), y)
        try:
            prm = heis.log_map(c, d)
            g = heis.exp_map(c, prm, t)
        except (ValueError, RuntimeError):
            failures += 1
            continue
        mids.append(heis.group_mul(x, g))
        dists.append(prm.r)
    if len(mids) < samples // 2:
        return McpReport(
            criterion="brunn-minkowski",
            norm=_norm_label(c),
            grid=f"A={A}, B={B}, t={t}, {samples} pairs",
            verdict="inconclusive",
            statistics={"midpoint_failures": failures},
            notes="too many geodesic-inversion failures",
        )
    pts = np.asarray(mids)
    vol_mid = _voxel_volume(pts)
    vol_A = float(np.prod([hi_ - lo_ for lo_, hi_ in A]))
    vol_B = float(np.prod([hi_ - lo_ for lo_, hi_ in B]))
    theta = float(np.min(dists)) if K >= 0 else float(np.max(dists))
    ta = tau(K, N, 1.0 - t, theta)
    tb = tau(K, N, t, theta)
    lhs = vol_mid ** (1.0 / N)
    rhs = ta * vol_A ** (1.0 / N) + tb * vol_B ** (1.0 / N)
    if lhs >= rhs:
        verdict = "pass"
    elif lhs < 0.8 * rhs:
        verdict = "violation"
    else:
        verdict = "inconclusive"
    return McpReport(
        criterion="brunn-minkowski",
        norm=_norm_label(c),
        grid=f"A={A}, B={B}, t={t}, {samples} pairs, seed {seed}",
        verdict=verdict,
        witnesses=[(math.nan, math.nan, t, lhs, rhs)],
        statistics={
            "K": K,
            "N": N,
            "volume_mid": vol_mid,
            "volume_A": vol_A,
            "volume_B": vol_B,
            "theta": theta,
            "lhs": lhs,
            "rhs": rhs,
            "midpoint_failures": failures,
        },
        notes=(
            "numerical evidence: voxel-occupancy volume is a rough lower "
            "bound; verdicts near the boundary are inconclusive by design"
        ),
    )
