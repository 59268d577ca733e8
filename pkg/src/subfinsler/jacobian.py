"""Jacobian of the geodesic endpoint map and its small-rotation expansion.

All angles here live on the polar side of a :class:`Correspondence`; the
coupled body-side angle of ``phi`` is ``c.from_polar(phi)`` and the
derivative of that coupling, written ``cprime`` throughout, is the sole
carrier of boundary-curvature information.

Two evaluation routes are provided for the reduced Jacobian and its
omega-derivative: the direct trigonometric formula (accurate away from
omega = 0) and an exact integral expansion — a leading double integral
plus a remainder triple integral — which is the stable evaluator for
small omega where the direct formula cancels catastrophically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import mpmath
import numpy as np
from scipy.integrate import cumulative_simpson

from .convex_body import _cross2
from .convex_trig import Correspondence

__all__ = [
    "JacobianSample",
    "reduced_jacobian",
    "full_jacobian",
    "K_function",
    "dJR_domega",
    "N_ratio",
    "taylor_leading",
    "taylor_remainder",
    "jacobian_sample",
    "P_alpha",
    "P_alpha_s",
    "dP_alpha_s",
]

# below this fraction of the period, |omega| triggers the integral route
TAYLOR_SWITCH = 0.05


@dataclass(frozen=True)
class JacobianSample:
    phi: float
    omega: float
    J_R: float
    dJR_domega: Optional[float]
    K_val: float
    N_ratio: Optional[float]


# ---------------------------------------------------------------------------
# Direct trigonometric formulas
# ---------------------------------------------------------------------------


def _jump_angles(c: Correspondence) -> np.ndarray:
    """Polar-side angles where the coupling jumps (body flat edges)."""
    cached = getattr(c, "_jump_angle_cache", None)
    if cached is not None:
        return cached
    x = c._phi_nodes
    y = c._theta_nodes
    tol = 1e-12 * max(c.period, 1.0)
    jumps = np.sort(np.mod(x[:-1][(np.diff(x) <= tol) & (np.diff(y) > tol)], c.polar_period))
    if len(jumps) > 1:
        # a flat edge split by the canonical axis vertex yields two node
        # pairs at the same angle; keep one representative per angle
        keep = np.concatenate([[True], np.diff(jumps) > 1e-9 * c.polar_period])
        if jumps[-1] - jumps[0] >= c.polar_period * (1 - 1e-9):
            keep[-1] = False
        jumps = jumps[keep]
    c._jump_angle_cache = jumps
    return c._jump_angle_cache


def _check_single_valued(c: Correspondence, angles) -> None:
    jumps = _jump_angles(c)
    if len(jumps) == 0:
        return
    a = np.mod(
        np.atleast_1d(np.asarray(angles, dtype=float)).ravel(), c.polar_period
    )
    d = np.abs(a[:, None] - jumps[None, :])
    d = np.min(np.minimum(d, c.polar_period - d), axis=1)
    if np.any(d <= 1e-12 * c.polar_period):
        raise ValueError("undefined at non-differentiability point")


def reduced_jacobian(c: Correspondence, phi, psi):
    """Reduced Jacobian J_R(phi, psi) by the direct formula (vectorized)."""
    phi = np.asarray(phi, dtype=float)
    psi = np.asarray(psi, dtype=float)
    _check_single_valued(c, phi)
    _check_single_valued(c, phi + psi)
    Q1 = c.polar_table.point(phi)
    Q2 = c.polar_table.point(phi + psi)
    P1 = c.table.point(c.from_polar(phi))
    P2 = c.table.point(c.from_polar(phi + psi))
    dot = lambda a, b: a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1]
    return 2.0 - dot(Q2, P1) - dot(P2, Q1) - psi * _cross2(P1, P2)


def K_function(c: Correspondence, phi, psi):
    """Auxiliary function K(phi, psi); for the disk it is sin - psi cos."""
    phi = np.asarray(phi, dtype=float)
    psi = np.asarray(psi, dtype=float)
    _check_single_valued(c, phi)
    Q1 = c.polar_table.point(phi)
    Q2 = c.polar_table.point(phi + psi)
    P1 = c.table.point(c.from_polar(phi))
    return _cross2(Q1, Q2) - psi * (
        Q2[..., 0] * P1[..., 0] + Q2[..., 1] * P1[..., 1]
    )


def full_jacobian(c: Correspondence, r: float, phi: float, omega: float, t: float):
    """Jacobian determinant of the endpoint map, r^3 t / omega^4 * J_R."""
    return (r**3 * t / omega**4) * reduced_jacobian(c, phi, omega * t)


# ---------------------------------------------------------------------------
# Quadrature machinery for the integral route
# ---------------------------------------------------------------------------


def _cprime_breakpoints(c: Correspondence) -> np.ndarray:
    """Angles (mod polar period) where cprime may kink or vanish."""
    hook = getattr(c.body, "cprime_breakpoints", None)
    if hook is not None:
        return np.mod(np.asarray(hook, dtype=float), c.polar_period)
    if c.body.spec.kind == "lp" and c._euclid_r4 is None:
        axes = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
        return np.sort(c.polar_table.angle_of_direction(axes))
    return np.empty(0)


def _panels(c: Correspondence, a: float, b: float):
    """Panel endpoints covering [a, b], split at breakpoints and graded
    geometrically toward them (where cprime may vanish or blow up)."""
    per = c.polar_period
    bps = _cprime_breakpoints(c)
    pts = [a, b]
    if len(bps):
        k0 = math.floor((a - bps[-1]) / per)
        k1 = math.ceil((b - bps[0]) / per)
        for k in range(k0, k1 + 1):
            for bp in bps + k * per:
                if a < bp < b:
                    pts.append(bp)
    pts = np.unique(np.asarray(pts))
    edges = []
    span = b - a
    min_len = 1e-12 * max(span, 1e-30)
    for u, v in zip(pts[:-1], pts[1:]):
        # grade geometrically toward both ends: each segment may adjoin a
        # breakpoint where cprime vanishes or blows up
        sub = [u, v]
        x = (v - u) / 2.0
        while x > min_len:
            sub.append(u + x)
            sub.append(v - x)
            x /= 2.0
        edges.append(np.unique(np.asarray(sub)))
    return edges


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


def _moments(c: Correspondence, a: float, b: float, center: float, kmax: int):
    """Integrals of (t - center)^k * cprime(t) over [a, b], k = 0..kmax.

    Handles b < a with the usual orientation sign.
    """
    sign = 1.0
    if b < a:
        a, b = b, a
        sign = -1.0
    if a == b:
        return np.zeros(kmax + 1)
    starts = []
    ends = []
    for seg in _panels(c, a, b):
        starts.append(seg[:-1])
        ends.append(seg[1:])
    u = np.concatenate(starts)
    v = np.concatenate(ends)
    mid = 0.5 * (u + v)
    half = 0.5 * (v - u)
    nodes = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    w = half[:, None] * _GL_WEIGHTS[None, :]
    f = c.deriv_from_polar(nodes.ravel()).reshape(nodes.shape)
    f = np.where(np.isfinite(f), f, 0.0)
    out = np.empty(kmax + 1)
    base = np.ones_like(nodes)
    shift = nodes - center
    for k in range(kmax + 1):
        out[k] = np.sum(w * f * base)
        base = base * shift
    return sign * out


def taylor_leading(c: Correspondence, phi: float, omega: float) -> float:
    """Leading term of the expansion: the double-integral quadratic form.

    Equals M0*M2 - M1^2 for the moments of cprime centered anywhere.
    """
    if omega == 0.0:
        return 0.0
    center = phi + 0.5 * omega
    m = _moments(c, phi, phi + omega, center, 2)
    return float(m[0] * m[2] - m[1] ** 2)


def _chord_weights(c: Correspondence, phi: float, u: np.ndarray):
    """a(u) = cross(Q(phi), Q(u)) and b(u) = <Q(u), P(phi_coupled)>."""
    Qp = c.polar_table.point(np.asarray(phi, dtype=float))
    Qu = c.polar_table.point(u)
    Pp = c.table.point(c.from_polar(np.asarray(phi, dtype=float)))
    a = Qp[..., 0] * Qu[..., 1] - Qp[..., 1] * Qu[..., 0]
    b = Qu[..., 0] * Pp[..., 0] + Qu[..., 1] * Pp[..., 1]
    return a, b


def taylor_remainder(
    c: Correspondence, phi: float, omega: float, samples: int = 8193
):
    """Remainder (R, dR) of the expansion, by chained cumulative quadrature.

    The triple integral separates into one-dimensional cumulative chains
    because its kernel is polynomial in the outer variables.
    """
    if omega == 0.0:
        return 0.0, 0.0
    sig = np.linspace(0.0, 1.0, samples)
    t = phi + sig * omega
    cp = np.asarray(c.deriv_from_polar(t), dtype=float)
    cp = np.where(np.isfinite(cp), cp, 0.0)
    a_u, b_u = _chord_weights(c, phi, t)

    def cum(y):
        # cumulative integral over t along the (possibly reversed) segment
        return omega * cumulative_simpson(y, x=sig, initial=0.0)

    def chain(g):
        # inner(s) = integral over u < s of (s - u) g(u)
        A0 = cum(g)
        A1 = cum(t * g)
        inner = t * A0 - A1
        # mid(t) = integral over s < t of cprime(s) (t - s) inner(s)
        B0 = cum(cp * inner)
        B1 = cum(t * cp * inner)
        return B0, B1

    # kernel [a(u) - (t - phi) b(u)] splits into a pure-a chain with outer
    # weight 1 and a pure-b chain with outer weight (t - phi)
    B0a, B1a = chain(a_u * cp)
    B0b, B1b = chain(b_u * cp)
    mid_a = t * B0a - B1a
    mid_b = t * B0b - B1b
    R = cum(cp * mid_a)[-1] - cum(cp * (t - phi) * mid_b)[-1]

    # dR kernel: [a(u) - omega b(u)] with outer weight (phi + omega - s)
    T = phi + omega
    g = (a_u - omega * b_u) * cp
    A0 = cum(g)
    A1 = cum(t * g)
    inner = t * A0 - A1
    D0 = cum(cp * inner)[-1]
    D1 = cum(t * cp * inner)[-1]
    cpT = float(np.asarray(c.deriv_from_polar(np.asarray(T, dtype=float))))
    dR = cpT * (T * D0 - D1)
    return float(R), float(dR)


# ---------------------------------------------------------------------------
# Derivative and the contraction exponent ratio
# ---------------------------------------------------------------------------


def dJR_domega(c: Correspondence, phi: float, omega: float, method: str = "auto"):
    """d/d omega of the reduced Jacobian.

    ``direct`` evaluates cprime(phi+omega) * K(phi, omega); ``taylor``
    uses the expansion derivative, the stable route for small omega.
    """
    if method == "auto":
        method = (
            "taylor" if abs(omega) < TAYLOR_SWITCH * c.polar_period else "direct"
        )
    T = phi + omega
    cpT = float(np.asarray(c.deriv_from_polar(np.asarray(T, dtype=float))))
    if not np.isfinite(cpT):
        raise ValueError("coupling derivative undefined at phi + omega")
    if method == "direct":
        return cpT * float(K_function(c, phi, omega))
    m2 = _moments(c, phi, T, T, 2)[2]
    _, dR = taylor_remainder(c, phi, omega)
    return cpT * float(m2) + dR


def reduced_jacobian_taylor(c: Correspondence, phi: float, omega: float) -> float:
    """J_R via leading + remainder; exact identity, stable near omega = 0."""
    R, _ = taylor_remainder(c, phi, omega)
    return taylor_leading(c, phi, omega) + R


def N_ratio(
    c: Correspondence, phi: float, omega: float, method: str = "auto"
) -> float:
    """The pointwise contraction exponent 1 + omega * dJ/J."""
    if omega == 0.0:
        raise ValueError("degenerate ratio: omega = 0")
    if method == "auto":
        method = (
            "taylor" if abs(omega) < TAYLOR_SWITCH * c.polar_period else "direct"
        )
    if method == "direct":
        J = float(reduced_jacobian(c, phi, omega))
        dJ = dJR_domega(c, phi, omega, method="direct")
    else:
        R, dR = taylor_remainder(c, phi, omega)
        J = taylor_leading(c, phi, omega) + R
        T = phi + omega
        cpT = float(np.asarray(c.deriv_from_polar(np.asarray(T, dtype=float))))
        dJ = cpT * float(_moments(c, phi, T, T, 2)[2]) + dR
    if abs(J) <= 1e-300:
        raise ValueError("degenerate ratio: vanishing Jacobian")
    return 1.0 + omega * dJ / J


def jacobian_sample(c: Correspondence, phi: float, omega: float) -> JacobianSample:
    """Bundle of all pointwise Jacobian quantities at (phi, omega)."""
    J = float(reduced_jacobian(c, phi, omega))
    K = float(K_function(c, phi, omega))
    try:
        dJ = dJR_domega(c, phi, omega)
    except ValueError:
        dJ = None
    N = None
    if dJ is not None and omega != 0.0:
        try:
            N = N_ratio(c, phi, omega)
        except ValueError:
            N = None
    return JacobianSample(float(phi), float(omega), J, dJ, K, N)


# ---------------------------------------------------------------------------
# The fractional-polynomial comparison family
# ---------------------------------------------------------------------------

_MP_DPS = 60


def P_alpha(phi: float, omega: float, alpha: float) -> float:
    """Closed form of the model double integral with kernel |t|^(a-2)|s|^(a-2)."""
    if alpha < 2.0:
        raise ValueError("alpha must be at least 2")
    with mpmath.workdps(_MP_DPS):
        a = mpmath.mpf(alpha)
        p = mpmath.mpf(phi)
        w = mpmath.mpf(omega)
        T = w + p
        val = (
            (abs(T) ** (2 * a) + abs(p) ** (2 * a)) / (a**2 * (a**2 - 1))
            + 2 / a**2 * abs(T) ** a * abs(p) ** a
            - (abs(T) ** a * abs(p) ** (a - 2) + abs(T) ** (a - 2) * abs(p) ** a)
            * T
            * p
            / (a**2 - 1)
        )
        return float(val)


def P_alpha_s(s: float, alpha: float) -> float:
    """P_alpha(1, s): the one-variable slice used in the limit analysis."""
    if alpha < 2.0:
        raise ValueError("alpha must be at least 2")
    with mpmath.workdps(_MP_DPS):
        a = mpmath.mpf(alpha)
        x = 1 + mpmath.mpf(s)
        val = (
            abs(x) ** (2 * a)
            - a**2 * abs(x) ** a * x
            + 2 * (a**2 - 1) * abs(x) ** a
            - a**2 * abs(x) ** (a - 2) * x
            + 1
        ) / (a**2 * (a**2 - 1))
        return float(val)


def dP_alpha_s(s: float, alpha: float) -> float:
    """Derivative of ``P_alpha_s`` in s."""
    if alpha < 2.0:
        raise ValueError("alpha must be at least 2")
    with mpmath.workdps(_MP_DPS):
        a = mpmath.mpf(alpha)
        sm = mpmath.mpf(s)
        x = 1 + sm
        val = (
            2
            / (a * (a**2 - 1))
            * abs(x) ** (a - 2)
            * (abs(x) ** a * x - 1 - (a + 1) * sm - a * (a + 1) / 2 * sm**2)
        )
        return float(val)


def P_ratio(s: float, alpha: float) -> float:
    """s * dP/P, whose limits are 4 at 0 and 2*alpha at infinity."""
    with mpmath.workdps(_MP_DPS):
        a = mpmath.mpf(alpha)
        sm = mpmath.mpf(s)
        x = 1 + sm
        P = (
            abs(x) ** (2 * a)
            - a**2 * abs(x) ** a * x
            + 2 * (a**2 - 1) * abs(x) ** a
            - a**2 * abs(x) ** (a - 2) * x
            + 1
        ) / (a**2 * (a**2 - 1))
        dP = (
            2
            / (a * (a**2 - 1))
            * abs(x) ** (a - 2)
            * (abs(x) ** a * x - 1 - (a + 1) * sm - a * (a + 1) / 2 * sm**2)
        )
        return float(sm * dP / P)
