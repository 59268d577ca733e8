"""Heisenberg group structure and sub-Finsler geodesics.

Points are (x, y, z) with the group law
``(x,y,z) * (x',y',z') = (x+x', y+y', z+z' + (xy'-x'y)/2)``.

Geodesics from the identity are parametrized by (r, phi, omega): ``r`` is
the speed, ``phi`` the initial polar-side angle, ``omega`` the rotation
rate.  The planar projection of the unit-time geodesic is an arc of the
polar unit sphere scaled by ``r/omega``; the vertical coordinate is the
signed area swept by that projection.  The full rotation period equals
twice the polar body's area and is written ``c.polar_period``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import root

from .convex_body import _cross2
from .convex_trig import Correspondence

__all__ = [
    "GeodesicParams",
    "group_mul",
    "group_inv",
    "make_params",
    "exp_map",
    "swept_area",
    "log_map",
    "distance",
    "midpoint",
    "inverse_geodesic",
]

IDENTITY = np.zeros(3)


def group_mul(p, q) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    out = (p + q).copy()
    out[..., 2] += 0.5 * (p[..., 0] * q[..., 1] - q[..., 0] * p[..., 1])
    return out


def group_inv(p) -> np.ndarray:
    return -np.asarray(p, dtype=float)


@dataclass(frozen=True)
class GeodesicParams:
    """Geodesic data: speed ``r``, initial angle ``phi``, rotation ``omega``.

    ``in_U`` flags the open set where the time-1 endpoint map is a local
    homeomorphism (omega nonzero, short of a full rotation); ``in_R``
    flags the uniqueness domain, which shrinks by the flat extents of the
    coupling at ``phi``.
    """

    r: float
    phi: float
    omega: float
    in_U: bool = False
    in_R: bool = False


def make_params(c: Correspondence, r: float, phi: float, omega: float) -> GeodesicParams:
    """Build params with the domain flags evaluated for this norm."""
    if r <= 0.0:
        raise ValueError("speed r must be positive")
    full = c.polar_period  # one full rotation of the planar projection
    if not (-full < omega < full):
        raise ValueError("omega must lie strictly within one full rotation")
    phi = float(np.mod(phi, full))
    in_U = omega != 0.0
    dminus, dplus = c.flat_extent(phi)
    in_R = (-full + dplus < omega < full - dminus) and (
        in_U or not bool(np.any(c.body.flat_edges))
    )
    return GeodesicParams(float(r), phi, float(omega), in_U, in_R)


# ---------------------------------------------------------------------------
# Exponential map
# ---------------------------------------------------------------------------

# below this arc fraction the direct sector-minus-triangle formula loses
# too many digits; a triangle fan anchored at the arc start is used instead
_SHORT_ARC_FRACTION = 0.01


def _segment_area(c: Correspondence, phi_a: float, phi_b):
    """Signed area between the polar boundary arc phi_a -> phi_b and its
    chord.  Vectorized over phi_b; stable for short arcs."""
    pt = c.polar_table
    phi_b = np.asarray(phi_b, dtype=float)
    span = phi_b - phi_a
    if pt._round_r2 is not None:
        # circle of radius^2 = r2: area = r2 * (psi - sin psi) / 2
        r2 = pt._round_r2
        psi = span / r2
        small = np.abs(psi) < 0.4
        ps = np.where(small, psi, 0.0)
        series = ps**3 / 6.0 - ps**5 / 120.0 + ps**7 / 5040.0 - ps**9 / 362880.0
        return 0.5 * r2 * np.where(small, series, psi - np.sin(psi))
    out = np.empty(span.shape)
    Qa = pt.point(np.full(span.shape, phi_a) if span.ndim else phi_a)
    Qb = pt.point(phi_b)
    long_arc = np.abs(span) >= _SHORT_ARC_FRACTION * pt.period
    # the parameter is twice the swept area, so the sector term is span/2
    out[...] = 0.5 * (span - _cross2(Qa, Qb))
    if np.any(~long_arc):
        flat_span = np.atleast_1d(span)
        flat_out = np.atleast_1d(out)
        idx = np.nonzero(~np.atleast_1d(long_arc))[0]
        for k in idx:
            flat_out[k] = _short_arc_fan(pt, phi_a, phi_a + flat_span[k])
        out = flat_out.reshape(span.shape)
    return out


def _short_arc_fan(pt, a: float, b: float) -> float:
    """Triangle-fan area anchored at the arc start; all terms are O(arc^2),
    so no significance is lost even for tiny arcs."""
    sign = 1.0
    if b < a:
        a, b = b, a
        sign = -1.0
    per = pt.period
    n = pt.body.n
    cum = pt.cum
    a_mod = a % per
    span = b - a
    Qa = pt.point(a_mod)
    Qb = pt.point(a_mod + span)
    fan = 0.0
    prev = Qa
    g = int(np.searchsorted(cum, a_mod, side="right"))  # first vertex beyond a
    while True:
        param = cum[g % n] + per * (g // n)  # param of global vertex index g
        if param - a_mod >= span:
            break
        v = pt.body.vertices[g % n]
        fan += 0.5 * float(_cross2(prev - Qa, v - Qa))
        prev = v
        g += 1
    fan += 0.5 * float(_cross2(prev - Qa, Qb - Qa))
    return sign * fan


def exp_map(c: Correspondence, params: GeodesicParams, t):
    """Geodesic point(s) at time(s) ``t`` for a unit-time parametrization."""
    r, phi, om = params.r, params.phi, params.omega
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    ts = np.atleast_1d(t)
    if om == 0.0:
        if bool(np.any(c.body.flat_edges)):
            raise ValueError("extension undefined: norm is not strictly convex")
        P = c.table.point(c.from_polar(np.asarray(phi)))
        out = np.zeros((len(ts), 3))
        out[:, 0] = r * float(P[..., 0]) * ts
        out[:, 1] = r * float(P[..., 1]) * ts
    else:
        pt = c.polar_table
        Qa = pt.point(np.full_like(ts, phi))
        Qb = pt.point(phi + om * ts)
        dQ = Qb - Qa
        out = np.empty((len(ts), 3))
        out[:, 0] = (r / om) * dQ[:, 1]
        out[:, 1] = -(r / om) * dQ[:, 0]
        out[:, 2] = (r / om) ** 2 * _segment_area(c, phi, phi + om * ts)
    return out[0] if scalar else out


def swept_area(c: Correspondence, params: GeodesicParams, t, samples: int = 2048):
    """Signed area swept by the planar projection, by direct quadrature.

    Independent of the closed-form z: sums the triangle areas of a dense
    polygonal sampling of the projected curve.
    """
    ts = np.linspace(0.0, float(t), samples)
    g = exp_map(c, params, ts)
    xy = g[:, :2]
    return float(0.5 * np.sum(_cross2(xy[:-1], xy[1:])))


# ---------------------------------------------------------------------------
# Inversion (log map) and derived maps
# ---------------------------------------------------------------------------


def _unit_endpoint(c: Correspondence, phi: float, om: float) -> np.ndarray:
    return exp_map(c, GeodesicParams(1.0, phi, om), 1.0)


def log_map(
    c: Correspondence,
    q,
    tol: float = 1e-10,
    coarse: int = 32,
    starts: int = 8,
) -> GeodesicParams:
    """Invert the time-1 endpoint map.  Needs a smooth strictly convex norm.

    Targets off the z-axis with z != 0 are inverted by a multistart 2-D
    root find in (phi, omega) on scale-invariant residuals; the speed r is
    recovered from the planar magnitude afterwards.  Planar targets
    (z = 0) return the straight-line parameters directly.
    """
    q = np.asarray(q, dtype=float)
    x, y, z = (float(v) for v in q)
    full = c.polar_period
    planar = math.hypot(x, y)
    if planar == 0.0:
        raise ValueError("outside homeomorphism range: target on the z-axis")
    if z == 0.0:
        theta = c.table.angle_of_direction(q[:2])
        r = float(c.body.gauge(q[:2]))
        return make_params(c, r, float(c.to_polar(theta)), 0.0)

    target_dir = math.atan2(y, x)
    target_ratio = z / planar**2

    def residual(v):
        phi, om = v
        if not (1e-12 < abs(om) < full * (1.0 - 1e-12)):
            return np.array([10.0, 10.0])
        g = _unit_endpoint(c, phi, om)
        mag2 = g[0] * g[0] + g[1] * g[1]
        if mag2 <= 0.0:
            return np.array([10.0, 10.0])
        ddir = math.remainder(math.atan2(g[1], g[0]) - target_dir, 2.0 * math.pi)
        return np.array([ddir, g[2] / mag2 - target_ratio])

    # the coarse multistart table depends only on the norm; cache it
    sign = 1 if z >= 0 else -1
    cache = getattr(c, "_log_coarse_cache", {})
    key = (coarse, sign)
    if key not in cache:
        phis = np.linspace(0.0, full, coarse, endpoint=False)
        oms = sign * np.linspace(0.0, full, coarse + 1)[1:-1]
        dirs = np.empty((coarse, coarse - 1))
        ratios = np.empty((coarse, coarse - 1))
        for i, ph in enumerate(phis):
            for j, om in enumerate(oms):
                g = _unit_endpoint(c, ph, om)
                mag2 = g[0] * g[0] + g[1] * g[1]
                dirs[i, j] = math.atan2(g[1], g[0])
                ratios[i, j] = g[2] / mag2 if mag2 > 0 else math.inf
        cache[key] = (phis, oms, dirs, ratios)
        c._log_coarse_cache = cache
    phis, oms, dirs, ratios = cache[key]
    ddir = np.remainder(dirs - target_dir + math.pi, 2.0 * math.pi) - math.pi
    with np.errstate(invalid="ignore"):
        s2 = ddir**2 + (ratios - target_ratio) ** 2
    s2 = np.where(np.isfinite(s2), s2, np.inf)
    flat = np.argsort(s2.ravel())
    scores = [
        (float(s2.ravel()[k]), float(phis[k // (coarse - 1)]), float(oms[k % (coarse - 1)]))
        for k in flat[: 4 * starts]
    ]

    best = None
    for _, ph0, om0 in scores[:starts]:
        sol = root(residual, np.array([ph0, om0]), method="hybr", tol=1e-13)
        res = residual(sol.x)
        err = float(math.hypot(*res))
        if best is None or err < best[0]:
            best = (err, sol.x)
        if err < tol:
            break
    if best is None or best[0] > 1e-6:
        raise RuntimeError(
            f"inversion failed: best residual {best[0] if best else math.inf:.3e}"
        )
    phi, om = best[1]
    g = _unit_endpoint(c, phi, om)
    r = planar / math.hypot(g[0], g[1])
    return make_params(c, float(r), float(np.mod(phi, full)), float(om))


def distance(c: Correspondence, p, q) -> float:
    """Sub-Finsler distance; equals the speed of the connecting geodesic."""
    d = group_mul(group_inv(p), q)
    x, y, z = (float(v) for v in d)
    if x == 0.0 and y == 0.0:
        if z == 0.0:
            return 0.0
        # full-rotation limit: z = r^2 / (2 * polar_period) at unit time
        return math.sqrt(2.0 * c.polar_period * abs(z))
    if z == 0.0:
        return float(c.body.gauge(d[:2]))
    return log_map(c, d).r


def midpoint(c: Correspondence, p, q) -> np.ndarray:
    """Midpoint of the unique geodesic from p to q."""
    d = group_mul(group_inv(p), q)
    params = log_map(c, d)
    return group_mul(p, exp_map(c, params, 0.5))


def inverse_geodesic(c: Correspondence, m, q) -> np.ndarray:
    """Reflect q through m along the geodesic: the point q' with
    midpoint(q', q) = m."""
    d = group_mul(group_inv(m), q)
    if not np.any(d):
        return np.asarray(m, dtype=float)
    params = log_map(c, d)
    reflected = GeodesicParams(
        params.r,
        float(np.mod(params.phi + 0.5 * c.polar_period, c.polar_period)),
        -params.omega,
        params.in_U,
        params.in_R,
    )
    return group_mul(m, exp_map(c, reflected, 1.0))
