"""Synthesize norms with a prescribed coupling derivative, plus a catalog.

The construction integrates the linear system

    x' = -Y,   y' = X,   X' = -f(t) y,   Y' = f(t) x,

from (X, Y, x, y) = (1, 0, 1, 0).  Then (x, y) traces an arc of the polar
unit sphere parametrized by twice the swept area, (X, Y) traces the
coupled arc of the primal sphere, and the coupling derivative along the
arc equals the prescribed function f.  The arc lives on t in [-eps, eps];
it is closed into a convex symmetric curve by a polar-coordinate cubic
blend plus central inversion, and the primal body is recovered by
dualization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .convex_body import Body, NormSpec, make_body
from .convex_trig import Correspondence

__all__ = [
    "CorrespondencePrescription",
    "build_from_correspondence_derivative",
    "catalog",
    "build_body",
    "oscillation_schedule",
    "save_body",
    "load_body",
]


@dataclass(frozen=True)
class CorrespondencePrescription:
    """Target coupling derivative f on [-eps, eps] with closure controls."""

    f: Callable
    eps: float
    label: str = "prescribed"
    breakpoints: Sequence[float] = field(default_factory=tuple)
    resolution: int = 8192

    def __post_init__(self):
        if not (0.0 < self.eps < math.pi / 2):
            raise ValueError("patch half-width eps must be in (0, pi/2)")


def _integrate_signed(p: CorrespondencePrescription, side: int):
    """Integrate toward side*eps (side = +1 or -1) with correct geometry."""
    f = p.f
    bps = sorted(b for b in p.breakpoints if 0.0 < b < p.eps)
    stops = [0.0] + bps + [p.eps]
    n_samples = max(256, int(p.resolution * p.eps / math.pi))
    ts_out = np.linspace(0.0, p.eps, n_samples + 1)[1:]

    def rhs(u, s):
        # u = |t|; actual parameter is side * u
        x, y, X, Y = s
        ft = float(f(side * u))
        if not np.isfinite(ft) or ft < 0.0:
            raise ValueError("prescription must be finite and nonnegative")
        return [
            -side * Y,
            side * X,
            -side * ft * y,
            side * ft * x,
        ]

    state = np.array([1.0, 0.0, 1.0, 0.0])
    ts = [np.array([0.0])]
    ys = [state[:, None]]
    for a, b in zip(stops[:-1], stops[1:]):
        grid = ts_out[(ts_out > a) & (ts_out <= b)]
        t_eval = np.unique(np.concatenate([grid, [b]]))
        sol = solve_ivp(
            rhs,
            (a, b),
            state,
            t_eval=t_eval,
            rtol=1e-11,
            atol=1e-13,
            method="DOP853",
        )
        if not sol.success:
            raise RuntimeError(f"patch integration failed: {sol.message}")
        state = sol.y[:, -1]
        ts.append(sol.t)
        ys.append(sol.y)
    t = np.concatenate(ts)
    y = np.concatenate(ys, axis=1)
    _, keep = np.unique(t, return_index=True)
    return side * t[keep], y[:, keep]


def _polar_blend(q1, d1, q2, d2, n: int) -> np.ndarray:
    """Close the gap q1 -> q2 with a convex-ish cubic in polar coordinates,
    matching position and tangent direction at both ends."""
    a1 = math.atan2(q1[1], q1[0])
    a2 = math.atan2(q2[1], q2[0])
    while a2 <= a1:
        a2 += 2.0 * math.pi
    r1 = math.hypot(*q1)
    r2 = math.hypot(*q2)

    def slope(a, r, d):
        ur = np.array([math.cos(a), math.sin(a)])
        ua = np.array([-math.sin(a), math.cos(a)])
        denom = float(d @ ua)
        return r * float(d @ ur) / denom

    s1 = slope(a1, r1, np.asarray(d1, dtype=float))
    s2 = slope(a2, r2, np.asarray(d2, dtype=float))
    A = np.linspace(a1, a2, n + 2)[1:-1]
    h = a2 - a1
    u = (A - a1) / h
    h00 = 2 * u**3 - 3 * u**2 + 1
    h10 = u**3 - 2 * u**2 + u
    h01 = -2 * u**3 + 3 * u**2
    h11 = u**3 - u**2
    r = h00 * r1 + h10 * h * s1 + h01 * r2 + h11 * h * s2
    return np.stack([r * np.cos(A), r * np.sin(A)], axis=1)


def build_from_correspondence_derivative(p: CorrespondencePrescription) -> Body:
    """Build the primal body whose coupling derivative near angle 0 is f.

    Returns the primal (norm) body; its polar carries the integrated arc.
    The body is annotated with ``cprime_polar`` (f on the patch, symmetric
    extension, NaN elsewhere) and ``cprime_breakpoints``.
    """
    # sanity-check nonnegativity on a sample of the patch
    probe = np.linspace(-p.eps, p.eps, 513)
    vals = np.array([float(p.f(v)) for v in probe])
    if np.any(~np.isfinite(vals)) or np.any(vals < -1e-12):
        raise ValueError("prescription must be finite and nonnegative")

    t_neg, s_neg = _integrate_signed(p, -1)
    t_pos, s_pos = _integrate_signed(p, +1)
    # polar arc Q(t) for t in [-eps, eps], increasing
    Q = np.concatenate(
        [s_neg[:2].T[::-1], s_pos[:2].T[1:]], axis=0
    )  # drop duplicate t=0
    # tangents of Q: Q' = (-Y, X)
    XY_neg = s_neg[2:]
    XY_pos = s_pos[2:]
    d_lo = np.array([-XY_neg[1, -1], XY_neg[0, -1]])  # tangent at t=-eps
    d_hi = np.array([-XY_pos[1, -1], XY_pos[0, -1]])  # tangent at t=+eps
    q_lo = Q[0]
    q_hi = Q[-1]

    # close CCW: arc, blend to the antipode of the arc start, inversion
    gap_fraction = 1.0 - p.eps / math.pi  # rough angular share of the blend
    n_gap = max(512, int(p.resolution * gap_fraction / 2.0))
    blend = _polar_blend(q_hi, d_hi, -q_lo, -d_lo, n_gap)
    half = np.concatenate([Q, blend], axis=0)
    boundary = np.concatenate([half, -half], axis=0)

    spec = NormSpec("ode", label=p.label, params={"eps": p.eps})
    try:
        polar_body = Body(spec, boundary)
    except ValueError as exc:
        raise ValueError(f"splice failed, increase radius: {exc}") from exc

    body = polar_body.polar()
    half_period = polar_body.area  # = pi of the polar body in area units

    eps_eff = p.eps
    inner_bps = np.asarray(
        sorted({0.0, eps_eff, *(b for b in p.breakpoints if 0 < b <= eps_eff)}),
        dtype=float,
    )

    def cprime(phi):
        phi = np.asarray(phi, dtype=float)
        m = phi - half_period * np.round(phi / half_period)
        out = np.full(np.shape(m), np.nan)
        mm = np.atleast_1d(m)
        res = np.atleast_1d(out)
        inside = np.abs(mm) <= eps_eff
        if np.any(inside):
            res[inside] = [float(p.f(v)) for v in mm[inside]]
        return res.reshape(np.shape(m)) if np.shape(m) else float(res[0])

    bps = np.concatenate([inner_bps, -inner_bps])
    bps = np.unique(np.concatenate([bps, bps + half_period]))
    body.cprime_polar = cprime
    body.cprime_breakpoints = np.mod(bps, 2.0 * half_period)
    body.prescription = p

    _verify_patch(body, p)
    return body


def _verify_patch(body: Body, p: CorrespondencePrescription) -> None:
    """Measured coupling derivative must match f on the inner half-patch."""
    c = Correspondence(body)
    phis = np.linspace(-p.eps / 2, p.eps / 2, 101)
    target = np.array([float(p.f(v)) for v in phis])
    h = p.eps / 64.0
    measured = (c.from_polar(phis + h) - c.from_polar(phis - h)) / (2.0 * h)
    scale = max(np.mean(np.abs(target)), 1e-12)
    err = float(np.mean(np.abs(measured - target))) / scale
    if err > 0.02:
        raise RuntimeError(
            f"construction self-check failed: relative L1 error {err:.3%}"
        )


# ---------------------------------------------------------------------------
# Catalog
# ---------------------------------------------------------------------------


def oscillation_schedule(n_max: int = 22):
    """Breakpoint schedule (a_n, b_n, c_n): a_n = 4^(-n^2), b_n = 2n a_n,
    c_n = a_(n-1); the ratio a_n/b_n tends to zero."""
    ns = np.arange(1, n_max + 1)
    a = 4.0 ** (-(ns.astype(float) ** 2))
    b = 2.0 * ns * a
    ctop = np.concatenate([[1.0], a[:-1]])
    return a, b, ctop


def _oscillation_f(eps: float, n_max: int = 22):
    a, b, ctop = oscillation_schedule(n_max)

    def f(phi):
        x = abs(float(phi))
        if x == 0.0 or x <= a[-1]:
            return 0.0
        n = np.searchsorted(-a, -x)  # first n with a_n <= x
        if n >= len(a):
            return 0.0
        if x < b[n]:
            return x
        return abs(x * math.log(x))

    bps = [float(v) for v in np.concatenate([a, b]) if v < eps]
    return f, sorted(bps)


def catalog(name: str, **params) -> NormSpec:
    """Named norm specifications, including the worked examples."""
    if name == "euclidean":
        return NormSpec("euclidean", label="euclidean")
    if name == "lp":
        p = float(params["p"])
        if p == 2.0:
            return NormSpec("euclidean", label="lp(2)")
        return NormSpec("lp", label=f"lp({p})", params={"p": p})
    if name == "polygon":
        return NormSpec("polygon", label="polygon", params=dict(params))
    if name == "rounded_polygon":
        return NormSpec("rounded_polygon", label="rounded_polygon", params=dict(params))
    if name == "example_linear":
        K = float(params.get("K", 1.0))
        L = float(params.get("L", 1.0))
        eps = float(params.get("eps", 0.3))
        return NormSpec(
            "ode", label=f"linear(K={K},L={L})", params={"K": K, "L": L, "eps": eps}
        )
    if name == "example_loglinear":
        eps = float(params.get("eps", 0.3))
        return NormSpec("ode", label="loglinear", params={"variant": "log", "eps": eps})
    if name == "example_oscillation":
        eps = float(params.get("eps", 0.3))
        n_max = int(params.get("n_max", 22))
        return NormSpec(
            "ode",
            label="oscillation",
            params={"variant": "oscillation", "eps": eps, "n_max": n_max},
        )
    raise ValueError(f"unknown catalog norm: {name}")


def build_body(spec: NormSpec, resolution: int = 8192) -> Body:
    """Materialize any spec, dispatching ODE constructions appropriately."""
    if spec.kind != "ode":
        return make_body(spec, resolution)
    prm = spec.params
    eps = float(prm.get("eps", 0.3))
    if "K" in prm:
        K, L = float(prm["K"]), float(prm["L"])
        pres = CorrespondencePrescription(
            f=lambda v: K + L * v,
            eps=eps,
            label=spec.label,
            resolution=resolution,
        )
    elif prm.get("variant") == "log":
        pres = CorrespondencePrescription(
            f=lambda v: abs(v * math.log(abs(v))) if v != 0.0 else 0.0,
            eps=eps,
            label=spec.label,
            breakpoints=(),
            resolution=resolution,
        )
    elif prm.get("variant") == "oscillation":
        f, bps = _oscillation_f(eps, int(prm.get("n_max", 22)))
        pres = CorrespondencePrescription(
            f=f, eps=eps, label=spec.label, breakpoints=tuple(bps),
            resolution=resolution,
        )
    else:
        raise ValueError("unrecognized ode prescription parameters")
    body = build_from_correspondence_derivative(pres)
    return body


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

_FORMAT_VERSION = 1


def save_body(body: Body, path: str) -> None:
    """Plain-text boundary dump: header lines then x,y rows.

    Analytic hooks are not serialized; a reloaded body is purely numeric.
    """
    with open(path, "w") as fh:
        fh.write(f"# boundary-samples v{_FORMAT_VERSION}\n")
        fh.write(f"# label: {body.spec.label or body.spec.kind}\n")
        fh.write(f"# vertices: {body.n}\n")
        for x, y in body.vertices:
            fh.write(f"{x:.17g},{y:.17g}\n")


def load_body(path: str) -> Body:
    with open(path) as fh:
        first = fh.readline()
        if not first.startswith("# boundary-samples v"):
            raise ValueError("unrecognized boundary file header")
        version = int(first.rsplit("v", 1)[1])
        if version > _FORMAT_VERSION:
            raise ValueError(f"unsupported boundary file version {version}")
        label = "loaded"
        rows = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if line.startswith("# label:"):
                    label = line.split(":", 1)[1].strip()
                continue
            x, y = line.split(",")
            rows.append((float(x), float(y)))
    verts = np.asarray(rows)
    return Body(NormSpec("numeric", label=label), verts)
