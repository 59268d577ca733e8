"""Planar symmetric convex bodies: gauges, supports, polars, regularity.

A body is represented by a dense boundary polyline in counterclockwise
order whose first vertex lies on the positive x-axis.  Catalog bodies
additionally carry closed-form gauge/support functions so that exactness
is preserved where it is available.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "NormSpec",
    "Body",
    "RegularityReport",
    "FlatSegment",
    "make_body",
    "gauge",
    "support",
    "polar",
    "area",
    "classify_regularity",
]

_TWO_PI = 2.0 * math.pi

def _cross2(a, b):
    """z-component of the cross product of planar vectors (vectorized)."""
    a = np.asarray(a)
    b = np.asarray(b)
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]



# ---------------------------------------------------------------------------
# Specs and reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NormSpec:
    """Declarative description of a planar norm."""

    kind: str  # euclidean | lp | polygon | rounded_polygon | ode | numeric
    label: str = ""
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind == "lp":
            p = self.params.get("p")
            if p is None or (p != math.inf and p < 1.0):
                raise ValueError("lp exponent must satisfy p >= 1")
        if self.kind == "polygon":
            verts = np.asarray(self.params["vertices"], dtype=float)
            _check_symmetric_convex(verts)
        if self.kind == "rounded_polygon":
            if self.params.get("radius", 0.0) <= 0.0:
                raise ValueError("rounding radius must be positive")
            verts = np.asarray(self.params["vertices"], dtype=float)
            _check_symmetric_convex(verts)


@dataclass(frozen=True)
class FlatSegment:
    """A maximal straight arc of a boundary, in angle-parameter units."""

    start_point: tuple
    end_point: tuple
    normal_angle: float
    length: float


@dataclass(frozen=True)
class RegularityReport:
    is_C1: bool
    is_strictly_convex: bool
    is_strongly_convex: bool
    flat_segments: tuple  # flats of the body boundary
    polar_flat_segments: tuple  # flats of the polar boundary
    corner_points: tuple  # corner points of the body boundary


def _check_symmetric_convex(verts: np.ndarray) -> None:
    if verts.ndim != 2 or verts.shape[1] != 2 or len(verts) < 4:
        raise ValueError("polygon needs at least 4 planar vertices")
    # central symmetry: every vertex has its antipode in the list
    for v in verts:
        d = np.min(np.hypot(verts[:, 0] + v[0], verts[:, 1] + v[1]))
        if d > 1e-9 * (1.0 + np.max(np.abs(verts))):
            raise ValueError("polygon vertices are not centrally symmetric")
    order = np.argsort(np.arctan2(verts[:, 1], verts[:, 0]))
    w = verts[order]
    e = np.roll(w, -1, axis=0) - w
    cr = _cross2(e, np.roll(e, -1, axis=0))
    if np.any(cr < -1e-12 * np.max(np.abs(verts)) ** 2):
        raise ValueError("polygon vertices are not in convex position")


# ---------------------------------------------------------------------------
# Body
# ---------------------------------------------------------------------------


class Body:
    """Centrally symmetric convex body with polyline boundary.

    Attributes
    ----------
    vertices : (n, 2) array, counterclockwise, vertices[0] on the +x axis.
    flat_edges : (n,) bool, True where the edge is an exact straight piece
        of the boundary (not a discretization chord of a smooth arc).
    corner_vertices : (n,) bool, True where the boundary has a genuine
        corner at that vertex.
    """

    def __init__(
        self,
        spec: NormSpec,
        vertices: np.ndarray,
        flat_edges: Optional[np.ndarray] = None,
        corner_vertices: Optional[np.ndarray] = None,
        gauge_fn: Optional[Callable] = None,
        support_fn: Optional[Callable] = None,
    ):
        verts = np.asarray(vertices, dtype=float)
        verts, flat_edges, corner_vertices = _canonicalize(
            verts, flat_edges, corner_vertices
        )
        self.spec = spec
        self.vertices = verts
        self.n = len(verts)
        self.flat_edges = flat_edges
        self.corner_vertices = corner_vertices
        self.gauge_fn = gauge_fn
        self.support_fn = support_fn

        v = self.vertices
        nxt = np.roll(v, -1, axis=0)
        edge = nxt - v
        # vertex polar angles, unwrapped to be strictly increasing from 0
        ang = np.arctan2(v[:, 1], v[:, 0])
        ang = np.unwrap(ang)
        ang -= ang[0]
        if not np.all(np.diff(ang) > 0.0):
            raise ValueError("boundary polyline is not star-shaped CCW")
        self.vert_ang = ang
        # outward edge normals and their (unwrapped) angles
        nrm = np.stack([edge[:, 1], -edge[:, 0]], axis=1)
        nrm /= np.hypot(nrm[:, 0], nrm[:, 1])[:, None]
        self.normals = nrm
        na = np.unwrap(np.arctan2(nrm[:, 1], nrm[:, 0]))
        if not np.all(np.diff(na) >= -1e-14):
            raise ValueError("edge normals are not monotone: body not convex")
        self.normal_ang = na
        self.edge_support = np.einsum("ij,ij->i", nrm, v)
        if np.any(self.edge_support <= 0.0):
            raise ValueError("origin is not strictly interior")
        cr = _cross2(v, nxt)
        self.area = 0.5 * float(np.sum(cr))
        self._edge_cross = cr  # cross(v_i, v_{i+1}), used for ray queries

    # -- gauge / support ----------------------------------------------------

    def gauge(self, vec) -> np.ndarray:
        """Minkowski gauge (the norm whose unit ball is this body)."""
        if self.gauge_fn is not None:
            return self.gauge_fn(np.asarray(vec, dtype=float))
        return self._gauge_polyline(vec)

    def _gauge_polyline(self, vec) -> np.ndarray:
        v = np.asarray(vec, dtype=float)
        scalar = v.ndim == 1
        v = np.atleast_2d(v)
        r = np.hypot(v[:, 0], v[:, 1])
        out = np.zeros(len(v))
        mask = r > 0.0
        if np.any(mask):
            w = v[mask]
            a = np.mod(np.arctan2(w[:, 1], w[:, 0]) - self.vert_ang[0], _TWO_PI)
            i = np.clip(
                np.searchsorted(self.vert_ang - self.vert_ang[0], a, side="right") - 1,
                0,
                self.n - 1,
            )
            A = self.vertices[i]
            B = self.vertices[(i + 1) % self.n]
            e = B - A
            t = self._edge_cross[i] / _cross2(w, e)
            out[mask] = 1.0 / t
        return out[0] if scalar else out

    def support(self, vec) -> np.ndarray:
        """Support function (equivalently the dual norm)."""
        if self.support_fn is not None:
            return self.support_fn(np.asarray(vec, dtype=float))
        return self._support_polyline(vec)

    def _support_polyline(self, vec) -> np.ndarray:
        v = np.asarray(vec, dtype=float)
        scalar = v.ndim == 1
        v = np.atleast_2d(v)
        base = self.normal_ang[0]
        a = np.mod(np.arctan2(v[:, 1], v[:, 0]) - base, _TWO_PI)
        j = np.searchsorted(self.normal_ang - base, a, side="left") % self.n
        out = np.einsum("ij,ij->i", v, self.vertices[j])
        # guard against ties at edge-normal angles
        j2 = (j - 1) % self.n
        alt = np.einsum("ij,ij->i", v, self.vertices[j2])
        out = np.maximum(out, alt)
        return out[0] if scalar else out

    # -- polar --------------------------------------------------------------

    def polar(self) -> "Body":
        kind = self.spec.kind
        if kind == "euclidean":
            return make_body(self.spec, resolution=self.n)
        if kind == "lp":
            p = self.spec.params["p"]
            q = _conjugate(p)
            return make_body(
                NormSpec("lp", label=f"lp({q})", params={"p": q}),
                resolution=max(self.n, 64),
            )
        return self._polar_polyline()

    def _polar_polyline(self) -> "Body":
        verts = self.normals / self.edge_support[:, None]
        spec = NormSpec("numeric", label=f"polar({self.spec.label})")
        # polar edge i joins the duals of edges i and i+1, which is a flat
        # exactly when vertex i+1 of this body is a corner; polar corner i
        # sits at the dual of edge i, i.e. where this body has a flat edge.
        flat = np.roll(self.corner_vertices, -1)
        corner = self.flat_edges.copy()
        support_fn = self.gauge_fn  # gauge of a body = support of its polar
        gauge_fn = self.support_fn
        return Body(
            spec,
            verts,
            flat_edges=flat,
            corner_vertices=corner,
            gauge_fn=gauge_fn,
            support_fn=support_fn,
        )

    # -- misc ---------------------------------------------------------------

    def boundary_point_of_direction(self, angle) -> np.ndarray:
        """Boundary point along the ray with the given Euclidean angle."""
        ang = np.atleast_1d(np.asarray(angle, dtype=float))
        d = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        g = self.gauge(d)
        pts = d / np.asarray(g)[:, None]
        return pts[0] if np.ndim(angle) == 0 else pts

    def flat_arcs(self, tol: float = 1e-9):
        """Maximal runs of exact flat edges, merged when normals agree."""
        n = self.n
        flags = self.flat_edges
        if not np.any(flags):
            return []
        dn = np.mod(np.roll(self.normal_ang, -1) - self.normal_ang, _TWO_PI)
        same = (dn <= tol) | (dn >= _TWO_PI - tol)  # edge i and i+1 parallel
        arcs = []
        visited = np.zeros(n, dtype=bool)
        for i in range(n):
            if visited[i] or not flags[i]:
                continue
            j0 = i
            while flags[(j0 - 1) % n] and same[(j0 - 1) % n] and (j0 - 1) % n != i:
                j0 = (j0 - 1) % n
            j1 = i
            while flags[(j1 + 1) % n] and same[j1] and (j1 + 1) % n != j0:
                j1 = (j1 + 1) % n
            k = j0
            while True:
                visited[k] = True
                if k == j1:
                    break
                k = (k + 1) % n
            arcs.append((j0, j1))
        return arcs


def _canonicalize(verts, flat_edges, corner_vertices):
    """Order CCW by polar angle and place a vertex exactly on the +x axis."""
    n = len(verts)
    if flat_edges is None:
        flat_edges = np.zeros(n, dtype=bool)
    if corner_vertices is None:
        corner_vertices = np.zeros(n, dtype=bool)
    flat_edges = np.asarray(flat_edges, dtype=bool).copy()
    corner_vertices = np.asarray(corner_vertices, dtype=bool).copy()

    ang = np.mod(np.arctan2(verts[:, 1], verts[:, 0]), _TWO_PI)
    order = np.argsort(ang, kind="stable")
    verts = verts[order]
    ang = ang[order]
    flat_edges = flat_edges[order]
    corner_vertices = corner_vertices[order]

    scale = np.max(np.abs(verts))
    # drop consecutive duplicate vertices (e.g. a split edge in a polar)
    d = np.hypot(*(verts - np.roll(verts, 1, axis=0)).T)
    keep = d > 1e-13 * scale
    if not np.all(keep):
        drop = ~keep
        flat_edges[np.roll(drop, -1)] |= flat_edges[drop]
        corner_vertices[np.roll(drop, -1)] |= corner_vertices[drop]
        verts = verts[keep]
        flat_edges = flat_edges[keep]
        corner_vertices = corner_vertices[keep]
    # does a vertex already sit on the positive x axis?
    on_axis = np.where((np.abs(verts[:, 1]) <= 1e-12 * scale) & (verts[:, 0] > 0))[0]
    if len(on_axis) > 0:
        k = on_axis[0]
        verts = np.roll(verts, -k, axis=0)
        flat_edges = np.roll(flat_edges, -k)
        corner_vertices = np.roll(corner_vertices, -k)
        verts[0, 1] = 0.0
        return verts, flat_edges, corner_vertices
    # otherwise insert the crossing point on the last edge (between the
    # largest-angle vertex and the smallest-angle one)
    A, B = verts[-1], verts[0]
    e = B - A
    # solve A + s e on the x axis: A[1] + s e[1] = 0
    s = -A[1] / e[1]
    p = A + s * e
    p[1] = 0.0
    verts = np.vstack([p, verts])
    flat_edges = np.concatenate([[flat_edges[-1]], flat_edges])
    corner_vertices = np.concatenate([[False], corner_vertices])
    return verts, flat_edges, corner_vertices


def _conjugate(p: float) -> float:
    if p == 1.0:
        return math.inf
    if p == math.inf:
        return 1.0
    return p / (p - 1.0)


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------


def _lp_gauge(p: float) -> Callable:
    if p == math.inf:

        def g(v):
            v = np.asarray(v, dtype=float)
            return np.max(np.abs(v), axis=-1)

        return g

    def g(v):
        v = np.asarray(v, dtype=float)
        return np.sum(np.abs(v) ** p, axis=-1) ** (1.0 / p)

    return g


def _sample_convex_boundary(gauge_fn: Callable, n: int, max_rounds: int = 6):
    """Sample a smooth convex boundary at ~n points, refining where it turns."""
    ang = np.linspace(0.0, _TWO_PI, n, endpoint=False)
    for _ in range(max_rounds):
        d = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        pts = d / gauge_fn(d)[:, None]
        e = np.roll(pts, -1, axis=0) - pts
        na = np.unwrap(np.arctan2(-e[:, 0], e[:, 1]))  # normal angles, shifted
        turn = np.diff(np.concatenate([na, [na[0] + _TWO_PI]]))
        bad = np.where(turn > 2.0 * _TWO_PI / n)[0]
        if len(bad) == 0:
            break
        nxt = np.concatenate([ang, 0.5 * (ang[bad] + np.roll(ang, -1)[bad] + np.where(bad == len(ang) - 1, _TWO_PI, 0.0))])
        ang = np.sort(np.mod(nxt, _TWO_PI))
    d = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    return d / gauge_fn(d)[:, None]


_SQUARE = np.array([[1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0]])
_DIAMOND = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])


def make_body(spec: NormSpec, resolution: int = 8192) -> Body:
    """Construct the unit-ball body of the given norm spec."""
    if resolution < 64:
        raise ValueError("resolution must be at least 64")
    kind = spec.kind
    if kind == "euclidean":
        ang = np.linspace(0.0, _TWO_PI, resolution, endpoint=False)
        verts = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        g = _lp_gauge(2.0)
        return Body(spec, verts, gauge_fn=g, support_fn=g)
    if kind == "lp":
        p = spec.params["p"]
        if p == 1.0:
            return _polygon_body(spec, _DIAMOND)
        if p == math.inf:
            return _polygon_body(spec, _SQUARE)
        if p == 2.0:
            return make_body(NormSpec("euclidean", label=spec.label), resolution)
        g = _lp_gauge(p)
        s = _lp_gauge(_conjugate(p))
        verts = _sample_convex_boundary(g, resolution)
        return Body(spec, verts, gauge_fn=g, support_fn=s)
    if kind == "polygon":
        return _polygon_body(spec, np.asarray(spec.params["vertices"], dtype=float))
    if kind == "rounded_polygon":
        return _rounded_polygon_body(spec, resolution)
    raise ValueError(f"make_body cannot build kind {kind!r}")


def _polygon_body(spec: NormSpec, verts: np.ndarray) -> Body:
    n = len(verts)
    flat = np.ones(n, dtype=bool)
    corner = np.ones(n, dtype=bool)
    return Body(spec, verts, flat_edges=flat, corner_vertices=corner)


def _rounded_polygon_body(spec: NormSpec, resolution: int) -> Body:
    """Minkowski sum of a polygon and a disc of the given radius."""
    poly = np.asarray(spec.params["vertices"], dtype=float)
    rho = float(spec.params["radius"])
    order = np.argsort(np.arctan2(poly[:, 1], poly[:, 0]))
    poly = poly[order]
    m = len(poly)
    e = np.roll(poly, -1, axis=0) - poly
    nrm = np.stack([e[:, 1], -e[:, 0]], axis=1)
    nrm /= np.hypot(nrm[:, 0], nrm[:, 1])[:, None]
    na = np.arctan2(nrm[:, 1], nrm[:, 0])
    pts, flat, corner = [], [], []
    arc_pts = max(8, resolution // (2 * m))
    for i in range(m):
        a0 = na[(i - 1) % m]
        a1 = na[i]
        sweep = np.mod(a1 - a0, _TWO_PI)
        ts = a0 + sweep * np.arange(arc_pts + 1) / arc_pts
        arc = poly[i] + rho * np.stack([np.cos(ts), np.sin(ts)], axis=1)
        pts.append(arc)  # arc at vertex i, ends at start of edge i
        flat.extend([False] * arc_pts + [True])  # edge i after the arc
        corner.extend([False] * (arc_pts + 1))
    verts = np.vstack(pts)

    def support_fn(v):
        v = np.asarray(v, dtype=float)
        inner = np.max(v @ poly.T, axis=-1)
        return inner + rho * np.hypot(v[..., 0], v[..., 1])

    return Body(
        spec,
        verts,
        flat_edges=np.asarray(flat, dtype=bool),
        corner_vertices=np.asarray(corner, dtype=bool),
        support_fn=support_fn,
    )


# ---------------------------------------------------------------------------
# Free-function interface
# ---------------------------------------------------------------------------


def gauge(body: Body, v) -> float:
    return body.gauge(v)


def support(body: Body, u) -> float:
    return body.support(u)


def polar(body: Body) -> Body:
    return body.polar()


def area(body: Body) -> float:
    return body.area


def _flat_segments(body: Body, tol: float):
    segs = []
    for j0, j1 in body.flat_arcs(tol):
        v = body.vertices
        n = body.n
        start = v[j0]
        end = v[(j1 + 1) % n]
        segs.append(
            FlatSegment(
                start_point=tuple(start),
                end_point=tuple(end),
                normal_angle=float(np.arctan2(*body.normals[j0][::-1])),
                length=float(np.hypot(*(end - start))),
            )
        )
    return tuple(segs)


def _curvature_unbounded(body: Body) -> bool:
    """Dyadic blow-up test for the curvature of the *polar* boundary.

    The body is strongly convex exactly when the curvature of its polar
    boundary stays bounded; we probe the discrete curvature at the most
    curved polar vertices across two refinement scales.
    """
    pol = body.polar()
    v = pol.vertices
    e = np.roll(v, -1, axis=0) - v
    ln = np.hypot(e[:, 0], e[:, 1])
    na = pol.normal_ang
    turn = np.mod(np.roll(na, -1) - na, _TWO_PI)
    disc = turn / np.maximum(0.5 * (ln + np.roll(ln, -1)), 1e-300)
    cand = np.argsort(disc)[-3:]
    angles = pol.vert_ang[(cand + 1) % pol.n] + np.arctan2(v[0, 1], v[0, 0])

    def curvature(center: float, h: float) -> float:
        aa = np.array([center - h, center, center + h])
        p = pol.boundary_point_of_direction(aa)
        u1 = p[1] - p[0]
        u2 = p[2] - p[1]
        w = p[2] - p[0]
        denom = np.hypot(*u1) * np.hypot(*u2) * np.hypot(*w)
        return abs(2.0 * _cross2(u1, u2) / denom)

    # probe scales must stay above the polyline resolution (sub-edge windows
    # would measure discreteness, not curvature); three octave-spaced scales
    # distinguish a bounded curvature jump (saturates) from a blow-up
    step = _TWO_PI / pol.n
    for a in angles:
        k1 = curvature(a, 256.0 * step)
        k2 = curvature(a, 32.0 * step)
        k3 = curvature(a, 4.0 * step)
        if k2 > 2.0 * k1 and k3 > 2.0 * k2 and k3 > 10.0:
            return True
    return False


def classify_regularity(body: Body, tol: float = 1e-9) -> RegularityReport:
    pol = body.polar()
    flats = _flat_segments(body, tol)
    polar_flats = _flat_segments(pol, tol)
    corners = tuple(
        tuple(body.vertices[i]) for i in np.where(body.corner_vertices)[0]
    )
    is_c1 = len(polar_flats) == 0
    is_strict = len(flats) == 0
    if is_c1 and is_strict:
        is_strong = not _curvature_unbounded(body)
    else:
        is_strong = False
    return RegularityReport(
        is_C1=is_c1,
        is_strictly_convex=is_strict,
        is_strongly_convex=is_strong,
        flat_segments=flats,
        polar_flat_segments=polar_flats,
        corner_points=corners,
    )
