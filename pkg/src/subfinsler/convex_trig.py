"""Generalized trigonometric functions for planar convex bodies.

The boundary of a convex body ``Omega`` is parametrized by ``theta`` equal
to *twice the area* swept from the boundary point on the positive x-axis.
The generalized cosine/sine are the coordinates of the boundary point at
parameter ``theta``; the full period is twice the area of the body.

A :class:`Correspondence` couples a body with its polar: parameters
``theta`` (body side) and ``phi`` (polar side) correspond when the pairing
``<P_theta, Q_phi>`` equals 1.  The coupled map is monotone, possibly with
jumps (at corners) and plateaus (at flat edges), and its derivative drives
all curvature-sensitive computations downstream.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .convex_body import Body, _cross2

__all__ = ["TrigTable", "Correspondence", "pairing"]

_TWO_PI = 2.0 * math.pi


class TrigTable:
    """Boundary parametrization of a body by twice the swept area."""

    def __init__(self, body: Body):
        self.body = body
        cr = body._edge_cross
        self.cum = np.concatenate([[0.0], np.cumsum(cr)])
        self._round_r2 = None
        if body.spec.kind == "euclidean":
            # a disk admits exact trig: parameter = r^2 * (polar angle)
            self._round_r2 = float(
                np.einsum("i,i->", body.vertices[0], body.vertices[0])
            )
            self.period = _TWO_PI * self._round_r2
        else:
            self.period = float(self.cum[-1])  # = 2 * area
        self.half_period = 0.5 * self.period
        self._edge_cross = cr

    # -- evaluation ---------------------------------------------------------

    def _locate(self, theta):
        th = np.mod(theta, self.period)
        i = np.clip(np.searchsorted(self.cum, th, side="right") - 1, 0, self.body.n - 1)
        s = (th - self.cum[i]) / self._edge_cross[i]
        return i, s

    def point(self, theta) -> np.ndarray:
        """Boundary point at parameter ``theta`` (vectorized)."""
        theta = np.asarray(theta, dtype=float)
        if self._round_r2 is not None:
            r = math.sqrt(self._round_r2)
            a = theta / self._round_r2
            return np.stack([r * np.cos(a), r * np.sin(a)], axis=-1)
        shape = theta.shape
        i, s = self._locate(np.atleast_1d(theta).ravel())
        v = self.body.vertices
        A = v[i]
        B = v[(i + 1) % self.body.n]
        P = A + s[:, None] * (B - A)
        return P.reshape(shape + (2,))

    def cos(self, theta):
        p = self.point(theta)
        return p[..., 0]

    def sin(self, theta):
        p = self.point(theta)
        return p[..., 1]

    def angle_of_direction(self, vec) -> np.ndarray:
        """Parameter of the boundary point in the direction of ``vec``."""
        v = np.asarray(vec, dtype=float)
        if self._round_r2 is not None:
            a = np.mod(np.arctan2(v[..., 1], v[..., 0]), _TWO_PI)
            return a * self._round_r2
        scalar = v.ndim == 1
        w = np.atleast_2d(v)
        body = self.body
        a = np.mod(np.arctan2(w[:, 1], w[:, 0]) - body.vert_ang[0], _TWO_PI)
        i = np.clip(
            np.searchsorted(body.vert_ang - body.vert_ang[0], a, side="right") - 1,
            0,
            body.n - 1,
        )
        A = body.vertices[i]
        B = body.vertices[(i + 1) % body.n]
        e = B - A
        s = _cross2(A, w) / _cross2(w, e)
        out = self.cum[i] + s * self._edge_cross[i]
        out = np.mod(out, self.period)
        return out[0] if scalar else out


def pairing(body_table: TrigTable, polar_table: TrigTable, theta, phi):
    """``<P_theta, Q_phi>``; at most 1, equal to 1 exactly on correspondence."""
    P = body_table.point(theta)
    Q = polar_table.point(phi)
    return np.einsum("...i,...i->...", P, Q)


class Correspondence:
    """Monotone coupling between a body parameter and its polar parameter.

    ``to_polar`` maps the body-side parameter ``theta`` to the polar-side
    parameter ``phi``; ``from_polar`` is the transpose.  Plateaus of one
    direction are jumps of the other.  Derivatives prefer closed forms
    (round bodies, lp bodies, bodies built with a prescribed derivative)
    and fall back to windowed finite differences on the polyline coupling.
    """

    def __init__(self, body: Body, polar: Optional[Body] = None):
        self.body = body
        self.polar = polar if polar is not None else body.polar()
        self.table = TrigTable(body)
        self.polar_table = TrigTable(self.polar)
        self.period = self.table.period
        self.polar_period = self.polar_table.period
        self._euclid_r4 = None
        if body.spec.kind == "euclidean":
            r2 = float(np.einsum("i,i->", body.vertices[0], body.vertices[0]))
            self._euclid_r4 = r2 * r2
        self._build_nodes()
        self._flat_tol = 1e-12 * max(self.period, self.polar_period)

    # -- construction -------------------------------------------------------

    def _build_nodes(self):
        body = self.body
        n = body.n
        cum = self.table.cum
        # dual point of each edge, located on the polar boundary
        duals = body.normals / body.edge_support[:, None]
        phi_raw = self.polar_table.angle_of_direction(duals)
        d = np.mod(np.diff(phi_raw), self.polar_period)
        d[d > self.polar_period * (1.0 - 1e-9)] = 0.0  # numerical jitter only
        phi = phi_raw[0] + np.concatenate([[0.0], np.cumsum(d)])

        thetas = []
        phis = []
        for i in range(n):
            if body.corner_vertices[i]:
                # jump: duplicate the theta abscissa with both one-sided values
                prev = phi[i - 1] if i > 0 else phi[-1] - self.polar_period
                thetas.extend([cum[i], cum[i]])
                phis.extend([prev, phi[i]])
            if body.flat_edges[i]:
                # plateau: the whole edge couples to a single polar point
                thetas.extend([cum[i], cum[i + 1]])
                phis.extend([phi[i], phi[i]])
            else:
                thetas.append(0.5 * (cum[i] + cum[i + 1]))
                phis.append(phi[i])
        thetas = np.asarray(thetas)
        phis = np.asarray(phis)
        keep = np.ones(len(thetas), dtype=bool)
        keep[1:] = (np.diff(thetas) > 0) | (np.diff(phis) > 0)
        self._theta_nodes = thetas[keep]
        self._phi_nodes = phis[keep]
        # padded copies for periodic interpolation
        self._theta_pad = np.concatenate(
            [
                self._theta_nodes - self.period,
                self._theta_nodes,
                self._theta_nodes + self.period,
            ]
        )
        self._phi_pad = np.concatenate(
            [
                self._phi_nodes - self.polar_period,
                self._phi_nodes,
                self._phi_nodes + self.polar_period,
            ]
        )

    # -- the coupled maps ---------------------------------------------------

    def to_polar(self, theta):
        """Polar-side parameter coupled to the body-side ``theta``."""
        theta = np.asarray(theta, dtype=float)
        if self._euclid_r4 is not None:
            return theta / self._euclid_r4
        k = np.floor(theta / self.period)
        tr = theta - k * self.period
        val = np.interp(tr, self._theta_pad, self._phi_pad)
        return val + k * self.polar_period

    def from_polar(self, phi):
        """Body-side parameter coupled to the polar-side ``phi``."""
        phi = np.asarray(phi, dtype=float)
        if self._euclid_r4 is not None:
            return phi * self._euclid_r4
        k = np.floor(phi / self.polar_period)
        pr = phi - k * self.polar_period
        val = np.interp(pr, self._phi_pad, self._theta_pad)
        return val + k * self.period

    # -- derivatives --------------------------------------------------------

    def _lp_exponents(self):
        if self.body.spec.kind == "lp":
            p = float(self.body.spec.params["p"])
            if 1.0 < p < math.inf:
                return p, p / (p - 1.0)
        return None

    def deriv_from_polar(self, phi):
        """Derivative of ``from_polar``; infinite across jumps."""
        phi = np.asarray(phi, dtype=float)
        hook = getattr(self.body, "cprime_polar", None)
        if hook is not None:
            vals = np.asarray(hook(phi), dtype=float)
            nan = np.isnan(vals)  # nan marks "outside the prescribed patch"
            if np.any(nan):
                fallback = self._numeric_deriv(
                    self.from_polar, np.atleast_1d(phi)[np.atleast_1d(nan)],
                    self.polar_period,
                )
                if vals.ndim == 0:
                    return np.asarray(float(np.atleast_1d(fallback)[0]))
                vals = vals.copy()
                vals[nan] = fallback
            return vals
        if self.body.spec.kind == "euclidean":
            # disk of radius r: theta = r^2 * angle, phi = angle / r^2
            r2 = float(np.einsum("i,i->", self.body.vertices[0], self.body.vertices[0]))
            return np.full_like(phi, r2 * r2, dtype=float)
        ex = self._lp_exponents()
        if ex is not None:
            _, q = ex
            Q = self.polar_table.point(phi)
            with np.errstate(divide="ignore"):
                return (q - 1.0) * np.abs(Q[..., 0] * Q[..., 1]) ** (q - 2.0)
        return self._numeric_deriv(self.from_polar, phi, self.polar_period)

    def deriv_to_polar(self, theta):
        """Derivative of ``to_polar``; infinite across jumps."""
        theta = np.asarray(theta, dtype=float)
        if self.body.spec.kind == "euclidean":
            r2 = float(np.einsum("i,i->", self.body.vertices[0], self.body.vertices[0]))
            return np.full_like(theta, 1.0 / (r2 * r2), dtype=float)
        ex = self._lp_exponents()
        if ex is not None:
            p, _ = ex
            P = self.table.point(theta)
            return (p - 1.0) * np.abs(P[..., 0] * P[..., 1]) ** (p - 2.0)
        hook = getattr(self.body, "cprime_polar", None)
        if hook is not None:
            vals = np.asarray(self.deriv_from_polar(self.to_polar(theta)), dtype=float)
            with np.errstate(divide="ignore"):
                return np.where(vals > 0.0, 1.0 / vals, np.inf)
        return self._numeric_deriv(self.to_polar, theta, self.period)

    def _numeric_deriv(self, fn, x, period):
        # window several polyline edges so the piecewise-linear jitter of the
        # coupling averages out; Richardson-extrapolate two window sizes
        h = max(16.0 * period / self.body.n, 1e-4 * period)
        d1 = (fn(x + h) - fn(x - h)) / (2.0 * h)
        d2 = (fn(x + 2.0 * h) - fn(x - 2.0 * h)) / (4.0 * h)
        return (4.0 * d1 - d2) / 3.0

    # -- trig and trig derivatives -----------------------------------------

    def trig_derivative(self, theta):
        """d/d theta of (cos, sin) of the body: (-sin, cos) of the polar."""
        phi = self.to_polar(theta)
        Q = self.polar_table.point(phi)
        return np.stack([-Q[..., 1], Q[..., 0]], axis=-1)

    def pairing(self, theta, phi):
        return pairing(self.table, self.polar_table, theta, phi)

    # -- plateau geometry ---------------------------------------------------

    def plateaus_from_polar(self):
        """Maximal phi-intervals on which ``from_polar`` is constant.

        Returned as (phi_start, phi_end) pairs within one period, merged
        cyclically across the period seam.
        """
        xf = self._phi_nodes
        yf = self._theta_nodes
        m = len(xf)
        tol = 1e-12 * max(self.period, 1.0)
        flat = np.abs(np.diff(yf)) <= tol
        runs = []
        vals = []
        i = 0
        while i < m - 1:
            if flat[i] and xf[i + 1] > xf[i]:
                j = i
                while j < m - 1 and flat[j]:
                    j += 1
                runs.append([xf[i], xf[j]])
                vals.append(yf[i])
                i = j
            else:
                i += 1
        # cyclic merge: the last run continues into the first only when it
        # abuts the seam AND holds the same body value (one period apart)
        if len(runs) >= 2:
            wrap_gap = (runs[0][0] + self.polar_period) - runs[-1][1]
            same_val = abs(vals[0] + self.period - vals[-1]) <= 1e-9 * self.period
            if abs(wrap_gap) <= 1e-9 * self.polar_period and same_val:
                runs[0][0] = runs[-1][0] - self.polar_period
                runs.pop()
        return [(a, b) for a, b in runs]

    def flat_extent(self, phi):
        """(delta_minus, delta_plus): distance from phi to the ends of the
        plateau of ``from_polar`` containing it (both 0 off plateaus)."""
        runs = self.plateaus_from_polar()
        phi = float(phi)
        pr = math.fmod(phi, self.polar_period)
        if pr < 0:
            pr += self.polar_period
        for a, b in runs:
            for shift in (-self.polar_period, 0.0, self.polar_period):
                if a + shift <= pr <= b + shift:
                    return pr - (a + shift), (b + shift) - pr
        return 0.0, 0.0
