"""Independent brute-force verifiers: direct control optimization for
geodesics, finite-difference endpoint-map Jacobians, Monte-Carlo volumes.

Nothing here reuses the analytic geodesic formulas beyond validation, so
agreement with the closed-form modules is meaningful evidence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.optimize import minimize

from .convex_body import Body
from .convex_trig import Correspondence
from . import jacobian as jac
from . import heisenberg as heis

__all__ = [
    "ControlPath",
    "integrate_controls",
    "brute_force_geodesic",
    "fd_jacobian",
    "montecarlo_volume",
    "image_volume_mc",
    "image_volume_quadrature",
]


@dataclass
class ControlPath:
    """A horizontal path with piecewise-constant controls on [0, 1]."""

    n_steps: int
    controls: np.ndarray  # (n_steps, 2)
    endpoint: np.ndarray  # (3,)
    length: float


def integrate_controls(controls: np.ndarray) -> np.ndarray:
    """Forward-integrate piecewise-constant planar controls to the endpoint.

    The midpoint rule is exact for the vertical coordinate because the
    planar path is piecewise linear and the area form is bilinear.
    """
    u = np.asarray(controls, dtype=float)
    n = len(u)
    dt = 1.0 / n
    x = dt * np.concatenate([[0.0], np.cumsum(u[:, 0])])[:-1]
    y = dt * np.concatenate([[0.0], np.cumsum(u[:, 1])])[:-1]
    z = 0.5 * dt * np.sum(x * u[:, 1] - y * u[:, 0])
    return np.array([dt * np.sum(u[:, 0]), dt * np.sum(u[:, 1]), z])


def _gauge_and_subgradient(polar_vertices: np.ndarray, u: np.ndarray):
    """Gauge values and subgradients at each control (rows of u).

    The gauge is the support function of the polar body, so a maximizing
    polar vertex is a subgradient; for smooth norms it is the gradient.
    """
    scores = u @ polar_vertices.T
    idx = np.argmax(scores, axis=1)
    g = scores[np.arange(len(u)), idx]
    grad = polar_vertices[idx]
    zero = g <= 0.0
    g = np.where(zero, 0.0, g)
    grad[zero] = 0.0
    return g, grad


def _endpoint_and_gradient(u: np.ndarray):
    """Endpoint of the integrated path and its gradient in the controls."""
    n = len(u)
    dt = 1.0 / n
    e = integrate_controls(u)
    # z is bilinear: d z / d u1_i = dt^2/2 (sum_{k>i} u2_k - sum_{j<i} u2_j)
    tail2 = np.cumsum(u[::-1, 1])[::-1] - u[:, 1]
    head2 = np.cumsum(u[:, 1]) - u[:, 1]
    tail1 = np.cumsum(u[::-1, 0])[::-1] - u[:, 0]
    head1 = np.cumsum(u[:, 0]) - u[:, 0]
    dz_du1 = 0.5 * dt * dt * (tail2 - head2)
    dz_du2 = -0.5 * dt * dt * (tail1 - head1)
    return e, dz_du1, dz_du2


def _energy_objective(polar_vertices: np.ndarray, target: np.ndarray, mu: float):
    """Penalized control energy with its analytic gradient."""

    def f(flat):
        u = flat.reshape(-1, 2)
        n = len(u)
        dt = 1.0 / n
        g, grad_g = _gauge_and_subgradient(polar_vertices, u)
        energy = dt * float(np.sum(g**2))
        e, dz1, dz2 = _endpoint_and_gradient(u)
        d = e - target
        val = energy + mu * float(d @ d)
        grad = 2.0 * dt * g[:, None] * grad_g
        grad[:, 0] += 2.0 * mu * (d[0] * dt + d[2] * dz1)
        grad[:, 1] += 2.0 * mu * (d[1] * dt + d[2] * dz2)
        return val, grad.ravel()

    return f


def _initial_guesses(body: Body, target: np.ndarray, n_steps: int, rng):
    """Constant, rotating, and randomized control initializations."""
    x, y, z = (float(v) for v in target)
    guesses = []
    s = np.linspace(0.0, 1.0, n_steps, endpoint=False) + 0.5 / n_steps
    planar = math.hypot(x, y)
    base = math.atan2(y, x) if planar > 0 else 0.0
    scale = max(planar, math.sqrt(6.0 * abs(z)), 1e-3)
    guesses.append(np.stack([np.full(n_steps, x), np.full(n_steps, y)], axis=1))
    for turns in (0.5, 1.0, -0.5, -1.0, 1.5, -1.5):
        ang = base + 2.0 * math.pi * turns * (s - 0.5) * np.sign(z if z else 1.0)
        guesses.append(scale * np.stack([np.cos(ang), np.sin(ang)], axis=1))
    for _ in range(4):
        guesses.append(scale * rng.normal(size=(n_steps, 2)))
    return guesses


def brute_force_geodesic(
    body: Body,
    target,
    n_steps: int = 64,
    budget: int = 12,
    seed: int = 0,
    feas_tol: float = 1e-6,
) -> ControlPath:
    """Shortest admissible path to ``target`` by direct control search.

    Minimizes the control energy (whose minimizers travel at constant
    speed, so length = sqrt(energy)) with a quadratic endpoint penalty
    driven through a continuation schedule, over several restarts.
    """
    target = np.asarray(target, dtype=float)
    if np.allclose(target, 0.0):
        return ControlPath(n_steps, np.zeros((n_steps, 2)), np.zeros(3), 0.0)
    rng = np.random.Generator(np.random.Philox(seed))
    polar_vertices = body.polar().vertices
    guesses = _initial_guesses(body, target, n_steps, rng)[:budget]
    best: Optional[Tuple[float, np.ndarray]] = None
    for u0 in guesses:
        u = u0.copy()
        for mu in (1e2, 1e4, 1e6, 1e8):
            obj = _energy_objective(polar_vertices, target, mu)
            res = minimize(
                obj,
                u.ravel(),
                jac=True,
                method="L-BFGS-B",
                options={"maxiter": 800, "ftol": 1e-14, "gtol": 1e-12},
            )
            u = res.x.reshape(-1, 2)
        e = integrate_controls(u)
        miss = float(np.linalg.norm(e - target))
        g, _ = _gauge_and_subgradient(polar_vertices, u)
        length = math.sqrt(float(np.mean(g**2)))
        if miss <= feas_tol * (1.0 + np.linalg.norm(target)) and (
            best is None or length < best[0]
        ):
            best = (length, u)
    if best is None:
        raise RuntimeError("no admissible path found at tolerance")
    length, u = best
    return ControlPath(n_steps, u, integrate_controls(u), length)


# ---------------------------------------------------------------------------
# Finite-difference Jacobian
# ---------------------------------------------------------------------------


def fd_jacobian(
    c: Correspondence,
    r: float,
    phi: float,
    omega: float,
    t: float,
    h: Optional[float] = None,
) -> float:
    """Central-difference determinant of the endpoint map in (r, phi, omega).

    Independent of the closed-form Jacobian; the step must span several
    table nodes when the trig tables are polyline-backed.
    """
    if h is None:
        h = 1e-5 * max(abs(omega), 1.0)
    cols = []
    for i, step in enumerate(np.eye(3)):
        p_hi = (r + h * step[0], phi + h * step[1], omega + h * step[2])
        p_lo = (r - h * step[0], phi - h * step[1], omega - h * step[2])
        g_hi = heis.exp_map(c, heis.GeodesicParams(*p_hi), t)
        g_lo = heis.exp_map(c, heis.GeodesicParams(*p_lo), t)
        col = (np.asarray(g_hi) - np.asarray(g_lo)) / (2.0 * h)
        if not np.all(np.isfinite(col)):
            raise FloatingPointError("non-finite finite difference")
        cols.append(col)
    return float(np.linalg.det(np.stack(cols, axis=1)))


# ---------------------------------------------------------------------------
# Monte-Carlo volumes
# ---------------------------------------------------------------------------


def montecarlo_volume(
    weight_fn: Callable[[np.ndarray], np.ndarray],
    sampler: Callable[[np.random.Generator, int], np.ndarray],
    domain_volume: float,
    n: int,
    seed: int = 0,
) -> Tuple[float, float]:
    """Estimate integral of ``weight_fn`` over a sampled domain.

    ``sampler(rng, n)`` draws uniform points in a domain of measure
    ``domain_volume``; returns (estimate, 95 percent half-width).  A zero
    hit count degenerates the interval and is flagged by a NaN half-width.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    pts = sampler(rng, n)
    w = np.asarray(weight_fn(pts), dtype=float)
    est = domain_volume * float(np.mean(w))
    if np.count_nonzero(w) == 0:
        return est, math.nan
    hw = 1.96 * domain_volume * float(np.std(w)) / math.sqrt(n)
    return est, hw


def _box_sampler(box):
    lows = np.array([b[0] for b in box])
    highs = np.array([b[1] for b in box])

    def sample(rng, n):
        return rng.uniform(lows, highs, size=(n, len(box)))

    return sample, float(np.prod(highs - lows))


def image_volume_mc(
    c: Correspondence, box, t: float = 1.0, n: int = 100000, seed: int = 0
) -> Tuple[float, float]:
    """Volume of the time-t geodesic image of a parameter box (area formula)."""
    sampler, vol = _box_sampler(box)

    def weight(pts):
        r, phi, om = pts[:, 0], pts[:, 1], pts[:, 2]
        J = np.asarray(jac.reduced_jacobian(c, phi, om * t))
        return np.abs(r**3 * t / om**4 * J)

    return montecarlo_volume(weight, sampler, vol, n, seed)


def image_volume_quadrature(
    c: Correspondence, box, t: float = 1.0, order: int = 48
) -> float:
    """Same integral by tensor Gauss-Legendre quadrature (r separates)."""
    (r0, r1), (p0, p1), (o0, o1) = box
    x, w = np.polynomial.legendre.leggauss(order)
    pm, ph = 0.5 * (p0 + p1), 0.5 * (p1 - p0)
    om_, oh = 0.5 * (o0 + o1), 0.5 * (o1 - o0)
    P = pm + ph * x
    O = om_ + oh * x
    PP, OO = np.meshgrid(P, O, indexing="ij")
    J = np.asarray(jac.reduced_jacobian(c, PP, OO * t))
    F = np.abs(t / OO**4 * J)
    inner = float(w @ F @ w) * ph * oh
    return 0.25 * (r1**4 - r0**4) * inner
