"""Experiment runner: every module behind one command-line tool.

Subcommands emit CSV tables or JSON reports and print a one-line verdict.
Exit codes: 0 pass/inconclusive, 1 violation found, 2 invalid input.
Identical configuration and seed reproduce byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import configparser
import io
import json
import math
import sys
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import heisenberg as heis
from . import jacobian as jac
from . import mcp
from . import norm_builder as nb
from . import oracle
from .convex_body import Body, NormSpec, make_body
from .convex_trig import Correspondence

__all__ = ["main", "run"]


class InputError(Exception):
    """Invalid configuration; maps to exit code 2."""


# ---------------------------------------------------------------------------
# Norm parsing
# ---------------------------------------------------------------------------

_NAMED_POLYGONS = {
    "square": [[1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0]],
    "diamond": [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]],
    "hexagon": [
        [math.cos(k * math.pi / 3.0), math.sin(k * math.pi / 3.0)] for k in range(6)
    ],
}


def parse_norm(text: str, resolution: int) -> Body:
    """Build a unit ball from a compact spec string.

    Accepted forms: ``euclidean``; ``lp:P`` with P a number, ``1`` or
    ``inf`` (polygonal endpoints); ``polygon:NAME`` or
    ``polygon:x1,y1;x2,y2;...``; ``rounded-square:RADIUS``;
    ``linear:K,L``; ``loglinear``; ``oscillation``; ``file:PATH``.
    """
    kind, _, arg = text.partition(":")
    try:
        if kind == "euclidean":
            return nb.build_body(nb.catalog("euclidean"), resolution)
        if kind == "lp":
            if arg in ("inf", "Inf", "INF"):
                return nb.build_body(
                    nb.catalog("polygon", vertices=_NAMED_POLYGONS["square"])
                )
            p = float(arg)
            if p == 1.0:
                return nb.build_body(
                    nb.catalog("polygon", vertices=_NAMED_POLYGONS["diamond"])
                )
            if p < 1.0:
                raise InputError(f"norm: lp exponent must be >= 1, got {p}")
            return nb.build_body(nb.catalog("lp", p=p), resolution)
        if kind == "polygon":
            if arg in _NAMED_POLYGONS:
                verts = _NAMED_POLYGONS[arg]
            else:
                verts = [
                    [float(t) for t in pair.split(",")] for pair in arg.split(";")
                ]
            return nb.build_body(nb.catalog("polygon", vertices=verts))
        if kind == "rounded-square":
            return nb.build_body(
                nb.catalog(
                    "rounded_polygon",
                    vertices=_NAMED_POLYGONS["square"],
                    radius=float(arg or 0.05),
                ),
                resolution,
            )
        if kind == "linear":
            parts = [float(t) for t in arg.split(",")] if arg else [1.0, 1.0]
            K, L = parts[0], parts[1]
            eps = parts[2] if len(parts) > 2 else 0.3
            return nb.build_body(
                nb.catalog("example_linear", K=K, L=L, eps=eps), resolution
            )
        if kind == "loglinear":
            return nb.build_body(nb.catalog("example_loglinear"), resolution)
        if kind == "oscillation":
            return nb.build_body(nb.catalog("example_oscillation"), resolution)
        if kind == "file":
            return nb.load_body(arg)
    except InputError:
        raise
    except (ValueError, IndexError, OSError) as exc:
        raise InputError(f"norm: cannot parse {text!r}: {exc}") from exc
    raise InputError(f"norm: unknown kind {kind!r}")


def _parse_floats(text: str, n: int, field: str) -> Tuple[float, ...]:
    parts = text.split(",")
    if len(parts) != n:
        raise InputError(f"{field}: expected {n} comma-separated numbers")
    try:
        return tuple(float(t) for t in parts)
    except ValueError as exc:
        raise InputError(f"{field}: {exc}") from exc


def _parse_box(text: str, field: str):
    v = _parse_floats(text, 6, field)
    return ((v[0], v[1]), (v[2], v[3]), (v[4], v[5]))


# ---------------------------------------------------------------------------
# Artifact emission
# ---------------------------------------------------------------------------


def _fmt(v: float) -> str:
    return f"{float(v):.17g}"


def _write_csv(header: Sequence[str], rows, out: Optional[str]) -> None:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    _emit(buf.getvalue(), out)


def _write_json(payload: dict, out: Optional[str]) -> None:
    _emit(json.dumps(payload, sort_keys=True, indent=2) + "\n", out)


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _verdict_exit(verdict: str) -> int:
    return 1 if verdict == "violation" else 0


# ---------------------------------------------------------------------------
# Subcommand option tables (shared by argparse and the config file)
# ---------------------------------------------------------------------------

_COMMON = {
    "norm": (str, "euclidean", "norm spec, e.g. lp:2, lp:inf, polygon:hexagon"),
    "resolution": (int, 8192, "boundary samples for table-backed norms"),
    "out": (str, None, "artifact path (default: stdout)"),
}

_OPTIONS: Dict[str, Dict[str, tuple]] = {
    "trig-table": {**_COMMON, "samples": (int, 256, "number of table rows")},
    "geodesic": {
        **_COMMON,
        "target": (str, "1,0,0", "endpoint x,y,z"),
        "samples": (int, 65, "points sampled along the geodesic"),
    },
    "jacobian-scan": {
        **_COMMON,
        "phi-min": (float, 0.0, "grid start in phi"),
        "phi-max": (float, None, "grid end in phi (default: one polar period)"),
        "n-phi": (int, 32, "grid size in phi"),
        "omega-min": (float, 0.05, "grid start in omega"),
        "omega-max": (float, None, "grid end (default: 0.95 polar period)"),
        "n-omega": (int, 32, "grid size in omega"),
    },
    "mcp-check": {
        **_COMMON,
        "N": (float, 5.0, "dimension parameter of the contraction property"),
        "criterion": (str, "necessary", "necessary | sufficient | diff"),
        "n-phi": (int, 256, "scan grid size in phi"),
        "n-omega": (int, 256, "scan grid size in omega"),
        "tol": (float, 1e-6, "relative comparison tolerance"),
    },
    "ncurv-estimate": {
        **_COMMON,
        "samples": (int, 16384, "coupling-derivative samples for zero search"),
    },
    "failure-search": {
        **_COMMON,
        "N": (float, 1e6, "largest dimension parameter to exclude"),
        "samples": (int, 2048, "control samples for the branching probe"),
        "seed": (int, 0, "RNG seed"),
    },
    "mcp-montecarlo": {
        **_COMMON,
        "N": (float, 5.0, "dimension parameter"),
        "box": (str, "0.5,1.5,0.2,1.2,0.5,2.5", "r0,r1,phi0,phi1,omega0,omega1"),
        "t": (float, 0.5, "contraction time in (0, 1]"),
        "samples": (int, 100000, "Monte-Carlo sample count"),
        "seed": (int, 0, "RNG seed"),
    },
    "bm-probe": {
        **_COMMON,
        "K": (float, 0.0, "curvature parameter"),
        "N": (float, 5.0, "dimension parameter"),
        "box-a": (str, "2,2.5,0,0.5,1,1.5", "box A: x0,x1,y0,y1,z0,z1"),
        "box-b": (str, "2,2.5,0,0.5,1,1.5", "box B: x0,x1,y0,y1,z0,z1"),
        "t": (float, 0.5, "interpolation time"),
        "samples": (int, 2000, "pairs sampled"),
        "seed": (int, 0, "RNG seed"),
    },
    "build-norm": {**_COMMON},
    "oracle-compare": {
        **_COMMON,
        "targets": (int, 3, "brute-force geodesic targets"),
        "jacobian-samples": (int, 20, "finite-difference comparison points"),
        "seed": (int, 0, "RNG seed"),
    },
}


def _load_config(path: str, command: str) -> Dict[str, str]:
    parser = configparser.ConfigParser()
    parser.optionxform = str  # keys are case-sensitive (N vs n)
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise InputError(f"config: {exc}") from exc
    for section in parser.sections():
        if section not in _OPTIONS:
            raise InputError(f"config: unknown section [{section}]")
    if not parser.has_section(command):
        return {}
    allowed = _OPTIONS[command]
    values = {}
    for key, raw in parser.items(command):
        if key not in allowed:
            raise InputError(f"config: unknown key {key!r} in section [{command}]")
        values[key] = raw
    return values


def _resolve_options(command: str, cli_values: dict, config_path: Optional[str]):
    table = _OPTIONS[command]
    merged = {}
    file_values = _load_config(config_path, command) if config_path else {}
    for key, (typ, default, _help) in table.items():
        dest = key.replace("-", "_")
        if dest in cli_values:  # explicit flag wins
            merged[dest] = cli_values[dest]
        elif key in file_values:
            try:
                merged[dest] = typ(file_values[key])
            except ValueError as exc:
                raise InputError(f"config: key {key!r}: {exc}") from exc
        else:
            merged[dest] = default
    return argparse.Namespace(**merged)


# ---------------------------------------------------------------------------
# Subcommand implementations
# ---------------------------------------------------------------------------


def _correspondence(opts) -> Correspondence:
    return Correspondence(parse_norm(opts.norm, opts.resolution))


def _cmd_trig_table(opts) -> int:
    c = _correspondence(opts)
    thetas = np.linspace(0.0, c.period, opts.samples, endpoint=False)
    rows = []
    for th in thetas:
        pt = c.table.point(np.asarray(th))
        phi = float(c.to_polar(th))
        dminus, dplus = c.flat_extent(phi)
        rows.append((th, float(pt[0]), float(pt[1]), phi - dminus, phi + dplus))
    _write_csv(["theta", "cos", "sin", "phi_lo", "phi_hi"], rows, opts.out)
    print(f"verdict: pass ({opts.samples} rows, period {_fmt(c.period)})")
    return 0


def _cmd_geodesic(opts) -> int:
    c = _correspondence(opts)
    target = np.array(_parse_floats(opts.target, 3, "target"))
    if target[0] == 0.0 and target[1] == 0.0:
        d = heis.distance(c, np.zeros(3), target)
        print(
            f"verdict: pass (z-axis target, distance {_fmt(d)}; "
            "geodesic is non-unique, no path emitted)"
        )
        return 0
    params = heis.log_map(c, target)
    ts = np.linspace(0.0, 1.0, opts.samples)
    pts = heis.exp_map(c, params, ts)
    _write_csv(
        ["t", "x", "y", "z"],
        [(t, p[0], p[1], p[2]) for t, p in zip(ts, pts)],
        opts.out,
    )
    print(
        "verdict: pass "
        f"(r {_fmt(params.r)}, phi {_fmt(params.phi)}, omega {_fmt(params.omega)}, "
        f"distance {_fmt(params.r)})"
    )
    return 0


def _cmd_jacobian_scan(opts) -> int:
    c = _correspondence(opts)
    phi_max = opts.phi_max if opts.phi_max is not None else c.polar_period
    omega_max = opts.omega_max if opts.omega_max is not None else 0.95 * c.polar_period
    rows = []
    for phi in np.linspace(opts.phi_min, phi_max, opts.n_phi):
        for om in np.linspace(opts.omega_min, omega_max, opts.n_omega):
            try:
                s = jac.jacobian_sample(c, float(phi), float(om))
            except ValueError:
                rows.append((phi, om, math.nan, math.nan, math.nan))
                continue
            rows.append(
                (
                    s.phi,
                    s.omega,
                    s.J_R,
                    math.nan if s.dJR_domega is None else s.dJR_domega,
                    math.nan if s.N_ratio is None else s.N_ratio,
                )
            )
    _write_csv(["phi", "omega", "J_R", "dJR_domega", "N"], rows, opts.out)
    print(f"verdict: pass ({len(rows)} grid cells)")
    return 0


def _cmd_mcp_check(opts) -> int:
    c = _correspondence(opts)
    grid = mcp.default_grid(c, n_phi=opts.n_phi, n_omega=opts.n_omega)
    if opts.criterion == "necessary":
        rep = mcp.check_necessary(c, opts.N, grid, tol_rel=opts.tol)
    elif opts.criterion == "sufficient":
        rep = mcp.check_sufficient_C1_strict(c, opts.N, grid, tol_rel=opts.tol)
    elif opts.criterion == "diff":
        rep = mcp.check_diff_characterization(c, opts.N, grid)
    else:
        raise InputError(f"criterion: unknown value {opts.criterion!r}")
    _write_json(rep.as_dict(), opts.out)
    print(f"verdict: {rep.verdict} (criterion {opts.criterion}, N {_fmt(opts.N)})")
    return _verdict_exit(rep.verdict)


def _cmd_ncurv_estimate(opts) -> int:
    c = _correspondence(opts)
    z = mcp.zero_set_analysis(c, n_samples=opts.samples)
    sup_at_zeros = {}
    for ang in z.zeros[:4]:
        est = mcp.estimate_sup_N_near_zero(c, ang)
        sup_at_zeros[_fmt(ang)] = est if isinstance(est, str) else float(est)
    payload = {
        "norm": opts.norm,
        "q": z.q,
        "bound": z.bound,
        "zeros": list(z.zeros),
        "zero_set_measure": z.measure,
        "fits": [
            {
                "angle": f.angle,
                "alpha": f.alpha,
                "fractional": f.fractional,
                "infinite_order": f.infinite_order,
                "fit_quality": f.fit_quality,
            }
            for f in z.fits
        ],
        "sup_N_at_zeros": sup_at_zeros,
        "notes": z.notes,
    }
    _write_json(payload, opts.out)
    print(f"verdict: pass (q {_fmt(z.q)}, exponent bound {_fmt(z.bound)})")
    return 0


def _cmd_failure_search(opts) -> int:
    c = _correspondence(opts)
    reports = {
        "branching": mcp.branching_probe(
            c, n_cap=opts.N, samples=opts.samples, seed=opts.seed
        ),
        "discontinuity": mcp.discontinuity_probe(c, n_cap=min(opts.N, 100.0)),
        "lipschitz": mcp.lipschitz_probe(c),
    }
    payload = {name: rep.as_dict() for name, rep in reports.items()}
    violations = [n for n, r in reports.items() if r.verdict == "violation"]
    payload["violations"] = violations
    _write_json(payload, opts.out)
    if violations:
        first = reports[violations[0]]
        witness = first.witnesses[0] if first.witnesses else None
        print(
            f"verdict: violation ({', '.join(violations)}; "
            f"witness {witness})"
        )
        return 1
    print("verdict: pass (no failure mechanism detected)")
    return 0


def _cmd_mcp_montecarlo(opts) -> int:
    c = _correspondence(opts)
    box = _parse_box(opts.box, "box")
    rep = mcp.mcp_montecarlo(
        c, opts.N, box, opts.t, samples=opts.samples, seed=opts.seed
    )
    _write_json(rep.as_dict(), opts.out)
    print(f"verdict: {rep.verdict} (N {_fmt(opts.N)}, t {_fmt(opts.t)})")
    return _verdict_exit(rep.verdict)


def _cmd_bm_probe(opts) -> int:
    c = _correspondence(opts)
    A = _parse_box(opts.box_a, "box-a")
    B = _parse_box(opts.box_b, "box-b")
    rep = mcp.brunn_minkowski_probe(
        c, opts.K, opts.N, A, B, opts.t, samples=opts.samples, seed=opts.seed
    )
    _write_json(rep.as_dict(), opts.out)
    print(f"verdict: {rep.verdict} (K {_fmt(opts.K)}, N {_fmt(opts.N)})")
    return _verdict_exit(rep.verdict)


def _cmd_build_norm(opts) -> int:
    body = parse_norm(opts.norm, opts.resolution)
    if not opts.out:
        raise InputError("out: build-norm requires an output path")
    nb.save_body(body, opts.out)
    print(f"verdict: pass ({body.n} boundary samples written to {opts.out})")
    return 0


def _cmd_oracle_compare(opts) -> int:
    body = parse_norm(opts.norm, opts.resolution)
    c = Correspondence(body)
    rng = np.random.default_rng(opts.seed)
    rows = []
    ok = True
    for _ in range(opts.targets):
        r = rng.uniform(0.5, 1.5)
        phi = rng.uniform(0.0, c.polar_period)
        om = rng.uniform(0.2, 0.8) * c.polar_period * rng.choice([-1.0, 1.0])
        tgt = heis.exp_map(c, heis.make_params(c, r, phi, om), 1.0)
        analytic = heis.distance(c, np.zeros(3), tgt)
        brute = oracle.brute_force_geodesic(body, tgt, budget=6, seed=opts.seed)
        diff = brute.length - analytic
        ok &= -1e-3 <= diff <= 1e-2
        rows.append((tgt[0], tgt[1], tgt[2], analytic, brute.length, diff))
    jrows = []
    for _ in range(opts.jacobian_samples):
        r = rng.uniform(0.5, 2.0)
        phi = rng.uniform(0.0, c.polar_period)
        om = rng.uniform(0.3, 0.8) * c.polar_period * rng.choice([-1.0, 1.0])
        t = rng.uniform(0.2, 0.95)
        fd = oracle.fd_jacobian(c, r, phi, om, t)
        full = jac.full_jacobian(c, r, phi, om, t)
        rel = abs(fd - full) / max(abs(full), 1e-300)
        ok &= rel <= 1e-4
        jrows.append((r, phi, om, t, fd, full, rel))
    buf = io.StringIO()
    buf.write("x,y,z,analytic,brute_force,difference\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    buf.write("r,phi,omega,t,fd_jacobian,full_jacobian,rel_error\n")
    for row in jrows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    _emit(buf.getvalue(), opts.out)
    verdict = "pass" if ok else "violation"
    print(
        f"verdict: {verdict} ({opts.targets} geodesic targets, "
        f"{opts.jacobian_samples} derivative points)"
    )
    return 0 if ok else 1


_HANDLERS = {
    "trig-table": _cmd_trig_table,
    "geodesic": _cmd_geodesic,
    "jacobian-scan": _cmd_jacobian_scan,
    "mcp-check": _cmd_mcp_check,
    "ncurv-estimate": _cmd_ncurv_estimate,
    "failure-search": _cmd_failure_search,
    "mcp-montecarlo": _cmd_mcp_montecarlo,
    "bm-probe": _cmd_bm_probe,
    "build-norm": _cmd_build_norm,
    "oracle-compare": _cmd_oracle_compare,
}


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="subfinsler",
        description="Convex trigonometry, geodesics and contraction "
        "properties of norm-induced metrics on the Heisenberg group.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, table in _OPTIONS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="key=value config file")
        for key, (typ, default, help_text) in table.items():
            p.add_argument(
                f"--{key}",
                dest=key.replace("-", "_"),
                type=typ,
                default=argparse.SUPPRESS,
                help=f"{help_text} (default: {default})",
            )
    return parser


def run(argv: Optional[List[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    command = args.command
    cli_values = {
        k: v for k, v in vars(args).items() if k not in ("command", "config")
    }
    try:
        opts = _resolve_options(command, cli_values, args.config)
        return _HANDLERS[command](opts)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
