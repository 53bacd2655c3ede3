"""Command-line front end.

    harmonic-annuli profile  --a 1 --r-minus 1 --r-plus 1 --samples 11
    harmonic-annuli sweep    --a-min 0.2 --a-max 5 --steps 50
    harmonic-annuli catenoid --r 1 --h 0.4
    harmonic-annuli bubbling --family planar --eps 1e-3,1e-4,1e-5
    harmonic-annuli neck     --eps 1e-2,1e-3,1e-4
    harmonic-annuli junction --path t,t,kt --k 0.5
    harmonic-annuli limits
    harmonic-annuli lift     --radii 1,0.5,0.25 --samples 512

Every command accepts --out, --format csv|json, --config FILE and --seed.
Config files hold one key=value per line ('#' starts a comment); keys are
flag names with or without leading dashes, and flags given on the command
line win.  Exit codes: 0 success, 1 usage error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import re
import sys
from pathlib import Path

import numpy as np

from . import bubbling as bub
from .bundle import circle_samples, lift_curve, measure_limit
from .energy import curvature_integral, profile_energy
from .errors import NumericFailure
from .geometry import ExtReal, ModuliBoundaryPoint, SurfacePiece
from .junction import ModuliPath, path_limit
from .moduli import BoundaryData, energy_limit, limit_image, minimize_energy, sweep
from .profile import (catenoid_area, catenoid_profile, catenoid_span, find_catenoids, fit_boundary,
                      goldschmidt_threshold)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# --- output -----------------------------------------------------------------------

def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool) or isinstance(v, np.bool_):
        return "true" if v else "false"
    if isinstance(v, ExtReal):
        return v.token()
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def _json_value(v):
    if isinstance(v, ExtReal):
        return "inf" if v.infinite else v.value
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, dict):
        return {k: _json_value(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_value(x) for x in v]
    return v


def render(table: dict, fmt: str) -> str:
    """``table`` has 'columns', 'rows' and optional 'meta' (JSON only)."""
    if fmt == "json":
        doc = dict(table.get("meta", {}))
        doc["rows"] = [dict(zip(table["columns"], r)) for r in table["rows"]]
        return json.dumps(_json_value(doc), indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table["columns"])
    for r in table["rows"]:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


# --- commands -----------------------------------------------------------------------

def cmd_profile(args) -> dict:
    _need(args, "a")
    if args.samples < 2:
        raise UsageError("--samples must be at least 2")
    p = fit_boundary(args.a, args.r_minus, args.r_plus)
    Z = np.linspace(-1.0, 1.0, args.samples)
    R = np.atleast_1d(p.value(Z))
    dR = np.atleast_1d(p.deriv(Z))
    d2R = np.atleast_1d(p.deriv2(Z))
    w = np.sqrt(1.0 + dR * dR)
    rho1 = -d2R / w ** 3
    with np.errstate(divide="ignore"):
        rho2 = np.where(R > 0, 1.0 / (R * w), math.nan)
    if not (np.all(np.isfinite(R)) and np.all(np.isfinite(rho1))):
        raise NumericFailure("non-finite profile data")
    rows = [[z, r, k1, k2] for z, r, k1, k2 in zip(Z, R, rho1, rho2)]
    return {"columns": ["Z", "R", "rho1", "rho2"], "rows": rows,
            "meta": {"a": args.a, "r_minus": args.r_minus, "r_plus": args.r_plus}}


def _boundary(args) -> BoundaryData:
    return BoundaryData(args.r_minus, args.r_plus, args.half_height)


def _limit_rows(bc: BoundaryData, ntheta: int) -> list:
    ruled = limit_image(ModuliBoundaryPoint.RuledEnd, bc)
    surf = ruled.of_type(SurfacePiece)[0].surface
    ruled_area = surf.area()
    ruled_mid = curvature_integral(surf).value
    ruled_E = energy_limit(ModuliBoundaryPoint.RuledEnd, bc, ntheta)
    ruled_row = [0.0, ruled_E.value, ruled_area, ruled_mid,
                 ruled_E.value.ge(ruled_mid) and ruled_mid.ge(2 * ruled_area), "ruled-end"]
    col = energy_limit(ModuliBoundaryPoint.CollapsedEnd, bc, ntheta)
    disc_area = limit_image(ModuliBoundaryPoint.CollapsedEnd, bc).total_mass
    # flat discs: both curvatures vanish, integrand 2, so middle = 2 * area
    mid = ExtReal.of(2 * disc_area)
    slack = col.spread + 1e-8 * col.value.value
    holds = col.value.value >= mid.value - slack
    col_row = [math.inf, col.value, disc_area, mid, holds, "collapsed-end"]
    return [ruled_row, col_row]


def cmd_sweep(args) -> dict:
    if not 0 < args.a_min <= args.a_max:
        raise UsageError("need 0 < a-min <= a-max")
    if args.steps < 1:
        raise UsageError("--steps must be at least 1")
    if args.steps == 1:
        grid = [args.a_min]
    else:
        if args.a_min == args.a_max:
            raise UsageError("need a-min < a-max for more than one step")
        grid = np.geomspace(args.a_min, args.a_max, args.steps) if args.log else \
            np.linspace(args.a_min, args.a_max, args.steps)
    bc = _boundary(args)
    rows = []
    for r in sweep(grid, bc, nx=args.nx, ntheta=args.ntheta, workers=args.workers):
        rows.append([r.a, r.energy, r.area, r.middle, r.chain_holds, r.status])
    if args.limits:
        rows.extend(_limit_rows(bc, args.ntheta))
    return {"columns": ["a", "energy", "area", "middle", "chain_holds", "status"], "rows": rows,
            "meta": {"r_minus": bc.r_minus, "r_plus": bc.r_plus, "half_height": bc.half_height}}


def cmd_catenoid(args) -> dict:
    roots = find_catenoids(args.r, args.h)
    rows = []
    for i, c in enumerate(roots):
        p = catenoid_profile(c, args.h)
        E = args.h ** 2 * profile_energy(p)
        rows.append([i, c, catenoid_span(c, args.h) - args.r, catenoid_area(c, args.h), E])
    return {"columns": ["root", "c", "residual", "area", "energy"], "rows": rows,
            "meta": {"r": args.r, "h": args.h, "goldschmidt_half_height": goldschmidt_threshold(args.r),
                     "disc_area": 2 * math.pi * args.r ** 2}}


def _parse_floats(text: str, name: str) -> list[float]:
    try:
        vals = [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--{name} must be a comma-separated list of numbers") from None
    if not vals:
        raise UsageError(f"--{name} is empty")
    return vals


def _parse_grid(text: str) -> tuple[int, int]:
    m = re.fullmatch(r"\s*(\d+)\s*[x,]\s*(\d+)\s*", str(text))
    if not m:
        raise UsageError("--grid must look like 32x32")
    return int(m.group(1)), int(m.group(2))


def cmd_bubbling(args) -> dict:
    kind = bub.FamilyKind(args.family)
    eps = _parse_floats(args.eps, "eps")
    if any(not 0 < e < 1 for e in eps):
        raise UsageError("--eps values must lie in (0, 1)")
    eps = sorted(eps, reverse=True)
    limit_eps = eps if len(eps) >= 3 else list(bub.DEFAULT_EPS)
    grid = _parse_grid(args.grid)
    if grid[0] < 32 or grid[1] < 32:
        raise UsageError("--grid must be at least 32x32")
    rep = bub.detect_bubbling(kind, limit_eps, grid=grid)
    necks = ([[e, bub.neck_position(e)] for e in eps] if kind is bub.FamilyKind.AntiBubbling else [])
    meta = {"family": kind.value, "eps": eps, "limit_eps": limit_eps, "bubbled": rep.bubbled,
            "graph_gap": rep.graph_gap, "threshold": rep.threshold,
            "neck_positions": [{"eps": e, "neck": n} for e, n in necks]}
    if args.condition31:
        c31 = bub.family_condition31(kind, eps, seed=args.seed)
        meta["condition31_deviation"] = c31.deviation
    neck = necks[-1][1] if necks else None
    _, _, conv = bub.pointwise_limit_grid(kind, rep.s_values, limit_eps)
    rows = []
    for s, R, Z, ok in zip(rep.s_values, rep.limit_R, rep.limit_Z, conv):
        for th in rep.theta_values:
            rows.append([kind.value, s, th, R, th, Z, bool(ok), rep.bubbled, rep.graph_gap, neck])
    return {"columns": ["family", "s", "theta", "R", "Theta", "Z", "converged", "bubbled",
                        "graph_gap", "neck"], "rows": rows, "meta": meta}


def cmd_neck(args) -> dict:
    eps = _parse_floats(args.eps, "eps")
    if any(not 0 < e < 1 for e in eps):
        raise UsageError("--eps values must lie in (0, 1)")
    return {"columns": ["eps", "neck"], "rows": [[e, bub.neck_position(e)] for e in eps]}


_TERM = re.compile(r"^(?:(?P<coef>k)\s*\*?\s*)?t(?:\^(?P<pow>2))?$")


def parse_path(spec: str, k: float) -> ModuliPath:
    """Radius expressions in t: 't', 'k*t' (or 'kt') and 't^2'."""
    terms = [p.strip() for p in str(spec).split(",")]
    if len(terms) != 3:
        raise UsageError("--path needs three comma-separated radius expressions")
    funcs = []
    for term in terms:
        m = _TERM.match(term)
        if not m or (m.group("coef") and m.group("pow")):
            raise UsageError(f"cannot parse radius expression {term!r} (use t, k*t or t^2)")
        coef = k if m.group("coef") else 1.0
        power = 2 if m.group("pow") else 1
        funcs.append(lambda t, c=coef, p=power: c * t ** p)
    return ModuliPath(tuple(funcs), label=",".join(terms))


def cmd_junction(args) -> dict:
    if not args.k > 0:
        raise UsageError("--k must be positive")
    path = parse_path(args.path, args.k)
    res = path_limit(path, t_min=args.t_min)
    T = res.tensions or (None, None, None)
    ang = (res.balance.degrees if res.balance is not None and res.balance.stationary else None) \
        or (None, None, None)
    row = [path.label, args.k, res.kind, *T, *ang, res.stationary]
    meta = {"subsequence_limits": [list(s) for s in res.subsequence_limits]}
    return {"columns": ["path", "k", "kind", "T1", "T2", "T3", "angle1", "angle2", "angle3",
                        "stationary"], "rows": [row], "meta": meta}


def cmd_limits(args) -> dict:
    bc = _boundary(args)
    rows = []
    for end in ModuliBoundaryPoint:
        lim = energy_limit(end, bc, args.ntheta)
        img = limit_image(end, bc)
        rows.append([end.value, None, lim.value, img.total_mass, len(img.pieces), lim.certified,
                     lim.spread, lim.exponent])
    if args.minimize:
        m = minimize_energy(bc, interval=(args.a_lo, args.a_hi), ntheta=args.ntheta)
        loc = m.location.value if isinstance(m.location, ModuliBoundaryPoint) else m.location
        rows.append(["minimizer", loc, m.energy, None, None, m.warning is None, None, None])
    return {"columns": ["end", "location", "energy", "mass", "pieces", "certified", "spread",
                        "exponent"], "rows": rows}


def cmd_lift(args) -> dict:
    radii = _parse_floats(args.radii, "radii") if args.radii else \
        [1.0 / n for n in range(1, args.sequence + 1)]
    if any(r <= 0 for r in radii):
        raise UsageError("radii must be positive")
    if args.samples < 3:
        raise UsageError("--samples must be at least 3")
    measures = [lift_curve(circle_samples(r, args.samples), closed=True) for r in radii]
    rows = []
    for r, m in zip(radii, measures):
        exact = 2 * math.pi * math.sqrt(1 + r * r)
        rows.append(["circle", r, m.total_mass, exact, m.total_mass / exact - 1.0, None, None])
    lim = measure_limit(measures, bin_width=args.bin_width)
    rows.append(["limit", radii[-1], lim.total_mass, 2 * math.pi, lim.total_mass / (2 * math.pi) - 1.0,
                 len(lim.limit.position_marginal()), lim.cauchy])
    return {"columns": ["kind", "radius", "mass", "reference", "rel_error", "position_bins",
                        "cauchy"], "rows": rows}


def _need(args, name):
    if getattr(args, name) is None:
        raise UsageError(f"--{name.replace('_', '-')} is required")


# --- parser ---------------------------------------------------------------------------

def _common(p):
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.add_argument("--format", default="csv", choices=["csv", "json"], help="output format (default csv)")
    p.add_argument("--config", default=None, help="key=value config file; flags override it")
    p.add_argument("--seed", type=int, default=0, help="seed for randomized sampling (default 0)")


def _boundary_flags(p):
    p.add_argument("--r-minus", type=float, default=1.0, help="radius of the lower circle (default 1)")
    p.add_argument("--r-plus", type=float, default=1.0, help="radius of the upper circle (default 1)")
    p.add_argument("--half-height", type=float, default=1.0, help="circles sit at Z=+-h (default 1)")
    p.add_argument("--ntheta", type=int, default=16, help="angular quadrature nodes (default 16)")


def _bool(text) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="harmonic-annuli", description="Harmonic maps of annuli: profiles, moduli "
                 "sweeps, bubbling families, junctions and sphere-bundle limits.")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("profile", help="closed-form profile with curvatures")
    p.add_argument("--a", type=float, default=None, help="conformal parameter a > 0 (required)")
    p.add_argument("--r-minus", type=float, default=1.0, help="radius at Z=-1 (default 1)")
    p.add_argument("--r-plus", type=float, default=1.0, help="radius at Z=+1 (default 1)")
    p.add_argument("--samples", type=int, default=11, help="uniform Z samples (default 11)")
    _common(p)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("sweep", help="energy/curvature/area chain over a grid of a")
    p.add_argument("--a-min", type=float, default=0.2, help="default 0.2")
    p.add_argument("--a-max", type=float, default=5.0, help="default 5")
    p.add_argument("--steps", type=int, default=50, help="grid points (default 50)")
    p.add_argument("--log", type=_bool, default=True, help="log-spaced grid (default true)")
    p.add_argument("--nx", type=int, default=None, help="x quadrature nodes (default adaptive)")
    p.add_argument("--workers", type=int, default=1, help="threads for grid rows (default 1)")
    p.add_argument("--limits", type=_bool, default=True,
                   help="append ruled-end (a=0) and collapsed-end (a=inf) rows (default true)")
    _boundary_flags(p)
    _common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("catenoid", help="catenoids through two coaxial circles")
    p.add_argument("--r", type=float, default=1.0, help="circle radius (default 1)")
    p.add_argument("--h", type=float, default=0.4, help="half-separation (default 0.4)")
    _common(p)
    p.set_defaults(func=cmd_catenoid)

    p = sub.add_parser("bubbling", help="pointwise limits and bubbling of a domain family")
    p.add_argument("--family", default="rect", choices=[k.value for k in bub.FamilyKind],
                   help="domain family (default rect)")
    p.add_argument("--eps", default="1e-4,3.1622776601683795e-05,1e-5",
                   help="comma-separated eps values; fewer than 3 use the default sequence for limits")
    p.add_argument("--grid", default="32x32", help="s x theta samples, at least 32x32 (default 32x32)")
    p.add_argument("--condition31", type=_bool, default=False,
                   help="also report the distance-matching deviation on seeded random pairs")
    _common(p)
    p.set_defaults(func=cmd_bubbling)

    p = sub.add_parser("neck", help="image height of the anti-bubbling neck")
    p.add_argument("--eps", default="1e-1,1e-2,1e-3,1e-4,1e-5,1e-6", help="comma-separated eps values")
    _common(p)
    p.set_defaults(func=cmd_neck)

    p = sub.add_parser("junction", help="limiting junction along a path of tube radii")
    p.add_argument("--path", default="t,t,kt", help="three radius expressions: t, k*t, t^2 (default t,t,kt)")
    p.add_argument("--k", type=float, default=1.0, help="constant in k*t (default 1)")
    p.add_argument("--t-min", type=float, default=1e-12, help="smallest t sampled (default 1e-12)")
    _common(p)
    p.set_defaults(func=cmd_junction)

    p = sub.add_parser("limits", help="energy limits and images at both ends of moduli space")
    _boundary_flags(p)
    p.add_argument("--minimize", type=_bool, default=False, help="also locate the energy minimizer")
    p.add_argument("--a-lo", type=float, default=0.05, help="minimizer search interval (default 0.05)")
    p.add_argument("--a-hi", type=float, default=10.0, help="minimizer search interval (default 10)")
    _common(p)
    p.set_defaults(func=cmd_limits)

    p = sub.add_parser("lift", help="sphere-bundle lifts of shrinking circles")
    p.add_argument("--radii", default=None, help="comma-separated radii (default 1/n, n=1..sequence)")
    p.add_argument("--sequence", type=int, default=64, help="n_max for radii 1/n (default 64)")
    p.add_argument("--samples", type=int, default=512, help="samples per circle (default 512)")
    p.add_argument("--bin-width", type=float, default=None,
                   help="position bin width (default 1/32 of the scene diameter)")
    _common(p)
    p.set_defaults(func=cmd_lift)
    return ap


def read_config(path) -> dict:
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = value
    return out


def parse_args(argv=None, parser: argparse.ArgumentParser | None = None):
    ap = parser or build_parser()
    args = ap.parse_args(argv)
    if args.config:
        cfg = read_config(args.config)
        sub = next(a for a in ap._actions if isinstance(a, argparse._SubParsersAction))
        sp = sub.choices[args.command]
        known = {a.dest for a in sp._actions}
        bad = sorted(set(cfg) - known - {"config"})
        if bad:
            raise UsageError(f"unknown config keys: {', '.join(bad)}")
        # string defaults go through each option's type conversion
        sp.set_defaults(**{k: v for k, v in cfg.items() if k != "config"})
        args = ap.parse_args(argv)
    return args


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = parse_args(argv, ap)
        table = args.func(args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (UsageError, ValueError) as exc:
        ap.print_usage(sys.stderr)
        print(f"harmonic-annuli: error: {exc}", file=sys.stderr)
        return 1
    except (NumericFailure, OverflowError, FloatingPointError, ZeroDivisionError) as exc:
        print(f"harmonic-annuli: numerical failure: {exc}", file=sys.stderr)
        return 2
    text = render(table, args.format)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8", newline="")
    else:
        try:
            sys.stdout.write(text)
            sys.stdout.flush()
        except BrokenPipeError:
            # reader went away (e.g. piped into head); silence the final flush
            sys.stdout = open(os.devnull, "w")
    return 0


if __name__ == "__main__":
    sys.exit(main())
