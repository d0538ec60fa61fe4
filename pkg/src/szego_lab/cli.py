"""Command-line front end: ``szego-lab <command> [options]``.

Every command writes a JSON summary (keys sorted, floats at 17 significant
digits) and, where it produces a table, a CSV body. Exit status is 0 on
success, 1 when a numerical check fails and 2 on a configuration error.
Verdicts such as "divergent" are data, not failures.

A config file in INI syntax can replace the flags::

    [experiment]
    command = ap-scan
    weight = thullen
    m = 2
    k = 2
    p = 5.0
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import sys
import time
from importlib import metadata
from typing import Optional, Sequence

import numpy as np

from . import admissibility as adm
from . import geometry as geo
from . import quotient as quo
from . import regularity as reg
from .errors import ConfigurationError, NumericalConsistencyError, SzegoLabError
from .fields import field_from_json, field_to_json
from .maps import closed_form_density, density_from_jacobian, map_for_domain, parse_domain_id
from .szego import make_projector, sphere_moment

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG = 0, 1, 2
DENSITY_TOL = 1e-10


class CheckFailed(Exception):
    """A numerical acceptance check did not hold; the message names it."""


# ---------------------------------------------------------------- output

def fmt_float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def dumps(obj) -> str:
    """JSON with sorted keys and floats printed at 17 significant digits
    (non-finite floats become null)."""
    if isinstance(obj, dict):
        items = sorted((str(k), v) for k, v in obj.items())
        return "{" + ", ".join(f"{json.dumps(k)}: {dumps(v)}" for k, v in items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(dumps(v) for v in obj) + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(float(obj)) if math.isfinite(obj) else "null"
    if isinstance(obj, complex):
        return dumps([obj.real, obj.imag])
    if obj is None:
        return "null"
    return json.dumps(str(obj))


def csv_text(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for r in rows:
        wr.writerow([fmt_float(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def _version() -> str:
    try:
        return metadata.version("szego-lab")
    except metadata.PackageNotFoundError:
        return "unknown"


def _emit(args, summary: dict, table: Optional[str] = None) -> None:
    summary = dict(summary)
    summary["command"] = args.command
    summary["seed"] = args.seed
    summary["version"] = _version()
    text = dumps(summary) + "\n"
    if args.summary:
        with open(args.summary, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if table is not None:
        if args.output:
            with open(args.output, "w") as fh:
                fh.write(table)
        else:
            sys.stdout.write(table)


def _floats(text: str) -> list:
    try:
        return [float(t) for t in str(text).split(",") if t.strip()]
    except ValueError as exc:
        raise ConfigurationError(f"expected comma-separated numbers, got {text!r}") from exc


def _ints(text: str) -> list:
    vals = _floats(text)
    if any(int(v) != v for v in vals):
        raise ConfigurationError(f"expected integers, got {text!r}")
    return [int(v) for v in vals]


# ---------------------------------------------------------------- domains

def _domain_grid(domain: str, N: int) -> geo.BoundaryGrid:
    name, _ = parse_domain_id(domain)
    if name == "symmetrized_bidisc":
        return geo.make_torus_grid(2, N)
    if name in ("thullen", "minimal_ball"):
        return geo.make_sphere3_grid(N, N, N)
    if name == "conformal_1d":
        return geo.make_torus_grid(1, N)
    raise ConfigurationError(f"unknown domain id {domain!r}")


def _domain_params(args) -> dict:
    name, parsed = parse_domain_id(args.domain)
    if name == "thullen" and not parsed:
        return {"m": args.m, "k": args.k}
    if name == "conformal_1d" and not parsed:
        return {"coeffs": _floats(args.coeffs)}
    return {}


# ---------------------------------------------------------------- commands

def cmd_grid(args) -> int:
    if args.manifold == "torus":
        g = geo.make_torus_grid(args.n, args.N)
    else:
        res = _ints(args.res) if args.res else [args.N] * 3
        if len(res) != 3:
            raise ConfigurationError("--res needs three resolutions")
        g = geo.make_sphere3_grid(*res, rule=args.rule)
    _emit(args, {"grid": geo.grid_reference(g), "size": g.size, "mass": float(np.sum(g.weights))})
    return EXIT_OK


def cmd_density(args) -> int:
    grid = _domain_grid(args.domain, args.N)
    params = _domain_params(args)
    t = time.perf_counter()
    w = density_from_jacobian(map_for_domain(args.domain, **params), grid)
    elapsed = time.perf_counter() - t
    oracle = closed_form_density(args.domain, grid, **params)
    err = float(np.max(np.abs(w.values - oracle.values)))
    rows = [(i, float(a), float(b)) for i, (a, b) in
            enumerate(zip(w.values[::args.stride], oracle.values[::args.stride]))]
    _emit(args, {"domain": args.domain, "params": params, "grid": geo.grid_reference(grid),
                 "max_deviation": err, "tolerance": args.tol, "pipeline_seconds": elapsed},
          csv_text(("node", "pipeline", "closed_form"), rows))
    if err >= args.tol:
        raise CheckFailed(f"density pipeline deviates from the closed form by {err:.3e}")
    return EXIT_OK


def cmd_admissibility(args) -> int:
    grid = _domain_grid(args.domain, args.N)
    params = _domain_params(args)
    phi = map_for_domain(args.domain, **params)
    w = closed_form_density(args.domain, grid, **params)
    rep = adm.admissibility_report(w, phi.group)
    out = {"domain": args.domain, "params": params, "report": rep.to_dict()}
    if grid.manifold_id == geo.TORUS and grid.dim == 1 and rep.log_integrability.verdict != "divergent":
        out["herglotz"] = adm.herglotz_solve(w).to_dict()
    _emit(args, out)
    return EXIT_OK


def _context(args) -> quo.QuadrupleContext:
    name = args.context
    if name == "power":
        return quo.power_context(args.m, args.N)
    if name == "conformal_1d":
        return quo.conformal_context(tuple(_floats(args.coeffs)), args.N)
    if name == "product_map":
        return quo.product_map_context(args.N)
    if name == "symmetrized_bidisc":
        return quo.bidisc_context(args.N)
    if name == "thullen":
        return quo.thullen_context(args.m, args.k, args.N)
    raise ConfigurationError(f"unknown context {name!r}")


def cmd_project(args) -> int:
    if not args.input:
        raise ConfigurationError("project needs --input FIELD.json")
    ctx = _context(args)
    with open(args.input) as fh:
        f = field_from_json(fh.read(), ctx.grid)
    out = quo.project_quotient(ctx, f)
    again = quo.project_quotient(ctx, out)
    idem = float(np.max(np.abs(again.values - out.values)))
    summary = {"context": ctx.name, "grid": geo.grid_reference(ctx.grid),
               "input_invariance_residual": quo.certify(ctx, f).invariance_residual,
               "output_invariance_residual": out.invariance_residual,
               "idempotence_residual": idem,
               "admissibility_residual": ctx.admissibility_residual()}
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(field_to_json(out.field))
    _emit(args, summary)
    if idem > 1e-8 * max(1.0, out.field.sup_norm()):
        raise CheckFailed(f"projection is not idempotent (residual {idem:.3e})")
    return EXIT_OK


def _p_grid(args):
    return _floats(args.p_grid) if args.p_grid else None


def cmd_ap_scan(args) -> int:
    weight = args.weight
    if args.p is not None:
        p = args.p
        if weight == "power":
            rep = reg.ap_scan_arcs(reg.power_weight(args.alpha, p), p, J=args.J,
                                   weight_id=f"power(alpha={args.alpha})")
        elif weight in ("bidisc", "distance"):
            rep = reg.bidisc_scan(p, weight="density" if weight == "bidisc" else "distance")
        elif weight == "thullen":
            fam = None
            if args.family_grid:
                fam = reg.prepare_ball_family(reg._sphere(tuple(_ints(args.family_grid))))
            rep = reg.thullen_scan(args.m, args.k, p, family=fam)
        else:
            raise ConfigurationError(f"unknown weight {weight!r}")
        bad = [c for c in rep.characteristics if c < 1.0 - 1e-9]
        _emit(args, {"scan": rep.to_dict()},
              csv_text(("p", "center_id", "delta", "characteristic"), rep.rows()))
        if bad:
            raise CheckFailed(f"characteristic below 1 ({min(bad):.6g}) violates Jensen")
        return EXIT_OK
    if weight == "power":
        det = reg.ap_interval_detect(args.alpha, _p_grid(args), J=args.J)
    elif weight in ("bidisc", "distance"):
        det = reg.bidisc_interval_scan(_p_grid(args), "density" if weight == "bidisc" else "distance")
    elif weight == "thullen":
        det = reg.thullen_interval_scan(args.m, args.k, _p_grid(args))
    else:
        raise ConfigurationError(f"unknown weight {weight!r}")
    rows = [r for p in sorted(det.reports) for r in det.reports[p].rows()]
    _emit(args, {"detection": det.to_dict()},
          csv_text(("p", "center_id", "delta", "characteristic"), rows))
    return EXIT_OK


def cmd_endpoint(args) -> int:
    if args.domain in ("bidisc", "symmetrized_bidisc"):
        sizes = _ints(args.sizes) if args.sizes else reg.WITNESS_SIZES_T2
        rep = reg.endpoint_witness_bidisc(args.p, sizes)
        worst = max(rep.projection_errors)
        tol = 1e-10
    elif args.domain == "thullen":
        sizes = _ints(args.sizes) if args.sizes else reg.WITNESS_SIZES_S3
        rep = reg.endpoint_witness_thullen(args.m, args.k, args.p, sizes)
        worst = max(rep.projection_errors) / reg.thullen_constant(args.m, args.k)
        tol = 1e-6
    else:
        raise ConfigurationError(f"unknown witness domain {args.domain!r}")
    _emit(args, {"witness": rep.to_dict()},
          csv_text(("N", "ratio", "projection_error"),
                   zip(rep.grid_sizes, rep.ratios, rep.projection_errors)))
    if worst > tol:
        raise CheckFailed(f"witness projection misses its constant by {worst:.3e}")
    return EXIT_OK


def cmd_asymptotics(args) -> int:
    rep = reg.asymptotic_check(args.alpha, _floats(args.deltas))
    if rep.limit is None:
        rows = [(args.deltas.split(",")[0], c, v) for c, v in zip(rep.cutoffs, rep.integrals)]
        table = csv_text(("delta", "cutoff", "integral"), rows)
    else:
        rows = [(d, i, r, rep.limit) for d, i, r in zip(rep.deltas, rep.integrals, rep.ratios)]
        table = csv_text(("delta", "integral", "ratio", "gamma_alpha"), rows)
    _emit(args, {"asymptotics": rep.to_dict()}, table)
    return EXIT_OK


def cmd_report(args) -> int:
    checks = run_report(quick=not args.full)
    ok = all(c["passed"] for c in checks)
    _emit(args, {"checks": checks, "passed": ok})
    if not ok:
        failed = ", ".join(c["name"] for c in checks if not c["passed"])
        raise CheckFailed(f"failed checks: {failed}")
    return EXIT_OK


# ---------------------------------------------------------------- aggregate report

def _check(name: str, passed: bool, value, tolerance, **extra) -> dict:
    return {"name": name, "passed": bool(passed), "value": value, "tolerance": tolerance, **extra}


def run_report(quick: bool = True) -> list:
    """A desk-scale pass over the main numerical claims (a lighter version of
    the acceptance suite when ``quick``)."""
    out = []
    # densities
    for dom, grid in (("symmetrized_bidisc", geo.make_torus_grid(2, 32)),
                      ("thullen(2,3)", geo.make_sphere3_grid(32, 32, 32)),
                      ("minimal_ball", geo.make_sphere3_grid(32, 32, 32))):
        w = density_from_jacobian(map_for_domain(dom), grid)
        ref = closed_form_density("thullen(2,2)" if dom == "minimal_ball" else dom, grid)
        err = float(np.max(np.abs(w.values - ref.values)))
        out.append(_check(f"density:{dom}", err < DENSITY_TOL, err, DENSITY_TOL))
    # reproducing identities
    g = geo.make_torus_grid(2, 64)
    S = make_projector(g)
    z = g.points
    err = float(np.max(np.abs(S(np.abs(z[:, 0] - z[:, 1]) ** 2 + 0j).values - 2.0)))
    out.append(_check("reproducing:bidisc", err < 1e-10, err, 1e-10))
    gs = geo.make_sphere3_grid(48, 48, 48)
    a = np.abs(gs.points)
    C = sphere_moment(1.0, 1.0) / sphere_moment(0.0, 0.0)
    err = float(np.max(np.abs(make_projector(gs)(a[:, 0] ** 2 * a[:, 1] ** 2 + 0j).values - C)))
    out.append(_check("reproducing:sphere", err < 1e-6, err, 1e-6))
    # intervals
    for alpha in ((0.5,) if quick else (0.5, 1.0, 2.0)):
        d = reg.ap_interval_detect(alpha)
        out.append(_check(f"ap-interval:alpha={alpha}", d.within(0.05), [d.p_min, d.p_max], 0.05,
                          predicted=list(d.predicted)))
    d = reg.bidisc_interval_scan()
    out.append(_check("bidisc-interval", d.within(0.1), [d.p_min, d.p_max], 0.1))
    for mk in (((2, 2),) if quick else ((1, 1), (1, 2), (2, 2), (2, 3))):
        d = reg.thullen_interval_scan(*mk)
        out.append(_check(f"thullen-interval:{mk}", d.within(0.15), [d.p_min, d.p_max], 0.15,
                          predicted=list(d.predicted)))
    # witnesses
    r4, r2 = reg.endpoint_witness_bidisc(4.0), reg.endpoint_witness_bidisc(2.0)
    out.append(_check("witness:bidisc", r4.verdict == reg.DIVERGENT and r2.verdict == reg.BOUNDED,
                      [r2.ratios, r4.ratios], reg.STABLE_TOL, r2=r4.r2))
    # lens asymptotics
    rep = reg.asymptotic_check(0.0)
    out.append(_check("intsize:alpha=0", rep.relative_error <= 0.02 and rep.monotone,
                      rep.ratios, 0.02))
    div = reg.asymptotic_check(-1.0, [0.3])
    out.append(_check("intsize:divergent", div.verdict == reg.DIVERGENT, div.integrals, None))
    # metric
    rng = np.random.default_rng(0)
    pts = geo.random_sphere_points(rng, 3 * 2000).reshape(3, 2000, 2)
    d12 = geo.metric_distance(pts[0], pts[1])
    viol = float(np.max(d12 - geo.metric_distance(pts[0], pts[2]) - geo.metric_distance(pts[2], pts[1])))
    out.append(_check("triangle", viol <= 1e-12, viol, 1e-12))
    # admissibility
    gb = geo.make_torus_grid(2, 64)
    wb = closed_form_density("symmetrized_bidisc", gb)
    li = adm.log_integrability(wb)
    fs, _ = adm.fourier_support(wb)
    out.append(_check("admissibility:bidisc", li.verdict == "finite" and fs["needs_singular_measure"],
                      fs["relative_off_orthant_mass"], adm.ORTHANT_TOL))
    # structural
    ctx = quo.product_map_context(32)
    fam = quo.random_invariant_fields(ctx, 3, seed=1)
    eq = quo.equivalence_check(ctx, 2.0, fam)
    out.append(_check("equivalence:product_map", eq.max_discrepancy <= 1e-10, eq.max_discrepancy, 1e-10))
    return out


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--summary", help="write the JSON summary here instead of stdout")
    common.add_argument("--output", help="write the CSV table (or output field) here")
    common.add_argument("--seed", type=int, default=0, help="random seed recorded in the output")

    ap = argparse.ArgumentParser(prog="szego-lab", description=__doc__.splitlines()[0])
    ap.add_argument("--config", help="INI file with an [experiment] section")
    sub = ap.add_subparsers(dest="command")

    p = sub.add_parser("grid", parents=[common], help="build a boundary grid")
    p.add_argument("--manifold", choices=("torus", "sphere"), default="torus")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--N", type=int, default=64)
    p.add_argument("--res", help="sphere resolutions N1,N2,N3")
    p.add_argument("--rule", choices=("gauss", "midpoint"), default="gauss")

    def domain_args(q):
        q.add_argument("--domain", required=True,
                       help="symmetrized_bidisc | thullen | thullen(m,k) | minimal_ball | conformal_1d")
        q.add_argument("--m", type=int, default=2)
        q.add_argument("--k", type=int, default=2)
        q.add_argument("--coeffs", default="0,1,0.3")
        q.add_argument("--N", "--n", dest="N", type=int, default=32)

    p = sub.add_parser("density", parents=[common], help="pipeline density against its closed form")
    domain_args(p)
    p.add_argument("--tol", type=float, default=DENSITY_TOL)
    p.add_argument("--stride", type=int, default=1, help="write every stride-th node to the CSV")

    p = sub.add_parser("admissibility", parents=[common], help="log-integrability and Herglotz data")
    domain_args(p)

    p = sub.add_parser("project", parents=[common], help="quotient projection of a field")
    p.add_argument("--context", required=True, choices=sorted(quo.CONTEXTS))
    p.add_argument("--input")
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--coeffs", default="0,1,0.3")
    p.add_argument("--N", type=int, default=64)

    p = sub.add_parser("ap-scan", parents=[common], help="A_p scan at one p or interval detection")
    p.add_argument("--weight", required=True, choices=("power", "bidisc", "distance", "thullen"))
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--p", type=float, help="single exponent; omit to detect the interval")
    p.add_argument("--p-grid", dest="p_grid", help="comma-separated exponents to scan")
    p.add_argument("--J", type=int, default=14)
    p.add_argument("--family-grid", dest="family_grid",
                   help="sphere grid N1,N2,N3 for the reported ball family")

    p = sub.add_parser("endpoint", parents=[common], help="endpoint witness ratios")
    p.add_argument("--domain", required=True, choices=("bidisc", "symmetrized_bidisc", "thullen"))
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--sizes", help="comma-separated grid sizes")

    p = sub.add_parser("asymptotics", parents=[common], help="lens-integral ratios against gamma_alpha")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--deltas", default=",".join(str(d) for d in reg.DEFAULT_DELTAS))

    p = sub.add_parser("report", parents=[common], help="aggregate JSON of the main checks")
    p.add_argument("--full", action="store_true", help="run every interval, not the quick subset")
    return ap


COMMANDS = {
    "grid": cmd_grid, "density": cmd_density, "admissibility": cmd_admissibility,
    "project": cmd_project, "ap-scan": cmd_ap_scan, "endpoint": cmd_endpoint,
    "asymptotics": cmd_asymptotics, "report": cmd_report,
}


def config_argv(path: str) -> list:
    """Translate an INI [experiment] section into an argument list."""
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise ConfigurationError(f"cannot read config file {path!r}")
    if not cp.has_section("experiment"):
        raise ConfigurationError("config file needs an [experiment] section")
    sec = dict(cp["experiment"])
    cmd = sec.pop("command", None)
    if cmd not in COMMANDS:
        raise ConfigurationError(f"config names unknown command {cmd!r}")
    argv = [cmd]
    for key, val in sec.items():
        flag = "--" + key.replace("_", "-")
        if val.lower() in ("true", "yes", "on"):
            argv.append(flag)
        elif val.lower() not in ("false", "no", "off"):
            argv += [flag, val]
    return argv


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parser.parse_args(argv)
        if args.config:
            args = parser.parse_args(config_argv(args.config) + [a for a in argv if a not in
                                                                 ("--config", args.config)])
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_CONFIG
        return COMMANDS[args.command](args)
    except SystemExit as exc:           # argparse usage errors
        return EXIT_CONFIG if exc.code else EXIT_OK
    except CheckFailed as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    except NumericalConsistencyError as exc:
        print(f"numerical consistency violated: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    except (ConfigurationError, SzegoLabError, OSError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main() -> None:
    sys.exit(run())
