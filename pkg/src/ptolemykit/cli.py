"""Command-line front end: run a check, write JSON reports, set the exit code.

Exit codes: 0 all checks pass, 1 some check fails, 2 usage or input error,
3 no failures but some hypothesis was not met.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import affine, convexity, groups, metric, models
from .busemann import Line, Ray, busemann_convergence_report, busemann_line_sum, convergence_series
from .errors import PtolemyError
from .report import TOL_ENV, PropertyReport, Verdict, default_tol

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_HYPOTHESIS = 0, 1, 2, 3

SERIES_HEADERS = {
    "busemann": ["T", "estimate", "cauchy_error"],
    "straightness": ["ratio", "count"],
}


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _json_arg(text: str):
    """Inline JSON or ``@path`` to a JSON file."""
    raw = Path(text[1:]).read_text() if text.startswith("@") else text
    try:
        return json.loads(raw)
    except json.JSONDecodeError as exc:
        raise PtolemyError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def _direction(space: models.ModelSpace, text: str):
    vals = _floats(text)
    if space.hyperbolic and len(vals) == 1:
        return models.BoundaryPoint(vals[0])
    return np.array(vals)


def _space(args) -> models.ModelSpace:
    if not args.space:
        raise PtolemyError("--space is required (e.g. euclidean:3, lp:2:1, disk)")
    return models.parse_space(args.space)


def _input(args) -> metric.FiniteMetricSpace:
    if not args.input:
        raise PtolemyError("--input is required")
    return metric.load_space(args.input, args.tol)


# subcommands ---------------------------------------------------------------


def cmd_check_ptolemy(args):
    return [metric.ptolemy_scan(_input(args), args.tol, args.backend)], {}


def cmd_crt(args):
    space = _input(args)
    quad = args.quad
    if len(quad) != 4:
        raise PtolemyError(f"--quad needs four indices, got {quad}")
    c = metric.crt_of(space, quad, args.tol)
    verdict = Verdict.PASS if c.in_delta else Verdict.FAIL
    stats = {"crt": list(c.coords), "classification": c.classification.value}
    rep = PropertyReport("crt", verdict, stats, {"quad": quad, "tol": c.tol}, {"quad": quad})
    print("({:.4f}, {:.4f}, {:.4f}) {}".format(*c.coords, c.classification.value))
    return [rep], {}


def cmd_circle(args):
    space = _input(args)
    cycle = args.cycle if args.cycle else list(range(space.n))
    return [metric.is_circle(space, cycle, args.tol, args.backend)], {}


def cmd_involutive(args):
    return [metric.involutive_scan(_input(args))], {}


def cmd_convexity(args):
    if args.mode == "lemma":
        return [convexity.lemma_aux_scan(args.samples, args.seed)], {}
    space = _space(args)
    if args.mode == "distance":
        return [convexity.distance_convexity_scan(space, args.samples, args.seed, args.tol)], {}
    return [convexity.strict_convexity_scan(space, args.samples, args.seed, args.tol)], {}


def cmd_busemann(args):
    space = _space(args)
    origin = np.array(_floats(args.origin)) if args.origin else np.zeros(space.dim)
    ray = Ray(space, origin, _direction(space, args.direction))
    x = np.array(_floats(args.x))
    if args.T:
        Ts = args.T
    else:
        Ts = [10.0**k for k in range(1, 5)] if space.flat else [2.0 * k for k in range(1, 16)]
    rows = convergence_series(ray, x, Ts)
    reports = [busemann_convergence_report(ray, x, Ts)]
    if args.line_sum:
        reports.append(busemann_line_sum(Line(space, origin, ray.direction), samples=args.samples, seed=args.seed, tol=args.tol))
    return reports, {"busemann": rows}


def cmd_bourdon(args):
    space = models.parse_space(args.space or "disk")
    angles = args.angles
    if not angles:
        angles = [2 * math.pi * k / args.n for k in range(args.n)]
    fs = models.bourdon_metric(space, np.zeros(space.dim), angles, args.T)
    order = list(np.argsort(np.mod(angles, 2 * math.pi), kind="stable"))
    reps = [metric.ptolemy_scan(fs, args.tol, args.backend), metric.is_circle(fs, order, args.tol, args.backend)]
    for r in reps:
        r.parameters.update(angles=angles, T=args.T)
    return reps, {}


def cmd_schoenberg(args):
    return [models.schoenberg_test(_space(args), args.samples, args.seed, args.tol)], {}


def _group(args) -> groups.GroupPresentation:
    if args.input:
        return groups.GroupPresentation.load(args.input)
    return groups.preset(args.preset)


def _element(args) -> groups.EuclideanIsometry:
    if args.translation:
        return groups.EuclideanIsometry.translation([_num(v) for v in args.translation.split(",")])
    if not args.element:
        raise PtolemyError("an isometry is required: --element JSON or --translation a,b")
    return groups.EuclideanIsometry.from_dict(_json_arg(args.element))


def _num(text: str):
    try:
        return Fraction(text.strip())
    except ValueError:
        return float(text)


def cmd_group(args):
    action = args.action
    tol = default_tol() if args.tol is None else args.tol
    if action in ("displacement", "axis"):
        g = _element(args)
        ax = groups.min_displacement(g)
        stats = {"L": ax.L, "axis": ax.to_dict(), "torsion_order": groups.is_torsion(g)}
        params = {"element": g.to_dict()}
        if action == "displacement":
            if not args.point:
                raise PtolemyError("group displacement needs --point")
            stats["displacement"] = float(groups.displacement(g, _floats(args.point)))
            params["point"] = _floats(args.point)
        else:
            rng = np.random.default_rng(args.seed)
            X = 3 * rng.uniform(-1, 1, size=(args.samples, g.dim))
            d = groups.displacement(g, X)
            stats["min_sampled_displacement"] = float(d.min())
            params.update(samples=args.samples, seed=args.seed)
        ok = stats.get("min_sampled_displacement", ax.L) >= ax.L - tol * max(1.0, ax.L)
        return [PropertyReport(f"group_{action}", Verdict.PASS if ok else Verdict.FAIL, stats, params)], {}
    G = _group(args)
    if action == "word-norm":
        g = _element(args)
        n = groups.word_norm(G, g, args.radius)
        n2 = groups.word_norm_bidirectional(G, g, args.radius)
        stats = {"word_norm": n, "bidirectional": n2, "found": n is not None}
        verdict = Verdict.PASS if n == n2 else Verdict.FAIL
        return [PropertyReport("word_norm", verdict, stats, {"group": G.name, "radius": args.radius, "element": g.to_dict()})], {}
    if action == "straightness":
        rep = groups.straightness_report(G, m_max=args.m_max, radius=args.radius)
        return [rep], {"straightness": rep.statistics.get("ratio_histogram", [])}
    if action == "businv":
        g = _element(args)
        alpha = groups.EuclideanIsometry.from_dict(_json_arg(args.alpha)) if args.alpha else None
        return [groups.busemann_invariance_check(g, alpha, args.samples, args.seed, args.T or 1e8, args.tol or 1e-6)], {}
    raise PtolemyError(f"unknown group action {action}")


def cmd_embed(args):
    space = _space(args)
    if not space.inner_product:
        raise PtolemyError("embedding families are defined for euclidean spaces")
    fam = args.family
    if fam == "analytic":
        F, budget = affine.AnalyticFamily(space.dim), 0.0
    elif fam == "coords":
        F, budget = affine.AffineFamily.coordinates(space.dim), args.budget
    elif fam.startswith("random:"):
        k = int(fam.split(":", 1)[1])
        U = affine.spread_unit_functionals(space.dim, k, args.seed)
        F, budget = affine.AffineFamily.unit_functionals(U), args.budget
    else:
        F, budget = affine.AffineFamily.from_dict(_json_arg("@" + fam)), args.budget
    P = space.sample(np.random.default_rng(args.seed), args.samples)
    rep = affine.hl_isometry_check(F, P, space, budget=budget, pairs=args.pairs, seed=args.seed)
    rep.parameters.update(family=fam, samples=args.samples)
    if fam.startswith("random:") and rep.verdict is not Verdict.HYPOTHESIS_NOT_MET:
        rep.statistics["covering_distortion"] = affine.covering_distortion(U)
    return [rep], {}


def cmd_sample(args):
    space = _space(args)
    pts, fs = models.sample_space(space, args.n, args.seed)
    data = fs.to_dict()
    data["points"] = pts.tolist()
    text = json.dumps(data, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return [], {}


# plumbing ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ptolemykit", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="distance matrix (JSON or CSV) or group presentation JSON")
    common.add_argument("--space", help="model space: euclidean:d, lp:d:p, disk, hyperboloid:d")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=None, help=f"relative tolerance (default ${TOL_ENV} or 1e-9)")
    common.add_argument("--out", help="report file (.json) or directory")
    common.add_argument("--backend", choices=["cython", "python"], default=None)
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("check-ptolemy", parents=[common], help="brute-force Ptolemy scan of a finite space")
    s = sub.add_parser("crt", parents=[common], help="cross-ratio triple of a quadruple")
    s.add_argument("--quad", type=_ints, required=True)
    s = sub.add_parser("circle", parents=[common], help="circle test for a cyclic ordering")
    s.add_argument("--cycle", type=_ints, default=None)
    sub.add_parser("involutive", parents=[common], help="is every involutive metric a metric?")
    s = sub.add_parser("convexity", parents=[common], help="distance convexity checks")
    s.add_argument("--mode", choices=["distance", "strict", "lemma"], default="distance")
    s.add_argument("--samples", type=int, default=10**4)
    s = sub.add_parser("busemann", parents=[common], help="Busemann convergence series")
    s.add_argument("--origin")
    s.add_argument("--direction", required=True, help="vector a,b,... or a boundary angle")
    s.add_argument("--x", required=True)
    s.add_argument("--T", type=_floats, default=None, help="comma-separated truncations")
    s.add_argument("--line-sum", action="store_true")
    s.add_argument("--samples", type=int, default=100)
    s = sub.add_parser("bourdon", parents=[common], help="Bourdon metric on boundary points")
    s.add_argument("--angles", type=_floats, default=None)
    s.add_argument("--n", type=int, default=8)
    s.add_argument("--T", type=float, default=models.DEFAULT_GROMOV_T)
    s = sub.add_parser("schoenberg", parents=[common], help="Ptolemy + parallelogram sampling")
    s.add_argument("--samples", type=int, default=10**5)
    s = sub.add_parser("group", parents=[common], help="isometry group checks")
    s.add_argument("action", choices=["displacement", "axis", "word-norm", "straightness", "businv"])
    s.add_argument("--preset", default="p4")
    s.add_argument("--element", help="isometry JSON {Q, t} inline or @file")
    s.add_argument("--translation", help="shortcut for a translation element, e.g. 2,0")
    s.add_argument("--alpha", help="commuting isometry JSON for businv")
    s.add_argument("--point")
    s.add_argument("--radius", type=int, default=12)
    s.add_argument("--m-max", type=int, default=6)
    s.add_argument("--samples", type=int, default=1000)
    s.add_argument("--T", type=float, default=None)
    s = sub.add_parser("embed", parents=[common], help="evaluation embedding distortion")
    s.add_argument("--family", default="analytic", help="analytic, coords, random:K or a family JSON file")
    s.add_argument("--samples", type=int, default=200)
    s.add_argument("--pairs", type=int, default=1000)
    s.add_argument("--budget", type=float, default=0.02)
    s = sub.add_parser("sample", parents=[common], help="write a seeded finite sample of a model space")
    s.add_argument("--n", type=int, default=10)
    return p


COMMANDS = {
    "check-ptolemy": cmd_check_ptolemy,
    "crt": cmd_crt,
    "circle": cmd_circle,
    "involutive": cmd_involutive,
    "convexity": cmd_convexity,
    "busemann": cmd_busemann,
    "bourdon": cmd_bourdon,
    "schoenberg": cmd_schoenberg,
    "group": cmd_group,
    "embed": cmd_embed,
    "sample": cmd_sample,
}


def exit_code(reports: list[PropertyReport]) -> int:
    verdicts = {r.verdict for r in reports}
    if Verdict.FAIL in verdicts:
        return EXIT_FAIL
    if Verdict.HYPOTHESIS_NOT_MET in verdicts:
        return EXIT_HYPOTHESIS
    return EXIT_PASS


def write_outputs(reports: list[PropertyReport], series: dict, out: str | None) -> None:
    if out is None:
        for r in reports:
            print(r.to_json())
        return
    path = Path(out)
    if path.suffix == ".json" and len(reports) == 1 and not series:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(reports[0].to_json() + "\n")
        return
    path.mkdir(parents=True, exist_ok=True)
    entries = []
    for r in reports:
        name = f"{r.check}.json"
        (path / name).write_text(r.to_json() + "\n")
        entries.append({"check": r.check, "verdict": r.verdict.value, "file": name})
    for key, rows in series.items():
        name = f"{key}_series.csv"
        with open(path / name, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(SERIES_HEADERS[key])
            w.writerows(rows)
        entries.append({"series": key, "file": name, "columns": SERIES_HEADERS[key]})
    (path / "index.json").write_text(json.dumps({"reports": entries, "exit_code": exit_code(reports)}, indent=2, sort_keys=True) + "\n")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.tol is None:
            default_tol()  # surfaces a malformed environment override early
        reports, series = COMMANDS[args.command](args)
        write_outputs(reports, series, args.out)
    except (PtolemyError, OSError, ValueError, KeyError) as exc:
        print(f"ptolemykit {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for r in reports:
        print(r.summary(), file=sys.stderr)
    return exit_code(reports)


if __name__ == "__main__":
    sys.exit(main())
