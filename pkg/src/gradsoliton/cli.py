"""Command-line front end.

    gradsoliton verify   TARGET      identity residual table; exit 0 pass, 1 fail
    gradsoliton classify TARGET      triviality verdict; exit 3 if inconclusive
    gradsoliton spectral TAG         first Laplace eigenvalue on torus/sphere
    gradsoliton catalog  list|show   built-in fixtures

TARGET is ``catalog:<name>``, a spec file path, or ``-`` for standard input.
Input errors exit with status 2.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import warnings
from dataclasses import replace
from typing import Any, Sequence

import numpy as np

from . import __version__
from .catalog import FIXTURES, get_fixture
from .exprlang import ExprError
from .geometry import GeometryError
from .soliton import (
    IDENTITY_IDS,
    NormalizationWarning,
    SolitonError,
    SolitonSpec,
    classify_triviality,
    full_report,
    residual_fields,
)
from .specfile import SpecFileError, dumps_spec, load_spec
from .spectral import (
    DEFAULT_RESOLUTION,
    SpectralError,
    build_laplacian,
    closed_form_first_eigenvalue,
    dichotomy_report,
    first_eigenvalue,
)

EXIT_PASS, EXIT_FAIL, EXIT_INPUT, EXIT_INCONCLUSIVE = 0, 1, 2, 3


class InputError(Exception):
    pass


def _plain(obj: Any) -> Any:
    """Convert numpy scalars/arrays to JSON-ready Python values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _dump_json(payload: dict) -> str:
    # float repr is the shortest round-trip form, so output is reproducible
    return json.dumps(_plain(payload), indent=2, allow_nan=False)


def _fmt(x: float | None) -> str:
    return "-" if x is None else f"{x:.3e}"


def _resolve(target: str, args) -> SolitonSpec:
    if target.startswith("catalog:"):
        name = target.split(":", 1)[1]
        if name not in FIXTURES:
            raise InputError(f"unknown catalog fixture {name!r}; try 'catalog list'")
        spec = get_fixture(name).spec
    else:
        spec = load_spec(target)
    if args.samples is not None:
        if args.samples < 1:
            raise InputError("--samples must be positive")
        if isinstance(spec.samples, np.ndarray):
            raise InputError("--samples cannot override an explicit point list")
        spec = replace(spec, samples=args.samples)
    return spec


def _emit(text: str, args) -> None:
    if not args.quiet:
        print(text)


def cmd_verify(args) -> int:
    spec = _resolve(args.target, args)
    if args.tolerance is not None:
        spec = spec.with_tolerances(identity=args.tolerance)
    report, t1, verdict, poisson = full_report(spec)
    if args.csv:
        _write_point_csv(args.csv, spec)
    if args.json:
        payload = report.to_dict()
        payload["theorem1"] = t1.to_dict() if t1 else None
        payload["triviality"] = verdict.to_dict() if verdict else None
        payload["poisson"] = poisson.to_dict() if poisson else None
        payload["tolerance_override"] = args.tolerance
        _emit(_dump_json(payload), args)
    else:
        lines = [
            f"{report.name or '<unnamed>'}: n={report.dim} lambda={report.lam:g} ({report.kind}),"
            f" {report.sample_count} samples, c={report.normalization_constant:.6g}",
            f"{'id':<8} {'status':<8} {'max_abs':>10} {'max_rel':>10}  worst point / note",
        ]
        for ident in IDENTITY_IDS:
            e = report.entries.get(ident)
            if e is None:
                continue
            where = "" if e.worst_point is None else "(" + ", ".join(f"{v:.4g}" for v in e.worst_point) + ")"
            tail = " ".join(x for x in (where, e.note) if x)
            lines.append(f"{e.id:<8} {e.status:<8} {_fmt(e.max_abs):>10} {_fmt(e.max_rel):>10}  {tail}")
        for note in report.notes:
            lines.append(f"note: {note}")
        lines.append("RESULT: " + ("PASS" if report.passed else "FAIL"))
        _emit("\n".join(lines), args)
    return EXIT_PASS if report.passed else EXIT_FAIL


def _write_point_csv(path: str, spec: SolitonSpec) -> None:
    fields = residual_fields(spec)
    pts = spec.points
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(list(spec.chart.names) + list(fields))
        for k in range(len(pts)):
            w.writerow([repr(float(v)) for v in pts[k]] + [repr(float(fields[i][0][k])) for i in fields])


def cmd_classify(args) -> int:
    spec = _resolve(args.target, args)
    if spec.lam == 0:
        raise InputError("classification needs a non-steady soliton (lambda != 0)")
    verdict = classify_triviality(spec, args.tolerance)
    if args.json:
        payload = {"name": spec.name, "dimension": spec.dim, "lambda": spec.lam, **verdict.to_dict()}
        payload["tolerance_override"] = args.tolerance
        _emit(_dump_json(payload), args)
    else:
        lines = [
            f"{spec.name or '<unnamed>'}: {verdict.verdict}",
            f"  max |S - lambda (f + n/2)| = {verdict.criterion_residual:.6g}",
            f"  spread of f               = {verdict.f_spread:.6g}",
            f"  spread of S               = {verdict.s_spread:.6g}",
            f"  threshold (tol * scale)   = {verdict.tolerance * verdict.scale:.6g}",
        ]
        if verdict.iff_violation:
            lines.append("  WARNING: criterion and f-constancy disagree (iff-consistency flag)")
        lines += [f"  note: {n}" for n in verdict.notes]
        _emit("\n".join(lines), args)
    return EXIT_INCONCLUSIVE if verdict.verdict == "Inconclusive" else EXIT_PASS


def cmd_spectral(args) -> int:
    tag = args.tag
    if tag == "sphere":
        size = args.radius if args.radius is not None else 1.0
    elif tag == "torus":
        size = args.side if args.side is not None else 2 * math.pi
    else:
        raise InputError(f"unknown manifold tag {tag!r} (expected 'torus' or 'sphere')")
    op = build_laplacian(tag, args.res, size)
    est = first_eigenvalue(op, seed=args.seed)
    exact = closed_form_first_eigenvalue(tag, size)
    if tag == "sphere" and args.with_fixture:
        # round 2-sphere of this radius as a trivial shrinker: lambda = 1/r^2
        from .catalog import einstein_trivial
        from .soliton import poisson_check

        fx = einstein_trivial("sphere", 2, size)
        p = poisson_check(fx.spec)
        dich = dichotomy_report(est.value, fx.spec.lam, p.branch == "trivial", p.hypothesis_holds)
    else:
        dich = dichotomy_report(est.value)
    rel_err = abs(est.value - exact) / exact
    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "residual_norm"])
            for i, r in enumerate(est.residual_history):
                w.writerow([i, repr(r)])
    payload = {
        "tag": tag,
        "size": size,
        "resolution": op.resolution,
        "vertices": op.n_vertices,
        "total_measure": op.total_measure,
        "lambda1": est.value,
        "closed_form": exact,
        "relative_error": rel_err,
        "iterations": est.iterations,
        "constant_overlap": est.constant_overlap,
        "low_resolution": op.low_resolution,
        "seed": args.seed,
        "notes": op.notes,
        "dichotomy": dich.to_dict(),
        "convergence_history": est.residual_history,
    }
    if args.json:
        _emit(_dump_json(payload), args)
    else:
        lines = [
            f"{tag} (size {size:g}), resolution {op.resolution}, {op.n_vertices} vertices",
            f"  lambda1 = {est.value:.10g}   closed form {exact:.10g}   rel. error {rel_err:.3e}",
            f"  iterations {est.iterations}, total measure {op.total_measure:.8g}",
        ]
        lines += [f"  note: {n}" for n in op.notes]
        lines += [f"  {m}" for m in dich.messages]
        _emit("\n".join(lines), args)
    return EXIT_PASS


def cmd_catalog(args) -> int:
    if args.action == "list":
        rows = []
        for name in FIXTURES:
            fx = get_fixture(name)
            rows.append(
                {
                    "name": name,
                    "dimension": fx.spec.dim,
                    "lambda": fx.spec.lam,
                    "kind": fx.kind,
                    "trivial": fx.trivial,
                }
            )
        if args.json:
            _emit(_dump_json({"fixtures": rows}), args)
        else:
            _emit(
                "\n".join(
                    f"{r['name']:<24} n={r['dimension']}  lambda={r['lambda']:+.4g}  {r['kind']:<10} "
                    + ("trivial" if r["trivial"] else "non-trivial")
                    for r in rows
                ),
                args,
            )
        return EXIT_PASS
    if args.name is None:
        raise InputError("'catalog show' needs a fixture name")
    if args.name not in FIXTURES:
        raise InputError(f"unknown catalog fixture {args.name!r}")
    sys.stdout.write(dumps_spec(get_fixture(args.name).spec))
    return EXIT_PASS


def _add_common(p: argparse.ArgumentParser) -> None:
    s = argparse.SUPPRESS
    p.add_argument("--json", action="store_true", default=s, help="machine-readable output")
    p.add_argument("--csv", metavar="PATH", default=s, help="write per-point or convergence data as CSV")
    p.add_argument("--tolerance", type=float, default=s, help="override the check tolerance")
    p.add_argument("--samples", type=int, default=s, help="grid points per axis")
    p.add_argument("--seed", type=int, default=s, help="seed for the eigensolver start block")
    p.add_argument("--quiet", action="store_true", default=s, help="print nothing; exit code only")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gradsoliton", description="Verify gradient Ricci soliton identities.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _add_common(parser)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run the identity suite")
    p.add_argument("target", help="catalog:<name>, a spec file, or - for stdin")
    _add_common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("classify", help="trivial / non-trivial verdict")
    p.add_argument("target")
    _add_common(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("spectral", help="first Laplace-Beltrami eigenvalue")
    p.add_argument("tag", help="torus or sphere")
    p.add_argument("--radius", type=float, default=None, help="sphere radius (default 1)")
    p.add_argument("--side", type=float, default=None, help="torus side length (default 2 pi)")
    p.add_argument("--res", type=int, default=DEFAULT_RESOLUTION, help="cells per axis (sphere: latitude rows)")
    p.add_argument("--with-fixture", action="store_true", help="sphere only: attach the trivial shrinker of that radius")
    _add_common(p)
    p.set_defaults(func=cmd_spectral)

    p = sub.add_parser("catalog", help="list or show built-in fixtures")
    p.add_argument("action", choices=["list", "show"])
    p.add_argument("name", nargs="?")
    _add_common(p)
    p.set_defaults(func=cmd_catalog)
    return parser


_DEFAULTS = {"json": False, "csv": None, "tolerance": None, "samples": None, "seed": 0, "quiet": False}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_PASS
    for k, v in _DEFAULTS.items():
        if not hasattr(args, k):
            setattr(args, k, v)
    with warnings.catch_warnings():
        if args.quiet:
            warnings.simplefilter("ignore")
        else:
            warnings.simplefilter("always", NormalizationWarning)
            warnings.showwarning = _show_warning
        try:
            return args.func(args)
        except (InputError, SpecFileError, ExprError, GeometryError, SolitonError, SpectralError) as exc:
            if isinstance(exc, SpectralError) and "converge" in str(exc):
                print(f"error: {exc}", file=sys.stderr)
                return EXIT_FAIL
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INPUT


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {message}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
