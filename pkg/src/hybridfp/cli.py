"""Command-line interface: ``bench``, ``solve`` and ``certify``.

Exit codes: 0 success, 1 threshold failure or unknown case, 2 I/O or parse
error, 3 singular operator.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from hybridfp import bench_examples as bench
from hybridfp.errors import HybridFPError, SingularOperatorError, UnknownCaseError
from hybridfp.hybrid_core import ContractionCertificate
from hybridfp.integral_solver import certificate as integral_certificate
from hybridfp.integral_solver import solve_integral
from hybridfp.ivp_solver import LAYOUTS, SolveReport, solve_ivp
from hybridfp.ivp_solver import certificate as ivp_certificate
from hybridfp.problem_file import ProblemDefinition, ProblemFileError, load_problem

CSV_HEADER = ("t", "m", "n", "value", "exact", "abs_error")
FORMATS = ("markdown", "csv", "json")

EXIT_OK, EXIT_FAIL, EXIT_IO, EXIT_SINGULAR = 0, 1, 2, 3


def fmt(x: float) -> str:
    """17 significant digits; ``nan`` for missing values."""
    return "nan" if x is None or (isinstance(x, float) and math.isnan(x)) else "%.17g" % x


def format_csv(rows: Iterable[tuple]) -> str:
    """Rows ``(t, m, n, value, exact, abs_error)``; ``t`` may be a label string."""
    lines = [",".join(CSV_HEADER)]
    for t, m, n, value, exact, err in rows:
        lines.append(",".join((t if isinstance(t, str) else fmt(t), str(m), str(n),
                               fmt(value), fmt(exact), fmt(err))))
    return "\n".join(lines) + "\n"


def parse_csv(text: str) -> list[tuple]:
    """Inverse of :func:`format_csv`."""
    reader = csv.reader(io.StringIO(text))
    header = tuple(next(reader))
    if header != CSV_HEADER:
        raise ValueError(f"unexpected CSV header {header}")
    rows = []
    for rec in reader:
        if not rec:
            continue
        t = rec[0]
        try:
            tv: object = float(t)
        except ValueError:
            tv = t
        rows.append((tv, int(rec[1]), int(rec[2]), float(rec[3]), float(rec[4]), float(rec[5])))
    return rows


def case_rows(report: bench.CaseReport) -> list[tuple]:
    rows = [(t, report.m, report.n, v, e, abs(v - e)) for t, v, e in zip(report.t, report.values, report.exact)]
    ref = report.expected_error_norm
    rows.append(("error_norm", report.m, report.n, report.error_norm,
                 math.nan if ref is None else ref,
                 math.nan if ref is None else abs(report.error_norm - ref)))
    return rows


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def case_json(report: bench.CaseReport) -> dict:
    rows = []
    for i, (t, v, e) in enumerate(zip(report.t, report.values, report.exact)):
        row = {"t": t, "value": v, "exact": e, "abs_error": abs(v - e)}
        if report.expected is not None:
            row["reference"] = report.expected[i]
            row["deviation"] = report.deviations[i]
        rows.append(row)
    return {
        "case": report.case_id,
        "m": report.m,
        "n": report.n,
        "rows": rows,
        "error_norm": report.error_norm,
        "certificate": report.certificate.to_dict(),
        "runtime_ms": report.runtime_ms,
        "reference_error_norm": report.expected_error_norm,
        "exact_residual": report.exact_residual,
        "layout": report.layout,
        "notes": report.notes,
    }


def case_markdown(reports: Sequence[bench.CaseReport]) -> str:
    """One table per case with the columns side by side."""
    head = reports[0]
    cols = " | ".join(f"n={r.n}, m={r.m}" for r in reports)
    lines = [f"### {head.case_id} (layout: {head.layout})", "",
             f"| t | x*(t) | {cols} |", "|---|---|" + "---|" * len(reports)]
    for i, t in enumerate(head.t):
        vals = " | ".join(f"{r.values[i]:.17g}" for r in reports)
        lines.append(f"| {t:g} | {head.exact[i]:.17g} | {vals} |")
    lines.append("| sup error | | " + " | ".join(f"{r.error_norm:.6e}" for r in reports) + " |")
    if all(r.expected is not None for r in reports):
        lines.append("| reference sup error | | " + " | ".join(f"{r.expected_error_norm:.6e}" for r in reports) + " |")
        lines.append("| max deviation | | " + " | ".join(f"{r.max_deviation:.3e}" for r in reports) + " |")
    cert = head.certificate
    lines += ["", f"certificate: ball={cert.ball_condition} contraction={cert.contraction_condition} "
                  f"M_F={cert.M_F:.6g} M_G={cert.M_G:.6g} r={cert.r:g}",
              f"exact-solution residual: {head.exact_residual:.3e}"]
    if head.notes:
        lines.append(f"note: {head.notes}")
    return "\n".join(lines) + "\n"


def _write(path: Optional[Path], text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, newline="\n") if sys.version_info >= (3, 10) else path.write_text(text)


def _columns(m: Optional[int], n: Optional[int]) -> list[tuple[int, int]]:
    if m is not None and n is not None:
        return [(m, n)]
    return [(cm, cn) for cm, cn in bench.COLUMNS if (m is None or cm == m) and (n is None or cn == n)]


def cmd_bench(args: argparse.Namespace) -> int:
    ids = list(bench.CASE_IDS) if args.all else list(args.case or [])
    if not ids:
        print("bench: give --case ID or --all", file=sys.stderr)
        return EXIT_IO
    for cid in ids:
        if cid not in bench.CASE_IDS:
            print(f"unknown case: {cid}", file=sys.stderr)
            return EXIT_FAIL
    n_single = None
    if args.n is not None:
        parts = _parse_n(args.n)
        if len(parts) != 1:
            print("bench: --n takes a single value", file=sys.stderr)
            return EXIT_IO
        n_single = parts[0]
    columns = _columns(args.m, n_single)
    if not columns:
        columns = [(args.m or 4, n_single or 33)]
    out_dir = Path(args.out) if args.out else None
    failures: list[str] = []
    chunks: list[str] = []
    payload: list[dict] = []
    for cid in ids:
        case = bench.load_case(cid)
        reports = [bench.run_case(case, m, n, args.layout, args.sup_level, args.oracle_panels) for m, n in columns]
        for rep in reports:
            failures.extend(rep.failures())
        if args.format == "markdown":
            text = case_markdown(reports)
            if out_dir:
                _write(out_dir / f"{cid}.md", text)
            else:
                chunks.append(text)
            continue
        for rep in reports:
            if args.format == "csv":
                text = format_csv(case_rows(rep))
                if out_dir:
                    _write(out_dir / f"{cid}_m{rep.m}_n{rep.n}.csv", text)
                else:
                    chunks.append(f"# {cid}\n" + text if len(ids) * len(reports) > 1 else text)
            else:
                obj = case_json(rep)
                if out_dir:
                    _write(out_dir / f"{cid}_m{rep.m}_n{rep.n}.json", json.dumps(obj, indent=2, default=_jsonable) + "\n")
                else:
                    payload.append(obj)
    if not out_dir:
        if args.format == "json":
            body = payload[0] if len(payload) == 1 else payload
            _write(None, json.dumps(body, indent=2) + "\n")
        else:
            _write(None, "\n".join(chunks))
    for line in failures:
        print(f"FAIL {line}", file=sys.stderr)
    return EXIT_FAIL if failures else EXIT_OK


def _parse_n(text: str) -> list[int]:
    return [int(p) for p in str(text).split(",") if p.strip()]


def _problem_certificate(defn: ProblemDefinition) -> ContractionCertificate:
    return ivp_certificate(defn.problem) if defn.kind == "nonlocal" else integral_certificate(defn.problem)


def solve_rows(defn: ProblemDefinition, report: SolveReport, samples: int) -> list[tuple]:
    rho = defn.problem.rho
    t = rho * np.arange(samples + 1) / samples
    x = report.solution
    values = x(t)
    exact = defn.exact(t) if defn.exact is not None else np.full_like(t, math.nan)
    n_label = report.n_list[0] if len(set(report.n_list)) == 1 else report.n_list[-1]
    rows = [(float(ti), report.m, n_label, float(v), float(e), abs(float(v) - float(e)))
            for ti, v, e in zip(t, values, exact)]
    err = math.nan if report.error is None else report.error
    rows.append(("error_norm", report.m, n_label, err, math.nan, math.nan))
    rows.append(("residual", report.m, n_label, report.residual, math.nan, math.nan))
    return rows


def cmd_solve(args: argparse.Namespace) -> int:
    defn = load_problem(args.problem)
    ns = _parse_n(args.n) if args.n is not None else [9]
    m = args.m if args.m is not None else len(ns)
    n_list = ns[0] if len(ns) == 1 else ns
    problem = defn.problem
    if problem.sup_level != args.sup_level:
        import dataclasses
        problem = dataclasses.replace(problem, sup_level=args.sup_level)
        defn = ProblemDefinition(defn.kind, problem, defn.x0, defn.exact, defn.constants)
    solver = solve_ivp if defn.kind == "nonlocal" else solve_integral
    report = solver(problem, defn.x0, m, n_list, layout=args.layout, quad_panels=args.oracle_panels)
    rows = solve_rows(defn, report, args.samples)
    cert = report.certificate
    if not cert.holds:
        print(f"warning: certificate not satisfied (ball={cert.ball_condition}, "
              f"contraction={cert.contraction_condition})", file=sys.stderr)
    out = Path(args.out) if args.out else None
    if args.format == "csv":
        _write(out, format_csv(rows))
    elif args.format == "json":
        obj = {
            "case": Path(args.problem).stem, "m": report.m, "n": report.n_list,
            "rows": [{"t": r[0], "value": r[3], "exact": _jsonable(r[4]), "abs_error": _jsonable(r[5])}
                     for r in rows if not isinstance(r[0], str)],
            "error_norm": report.error, "certificate": cert.to_dict(), "runtime_ms": report.runtime_ms,
            "residual": report.residual, "layout": report.layout,
        }
        _write(out, json.dumps(obj, indent=2) + "\n")
    else:
        lines = ["| t | value | exact | abs_error |", "|---|---|---|---|"]
        lines += [f"| {r[0]:.6g} | {fmt(r[3])} | {fmt(r[4])} | {fmt(r[5])} |" for r in rows if not isinstance(r[0], str)]
        lines += ["", f"error norm: {fmt(report.error)}", f"residual: {fmt(report.residual)}",
                  f"certificate: ball={cert.ball_condition} contraction={cert.contraction_condition}"]
        _write(out, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_certify(args: argparse.Namespace) -> int:
    overrides = {}
    for item in args.set or []:
        key, _, value = item.partition("=")
        overrides[key.strip()] = float(value)
    if args.problem:
        cert = _problem_certificate(load_problem(args.problem))
        label = Path(args.problem).stem
    elif args.case:
        if args.case not in bench.CASE_IDS:
            print(f"unknown case: {args.case}", file=sys.stderr)
            return EXIT_FAIL
        cert = bench.certificate(bench.load_case(args.case, **overrides))
        label = args.case
    else:
        print("certify: give --case ID or --problem FILE", file=sys.stderr)
        return EXIT_IO
    obj = {"case": label, **cert.to_dict()}
    if args.format == "json":
        text = json.dumps(obj, indent=2) + "\n"
    else:
        text = "\n".join(f"{k}: {v}" for k, v in obj.items()) + "\n"
    _write(Path(args.out) if args.out else None, text)
    return EXIT_OK if cert.holds else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hybridfp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, layout_default: str) -> None:
        p.add_argument("--m", type=int, help="number of chain steps")
        p.add_argument("--n", help="nodes per step (single value or comma list)")
        p.add_argument("--sup-level", type=int, default=12, help="sup grid has 2**level + 1 points")
        p.add_argument("--oracle-panels", type=int, default=4096, help="trapezoid panels of the oracle")
        p.add_argument("--format", choices=FORMATS, default="markdown")
        p.add_argument("--out", help="output file (solve, certify) or directory (bench)")
        p.add_argument("--layout", choices=LAYOUTS, default=layout_default, help="node layout of the projection")

    b = sub.add_parser("bench", help="run benchmark cases against reference tables")
    b.add_argument("--case", action="append", help="case id (repeatable)")
    b.add_argument("--all", action="store_true", help="run all cases")
    common(b, bench.DEFAULT_LAYOUT)
    b.set_defaults(func=cmd_bench)

    s = sub.add_parser("solve", help="solve a problem file")
    s.add_argument("problem", help="problem definition file")
    s.add_argument("--samples", type=int, default=10, help="output points are rho*j/samples")
    common(s, "standard")
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("certify", help="check the contraction certificate only")
    c.add_argument("--case")
    c.add_argument("--problem")
    c.add_argument("--set", action="append", help="override a case parameter, e.g. a=5")
    c.add_argument("--format", choices=("text", "json"), default="text")
    c.add_argument("--out")
    c.set_defaults(func=cmd_certify)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_IO if exc.code else EXIT_OK
    try:
        return args.func(args)
    except SingularOperatorError as exc:
        print(f"singular operator: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except UnknownCaseError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_FAIL
    except ProblemFileError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except HybridFPError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
