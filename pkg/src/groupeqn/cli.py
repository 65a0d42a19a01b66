"""Command-line surface tying the toolkit together.

Exit codes: 0 success, 1 negative decision, 2 input error, 3 budget
exceeded.  ``--json`` switches any command to machine-readable output.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__, catalog
from .errors import (
    BudgetExceeded,
    GroupEqnError,
    InputError,
    NotSolvable,
    TheoremInapplicable,
)
from .expr import load_expression
from .gprogram import build_and_program, fitting_chain, save_program
from .group import (
    fitting_length,
    lower_fitting_series,
    stabilization_constant,
    upper_fitting_series,
)
from .reduction import (
    compile_coloring,
    decide_compiled,
    find_kh,
    load_graph,
    preprocess_theorem_main2,
    save_certificate,
)
from .solver import SolveBudget, color_bruteforce, eqnid_bruteforce, eqnsat_bruteforce

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_INPUT = 2
EXIT_BUDGET = 3


def _load_config(path: str | None) -> dict[str, str]:
    if not path:
        return {}
    out: dict[str, str] = {}
    for ln in Path(path).read_text(encoding="utf-8").splitlines():
        ln = ln.split("#", 1)[0].strip()
        if not ln:
            continue
        if "=" not in ln:
            raise InputError(f"bad config line: {ln!r}")
        key, val = ln.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def _emit(payload: dict, as_json: bool, lines: list[str]) -> None:
    if as_json:
        print(json.dumps(payload, indent=2, default=str))
    else:
        for line in lines:
            print(line)


def _subgroup_desc(G, sub) -> str:
    return f"order {len(sub)}"


def cmd_analyze(args) -> int:
    G = catalog.resolve_group(args.group)
    lower = lower_fitting_series(G)
    upper = upper_fitting_series(G)
    d = fitting_length(G)
    M = stabilization_constant(G)
    report = catalog.scan_criteria(G, with_certificate=args.certificate)
    payload = {
        "group": G.name,
        "order": G.order,
        "fitting_length": d,
        "stabilization_m": M,
        "lower_fitting_orders": [len(s) for s in lower],
        "upper_fitting_orders": [len(s) for s in upper],
        "scan": report.to_dict(),
    }
    lines = [
        f"group {G.name}: order {G.order}",
        f"FitL={d}  M={M}",
        "lower Fitting series orders: " + " >= ".join(str(len(s)) for s in lower),
        "upper Fitting series orders: " + " <= ".join(str(len(s)) for s in upper),
        f"top index |G/U_{d - 1}| = {report.top_index}",
        f"verdict: {report.verdict}",
    ]
    _emit(payload, args.json, lines)
    return EXIT_OK


def cmd_find_kh(args) -> int:
    G = catalog.resolve_group(args.group)
    cert = find_kh(G)
    if args.out:
        save_certificate(cert, args.out)
    payload = cert.to_dict()
    lines = [
        f"certificate over {G.name}: |K| = {len(cert.K)}, |H| = {len(cert.H)}, "
        f"C = |G/H| = {cert.coloring_index}, M = {cert.M}, FitL(K) = {cert.fitl_k}",
        "flags: " + ", ".join(f"{k}={v}" for k, v in cert.flags.items()),
    ] + ([f"written to {args.out}"] if args.out else [])
    _emit(payload, args.json, lines)
    return EXIT_OK


def cmd_and_program(args) -> int:
    G = catalog.resolve_group(args.group)
    chain = fitting_chain(G)
    res = build_and_program(chain, args.n)
    verified = None
    if args.verify:
        import numpy as np

        if args.n > 20:
            raise BudgetExceeded(f"exhaustive verification capped at 20 inputs, got {args.n}")
        vals = res.program.eval_all()
        expect = np.zeros(2 ** args.n, dtype=np.int64)
        expect[-1] = res.target
        verified = bool(np.array_equal(vals, expect))
        if not verified:
            print("verification FAILED", file=sys.stderr)
            return EXIT_NEGATIVE
    if args.out:
        save_program(res.program, args.out)
    payload = {
        "group": G.name,
        "n": args.n,
        "length": len(res.program),
        "target": res.target,
        "verified": verified,
        "chain": {"c": chain.c, "C": chain.big_c, "D": chain.d_const},
    }
    lines = [
        f"AND program over {G.name}: n={args.n}, length {len(res.program)}, target element {res.target}",
        f"chain constants: c={chain.c}, C={chain.big_c}, D={chain.d_const:.3f}",
    ]
    if verified is not None:
        lines.append(f"exhaustive verification: {'pass' if verified else 'FAIL'}")
    if args.out:
        lines.append(f"written to {args.out}")
    _emit(payload, args.json, lines)
    return EXIT_OK


def _pipeline_cert(G):
    pipeline = preprocess_theorem_main2(G)
    return pipeline, pipeline.certificate


def cmd_reduce(args) -> int:
    G = catalog.resolve_group(args.group)
    pipeline, cert = _pipeline_cert(G)
    graph = load_graph(args.graph, colors=cert.coloring_index)
    inst = compile_coloring(cert, graph)
    kind = "sat" if args.sat else "id"
    info = {"meta": None, "expr": None, "tokens": inst.delta_tokens}
    if args.out:
        info = inst.save(args.out, kind, expr_budget=args.budget)
    payload = {
        "group": G.name,
        "certificate_group": cert.group.name,
        "pipeline": pipeline.summary(),
        "kind": kind,
        "R": inst.R,
        "M": inst.M,
        "h_tilde": inst.h_tilde,
        "colors": cert.coloring_index,
        "delta_tokens": inst.delta_tokens,
        "files": info,
    }
    lines = [
        f"compiled {kind} instance over {cert.group.name}: R={inst.R}, M={inst.M}, "
        f"h~={inst.h_tilde}, |delta| = {inst.delta_tokens:,} tokens",
    ]
    if args.out:
        lines.append(f"sidecar: {info['meta']}")
        if info["expr"]:
            lines.append(f"expression file: {info['expr']}")
        else:
            lines.append(
                f"expression file skipped: {inst.delta_tokens:,} tokens exceed budget {args.budget:,}"
            )
    _emit(payload, args.json, lines)
    if args.out and args.out_requires_expr and not info["expr"]:
        return EXIT_BUDGET
    return EXIT_OK


def cmd_decide(args) -> int:
    G = catalog.resolve_group(args.group)
    _, cert = _pipeline_cert(G)
    graph = load_graph(args.graph, colors=cert.coloring_index)
    inst = compile_coloring(cert, graph)
    decision = decide_compiled(cert, graph, inst, budget=args.budget)
    oracle = color_bruteforce(graph, SolveBudget(args.budget))
    agree = decision.sat == oracle.colorable
    payload = {
        "group": cert.group.name,
        "graph": {"vertices": graph.vertex_count, "edges": graph.edge_count},
        "colors": graph.colors,
        "sat": decision.sat,
        "identity": decision.is_identity,
        "coloring": decision.coloring,
        "oracle_colorable": oracle.colorable,
        "agreement": agree,
    }
    lines = [
        f"decide over {cert.group.name}: sat={decision.sat} identity={decision.is_identity}",
        f"coloring oracle: colorable={oracle.colorable}",
        f"agreement: {agree}",
    ]
    if decision.coloring:
        lines.append(f"witness coloring: {decision.coloring}")
    _emit(payload, args.json, lines)
    if not agree:
        return EXIT_INPUT
    return EXIT_OK if decision.sat else EXIT_NEGATIVE


def cmd_solve_eqn(args) -> int:
    G = catalog.resolve_group(args.group)
    e = load_expression(args.exprfile, G)
    budget = SolveBudget(args.budget)
    if args.id:
        res = eqnid_bruteforce(e, budget)
        payload = {"mode": "id", "identity": res.is_identity, "counterexample": res.counterexample}
        lines = [f"identity: {res.is_identity}"]
        if res.counterexample is not None:
            lines.append(f"counterexample: {res.counterexample}")
        _emit(payload, args.json, lines)
        return EXIT_OK if res.is_identity else EXIT_NEGATIVE
    res = eqnsat_bruteforce(e, budget)
    payload = {"mode": "sat", "satisfiable": res.satisfiable, "witness": res.witness}
    lines = [f"satisfiable: {res.satisfiable}"]
    if res.witness is not None:
        lines.append(f"witness: {res.witness}")
    _emit(payload, args.json, lines)
    return EXIT_OK if res.satisfiable else EXIT_NEGATIVE


def cmd_scan_catalog(args) -> int:
    rows = []
    for entry in catalog.CATALOG:
        G = catalog.load(entry.name)
        rows.append(catalog.scan_criteria(G, with_certificate=args.certificates))
    payload = {"reports": [r.to_dict() for r in rows]}
    lines = [f"{'name':8s} {'order':>6s} {'FitL':>4s} {'top':>4s} {'M':>3s}  verdict"]
    for r in rows:
        lines.append(
            f"{r.name:8s} {r.order:6d} {r.fitting_len:4d} {r.top_index:4d} {r.stabilization_m:3d}  {r.verdict}"
        )
    if args.out_dir:
        from .reports import catalog_report

        info = catalog_report(args.out_dir, with_certificates=args.certificates)
        payload["files"] = info
        lines.append(f"wrote {info['csv']} and {info['figure']}")
    _emit(payload, args.json, lines)
    return EXIT_OK


def cmd_verify_all(args) -> int:
    from .verify import run_all

    results = run_all()
    payload = {"results": [{"name": r.name, "ok": r.ok, "detail": r.detail} for r in results]}
    lines = [f"{'PASS' if r.ok else 'FAIL'}  {r.name}  ({r.detail})" for r in results]
    ok = all(r.ok for r in results)
    lines.append("all checks passed" if ok else "SOME CHECKS FAILED")
    _emit(payload, args.json, lines)
    return EXIT_OK if ok else EXIT_NEGATIVE


def cmd_report(args) -> int:
    out_dir = args.out_dir
    if args.what == "and-lengths":
        G = catalog.resolve_group(args.group or "s4")
        from .reports import and_length_report

        info = and_length_report(fitting_chain(G), args.max_n, out_dir)
        lines = [
            f"wrote {info['csv']} and {info['figure']}",
            f"fitted constant A = {info['fitted_constant']:.3f}",
        ]
        _emit(info, args.json, lines)
        return EXIT_OK
    G = catalog.resolve_group(args.group or "g168")
    _, cert = _pipeline_cert(G)
    from .reports import delta_size_report

    info = delta_size_report(cert, args.max_m, out_dir)
    lines = [
        f"wrote {info['csv']} and {info['figure']}",
        f"fit: log2|delta| ~ {info['c1']:.3f} sqrt(m) + {info['c2']:.3f}"
        f" (halves: {info['c1_first_half']:.3f} / {info['c1_second_half']:.3f})",
        f"hard bound constant {info['c_bound']:.2f}: {'holds' if info['bound_holds'] else 'VIOLATED'}",
    ]
    _emit(info, args.json, lines)
    return EXIT_OK if info["bound_holds"] else EXIT_NEGATIVE


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="groupeqn",
        description="Equations over finite solvable groups: Fitting structure, "
        "G-programs, and the coloring-to-equation compiler.",
    )
    p.add_argument("--version", action="version", version=f"groupeqn {__version__}")
    p.add_argument("--config", help="key=value config file with default budgets")
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("--json", action="store_true", help="machine-readable output")

    sp = sub.add_parser("analyze", help="series, Fitting length, M, criteria")
    sp.add_argument("group")
    sp.add_argument("--certificate", action="store_true", help="include certificate search")
    add_common(sp)
    sp.set_defaults(fn=cmd_analyze)

    sp = sub.add_parser("find-kh", help="search and emit a (K, H) certificate")
    sp.add_argument("group")
    sp.add_argument("--out", help="certificate file to write")
    add_common(sp)
    sp.set_defaults(fn=cmd_find_kh)

    sp = sub.add_parser("and-program", help="build the n-input AND program")
    sp.add_argument("group")
    sp.add_argument("n", type=int)
    sp.add_argument("--verify", action="store_true", help="exhaustive truth-table check")
    sp.add_argument("--out", help="program file to write")
    add_common(sp)
    sp.set_defaults(fn=cmd_and_program)

    sp = sub.add_parser("reduce", help="compile a coloring instance to an equation")
    sp.add_argument("group")
    sp.add_argument("graph")
    mode = sp.add_mutually_exclusive_group(required=True)
    mode.add_argument("--sat", action="store_true", help="emit delta * h~^-1")
    mode.add_argument("--id", action="store_true", help="emit delta")
    sp.add_argument("--out", help="output base path (.expr/.meta)")
    sp.add_argument("--budget", type=int, default=5_000_000, help="expression-file token cap")
    sp.add_argument(
        "--out-requires-expr",
        action="store_true",
        help="exit 3 when the expression file exceeds the budget",
    )
    add_common(sp)
    sp.set_defaults(fn=cmd_reduce)

    sp = sub.add_parser("decide", help="decide a compiled instance and cross-check the oracle")
    sp.add_argument("group")
    sp.add_argument("graph")
    sp.add_argument("--budget", type=int, default=1_000_000)
    add_common(sp)
    sp.set_defaults(fn=cmd_decide)

    sp = sub.add_parser("solve-eqn", help="brute-force EQNSAT/EQNID on an expression file")
    sp.add_argument("exprfile")
    sp.add_argument("--group", required=True, help="group to interpret constants in")
    sp.add_argument("--id", action="store_true", help="identity check instead of satisfiability")
    sp.add_argument("--budget", type=int, default=1_000_000)
    add_common(sp)
    sp.set_defaults(fn=cmd_solve_eqn)

    sp = sub.add_parser("scan-catalog", help="criteria scan over all shipped groups")
    sp.add_argument("--certificates", action="store_true", help="run the certificate search too")
    sp.add_argument("--out-dir", help="write CSV and figure here")
    add_common(sp)
    sp.set_defaults(fn=cmd_scan_catalog)

    sp = sub.add_parser("verify-all", help="run the full invariant suite")
    add_common(sp)
    sp.set_defaults(fn=cmd_verify_all)

    sp = sub.add_parser("report", help="scaling reports with figures")
    sp.add_argument("what", choices=["and-lengths", "delta-sizes"])
    sp.add_argument("--group")
    sp.add_argument("--max-n", type=int, default=12)
    sp.add_argument("--max-m", type=int, default=25)
    sp.add_argument("--out-dir", default="reports")
    add_common(sp)
    sp.set_defaults(fn=cmd_report)

    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(args.config)
        if "budget" in config and hasattr(args, "budget"):
            parser_default = parser.get_default("budget")
            if getattr(args, "budget", None) == parser_default:
                args.budget = int(config["budget"])
        return args.fn(args)
    except TheoremInapplicable as exc:
        print(f"negative: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (InputError, NotSolvable, FileNotFoundError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except GroupEqnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
