"""Report generation: delimited output plus rendered figures.

Every report writes a CSV file and a PNG figure side by side in the
requested output directory and returns a summary dict.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .catalog import CATALOG, load, scan_criteria
from .gprogram import ChainSpec, build_and_program
from .reduction import GraphInstance, KHCertificate, compile_coloring


def write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def and_length_report(chain: ChainSpec, max_n: int, out_dir: str | Path) -> dict:
    """AND-program lengths for n = 1..max_n with the 2^(D*n^(1/c)) fit."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ns = list(range(1, max_n + 1))
    lengths = []
    for n in ns:
        res = build_and_program(chain, n)
        lengths.append(len(res.program))
    bound_exp = [chain.d_const * n ** (1.0 / chain.c) for n in ns]
    ratios = [l / 2 ** e for l, e in zip(lengths, bound_exp)]
    fitted_a = max(ratios)
    rows = [
        [n, l, f"{e:.4f}", f"{r:.6f}"]
        for n, l, e, r in zip(ns, lengths, bound_exp, ratios)
    ]
    csv_path = out / f"and_lengths_{chain.group.name}.csv"
    write_csv(csv_path, ["n", "length", "bound_exponent", "length_over_bound"], rows)

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot(ns, [math.log2(l) for l in lengths], "o-", label="measured log2 length")
    ax.plot(
        ns,
        [math.log2(fitted_a) + e for e in bound_exp],
        "--",
        label=f"log2({fitted_a:.2f}) + {chain.d_const:.2f} n^(1/{chain.c})",
    )
    ax.set_xlabel("inputs n")
    ax.set_ylabel("log2 program length")
    ax.set_title(f"AND-program length over {chain.group.name}")
    ax.legend()
    fig.tight_layout()
    png_path = out / f"and_lengths_{chain.group.name}.png"
    fig.savefig(png_path, dpi=150)
    plt.close(fig)
    return {
        "csv": str(csv_path),
        "figure": str(png_path),
        "fitted_constant": fitted_a,
        "lengths": dict(zip(ns, lengths)),
    }


def delta_size_bound_constant(cert: KHCertificate, alpha_len: int) -> float:
    """Analytic C with |delta| <= 2^(C*sqrt(m)): from the commutator
    expansion, log2|delta| <= 2M(sqrt(m)+1) + log2(1.5*|K|*(alpha+8))."""
    M = cert.M
    k = len(cert.K)
    return 4 * M + math.log2(1.5 * k * (alpha_len + 8))


def delta_size_report(cert: KHCertificate, max_m: int, out_dir: str | Path) -> dict:
    """Compiled |delta| for m = 1..max_m edges, with the 2^(c1*sqrt(m)+c2) fit.

    Instances are paths with m edges; the emitted length depends only on m.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ms = list(range(1, max_m + 1))
    sizes = []
    alpha_len = None
    for m in ms:
        graph = GraphInstance(m + 1, tuple((i, i + 1) for i in range(m)), cert.coloring_index)
        inst = compile_coloring(cert, graph)
        sizes.append(inst.delta_tokens)
        alpha_len = len(inst.alpha)
    roots = np.sqrt(np.array(ms, dtype=float))
    logs = np.log2(np.array(sizes, dtype=float))
    c1, c2 = np.polyfit(roots, logs, 1)
    half = len(ms) // 2
    c1_lo = np.polyfit(roots[:half], logs[:half], 1)[0] if half >= 2 else c1
    c1_hi = np.polyfit(roots[half:], logs[half:], 1)[0] if len(ms) - half >= 2 else c1
    c_bound = delta_size_bound_constant(cert, alpha_len)
    bound_ok = all(math.log2(s) <= c_bound * r for s, r in zip(sizes, roots))

    rows = [
        [m, s, f"{math.log2(s):.4f}", f"{c1 * math.sqrt(m) + c2:.4f}"]
        for m, s in zip(ms, sizes)
    ]
    csv_path = out / f"delta_sizes_{cert.group.name}.csv"
    write_csv(csv_path, ["m", "delta_tokens", "log2_tokens", "fit_log2"], rows)

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot(roots, logs, "o", label="log2 |delta|")
    ax.plot(roots, c1 * roots + c2, "--", label=f"fit {c1:.2f} sqrt(m) + {c2:.2f}")
    ax.plot(roots, c_bound * roots, ":", label=f"bound {c_bound:.1f} sqrt(m)")
    ax.set_xlabel("sqrt(m)")
    ax.set_ylabel("log2 tokens")
    ax.set_title(f"Compiled equation size over {cert.group.name}")
    ax.legend()
    fig.tight_layout()
    png_path = out / f"delta_sizes_{cert.group.name}.png"
    fig.savefig(png_path, dpi=150)
    plt.close(fig)
    return {
        "csv": str(csv_path),
        "figure": str(png_path),
        "c1": float(c1),
        "c2": float(c2),
        "c1_first_half": float(c1_lo),
        "c1_second_half": float(c1_hi),
        "c_bound": float(c_bound),
        "bound_holds": bound_ok,
        "sizes": dict(zip(ms, sizes)),
    }


def catalog_report(out_dir: str | Path, with_certificates: bool = True) -> dict:
    """Criteria scan over the whole catalog: CSV table plus a bar figure."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    reports = []
    for entry in CATALOG:
        G = load(entry.name)
        reports.append(scan_criteria(G, with_certificate=with_certificates))
    rows = [
        [
            r.name,
            r.order,
            r.fitting_len,
            r.top_index,
            "*".join(f"{p}^{e}" if e > 1 else str(p) for p, e in sorted(r.top_factorization.items())) or "1",
            r.stabilization_m,
            "yes" if r.applicable else "no",
            r.verdict,
        ]
        for r in reports
    ]
    csv_path = out / "catalog_scan.csv"
    write_csv(
        csv_path,
        ["name", "order", "fitting_length", "top_index", "top_factorization", "M", "applicable", "verdict"],
        rows,
    )

    fig, ax = plt.subplots(figsize=(8.0, 4.2))
    names = [r.name for r in reports]
    heights = [r.fitting_len for r in reports]
    colors = ["tab:red" if r.applicable else "tab:gray" for r in reports]
    ax.bar(names, heights, color=colors)
    ax.set_ylabel("Fitting length")
    ax.set_title("Catalog groups (red = hardness criteria apply)")
    ax.tick_params(axis="x", rotation=45)
    fig.tight_layout()
    png_path = out / "catalog_scan.png"
    fig.savefig(png_path, dpi=150)
    plt.close(fig)
    return {
        "csv": str(csv_path),
        "figure": str(png_path),
        "applicable": [r.name for r in reports if r.applicable],
    }
