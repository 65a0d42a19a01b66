"""Cross-module invariant suite behind the ``verify-all`` command.

Each check returns (ok, detail); ``run_all`` executes every registered
check and reports one line per check.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import catalog
from .expr import (
    build_fitting_definer,
    build_gamma_inducer,
    build_lower_fitting_inducer,
    build_power_inducer,
    build_upper_fitting_definer,
)
from .gprogram import GProgram, commutator_program, eval_program, fitting_chain, invert_program
from .group import (
    Group,
    conjugacy_classes,
    eta,
    fitting_length,
    fitting_subgroup,
    is_nilpotent,
    is_normal,
    lower_fitting_series,
    normal_subgroups,
    set_commutator,
    subgroup_generated,
    subgroup_group,
    upper_fitting_series,
)

SMALL = ("c2", "c3", "c4", "c6", "c12", "s3", "a4", "d4", "q8", "s4", "sl23", "g72")


def _small_groups() -> list[Group]:
    return [catalog.load(name) for name in SMALL]


def check_set_commutator_lemma() -> tuple[bool, str]:
    """<[X,Y]_Set> equals the naive subgroup commutator for conjugation-
    closed sets: exhaustive over class pairs, sampled over class unions."""
    from .group import ElementSet

    rng = np.random.default_rng(7)
    checked = 0
    for G in _small_groups():
        classes = conjugacy_classes(G)
        pools = list(classes)
        for _ in range(40):
            take = rng.integers(0, 2, len(pools))
            take2 = rng.integers(0, 2, len(pools))
            members: set[int] = set()
            members2: set[int] = set()
            for bit, bit2, cls in zip(take, take2, pools):
                if bit:
                    members |= cls.members
                if bit2:
                    members2 |= cls.members
            if not members or not members2:
                continue
            X = ElementSet(G, frozenset(members))
            Y = ElementSet(G, frozenset(members2))
            lhs = subgroup_generated(set_commutator(X, Y))
            hx = subgroup_generated(X)
            hy = subgroup_generated(Y)
            rhs = subgroup_generated(set_commutator(hx, hy))
            if lhs.members != rhs.members:
                return False, f"lemma fails on {G.name}"
            checked += 1
        for cx in classes:
            for cy in classes:
                lhs = subgroup_generated(set_commutator(cx, cy))
                rhs = subgroup_generated(
                    set_commutator(subgroup_generated(cx), subgroup_generated(cy))
                )
                if lhs.members != rhs.members:
                    return False, f"lemma fails on {G.name} class pair"
                checked += 1
    return True, f"{checked} pairs"


def check_fitting_series_lengths() -> tuple[bool, str]:
    """Upper and lower Fitting series have equal length on every entry."""
    for entry in catalog.CATALOG:
        G = catalog.load(entry.name)
        lo = len(lower_fitting_series(G)) - 1
        hi = len(upper_fitting_series(G)) - 1
        if lo != hi or lo != fitting_length(G) or lo != entry.fitting_len:
            return False, f"{entry.name}: lower {lo}, upper {hi}"
    return True, f"{len(catalog.CATALOG)} groups"


def check_fitting_intersection() -> tuple[bool, str]:
    """U_i(H) = U_i(G) n H for every normal subgroup of the catalog groups
    (the order-432 entry is skipped to keep the suite quick)."""
    checked = 0
    for G in _small_groups() + [catalog.load("g168"), catalog.load("g216")]:
        series_g = upper_fitting_series(G)
        for H in normal_subgroups(G):
            if len(H) == 1:
                continue
            h_group, emb = subgroup_group(H)
            series_h = upper_fitting_series(h_group)
            for i in range(min(len(series_g), len(series_h))):
                lifted = frozenset(int(emb[j]) for j in series_h[i].members)
                expected = series_g[i].members & H.members
                if lifted != expected:
                    return False, f"{G.name}: U_{i} mismatch on |H|={len(H)}"
            checked += 1
    return True, f"{checked} normal subgroups"


def check_eta_properties() -> tuple[bool, str]:
    """Idempotence of eta and the Fitting-length bound for products."""
    rng = np.random.default_rng(11)
    checked = 0
    for name in ("s3", "s4", "a4", "g72"):
        G = catalog.load(name)
        normals = [N for N in normal_subgroups(G) if is_normal(N)]
        for N in normals:
            for g in rng.integers(0, G.order, 6):
                e1 = eta(G, N, int(g))
                if eta(G, e1, int(g)).members != e1.members:
                    return False, f"eta not idempotent on {name}"
                h = int(rng.integers(0, G.order))
                gh = int(G.mul[int(g), h])
                fl = fitting_length(eta(G, N, gh))
                bound = max(fitting_length(e1), fitting_length(eta(G, N, h)))
                if fl > bound:
                    return False, f"eta product bound fails on {name}"
                checked += 1
    return True, f"{checked} triples"


def check_fitting_subgroup_maximal() -> tuple[bool, str]:
    """Fit(G) is nilpotent, normal, and contains every nilpotent normal
    subgroup (enumerated through the normal-subgroup lattice)."""
    for G in _small_groups():
        fit = fitting_subgroup(G)
        if not is_normal(fit) or not is_nilpotent(fit):
            return False, f"Fit({G.name}) not nilpotent normal"
        for N in normal_subgroups(G):
            if is_nilpotent(N) and not N.members <= fit.members:
                return False, f"Fit({G.name}) misses a nilpotent normal subgroup"
    return True, f"{len(SMALL)} groups"


def check_builders_small() -> tuple[bool, str]:
    """Builder self-checks across the small catalog (each raises on
    mismatch): power, gamma, lower-Fitting inducers; both definers."""
    built = 0
    for G in _small_groups():
        for k in (1, 2, 3):
            build_power_inducer(G, k)
            built += 1
        build_gamma_inducer(G, 2)
        built += 1
        for i in range(len(lower_fitting_series(G))):
            build_lower_fitting_inducer(G, i)
            built += 1
        build_fitting_definer(G)
        built += 1
        d = fitting_length(G)
        for i in range(1, d + 1):
            build_upper_fitting_definer(G, i)
            built += 1
    return True, f"{built} builders"


def check_program_laws() -> tuple[bool, str]:
    """Inversion and commutator homomorphism laws on random programs."""
    rng = np.random.default_rng(3)
    G = catalog.load("s4")
    for trial in range(10):
        n = 5
        ln = int(rng.integers(1, 12))
        P = GProgram(G, rng.integers(0, n, ln), rng.integers(0, 24, ln), rng.integers(0, 24, ln), n)
        Q = GProgram(G, rng.integers(0, n, 4), rng.integers(0, 24, 4), rng.integers(0, 24, 4), n)
        Pi, Cm = invert_program(P), commutator_program([P, Q])
        for bits_num in range(2 ** n):
            bits = [(bits_num >> (n - 1 - j)) & 1 for j in range(n)]
            v = eval_program(P, bits)
            if eval_program(Pi, bits) != int(G.inv[v]):
                return False, "inversion law fails"
            w = eval_program(Q, bits)
            expect = G.mul[G.mul[G.mul[G.inv[v], G.inv[w]], v], w]
            if eval_program(Cm, bits) != expect:
                return False, "commutator law fails"
    return True, "10 random programs, exhaustive bits"


def check_and_programs() -> tuple[bool, str]:
    """AND correctness over the S4 chain for n up to 8 (exhaustive)."""
    from .gprogram import build_and_program

    chain = fitting_chain(catalog.load("s4"))
    for n in range(1, 9):
        res = build_and_program(chain, n)
        vals = res.program.eval_all()
        expect = np.zeros(2 ** n, dtype=np.int64)
        expect[-1] = res.target
        if not np.array_equal(vals, expect):
            return False, f"AND fails at n={n}"
    return True, "n = 1..8"


def check_reduction_roundtrip() -> tuple[bool, str]:
    """Compile + decide on a tiny corpus against the coloring oracle."""
    from .reduction import GraphInstance, compile_coloring, decide_compiled, find_kh
    from .solver import color_bruteforce

    G = catalog.load("g168")
    cert = find_kh(G)
    corpus = [
        GraphInstance(2, ((0, 1),), 3),
        GraphInstance(3, ((0, 1), (1, 2), (0, 2)), 3),
        GraphInstance(4, tuple((i, j) for i in range(4) for j in range(i + 1, 4)), 3),
    ]
    for graph in corpus:
        inst = compile_coloring(cert, graph)
        dec = decide_compiled(cert, graph, inst)
        oracle = color_bruteforce(graph)
        if dec.sat != oracle.colorable or dec.is_identity == dec.sat:
            return False, f"decision mismatch on {graph}"
    return True, f"{len(corpus)} graphs"


def check_file_roundtrips() -> tuple[bool, str]:
    """Group, expression, and program file formats round-trip."""
    import tempfile
    from pathlib import Path

    from .expr import load_expression, save_expression, single_var, commutator_expr
    from .gprogram import load_program, save_program
    from .group import group_from_bytes, group_to_bytes

    G = catalog.load("s4")
    with tempfile.TemporaryDirectory() as td:
        e = commutator_expr(single_var(G, 0, 2), single_var(G, 1, 2))
        save_expression(e, Path(td) / "e.expr")
        e2 = load_expression(Path(td) / "e.expr", G)
        if not np.array_equal(e.tokens, e2.tokens):
            return False, "expression roundtrip"
        P = GProgram(G, [0, 1], [3, 5], [7, 2], 2)
        save_program(P, Path(td) / "p.prog")
        P2 = load_program(Path(td) / "p.prog", G)
        if not (np.array_equal(P.bits, P2.bits) and np.array_equal(P.b, P2.b)):
            return False, "program roundtrip"
        G2 = group_from_bytes(group_to_bytes(G))
        if not np.array_equal(G.mul, G2.mul):
            return False, "group table roundtrip"
    return True, "3 formats"


CHECKS: list[tuple[str, Callable[[], tuple[bool, str]]]] = [
    ("set-commutator lemma", check_set_commutator_lemma),
    ("Fitting series lengths", check_fitting_series_lengths),
    ("Fitting intersection lemma", check_fitting_intersection),
    ("eta idempotence and product bound", check_eta_properties),
    ("Fitting subgroup maximality", check_fitting_subgroup_maximal),
    ("inducer/definer builders", check_builders_small),
    ("G-program laws", check_program_laws),
    ("AND programs", check_and_programs),
    ("reduction roundtrip", check_reduction_roundtrip),
    ("file-format roundtrips", check_file_roundtrips),
]


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str


def run_all(names: list[str] | None = None) -> list[CheckResult]:
    results = []
    for name, fn in CHECKS:
        if names and name not in names:
            continue
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failure, not an abort
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name, ok, detail))
    return results
