"""Acceptance suite: one test per criterion, each printing a verdict line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines as the
criteria complete.
"""

from __future__ import annotations

import math
import time

import numpy as np
import pytest

from groupeqn import catalog
from groupeqn import expr as ex
from groupeqn import gprogram as gp
from groupeqn import group as gc
from groupeqn import reduction as rd
from groupeqn import solver as sv
from groupeqn.errors import TheoremInapplicable

SMALL_72 = ("c2", "c3", "c4", "c6", "c12", "s3", "a4", "d4", "q8", "s4", "sl23", "g72")


def _report(num: int, ok: bool, detail: str) -> None:
    print(f"[criterion {num}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, detail


def test_criterion_1_fitting_machinery():
    """S4 series and Fitting lengths match the worked example; < 1 s."""
    t0 = time.monotonic()
    s4 = catalog.load("s4")
    upper = gc.upper_fitting_series(s4)
    lower = gc.lower_fitting_series(s4)
    sizes_up = [len(t) for t in upper]
    sizes_low = [len(t) for t in lower]
    ok = sizes_up == [1, 4, 12, 24] and sizes_low == [24, 12, 4, 1]
    ok = ok and [t.members for t in upper] == [t.members for t in reversed(lower)]
    ok = ok and gc.fitting_length(s4) == 3
    g72 = catalog.load("g72")
    ok = ok and gc.fitting_length(g72) == 2
    derived = gc.derived_series(g72)[1]
    ok = ok and gc.fitting_length(derived) == 2
    elapsed = time.monotonic() - t0
    ok = ok and elapsed < 1.0
    _report(1, ok, f"S4 series 1<=V4<=A4<=S4 both ways, FitL(g72)=FitL(g72')=2 in {elapsed:.2f}s")


def test_criterion_2_and_programs():
    """Exhaustive AND correctness for n = 1..12 over the S4 chain; < 30 s."""
    t0 = time.monotonic()
    chain = gp.fitting_chain(catalog.load("s4"))
    lengths = {}
    for n in range(1, 13):
        res = gp.build_and_program(chain, n)
        vals = res.program.eval_all()
        expect = np.zeros(2 ** n, dtype=np.int64)
        expect[-1] = res.target
        assert res.target != 0
        assert np.array_equal(vals, expect), f"truth table fails at n={n}"
        lengths[n] = len(res.program)
    fitted_a = max(l / 2 ** (2 * math.sqrt(n)) for n, l in lengths.items())
    ok = all(l <= fitted_a * 2 ** (2 * math.sqrt(n)) + 1e-9 for n, l in lengths.items())
    ok = ok and fitted_a < 32  # the constant stays modest across the range
    elapsed = time.monotonic() - t0
    ok = ok and elapsed < 30.0
    _report(2, ok, f"n=1..12 exhaustive, len(n) <= {fitted_a:.2f} * 2^(2 sqrt n), {elapsed:.1f}s")


def test_criterion_3_inducers_and_definers():
    """Builder images / defined sets equal the kernel subgroups exactly on
    every catalog group of order <= 72; zero mismatches tolerated."""
    t0 = time.monotonic()
    mismatches = 0
    built = 0
    for name in SMALL_72:
        G = catalog.load(name)
        # every builder self-verifies exactly (raises on mismatch)
        for k in (1, 2, 3):
            ex.build_power_inducer(G, k)
            built += 1
        ex.build_gamma_inducer(G, 2)
        built += 1
        series = gc.lower_fitting_series(G)
        for i in range(len(series)):
            ex.build_lower_fitting_inducer(G, i)
            built += 1
        fit_def = ex.build_fitting_definer(G)
        built += 1
        d = gc.fitting_length(G)
        for i in range(1, d + 1):
            ex.build_upper_fitting_definer(G, i)
            built += 1
        # commutator-fixed inducer for each commutator-fixed normal subgroup
        for N in gc.normal_subgroups(G):
            if gc.subgroup_generated(gc.set_commutator(N, gc.full_subgroup(G))).members == N.members:
                ex.build_commutator_fixed_inducer(G, N)
                built += 1
        # token-level cross-checks: read-once prefix of the power inducer,
        # first gamma factor, and the Fitting definer on exhaustive or
        # >= 10^4-sampled auxiliaries
        p = ex.build_power_inducer(G, 2)
        prefix = ex.Expression(G, p.tokens[:4], p.var_count)
        powers = gc.ElementSet(G, frozenset({G.power(g, 2) for g in range(G.order)}))
        if ex.image_exact(prefix).members != gc.set_product(powers, powers).members:
            mismatches += 1
        gi = ex.build_gamma_inducer(G, 2)
        full = gc.full_subgroup(G).as_set()
        if ex.image_exact(ex.Expression(G, gi.tokens[:4], gi.var_count)).members != gc.set_commutator(full, full).members:
            mismatches += 1
        n_aux = fit_def.var_count - 1
        total = G.order ** n_aux
        fit = gc.fitting_subgroup(G).members
        rng = np.random.default_rng(13)
        for g in range(G.order):
            if total <= 200_000:
                sigma = np.zeros((total, fit_def.var_count), dtype=np.int64)
                grids = np.unravel_index(np.arange(total), (G.order,) * n_aux)
                for j, col in enumerate(grids):
                    sigma[:, j + 1] = col
            else:
                sigma = rng.integers(0, G.order, (10_000, fit_def.var_count))
            sigma[:, 0] = g
            always_id = bool((ex.evaluate_many(fit_def, sigma) == 0).all())
            if total <= 200_000:
                if always_id != (g in fit):
                    mismatches += 1
            elif (g in fit) and not always_id:
                mismatches += 1
    elapsed = time.monotonic() - t0
    _report(3, mismatches == 0, f"{built} builders over {len(SMALL_72)} groups, {mismatches} mismatches, {elapsed:.1f}s")


def test_criterion_4_certificate_g168():
    """find_kh on the order-168 group: FitL(K) = 2, (I)/(II) for all 168
    elements, preprocessing applicable per the Table-1 row; < 1 min."""
    t0 = time.monotonic()
    G = catalog.load("g168")
    cert = rd.find_kh(G)
    ok = cert.fitl_k == 2 and all(cert.flags.values())
    # re-verify (I)/(II) element by element, independently of the search
    for g in range(168):
        e = gc.eta(G, cert.K, g)
        if g in cert.H.members:
            ok = ok and gc.fitting_length(e) <= cert.fitl_k - 1
        else:
            ok = ok and e.members == cert.K.members
    pipeline = rd.preprocess_theorem_main2(G)
    ok = ok and pipeline.certificate.usable_for_coloring
    ok = ok and catalog.entry("g168").applicable
    elapsed = time.monotonic() - t0
    ok = ok and elapsed < 60.0
    _report(4, ok, f"certificate |K|=56, (I)/(II) over all 168 elements, applicable, {elapsed:.1f}s")


def _corpus() -> list[rd.GraphInstance]:
    def g(n, edges):
        return rd.GraphInstance(n, tuple(edges), 3)

    complete = lambda n: [(i, j) for i in range(n) for j in range(i + 1, n)]
    graphs = [
        g(2, [(0, 1)]),                                   # single edge
        g(4, [(0, 1), (2, 3)]),                           # two disjoint edges
        g(3, [(0, 1), (1, 2)]),                           # path P3
        g(4, [(0, 1), (1, 2), (2, 3)]),                   # path P4
        g(3, complete(3)),                                # triangle
        g(4, [(0, 1), (0, 2), (0, 3)]),                   # star K1,3 (bipartite)
        g(4, complete(3) + [(2, 3)]),                     # paw
        g(4, [(0, 1), (1, 2), (2, 3), (0, 3)]),           # C4 (bipartite)
        g(5, [(0, 1), (1, 2), (2, 3), (3, 4)]),           # path P5
        g(5, [(0, 1), (0, 2), (0, 3), (0, 4)]),           # star K1,4 (bipartite)
        g(5, complete(3) + [(3, 4)]),                     # triangle + edge
        g(5, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)]),   # C5 (odd cycle)
        g(4, complete(4)),                                # K4
        g(6, complete(4)),                                # K4 + isolated vertices
        g(5, complete(5)),                                # K5
        g(5, complete(5)[:-1]),                           # K5 minus an edge
        g(6, complete(6)),                                # K6
        g(6, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)] + [(5, i) for i in range(5)]),  # wheel W5
    ]
    for seed in (9, 19, 2, 6):  # frozen random graphs: two sparse sat, two dense unsat
        rng = np.random.default_rng(seed)
        p = 0.75 if seed % 2 == 0 else 0.35
        edges = [(i, j) for i in range(6) for j in range(i + 1, 6) if rng.random() < p]
        graphs.append(g(6, edges))
    return graphs


@pytest.mark.slow
def test_criterion_5_reduction_corpus():
    """decide_compiled == coloring oracle on >= 20 graphs; every witness
    evaluates to h~ through the full token stream; < 10 min total."""
    t0 = time.monotonic()
    G = catalog.load("g168")
    cert = rd.find_kh(G)
    graphs = _corpus()
    assert len(graphs) >= 20
    disagreements = 0
    witnesses = 0
    for graph in graphs:
        inst = rd.compile_coloring(cert, graph)
        decision = rd.decide_compiled(cert, graph, inst)
        oracle = sv.color_bruteforce(graph)
        if decision.sat != oracle.colorable or decision.is_identity != (not oracle.colorable):
            disagreements += 1
            continue
        if decision.sat:
            val = inst.evaluate_delta(decision.witness)
            if val != inst.h_tilde:
                disagreements += 1
            witnesses += 1
    elapsed = time.monotonic() - t0
    ok = disagreements == 0 and elapsed < 600.0
    _report(
        5,
        ok,
        f"{len(graphs)} graphs, {witnesses} witnesses token-stream-verified, "
        f"{disagreements} disagreements, {elapsed:.0f}s",
    )


def test_criterion_6_delta_scaling(tmp_path):
    """|delta| over m = 1..25 fits 2^(c1 sqrt m + c2) with c1 stable within
    20%, under the analytic hard bound."""
    from groupeqn.reports import delta_size_report

    t0 = time.monotonic()
    cert = rd.find_kh(catalog.load("g168"))
    info = delta_size_report(cert, 25, tmp_path)
    c1 = info["c1"]
    dev1 = abs(info["c1_first_half"] - c1) / c1
    dev2 = abs(info["c1_second_half"] - c1) / c1
    ok = dev1 <= 0.20 and dev2 <= 0.20 and info["bound_holds"]
    elapsed = time.monotonic() - t0
    _report(
        6,
        ok,
        f"c1 = {c1:.2f} (halves within {max(dev1, dev2):.0%}), "
        f"|delta| <= 2^({info['c_bound']:.1f} sqrt m), {elapsed:.1f}s",
    )


def test_criterion_7_lifting_lemmas():
    """All three lifts preserve brute-force decisions on >= 50 instances each."""
    t0 = time.monotonic()
    s3 = catalog.load("s3")
    rng = np.random.default_rng(99)

    def rand_inst(G, var_count, length):
        toks = []
        for _ in range(length):
            k = int(rng.integers(0, 3))
            if k == 0:
                toks.append(int(rng.integers(0, G.order)))
            elif k == 1:
                toks.append(ex.var_token(int(rng.integers(0, var_count))))
            else:
                toks.append(ex.inv_var_token(int(rng.integers(0, var_count))))
        return ex.Expression(G, np.array(toks, dtype=np.int32), var_count)

    squares = ex.Expression(s3, np.array([ex.var_token(0)] * 2, dtype=np.int32), 1)
    c3 = gc.power_subgroup(s3, 2)
    sub, emb = gc.subgroup_group(c3)
    q = gc.quotient_group(s3, c3)
    definer = ex.build_fitting_definer(s3)

    checked = {"inducer": 0, "quotient": 0, "definer": 0}
    for _ in range(50):
        inst = rand_inst(sub, 3, int(rng.integers(1, 6)))
        lifted = rd.lift_eqnsat_via_inducer(inst, squares, c3, embed=emb)
        assert sv.eqnsat_bruteforce(inst).satisfiable == sv.eqnsat_bruteforce(lifted).satisfiable
        checked["inducer"] += 1

        inst_q = rand_inst(q.group, 3, int(rng.integers(1, 6)))
        lifted_q = rd.lift_eqnsat_quotient(inst_q, q, squares, c3)
        assert sv.eqnsat_bruteforce(inst_q).satisfiable == sv.eqnsat_bruteforce(lifted_q).satisfiable
        checked["quotient"] += 1

        inst_id = rand_inst(q.group, 2, int(rng.integers(1, 6)))
        lifted_id = rd.lift_eqnid_via_definer(inst_id, q, definer, c3)
        assert sv.eqnid_bruteforce(inst_id).is_identity == sv.eqnid_bruteforce(lifted_id).is_identity
        checked["definer"] += 1
    elapsed = time.monotonic() - t0
    ok = all(v >= 50 for v in checked.values())
    _report(7, ok, f"{checked} decision-preserving lifts, {elapsed:.1f}s")


def test_criterion_8_refusal_behavior():
    """Asymptotic lower bounds are not reproduced; the open 2-group case is
    refused with the inapplicability verdict."""
    s4 = catalog.load("s4")
    refused = False
    try:
        rd.preprocess_theorem_main2(s4)
    except TheoremInapplicable as exc:
        refused = "inapplicable" in str(exc)
    report = catalog.scan_criteria(s4, with_certificate=False)
    ok = refused and not report.applicable
    _report(8, ok, "S4 (Fitting length 3, 2-group top) refused with 'theorem inapplicable'")
