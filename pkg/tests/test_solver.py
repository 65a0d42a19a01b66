"""Brute-force oracle tests."""

from __future__ import annotations

from itertools import product

import numpy as np
import pytest

from groupeqn import catalog
from groupeqn import expr as ex
from groupeqn import gprogram as gp
from groupeqn import solver as sv
from groupeqn.errors import BudgetExceeded, InputError
from groupeqn.reduction import GraphInstance


def tok_expr(G, toks, var_count):
    return ex.Expression(G, np.array(toks, dtype=np.int32), var_count)


# -- eqnsat -----------------------------------------------------------------------


def test_eqnsat_constant_identity(s4):
    res = sv.eqnsat_bruteforce(ex.const_expr(s4, 0))
    assert res.satisfiable and res.witness == {}


def test_eqnsat_constant_nonidentity(s4):
    res = sv.eqnsat_bruteforce(ex.const_expr(s4, 5))
    assert not res.satisfiable and res.witness is None


def test_eqnsat_solvable_single_var(s4):
    e = tok_expr(s4, [ex.var_token(0), s4.inv[7]], 1)
    res = sv.eqnsat_bruteforce(e)
    assert res.satisfiable and res.witness == {0: 7}


def test_eqnsat_agrees_with_image(s4):
    rng = np.random.default_rng(0)
    for _ in range(30):
        length = int(rng.integers(1, 6))
        toks = []
        for _ in range(length):
            k = int(rng.integers(0, 3))
            if k == 0:
                toks.append(int(rng.integers(0, 24)))
            elif k == 1:
                toks.append(ex.var_token(int(rng.integers(0, 3))))
            else:
                toks.append(ex.inv_var_token(int(rng.integers(0, 3))))
        e = tok_expr(s4, toks, 3)
        res = sv.eqnsat_bruteforce(e)
        assert res.satisfiable == (0 in ex.image_exact(e).members)
        if res.satisfiable:
            assert ex.evaluate(e, {**{v: 0 for v in range(3)}, **res.witness}) == 0


def test_eqnsat_witness_deterministic(s3):
    e = ex.commutator_expr(ex.single_var(s3, 0, 2), ex.single_var(s3, 1, 2))
    w1 = sv.eqnsat_bruteforce(e).witness
    w2 = sv.eqnsat_bruteforce(e).witness
    assert w1 == w2 == {0: 0, 1: 0}


def test_eqnsat_budget(s4):
    e = ex.iterated_commutator_expr([ex.single_var(s4, i, 6) for i in range(6)])
    with pytest.raises(BudgetExceeded):
        sv.eqnsat_bruteforce(e, 1000)


def test_eqnsat_budget_huge_variable_count(s4):
    # hundreds of thousands of variables: the budget check must not try to
    # format |G|^vars as a decimal integer
    n = 300_000
    toks = np.array([ex.var_token(i) for i in range(n)], dtype=np.int32)
    e = ex.Expression(s4, toks, n)
    with pytest.raises(BudgetExceeded):
        sv.eqnsat_bruteforce(e)
    with pytest.raises(BudgetExceeded):
        sv.eqnid_bruteforce(e)
    with pytest.raises(BudgetExceeded):
        ex.image_exact(e)


# -- eqnid -------------------------------------------------------------------------


def test_eqnid_commutator_abelian():
    G = catalog.load("c6")
    e = ex.commutator_expr(ex.single_var(G, 0, 2), ex.single_var(G, 1, 2))
    assert sv.eqnid_bruteforce(e).is_identity


def test_eqnid_commutator_s3(s3):
    e = ex.commutator_expr(ex.single_var(s3, 0, 2), ex.single_var(s3, 1, 2))
    res = sv.eqnid_bruteforce(e)
    assert not res.is_identity
    cx = res.counterexample
    assert s3.comm(cx[0], cx[1]) != 0


def test_eqnid_empty_expression(s4):
    assert sv.eqnid_bruteforce(tok_expr(s4, [], 1)).is_identity


# -- coloring -----------------------------------------------------------------------


def naive_colorable(graph: GraphInstance) -> bool:
    for assign in product(range(graph.colors), repeat=graph.vertex_count):
        if all(assign[u] != assign[v] for u, v in graph.edges):
            return True
    return False


def test_color_triangle():
    g = GraphInstance(3, ((0, 1), (1, 2), (0, 2)), 3)
    res = sv.color_bruteforce(g)
    assert res.colorable
    assert all(res.coloring[u] != res.coloring[v] for u, v in g.edges)


def test_color_k4():
    g = GraphInstance(4, tuple((i, j) for i in range(4) for j in range(i + 1, 4)), 3)
    assert not sv.color_bruteforce(g).colorable
    g4 = GraphInstance(4, g.edges, 4)
    assert sv.color_bruteforce(g4).colorable


def test_color_matches_naive_random():
    rng = np.random.default_rng(1)
    for _ in range(15):
        n = int(rng.integers(2, 6))
        edges = tuple(
            (i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.5
        )
        g = GraphInstance(n, edges, 3)
        assert sv.color_bruteforce(g).colorable == naive_colorable(g)


def test_color_budget():
    g = GraphInstance(20, ((0, 1),), 3)
    with pytest.raises(BudgetExceeded):
        sv.color_bruteforce(g, 1000)


# -- check_function -------------------------------------------------------------------


def test_check_function_and(s4):
    res = gp.build_and_program(gp.fitting_chain(s4), 3)
    table = np.zeros(8, dtype=bool)
    table[-1] = True
    assert sv.check_function(res.program, table, {res.target})


def test_check_function_wrong_table(s4):
    res = gp.build_and_program(gp.fitting_chain(s4), 2)
    or_table = np.array([False, True, True, True])
    assert not sv.check_function(res.program, or_table, {res.target})


def test_check_function_constant(s4):
    P = gp.GProgram(s4, [0], [5], [5], 1)
    assert sv.check_function(P, np.array([True, True]), {5})
    assert sv.check_function(P, np.array([False, False]), {0})


def test_budget_type_validation():
    with pytest.raises(InputError):
        sv.SolveBudget(0)
