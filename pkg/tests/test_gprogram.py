"""G-program evaluation, chain derivation, and AND-construction tests."""

from __future__ import annotations

import math

import numpy as np
import pytest

from groupeqn import catalog
from groupeqn import gprogram as gp
from groupeqn import group as gc
from groupeqn.errors import BudgetExceeded, InputError


def rand_program(G, rng, n=5, max_len=12):
    ln = int(rng.integers(1, max_len))
    return gp.GProgram(
        G, rng.integers(0, n, ln), rng.integers(0, G.order, ln), rng.integers(0, G.order, ln), n
    )


def naive_eval(P, bits):
    acc = 0
    for j in range(len(P)):
        c = int(P.b[j]) if bits[int(P.bits[j])] else int(P.a[j])
        acc = int(P.group.mul[acc, c])
    return acc


# -- evaluation ------------------------------------------------------------------


def test_empty_program_is_identity(s4):
    P = gp.GProgram(s4, [], [], [], 3)
    assert gp.eval_program(P, [0, 1, 1]) == 0


def test_single_instruction(s4):
    P = gp.GProgram(s4, [0], [0], [7], 1)
    assert gp.eval_program(P, [1]) == 7
    assert gp.eval_program(P, [0]) == 0


def test_eval_matches_naive_fold(s4):
    rng = np.random.default_rng(0)
    for _ in range(20):
        P = rand_program(s4, rng)
        for trial in range(8):
            bits = [int(b) for b in rng.integers(0, 2, 5)]
            assert gp.eval_program(P, bits) == naive_eval(P, bits)


def test_eval_all_matches_scalar(s4):
    rng = np.random.default_rng(1)
    P = rand_program(s4, rng, n=4)
    vals = P.eval_all()
    for num in range(16):
        bits = [(num >> (3 - j)) & 1 for j in range(4)]
        assert vals[num] == gp.eval_program(P, bits)


def test_eval_length_mismatch(s4):
    P = gp.GProgram(s4, [0], [0], [7], 2)
    with pytest.raises(InputError):
        gp.eval_program(P, [1])


# -- inversion / commutators --------------------------------------------------------


def test_invert_empty(s4):
    P = gp.GProgram(s4, [], [], [], 1)
    assert len(gp.invert_program(P)) == 0


def test_double_inversion(s4):
    rng = np.random.default_rng(2)
    P = rand_program(s4, rng)
    PP = gp.invert_program(gp.invert_program(P))
    assert np.array_equal(PP.bits, P.bits)
    assert np.array_equal(PP.a, P.a)
    assert np.array_equal(PP.b, P.b)


def test_inversion_law_exhaustive(s4):
    rng = np.random.default_rng(3)
    for _ in range(5):
        P = rand_program(s4, rng, n=6)
        Pi = gp.invert_program(P)
        for num in range(64):
            bits = [(num >> (5 - j)) & 1 for j in range(6)]
            assert gp.eval_program(Pi, bits) == int(s4.inv[gp.eval_program(P, bits)])


def test_commutator_single_argument(s4):
    rng = np.random.default_rng(4)
    P = rand_program(s4, rng)
    C = gp.commutator_program([P])
    assert np.array_equal(C.bits, P.bits)


def test_commutator_of_commuting_constants():
    G = catalog.load("c6")
    P = gp.GProgram(G, [0], [2], [3], 1)
    Q = gp.GProgram(G, [0], [1], [5], 1)
    C = gp.commutator_program([P, Q])
    for bit in (0, 1):
        assert gp.eval_program(C, [bit]) == 0


def test_commutator_law_exhaustive(s4):
    rng = np.random.default_rng(5)
    for _ in range(5):
        P, Q, R = (rand_program(s4, rng, n=4, max_len=6) for _ in range(3))
        C = gp.commutator_program([P, Q, R])
        assert len(C) == 2 * (2 * len(P) + 2 * len(Q)) + 2 * len(R)
        for num in range(16):
            bits = [(num >> (3 - j)) & 1 for j in range(4)]
            v = [gp.eval_program(x, bits) for x in (P, Q, R)]
            expect = s4.comm(s4.comm(v[0], v[1]), v[2])
            assert gp.eval_program(C, bits) == expect


# -- chains ------------------------------------------------------------------------


def test_fitting_chain_s4(s4):
    chain = gp.fitting_chain(s4)
    assert chain.c == 2
    assert chain.big_c == 1
    assert chain.d_const == pytest.approx(2.0)
    assert [len(s) for s in chain.subgroups] == [1, 4, 12, 24]


def test_chain_g72_worked_example(g72):
    # series 1 < C3xC3 < G' < G with indices (inf, inf, 1): c=1, C=2, D=1/2
    derived = gc.derived_series(g72)[1]
    resid = gc.gamma_infinity(derived)
    chain = gp.derive_chain(
        g72,
        [gc.trivial_subgroup(g72), resid, derived, gc.full_subgroup(g72)],
        [gp.INF, gp.INF, 1],
    )
    assert chain.c == 1
    assert chain.big_c == 2
    assert chain.d_const == pytest.approx(0.5)


def test_chain_length_two():
    # Fitting length 2: single infinite level above the bottom
    G = catalog.load("s3")
    chain = gp.fitting_chain(G)
    assert chain.c == 1
    assert chain.big_c == 1


def test_derive_chain_rejects_bad_relation(s4):
    v4 = gc.lower_fitting_series(s4)[2]
    with pytest.raises(InputError):
        gp.derive_chain(
            s4,
            [gc.trivial_subgroup(s4), v4, gc.full_subgroup(s4)],
            [gp.INF, 2],  # gamma_2(S4) = A4 != V4
        )


def test_derive_chain_rejects_non_ascending(s4):
    a4 = gc.lower_fitting_series(s4)[1]
    with pytest.raises(InputError):
        gp.derive_chain(s4, [gc.trivial_subgroup(s4), a4, a4], [gp.INF, gp.INF])


# -- AND construction ----------------------------------------------------------------


def test_and_program_n1(s4):
    res = gp.build_and_program(gp.fitting_chain(s4), 1)
    assert len(res.program) == 1
    assert gp.eval_program(res.program, [1]) == res.target != 0
    assert gp.eval_program(res.program, [0]) == 0


@pytest.mark.parametrize("n", range(2, 10))
def test_and_program_exhaustive_s4(s4, n):
    res = gp.build_and_program(gp.fitting_chain(s4), n)
    vals = res.program.eval_all()
    expect = np.zeros(2 ** n, dtype=np.int64)
    expect[-1] = res.target
    assert res.target != 0
    assert np.array_equal(vals, expect)


def test_and_program_witness_tree_consistent(s4):
    res = gp.build_and_program(gp.fitting_chain(s4), 5)
    tree = res.tree
    assert tree.nodes[()] == res.target
    for word, elem in tree.nodes.items():
        kids = tree.children(word)
        if not kids:
            continue
        acc = tree.nodes[kids[0]]
        for kid in kids[1:]:
            acc = s4.comm(acc, tree.nodes[kid])
        assert acc == elem


def test_and_program_72_chain(g72):
    derived = gc.derived_series(g72)[1]
    resid = gc.gamma_infinity(derived)
    chain = gp.derive_chain(
        g72,
        [gc.trivial_subgroup(g72), resid, derived, gc.full_subgroup(g72)],
        [gp.INF, gp.INF, 1],
    )
    for n in (2, 5, 7):
        res = gp.build_and_program(chain, n)
        vals = res.program.eval_all()
        expect = np.zeros(2 ** n, dtype=np.int64)
        expect[-1] = res.target
        assert np.array_equal(vals, expect)


def test_and_lengths_bounded(s4):
    chain = gp.fitting_chain(s4)
    lengths = {n: len(gp.build_and_program(chain, n).program) for n in range(1, 13)}
    ratios = [lengths[n] / 2 ** (2 * math.sqrt(n)) for n in lengths]
    fitted = max(ratios)
    for n, l in lengths.items():
        assert l <= fitted * 2 ** (2 * math.sqrt(n)) + 1e-9


def test_nilpotent_chain_rejected():
    # nilpotent group: the only Fitting chain is [1, G] with no infinite
    # level above the bottom, so there is no scaling family to build
    G = catalog.load("d4")
    with pytest.raises(InputError):
        gp.derive_chain(G, [gc.trivial_subgroup(G), gc.full_subgroup(G)], [gp.INF])


# -- progsat ---------------------------------------------------------------------------


def test_progsat_empty(s4):
    P = gp.GProgram(s4, [], [], [], 2)
    sat, bits = gp.progsat_bruteforce(P)
    assert sat and bits == [0, 0]


def test_progsat_constant_nonidentity(s4):
    P = gp.GProgram(s4, [0], [5], [5], 1)
    sat, bits = gp.progsat_bruteforce(P)
    assert not sat and bits is None


def test_progsat_and_program(s4):
    res = gp.build_and_program(gp.fitting_chain(s4), 4)
    # compose with target^-1: satisfiable only by all-ones
    P = res.program
    withinv = gp.GProgram(
        s4,
        np.concatenate([P.bits, [0]]),
        np.concatenate([P.a, [s4.inv[res.target]]]),
        np.concatenate([P.b, [s4.inv[res.target]]]),
        4,
    )
    sat, bits = gp.progsat_bruteforce(withinv)
    assert sat and bits == [1, 1, 1, 1]


def test_progsat_budget(s4):
    P = gp.GProgram(s4, [0], [0], [5], 30)
    with pytest.raises(BudgetExceeded):
        gp.progsat_bruteforce(P, budget_bits=24)


# -- file format --------------------------------------------------------------------------


def test_program_file_roundtrip(tmp_path, s4):
    P = gp.GProgram(s4, [0, 2, 1], [3, 0, 5], [7, 2, 0], 3)
    path = tmp_path / "and.prog"
    gp.save_program(P, path)
    text = path.read_text()
    assert text.splitlines()[0] == "group s4 inputs 3"
    assert text.splitlines()[1] == "b0 3 7"
    P2 = gp.load_program(path, s4)
    assert np.array_equal(P.bits, P2.bits)
    assert np.array_equal(P.a, P2.a)
    assert np.array_equal(P.b, P2.b)
