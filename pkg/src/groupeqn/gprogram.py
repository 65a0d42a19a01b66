"""G-programs: evaluation, inversion, commutators, and the divide-and-
conquer AND construction over a commutator chain."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import BudgetExceeded, InputError, VerificationError
from .group import (
    ElementSet,
    Group,
    Subgroup,
    full_subgroup,
    gamma_infinity,
    is_normal,
    lower_central_series,
    set_commutator,
    subgroup_generated,
)

INF = math.inf


@dataclass(frozen=True)
class GProgram:
    """Instruction sequence <bit, a, b>: contributes a on 0, b on 1."""

    group: Group
    bits: np.ndarray
    a: np.ndarray
    b: np.ndarray
    input_count: int

    def __post_init__(self) -> None:
        for name in ("bits", "a", "b"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.int64))
        if not (self.bits.size == self.a.size == self.b.size):
            raise InputError("instruction arrays must have equal length")
        if self.bits.size and (self.bits.min() < 0 or self.bits.max() >= self.input_count):
            raise InputError("instruction bit index out of range")

    def __len__(self) -> int:
        return int(self.bits.size)

    def eval_all(self, chunk: int = 1 << 16) -> np.ndarray:
        """Value on every assignment; index read as binary, bit 0 first."""
        n = self.input_count
        total = 2 ** n
        out = np.empty(total, dtype=np.int64)
        shifts = n - 1 - self.bits
        for start in range(0, total, chunk):
            idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
            acc = np.zeros(idx.size, dtype=np.int64)
            mul = self.group.mul
            for j in range(len(self)):
                bitvals = (idx >> int(shifts[j])) & 1
                acc = mul[acc, np.where(bitvals == 1, self.b[j], self.a[j])]
            out[start : start + idx.size] = acc
        return out


def eval_program(P: GProgram, bits: Sequence[int]) -> int:
    """c_1 c_2 ... c_l with c_j picked by the j-th instruction's input bit."""
    bits = list(bits)
    if len(bits) != P.input_count:
        raise InputError(f"expected {P.input_count} bits, got {len(bits)}")
    acc = 0
    mul = P.group.mul
    for j in range(len(P)):
        c = P.b[j] if bits[int(P.bits[j])] else P.a[j]
        acc = int(mul[acc, c])
    return acc


def invert_program(P: GProgram) -> GProgram:
    """Reverse the instructions and invert both constants."""
    inv = P.group.inv
    return GProgram(P.group, P.bits[::-1], inv[P.a[::-1]], inv[P.b[::-1]], P.input_count)


def concat_programs(parts: Sequence[GProgram]) -> GProgram:
    G = parts[0].group
    n = max(p.input_count for p in parts)
    return GProgram(
        G,
        np.concatenate([p.bits for p in parts]),
        np.concatenate([p.a for p in parts]),
        np.concatenate([p.b for p in parts]),
        n,
    )


def commutator_program(parts: Sequence[GProgram]) -> GProgram:
    """[P_1, ..., P_k] by inversion and concatenation."""
    if not parts:
        raise InputError("commutator of zero programs")
    if any(p.group is not parts[0].group for p in parts):
        raise InputError("programs over different groups")
    acc = parts[0]
    for p in parts[1:]:
        acc = concat_programs([invert_program(acc), invert_program(p), acc, p])
    return acc


# -- chains -------------------------------------------------------------------


@dataclass(frozen=True)
class ChainSpec:
    """Strictly ascending normal series H_0 = 1 < ... < H_m = G with
    H_i = gamma_{k_i}(H_{i+1}) (k_i iterated commutations, inf = residual).

    c counts the infinite levels among 1..m-1, C multiplies (k_i + 1) over
    the finite ones, and D = c / C^(1/c) is the exponent constant.
    """

    group: Group
    subgroups: tuple[Subgroup, ...]
    ks: tuple[float, ...]
    c: int
    big_c: int
    d_const: float

    @property
    def levels(self) -> int:
        return len(self.subgroups) - 1

    def arity_for(self, n: int) -> int:
        """The branching parameter K for an n-input program: the ceiling
        of (n/C)^(1/c), clamped to >= 2, >= every finite k_i + 1, and far
        enough for every infinite level's series to stabilize."""
        k = math.ceil((n / self.big_c) ** (1.0 / self.c)) if n > 0 else 2
        k = max(k, 2)
        for i in range(1, self.levels):
            if self.ks[i] != INF:
                k = max(k, int(self.ks[i]) + 1)
            else:
                k = max(k, _stable_depth(self.subgroups[i + 1]))
        k = max(k, _stable_depth(self.subgroups[1]))
        return k

    def level_arity(self, i: int, K: int) -> int:
        return K if self.ks[i] == INF else int(self.ks[i]) + 1


def _stable_depth(H: Subgroup) -> int:
    """Least argument count whose iterated commutator of H reaches the
    stable term; the series list is strictly decreasing, stable term last."""
    return max(len(lower_central_series(H)), 2)


def _gamma_steps(H: Subgroup, steps: int) -> Subgroup:
    acc = H
    for _ in range(steps):
        acc = subgroup_generated(set_commutator(acc, H))
    return acc


def derive_chain(G: Group, series: Sequence[Subgroup], ks: Sequence[float]) -> ChainSpec:
    """Validate a series against its k-indices and package the constants."""
    if len(series) < 2 or len(ks) != len(series) - 1:
        raise InputError("need m+1 subgroups and m indices")
    if len(series[0]) != 1 or len(series[-1]) != G.order:
        raise InputError("series must run from the trivial subgroup to G")
    if ks[0] != INF:
        raise InputError("k_0 must be infinite")
    for lo, hi in zip(series, series[1:]):
        if not lo.members < hi.members:
            raise InputError("series must be strictly ascending")
        if not is_normal(hi):
            raise InputError("series members must be normal in G")
    if not is_normal(series[0]):
        raise InputError("series members must be normal in G")
    m = len(series) - 1
    for i in range(m):
        k = ks[i]
        upper = series[i + 1]
        if k == INF:
            got = gamma_infinity(upper)
        else:
            if k != int(k) or k < 1:
                raise InputError(f"k_{i} must be a positive integer or inf")
            got = _gamma_steps(upper, int(k))
        if got.members != series[i].members:
            raise InputError(f"series relation fails at level {i}: H_{i} != gamma_k(H_{i+1})")
    c = sum(1 for i in range(1, m) if ks[i] == INF)
    if c == 0:
        raise InputError("chain has no infinite level above the bottom; no scaling family")
    big_c = 1
    for i in range(1, m):
        if ks[i] != INF:
            big_c *= int(ks[i]) + 1
    d_const = c / (big_c ** (1.0 / c))
    return ChainSpec(G, tuple(series), tuple(ks), c, big_c, d_const)


def fitting_chain(G: Group) -> ChainSpec:
    """The lower Fitting series as a chain (all indices infinite)."""
    from .group import lower_fitting_series

    series = list(reversed(lower_fitting_series(G)))
    ks = [INF] * (len(series) - 1)
    return derive_chain(G, series, ks)


# -- AND construction ----------------------------------------------------------


@dataclass(frozen=True)
class WitnessTree:
    """Recursive commutator decomposition of the distinguished element.

    ``nodes`` maps index words (root = ()) to elements; a node's children
    are its word extended by 1..arity of its level.
    """

    nodes: dict[tuple[int, ...], int]
    level_arities: tuple[int, ...]
    kappa: dict[tuple[int, ...], int]

    @property
    def depth(self) -> int:
        return len(self.level_arities)

    def children(self, word: tuple[int, ...]) -> list[tuple[int, ...]]:
        if len(word) >= self.depth:
            return []
        arity = self.level_arities[len(word)]
        return [word + (t,) for t in range(1, arity + 1)]


@dataclass(frozen=True)
class AndProgram:
    program: GProgram
    target: int
    tree: WitnessTree


def _witness_set_chain(
    base: ElementSet, arity: int
) -> tuple[ElementSet, list[dict[int, tuple[int, int]]]]:
    """Iterated set commutator with first-found decomposition records.

    Level j's record maps each element of the j-step set to a pair
    (previous-level element, base element) whose commutator it is.
    """
    G = base.group
    cur = base
    records: list[dict[int, tuple[int, int]]] = []
    ys = base.indices()
    m = G.mul
    for _ in range(arity - 1):
        xs = cur.indices()
        heads = m[np.ix_(G.inv[xs], G.inv[ys])]
        tails = m[np.ix_(xs, ys)]
        vals = m[heads.ravel(), tails.ravel()]
        uniq, first = np.unique(vals, return_index=True)
        rec: dict[int, tuple[int, int]] = {}
        for val, flat in zip(uniq.tolist(), first.tolist()):
            rec[val] = (int(xs[flat // ys.size]), int(ys[flat % ys.size]))
        records.append(rec)
        cur = ElementSet(G, frozenset(uniq.tolist()))
    return cur, records


def _decompose(element: int, records: list[dict[int, tuple[int, int]]]) -> list[int]:
    """Unwind records into [a_1, ..., a_arity] with the element as the
    left-nested iterated commutator of the parts."""
    parts = []
    cur = element
    for rec in reversed(records):
        cur, right = rec[cur]
        parts.append(right)
    parts.append(cur)
    return parts[::-1]


def build_and_program(spec: ChainSpec, n: int) -> AndProgram:
    """n-input AND program: evaluates to a fixed g != 1 exactly on all-ones.

    Follows the divide-and-conquer decomposition: level sets A_i are
    iterated set commutators of A_{i+1} with witnesses recorded, the
    distinguished g is the least nontrivial element of A_1, and the
    witness tree is flattened into leaf instructions tied to input bits
    (spare leaves in the ceiling case are frozen to constants).
    """
    if n < 1:
        raise InputError("need at least one input bit")
    G = spec.group
    m = spec.levels
    K = spec.arity_for(n)
    arities = tuple(spec.level_arity(i, K) for i in range(1, m))
    # A_m = G downwards; record decomposition chains per level.
    sets: list[ElementSet] = [full_subgroup(G).as_set()]
    chains: list[list[dict[int, tuple[int, int]]]] = []
    for i in range(m - 1, 0, -1):
        arity = spec.level_arity(i, K)
        nxt, rec = _witness_set_chain(sets[-1], arity)
        if subgroup_generated(nxt).members != spec.subgroups[i].members:
            raise VerificationError(f"<A_{i}> != H_{i} during AND construction")
        sets.append(nxt)
        chains.append(rec)
    a1 = sets[-1]
    nontrivial = sorted(a1.members - {0})
    if not nontrivial:
        raise InputError("no nontrivial witness: A_1 is trivial")
    g = nontrivial[0]
    if n == 1:
        prog = GProgram(G, [0], [0], [g], 1)
        tree = WitnessTree({(): g}, (), {(): 0})
        return AndProgram(prog, g, tree)

    leaves_total = 1
    for a in arities:
        leaves_total *= a
    if leaves_total < n:
        raise VerificationError("leaf budget below input count")

    nodes: dict[tuple[int, ...], int] = {(): g}
    order: list[tuple[int, ...]] = [()]
    for depth, arity in enumerate(arities):
        # nodes at this depth live in A_{1+depth}, built by the chain for level 1+depth
        rec = chains[m - 2 - depth]
        for word in [w for w in order if len(w) == depth]:
            parts = _decompose(nodes[word], rec)
            for t, part in enumerate(parts, start=1):
                child = word + (t,)
                nodes[child] = part
                order.append(child)
    leaves = sorted(w for w in nodes if len(w) == len(arities))
    kappa = {w: i for i, w in enumerate(leaves[:n])}

    def program_for(word: tuple[int, ...]) -> GProgram:
        if len(word) == len(arities):
            gv = nodes[word]
            if word in kappa:
                return GProgram(G, [kappa[word]], [0], [gv], n)
            return GProgram(G, [0], [gv], [gv], n)  # frozen spare leaf
        kids = [program_for(word + (t,)) for t in range(1, arities[len(word)] + 1)]
        return commutator_program(kids)

    prog = program_for(())
    tree = WitnessTree(nodes, arities, kappa)
    return AndProgram(prog, g, tree)


def progsat_bruteforce(P: GProgram, budget_bits: int = 24) -> tuple[bool, list[int] | None]:
    """Exhaustive search for bits with sigma(P) = 1; least witness first."""
    n = P.input_count
    if n > budget_bits:
        raise BudgetExceeded(f"{n} inputs exceed budget of {budget_bits} bits")
    chunk = 1 << 16
    total = 2 ** n
    shifts = n - 1 - P.bits
    mul = P.group.mul
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        acc = np.zeros(idx.size, dtype=np.int64)
        for j in range(len(P)):
            bitvals = (idx >> int(shifts[j])) & 1
            acc = mul[acc, np.where(bitvals == 1, P.b[j], P.a[j])]
        hits = np.nonzero(acc == 0)[0]
        if hits.size:
            ass = int(idx[hits[0]])
            return True, [(ass >> (n - 1 - j)) & 1 for j in range(n)]
    return False, None


# -- file format ----------------------------------------------------------------


def format_program(P: GProgram) -> str:
    lines = [f"group {P.group.name} inputs {P.input_count}"]
    for j in range(len(P)):
        lines.append(f"b{int(P.bits[j])} {int(P.a[j])} {int(P.b[j])}")
    return "\n".join(lines) + "\n"


def parse_program(text: str, G: Group) -> GProgram:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("group "):
        raise InputError("program file must start with 'group <name> inputs <n>'")
    head = lines[0].split()
    if len(head) != 4 or head[2] != "inputs":
        raise InputError(f"bad program header: {lines[0]!r}")
    n = int(head[3])
    bits, a, b = [], [], []
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 3 or not parts[0].startswith("b"):
            raise InputError(f"bad instruction line: {ln!r}")
        bits.append(int(parts[0][1:]))
        a.append(int(parts[1]))
        b.append(int(parts[2]))
    return GProgram(G, bits, a, b, n)


def save_program(P: GProgram, path: str | Path) -> None:
    Path(path).write_text(format_program(P), encoding="utf-8")


def load_program(path: str | Path, G: Group) -> GProgram:
    return parse_program(Path(path).read_text(encoding="utf-8"), G)
