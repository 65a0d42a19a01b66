"""Finite-group kernel: dense-table groups, subgroup algebra, commutator
calculus, and the nilpotency / Fitting-series machinery.

Groups are index-based: elements are 0..order-1, index 0 is the identity,
and all arithmetic goes through a dense multiplication table.  Everything
here is exhaustive by design; the default size cap keeps tables small
enough that O(order^2) set operations stay cheap.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import GroupTooLarge, InputError, NotSolvable
from .perm import Permutation, format_generator_file, parse_generator_file

DEFAULT_CAP = 5000


class Group:
    """Finite group as a dense multiplication table with inverse table.

    ``mul[a, b]`` is the index of the product a*b, ``inv[a]`` the inverse
    of a, and the identity is always index 0.  Instances are immutable
    after construction and safe to share across threads.
    """

    def __init__(
        self,
        mul: np.ndarray,
        name: str = "G",
        labels: list[Permutation] | None = None,
    ) -> None:
        mul = np.ascontiguousarray(np.asarray(mul, dtype=np.int32))
        n = mul.shape[0]
        if mul.shape != (n, n):
            raise InputError("multiplication table must be square")
        if n == 0:
            raise InputError("empty multiplication table")
        if mul.min() < 0 or mul.max() >= n:
            raise InputError("multiplication table entry out of range")
        if not (np.array_equal(mul[0], np.arange(n)) and np.array_equal(mul[:, 0], np.arange(n))):
            raise InputError("element 0 must be the identity")
        self.order = n
        self.mul = mul
        self.mul.setflags(write=False)
        inv = np.full(n, -1, dtype=np.int32)
        rows, cols = np.nonzero(mul == 0)
        inv[rows] = cols
        if (inv < 0).any():
            raise InputError("some element has no inverse")
        self.inv = inv
        self.inv.setflags(write=False)
        self.id = 0
        self.name = name
        self.labels = labels
        self._cache: dict = {}

    # -- element arithmetic -------------------------------------------------

    def mul2(self, a: int, b: int) -> int:
        return int(self.mul[a, b])

    def conj(self, x: int, y: int) -> int:
        """x^y = y^-1 x y."""
        m = self.mul
        return int(m[m[self.inv[y], x], y])

    def comm(self, x: int, y: int) -> int:
        """[x, y] = x^-1 y^-1 x y."""
        m = self.mul
        return int(m[m[m[self.inv[x], self.inv[y]], x], y])

    def power(self, g: int, k: int) -> int:
        if k < 0:
            g, k = int(self.inv[g]), -k
        acc, base = 0, g
        while k:
            if k & 1:
                acc = int(self.mul[acc, base])
            base = int(self.mul[base, base])
            k >>= 1
        return acc

    def element_order(self, g: int) -> int:
        k, x = 1, g
        while x != 0:
            x = int(self.mul[x, g])
            k += 1
        return k

    def elements(self) -> range:
        return range(self.order)

    def label(self, g: int) -> str:
        if self.labels is not None:
            return str(self.labels[g])
        return str(g)

    def is_abelian(self) -> bool:
        if "abelian" not in self._cache:
            self._cache["abelian"] = bool(np.array_equal(self.mul, self.mul.T))
        return self._cache["abelian"]

    def check_associativity(self, samples: int | None = None, seed: int = 0) -> bool:
        """Spot-check associativity; exhaustive for order <= 512."""
        n = self.order
        m = self.mul
        if samples is None and n <= 512:
            for a in range(n):
                if not np.array_equal(m[m[a]], m[m[a][:, None], np.arange(n)[None, :]]):
                    return False
            return True
        rng = np.random.default_rng(seed)
        k = samples or 10000
        a, b, c = (rng.integers(0, n, k) for _ in range(3))
        return bool(np.array_equal(m[m[a, b], c], m[a, m[b, c]]))

    def __repr__(self) -> str:
        return f"Group({self.name}, order={self.order})"


# -- element sets and subgroups ---------------------------------------------


@dataclass(frozen=True)
class ElementSet:
    """Plain subset of element indices; need not be closed under anything."""

    group: Group
    members: frozenset[int]

    def indices(self) -> np.ndarray:
        return np.fromiter(sorted(self.members), dtype=np.int64, count=len(self.members))

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, g: int) -> bool:
        return int(g) in self.members


@dataclass(frozen=True)
class Subgroup:
    """Subgroup given by its member set; validated on construction."""

    group: Group
    members: frozenset[int]
    _trusted: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self._trusted:
            return
        if 0 not in self.members:
            raise InputError("subgroup must contain the identity")
        idx = self.indices()
        prods = self.group.mul[np.ix_(idx, idx)]
        if not np.isin(prods, idx).all():
            raise InputError("set is not closed under multiplication")

    def indices(self) -> np.ndarray:
        return np.fromiter(sorted(self.members), dtype=np.int64, count=len(self.members))

    def as_set(self) -> ElementSet:
        return ElementSet(self.group, self.members)

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, g: int) -> bool:
        return int(g) in self.members

    def is_trivial(self) -> bool:
        return len(self.members) == 1

    def __repr__(self) -> str:
        return f"Subgroup(order={len(self.members)} of {self.group.name})"


def _subgroup(group: Group, members: Iterable[int]) -> Subgroup:
    """Trusted constructor for sets already known to be subgroups."""
    return Subgroup(group, frozenset(int(x) for x in members), _trusted=True)


def trivial_subgroup(G: Group) -> Subgroup:
    return _subgroup(G, (0,))


def full_subgroup(G: Group) -> Subgroup:
    return _subgroup(G, range(G.order))


SetLike = Union[ElementSet, Subgroup]


def _as_indices(X: SetLike) -> np.ndarray:
    return X.indices()


# -- construction -----------------------------------------------------------


def close_generators(
    gens: Sequence[Permutation],
    cap: int = DEFAULT_CAP,
    name: str = "G",
) -> Group:
    """Close permutation generators into a Group by deterministic BFS.

    Element 0 is the identity; new elements are numbered in BFS discovery
    order (queue order, generators applied on the right in input order).
    """
    if not gens:
        raise InputError("need at least one generator")
    degree = gens[0].degree
    if any(g.degree != degree for g in gens):
        raise InputError("generators must share a common degree")
    ident = tuple(range(degree))
    index: dict[tuple[int, ...], int] = {ident: 0}
    elems: list[tuple[int, ...]] = [ident]
    queue = [ident]
    gen_images = [g.images for g in gens]
    while queue:
        nxt: list[tuple[int, ...]] = []
        for e in queue:
            for gi in gen_images:
                f = tuple(gi[x] for x in e)
                if f not in index:
                    if len(elems) >= cap:
                        raise GroupTooLarge(f"group too large: closure exceeds cap {cap}")
                    index[f] = len(elems)
                    elems.append(f)
                    nxt.append(f)
        queue = nxt
    n = len(elems)
    P = np.array(elems, dtype=np.int32)
    mul = np.empty((n, n), dtype=np.int32)
    lookup = {e: i for e, i in index.items()}
    for i in range(n):
        # (p_i * p_j)(x) = p_j(p_i(x))
        composed = P[:, P[i]]
        mul[i] = [lookup[tuple(row)] for row in composed.tolist()]
    labels = [Permutation(e) for e in elems]
    return Group(mul, name=name, labels=labels)


def load_group_text(text: str, name: str = "G", cap: int = DEFAULT_CAP) -> Group:
    return close_generators(parse_generator_file(text), cap=cap, name=name)


def load_group_file(path: str | Path, cap: int = DEFAULT_CAP) -> Group:
    path = Path(path)
    return load_group_text(path.read_text(encoding="utf-8"), name=path.stem, cap=cap)


def save_generator_file(G: Group, gens: Sequence[Permutation], path: str | Path) -> None:
    Path(path).write_text(format_generator_file(list(gens)), encoding="utf-8")


def group_to_bytes(G: Group) -> bytes:
    """Canonical serialization: order then row-major mul table, uint16 LE."""
    if G.order >= 1 << 16:
        raise InputError("group too large for 16-bit serialization")
    out = struct.pack("<H", G.order)
    return out + G.mul.astype("<u2").tobytes()


def group_from_bytes(data: bytes, name: str = "G") -> Group:
    (n,) = struct.unpack_from("<H", data, 0)
    body = np.frombuffer(data, dtype="<u2", offset=2, count=n * n)
    return Group(body.reshape(n, n).astype(np.int32), name=name)


# -- basic set algebra -------------------------------------------------------


def conjugacy_class(G: Group, g: int) -> ElementSet:
    """{g^x : x in G}."""
    cache = G._cache.setdefault("class_of", {})
    if g not in cache:
        m = G.mul
        xs = np.arange(G.order)
        vals = m[m[G.inv[xs], g], xs]
        cls = frozenset(np.unique(vals).tolist())
        for h in cls:
            cache[h] = cls
    return ElementSet(G, cache[g])


def conjugacy_classes(G: Group) -> list[ElementSet]:
    seen: set[int] = set()
    out = []
    for g in range(G.order):
        if g in seen:
            continue
        cls = conjugacy_class(G, g)
        seen |= cls.members
        out.append(cls)
    return out


def set_product(X: SetLike, Y: SetLike) -> ElementSet:
    xs, ys = _as_indices(X), _as_indices(Y)
    vals = X.group.mul[np.ix_(xs, ys)]
    return ElementSet(X.group, frozenset(np.unique(vals).tolist()))


def set_commutator(X: SetLike, Y: SetLike) -> ElementSet:
    """[X, Y]_Set = {[x, y] : x in X, y in Y} (elementwise, not closed)."""
    G = X.group
    if Y.group is not G:
        raise InputError("set commutator needs a common ambient group")
    xs, ys = _as_indices(X), _as_indices(Y)
    m = G.mul
    heads = m[np.ix_(G.inv[xs], G.inv[ys])]
    tails = m[np.ix_(xs, ys)]
    vals = m[heads.ravel(), tails.ravel()]
    return ElementSet(G, frozenset(np.unique(vals).tolist()))


def iterated_set_commutator(sets: Sequence[SetLike]) -> ElementSet:
    """[X_1, ..., X_k]_Set, left-nested, as a plain set."""
    if not sets:
        raise InputError("need at least one set")
    acc = ElementSet(sets[0].group, frozenset(int(x) for x in _as_indices(sets[0]).tolist()))
    for Y in sets[1:]:
        acc = set_commutator(acc, Y)
    return acc


def subgroup_generated(X: SetLike | Iterable[int], group: Group | None = None) -> Subgroup:
    """Smallest subgroup containing X, by closure iteration."""
    if isinstance(X, (ElementSet, Subgroup)):
        G = X.group
        idx = _as_indices(X)
    else:
        if group is None:
            raise InputError("subgroup_generated needs the ambient group for raw indices")
        G = group
        idx = np.asarray(sorted({int(x) for x in X}), dtype=np.int64)
    cur = np.unique(np.concatenate([idx, [0]])).astype(np.int64)
    while True:
        prods = np.unique(G.mul[np.ix_(cur, cur)]).astype(np.int64)
        if prods.size == cur.size:
            break
        cur = prods
    return _subgroup(G, cur.tolist())


def normal_closure(G: Group, g: int) -> Subgroup:
    """<g^G>, the smallest normal subgroup containing g."""
    cache = G._cache.setdefault("normal_closure", {})
    if g not in cache:
        cache[g] = subgroup_generated(conjugacy_class(G, g))
    return cache[g]


def is_conjugation_closed(X: SetLike) -> bool:
    G = X.group
    xs = _as_indices(X)
    m = G.mul
    all_g = np.arange(G.order)
    heads = m[np.ix_(G.inv, xs)]  # heads[g, j] = g^-1 * x_j
    vals = m[heads, all_g[:, None]]  # vals[g, j] = x_j ^ g
    return bool(np.isin(vals, xs).all())


def is_normal(S: SetLike) -> bool:
    return is_conjugation_closed(S)


def iterated_commutator_subgroup(X: Subgroup, Ys: Sequence[SetLike]) -> Subgroup:
    """[<X>, <Y_1>, ..., <Y_k>] computed through set commutators.

    Each Y must be closed under conjugation (so the set-commutator identity
    applies); the running result is re-closed into a subgroup after every
    step, which keeps it conjugation-closed as well.
    """
    G = X.group
    if not is_normal(X):
        raise InputError("X must be a normal subgroup")
    for Y in Ys:
        if not is_conjugation_closed(Y):
            raise InputError("each Y must be closed under G-conjugation")
    acc: Subgroup = X
    for Y in Ys:
        acc = subgroup_generated(set_commutator(acc, Y))
    return acc


# -- commutator series -------------------------------------------------------


GroupOrSub = Union[Group, Subgroup]


def _as_subgroup(X: GroupOrSub) -> Subgroup:
    if isinstance(X, Group):
        return full_subgroup(X)
    return X


def lower_central_series(X: GroupOrSub) -> list[Subgroup]:
    """[X, [X,X], [[X,X],X], ...] until stabilization; the last entry is
    the stable term (the nilpotent residual).

    For a Subgroup the series is computed inside the ambient group (the
    subgroup acting as a group in its own right).
    """
    H = _as_subgroup(X)
    series = [H]
    while True:
        nxt = subgroup_generated(set_commutator(series[-1], H))
        if nxt.members == series[-1].members:
            break
        series.append(nxt)
    return series


def gamma_infinity(X: GroupOrSub) -> Subgroup:
    """Nilpotent residual: the stable term of the lower central series."""
    return lower_central_series(X)[-1]


def is_nilpotent(X: GroupOrSub) -> bool:
    return gamma_infinity(X).is_trivial()


def derived_series(X: GroupOrSub) -> list[Subgroup]:
    H = _as_subgroup(X)
    series = [H]
    while True:
        nxt = subgroup_generated(set_commutator(series[-1], series[-1]))
        if nxt.members == series[-1].members:
            break
        series.append(nxt)
    return series


def is_solvable(X: GroupOrSub) -> bool:
    return derived_series(X)[-1].is_trivial()


# -- Fitting machinery --------------------------------------------------------


def fitting_subgroup(G: Group) -> Subgroup:
    """Fit(G) = {g : <g^G> is nilpotent}, closed into a subgroup.

    The element characterization and the union-of-nilpotent-normal-subgroups
    characterization agree; tests cross-check the latter.
    """
    if "fitting" not in G._cache:
        members = [g for g in range(G.order) if is_nilpotent(normal_closure(G, g))]
        sub = subgroup_generated(members, group=G)
        if sub.members != frozenset(members):
            # Cannot happen for a correct multiplication table.
            raise NotSolvable("Fitting member set failed to be a subgroup")
        G._cache["fitting"] = sub
    return G._cache["fitting"]


def lower_fitting_series(G: Group) -> list[Subgroup]:
    """G = L_0 > L_1 > ... > L_d = 1 with L_{i+1} the nilpotent residual."""
    series = [full_subgroup(G)]
    while not series[-1].is_trivial():
        nxt = gamma_infinity(series[-1])
        if nxt.members == series[-1].members:
            raise NotSolvable(f"{G.name} is not solvable")
        series.append(nxt)
    return series


def upper_fitting_series(G: Group) -> list[Subgroup]:
    """1 = U_0 < U_1 < ... < U_d = G with U_{i+1}/U_i = Fit(G/U_i)."""
    series = [trivial_subgroup(G)]
    while len(series[-1]) < G.order:
        q = quotient_group(G, series[-1])
        fit_q = fitting_subgroup(q.group)
        if fit_q.is_trivial():
            raise NotSolvable(f"{G.name} is not solvable")
        members = [g for g in range(G.order) if int(q.project[g]) in fit_q.members]
        series.append(_subgroup(G, members))
    return series


def fitting_length(X: GroupOrSub) -> int:
    """Number of lower-Fitting steps down to the trivial subgroup."""
    H = _as_subgroup(X)
    d = 0
    while not H.is_trivial():
        nxt = gamma_infinity(H)
        if nxt.members == H.members:
            raise NotSolvable("not solvable: lower Fitting series stalls")
        H = nxt
        d += 1
    return d


# -- stabilization constant and eta -------------------------------------------


def stabilization_constant(G: Group, max_pairs: int | None = None) -> int:
    """Least M with [X, M Y] = [X, M+1 Y] over single-element normal closures.

    X ranges over normal closures <g^G> and Y over conjugacy classes h^G;
    by the set-commutator identity the iterated subgroups agree with those
    for Y = <h^G>, so classes suffice.  Falls back to |G| if the pair
    budget is exhausted.
    """
    if "stab_M" in G._cache:
        return G._cache["stab_M"]
    closures: dict[frozenset, Subgroup] = {}
    classes: dict[frozenset, ElementSet] = {}
    for cls in conjugacy_classes(G):
        classes.setdefault(cls.members, cls)
        nc = normal_closure(G, next(iter(cls.members)))
        closures.setdefault(nc.members, nc)
    pairs = [(X, Y) for X in closures.values() for Y in classes.values()]
    if max_pairs is not None and len(pairs) > max_pairs:
        # fallback result is not cached: a later unbudgeted call computes exactly
        return G.order
    M = 1
    for X, Y in pairs:
        prev = subgroup_generated(set_commutator(X, Y))
        steps = 1
        while True:
            nxt = subgroup_generated(set_commutator(prev, Y))
            if nxt.members == prev.members:
                break
            prev = nxt
            steps += 1
        M = max(M, steps)
    G._cache["stab_M"] = M
    return M


def eta(G: Group, H: Subgroup, g: int) -> Subgroup:
    """Stable iterated commutator [H, g^G, g^G, ...] (fixpoint, M-free)."""
    if H.group is not G:
        raise InputError("H must live in G")
    if not is_normal(H):
        raise InputError("eta requires H normal in G")
    cls = conjugacy_class(G, g)
    cur = H
    while True:
        nxt = subgroup_generated(set_commutator(cur, cls))
        if nxt.members == cur.members:
            return nxt
        cur = nxt


# -- quotients, powers, subgroup reindexing -----------------------------------


@dataclass(frozen=True)
class Quotient:
    """Quotient group together with the projection and a section.

    ``project[g]`` is the coset index of g; ``section[c]`` is the least
    element index in coset c (so emitted expressions are reproducible).
    """

    group: Group
    project: np.ndarray
    section: np.ndarray


def quotient_group(G: Group, N: Subgroup) -> Quotient:
    if N.group is not G:
        raise InputError("N must be a subgroup of G")
    if not is_normal(N):
        raise InputError("quotient requires a normal subgroup")
    ns = N.indices()
    cosets = G.mul[:, ns]  # row g = g*N
    reps = cosets.min(axis=1)
    uniq_reps = np.unique(reps)  # sorted, so identity coset (rep 0) is first
    rep_to_idx = {int(r): i for i, r in enumerate(uniq_reps)}
    project = np.array([rep_to_idx[int(r)] for r in reps], dtype=np.int32)
    section = uniq_reps.astype(np.int32)
    qmul = project[G.mul[np.ix_(section, section)]]
    qname = f"{G.name}/N{len(N)}"
    return Quotient(Group(qmul, name=qname), project, section)


def power_subgroup(G: Group, k: int) -> Subgroup:
    """<{g^k : g in G}>."""
    if k < 1:
        raise InputError("power exponent must be >= 1")
    powers = {G.power(g, k) for g in range(G.order)}
    return subgroup_generated(powers, group=G)


def subgroup_group(S: Subgroup, name: str | None = None) -> tuple[Group, np.ndarray]:
    """Reindex a subgroup as a standalone Group.

    Returns the new group and the embedding array mapping new indices to
    ambient indices (embedding[0] = identity).
    """
    G = S.group
    idx = S.indices()
    # Identity first, the rest in ambient order.
    emb = np.concatenate([[0], idx[idx != 0]]).astype(np.int32)
    pos = {int(g): i for i, g in enumerate(emb)}
    sub_mul = np.array(
        [[pos[int(G.mul[a, b])] for b in emb] for a in emb], dtype=np.int32
    )
    labels = [G.labels[int(g)] for g in emb] if G.labels is not None else None
    gname = name or f"{G.name}_sub{len(S)}"
    return Group(sub_mul, name=gname, labels=labels), emb


# -- miscellaneous subgroup utilities -----------------------------------------


def center(G: Group) -> Subgroup:
    mask = (G.mul == G.mul.T).all(axis=1)
    return _subgroup(G, np.nonzero(mask)[0].tolist())


def centralizer(G: Group, X: SetLike) -> Subgroup:
    xs = _as_indices(X)
    left = G.mul[:, xs]
    right = G.mul[xs, :].T
    mask = (left == right).all(axis=1)
    return _subgroup(G, np.nonzero(mask)[0].tolist())


def normal_subgroups(G: Group) -> list[Subgroup]:
    """All normal subgroups, as joins of single-element normal closures."""
    base = {normal_closure(G, g).members for g in range(G.order)}
    known = set(base)
    known.add(frozenset({0}))
    work = list(known)
    while work:
        cur = work.pop()
        for other in list(known):
            join = subgroup_generated(cur | other, group=G).members
            if join not in known:
                known.add(join)
                work.append(join)
    return sorted((_subgroup(G, m) for m in known), key=lambda s: (len(s), sorted(s.members)))
