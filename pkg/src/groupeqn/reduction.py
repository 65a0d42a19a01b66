"""The hardness pipeline: the (K, H) certificate search, the graph-coloring
to group-equation compiler, the exact structural decision procedure with
witness reconstruction, and the instance-lifting reductions.

Compiled equations grow like 2^(c*sqrt(m)), so the expression is kept in a
small structural form (shared inducer blocks, commutator nodes) from which
the exact token length, a token-array stream, and chunked evaluation are
all derived without ever materializing the full word unless it fits a
caller-supplied budget.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import product as iproduct
from pathlib import Path
from typing import Iterator, Mapping, Sequence

import numpy as np

from .errors import (
    BudgetExceeded,
    InputError,
    NotSolvable,
    TheoremInapplicable,
    VerificationError,
)
from .expr import (
    Expression,
    build_commutator_fixed_inducer,
    image_exact,
    inv_var_token,
    single_var,
    substitute,
    var_token,
)
from .group import (
    ElementSet,
    Group,
    Quotient,
    Subgroup,
    conjugacy_class,
    conjugacy_classes,
    eta,
    fitting_length,
    fitting_subgroup,
    full_subgroup,
    gamma_infinity,
    is_nilpotent,
    is_normal,
    is_solvable,
    normal_closure,
    power_subgroup,
    quotient_group,
    set_commutator,
    stabilization_constant,
    subgroup_generated,
    subgroup_group,
    trivial_subgroup,
    upper_fitting_series,
)

# -- graphs -------------------------------------------------------------------


@dataclass(frozen=True)
class GraphInstance:
    """Undirected graph with a target color count."""

    vertex_count: int
    edges: tuple[tuple[int, int], ...]
    colors: int

    def __post_init__(self) -> None:
        if self.vertex_count < 0:
            raise InputError("negative vertex count")
        if self.colors < 3:
            raise InputError("coloring instances need at least 3 colors")
        seen = set()
        norm = []
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise InputError(f"self-loop at vertex {u}")
            if not (0 <= u < self.vertex_count and 0 <= v < self.vertex_count):
                raise InputError(f"edge ({u},{v}) out of range")
            e = (min(u, v), max(u, v))
            if e not in seen:
                seen.add(e)
                norm.append(e)
        object.__setattr__(self, "edges", tuple(norm))

    @property
    def edge_count(self) -> int:
        return len(self.edges)


def parse_graph_text(text: str, colors: int = 3) -> GraphInstance:
    """Edge-list format: 'n m' header, then one 'u v' line per edge (0-based)."""
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise InputError("empty graph file")
    head = lines[0].split()
    if len(head) != 2:
        raise InputError(f"expected 'n m' header, got {lines[0]!r}")
    n, m = int(head[0]), int(head[1])
    edges = []
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 2:
            raise InputError(f"bad edge line {ln!r}")
        edges.append((int(parts[0]), int(parts[1])))
    if len(edges) != m:
        raise InputError(f"header promises {m} edges, file has {len(edges)}")
    return GraphInstance(n, tuple(edges), colors)


def parse_dimacs(text: str, colors: int = 3) -> GraphInstance:
    """DIMACS .col format: 'p edge n m' and 'e u v' lines (1-based)."""
    n = None
    edges = []
    for ln in text.splitlines():
        ln = ln.strip()
        if not ln or ln.startswith("c"):
            continue
        parts = ln.split()
        if parts[0] == "p":
            if len(parts) != 4 or parts[1] not in ("edge", "edges", "col"):
                raise InputError(f"bad DIMACS problem line {ln!r}")
            n = int(parts[2])
        elif parts[0] == "e":
            edges.append((int(parts[1]) - 1, int(parts[2]) - 1))
    if n is None:
        raise InputError("DIMACS file has no problem line")
    return GraphInstance(n, tuple(edges), colors)


def load_graph(path: str | Path, colors: int = 3) -> GraphInstance:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".col":
        return parse_dimacs(text, colors)
    return parse_graph_text(text, colors)


# -- certificates ----------------------------------------------------------------


@dataclass(frozen=True)
class KHCertificate:
    """Normal subgroups K <= H < G with the eta-descent properties.

    Property (I): eta_g(K) = K for every g outside H.
    Property (II): FitL(eta_h(K)) < FitL(K) for every h in H.
    All flags are established by exhaustive per-element verification.
    """

    group: Group
    K: Subgroup
    H: Subgroup
    M: int
    fitl_ambient: int
    fitl_k: int
    flags: Mapping[str, bool]

    @property
    def coloring_index(self) -> int:
        return self.group.order // len(self.H)

    @property
    def usable_for_coloring(self) -> bool:
        return all(self.flags.values()) and self.fitl_k == 2 and self.fitl_ambient == 3

    def to_dict(self) -> dict:
        return {
            "group": self.group.name,
            "group_order": self.group.order,
            "K": sorted(self.K.members),
            "H": sorted(self.H.members),
            "M": self.M,
            "fitl_ambient": self.fitl_ambient,
            "fitl_k": self.fitl_k,
            "flags": dict(self.flags),
        }

    def summary(self) -> dict:
        return {
            "group": self.group.name,
            "K_order": len(self.K),
            "H_order": len(self.H),
            "coloring_index": self.coloring_index,
            "M": self.M,
            "fitl_k": self.fitl_k,
            "flags": dict(self.flags),
        }


def _eta_by_class(G: Group, K: Subgroup) -> dict[int, Subgroup]:
    """eta_g(K) for every g, computed once per conjugacy class."""
    out: dict[int, Subgroup] = {}
    for cls in conjugacy_classes(G):
        rep = min(cls.members)
        val = eta(G, K, rep)
        for g in cls.members:
            out[g] = val
    return out


def _certificate_flags(G: Group, K: Subgroup, H: Subgroup, d: int) -> dict[str, bool]:
    """Exhaustive verification of every certificate property, per element."""
    fitl_cache: dict[frozenset, int] = {}

    def fl(S: Subgroup) -> int:
        if S.members not in fitl_cache:
            fitl_cache[S.members] = fitting_length(S)
        return fitl_cache[S.members]

    etas = _eta_by_class(G, K)
    fitl_k = fl(K)
    prop1 = all(etas[g].members == K.members for g in range(G.order) if g not in H.members)
    prop2 = all(fl(etas[h]) <= fitl_k - 1 for h in H.members)
    series = upper_fitting_series(G)
    u_top = series[d - 1] if d >= 1 else trivial_subgroup(G)
    return {
        "h_proper_normal": len(H) < G.order and is_normal(H),
        "k_normal": is_normal(K),
        "k_inside_h": K.members <= H.members,
        "contains_upper_term": u_top.members <= H.members,
        "property_I": prop1,
        "property_II": prop2,
        "index_at_least_3": G.order // len(H) >= 3,
    }


def find_kh(G: Group) -> KHCertificate:
    """Certificate search: descend K = eta_g(...) until the dichotomy holds.

    Follows the constructive proof: start from the nilpotent residual of
    the normal closure of the least element outside U_{d-1}G, descend
    while some eta_g shrinks K without dropping its Fitting length, then
    read H off as the set of elements whose eta drops the length.
    """
    if not is_solvable(G):
        raise NotSolvable(f"{G.name} is not solvable")
    d = fitting_length(G)
    if is_nilpotent(G):
        raise InputError(f"{G.name} is nilpotent: no certificate exists")
    series = upper_fitting_series(G)
    u_top = series[d - 1]
    g1 = next(g for g in range(G.order) if g not in u_top.members)
    K = eta(G, full_subgroup(G), g1)
    residual = gamma_infinity(normal_closure(G, g1))
    if K.members != residual.members:
        raise VerificationError("eta_g1(G) differs from the nilpotent residual of <g1^G>")
    if fitting_length(K) != d - 1:
        raise VerificationError("initial K does not have Fitting length d-1")

    fitl_cache: dict[frozenset, int] = {}

    def fl(S: Subgroup) -> int:
        if S.members not in fitl_cache:
            fitl_cache[S.members] = fitting_length(S)
        return fitl_cache[S.members]

    while True:
        fk = fl(K)
        etas = _eta_by_class(G, K)
        descend = None
        for g in range(G.order):
            E = etas[g]
            if E.members < K.members and fl(E) == fk:
                descend = E
                break
        if descend is None:
            break
        K = descend

    fk = fl(K)
    etas = _eta_by_class(G, K)
    drops = [h for h in range(G.order) if fl(etas[h]) < fk]
    try:
        H = Subgroup(G, frozenset(drops))
    except InputError as exc:
        raise VerificationError(f"drop set failed to be a subgroup: {exc}") from exc
    flags = _certificate_flags(G, K, H, d)
    required = [k for k in flags if k != "index_at_least_3"]
    if not all(flags[k] for k in required):
        bad = [k for k in required if not flags[k]]
        raise VerificationError(f"certificate verification failed: {bad}")
    return KHCertificate(
        group=G,
        K=K,
        H=H,
        M=stabilization_constant(G),
        fitl_ambient=d,
        fitl_k=fk,
        flags=flags,
    )


def save_certificate(cert: KHCertificate, path: str | Path) -> None:
    Path(path).write_text(json.dumps(cert.to_dict(), indent=2) + "\n", encoding="utf-8")


def load_certificate(path: str | Path, G: Group) -> KHCertificate:
    """Load and re-verify a certificate against the given group.

    Every flag is recomputed exhaustively; a tampered or stale file fails.
    """
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if data["group_order"] != G.order:
        raise InputError("certificate group order does not match")
    K = Subgroup(G, frozenset(int(x) for x in data["K"]))
    H = Subgroup(G, frozenset(int(x) for x in data["H"]))
    d = int(data["fitl_ambient"])
    if fitting_length(G) != d:
        raise InputError("certificate ambient Fitting length does not match")
    flags = _certificate_flags(G, K, H, d)
    stored = {k: bool(v) for k, v in data["flags"].items()}
    if flags != stored:
        raise VerificationError(f"certificate flags failed re-verification: {flags} != {stored}")
    fitl_k = fitting_length(K)
    if fitl_k != int(data["fitl_k"]):
        raise VerificationError("certificate K Fitting length mismatch")
    M = stabilization_constant(G)
    if M != int(data["M"]):
        raise VerificationError("certificate stabilization constant mismatch")
    return KHCertificate(G, K, H, M, d, fitl_k, flags)


# -- theorem preprocessing ---------------------------------------------------------


@dataclass(frozen=True)
class LiftStep:
    """One instance-lifting hop recorded by the preprocessing.

    kind 'power': the certificate lives in the subgroup generated by
    2^nu-th powers (embed maps child indices into the parent).
    kind 'quotient_sat'/'quotient_id': the certificate lives in a quotient
    of the parent (by an inducible resp. definable normal subgroup).
    """

    kind: str
    description: str
    parent: Group
    child: Group
    embed: np.ndarray | None = None
    quotient: Quotient | None = None
    kernel: Subgroup | None = None


@dataclass(frozen=True)
class Pipeline:
    """Preprocessing result: lift tracks plus the final certificate(s)."""

    original: Group
    sat_steps: tuple[LiftStep, ...]
    id_steps: tuple[LiftStep, ...]
    certificate_sat: KHCertificate
    certificate_id: KHCertificate

    @property
    def certificate(self) -> KHCertificate:
        return self.certificate_sat

    def summary(self) -> dict:
        out = {
            "group": self.original.name,
            "sat_track": [s.description for s in self.sat_steps],
            "id_track": [s.description for s in self.id_steps],
            "certificate": self.certificate_sat.summary(),
        }
        if self.certificate_id is not self.certificate_sat:
            out["certificate_id"] = self.certificate_id.summary()
        return out


def _two_adic(n: int) -> int:
    nu = 0
    while n % 2 == 0:
        n //= 2
        nu += 1
    return nu


def _power_step(G: Group, nu: int) -> LiftStep:
    sub = power_subgroup(G, 2 ** nu)
    child, emb = subgroup_group(sub, name=f"{G.name}^{2 ** nu}")
    return LiftStep(
        kind="power",
        description=f"restrict to the subgroup generated by {2 ** nu}-th powers (order {child.order})",
        parent=G,
        child=child,
        embed=emb,
        kernel=None,
    )


def preprocess_theorem_main2(G: Group) -> Pipeline:
    """Reject-or-reduce preprocessing for the hardness theorem.

    Fitting length 3: restrict to the subgroup generated by 2^nu-th powers
    (nu the 2-adic valuation of the top Fitting index), whose top index is
    odd, then search the certificate there.  Fitting length >= 4 with a
    non-2-group top: pass to the quotient by the third lower Fitting term
    (satisfiability track) resp. by U_{d-3} (identity track) and recurse.
    Fitting length >= 4 with a 2-group top: restrict to 2^nu-th powers
    first (the restricted group has Fitting length d-1) and recurse.
    Everything else: 'theorem inapplicable'.
    """
    if not is_solvable(G):
        raise NotSolvable(f"{G.name} is not solvable")
    d = fitting_length(G)
    if d < 3:
        raise TheoremInapplicable(f"theorem inapplicable: Fitting length {d} < 3")
    series = upper_fitting_series(G)
    top = G.order // len(series[d - 1])
    nu = _two_adic(top)
    odd_part = top // (2 ** nu)

    if d == 3:
        if odd_part == 1:
            raise TheoremInapplicable(
                "theorem inapplicable: Fitting length 3 with a 2-group top factor (open case)"
            )
        if nu == 0:
            cert = find_kh(G)
            steps: tuple[LiftStep, ...] = ()
        else:
            step = _power_step(G, nu)
            sub = step.child
            if fitting_length(sub) != 3:
                raise VerificationError("power subgroup lost Fitting length 3")
            sub_series = upper_fitting_series(sub)
            sub_top = sub.order // len(sub_series[2])
            if sub_top % 2 == 0 or sub_top == 1:
                raise VerificationError("power subgroup top index is not odd > 1")
            cert = find_kh(sub)
            steps = (step,)
        if not cert.flags["index_at_least_3"]:
            raise VerificationError("certificate index below 3 despite odd top index")
        return Pipeline(G, steps, steps, cert, cert)

    # d >= 4
    if odd_part > 1:
        from .group import lower_fitting_series

        l_series = lower_fitting_series(G)
        l3 = l_series[3] if len(l_series) > 3 else trivial_subgroup(G)
        q_sat = quotient_group(G, l3)
        sat_step = LiftStep(
            kind="quotient_sat",
            description=f"pass to the quotient by the 3rd lower Fitting term (order {len(l3)})",
            parent=G,
            child=q_sat.group,
            quotient=q_sat,
            kernel=l3,
        )
        u_low = series[d - 3]
        q_id = quotient_group(G, u_low)
        id_step = LiftStep(
            kind="quotient_id",
            description=f"pass to the quotient by U_{d - 3} (order {len(u_low)})",
            parent=G,
            child=q_id.group,
            quotient=q_id,
            kernel=u_low,
        )
        sat_rest = preprocess_theorem_main2(q_sat.group)
        id_rest = preprocess_theorem_main2(q_id.group)
        return Pipeline(
            G,
            (sat_step,) + sat_rest.sat_steps,
            (id_step,) + id_rest.id_steps,
            sat_rest.certificate_sat,
            id_rest.certificate_id,
        )

    step = _power_step(G, nu)
    sub = step.child
    if fitting_length(sub) != d - 1:
        raise VerificationError("power subgroup does not drop the Fitting length by one")
    rest = preprocess_theorem_main2(sub)
    return Pipeline(
        G,
        (step,) + rest.sat_steps,
        (step,) + rest.id_steps,
        rest.certificate_sat,
        rest.certificate_id,
    )


# -- structural expression nodes ---------------------------------------------------


class _Node:
    __slots__ = ()


class _Leaf(_Node):
    __slots__ = ("tokens",)

    def __init__(self, tokens: np.ndarray) -> None:
        self.tokens = np.asarray(tokens, dtype=np.int32)


class _Shift(_Node):
    __slots__ = ("child", "offset")

    def __init__(self, child: _Node, offset: int) -> None:
        self.child = child
        self.offset = offset


class _Seq(_Node):
    __slots__ = ("children",)

    def __init__(self, children: Sequence[_Node]) -> None:
        self.children = tuple(children)


class _Comm(_Node):
    __slots__ = ("left", "right")

    def __init__(self, left: _Node, right: _Node) -> None:
        self.left = left
        self.right = right


def _node_length(root: _Node) -> int:
    memo: dict[int, int] = {}

    def rec(node: _Node) -> int:
        key = id(node)
        if key in memo:
            return memo[key]
        if isinstance(node, _Leaf):
            val = int(node.tokens.size)
        elif isinstance(node, _Shift):
            val = rec(node.child)
        elif isinstance(node, _Seq):
            val = sum(rec(c) for c in node.children)
        else:
            val = 2 * rec(node.left) + 2 * rec(node.right)
        memo[key] = val
        return val

    return rec(root)


def _leaf_array(leaf: _Leaf, inverted: bool, offset: int, G: Group) -> np.ndarray:
    arr = leaf.tokens
    if not inverted and offset == 0:
        return arr
    arr = arr.copy()
    negs = arr < 0
    if offset:
        arr[negs] -= 2 * offset
    if inverted:
        arr = arr[::-1].copy()
        consts = arr >= 0
        arr[consts] = G.inv[arr[consts]]
        negs = arr < 0
        sel = arr[negs]
        u = -sel - 1
        arr[negs] = np.where(u % 2 == 0, sel - 1, sel + 1)
    return arr


def _stream_tokens(root: _Node, G: Group) -> Iterator[np.ndarray]:
    """Depth-first token-array stream of the fully expanded word.

    Identical (leaf, inversion, offset) instances recur exponentially often
    inside commutator expansions, so transformed leaf arrays are cached.
    """
    cache: dict[tuple[int, bool, int], np.ndarray] = {}
    stack: list[tuple[_Node, bool, int]] = [(root, False, 0)]
    while stack:
        node, inv, off = stack.pop()
        if isinstance(node, _Leaf):
            key = (id(node), inv, off)
            arr = cache.get(key)
            if arr is None:
                arr = _leaf_array(node, inv, off, G)
                cache[key] = arr
            yield arr
        elif isinstance(node, _Shift):
            stack.append((node.child, inv, off + node.offset))
        elif isinstance(node, _Seq):
            kids = node.children if inv else node.children[::-1]
            for c in kids:
                stack.append((c, inv, off))
        else:
            a, b = node.left, node.right
            if not inv:
                # [a, b] = a^-1 b^-1 a b
                order = [(a, True), (b, True), (a, False), (b, False)]
            else:
                # [a, b]^-1 = [b, a]
                order = [(b, True), (a, True), (b, False), (a, False)]
            for child, cinv in order[::-1]:
                stack.append((child, cinv, off))


# -- compiled instances --------------------------------------------------------------


_EVAL_CHUNK = 1 << 20


@dataclass
class CompiledInstance:
    """Compiled coloring instance: the equation delta in structural form.

    The satisfiability instance is delta * h_tilde^-1, the identity
    instance is delta itself.  Variable ids: 0..n-1 are the vertex
    variables; each (copy j, factor k) block occupies a contiguous range
    of auxiliary ids (inducer variables first, then the conjugating
    variables in step order).
    """

    certificate: KHCertificate
    graph: GraphInstance
    R: int
    M: int
    h_tilde: int
    batches: tuple[tuple[tuple, ...], ...]  # per batch: ("edge", u, v) | ("const", c)
    coset_reps: tuple[int, ...]
    alpha: Expression
    delta_root: _Node = field(repr=False)
    var_count: int
    delta_tokens: int
    h_chain_records: tuple = field(repr=False)

    @property
    def group(self) -> Group:
        return self.certificate.group

    @property
    def copies(self) -> int:
        return self.M * self.R

    @property
    def k_size(self) -> int:
        return len(self.certificate.K)

    @property
    def block_size(self) -> int:
        return self.alpha.var_count + self.R * self.M

    def block_base(self, copy: int, factor: int) -> int:
        return self.graph.vertex_count + (copy * self.k_size + factor) * self.block_size

    def stream_token_arrays(self) -> Iterator[np.ndarray]:
        return _stream_tokens(self.delta_root, self.group)

    def evaluate_delta(self, assignment: np.ndarray, chunk: int = _EVAL_CHUNK) -> int:
        """Direct evaluation of the full delta token stream under a total
        assignment, folding buffered chunks through the group table."""
        G = self.group
        sigma = np.asarray(assignment, dtype=np.int32)
        mul_flat = np.ascontiguousarray(G.mul.reshape(-1))
        inv = G.inv
        order = G.order
        acc = 0
        buf: list[np.ndarray] = []
        buffered = 0
        for arr in self.stream_token_arrays():
            buf.append(arr)
            buffered += arr.size
            if buffered >= chunk:
                acc = _fold_tokens(acc, np.concatenate(buf), sigma, mul_flat, inv, order)
                buf, buffered = [], 0
        if buf:
            acc = _fold_tokens(acc, np.concatenate(buf), sigma, mul_flat, inv, order)
        return int(acc)

    def to_expression(self, kind: str = "id", max_tokens: int = 5_000_000) -> Expression:
        """Materialize the instance as an eager Expression.

        kind 'id' is delta; kind 'sat' appends h_tilde^-1.  Refuses to
        materialize beyond ``max_tokens``.
        """
        total = self.delta_tokens + (1 if kind == "sat" else 0)
        if total > max_tokens:
            raise BudgetExceeded(f"delta has {total} tokens, over the {max_tokens} cap")
        parts = list(self.stream_token_arrays())
        if kind == "sat":
            parts.append(np.array([int(self.group.inv[self.h_tilde])], dtype=np.int32))
        elif kind != "id":
            raise InputError("kind must be 'sat' or 'id'")
        toks = np.concatenate(parts) if parts else np.empty(0, np.int32)
        return Expression(self.group, toks, self.var_count)

    def gadget_value(self, batch: int, slot: int, reps: Sequence[int]) -> int:
        """Value of a gadget under vertex-representative assignments."""
        G = self.group
        kind = self.batches[batch][slot]
        if kind[0] == "edge":
            _, u, v = kind
            return int(G.mul[reps[u], G.inv[reps[v]]])
        return int(kind[1])

    def save(self, base_path: str | Path, kind: str, expr_budget: int = 5_000_000) -> dict:
        """Write the sidecar metadata (always) and the expression file
        (only when the token count fits the budget).  Returns file info."""
        base = Path(base_path)
        meta_path = base.with_suffix(".meta")
        meta_path.write_text(self.sidecar_text(kind), encoding="utf-8")
        out = {"meta": str(meta_path), "expr": None, "tokens": self.delta_tokens}
        if self.delta_tokens + 1 <= expr_budget:
            from .expr import save_expression

            expr_path = base.with_suffix(".expr")
            save_expression(self.to_expression(kind, expr_budget), expr_path)
            out["expr"] = str(expr_path)
        return out

    def sidecar_text(self, kind: str) -> str:
        lines = [
            f"group {self.group.name}",
            f"kind {kind}",
            f"colors {self.graph.colors}",
            f"vertices {self.graph.vertex_count}",
            f"edges {self.graph.edge_count}",
            f"R {self.R}",
            f"M {self.M}",
            f"h_tilde {self.h_tilde}",
            f"delta_tokens {self.delta_tokens}",
            f"var_count {self.var_count}",
            f"x_vars 0..{self.graph.vertex_count - 1}",
            f"alpha_vars_per_block {self.alpha.var_count}",
            f"z_vars_per_block {self.R * self.M}",
            f"block_size {self.block_size}",
            f"copies {self.copies}",
            f"factors_per_copy {self.k_size}",
            f"aux_base {self.graph.vertex_count}",
            "aux_layout copy-major then factor-major; alpha vars first, z vars in (slot, conjugate) order",
            f"coset_reps {','.join(str(r) for r in self.coset_reps)}",
            "coset_color_map least-representative order maps to colors 1..C",
        ]
        for r, batch in enumerate(self.batches):
            items = []
            for kindspec in batch:
                if kindspec[0] == "edge":
                    items.append(f"edge {kindspec[1]} {kindspec[2]}")
                else:
                    items.append(f"const {kindspec[1]}")
            lines.append(f"batch {r} " + "; ".join(items))
        return "\n".join(lines) + "\n"


def _fold_tokens(
    acc: int,
    toks: np.ndarray,
    sigma: np.ndarray,
    mul_flat: np.ndarray,
    inv: np.ndarray,
    order: int,
) -> int:
    """Fold one token chunk into the running left product."""
    neg = toks < 0
    cur = toks.astype(np.int32, copy=True)
    if neg.any():
        u = -toks[neg] - 1
        assigned = sigma[u >> 1]
        cur[neg] = np.where((u & 1) == 0, assigned, inv[assigned])
    while cur.size > 1:
        if cur.size & 1:
            head, tail = cur[:-1], int(cur[-1])
        else:
            head, tail = cur, -1
        cur = mul_flat.take(head[0::2] * np.int32(order) + head[1::2])
        if tail >= 0:
            cur = np.append(cur, np.int32(tail))
    if cur.size == 0:
        return acc
    return int(mul_flat[acc * order + int(cur[0])])


# -- compilation ----------------------------------------------------------------------


def _set_chain_with_records(
    start: ElementSet, classes: Sequence[ElementSet]
) -> tuple[ElementSet, list[dict[int, tuple[int, int]]]]:
    """Iterated coupled set commutator with first-found decompositions."""
    G = start.group
    m = G.mul
    cur = start
    records = []
    for cls in classes:
        xs = cur.indices()
        ys = cls.indices()
        heads = m[np.ix_(G.inv[xs], G.inv[ys])]
        tails = m[np.ix_(xs, ys)]
        vals = m[heads.ravel(), tails.ravel()]
        uniq, first = np.unique(vals, return_index=True)
        rec = {
            int(v): (int(xs[f // ys.size]), int(ys[f % ys.size]))
            for v, f in zip(uniq.tolist(), first.tolist())
        }
        records.append(rec)
        cur = ElementSet(G, frozenset(uniq.tolist()))
    return cur, records


def _product_chain_with_records(
    factor: ElementSet, count: int
) -> tuple[list[ElementSet], list[dict[int, tuple[int, int]]]]:
    """Levels of factor^j with backpointers (previous element, new factor)."""
    G = factor.group
    m = G.mul
    levels = [factor]
    records: list[dict[int, tuple[int, int]]] = [{}]
    for _ in range(count - 1):
        xs = levels[-1].indices()
        ys = factor.indices()
        vals = m[np.ix_(xs, ys)]
        uniq, first = np.unique(vals, return_index=True)
        rec = {
            int(v): (int(xs[f // ys.size]), int(ys[f % ys.size]))
            for v, f in zip(uniq.tolist(), first.tolist())
        }
        records.append(rec)
        nxt = ElementSet(G, frozenset(uniq.tolist()))
        if nxt.members == levels[-1].members:
            levels.append(nxt)
            break
        levels.append(nxt)
    return levels, records


def _verify_compile_m(cert: KHCertificate) -> Subgroup:
    """Check that the certificate's M suffices for the compiled semantics.

    (i) every pair chain [K, j g^G] is stable by step M with value
    eta_g(K); (ii) the M-step central series of Fit(K) is trivial.
    Returns Fit(K) as a subgroup of the ambient group.
    """
    G, K, M = cert.group, cert.K, cert.M
    for cls in conjugacy_classes(G):
        rep = min(cls.members)
        cur = K
        for _ in range(M):
            cur = subgroup_generated(set_commutator(cur, cls))
        nxt = subgroup_generated(set_commutator(cur, cls))
        if nxt.members != cur.members or cur.members != eta(G, K, rep).members:
            raise VerificationError(
                f"M={M} does not stabilize [K, j g^G] for class of {rep}"
            )
    k_group, emb = subgroup_group(K)
    fit_k_local = fitting_subgroup(k_group)
    fit_k = Subgroup(G, frozenset(int(emb[i]) for i in fit_k_local.members))
    cur = fit_k
    for _ in range(M - 1):
        cur = subgroup_generated(set_commutator(cur, fit_k))
    if not cur.is_trivial():
        raise VerificationError(f"M={M} does not kill the central series of Fit(K)")
    return fit_k


def compile_coloring(cert: KHCertificate, graph: GraphInstance) -> CompiledInstance:
    """Compile a C-coloring instance into the equation delta (+ h_tilde).

    Gadgets X_u X_v^-1 are grouped into R = ceil(sqrt(m)) batches of R
    slots (the last gadget duplicated to fill), each batch expands to the
    inducer-commutator expression with M conjugated gadget copies per
    slot, M disjoint copies of every batch are combined in one iterated
    commutator, and h_tilde is the least nontrivial element of the
    (M*R)-fold set commutator of K.
    """
    G = cert.group
    if not cert.usable_for_coloring:
        raise InputError(
            "certificate not usable for compilation: needs verified flags, "
            "ambient Fitting length 3 and FitL(K) = 2 (a degenerate K would collapse delta)"
        )
    C = cert.coloring_index
    if graph.colors != C:
        raise InputError(f"graph wants {graph.colors} colors but |G/H| = {C}")
    _verify_compile_m(cert)

    n, m = graph.vertex_count, graph.edge_count
    M = cert.M
    R = max(1, math.ceil(math.sqrt(m))) if m else 1
    slots: list[tuple] = [("edge", u, v) for (u, v) in graph.edges]
    if not slots:
        c_out = next(g for g in range(G.order) if g not in cert.H.members)
        slots = [("const", c_out)]
    while len(slots) < R * R:
        slots.append(slots[-1])
    batches = tuple(tuple(slots[r * R : (r + 1) * R]) for r in range(R))

    alpha = build_commutator_fixed_inducer(G, cert.K)
    t_alpha = alpha.var_count
    k_size = len(cert.K)
    copies = M * R
    block = t_alpha + R * M
    var_count = n + copies * k_size * block

    alpha_leaf = _Leaf(alpha.tokens)

    def conj_leaf(batch: int, slot: int, zvar: int) -> _Leaf:
        kind = batches[batch][slot]
        if kind[0] == "edge":
            _, u, v = kind
            toks = [inv_var_token(zvar), var_token(u), inv_var_token(v), var_token(zvar)]
        else:
            toks = [inv_var_token(zvar), int(kind[1]), var_token(zvar)]
        return _Leaf(np.array(toks, dtype=np.int32))

    copy_nodes: list[_Node] = []
    for j in range(copies):
        r = j // M
        factors: list[_Node] = []
        for k in range(k_size):
            base = n + (j * k_size + k) * block
            node: _Node = _Shift(alpha_leaf, base)
            for q in range(R * M):
                s, _nu = divmod(q, M)
                node = _Comm(node, conj_leaf(r, s, base + t_alpha + q))
            factors.append(node)
        copy_nodes.append(_Seq(factors))
    delta: _Node = copy_nodes[0]
    for nodej in copy_nodes[1:]:
        delta = _Comm(delta, nodej)

    k_set = cert.K.as_set()
    h_levels: list[ElementSet] = [k_set]
    h_records: list[dict[int, tuple[int, int]]] = [{}]
    stable_at = None
    for step in range(1, copies):
        cur, rec = _set_chain_with_records(h_levels[-1], [k_set])
        h_levels.append(cur)
        h_records.append(rec[0])
        if cur.members == h_levels[-2].members and stable_at is None:
            stable_at = step
            break
    while len(h_levels) < copies:
        h_levels.append(h_levels[-1])
        h_records.append(h_records[-1])
    final = h_levels[copies - 1]
    nontrivial = sorted(final.members - {0})
    if not nontrivial:
        raise VerificationError(
            "the (M*R)-fold set commutator of K is trivial, contradicting FitL(K) = 2"
        )
    h_tilde = nontrivial[0]

    inst = CompiledInstance(
        certificate=cert,
        graph=graph,
        R=R,
        M=M,
        h_tilde=h_tilde,
        batches=batches,
        coset_reps=tuple(int(x) for x in quotient_group(G, cert.H).section.tolist()),
        alpha=alpha,
        delta_root=delta,
        var_count=var_count,
        delta_tokens=_node_length(delta),
        h_chain_records=tuple(h_records),
    )
    return inst


# -- decision --------------------------------------------------------------------------


@dataclass(frozen=True)
class Decision:
    sat: bool
    is_identity: bool
    witness: np.ndarray | None
    coset_tuple: tuple[int, ...] | None
    coloring: list[int] | None


def _conjugator_map(G: Group, g: int) -> dict[int, int]:
    """target -> some z with g^z = target, first found in index order."""
    m = G.mul
    zs = np.arange(G.order)
    vals = m[m[G.inv[zs], g], zs]
    uniq, first = np.unique(vals, return_index=True)
    return {int(v): int(zs[f]) for v, f in zip(uniq.tolist(), first.tolist())}


def decide_compiled(
    cert: KHCertificate,
    graph: GraphInstance,
    inst: CompiledInstance,
    cross_check: bool = True,
    budget: int = 1_000_000,
) -> Decision:
    """Exact decision of the compiled instance by coset-tuple enumeration.

    Gadget H-membership only depends on the vertex cosets, so C^n coset
    tuples cover all assignments.  For each scanned tuple the two branch
    claims are cross-checked by exact factor-level set semantics: with all
    gadgets outside H the batch image closes to K and the final chain
    contains h_tilde; otherwise the batch image stays inside Fit(K) and
    the final chain collapses to the identity.  A satisfying witness is
    reconstructed from the recorded decompositions.
    """
    if inst.certificate is not cert:
        raise InputError("instance was compiled with a different certificate")
    if inst.graph != graph:
        raise InputError("instance was compiled from a different graph")
    G = cert.group
    C = cert.coloring_index
    n = graph.vertex_count
    if n and n * math.log(C) > math.log(budget) + 1e-9:
        raise BudgetExceeded(f"{C}^{n} coset tuples exceed budget {budget}")
    reps = inst.coset_reps
    h_members = cert.H.members
    k_set = cert.K.as_set()
    fit_k = _verify_compile_m(cert) if cross_check else None

    batch_cache: dict[tuple[int, ...], tuple[frozenset, bool]] = {}
    delta_cache: dict[tuple[frozenset, ...], frozenset] = {}

    def batch_image(vals: tuple[int, ...]) -> tuple[frozenset, bool]:
        """Exact auxiliary-image of one batch expression (the |K|-fold
        product of its factor image) and the all-outside-H branch flag."""
        if vals in batch_cache:
            return batch_cache[vals]
        good = all(v not in h_members for v in vals)
        classes = []
        for s in range(inst.R):
            cls = conjugacy_class(G, vals[s])
            classes.extend([cls] * inst.M)
        factor_set, _ = _set_chain_with_records(k_set, classes)
        levels, _ = _product_chain_with_records(factor_set, len(cert.K))
        image = levels[-1]
        if cross_check:
            if good:
                if image.members != cert.K.members:
                    raise VerificationError("good batch image fails to close to K")
            else:
                if not image.members <= fit_k.members:
                    raise VerificationError("bad batch image escapes Fit(K)")
        batch_cache[vals] = (image.members, good)
        return batch_cache[vals]

    def delta_image(images: tuple[frozenset, ...]) -> frozenset:
        if images in delta_cache:
            return delta_cache[images]
        cur = ElementSet(G, images[0])
        for mem in images[1:]:
            cur = set_commutator(cur, ElementSet(G, mem))
        delta_cache[images] = cur.members
        return cur.members

    found: tuple[int, ...] | None = None
    for tup in iproduct(range(C), repeat=n):
        vertex_reps = [reps[c] for c in tup]
        batch_vals = [
            tuple(inst.gadget_value(r, s, vertex_reps) for s in range(inst.R))
            for r in range(inst.R)
        ]
        infos = [batch_image(v) for v in batch_vals]
        good = all(g for (_, g) in infos)
        if cross_check:
            copy_images = tuple(infos[j // inst.M][0] for j in range(inst.copies))
            dimg = delta_image(copy_images)
            if good and inst.h_tilde not in dimg:
                raise VerificationError("good tuple misses h_tilde in the delta image")
            if not good and dimg != frozenset({0}):
                raise VerificationError("bad tuple has a nontrivial delta image")
        if good and found is None:
            found = tup
            if not cross_check:
                break
    if found is None:
        return Decision(sat=False, is_identity=True, witness=None, coset_tuple=None, coloring=None)
    witness = _reconstruct_witness(cert, inst, found)
    coloring = [c + 1 for c in found]
    return Decision(sat=True, is_identity=False, witness=witness, coset_tuple=found, coloring=coloring)


def _alpha_witness_tables(G: Group, K: Subgroup):
    """Single-commutator realizations for the blockwise inducer.

    Returns (B levels with records, map value -> (c position, conjugator)).
    """
    members = sorted(K.members)
    m = G.mul
    gs = np.arange(G.order)
    value_map: dict[int, tuple[int, int]] = {}
    union: set[int] = set()
    for pos, c in enumerate(members):
        conj = m[m[G.inv[gs], c], gs]
        vals = m[G.inv[c], conj]
        uniq, first = np.unique(vals, return_index=True)
        for v, f in zip(uniq.tolist(), first.tolist()):
            if int(v) not in value_map:
                value_map[int(v)] = (pos, int(gs[f]))
        union |= set(uniq.tolist())
    b_set = ElementSet(G, frozenset(union))
    levels, records = _product_chain_with_records(b_set, len(members))
    return levels, records, value_map


def _chase_product(levels, records, target: int) -> list[int]:
    """Write target as an ordered product of level-1 factors."""
    depth = None
    for j, lev in enumerate(levels):
        if target in lev.members:
            depth = j
            break
    if depth is None:
        raise VerificationError("product decomposition target unreachable")
    parts = []
    cur = target
    for j in range(depth, 0, -1):
        cur, right = records[j][cur]
        parts.append(right)
    parts.append(cur)
    return parts[::-1]


def _reconstruct_witness(
    cert: KHCertificate, inst: CompiledInstance, tup: tuple[int, ...]
) -> np.ndarray:
    """Assemble an explicit assignment that evaluates delta to h_tilde."""
    G = cert.group
    n = inst.graph.vertex_count
    sigma = np.zeros(inst.var_count, dtype=np.int64)
    for i, c in enumerate(tup):
        sigma[i] = inst.coset_reps[c]
    vertex_reps = [int(inst.coset_reps[c]) for c in tup]

    # Copy targets: h_tilde = [w_1, ..., w_copies] from the K-chain records.
    copy_targets = [0] * inst.copies
    cur = inst.h_tilde
    for j in range(inst.copies - 1, 0, -1):
        rec = inst.h_chain_records[j]
        cur, right = rec[cur]
        copy_targets[j] = right
    copy_targets[0] = cur

    k_set = cert.K.as_set()
    members = sorted(cert.K.members)
    alpha_levels, alpha_records, alpha_map = _alpha_witness_tables(G, cert.K)
    k_size = len(members)
    conjugators: dict[int, dict[int, int]] = {}

    for j in range(inst.copies):
        r = j // inst.M
        vals = [inst.gadget_value(r, s, vertex_reps) for s in range(inst.R)]
        classes = []
        for s in range(inst.R):
            cls = conjugacy_class(G, vals[s])
            classes.extend([cls] * inst.M)
        factor_set, chain_records = _set_chain_with_records(k_set, classes)
        levels, prod_records = _product_chain_with_records(factor_set, k_size)
        factors = _chase_product(levels, prod_records, copy_targets[j])
        for k, s_val in enumerate(factors):
            if s_val == 0:
                continue  # defaults already evaluate the factor to the identity
            base = inst.block_base(j, k)
            # Unwind s_val = [a, c_1, ..., c_t] through the chain records.
            chain_parts = []
            cur = s_val
            for q in range(len(classes) - 1, -1, -1):
                cur, right = chain_records[q][cur]
                chain_parts.append(right)
            chain_parts = chain_parts[::-1]
            a_val = cur
            for q, c_elem in enumerate(chain_parts):
                gad = vals[q // inst.M]
                if gad not in conjugators:
                    conjugators[gad] = _conjugator_map(G, gad)
                sigma[base + inst.alpha.var_count + q] = conjugators[gad][c_elem]
            if a_val != 0:
                for pos_i, b_val in enumerate(_chase_product(alpha_levels, alpha_records, a_val)):
                    if b_val == 0:
                        continue
                    c_pos, conj_g = alpha_map[b_val]
                    sigma[base + pos_i * k_size + c_pos] = conj_g
    return sigma


# -- lifting reductions -------------------------------------------------------------


def _map_constants(e: Expression, target: Group, mapping: np.ndarray) -> Expression:
    toks = e.tokens.copy()
    consts = toks >= 0
    toks[consts] = mapping[toks[consts]]
    return Expression(target, toks, e.var_count)


def _check_inducer(
    inducer: Expression,
    target: Subgroup,
    budget: int,
    assume_verified: bool,
) -> None:
    free = inducer.used_vars().size
    if inducer.group.order ** free <= budget:
        img = image_exact(inducer, budget=budget)
        if img.members != target.members:
            raise InputError("inducer image does not equal the claimed subgroup")
    elif not assume_verified:
        raise InputError("inducer too large to verify within budget; pass assume_verified")


def lift_eqnsat_via_inducer(
    inst: Expression,
    inducer: Expression,
    target: Subgroup,
    embed: np.ndarray | None = None,
    budget: int = 300_000,
    assume_verified: bool = False,
) -> Expression:
    """EQNSAT(H) -> EQNSAT(G): replace every variable by a fresh inducer copy.

    ``inst`` is an expression over H (as its own group when ``embed`` maps
    its constants into G, or over G directly when embed is None).
    """
    G = inducer.group
    _check_inducer(inducer, target, budget, assume_verified)
    if embed is not None:
        inst = _map_constants(inst, G, np.asarray(embed, dtype=np.int64))
    elif inst.group is not G:
        raise InputError("instance and inducer groups differ; pass an embedding")
    if not all(int(c) in target.members for c in inst.tokens[inst.tokens >= 0]):
        raise InputError("instance constant outside the claimed subgroup")
    return substitute(inst, [inducer] * inst.var_count)


def lift_eqnsat_quotient(
    inst: Expression,
    quotient: Quotient,
    kernel_inducer: Expression,
    kernel: Subgroup,
    budget: int = 300_000,
    assume_verified: bool = False,
) -> Expression:
    """EQNSAT(G/N) -> EQNSAT(G): lift constants by the section, append an
    inducer for N (the lifted word is solvable iff it can reach N)."""
    G = kernel_inducer.group
    if inst.group is not quotient.group:
        raise InputError("instance must live in the quotient group")
    _check_inducer(kernel_inducer, kernel, budget, assume_verified)
    lifted = _map_constants(inst, G, np.asarray(quotient.section, dtype=np.int64))
    toks = kernel_inducer.tokens.copy()
    negs = toks < 0
    toks[negs] -= 2 * lifted.var_count
    shifted = Expression(G, toks, lifted.var_count + kernel_inducer.var_count)
    return Expression(
        G,
        np.concatenate([lifted.tokens, shifted.tokens]),
        shifted.var_count,
    )


def lift_eqnid_via_definer(
    inst: Expression,
    quotient: Quotient,
    definer: Expression,
    kernel: Subgroup,
    budget: int = 300_000,
    assume_verified: bool = False,
) -> Expression:
    """EQNID(G/N) -> EQNID(G): wrap the section-lifted word in the X-slot
    of an expression that atomically universally defines N."""
    G = definer.group
    if inst.group is not quotient.group:
        raise InputError("instance must live in the quotient group")
    n_aux = definer.var_count - 1
    if G.order ** definer.var_count <= budget:
        defined = set()
        for g in range(G.order):
            img = image_exact(definer, partial={0: g}, budget=budget)
            if img.members == frozenset({0}):
                defined.add(g)
        if frozenset(defined) != kernel.members:
            raise InputError("definer defined-set does not equal the claimed subgroup")
    elif not assume_verified:
        raise InputError("definer too large to verify within budget; pass assume_verified")
    lifted = _map_constants(inst, G, np.asarray(quotient.section, dtype=np.int64))
    substitutes = [lifted] + [single_var(G) for _ in range(n_aux)]
    return substitute(definer, substitutes)
