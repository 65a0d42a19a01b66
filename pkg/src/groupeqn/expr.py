"""Expressions over a group: evaluation, substitution, exact image
computation, and the constructive inducer/definer builders.

Tokens are packed into a single int32 array: a nonnegative value c is the
constant c, and a negative value encodes a variable occurrence
(``-(2*id+1)`` plain, ``-(2*id+2)`` inverted).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import BudgetExceeded, InputError, NotReadOnce, VerificationError
from .group import (
    ElementSet,
    Group,
    Subgroup,
    fitting_subgroup,
    full_subgroup,
    iterated_set_commutator,
    lower_central_series,
    lower_fitting_series,
    power_subgroup,
    quotient_group,
    set_commutator,
    set_product,
    stabilization_constant,
    subgroup_generated,
    upper_fitting_series,
)


def var_token(var_id: int) -> int:
    return -(2 * var_id + 1)


def inv_var_token(var_id: int) -> int:
    return -(2 * var_id + 2)


def token_var_id(token: int) -> int:
    return (-token - 1) // 2


def invert_var_tokens(tokens: np.ndarray) -> np.ndarray:
    """Swap Var <-> InvVar, leaving constants alone."""
    out = tokens.copy()
    neg = out < 0
    u = -out[neg] - 1  # 2*id for Var, 2*id+1 for InvVar
    out[neg] = np.where(u % 2 == 0, out[neg] - 1, out[neg] + 1)
    return out


@dataclass(frozen=True)
class Expression:
    """Word over constants, variables, and inverse variables."""

    group: Group
    tokens: np.ndarray
    var_count: int

    def __post_init__(self) -> None:
        toks = np.asarray(self.tokens, dtype=np.int32)
        object.__setattr__(self, "tokens", toks)
        if toks.size:
            consts = toks[toks >= 0]
            if consts.size and consts.max() >= self.group.order:
                raise InputError("constant token out of range")
            negs = toks[toks < 0]
            if negs.size and token_var_id(int(negs.min())) >= self.var_count:
                raise InputError("variable id exceeds var_count")

    def __len__(self) -> int:
        return int(self.tokens.size)

    def used_vars(self) -> np.ndarray:
        negs = self.tokens[self.tokens < 0]
        return np.unique((-negs - 1) // 2)

    def var_occurrences(self) -> np.ndarray:
        """Occurrence count per variable id (length var_count)."""
        counts = np.zeros(self.var_count, dtype=np.int64)
        negs = self.tokens[self.tokens < 0]
        ids, c = np.unique((-negs - 1) // 2, return_counts=True)
        counts[ids] = c
        return counts

    def inverse(self) -> "Expression":
        rev = self.tokens[::-1].copy()
        consts = rev >= 0
        rev[consts] = self.group.inv[rev[consts]]
        rev[~consts] = invert_var_tokens(rev[~consts])
        return Expression(self.group, rev, self.var_count)


def const_expr(G: Group, c: int) -> Expression:
    return Expression(G, np.array([c], dtype=np.int32), 0)


def single_var(G: Group, var_id: int = 0, var_count: int | None = None) -> Expression:
    return Expression(
        G, np.array([var_token(var_id)], dtype=np.int32), var_count or var_id + 1
    )


def concat_expr(parts: Sequence[Expression]) -> Expression:
    if not parts:
        raise InputError("cannot concatenate zero expressions")
    G = parts[0].group
    if any(p.group is not G for p in parts):
        raise InputError("expressions live in different groups")
    toks = np.concatenate([p.tokens for p in parts]) if parts else np.empty(0, np.int32)
    return Expression(G, toks, max(p.var_count for p in parts))


# -- evaluation ----------------------------------------------------------------


def _assignment_array(e: Expression, sigma: Mapping[int, int] | Sequence[int] | np.ndarray) -> np.ndarray:
    arr = np.full(max(e.var_count, 1), -1, dtype=np.int64)
    if isinstance(sigma, Mapping):
        for k, v in sigma.items():
            arr[int(k)] = int(v)
    else:
        vals = np.asarray(sigma, dtype=np.int64)
        arr[: vals.size] = vals
    return arr


def evaluate(e: Expression, sigma: Mapping[int, int] | Sequence[int] | np.ndarray) -> int:
    """Left-to-right product of token values under a total assignment."""
    arr = _assignment_array(e, sigma)
    used = e.used_vars()
    if used.size and (arr[used] < 0).any():
        missing = [int(v) for v in used if arr[v] < 0]
        raise InputError(f"unassigned variables: {missing}")
    vals = token_values(e, arr)
    return _fold(e.group, vals)


def token_values(e: Expression, sigma_arr: np.ndarray) -> np.ndarray:
    """Per-token element values under a (total) assignment array."""
    toks = e.tokens
    vals = np.empty(toks.size, dtype=np.int64)
    pos = toks >= 0
    vals[pos] = toks[pos]
    negs = toks[~pos]
    u = -negs - 1
    ids = u // 2
    assigned = sigma_arr[ids]
    vals[~pos] = np.where(u % 2 == 0, assigned, e.group.inv[assigned])
    return vals


def _fold(G: Group, vals: np.ndarray) -> int:
    """Tree-reduce a value sequence through the multiplication table."""
    if vals.size == 0:
        return 0
    mul = G.mul
    cur = vals
    while cur.size > 1:
        if cur.size % 2:
            head, tail = cur[:-1], int(cur[-1])
        else:
            head, tail = cur, None
        cur = mul[head[0::2], head[1::2]].astype(np.int64)
        if tail is not None:
            cur = np.concatenate([cur, [tail]])
    return int(cur[0])


def evaluate_many(e: Expression, sigma_matrix: np.ndarray) -> np.ndarray:
    """Evaluate under many assignments at once (rows of sigma_matrix)."""
    G = e.group
    n = sigma_matrix.shape[0]
    acc = np.zeros(n, dtype=np.int64)
    mul, inv = G.mul, G.inv
    for t in e.tokens.tolist():
        if t >= 0:
            acc = mul[acc, t]
        else:
            u = -t - 1
            col = sigma_matrix[:, u // 2]
            acc = mul[acc, col if u % 2 == 0 else inv[col]]
    return acc


# -- substitution ---------------------------------------------------------------


def substitute(
    alpha: Expression,
    betas: Sequence[Expression],
    share_variables: bool = False,
) -> Expression:
    """Replace every occurrence of variable i in alpha by beta_i.

    All occurrences of the same alpha-variable share one copy of beta_i's
    variables, so evaluation composes: sigma(alpha(betas)) equals alpha
    evaluated at the beta-values.  Unless ``share_variables`` is set, the
    betas are renamed into disjoint id ranges.
    """
    if len(betas) != alpha.var_count:
        raise InputError(
            f"arity mismatch: alpha has {alpha.var_count} variables, got {len(betas)} substitutes"
        )
    G = alpha.group
    if any(b.group is not G for b in betas):
        raise InputError("substituted expressions live in a different group")
    if share_variables:
        shifted = list(betas)
        total = max((b.var_count for b in betas), default=0)
    else:
        shifted = []
        base = 0
        for b in betas:
            toks = b.tokens.copy()
            negs = toks < 0
            toks[negs] -= 2 * base  # shifts the encoded id by +base
            shifted.append(Expression(G, toks, base + b.var_count))
            base += b.var_count
        total = base
    parts: list[np.ndarray] = []
    for t in alpha.tokens.tolist():
        if t >= 0:
            parts.append(np.array([t], dtype=np.int32))
        else:
            u = -t - 1
            b = shifted[u // 2]
            parts.append(b.tokens if u % 2 == 0 else b.inverse().tokens)
    toks = np.concatenate(parts) if parts else np.empty(0, np.int32)
    return Expression(G, toks, max(total, 1))


# -- commutator shapes -----------------------------------------------------------


def commutator_expr(a: Expression, b: Expression) -> Expression:
    """[a, b] = a^-1 b^-1 a b; variable ids are shared, not renamed."""
    if a.group is not b.group:
        raise InputError("commutator of expressions over different groups")
    toks = np.concatenate([a.inverse().tokens, b.inverse().tokens, a.tokens, b.tokens])
    return Expression(a.group, toks, max(a.var_count, b.var_count))


def conjugate_expr(a: Expression, b: Expression) -> Expression:
    """a^b = b^-1 a b."""
    if a.group is not b.group:
        raise InputError("conjugate of expressions over different groups")
    toks = np.concatenate([b.inverse().tokens, a.tokens, b.tokens])
    return Expression(a.group, toks, max(a.var_count, b.var_count))


def iterated_commutator_expr(parts: Sequence[Expression]) -> Expression:
    """[x1, ..., xn] nested leftwards."""
    if not parts:
        raise InputError("iterated commutator needs at least one argument")
    acc = parts[0]
    for p in parts[1:]:
        acc = commutator_expr(acc, p)
    return acc


# -- image computation ------------------------------------------------------------


@dataclass(frozen=True)
class ImageSet:
    """Image of an expression over assignments, with an exactness flag."""

    elements: ElementSet
    exact: bool


def _free_vars(e: Expression, partial: Mapping[int, int] | None) -> list[int]:
    assigned = set(int(k) for k in (partial or {}))
    return [int(v) for v in e.used_vars() if int(v) not in assigned]


def image_exact(
    e: Expression,
    partial: Mapping[int, int] | None = None,
    budget: int = 1_000_000,
) -> ElementSet:
    """Exact image set by exhaustive enumeration of the free variables."""
    G = e.group
    free = _free_vars(e, partial)
    if free and G.order > 1 and len(free) * math.log(G.order) > math.log(budget) + 1e-9:
        raise BudgetExceeded(f"{G.order}^{len(free)} assignments exceed budget {budget}")
    total = G.order ** len(free)
    if total > budget:
        raise BudgetExceeded(f"{total} assignments exceed budget {budget}")
    sigma = np.zeros((total, max(e.var_count, 1)), dtype=np.int64)
    for k, v in (partial or {}).items():
        sigma[:, int(k)] = int(v)
    if free:
        grids = np.unravel_index(np.arange(total), (G.order,) * len(free))
        for var, col in zip(free, grids):
            sigma[:, var] = col
    vals = evaluate_many(e, sigma)
    return ElementSet(G, frozenset(np.unique(vals).tolist()))


def image_read_once(
    e: Expression,
    partial: Mapping[int, int] | None = None,
) -> ImageSet:
    """Exact image for expressions read-once in their free variables.

    Folds the token stream left-to-right with setwise products: constants
    and assigned variables contribute singletons, each free occurrence
    contributes the whole group.  Exact because images of factors with
    disjoint variables multiply setwise.
    """
    G = e.group
    partial = {int(k): int(v) for k, v in (partial or {}).items()}
    occ = e.var_occurrences()
    for v in _free_vars(e, partial):
        if occ[v] > 1:
            raise NotReadOnce(f"variable {v} occurs {occ[v]} times; not read-once")
    mul = G.mul
    cur = np.array([0], dtype=np.int64)
    everything = np.arange(G.order, dtype=np.int64)
    for t in e.tokens.tolist():
        if t >= 0:
            cur = mul[cur, t]
        else:
            u = -t - 1
            vid = u // 2
            if vid in partial:
                val = partial[vid] if u % 2 == 0 else int(G.inv[partial[vid]])
                cur = mul[cur, val]
            else:
                cur = np.unique(mul[np.ix_(cur, everything)])
    return ImageSet(ElementSet(G, frozenset(np.unique(cur).tolist())), exact=True)


# -- structural image helpers (used by builder self-checks) ------------------------


def _closure_of_products(S: ElementSet, factors: int) -> ElementSet:
    """S^factors for a set containing the identity (monotone, so the chain
    stabilizes at the generated subgroup once factors is large enough)."""
    if 0 not in S.members:
        raise VerificationError("product closure expects the identity in the set")
    cur = S
    for _ in range(factors - 1):
        nxt = set_product(cur, S)
        if nxt.members == cur.members:
            return cur
        cur = nxt
    return cur


def _ordered_set_product(sets: Sequence[ElementSet]) -> ElementSet:
    acc = None
    for s in sets:
        acc = s if acc is None else set_product(acc, s)
    if acc is None:
        raise VerificationError("empty product")
    return acc


# -- builders ------------------------------------------------------------------------


def build_power_inducer(G: Group, k: int) -> Expression:
    """prod_i X_i^k over |G| fresh variables; induces <{g^k}>."""
    if k < 1:
        raise InputError("power exponent must be >= 1")
    n = G.order
    toks = np.empty(n * k, dtype=np.int32)
    for i in range(n):
        toks[i * k : (i + 1) * k] = var_token(i)
    e = Expression(G, toks, n)
    powers = ElementSet(G, frozenset({G.power(g, k) for g in range(n)}))
    image = _closure_of_products(powers, n)
    expected = power_subgroup(G, k)
    if image.members != expected.members:
        raise VerificationError("power inducer image mismatch")
    assert len(e) == n * k
    return e


def _comm_shape_len(arg_lengths: Sequence[int]) -> int:
    acc = arg_lengths[0]
    for l in arg_lengths[1:]:
        acc = 2 * acc + 2 * l
    return acc


def gamma_term(G: Group, k: int) -> Subgroup:
    """k-th term of the lower central series (gamma_1 = G)."""
    if k < 1:
        raise InputError("gamma index must be >= 1")
    series = lower_central_series(G)
    return series[min(k, len(series)) - 1]


def build_gamma_inducer(G: Group, k: int) -> Expression:
    """prod_i [X_{i,1}, ..., X_{i,k}] with disjoint variables; induces gamma_k G."""
    if k < 2:
        raise InputError("gamma inducer needs k >= 2; k = 1 is the single-variable inducer")
    n = G.order
    factors = []
    for i in range(n):
        args = [single_var(G, i * k + j, n * k) for j in range(k)]
        factors.append(iterated_commutator_expr(args))
    e = concat_expr(factors)
    whole = full_subgroup(G).as_set()
    factor_image = iterated_set_commutator([whole] * k)
    image = _closure_of_products(factor_image, n)
    expected = gamma_term(G, k)
    if image.members != expected.members:
        raise VerificationError("gamma inducer image mismatch")
    assert len(e) == n * (3 * 2 ** (k - 1) - 2)
    return e


def _stable_commutator_depth(H: Subgroup) -> int:
    """Least k >= 2 with gamma_k(H) = gamma_infinity(H).

    The series list is strictly decreasing with the stable term last, so
    the depth is simply its length (as an argument count)."""
    return max(len(lower_central_series(H)), 2)


def _lower_fitting_inducer(G: Group, i: int) -> tuple[Expression, ElementSet]:
    series = lower_fitting_series(G)
    if i < 0 or i >= len(series):
        raise InputError(f"lower Fitting index {i} out of range 0..{len(series) - 1}")
    if i == 0:
        return single_var(G), full_subgroup(G).as_set()
    inner, inner_image = _lower_fitting_inducer(G, i - 1)
    depth = _stable_commutator_depth(series[i - 1])
    n = G.order
    outer_factors = []
    for j in range(n):
        args = [single_var(G, j * depth + t, n * depth) for t in range(depth)]
        outer_factors.append(iterated_commutator_expr(args))
    outer = concat_expr(outer_factors)
    e = substitute(outer, [inner] * outer.var_count)
    factor_image = iterated_set_commutator([inner_image] * depth)
    image = _closure_of_products(factor_image, n)
    if image.members != series[i].members:
        raise VerificationError("lower Fitting inducer image mismatch")
    assert len(e) == n * (3 * 2 ** (depth - 1) - 2) * len(inner)
    return e, image


def build_lower_fitting_inducer(G: Group, i: int) -> Expression:
    """Inducer for the i-th lower Fitting term, by recursive plugging-in:
    every variable of the nilpotent-residual-shaped outer inducer is
    substituted with a fresh copy of the inducer for the previous term."""
    return _lower_fitting_inducer(G, i)[0]


def commutator_block_sets(G: Group, K: Subgroup) -> list[ElementSet]:
    """Per-position image {c^-1 c^g : g in G} for each c in K (sorted)."""
    out = []
    m = G.mul
    gs = np.arange(G.order)
    for c in sorted(K.members):
        conj = m[m[G.inv[gs], c], gs]
        vals = m[G.inv[c], conj]
        out.append(ElementSet(G, frozenset(np.unique(vals).tolist())))
    return out


def build_commutator_fixed_inducer(G: Group, K: Subgroup) -> Expression:
    """Blockwise inducer for a normal K with K = [K, G].

    |K| blocks, each a product over c in K of c^-1 * c^X with a fresh
    variable per (block, c) slot.  The image is verified to be exactly K.
    """
    if K.group is not G:
        raise InputError("K must live in G")
    kg = subgroup_generated(set_commutator(K, full_subgroup(G)))
    if kg.members != K.members:
        raise InputError("not commutator-fixed: K != [K, G]")
    members = sorted(K.members)
    size = len(members)
    toks = []
    for i in range(size):
        for p, c in enumerate(members):
            v = i * size + p
            toks.extend([int(G.inv[c]), inv_var_token(v), c, var_token(v)])
    e = Expression(G, np.array(toks, dtype=np.int32), size * size)
    block_sets = commutator_block_sets(G, K)
    block_image = _ordered_set_product(block_sets) if block_sets else None
    if block_image is None:
        image = ElementSet(G, frozenset({0}))
    else:
        image = _closure_of_products(block_image, size)
    if image.members != K.members:
        raise VerificationError("commutator-fixed inducer image mismatch")
    assert len(e) == 4 * size * size
    return e


def definer_commutator_arity(G: Group) -> int:
    """Argument count for the Fitting definer: stabilization constant + 1.

    With M the pair-stabilization constant, the (M+1)-argument iterated
    class commutator is guaranteed stable, so the defined set is exactly
    {g : <g^G> nilpotent}.  (M arguments alone can miss stabilization by
    one step: over an abelian group M = 1 and a single conjugate defines
    only the identity.)
    """
    return stabilization_constant(G) + 1


def build_fitting_definer(G: Group) -> Expression:
    """[X^{Y_1}, ..., X^{Y_A}] defining Fit(G); X is variable 0."""
    arity = definer_commutator_arity(G)
    x = single_var(G, 0, arity + 1)
    args = [conjugate_expr(x, single_var(G, j + 1, arity + 1)) for j in range(arity)]
    e = iterated_commutator_expr(args)
    defined = defined_set_structural(G, e)
    if defined != fitting_subgroup(G).members:
        raise VerificationError("Fitting definer defined-set mismatch")
    return e


def defined_set_structural(G: Group, definer: Expression) -> frozenset[int]:
    """{g : iterated set-commutator of g's class vanishes}, for definers of
    the [X^{Y_1},...,X^{Y_A}] shape (arity read off the token stream)."""
    arity = int(definer.var_count - 1)
    out = set()
    from .group import conjugacy_class

    for g in range(G.order):
        cls = conjugacy_class(G, g)
        chain = iterated_set_commutator([cls] * arity)
        if chain.members == frozenset({0}):
            out.add(g)
    return frozenset(out)


def upper_definer_defined_set(G: Group, i: int) -> frozenset[int]:
    """Structural defined set of the i-th upper-Fitting definer.

    g qualifies when the exact value set of the lifted quotient definer at
    X = g (an iterated set commutator of g's class) lands inside the
    (i-1)-st defined set; the recursion bottoms out at the Fitting definer.
    """
    from .group import conjugacy_class

    series = upper_fitting_series(G)
    i = min(i, len(series) - 1)
    if i <= 1:
        arity = definer_commutator_arity(G)
        return frozenset(
            g
            for g in range(G.order)
            if iterated_set_commutator([conjugacy_class(G, g)] * arity).members == frozenset({0})
        )
    inner = upper_definer_defined_set(G, i - 1)
    q = quotient_group(G, series[i - 1])
    arity_q = definer_commutator_arity(q.group)
    out = set()
    for g in range(G.order):
        chain = iterated_set_commutator([conjugacy_class(G, g)] * arity_q)
        if chain.members <= inner:
            out.add(g)
    return frozenset(out)


def build_upper_fitting_definer(G: Group, i: int) -> Expression:
    """Definer for the i-th upper Fitting term, by quotient composition.

    The Fitting definer of G/U_{i-1} has no constants, so it lifts to G
    verbatim; it is plugged into the X-slot of the definer for U_{i-1}.
    The composed expression's X is variable 0.
    """
    if i < 1:
        raise InputError("upper Fitting definer needs i >= 1")
    series = upper_fitting_series(G)
    i = min(i, len(series) - 1)
    if i <= 1:
        return build_fitting_definer(G)
    alpha = build_upper_fitting_definer(G, i - 1)
    q = quotient_group(G, series[i - 1])
    beta_q = build_fitting_definer(q.group)
    if (beta_q.tokens >= 0).any():
        raise VerificationError("quotient Fitting definer unexpectedly has constants")
    beta_lifted = Expression(G, beta_q.tokens.copy(), beta_q.var_count)
    substitutes = [beta_lifted] + [single_var(G) for _ in range(alpha.var_count - 1)]
    e = substitute(alpha, substitutes)
    if upper_definer_defined_set(G, i) != series[i].members:
        raise VerificationError("upper Fitting definer defined-set mismatch")
    return e


def build_centralizer_definer(G: Group, h_inducer: Expression) -> Expression:
    """[X, beta] defining the centralizer of the induced subgroup."""
    if h_inducer.group is not G:
        raise InputError("inducer must live in G")
    shifted_toks = h_inducer.tokens.copy()
    negs = shifted_toks < 0
    shifted_toks[negs] -= 2  # shift all inducer variables up by one id
    beta = Expression(G, shifted_toks, h_inducer.var_count + 1)
    x = single_var(G, 0, beta.var_count)
    return commutator_expr(x, beta)


# -- file format ---------------------------------------------------------------------


def format_expression(e: Expression) -> str:
    items = []
    for t in e.tokens.tolist():
        if t >= 0:
            items.append(f"g{t}")
        else:
            u = -t - 1
            items.append(f"x{u // 2}" if u % 2 == 0 else f"X{u // 2}")
    body = " ".join(items)
    return f"group {e.group.name} vars {e.var_count}\n{body}\n"


def parse_expression(text: str, G: Group) -> Expression:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("group "):
        raise InputError("expression file must start with 'group <name> vars <n>'")
    head = lines[0].split()
    if len(head) != 4 or head[2] != "vars":
        raise InputError(f"bad expression header: {lines[0]!r}")
    var_count = int(head[3])
    toks = []
    for item in " ".join(lines[1:]).split():
        kind, num = item[0], item[1:]
        if kind == "g":
            toks.append(int(num))
        elif kind == "x":
            toks.append(var_token(int(num)))
        elif kind == "X":
            toks.append(inv_var_token(int(num)))
        else:
            raise InputError(f"bad token {item!r}")
    return Expression(G, np.array(toks, dtype=np.int32), max(var_count, 1))


def save_expression(e: Expression, path: str | Path) -> None:
    Path(path).write_text(format_expression(e), encoding="utf-8")


def load_expression(path: str | Path, G: Group) -> Expression:
    return parse_expression(Path(path).read_text(encoding="utf-8"), G)
