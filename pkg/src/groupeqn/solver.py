"""Independent brute-force oracles: equation satisfiability/identity,
graph colorability, and truth-table checks for G-programs.

These are deliberately naive; they exist to verify everything else.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceeded, InputError
from .expr import Expression, evaluate_many


@dataclass(frozen=True)
class SolveBudget:
    """Caps for exhaustive searches."""

    max_assignments: int = 1_000_000

    def __post_init__(self) -> None:
        if self.max_assignments <= 0:
            raise InputError("budget must be positive")


def _budget(budget: SolveBudget | int | None) -> SolveBudget:
    if budget is None:
        return SolveBudget()
    if isinstance(budget, int):
        return SolveBudget(budget)
    return budget


_CHUNK = 1 << 15


def _assignment_space(e: Expression, budget: SolveBudget) -> tuple[list[int], int]:
    free = [int(v) for v in e.used_vars()]
    order = e.group.order
    # log-space guard first: |G|^free can have hundreds of thousands of digits
    if free and order > 1:
        if len(free) * math.log(order) > math.log(budget.max_assignments) + 1e-9:
            raise BudgetExceeded(
                f"{order}^{len(free)} assignments exceed budget {budget.max_assignments}"
            )
    return free, order ** len(free)


def _sigma_block(e: Expression, free: list[int], start: int, stop: int) -> np.ndarray:
    n = e.group.order
    sigma = np.zeros((stop - start, max(e.var_count, 1)), dtype=np.int64)
    if free:
        grids = np.unravel_index(np.arange(start, stop), (n,) * len(free))
        for var, col in zip(free, grids):
            sigma[:, var] = col
    return sigma


@dataclass(frozen=True)
class SatResult:
    satisfiable: bool
    witness: dict[int, int] | None


def eqnsat_bruteforce(e: Expression, budget: SolveBudget | int | None = None) -> SatResult:
    """Exhaustive satisfiability: is there sigma with sigma(e) = 1?

    Assignments are enumerated in mixed-radix order over ascending
    variable ids, so the returned witness is deterministic (the least).
    """
    b = _budget(budget)
    free, total = _assignment_space(e, b)
    for start in range(0, total, _CHUNK):
        stop = min(start + _CHUNK, total)
        sigma = _sigma_block(e, free, start, stop)
        vals = evaluate_many(e, sigma)
        hits = np.nonzero(vals == 0)[0]
        if hits.size:
            row = sigma[int(hits[0])]
            return SatResult(True, {v: int(row[v]) for v in free})
    return SatResult(False, None)


@dataclass(frozen=True)
class IdResult:
    is_identity: bool
    counterexample: dict[int, int] | None


def eqnid_bruteforce(e: Expression, budget: SolveBudget | int | None = None) -> IdResult:
    """Exhaustive identity check: does sigma(e) = 1 for every sigma?"""
    b = _budget(budget)
    free, total = _assignment_space(e, b)
    for start in range(0, total, _CHUNK):
        stop = min(start + _CHUNK, total)
        sigma = _sigma_block(e, free, start, stop)
        vals = evaluate_many(e, sigma)
        bad = np.nonzero(vals != 0)[0]
        if bad.size:
            row = sigma[int(bad[0])]
            return IdResult(False, {v: int(row[v]) for v in free})
    return IdResult(True, None)


@dataclass(frozen=True)
class ColorResult:
    colorable: bool
    coloring: list[int] | None


def color_bruteforce(graph, budget: SolveBudget | int | None = None) -> ColorResult:
    """Exhaustive C-coloring search; first valid coloring in counting order."""
    b = _budget(budget)
    n, C = graph.vertex_count, graph.colors
    if n and n * math.log(C) > math.log(b.max_assignments) + 1e-9:
        raise BudgetExceeded(f"{C}^{n} colorings exceed budget {b.max_assignments}")
    total = C ** n
    edges = list(graph.edges)
    for start in range(0, total, _CHUNK):
        stop = min(start + _CHUNK, total)
        block = np.empty((stop - start, max(n, 1)), dtype=np.int64)
        if n:
            grids = np.unravel_index(np.arange(start, stop), (C,) * n)
            for v, col in enumerate(grids):
                block[:, v] = col
        ok = np.ones(stop - start, dtype=bool)
        for u, v in edges:
            ok &= block[:, u] != block[:, v]
        hits = np.nonzero(ok)[0]
        if hits.size:
            return ColorResult(True, block[int(hits[0])][:n].tolist())
    return ColorResult(False, None)


def check_function(program, table: np.ndarray, accepting: set[int]) -> bool:
    """Does the program compute the boolean function given by its truth table?

    ``table`` has 2^n entries indexed by the input bits read as a binary
    number (bit 0 most significant); acceptance means the program value
    lies in ``accepting``.
    """
    n = program.input_count
    if n > 20:
        raise BudgetExceeded("truth-table check capped at 20 inputs")
    if len(table) != 2 ** n:
        raise InputError("truth table size mismatch")
    values = program.eval_all()
    got = np.isin(values, np.fromiter(accepting, dtype=np.int64, count=len(accepting)))
    return bool(np.array_equal(got, np.asarray(table, dtype=bool)))
