"""Shipped group catalog and the hardness-criteria scan."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import InputError, NotSolvable
from .group import (
    Group,
    fitting_length,
    is_solvable,
    load_group_file,
    load_group_text,
    stabilization_constant,
    upper_fitting_series,
)

VERDICT_FITL_GE4 = "applicable: Fitting length >= 4"
VERDICT_FITL3_ODD = "applicable: Fitting length 3 with non-2-group top factor"
VERDICT_INAPPLICABLE = "inapplicable"


@dataclass(frozen=True)
class CatalogEntry:
    """One shipped group: generator file plus expected invariants."""

    name: str
    filename: str
    order: int
    fitting_len: int
    applicable: bool
    label: str | None = None  # small-groups index, informational only


CATALOG: tuple[CatalogEntry, ...] = (
    CatalogEntry("c2", "c2.gens", 2, 1, False),
    CatalogEntry("c3", "c3.gens", 3, 1, False),
    CatalogEntry("c4", "c4.gens", 4, 1, False),
    CatalogEntry("c6", "c6.gens", 6, 1, False),
    CatalogEntry("c12", "c12.gens", 12, 1, False),
    CatalogEntry("s3", "s3.gens", 6, 2, False),
    CatalogEntry("a4", "a4.gens", 12, 2, False),
    CatalogEntry("d4", "d4.gens", 8, 1, False),
    CatalogEntry("q8", "q8.gens", 8, 1, False),
    CatalogEntry("s4", "s4.gens", 24, 3, False),
    CatalogEntry("sl23", "sl23.gens", 24, 2, False),
    CatalogEntry("g72", "g72.gens", 72, 2, False, "[72,40]"),
    CatalogEntry("g168", "g168.gens", 168, 3, True, "[168,43]"),
    CatalogEntry("g216", "g216.gens", 216, 3, True, "[216,153]"),
    CatalogEntry("g432", "g432.gens", 432, 4, True, "[432,734]"),
)

_GROUPS: dict[str, Group] = {}


def entry(name: str) -> CatalogEntry:
    for e in CATALOG:
        if e.name == name:
            return e
    raise InputError(f"unknown catalog group {name!r}")


def load(name: str) -> Group:
    """Load a catalog group by name (cached)."""
    if name not in _GROUPS:
        e = entry(name)
        text = resources.files(__package__).joinpath("data", e.filename).read_text("utf-8")
        G = load_group_text(text, name=e.name)
        if G.order != e.order:
            raise InputError(f"catalog group {name}: order {G.order} != expected {e.order}")
        _GROUPS[name] = G
    return _GROUPS[name]


def resolve_group(spec: str) -> Group:
    """Resolve a CLI group argument: catalog name or path to a .gens file."""
    try:
        return load(spec)
    except InputError:
        pass
    path = Path(spec)
    if path.exists():
        return load_group_file(path)
    names = ", ".join(e.name for e in CATALOG)
    raise InputError(f"unknown group {spec!r}; use a file path or one of: {names}")


def _factorize(n: int) -> dict[int, int]:
    out: dict[int, int] = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


@dataclass(frozen=True)
class ScanReport:
    """Applicability report for one group."""

    name: str
    order: int
    fitting_len: int
    top_index: int  # |G / U_{d-1}G|
    top_factorization: dict[int, int]
    stabilization_m: int
    verdict: str
    certificate_summary: dict | None

    @property
    def applicable(self) -> bool:
        return self.verdict != VERDICT_INAPPLICABLE

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "order": self.order,
            "fitting_length": self.fitting_len,
            "top_index": self.top_index,
            "top_factorization": {str(p): e for p, e in self.top_factorization.items()},
            "stabilization_m": self.stabilization_m,
            "verdict": self.verdict,
            "applicable": self.applicable,
            "certificate": self.certificate_summary,
        }


def scan_criteria(G: Group, with_certificate: bool = True) -> ScanReport:
    """Classify G against the hardness criteria (length >= 4, or length 3
    with a non-2-group top Fitting factor) and, when applicable, attach a
    summary of the search certificate."""
    if not is_solvable(G):
        raise NotSolvable(f"{G.name} is not solvable")
    d = fitting_length(G)
    if d == 0:
        top = 1
    else:
        series = upper_fitting_series(G)
        top = G.order // len(series[d - 1])
    fact = _factorize(top) if top > 1 else {}
    if d >= 4:
        verdict = VERDICT_FITL_GE4
    elif d == 3 and any(p != 2 for p in fact):
        verdict = VERDICT_FITL3_ODD
    else:
        verdict = VERDICT_INAPPLICABLE
    cert_summary = None
    if with_certificate and verdict != VERDICT_INAPPLICABLE:
        from .reduction import preprocess_theorem_main2

        pipeline = preprocess_theorem_main2(G)
        cert_summary = pipeline.summary()
    return ScanReport(
        name=G.name,
        order=G.order,
        fitting_len=d,
        top_index=top,
        top_factorization=fact,
        stabilization_m=stabilization_constant(G),
        verdict=verdict,
        certificate_summary=cert_summary,
    )
