"""Catalog integrity and criteria-scan tests."""

from __future__ import annotations

import pytest

from groupeqn import catalog
from groupeqn import group as gc
from groupeqn.errors import InputError, NotSolvable
from groupeqn.perm import parse_permutation


@pytest.mark.parametrize("entry", catalog.CATALOG, ids=lambda e: e.name)
def test_catalog_entry_loads_as_expected(entry):
    G = catalog.load(entry.name)
    assert G.order == entry.order
    assert gc.fitting_length(G) == entry.fitting_len


def test_unknown_entry_rejected():
    with pytest.raises(InputError):
        catalog.load("nope")


def test_resolve_group_from_file(tmp_path):
    p = tmp_path / "c5.gens"
    p.write_text("degree 5\n(0 1 2 3 4)\n")
    G = catalog.resolve_group(str(p))
    assert G.order == 5


def test_scan_verdicts_match_table_membership():
    """Applicability matches the shipped Table-1 rows: the order 168, 216,
    432 entries are listed; S4, A4, D4 (and the rest) are not."""
    for entry in catalog.CATALOG:
        G = catalog.load(entry.name)
        report = catalog.scan_criteria(G, with_certificate=False)
        assert report.applicable == entry.applicable, entry.name


def test_scan_s4_details(s4):
    report = catalog.scan_criteria(s4, with_certificate=False)
    assert report.fitting_len == 3
    assert report.top_index == 2
    assert report.top_factorization == {2: 1}
    assert not report.applicable


def test_scan_g168_details(g168):
    report = catalog.scan_criteria(g168, with_certificate=True)
    assert report.fitting_len == 3
    assert report.top_index == 3
    assert report.applicable
    assert report.certificate_summary["certificate"]["K_order"] == 56


def test_scan_rejects_nonsolvable():
    gens = [parse_permutation("(0 1 2)", 5), parse_permutation("(0 1 2 3 4)", 5)]
    a5 = gc.close_generators(gens)
    with pytest.raises(NotSolvable):
        catalog.scan_criteria(a5)


def test_labels_present_for_table_rows():
    assert catalog.entry("g168").label == "[168,43]"
    assert catalog.entry("g216").label == "[216,153]"
    assert catalog.entry("g432").label == "[432,734]"
    assert catalog.entry("g72").label == "[72,40]"
