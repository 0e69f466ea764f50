from functools import lru_cache

import pytest

from vta.derivations import (
    ORACLE_TABLES, Deriver, compare_exhaustive, compare_term, count_terms, members,
    terms_of_size, unary_builders, validate_classes,
)
from vta.parser import parse_process as P
from vta.syntax import Contract, size

C = Contract


@lru_cache(None)
def expected_count(n):
    """Leaves 0/tick/tock; 9 capabilities as prefix or guard, 4 ambients and 2
    binders over {a, b} give 24 unary constructors; Par is binary."""
    if n == 1:
        return 3
    return 24 * expected_count(n - 1) + sum(
        expected_count(k) * expected_count(n - 1 - k) for k in range(1, n - 1))


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_term_enumeration(n):
    terms = list(terms_of_size(n))
    assert len(terms) == len(set(terms)) == count_terms(n) == expected_count(n)
    assert all(size(t) == n for t in terms)


def test_size_six_universe():
    assert count_terms(6) == expected_count(6) == 25_138_512
    assert sum(count_terms(k) for k in range(1, 7)) == 26_208_930
    assert len(unary_builders(("a", "b"))) == 24


def test_derivable_consume():
    d = Deriver(ORACLE_TABLES[0], 4).derivable(P("consume.0"), None)
    assert len(d) == 1
    triples = {(m.r, m.p, m.s) for m in members(d)}
    assert (1, 0, 1) in triples
    assert (0, 0, 0) not in triples and (1, 1, 1) not in triples
    assert min(triples) == (1, 0, 1)


def test_derivable_needs_contract():
    assert not Deriver({}, 4).derivable(P("x[0]"), None)


@pytest.mark.parametrize("src", [
    "cloud[0] || vm[in cloud.consume.0]",
    "cloud[open vm.0 || vm[consume.0]]",
    "cloud[vm[out cloud.consume.0] || 0]",
    "consume.0 || tock",
])
def test_examples_agree(src):
    table = {"vm": C(1, 1, 1), "cloud": C(2, 2, 2)}
    assert compare_term(P(src), table, Deriver(table, 6)) is None


@pytest.mark.parametrize("table", ORACLE_TABLES)
def test_exhaustive_small(table):
    c = compare_exhaustive(4, table)
    assert c.terms == sum(count_terms(k) for k in range(1, 5))
    assert c.disagreements == []
    assert 0 < c.accepted < c.terms


@pytest.mark.parametrize("table", ORACLE_TABLES)
def test_class_grouping_is_sound(table):
    assert validate_classes(3, table) == []


@pytest.mark.parametrize("mutation, size_needed", [
    ("no-consume-increment", 2), ("no-amb-resource", 3), ("no-in-hosting", 4),
])
def test_mutations_disagree(mutation, size_needed):
    c = compare_exhaustive(size_needed, ORACLE_TABLES[0], mutation=mutation)
    assert c.disagreements
