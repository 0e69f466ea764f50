from collections import Counter

import pytest
from hypothesis import given, settings

from strategies import processes
from vta.parser import parse_process
from vta.syntax import (
    FRESH, FROZEN, TICK, ZERO, Ambient, Consume, Contract, In, Par, Prefix, Repl,
    Restrict, TickAccept, count_particles, free_names, freeze, has_marks, names,
    render, rename_free, size, strip_marks, unfreeze,
)


def reference_freeze(p, mark=FROZEN):
    """The inductive clauses, written out independently of the library."""
    if isinstance(p, Restrict):
        return Restrict(p.name, p.contract, reference_freeze(p.body, mark))
    if isinstance(p, Par):
        return Par(reference_freeze(p.left, mark), reference_freeze(p.right, mark))
    if isinstance(p, Ambient):
        return Ambient(p.name, mark, p.body)
    if isinstance(p, Prefix):
        if isinstance(p.cap, Consume):
            return Prefix(Consume(mark), p.body)
        return Prefix(p.cap, reference_freeze(p.body, mark))
    return p


def inventory(p):
    """Everything but the marks: node kinds, names, capabilities, particles."""
    out = Counter()

    def walk(q):
        match q:
            case Ambient(n, _, body):
                out["amb", n] += 1
                walk(body)
            case Prefix(cap, body) | Repl(cap, body):
                out[type(q).__name__, type(cap).__name__, getattr(cap, "name", None)] += 1
                walk(body)
            case Par(l, r):
                walk(l)
                walk(r)
            case Restrict(n, _, body):
                out["new", n] += 1
                walk(body)
            case _:
                out[type(q).__name__] += 1
    walk(p)
    return out


P = parse_process


@pytest.mark.parametrize("src, expected", [
    ("consume.0 || vm[in cloud.0]", "~consume.0 || ~vm[in cloud.0]"),
    ("0", "0"),
    ("in m.consume.0", "in m.~consume.0"),
    ("(new k) (k[consume.0] || out k.consume.consume.0)",
     "(new k) (~k[consume.0] || out k.~consume.consume.0)"),
    ("!in a.consume.0 || tick.vm[0]", "!in a.consume.0 || tick.~vm[0]"),
    ("tick || tock", "tick || tock"),
])
def test_freeze_examples(src, expected):
    assert freeze(P(src)) == P(expected)


@pytest.mark.parametrize("src, expected", [
    ("~consume.0 || ~vm[in cloud.0]", "consume.0 || vm[in cloud.0]"),
    ("tock", "tock"),
    ("in m.~consume.0", "in m.consume.0"),
    ("~a[~b[0]]", "a[~b[0]]"),
])
def test_unfreeze_examples(src, expected):
    assert unfreeze(P(src)) == P(expected)


@given(processes)
@settings(max_examples=300)
def test_freeze_matches_reference(p):
    assert freeze(p) == reference_freeze(p)
    assert unfreeze(p) == reference_freeze(p, FRESH)


@given(processes)
@settings(max_examples=300)
def test_freeze_idempotent(p):
    assert freeze(freeze(p)) == freeze(p)
    assert unfreeze(unfreeze(p)) == unfreeze(p)


@given(processes)
@settings(max_examples=300)
def test_unfreeze_inverts_freeze_on_mark_free_terms(p):
    q = strip_marks(p)
    assert not has_marks(q)
    assert unfreeze(freeze(q)) == q


@given(processes)
@settings(max_examples=300)
def test_freezing_only_touches_marks(p):
    assert inventory(freeze(p)) == inventory(p)
    assert inventory(unfreeze(p)) == inventory(p)
    assert size(freeze(p)) == size(p)
    assert count_particles(freeze(p)) == count_particles(p)


@pytest.mark.parametrize("src, expected", [
    ("cloud[0] || vm[in cloud.consume.0]", {"cloud", "vm"}),
    ("0", set()),
    ("(new k) k[0]", {"k"}),
    ("~vm[open a.0]", {"vm", "a"}),
])
def test_names(src, expected):
    assert names(P(src)) == expected


@pytest.mark.parametrize("src, expected", [
    ("(new k) k[0]", set()),
    ("(new k) m[in k.0]", {"m"}),
    ("k[0] || (new k) k[0]", {"k"}),
    ("!open a.(new b) b[out a.0]", {"a"}),
])
def test_free_names(src, expected):
    assert free_names(P(src)) == expected


def test_rename_free_respects_binders():
    p = P("k[0] || (new k) k[0] || in k.0")
    assert rename_free(p, "k", "z") == P("z[0] || (new k) k[0] || in z.0")


@pytest.mark.parametrize("p, text", [
    (ZERO, "0"),
    (Ambient("vm", FROZEN, TICK), "~vm[tick]"),
    (Prefix(Consume(FRESH), ZERO), "consume.0"),
    (Prefix(TickAccept(), ZERO), "tick.0"),
    (Par(Par(ZERO, TICK), ZERO), "(0 || tick) || 0"),
    (Prefix(In("a"), Par(ZERO, ZERO)), "in a.(0 || 0)"),
    (Restrict("k", Contract(1, 2, 3), ZERO), "(new k : <1,2,3>) 0"),
    (Repl(Consume(FROZEN), ZERO), "!~consume.0"),
])
def test_render(p, text):
    assert render(p) == text


def test_contract_rejects_negative_fields():
    with pytest.raises(ValueError):
        Contract(-1, 0, 0)


def test_size_counts_nodes():
    assert size(P("tock || cloud[0] || vm[in cloud.consume.0]")) == 9
