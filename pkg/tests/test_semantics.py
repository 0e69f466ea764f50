import random
from collections import Counter
from functools import lru_cache

import pytest
from hypothesis import given, settings
import hypothesis.strategies as s

from strategies import annotated, processes
from helpers import component_at, expected_particles
from strategies import marks, names
from test_syntax import reference_freeze
from vta.congruence import _wrap, normalize, split_scope
from vta.metatheory import congruent_variant
from vta.parser import parse_process as P
from vta.semantics import (
    Rule, barbs_tick, barbs_tick_in_context, enumerate_steps, explore,
    is_terminal, step_deterministic,
)
from vta.syntax import (
    FRESH, FROZEN, TOCK, Ambient, Open, Par, Prefix, Repl, Restrict, TickAccept,
    count_particles, par, render,
)

EXAMPLE1 = "tock || cloud[0] || vm[in cloud.consume.0]"


def ambient_marks(p):
    """Multiset of (name, mark) over every ambient in ``p``."""
    out = Counter()

    def walk(q):
        match q:
            case Ambient(n, mark, body):
                out[n, mark] += 1
                walk(body)
            case Par(l, r):
                walk(l)
                walk(r)
            case Restrict(_, _, body) | Prefix(_, body) | Repl(_, body):
                walk(body)
    walk(p)
    return out


@pytest.mark.parametrize("src, expected", [
    ("tick.0 || 0", True),
    ("~vm[consume.0]", False),
    ("(new n) n[0]", True),
    ("tick", False),
    ("!tick.0", True),
    ("in a.tick.0", False),
])
def test_barbs_tick(src, expected):
    assert barbs_tick(P(src)) is expected


@pytest.mark.parametrize("src, expected", [
    ("~cloud[vm[0]]", True),
    ("0", False),
    ("cloud[0]", True),
    ("~a[~b[tick || consume.0]]", False),
    ("~a[~b[tick.0]]", True),
])
def test_barbs_tick_in_context(src, expected):
    assert barbs_tick_in_context(P(src)) is expected


def test_example1_has_three_steps():
    steps = enumerate_steps(P(EXAMPLE1))
    assert Counter(s.rule for s in steps) == {Rule.TICK_SERVE_AMBIENT: 2, Rule.R_IN: 1}
    succ = {render(s.successor) for s in steps}
    assert succ == {"vm[in cloud.consume.0] || ~cloud[tick]",
                    "cloud[0] || ~vm[in cloud.consume.0 || tick]",
                    "cloud[~vm[consume.0]] || tock"}


def test_hand_applied_fixture():
    steps = enumerate_steps(P("~cloud[tock || 0 || ~vm[consume.0]]"))
    assert [(s.rule, s.location) for s in steps] == [
        (Rule.NEW_ROUND, (0,)), (Rule.CONSUME_ARM, (0, 1, 0))]
    assert [s.successor for s in steps] == [
        normalize(P("~cloud[tock || vm[consume.0]]")),
        normalize(P("~cloud[tock || ~vm[tick.0]]"))]


@pytest.mark.parametrize("src, rule, succ", [
    ("tick", Rule.TICK_TRANSLATE, "tock"),
    ("consume.in a.0", Rule.CONSUME_ARM, "tick.in a.0"),
    ("tock || tick.(consume.0 || b[0])", Rule.TICK_SERVE_PROCESS, "~consume.0 || ~b[0]"),
    ("tock || b[0]", Rule.TICK_SERVE_AMBIENT, "~b[tick]"),
    ("a[in b.0 || c[0]] || b[0]", Rule.R_IN, "b[~a[c[0]]]"),
    ("b[a[out b.consume.0]]", Rule.R_OUT, "~a[consume.0] || b[0]"),
    ("open a.0 || a[consume.0 || c[0]]", Rule.R_OPEN, "~consume.0 || ~c[0]"),
])
def test_single_rules(src, rule, succ):
    steps = [s for s in enumerate_steps(P(src)) if s.rule is rule]
    assert len(steps) == 1
    assert steps[0].successor == normalize(P(succ))


def test_new_round_keeps_ambient_mark():
    for mark in ("", "~"):
        steps = enumerate_steps(P(f"{mark}a[~b[0] || ~consume.0]"))
        assert [s.rule for s in steps] == [Rule.NEW_ROUND]
        assert steps[0].successor == P(f"{mark}a[b[0] || consume.0]")


def test_idle_new_round_is_opt_in():
    p = P("a[0]")
    assert enumerate_steps(p) == []
    assert [s.rule for s in enumerate_steps(p, include_idle=True)] == [Rule.NEW_ROUND]


def test_replication_unfolds_once_and_stays():
    steps = enumerate_steps(P("a[!out b.0] || 0"))
    assert steps == []
    steps = enumerate_steps(P("b[a[!out b.consume.0]]"))
    assert [(s.rule, s.via) for s in steps] == [(Rule.REPL_UNFOLD, Rule.R_OUT)]
    assert steps[0].successor == normalize(P("~a[!out b.consume.0 || consume.0] || b[0]"))


def test_deterministic_examples():
    assert step_deterministic(P("tick")).successor == P("tock")
    assert step_deterministic(P("0")) is None
    first = step_deterministic(P(EXAMPLE1))
    assert first.rule is Rule.TICK_SERVE_AMBIENT
    assert component_at(P(EXAMPLE1), first.location).name == "cloud"


def test_random_policy_is_seeded():
    p = P(EXAMPLE1)

    def run(seed):
        rng, state, out = random.Random(seed), p, []
        while (step := step_deterministic(state, f"random:{seed}", rng)) is not None:
            out.append(step.describe())
            state = step.successor
        return out
    assert run(7) == run(7)
    assert len({tuple(run(k)) for k in range(20)}) > 1
    with pytest.raises(ValueError):
        step_deterministic(p, "rightmost")


@pytest.mark.parametrize("src, expected", [
    ("0", True), ("consume.0", False), ("~cloud[0 || ~vm[0]]", False),
    ("~cloud[vm[0]]", True),
])
def test_is_terminal(src, expected):
    assert is_terminal(P(src)) is expected


def test_frozen_fixpoint():
    # ~cloud[0 || ~vm[0]] renews once, then waits for a tock forever
    steps = enumerate_steps(P("~cloud[0 || ~vm[0]]"))
    assert [s.rule for s in steps] == [Rule.NEW_ROUND]
    assert is_terminal(steps[0].successor)
    assert steps[0].successor == P("~cloud[vm[0]]")


def test_explore_bounds():
    g = explore(P("0"), 5, 10)
    assert (len(g.states), len(g.edges), g.truncated) == (1, 0, False)
    g = explore(P("!in a.0"), 2, 100)
    assert len(g.states) == 1 and not g.truncated
    g = explore(P(EXAMPLE1), 1, 10_000)
    assert g.truncated and g.frontier
    g = explore(P(EXAMPLE1), 30, 5)
    assert g.truncated and len(g.states) == 5
    with pytest.raises(ValueError):
        explore(P("0"), -1, 5)


def test_trace_exports():
    g = explore(P(EXAMPLE1), 2, 100)
    data = g.to_json()
    assert data["root"] == 0 and data["states"][0] == render(g.root)
    assert all({"from", "rule", "location", "to"} <= set(e) for e in data["edges"])
    assert all(0 <= e["from"] < len(data["states"]) and 0 <= e["to"] < len(data["states"])
               for e in data["edges"])
    dot = g.to_dot()
    assert dot.startswith("digraph trace {") and dot.count("->") == len(g.edges)


def test_example1_every_trace_arms_consume_once():
    g = explore(P(EXAMPLE1), 40, 10_000)
    assert not g.truncated

    @lru_cache(None)
    def arms(i):
        succ = g.successors(i)
        if not succ:
            return frozenset({0})
        return frozenset(k + (st.rule is Rule.CONSUME_ARM)
                         for st, j in succ for k in arms(j))
    assert arms(0) == {1}


@given(processes)
@settings(max_examples=300, deadline=None)
def test_tick_conservation(p):
    for step in enumerate_steps(p, include_idle=True):
        assert count_particles(step.successor) == expected_particles(p, step)


@given(processes)
@settings(max_examples=300, deadline=None)
def test_rule_sites(p):
    src = normalize(p)
    for step in enumerate_steps(p):
        node = component_at(src, step.location)
        match step.rule:
            case Rule.TICK_SERVE_AMBIENT:
                assert isinstance(node, Ambient) and node.mark is FRESH
                before, after = ambient_marks(src), ambient_marks(step.successor)
                assert after[node.name, FROZEN] == before[node.name, FROZEN] + 1
                assert after[node.name, FRESH] == before[node.name, FRESH] - 1
            case Rule.NEW_ROUND:
                assert isinstance(node, Ambient) and not barbs_tick(node.body)
            case Rule.CONSUME_ARM:
                assert isinstance(node, Prefix) and node.cap.mark is FRESH


redexes = s.one_of(
    s.builds(lambda n, m, x, y, rest: Par(Par(Prefix(Open(n), x), Ambient(n, m, y)), rest),
             names, marks, processes, processes, processes),
    s.builds(lambda x, rest: Par(Par(TOCK, Prefix(TickAccept(), x)), rest),
             processes, processes),
)


@given(redexes)
@settings(max_examples=300, deadline=None)
def test_open_and_serve_freeze_like_syntax_core(p):
    """Top-level R-Open and tick-accept steps, rebuilt by hand from the components."""
    binders, comps = split_scope(normalize(p))
    for step in enumerate_steps(p):
        if step.rule not in (Rule.R_OPEN, Rule.TICK_SERVE_PROCESS) or len(step.location) != 1:
            continue
        i = step.location[0]
        node = comps[i]
        rest = [c for k, c in enumerate(comps) if k != i]
        if step.rule is Rule.R_OPEN:
            expected = {
                normalize(_wrap(binders, par(*(rest[:k] + rest[k + 1:]), node.body,
                                             reference_freeze(d.body))))
                for k, d in enumerate(rest)
                if isinstance(d, Ambient) and d.name == node.cap.name}
        else:
            expected = {
                normalize(_wrap(binders, par(*(rest[:k] + rest[k + 1:]),
                                             reference_freeze(node.body))))
                for k, d in enumerate(rest) if d == TOCK}
        assert step.successor in expected


@given(annotated, s.integers(0, 2**32))
@settings(max_examples=300, deadline=None)
def test_congruence_closure(p, seed):
    q = congruent_variant(random.Random(seed), p)

    def image(x):
        return {(st.rule, st.via, st.successor) for st in enumerate_steps(x)}
    assert image(p) == image(q)
