"""Barbs and the reduction relation, with bounded state-space exploration.

Redexes are found on the canonical form of a process, so parallel
composition behaves as a multiset and restrictions never block an
interaction. Reduction is closed under parallel composition, restriction
and ambient bodies, not under prefixes or replication.
"""

from __future__ import annotations

import enum
import json
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from .congruence import _wrap, normalize, split_scope
from .syntax import (
    FRESH, FROZEN, TICK, Freshness, TOCK, Ambient, Consume, In, Open, Out, Prefix,
    Process, Repl, TickAccept, TickIn, TickOut, freeze, par,
    render, unfreeze,
)


class Rule(enum.IntEnum):
    R_IN = 0
    R_OUT = 1
    R_OPEN = 2
    TICK_TRANSLATE = 3
    CONSUME_ARM = 4
    TICK_SERVE_PROCESS = 5
    TICK_SERVE_AMBIENT = 6
    NEW_ROUND = 7
    REPL_UNFOLD = 8

    @property
    def label(self) -> str:
        return _LABELS[self]


_LABELS = {
    Rule.R_IN: "R-In",
    Rule.R_OUT: "R-Out",
    Rule.R_OPEN: "R-Open",
    Rule.TICK_TRANSLATE: "TickTranslate",
    Rule.CONSUME_ARM: "ConsumeArm",
    Rule.TICK_SERVE_PROCESS: "TickServeProcess",
    Rule.TICK_SERVE_AMBIENT: "TickServeAmbient",
    Rule.NEW_ROUND: "NewRound",
    Rule.REPL_UNFOLD: "ReplUnfold",
}


@dataclass(frozen=True)
class Step:
    """One rule instance.

    ``location`` is a path of component indices into the canonical form of
    the source: at each level the index of a parallel component, descending
    only through ambient bodies. It points at the capability that fires, or
    at the served/renewed ambient. ``via`` names the underlying rule when a
    replicated capability fires (``rule`` is then REPL_UNFOLD).
    """

    rule: Rule
    location: tuple
    successor: Process
    via: Optional[Rule] = None

    def sort_key(self):
        return (self.location, self.rule, render(self.successor))

    def describe(self) -> str:
        name = self.rule.label
        if self.via is not None:
            name += f"({self.via.label})"
        return f"{name} @ {'.'.join(map(str, self.location)) or 'top'}"


# -- barbs ------------------------------------------------------------------

def _comps_barb(comps) -> bool:
    for c in comps:
        if isinstance(c, Ambient) and c.mark is FRESH:
            return True
        if isinstance(c, (Prefix, Repl)) and isinstance(c.cap, TickAccept):
            return True
    return False


def _body_comps(body: Process) -> list:
    return split_scope(body)[1]


def barbs_tick(p: Process) -> bool:
    """Something at the top level can take a time slice right now."""
    return _comps_barb(split_scope(normalize(p))[1])


def barbs_tick_in_context(p: Process) -> bool:
    """Some evaluation context (top level or an ambient body) barbs."""
    def walk(comps):
        if _comps_barb(comps):
            return True
        return any(walk(_body_comps(c.body)) for c in comps if isinstance(c, Ambient))
    return walk(split_scope(normalize(p))[1])


# -- reduction --------------------------------------------------------------

def _candidates(comps):
    """Capability-guarded components: (index, cap, continuation, consumed?).

    A replicated guard fires a copy and stays in place.
    """
    for i, c in enumerate(comps):
        if isinstance(c, Prefix):
            yield i, c.cap, c.body, True
        elif isinstance(c, Repl):
            yield i, c.cap, c.body, False


def _replace(comps, removed, added):
    return [c for k, c in enumerate(comps) if k not in removed] + list(added)


class _Collector:
    def __init__(self, include_idle):
        self.include_idle = include_idle
        self.found = {}

    def add(self, rule, location, whole, consumed=True):
        via = None
        if not consumed:
            rule, via = Rule.REPL_UNFOLD, rule
        succ = normalize(whole)
        step = Step(rule, location, succ, via)
        self.found[(rule, location, succ, via)] = step


def _level(comps, path, rebuild, out: _Collector):
    tocks = [j for j, c in enumerate(comps) if isinstance(c, TickOut)]
    first_tock = tocks[0] if tocks else None

    for i, c in enumerate(comps):
        loc = path + (i,)
        if isinstance(c, TickIn):
            out.add(Rule.TICK_TRANSLATE, loc, rebuild(_replace(comps, {i}, [TOCK])))
        elif isinstance(c, Ambient):
            if c.mark is FRESH and first_tock is not None:
                served = Ambient(c.name, FROZEN, par(TICK, c.body))
                out.add(Rule.TICK_SERVE_AMBIENT, loc,
                        rebuild(_replace(comps, {i, first_tock}, [served])))
            body = _body_comps(c.body)
            if not _comps_barb(body):
                renewed = unfreeze(c.body)
                if renewed != c.body or out.include_idle:
                    out.add(Rule.NEW_ROUND, loc,
                            rebuild(_replace(comps, {i}, [Ambient(c.name, c.mark, renewed)])))

    for i, cap, cont, consumed in _candidates(comps):
        loc = path + (i,)
        gone = {i} if consumed else set()
        match cap:
            case Consume(mark=Freshness.FRESH):
                out.add(Rule.CONSUME_ARM, loc,
                        rebuild(_replace(comps, gone, [Prefix(TickAccept(), cont)])), consumed)
            case TickAccept():
                if first_tock is not None:
                    out.add(Rule.TICK_SERVE_PROCESS, loc,
                            rebuild(_replace(comps, gone | {first_tock}, [freeze(cont)])),
                            consumed)
            case Open(n):
                for j, d in enumerate(comps):
                    if j != i and isinstance(d, Ambient) and d.name == n:
                        out.add(Rule.R_OPEN, loc,
                                rebuild(_replace(comps, gone | {j}, [cont, freeze(d.body)])),
                                consumed)

    for i, c in enumerate(comps):
        if not isinstance(c, Ambient):
            continue
        body = _body_comps(c.body)
        # R-In: c moves into a sibling
        for k, cap, cont, consumed in _candidates(body):
            if not isinstance(cap, In):
                continue
            rest = _replace(body, {k} if consumed else set(), [cont])
            mover = Ambient(c.name, FROZEN, par(*rest))
            for j, d in enumerate(comps):
                if j != i and isinstance(d, Ambient) and d.name == cap.name:
                    host = Ambient(d.name, d.mark, par(d.body, mover))
                    out.add(Rule.R_IN, path + (i, k),
                            rebuild(_replace(comps, {i, j}, [host])), consumed)
        # R-Out: a child of c leaves c
        for k, child in enumerate(body):
            if not isinstance(child, Ambient):
                continue
            cbody = _body_comps(child.body)
            for l, cap, cont, consumed in _candidates(cbody):
                if not (isinstance(cap, Out) and cap.name == c.name):
                    continue
                rest = _replace(cbody, {l} if consumed else set(), [cont])
                leaver = Ambient(child.name, FROZEN, par(*rest))
                host = Ambient(c.name, c.mark, par(*_replace(body, {k}, [])))
                out.add(Rule.R_OUT, path + (i, k, l),
                        rebuild(_replace(comps, {i}, [leaver, host])), consumed)
        # context closure under the ambient
        def sub(new_body, i=i, c=c):
            return rebuild(_replace(comps, {i}, [Ambient(c.name, c.mark, par(*new_body))]))
        _level(body, path + (i,), sub, out)


def enumerate_steps(p: Process, include_idle: bool = False) -> list:
    """All single steps from ``p``, sorted leftmost first.

    New-round steps that leave the term unchanged (nothing frozen at the
    ambient's top level) are omitted unless ``include_idle`` is set.
    """
    binders, comps = split_scope(normalize(p))

    def rebuild(new_comps):
        return _wrap(binders, par(*new_comps))

    out = _Collector(include_idle)
    _level(comps, (), rebuild, out)
    return sorted(out.found.values(), key=Step.sort_key)


def is_terminal(p: Process) -> bool:
    return not enumerate_steps(p)


def step_deterministic(p: Process, policy: str = "leftmost",
                       rng: Optional[random.Random] = None) -> Optional[Step]:
    """Pick one step. ``policy`` is ``"leftmost"`` or ``"random:SEED"``.

    For a reproducible multi-step run under a random policy pass the same
    ``rng`` on every call; without one a generator is seeded from the policy.
    """
    steps = enumerate_steps(p)
    if not steps:
        return None
    if policy == "leftmost":
        return steps[0]
    kind, _, seed = policy.partition(":")
    if kind != "random" or not seed.lstrip("-").isdigit():
        raise ValueError(f"unknown policy {policy!r}")
    rng = rng or random.Random(int(seed))
    return steps[rng.randrange(len(steps))]


# -- exploration ------------------------------------------------------------

@dataclass
class TraceGraph:
    root: Process
    states: list = field(default_factory=list)     # canonical processes, id = index
    edges: list = field(default_factory=list)      # (src id, Step, dst id)
    depth: dict = field(default_factory=dict)      # id -> BFS depth
    frontier: set = field(default_factory=set)     # ids never expanded
    truncated: bool = False

    def index(self, p: Process) -> Optional[int]:
        return self._ids.get(normalize(p)) if hasattr(self, "_ids") else None

    def successors(self, i: int) -> list:
        return [(step, j) for s, step, j in self.edges if s == i]

    def to_json(self) -> dict:
        return {
            "root": 0,
            "states": [render(s) for s in self.states],
            "edges": [
                {"from": s, "rule": step.rule.label,
                 "via": step.via.label if step.via is not None else None,
                 "location": list(step.location), "to": d}
                for s, step, d in self.edges
            ],
            "frontier": sorted(self.frontier),
            "truncated": self.truncated,
        }

    def to_dot(self) -> str:
        lines = ["digraph trace {", "  node [shape=box, fontname=monospace];"]
        for i, s in enumerate(self.states):
            style = ", style=dashed" if i in self.frontier else ""
            lines.append(f"  s{i} [label={json.dumps(render(s))}{style}];")
        for s, step, d in self.edges:
            lines.append(f"  s{s} -> s{d} [label={json.dumps(step.describe())}];")
        lines.append("}")
        return "\n".join(lines) + "\n"


def explore(p: Process, max_depth: int, max_states: int,
            include_idle: bool = False) -> TraceGraph:
    """Breadth-first exploration over canonical states.

    A state is left in ``frontier`` when it sits at ``max_depth`` with steps
    still enabled, or when the state budget ran out before it was expanded;
    either way ``truncated`` is set.
    """
    if max_depth < 0 or max_states < 1:
        raise ValueError("bounds must be positive")
    root = normalize(p)
    g = TraceGraph(root)
    g._ids = {root: 0}
    g.states.append(root)
    g.depth[0] = 0
    queue = deque([0])
    while queue:
        i = queue.popleft()
        state = g.states[i]
        steps = enumerate_steps(state, include_idle)
        if not steps:
            continue
        if g.depth[i] >= max_depth:
            g.frontier.add(i)
            g.truncated = True
            continue
        for step in steps:
            j = g._ids.get(step.successor)
            if j is None:
                if len(g.states) >= max_states:
                    g.frontier.add(i)
                    g.truncated = True
                    continue
                j = len(g.states)
                g._ids[step.successor] = j
                g.states.append(step.successor)
                g.depth[j] = g.depth[i] + 1
                queue.append(j)
            g.edges.append((i, step, j))
    return g
