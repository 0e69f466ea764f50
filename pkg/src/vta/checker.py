"""Algorithmic resource type checking.

``check`` synthesises the least judgment ``r; ok <p,s>; commitments`` for a
process against a table of declared contracts, or raises ``TypingError``
naming the premise that failed.

Hosting is tracked per ambient name as two numbers: ``hosted`` (the
largest timed load already inside some ambient of that name) and ``load``
(slots claimed by ``in`` capabilities targeting it, kappa' + 1 each, where
kappa' is the hosting capacity of the ambient that moves). Wherever both
meet, ``hosted + load <= kappa`` must hold.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Optional

from .contracts import render_env
from .syntax import (
    RESERVED_CURR, Ambient, Consume, Contract, In, Open, Out, Par, Prefix,
    Process, Repl, Restrict, TickAccept, TickIn, TickOut, Zero, render_cap,
)

MUTATIONS = ("no-consume-increment", "no-in-hosting", "no-amb-resource")


class TypingError(Exception):
    """A violated premise of a typing rule.

    ``kind`` is one of UnknownContract, HostingExceeded, ResourceExceeded,
    ReplicationCost, EnvNotOk, OpenedMover.
    """

    def __init__(self, kind, name=None, needed=None, bound=None, rule="",
                 location=(), detail=""):
        self.kind = kind
        self.name = name
        self.needed = needed
        self.bound = bound
        self.rule = rule
        self.location = tuple(location)
        self.detail = detail
        super().__init__(explain(self))

    def to_json(self) -> dict:
        return {"kind": self.kind, "name": self.name, "needed": self.needed,
                "bound": self.bound, "rule": self.rule,
                "location": list(self.location), "message": explain(self)}


def _items(d: Mapping) -> tuple:
    return tuple(sorted(d.items()))


@dataclass(frozen=True)
class Judgment:
    r: int
    p: int
    s: int
    commits: tuple = ()   # sorted (name, Contract)
    load: tuple = ()      # sorted (name, slots claimed by in-capabilities)
    hosted: tuple = ()    # sorted (name, largest s of a body named so)
    opens: frozenset = frozenset()   # names some open capability targets
    movers: frozenset = frozenset()  # ambient names whose own threads use in
    own_in: bool = False             # an in-capability runs at this level

    @property
    def commitments(self) -> dict:
        return dict(self.commits)

    @property
    def demand(self) -> dict:
        """Occupancy imposed on ambients outside the process."""
        inside = self.commitments
        return {n: d for n, d in self.load if n not in inside}

    @property
    def effect(self) -> tuple:
        return (self.r, self.p, self.s)

    def ordered_commits(self) -> list:
        return sorted(self.commits, key=lambda nt: (nt[1].as_tuple(), nt[0]))

    def render(self) -> str:
        text = f"r={self.r}; ok <{self.p},{self.s}>"
        text += "; commits: " + render_env(dict(self.ordered_commits()))
        if self.demand:
            text += "; demand: " + ", ".join(f"{n}:+{d}" for n, d in sorted(self.demand.items()))
        return text

    def to_json(self) -> dict:
        return {
            "r": self.r, "p": self.p, "s": self.s,
            "commits": {n: list(t.as_tuple()) for n, t in self.ordered_commits()},
            "demand": dict(sorted(self.demand.items())),
        }


def subsume(j: Judgment, r2: int, p2: int, s2: int) -> bool:
    """Can ``j`` be weakened to claim (r2, p2, s2)?"""
    return r2 >= j.r and p2 <= j.p and s2 >= j.s


def explain(err: TypingError) -> str:
    loc = ".".join(map(str, err.location)) or "top"
    n = err.name
    if err.kind == "UnknownContract":
        if n == RESERVED_CURR:
            msg = ("in-capability outside any ambient: T-In needs the contract of "
                   "the enclosing ambient")
        else:
            msg = f"no contract declared for ambient {n!r} (declared: {err.detail or 'none'})"
    elif err.kind == "HostingExceeded":
        if err.rule == "T-Amb":
            premise = "s <= kappa"
        else:
            premise = "tau + kappa' + 1 <= kappa"
        msg = (f"{n} lacks hosting capacity: {err.needed} slots needed, "
               f"hosting capacity {err.bound} ({err.rule} premise {premise})")
    elif err.kind == "ResourceExceeded":
        if err.rule == "T-In":
            msg = (f"{n} has too low resource capacity: needs at least {err.needed} "
                   f"at hosting capacity {err.detail}, has {err.bound} "
                   f"(T-In premise kappa * max(r, rho of curr) <= rho)")
        else:
            msg = (f"{n} has too low resource capacity: r * kappa = {err.needed} "
                   f"exceeds rho + p = {err.bound} (T-Amb premise r * kappa <= rho + p)")
    elif err.kind == "ReplicationCost":
        msg = (f"replicated process must be untimed (T-Rep requires coeffect 0): "
               f"{err.detail}")
    elif err.kind == "OpenedMover":
        msg = (f"ambient {n} is opened somewhere in scope but its own threads use in: "
               f"opening would move those in-capabilities under another ambient")
    elif err.kind == "EnvNotOk":
        msg = f"contract of {n} is not error-free: {err.detail}"
    else:
        msg = err.kind
    return f"{msg} [at {loc}]"


@dataclass
class _Ctx:
    table: dict
    curr: Optional[Contract]
    mutation: Optional[str]
    path: tuple = field(default=())

    def at(self, *idx) -> "_Ctx":
        return _Ctx(self.table, self.curr, self.mutation, self.path + idx)

    def lookup(self, n: str) -> Contract:
        t = self.table.get(n)
        if t is None:
            raise TypingError("UnknownContract", n, location=self.path,
                              detail=", ".join(sorted(self.table)))
        if t.tau > t.kappa:
            raise TypingError("EnvNotOk", n, t.tau, t.kappa, location=self.path,
                              detail=f"tau = {t.tau} > kappa = {t.kappa}")
        return t


def _check_hosting(ctx: _Ctx, commits: dict, load: dict, hosted: dict, rule: str):
    for n, t in sorted(commits.items()):
        need = hosted.get(n, 0) + load.get(n, 0)
        if need > t.kappa:
            if ctx.mutation == "no-in-hosting" and rule in ("T-In", "T-Par"):
                continue
            raise TypingError("HostingExceeded", n, need, t.kappa, rule, ctx.path)


def _check_opens(ctx: _Ctx, j: Judgment):
    clash = sorted(j.opens & j.movers)
    if clash:
        raise TypingError("OpenedMover", clash[0], rule="T-Open", location=ctx.path)


def _synth(p: Process, ctx: _Ctx) -> Judgment:
    match p:
        case Zero():
            return Judgment(0, 0, 0)
        case TickIn() | TickOut():
            return Judgment(0, 1, 0)
        case Prefix(Consume() | TickAccept() as cap, body):
            j = _synth(body, ctx.at(0))
            inc = 0 if (ctx.mutation == "no-consume-increment" and isinstance(cap, Consume)) else 1
            return replace(j, r=j.r + inc, s=max(j.s, 1))
        case Prefix(In(m), body):
            j = _synth(body, ctx.at(0))
            if ctx.curr is None:
                raise TypingError("UnknownContract", RESERVED_CURR, rule="T-In",
                                  location=ctx.path)
            t = ctx.lookup(m)
            # once inside m, the moving ambient itself asks m for curr's rho
            need = t.kappa * max(j.r, ctx.curr.rho)
            if need > t.rho:
                raise TypingError("ResourceExceeded", m, need, t.rho, "T-In",
                                  ctx.path, detail=str(t.kappa))
            load = dict(j.load)
            load[m] = load.get(m, 0) + ctx.curr.kappa + 1
            need = dict(j.hosted).get(m, 0) + load[m]
            if need > t.kappa and ctx.mutation != "no-in-hosting":
                raise TypingError("HostingExceeded", m, need, t.kappa, "T-In", ctx.path)
            return replace(j, load=_items(load), own_in=True)
        case Prefix(Out(), body):
            return _synth(body, ctx.at(0))
        case Prefix(Open(m), body):
            j = _synth(body, ctx.at(0))
            j = replace(j, opens=j.opens | {m})
            _check_opens(ctx, j)
            return j
        case Repl(cap, body):
            j = _synth(Prefix(cap, body), ctx)
            what = f"!{render_cap(cap)}"
            if j.r != 0:
                raise TypingError("ReplicationCost", needed=j.r, rule="T-Rep",
                                  location=ctx.path, detail=f"{what} requires r = {j.r}")
            if j.s != 0:
                raise TypingError("ReplicationCost", needed=j.s, rule="T-Rep",
                                  location=ctx.path,
                                  detail=f"{what} hosts {j.s} timed components")
            if j.load:
                names = ", ".join(n for n, _ in j.load)
                raise TypingError("ReplicationCost", needed=0, rule="T-Rep",
                                  location=ctx.path,
                                  detail=f"{what} claims hosting slots in {names} on every copy")
            return Judgment(0, 0, 0, j.commits, opens=j.opens, movers=j.movers)
        case Par(left, right):
            a = _synth(left, ctx.at(0))
            b = _synth(right, ctx.at(1))
            commits = dict(a.commits)
            commits.update(b.commits)
            load = dict(a.load)
            for n, d in b.load:
                load[n] = load.get(n, 0) + d
            hosted = dict(a.hosted)
            for n, h in b.hosted:
                hosted[n] = max(hosted.get(n, 0), h)
            _check_hosting(ctx, commits, load, hosted, "T-Par")
            j = Judgment(max(a.r, b.r), a.p + b.p, a.s + b.s,
                         _items(commits), _items(load), _items(hosted),
                         a.opens | b.opens, a.movers | b.movers, a.own_in or b.own_in)
            _check_opens(ctx, j)
            return j
        case Ambient(n, _, body):
            t = ctx.lookup(n)
            inner = _Ctx(ctx.table, t, ctx.mutation, ctx.path + (0,))
            j = _synth(body, inner)
            if j.s > t.kappa:
                raise TypingError("HostingExceeded", n, j.s, t.kappa, "T-Amb", ctx.path)
            if j.r * t.kappa > t.rho + j.p and ctx.mutation != "no-amb-resource":
                raise TypingError("ResourceExceeded", n, j.r * t.kappa, t.rho + j.p,
                                  "T-Amb", ctx.path)
            commits = dict(j.commits)
            commits[n] = t
            hosted = dict(j.hosted)
            hosted[n] = max(hosted.get(n, 0), j.s)
            load = dict(j.load)
            _check_hosting(ctx, {n: t}, load, hosted, "T-Amb")
            movers = j.movers | {n} if j.own_in else j.movers
            out = Judgment(t.rho, 0, j.s + 1, _items(commits), j.load, _items(hosted),
                           j.opens, movers)
            _check_opens(ctx, out)
            return out
        case Restrict(k, ann, body):
            table = dict(ctx.table)
            if ann is not None:
                table[k] = ann
            j = _synth(body, _Ctx(table, ctx.curr, ctx.mutation, ctx.path + (0,)))

            def drop(items):
                return tuple((n, v) for n, v in items if n != k)
            return Judgment(j.r, j.p, j.s, drop(j.commits), drop(j.load), drop(j.hosted),
                            j.opens - {k}, j.movers - {k}, j.own_in)
    raise ValueError(f"not a process: {p!r}")


def check(p: Process, contracts: Mapping[str, Contract],
          curr: Optional[Contract] = None, mutation: Optional[str] = None) -> Judgment:
    """Synthesise the least judgment for ``p``.

    ``curr`` is the contract of the ambient enclosing ``p``; it is needed
    only when ``p`` has an ``in`` capability outside every ambient.
    ``mutation`` deliberately breaks one rule (see ``MUTATIONS``); it exists
    to check that the property suites notice.
    """
    if mutation is not None and mutation not in MUTATIONS:
        raise ValueError(f"unknown mutation {mutation!r}")
    return _synth(p, _Ctx(dict(contracts), curr, mutation))


def well_typed(p: Process, contracts, curr=None) -> bool:
    try:
        check(p, contracts, curr)
    except TypingError:
        return False
    return True
