"""Declarative derivations, enumerated by brute force.

``derivable`` builds every judgment the typing rules can derive for a term,
with subsumption applied after every rule, up to a numeric bound. It shares
no code with the algorithmic checker; ``compare_exhaustive`` runs both over
every small term and reports disagreements.

Subsumption may raise r and s and lower p at any point, and T-Par then
needs both branches at the same r. Contracts are taken as declared (no
subtyping of assumed contracts), because a looser contract would let a
derivation invent hosting or resource capacity an ambient does not have.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .checker import TypingError, check
from .syntax import (
    FRESH, FROZEN, TICK, TOCK, ZERO, Ambient, Consume, Contract, In, Open, Out,
    Par, Prefix, Process, Repl, Restrict, TickAccept, TickIn, TickOut, Zero,
    render,
)


@dataclass(frozen=True)
class Derived:
    """One derivable judgment; mappings are sorted tuples of pairs."""

    r: int
    p: int
    s: int
    commits: tuple = ()
    load: tuple = ()
    hosted: tuple = ()
    opens: frozenset = frozenset()
    movers: frozenset = frozenset()
    own_in: bool = False

    @property
    def rest(self) -> tuple:
        return (self.commits, self.load, self.hosted, self.opens, self.movers, self.own_in)


# A derivable set is held as {rest: frozenset of (r, p, s)}, where rest is
# everything but the three numbers; subsumption only moves the numbers.
_EMPTY_REST = ((), (), (), frozenset(), frozenset(), False)


def _close(triples, bound: int) -> frozenset:
    """Every weakening of the triples that stays within ``bound``."""
    out = set()
    for r0, p0, s0 in triples:
        for r in range(r0, bound + 1):
            for s in range(s0, bound + 1):
                for p in range(p0 + 1):
                    out.add((r, p, s))
    return frozenset(out)


def _merge_max(a: tuple, b: tuple) -> tuple:
    m = dict(a)
    for k, v in b:
        m[k] = max(m.get(k, 0), v)
    return tuple(sorted(m.items()))


def _merge_sum(a: tuple, b: tuple) -> tuple:
    m = dict(a)
    for k, v in b:
        m[k] = m.get(k, 0) + v
    return tuple(sorted(m.items()))


def _hosting_ok(commits: tuple, load: tuple, hosted: tuple) -> bool:
    ld, hs = dict(load), dict(hosted)
    return all(hs.get(n, 0) + ld.get(n, 0) <= t.kappa for n, t in commits)


def _add(out: dict, rest, triple):
    out.setdefault(rest, set()).add(triple)


def members(dset: dict):
    """The derivable judgments of a derivable set, one by one."""
    for rest, triples in dset.items():
        for r, p, s in triples:
            yield Derived(r, p, s, *rest)


class Deriver:
    """Memoised enumeration of derivable judgments under one contract table."""

    def __init__(self, table: dict, bound: int):
        self.table = dict(table)
        self.bound = bound
        self._memo = {}

    def derivable(self, p: Process, curr: Optional[Contract] = None) -> dict:
        key = (p, curr)
        hit = self._memo.get(key)
        if hit is None:
            base = self._rules(p, curr)
            hit = self._memo[key] = {rest: _close(ts, self.bound)
                                     for rest, ts in base.items() if ts}
        return hit

    def frozen(self, p: Process, curr: Optional[Contract] = None) -> frozenset:
        return frozenset(self.derivable(p, curr).items())

    def _contract(self, n):
        t = self.table.get(n)
        if t is None or t.tau > t.kappa:
            return None
        return t

    def _rules(self, p: Process, curr) -> dict:
        B = self.bound
        out = {}
        match p:
            case Zero():
                _add(out, _EMPTY_REST, (0, 0, 0))
            case TickIn() | TickOut():
                _add(out, _EMPTY_REST, (0, 1, 0))
            case Prefix(Consume() | TickAccept(), body):
                for rest, ts in self.derivable(body, curr).items():
                    for r, q, s in ts:
                        if r + 1 <= B:
                            _add(out, rest, (r + 1, q, max(s, 1)))
            case Prefix(In(m), body):
                t = self._contract(m)
                if curr is None or t is None:
                    return out
                for (commits, load, hosted, opens, movers, _), ts in self.derivable(body, curr).items():
                    load2 = _merge_sum(load, ((m, curr.kappa + 1),))
                    if dict(hosted).get(m, 0) + dict(load2)[m] > t.kappa:
                        continue
                    rest = (commits, load2, hosted, opens, movers, True)
                    for r, q, s in ts:
                        if t.kappa * max(r, curr.rho) <= t.rho:
                            _add(out, rest, (r, q, s))
            case Prefix(Out(), body):
                for rest, ts in self.derivable(body, curr).items():
                    out[rest] = set(ts)
            case Prefix(Open(m), body):
                for (commits, load, hosted, opens, movers, own), ts in self.derivable(body, curr).items():
                    if m not in movers:
                        out[(commits, load, hosted, opens | {m}, movers, own)] = set(ts)
            case Repl(cap, body):
                if not isinstance(cap, (In, Out, Open)):
                    return out
                for (commits, load, hosted, opens, movers, _), ts in \
                        self.derivable(Prefix(cap, body), curr).items():
                    if load:
                        continue
                    if any(r == 0 and s == 0 for r, _, s in ts):
                        _add(out, (commits, (), (), opens, movers, False), (0, 0, 0))
            case Par(left, right):
                for ra, ta in self.derivable(left, curr).items():
                    for rb, tb in self.derivable(right, curr).items():
                        commits = tuple(sorted(dict(ra[0] + rb[0]).items()))
                        load = _merge_sum(ra[1], rb[1])
                        hosted = _merge_max(ra[2], rb[2])
                        opens, movers = ra[3] | rb[3], ra[4] | rb[4]
                        if not _hosting_ok(commits, load, hosted) or opens & movers:
                            continue
                        rest = (commits, load, hosted, opens, movers, ra[5] or rb[5])
                        by_r = {}
                        for r, q, s in tb:
                            by_r.setdefault(r, []).append((q, s))
                        for r, q1, s1 in ta:
                            for q2, s2 in by_r.get(r, ()):
                                if q1 + q2 <= B and s1 + s2 <= B:
                                    _add(out, rest, (r, q1 + q2, s1 + s2))
            case Ambient(n, _, body):
                t = self._contract(n)
                if t is None:
                    return out
                for (commits, load, hosted, opens, movers, own), ts in self.derivable(body, t).items():
                    commits2 = tuple(sorted({**dict(commits), n: t}.items()))
                    movers2 = movers | {n} if own else movers
                    if opens & movers2:
                        continue
                    for r, q, s in ts:
                        if s > t.kappa or r * t.kappa > t.rho + q or s + 1 > B:
                            continue
                        hosted2 = _merge_max(hosted, ((n, s),))
                        if _hosting_ok(((n, t),), load, hosted2):
                            _add(out, (commits2, load, hosted2, opens, movers2, False),
                                 (t.rho, 0, s + 1))
            case Restrict(k, ann, body):
                if ann is not None and ann != self.table.get(k):
                    base = Deriver({**self.table, k: ann}, B).derivable(body, curr)
                else:
                    base = self.derivable(body, curr)

                def drop(items):
                    return tuple((n, v) for n, v in items if n != k)
                for (commits, load, hosted, opens, movers, own), ts in base.items():
                    rest = (drop(commits), drop(load), drop(hosted),
                            opens - {k}, movers - {k}, own)
                    out.setdefault(rest, set()).update(ts)
            case _:
                raise ValueError(f"not a process: {p!r}")
        return out


# -- the term universe ------------------------------------------------------

def _caps(pool):
    caps = [c(n) for c in (In, Out, Open) for n in pool]
    return caps + [Consume(FRESH), Consume(FROZEN), TickAccept()]


def unary_builders(pool):
    """Constructors taking one subterm, for the exhaustive universe."""
    out = []
    for cap in _caps(pool):
        out.append(lambda q, cap=cap: Prefix(cap, q))
        out.append(lambda q, cap=cap: Repl(cap, q))
    for n in pool:
        for mark in (FRESH, FROZEN):
            out.append(lambda q, n=n, mark=mark: Ambient(n, mark, q))
        out.append(lambda q, n=n: Restrict(n, None, q))
    return out


LEAVES = (ZERO, TICK, TOCK)


def terms_of_size(n: int, pool=("a", "b")):
    """Every term with exactly ``n`` nodes (a generator)."""
    if n == 1:
        yield from LEAVES
        return
    builders = unary_builders(pool)
    for q in terms_of_size(n - 1, pool):
        for b in builders:
            yield b(q)
    for k in range(1, n - 1):
        for l in terms_of_size(k, pool):
            for r in terms_of_size(n - 1 - k, pool):
                yield Par(l, r)


def count_terms(n: int, pool=("a", "b")) -> int:
    counts = {1: len(LEAVES)}
    u = len(unary_builders(pool))
    for m in range(2, n + 1):
        counts[m] = u * counts[m - 1] + sum(counts[k] * counts[m - 1 - k] for k in range(1, m - 1))
    return counts[n]


# -- comparison -------------------------------------------------------------

@dataclass
class Comparison:
    terms: int = 0
    classes: int = 0
    accepted: int = 0
    disagreements: list = field(default_factory=list)

    def to_json(self):
        return {"terms": self.terms, "classes": self.classes, "accepted": self.accepted,
                "disagreements": self.disagreements}


def _alg(p, table, curr, mutation=None):
    try:
        j = check(p, table, curr, mutation)
    except TypingError:
        return None
    return Derived(j.r, j.p, j.s, j.commits, j.load, j.hosted, j.opens, j.movers, j.own_in)


def _verdict(alg, derived: dict) -> Optional[str]:
    """None when the checker and the derivations agree."""
    if alg is None:
        return None if not derived else "checker rejects a derivable term"
    triples = derived.get(alg.rest, frozenset())
    if (alg.r, alg.p, alg.s) not in triples:
        return "checker judgment is not derivable"
    if any(not (r >= alg.r and s >= alg.s and p <= alg.p) for r, p, s in triples):
        return "checker judgment is not the least derivable one"
    return None


def _contexts(table):
    return [None] + [table[n] for n in sorted(table)]


def signature(p, table, deriver: Deriver, mutation=None) -> tuple:
    return tuple((_alg(p, table, c, mutation), deriver.frozen(p, c))
                 for c in _contexts(table))


def compare_term(p, table, deriver: Deriver, mutation=None) -> Optional[str]:
    """Top-level agreement for one term (curr undefined)."""
    return _verdict(_alg(p, table, None, mutation), deriver.derivable(p, None))


def compare_exhaustive(max_size: int, table: dict, pool=("a", "b"),
                       bound: int = 8, mutation: Optional[str] = None) -> Comparison:
    """Agreement on every term up to ``max_size`` nodes.

    Terms are grouped into classes that share both the checker's result and
    the derivable set in every context where they can occur. Both systems
    are compositional, so one representative per class decides the class
    and the class's multiplicity counts its members. ``validate_classes``
    cross-checks the grouping term by term at small sizes.
    """
    deriver = Deriver(table, bound)
    builders = unary_builders(pool)
    # size -> {signature: (representative, multiplicity)}
    levels = {}
    result = Comparison()

    def add(level, q, mult):
        sig = signature(q, table, deriver, mutation)
        if sig in level:
            rep, m = level[sig]
            level[sig] = (rep, m + mult)
        else:
            level[sig] = (q, mult)

    for n in range(1, max_size + 1):
        level = {}
        if n == 1:
            for leaf in LEAVES:
                add(level, leaf, 1)
        else:
            for q, m in levels[n - 1].values():
                for b in builders:
                    add(level, b(q), m)
            for k in range(1, n - 1):
                for l, ml in levels[k].values():
                    for r, mr in levels[n - 1 - k].values():
                        add(level, Par(l, r), ml * mr)
        levels[n] = level
        for q, m in level.values():
            result.terms += m
            result.classes += 1
            verdict = compare_term(q, table, deriver, mutation)
            if _alg(q, table, None, mutation) is not None:
                result.accepted += m
            if verdict is not None:
                result.disagreements.append({"term": render(q), "size": n,
                                             "members": m, "reason": verdict})
    return result


def validate_classes(max_size: int, table: dict, pool=("a", "b"), bound: int = 8) -> list:
    """Terms that disagree, or that leave their class when rebuilt.

    Every term is compared directly, then rebuilt from the class
    representatives of its children; the rebuilt term must land in the same
    class. An empty list means the grouping used by ``compare_exhaustive``
    is sound up to ``max_size``.
    """
    deriver = Deriver(table, bound)
    rep_of = {}
    problems = []
    for n in range(1, max_size + 1):
        for t in terms_of_size(n, pool):
            sig = signature(t, table, deriver)
            rep_of.setdefault(sig, t)
            if compare_term(t, table, deriver) is not None:
                problems.append(render(t))
            kids = _children(t)
            if not kids:
                continue
            reps = [rep_of[signature(c, table, deriver)] for c in kids]
            if signature(_rebuild(t, reps), table, deriver) != sig:
                problems.append(render(t))
    return problems


def _children(t):
    match t:
        case Par(l, r):
            return [l, r]
        case Prefix(_, b) | Repl(_, b) | Ambient(_, _, b) | Restrict(_, _, b):
            return [b]
    return []


def _rebuild(t, kids):
    match t:
        case Par():
            return Par(*kids)
        case Prefix(cap, _):
            return Prefix(cap, kids[0])
        case Repl(cap, _):
            return Repl(cap, kids[0])
        case Ambient(n, m, _):
            return Ambient(n, m, kids[0])
        case Restrict(n, ann, _):
            return Restrict(n, ann, kids[0])
    return t


ORACLE_TABLES = (
    {"a": Contract(1, 1, 1), "b": Contract(2, 2, 2)},
    {"a": Contract(0, 0, 0), "b": Contract(3, 2, 2)},
    {"a": Contract(2, 1, 1), "b": Contract(1, 3, 3)},
)


def oracle_summary(max_size: int = 6, tables=ORACLE_TABLES) -> dict:
    out = {"terms_per_table": count_terms(max_size) + sum(count_terms(k) for k in range(1, max_size)),
           "tables": []}
    for table in tables:
        c = compare_exhaustive(max_size, table)
        out["tables"].append({"table": {n: str(t) for n, t in table.items()}, **c.to_json()})
    out["disagreements"] = sum(len(t["disagreements"]) for t in out["tables"])
    return out
