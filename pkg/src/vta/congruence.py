"""Structural congruence via canonical forms.

A canonical process has every restriction that can legally move hoisted
to the front of its scope (the top level, or the body of a prefix or
replication), unused binders dropped, bound names renamed to ``_0``,
``_1``, ... in depth order, and every parallel composition flattened and
sorted by rendered text. Replication is never unfolded, so the decision
procedure is sound but incomplete for laws that need unfolding.
"""

from __future__ import annotations

import itertools
import re
from functools import lru_cache

from .syntax import (
    Ambient, Par, Prefix, Process, Repl, Restrict, Zero,
    components, free_names, par, rename_free, render,
)

_MAX_PERMUTED_BINDERS = 4
_BOUND_RE = re.compile(r"^_+\d+$")


def _flatten(p: Process, fresh) -> tuple:
    match p:
        case Zero():
            return [], []
        case Par(l, r):
            b1, c1 = _flatten(l, fresh)
            b2, c2 = _flatten(r, fresh)
            return b1 + b2, c1 + c2
        case Restrict(n, t, body):
            f = fresh()
            bs, cs = _flatten(rename_free(body, n, f), fresh)
            return [(f, t)] + bs, cs
        case Ambient(n, mark, body):
            bs, cs = _flatten(body, fresh)
            return bs, [Ambient(n, mark, par(*cs))]
        case Prefix(cap, body):
            return [], [Prefix(cap, _prenormal(body, fresh))]
        case Repl(cap, body):
            return [], [Repl(cap, _prenormal(body, fresh))]
        case _:
            return [], [p]


def _wrap(binders, body: Process) -> Process:
    for n, t in reversed(binders):
        body = Restrict(n, t, body)
    return body


def _prenormal(p: Process, fresh) -> Process:
    bs, cs = _flatten(p, fresh)
    used = set()
    for c in cs:
        used |= free_names(c)
    bs = [(n, t) for n, t in bs if n in used]
    return _wrap(bs, par(*cs))


def split_scope(p: Process) -> tuple:
    """Peel the leading restrictions off ``p``: (binders, components)."""
    binders = []
    while isinstance(p, Restrict):
        binders.append((p.name, p.contract))
        p = p.body
    return binders, [c for c in components(p) if not isinstance(c, Zero)]


def _canon_comp(c: Process, level: int, prefix: str) -> Process:
    match c:
        case Ambient(n, mark, body):
            cs = [_canon_comp(x, level, prefix) for x in components(body)
                  if not isinstance(x, Zero)]
            cs.sort(key=render)
            return Ambient(n, mark, par(*cs))
        case Prefix(cap, body):
            return Prefix(cap, _canon_scope(body, level, prefix))
        case Repl(cap, body):
            return Repl(cap, _canon_scope(body, level, prefix))
        case _:
            return c


def _binder_orders(binders, comps):
    if len(binders) <= _MAX_PERMUTED_BINDERS:
        return itertools.permutations(binders)
    # too many to permute: order by first appearance in the anonymised text
    names = {n for n, _ in binders}
    texts = []
    for c in comps:
        t = render(c)
        for n in names:
            t = t.replace(n, "_")
        texts.append((t, render(c)))
    texts.sort()
    joined = " ".join(orig for _, orig in texts)
    return [sorted(binders, key=lambda b: joined.find(b[0]))]


def _canon_scope(p: Process, level: int, prefix: str) -> Process:
    binders, comps = split_scope(p)
    best, best_key = None, None
    for order in _binder_orders(binders, comps):
        renamed = []
        new_binders = []
        for i, (n, t) in enumerate(order):
            new = f"{prefix}{level + i}"
            new_binders.append((new, t))
        for c in comps:
            for (old, _), (new, _) in zip(order, new_binders):
                c = rename_free(c, old, new)
            renamed.append(c)
        inner = level + len(order)
        cs = sorted((_canon_comp(c, inner, prefix) for c in renamed), key=render)
        q = _wrap(new_binders, par(*cs))
        key = render(q)
        if best_key is None or key < best_key:
            best, best_key = q, key
    return best


def _bound_prefix(p: Process) -> str:
    prefix = "_"
    clashes = [n for n in free_names(p) if _BOUND_RE.match(n)]
    while any(n.startswith(prefix) and n[len(prefix):].isdigit() for n in clashes):
        prefix += "_"
    return prefix


@lru_cache(maxsize=200_000)
def normalize(p: Process) -> Process:
    counter = itertools.count()

    def fresh():
        return f"%{next(counter)}"

    return _canon_scope(_prenormal(p, fresh), 0, _bound_prefix(p))


def congruent(p: Process, q: Process) -> bool:
    return normalize(p) == normalize(q)


def is_normal(p: Process) -> bool:
    return normalize(p) == p

