"""Process terms of virtually timed ambients.

Static syntax plus the run-time forms used by the scheduler: frozen
ambient names, frozen consume, and the two kinds of time slice
(``tick`` arriving from the parent, ``tock`` handed out locally).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Union

RESERVED_CURR = "curr"


class Freshness(enum.Enum):
    FRESH = "fresh"
    FROZEN = "frozen"


FRESH = Freshness.FRESH
FROZEN = Freshness.FROZEN


@dataclass(frozen=True)
class Contract:
    """Resource contract <rho, kappa, tau>."""

    rho: int
    kappa: int
    tau: int

    def __post_init__(self):
        if min(self.rho, self.kappa, self.tau) < 0:
            raise ValueError(f"contract fields must be non-negative: {self}")

    def __str__(self):
        return f"<{self.rho},{self.kappa},{self.tau}>"

    def as_tuple(self):
        return (self.rho, self.kappa, self.tau)


# -- capabilities -----------------------------------------------------------

@dataclass(frozen=True)
class In:
    name: str


@dataclass(frozen=True)
class Out:
    name: str


@dataclass(frozen=True)
class Open:
    name: str


@dataclass(frozen=True)
class Consume:
    mark: Freshness = FRESH


@dataclass(frozen=True)
class TickAccept:
    pass


Capability = Union[In, Out, Open, Consume, TickAccept]


# -- processes --------------------------------------------------------------

@dataclass(frozen=True)
class Zero:
    pass


@dataclass(frozen=True)
class TickIn:
    """Incoming time slice, written ``tick``."""


@dataclass(frozen=True)
class TickOut:
    """Locally dispensed time slice, written ``tock``."""


@dataclass(frozen=True)
class Par:
    left: "Process"
    right: "Process"


@dataclass(frozen=True)
class Restrict:
    name: str
    contract: Optional[Contract]
    body: "Process"


@dataclass(frozen=True)
class Repl:
    cap: Capability
    body: "Process"


@dataclass(frozen=True)
class Prefix:
    cap: Capability
    body: "Process"


@dataclass(frozen=True)
class Ambient:
    name: str
    mark: Freshness
    body: "Process"


Process = Union[Zero, TickIn, TickOut, Par, Restrict, Repl, Prefix, Ambient]

ZERO = Zero()
TICK = TickIn()
TOCK = TickOut()


def par(*procs: Process) -> Process:
    """Right-nested parallel composition; ``par()`` is ``0``."""
    if not procs:
        return ZERO
    result = procs[-1]
    for p in reversed(procs[:-1]):
        result = Par(p, result)
    return result


def amb(name: str, body: Process = ZERO, frozen: bool = False) -> Ambient:
    return Ambient(name, FROZEN if frozen else FRESH, body)


def components(p: Process) -> list:
    """Flatten nested Par nodes (Zero components are kept)."""
    out = []
    stack = [p]
    while stack:
        q = stack.pop()
        if isinstance(q, Par):
            stack.append(q.right)
            stack.append(q.left)
        else:
            out.append(q)
    return out


# -- freezing ---------------------------------------------------------------

def _set_marks(p: Process, mark: Freshness) -> Process:
    match p:
        case Restrict(n, t, body):
            return Restrict(n, t, _set_marks(body, mark))
        case Par(l, r):
            return Par(_set_marks(l, mark), _set_marks(r, mark))
        case Ambient(n, _, body):
            return Ambient(n, mark, body)
        case Prefix(Consume(), body):
            return Prefix(Consume(mark), body)
        case Prefix(cap, body):
            return Prefix(cap, _set_marks(body, mark))
        case _:
            return p


def freeze(p: Process) -> Process:
    """Mark a process as served for the current scheduling round.

    Ambients and consume prefixes reachable through restriction, parallel
    composition and non-consume prefixes become frozen; their bodies and
    continuations are left alone.
    """
    return _set_marks(p, FROZEN)


def unfreeze(p: Process) -> Process:
    return _set_marks(p, FRESH)


# -- names ------------------------------------------------------------------

def cap_name(cap: Capability) -> Optional[str]:
    if isinstance(cap, (In, Out, Open)):
        return cap.name
    return None


def names(p: Process) -> set:
    """All ambient names occurring in ``p``, bound or free."""
    match p:
        case Restrict(n, _, body):
            return {n} | names(body)
        case Par(l, r):
            return names(l) | names(r)
        case Ambient(n, _, body):
            return {n} | names(body)
        case Prefix(cap, body) | Repl(cap, body):
            n = cap_name(cap)
            return ({n} if n else set()) | names(body)
        case _:
            return set()


def free_names(p: Process) -> set:
    match p:
        case Restrict(n, _, body):
            return free_names(body) - {n}
        case Par(l, r):
            return free_names(l) | free_names(r)
        case Ambient(n, _, body):
            return {n} | free_names(body)
        case Prefix(cap, body) | Repl(cap, body):
            n = cap_name(cap)
            return ({n} if n else set()) | free_names(body)
        case _:
            return set()


def _rename_cap(cap: Capability, old: str, new: str) -> Capability:
    if isinstance(cap, (In, Out, Open)) and cap.name == old:
        return type(cap)(new)
    return cap


def rename_free(p: Process, old: str, new: str) -> Process:
    """Replace free occurrences of ``old`` by ``new``.

    ``new`` must not be bound anywhere in ``p`` (callers use fresh names).
    """
    match p:
        case Restrict(n, t, body):
            if n == old:
                return p
            return Restrict(n, t, rename_free(body, old, new))
        case Par(l, r):
            return Par(rename_free(l, old, new), rename_free(r, old, new))
        case Ambient(n, mark, body):
            return Ambient(new if n == old else n, mark, rename_free(body, old, new))
        case Prefix(cap, body):
            return Prefix(_rename_cap(cap, old, new), rename_free(body, old, new))
        case Repl(cap, body):
            return Repl(_rename_cap(cap, old, new), rename_free(body, old, new))
        case _:
            return p


def size(p: Process) -> int:
    """Number of AST nodes (capabilities are part of their prefix node)."""
    match p:
        case Par(l, r):
            return 1 + size(l) + size(r)
        case Restrict(_, _, body) | Repl(_, body) | Prefix(_, body) | Ambient(_, _, body):
            return 1 + size(body)
        case _:
            return 1


def count_particles(p: Process) -> tuple:
    """(number of ``tick`` leaves, number of ``tock`` leaves)."""
    match p:
        case TickIn():
            return (1, 0)
        case TickOut():
            return (0, 1)
        case Par(l, r):
            a, b = count_particles(l), count_particles(r)
            return (a[0] + b[0], a[1] + b[1])
        case Restrict(_, _, body) | Repl(_, body) | Prefix(_, body) | Ambient(_, _, body):
            return count_particles(body)
        case _:
            return (0, 0)


def has_marks(p: Process) -> bool:
    """True if some ambient or consume anywhere in ``p`` is frozen."""
    match p:
        case Ambient(_, mark, body):
            return mark is FROZEN or has_marks(body)
        case Prefix(Consume(mark), body) | Repl(Consume(mark), body):
            return mark is FROZEN or has_marks(body)
        case Par(l, r):
            return has_marks(l) or has_marks(r)
        case Restrict(_, _, body) | Repl(_, body) | Prefix(_, body):
            return has_marks(body)
        case _:
            return False


def strip_marks(p: Process) -> Process:
    """Make every mark in ``p`` fresh, at any depth."""
    match p:
        case Ambient(n, _, body):
            return Ambient(n, FRESH, strip_marks(body))
        case Prefix(cap, body):
            cap = Consume(FRESH) if isinstance(cap, Consume) else cap
            return Prefix(cap, strip_marks(body))
        case Repl(cap, body):
            cap = Consume(FRESH) if isinstance(cap, Consume) else cap
            return Repl(cap, strip_marks(body))
        case Par(l, r):
            return Par(strip_marks(l), strip_marks(r))
        case Restrict(n, t, body):
            return Restrict(n, t, strip_marks(body))
        case _:
            return p


# -- concrete syntax --------------------------------------------------------

def render_cap(cap: Capability) -> str:
    match cap:
        case In(n):
            return f"in {n}"
        case Out(n):
            return f"out {n}"
        case Open(n):
            return f"open {n}"
        case Consume(mark):
            return "~consume" if mark is FROZEN else "consume"
        case TickAccept():
            return "tick"
    raise TypeError(f"not a capability: {cap!r}")


def _render_term(p: Process) -> str:
    # a term position: Par needs parentheses
    if isinstance(p, Par):
        return f"({render(p)})"
    return render(p)


def render(p: Process) -> str:
    match p:
        case Zero():
            return "0"
        case TickIn():
            return "tick"
        case TickOut():
            return "tock"
        case Par(l, r):
            return f"{_render_term(l)} || {render(r)}"
        case Restrict(n, t, body):
            ann = f" : {t}" if t is not None else ""
            return f"(new {n}{ann}) {_render_term(body)}"
        case Repl(cap, body):
            return f"!{render_cap(cap)}.{_render_term(body)}"
        case Prefix(cap, body):
            return f"{render_cap(cap)}.{_render_term(body)}"
        case Ambient(n, mark, body):
            tilde = "~" if mark is FROZEN else ""
            return f"{tilde}{n}[{render(body)}]"
    raise TypeError(f"not a process: {p!r}")
