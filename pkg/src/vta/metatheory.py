"""Generators and property harnesses for subject reduction and tick progress."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Optional

from .checker import TypingError, check
from .contracts import env_leq
from .parser import Program
from .semantics import barbs_tick_in_context, enumerate_steps, explore
from .syntax import (
    FRESH, FROZEN, TICK, TOCK, ZERO, Ambient, Consume, Contract, In, Open,
    Out, Par, Prefix, Process, Repl, Restrict, TickAccept, names, par, render,
    rename_free,
)

NAME_POOL = ("a", "b", "c", "d", "e", "f")


class GenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class GenConfig:
    seed: int = 0
    max_size: int = 12
    name_pool: int = 3
    max_contract: int = 6

    def __post_init__(self):
        if self.max_size < 1 or self.max_contract < 1:
            raise ValueError("bounds must be positive")
        if not 1 <= self.name_pool <= len(NAME_POOL):
            raise ValueError(f"name_pool must be in 1..{len(NAME_POOL)}")


@dataclass
class Violation:
    process: str
    step: str
    expected: str
    observed: str

    def to_json(self) -> dict:
        return dict(vars(self))


@dataclass
class PropertyReport:
    name: str
    instances_run: int = 0
    states_checked: int = 0
    violations: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def status(self) -> str:
        return "pass" if not self.violations else "fail"

    def merge(self, other: "PropertyReport") -> "PropertyReport":
        self.instances_run += other.instances_run
        self.states_checked += other.states_checked
        self.violations.extend(other.violations)
        self.notes.extend(other.notes)
        return self

    def to_json(self) -> dict:
        return {"suite": self.name, "status": self.status,
                "instances_run": self.instances_run,
                "states_checked": self.states_checked,
                "violations": [v.to_json() for v in self.violations],
                "notes": list(self.notes)}

    def summary(self) -> str:
        return (f"{self.name}: {self.status} ({self.instances_run} instances, "
                f"{self.states_checked} states, {len(self.violations)} violations)")


# -- random static terms ----------------------------------------------------

def _split(rng, n):
    k = rng.randint(2, n - 3)
    return k, n - 1 - k


def _gen_static(rng: random.Random, n: int, pool, inside: bool) -> Process:
    """A static-syntax term with exactly ``n`` nodes.

    Parallel components always have at least two nodes, so ``0`` appears
    only as a continuation; names come from a small pool so that
    capabilities often find a matching sibling.
    """
    if n <= 1:
        return ZERO
    kinds = ["amb"] * 4 + ["consume"] * 2 + ["out", "open", "open"] + ["new"]
    if inside:
        kinds += ["in"] * 3
    if n >= 5:
        kinds += ["par"] * 6
    if n in (2, 3):
        kinds.append("repl")
    kind = rng.choice(kinds)
    name = rng.choice(pool)
    if kind == "par":
        a, b = _split(rng, n)
        return Par(_gen_static(rng, a, pool, inside), _gen_static(rng, b, pool, inside))
    if kind == "amb":
        return Ambient(name, FRESH, _gen_static(rng, n - 1, pool, True))
    if kind == "new":
        return Restrict(name, None, _gen_static(rng, n - 1, pool, inside))
    if kind == "repl":
        cap = rng.choice([Out(name), Open(name)])
        body = ZERO if n == 2 else Prefix(rng.choice([Out, Open])(rng.choice(pool)), ZERO)
        return Repl(cap, body)
    cap = {"consume": Consume(), "out": Out(name), "open": Open(name), "in": In(name)}[kind]
    return Prefix(cap, _gen_static(rng, n - 1, pool, inside))


def _gen_siblings(rng: random.Random, n: int, pool) -> Process:
    """Two or three sibling ambients sharing ``n`` nodes.

    Sibling names come from the same small pool the capabilities use, so
    in, out and open usually have a partner to react with.
    """
    k = rng.randint(2, 3) if n >= 8 else 2
    sizes = [2] * k
    for _ in range(max(0, n - 2 * k - (k - 1))):
        sizes[rng.randrange(k)] += 1
    comps = [Ambient(rng.choice(pool), FRESH, _gen_static(rng, m - 1, pool, True))
             for m in sizes]
    return par(*comps)


def annotate_binders(p: Process, contracts) -> Process:
    """Attach the table's contract to every unannotated restriction binder.

    Exploration renames bound names, so a binder must carry its contract
    before the state space is searched.
    """
    match p:
        case Restrict(n, None, body) if n in contracts:
            return Restrict(n, contracts[n], annotate_binders(body, contracts))
        case Restrict(n, t, body):
            return Restrict(n, t, annotate_binders(body, contracts))
        case Par(l, r):
            return Par(annotate_binders(l, contracts), annotate_binders(r, contracts))
        case Ambient(n, mark, body):
            return Ambient(n, mark, annotate_binders(body, contracts))
        case Prefix(cap, body):
            return Prefix(cap, annotate_binders(body, contracts))
        case Repl(cap, body):
            return Repl(cap, annotate_binders(body, contracts))
        case _:
            return p


def infer_contracts(p: Process, pool, max_contract: int, checker=check,
                    start: Optional[dict] = None, max_rounds: int = 200) -> Optional[dict]:
    """Raise contracts from ``start`` (default all zero) until ``p`` checks.

    Every failure names an ambient whose capacity is too small; that
    capacity is raised to the reported need. Returns None when no table with
    values up to ``max_contract`` is reached.
    """
    table = dict(start) if start else {n: Contract(0, 0, 0) for n in pool}
    for _ in range(max_rounds):
        try:
            checker(p, table)
            return table
        except TypingError as err:
            n = err.name
            if n not in table:
                return None
            t = table[n]
            if err.kind == "HostingExceeded":
                kappa = err.needed
                t = Contract(t.rho, kappa, kappa)
            elif err.kind == "ResourceExceeded":
                t = Contract(t.rho + (err.needed - err.bound), t.kappa, t.tau)
            else:
                return None
            if max(t.as_tuple()) > max_contract:
                return None
            table[n] = t
    return None


def gen_well_typed(cfg: GenConfig, attempts: int = 200, checker=check) -> Program:
    """A random program that ``checker`` accepts; deterministic per seed.

    Terms are drawn first and contracts are then grown until every T-Amb and
    T-In premise holds; a little random slack is added to some contracts so
    that not every contract is tight.
    """
    rng = random.Random(cfg.seed)
    pool = NAME_POOL[:cfg.name_pool]
    for _ in range(attempts):
        n = rng.randint(1, cfg.max_size)
        if n >= 5 and rng.random() < 0.5:
            p = _gen_siblings(rng, n, pool)
        else:
            p = _gen_static(rng, n, pool, inside=False)
        table = infer_contracts(p, pool, cfg.max_contract, checker)
        if table is None:
            continue
        slack = {}
        for name, t in table.items():
            if rng.random() < 0.3:
                t = Contract(min(cfg.max_contract, t.rho + rng.randint(0, 2)),
                             t.kappa, t.tau)
            slack[name] = t
        relaxed = infer_contracts(p, pool, cfg.max_contract, checker, start=slack)
        table = relaxed if relaxed is not None else table
        used = names(p)
        contracts = {k: v for k, v in table.items() if k in used}
        return Program(contracts, p)
    raise GenerationError(f"no well-typed program after {attempts} attempts (seed {cfg.seed})")


# -- random run-time terms (property suites) --------------------------------

def gen_process(rng: random.Random, max_size: int = 10, pool=("a", "b", "c"),
                annotate: Optional[dict] = None) -> Process:
    """Any term of the run-time syntax, up to ``max_size`` nodes."""
    def go(n):
        if n <= 1:
            return rng.choice([ZERO, ZERO, TICK, TOCK])
        kind = rng.choice(["amb", "amb", "prefix", "prefix", "new", "repl"]
                          + (["par"] * 3 if n >= 3 else []))
        name = rng.choice(pool)
        if kind == "par":
            a = rng.randint(1, n - 2)
            return Par(go(a), go(n - 1 - a))
        if kind == "amb":
            return Ambient(name, rng.choice([FRESH, FROZEN]), go(n - 1))
        if kind == "new":
            return Restrict(name, annotate.get(name) if annotate else None, go(n - 1))
        cap = rng.choice([In(name), Out(name), Open(name), Consume(FRESH),
                          Consume(FROZEN), TickAccept()])
        return (Prefix if kind == "prefix" else Repl)(cap, go(n - 1))
    return go(rng.randint(1, max_size))


def congruent_variant(rng: random.Random, p: Process, rounds: int = 6) -> Process:
    """Rewrite ``p`` with randomly chosen structural-congruence laws.

    Laws used: commutativity and associativity of ||, P || 0 = P,
    (new n) 0 = 0, swapping adjacent binders, scope extrusion over || and
    into/out of ambient bodies, and alpha-renaming of bound names.
    """
    for _ in range(rounds):
        p = _rewrite_somewhere(rng, p)
    return p


def _fresh_name(rng, avoid):
    while True:
        n = f"z{rng.randint(0, 999)}"
        if n not in avoid:
            return n


def _rewrite_here(rng, p: Process) -> Process:
    options = []
    match p:
        case Par(l, r):
            options.append(lambda: Par(r, l))
            if isinstance(r, Par):
                options.append(lambda: Par(Par(l, r.left), r.right))
            if isinstance(l, Par):
                options.append(lambda: Par(l.left, Par(l.right, r)))
            if isinstance(l, Restrict) and l.name not in _fn(r):
                options.append(lambda: Restrict(l.name, l.contract, Par(l.body, r)))
        case Restrict(n, t, body):
            options.append(lambda: Restrict(_alpha := _fresh_name(rng, names(p)), t,
                                            rename_free(body, n, _alpha)))
            if isinstance(body, Restrict) and body.name != n:
                options.append(lambda: Restrict(body.name, body.contract,
                                                Restrict(n, t, body.body)))
            if isinstance(body, Par) and n not in _fn(body.right):
                options.append(lambda: Par(Restrict(n, t, body.left), body.right))
            if isinstance(body, Ambient) and body.name != n:
                options.append(lambda: Ambient(body.name, body.mark, Restrict(n, t, body.body)))
            if body == ZERO:
                options.append(lambda: ZERO)
        case Ambient(m, mark, Restrict(n, t, inner)) if n != m:
            options.append(lambda: Restrict(n, t, Ambient(m, mark, inner)))
    options.append(lambda: Par(p, ZERO))
    return rng.choice(options)()


def _fn(p):
    from .syntax import free_names
    return free_names(p)


def _rewrite_somewhere(rng, p: Process) -> Process:
    # pick a node uniformly-ish by walking down
    children = _children(p)
    if not children or rng.random() < 0.35:
        return _rewrite_here(rng, p)
    idx = rng.randrange(len(children))
    new_child = _rewrite_somewhere(rng, children[idx])
    return _with_child(p, idx, new_child)


def _children(p):
    match p:
        case Par(l, r):
            return [l, r]
        case Restrict(_, _, b) | Ambient(_, _, b) | Prefix(_, b) | Repl(_, b):
            return [b]
    return []


def _with_child(p, idx, c):
    match p:
        case Par(l, r):
            return Par(c, r) if idx == 0 else Par(l, c)
        case Restrict(n, t, _):
            return Restrict(n, t, c)
        case Ambient(n, m, _):
            return Ambient(n, m, c)
        case Prefix(cap, _):
            return Prefix(cap, c)
        case Repl(cap, _):
            return Repl(cap, c)
    return p


# -- shrinking --------------------------------------------------------------

def _smaller(p: Process):
    """Terms one edit smaller: a subterm replaced by 0 or by one of its children."""
    kids = _children(p)
    if p != ZERO:
        yield ZERO
    yield from kids
    for i, c in enumerate(kids):
        for c2 in _smaller(c):
            yield _with_child(p, i, c2)


def shrink(prog: Program, fails: Callable[[Program], bool], checker: Callable = check,
           max_rounds: int = 200) -> Program:
    """Greedily shrink a failing program while it stays well-typed and failing."""
    from .syntax import names as used_names
    for _ in range(max_rounds):
        for q in _smaller(prog.main):
            used = used_names(q)
            cand = Program({k: v for k, v in prog.contracts.items() if k in used}, q)
            try:
                checker(annotate_binders(q, cand.contracts), cand.contracts)
            except TypingError:
                continue
            if fails(cand):
                prog = cand
                break
        else:
            return prog
    return prog


# -- subject reduction ------------------------------------------------------

def _judge(checker, p, table):
    try:
        return checker(p, table), None
    except TypingError as err:
        return None, err


def check_subject_reduction(prog: Program, depth: int = 6, max_states: int = 20_000,
                            checker: Callable = check,
                            with_tocks: bool = True) -> PropertyReport:
    """Re-check every state reachable within ``depth`` steps.

    With ``with_tocks`` the program runs next to r tocks (r its coeffect)
    so that the tick rules fire too.

    For each edge P -> Q with P typed, Q must be typed with r' <= r, or
    r' = r and p' >= p, and its commitments must sit below P's in the
    environment order.
    """
    report = PropertyReport("subject-reduction", instances_run=1)
    table = prog.contracts
    main = annotate_binders(prog.main, table)
    if with_tocks:
        j, _ = _judge(checker, main, table)
        if j is not None:
            main = par(main, *([TOCK] * j.r))
    graph = explore(main, depth, max_states)
    if len(graph.states) >= max_states:
        report.notes.append(f"state budget {max_states} exhausted for {render(main)}")
    judged = [_judge(checker, s, table) for s in graph.states]
    report.states_checked = len(graph.states)
    if judged[0][0] is None:
        report.violations.append(Violation(render(main), "-", "well-typed initial state",
                                           str(judged[0][1])))
        return report
    for i, step, k in graph.edges:
        before, _ = judged[i]
        if before is None:
            continue
        after, err = judged[k]
        src = render(graph.states[i])
        if after is None:
            report.violations.append(Violation(src, step.describe(),
                                               "successor is well-typed", str(err)))
            continue
        ok_rp = after.r <= before.r or (after.r == before.r and after.p >= before.p)
        ok_env = env_leq(after.commitments, before.commitments)
        if not (ok_rp and ok_env):
            report.violations.append(Violation(
                src, step.describe(),
                "r' <= r or (r' = r and p' >= p); commitments' <= commitments",
                f"{before.render()}  ->  {after.render()}  [{render(graph.states[k])}]"))
    return report


# -- tick progress ----------------------------------------------------------

def progress_wrapper(main: Process, tocks: int, avoid=()) -> Process:
    """``~root[P || tock || ... || tock]`` with a name not used in ``P``.

    The wrapper is frozen: it stands for an ambient that has already been
    scheduled by its own parent, so its body alone must make progress.
    """
    used = names(main) | set(avoid)
    root = "root"
    i = 0
    while root in used:
        i += 1
        root = f"root{i}"
    return Ambient(root, FROZEN, par(main, *([TOCK] * tocks)))


def check_progress(prog: Program, max_depth: int = 10, max_states: int = 5_000,
                   tocks: Optional[int] = None, checker: Callable = check,
                   reachable: bool = True) -> PropertyReport:
    """Every reachable state that barbs in some context must have a step.

    ``tocks`` defaults to the coeffect r of the program; passing fewer
    gives a negative control. With ``reachable`` off only the wrapped
    initial state is checked, which is the single-step statement.
    """
    report = PropertyReport("progress", instances_run=1)
    table = prog.contracts
    main = annotate_binders(prog.main, table)
    j, err = _judge(checker, main, table)
    if j is None:
        report.violations.append(Violation(render(main), "-", "well-typed program", str(err)))
        return report
    count = j.r if tocks is None else tocks
    q = progress_wrapper(main, count)
    if not reachable:
        report.states_checked = 1
        if barbs_tick_in_context(q) and not enumerate_steps(q, include_idle=True):
            report.violations.append(Violation(render(q), "initial state",
                                               "a state that barbs in context can reduce",
                                               "stuck"))
        return report
    graph = explore(q, max_depth, max_states, include_idle=True)
    report.states_checked = len(graph.states)
    has_out = {i for i, _, _ in graph.edges}
    for i, state in enumerate(graph.states):
        if i in has_out or i in graph.frontier:
            continue
        if barbs_tick_in_context(state) and not enumerate_steps(state, include_idle=True):
            report.violations.append(Violation(
                render(q), f"after {graph.depth[i]} steps",
                "a state that barbs in context can reduce",
                f"stuck: {render(state)}"))
    return report


SUITES = {"sr": "subject-reduction", "progress": "progress"}


@dataclass
class FuzzResult:
    reports: dict
    records: list

    @property
    def passed(self) -> bool:
        return all(r.status == "pass" for r in self.reports.values())


def run_suites(count: int, size: int, seed: int, suites=("sr", "progress"),
               depth: int = 6, checker: Callable = check,
               progress_depth: int = 10) -> FuzzResult:
    """Run the selected suites over ``count`` generated programs.

    Program ``i`` is generated from seed ``seed * 100003 + i``, so a run is
    reproducible and any single program can be regenerated on its own.
    """
    from .syntax import size as term_size

    reports = {name: PropertyReport(SUITES[name]) for name in suites}
    records = []
    for i in range(count):
        cfg = GenConfig(seed=seed * 100_003 + i, max_size=size)
        prog = gen_well_typed(cfg, checker=checker)
        row = {"index": i, "seed": cfg.seed, "size": term_size(prog.main),
               "r": checker(annotate_binders(prog.main, prog.contracts), prog.contracts).r,
               "program": " ".join(prog.render().split("\n")).strip()}
        if "sr" in reports:
            rep = check_subject_reduction(prog, depth, checker=checker)
            reports["sr"].merge(rep)
            row["sr_states"], row["sr_violations"] = rep.states_checked, len(rep.violations)
        if "progress" in reports:
            rep = check_progress(prog, progress_depth, checker=checker)
            reports["progress"].merge(rep)
            row["progress_states"] = rep.states_checked
            row["progress_violations"] = len(rep.violations)
        records.append(row)
    return FuzzResult(reports, records)
