from vta.congruence import normalize, split_scope
from vta.semantics import Rule
from vta.syntax import Repl, count_particles

# (tick, tock) change of each rule; unlisted rules change neither
PARTICLE_DELTA = {
    Rule.TICK_TRANSLATE: (-1, 1),
    Rule.TICK_SERVE_PROCESS: (0, -1),
    Rule.TICK_SERVE_AMBIENT: (1, -1),
}


def component_at(p, location):
    """Follow a step location into the canonical form of ``p``."""
    comps = split_scope(normalize(p))[1]
    node = None
    for k, idx in enumerate(location):
        node = comps[idx]
        if k + 1 < len(location):
            comps = split_scope(node.body)[1]
    return node


def expected_particles(p, step):
    """(ticks, tocks) after ``step``; an unfolded copy adds its body's particles."""
    ticks, tocks = count_particles(normalize(p))
    rule = step.via if step.rule is Rule.REPL_UNFOLD else step.rule
    dt, dk = PARTICLE_DELTA.get(rule, (0, 0))
    if step.rule is Rule.REPL_UNFOLD:
        node = component_at(p, step.location)
        assert isinstance(node, Repl)
        bt, bk = count_particles(node.body)
        dt, dk = dt + bt, dk + bk
    return ticks + dt, tocks + dk
