"""Resource contracts and typing environments."""

from __future__ import annotations

from typing import Mapping

from .syntax import Contract

TypeEnv = Mapping[str, Contract]


class EnvError(ValueError):
    pass


def parse_contract(text: str) -> Contract:
    body = text.strip()
    if not (body.startswith("<") and body.endswith(">")):
        raise ValueError(f"malformed contract {text!r}")
    parts = [s.strip() for s in body[1:-1].split(",")]
    if len(parts) != 3 or not all(s.isdigit() for s in parts):
        raise ValueError(f"malformed contract {text!r}")
    return Contract(*map(int, parts))


def contract_leq(t1: Contract, t2: Contract) -> bool:
    """Subtyping: more capacity and fewer free slots make a larger contract."""
    return t1.rho <= t2.rho and t1.kappa <= t2.kappa and t1.tau >= t2.tau


def env_plus(e1: TypeEnv, e2: TypeEnv) -> dict:
    if set(e1) != set(e2):
        raise EnvError(f"domains differ: {sorted(e1)} vs {sorted(e2)}")
    out = {}
    for n, t1 in e1.items():
        t2 = e2[n]
        if (t1.rho, t1.kappa) != (t2.rho, t2.kappa):
            raise EnvError(f"{n}: capacities disagree ({t1} vs {t2})")
        out[n] = Contract(t1.rho, t1.kappa, t1.tau + t2.tau)
    return out


def env_ok(e: TypeEnv) -> bool:
    return all(t.tau <= t.kappa for t in e.values())


def env_leq(e1: TypeEnv, e2: TypeEnv) -> bool:
    return all(n in e2 and contract_leq(t, e2[n]) for n, t in e1.items())


def render_env(e: TypeEnv) -> str:
    return ", ".join(f"{n}:{t}" for n, t in e.items())
