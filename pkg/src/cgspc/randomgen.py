"""Random structures, strategies and formulas for sweeps and property tests."""

from __future__ import annotations

import itertools
import random

from cgspc.formulas import Atom, Coalition, Formula, Next, Not, Or, Until, TRUE
from cgspc.structures import (
    ExplicitProtocol,
    FullProtocol,
    GameStructure,
    StrategyProfile,
    TableTransition,
    Threshold,
    ExclusiveUnion,
    enabled,
    powerset,
)

ATOM_NAMES = ("p", "q", "r", "s")


def random_shared_structure(rng: random.Random, max_agents: int = 2, max_atoms: int = 3,
                            transition: str | None = None,
                            explicit_protocol_rate: float = 0.25) -> GameStructure:
    """A small shared-control structure with a threshold or table transition."""
    n = rng.randint(1, max_agents)
    atoms = list(ATOM_NAMES[: rng.randint(1, max_atoms)])
    control = {}
    for i in range(1, n + 1):
        k = rng.randint(1, len(atoms))
        control[i] = frozenset(rng.sample(atoms, k))
    kind = transition or rng.choice(("threshold", "table"))
    base = GameStructure.build(control, atoms=atoms)
    protocol = FullProtocol()
    if rng.random() < explicit_protocol_rate:
        protocol = _random_protocol(rng, base)
    base = base.with_protocol(protocol)
    if kind == "threshold":
        thresholds = {p: rng.randint(0, max(0, n - 1)) for p in atoms}
        tr = Threshold(thresholds)
    else:
        table = {}
        states = list(base.states())
        for s in states:
            for alpha in itertools.product(*(enabled(base, i, s) for i in base.agents)):
                table[(s, alpha)] = rng.choice(states)
        tr = TableTransition(table)
    return GameStructure(base.agents, base.atoms, base.control, protocol, tr)


def random_exclusive_structure(rng: random.Random, n_agents: int, atoms: list) -> GameStructure:
    """Random partition of ``atoms`` among ``n_agents`` agents, union transition."""
    control = {i: set() for i in range(1, n_agents + 1)}
    for p in atoms:
        control[rng.randint(1, n_agents)].add(p)
    return GameStructure.build(control, atoms=atoms, transition=ExclusiveUnion())


def all_exclusive_structures(n_agents: int, atoms: list):
    """Every assignment of ``atoms`` to owners among ``n_agents`` agents."""
    for owners in itertools.product(range(1, n_agents + 1), repeat=len(atoms)):
        control = {i: {p for p, o in zip(atoms, owners) if o == i} for i in range(1, n_agents + 1)}
        yield GameStructure.build(control, atoms=atoms, transition=ExclusiveUnion())


def _random_protocol(rng: random.Random, G: GameStructure) -> ExplicitProtocol:
    table = {}
    for i in G.agents:
        actions = powerset(G.control[i])
        for s in G.states():
            k = rng.randint(1, len(actions))
            table[(i, s)] = frozenset(rng.sample(actions, k))
    return ExplicitProtocol(table)


def random_profile(rng: random.Random, G: GameStructure, agents) -> StrategyProfile:
    return StrategyProfile({
        i: {s: rng.choice(enabled(G, i, s)) for s in G.states()} for i in agents
    })


def random_coalition(rng: random.Random, agents) -> frozenset:
    return frozenset(i for i in agents if rng.random() < 0.5)


# -- formulas --------------------------------------------------------------


def random_state_formula(rng: random.Random, atoms, agents, depth: int,
                         atl_only: bool = False) -> Formula:
    """Random ATL* (or ATL) state formula of operator depth at most ``depth``."""
    atoms = list(atoms)
    agents = list(agents)
    if depth <= 0:
        return Atom(rng.choice(atoms))
    roll = rng.random()
    if roll < 0.15:
        return Atom(rng.choice(atoms))
    if roll < 0.25:
        return Not(random_state_formula(rng, atoms, agents, depth - 1, atl_only))
    if roll < 0.35:
        return Or(random_state_formula(rng, atoms, agents, depth - 1, atl_only),
                  random_state_formula(rng, atoms, agents, depth - 1, atl_only))
    coalition = random_coalition(rng, agents)
    if atl_only:
        if rng.random() < 0.5:
            return Coalition(coalition, Next(random_state_formula(rng, atoms, agents, depth - 1, True)))
        return Coalition(coalition, Until(random_state_formula(rng, atoms, agents, depth - 1, True),
                                          random_state_formula(rng, atoms, agents, depth - 1, True)))
    return Coalition(coalition, random_path_formula(rng, atoms, agents, depth, top=True))


def random_path_formula(rng: random.Random, atoms, agents, depth: int, top: bool = False) -> Formula:
    """Random path formula; ``top`` marks the body of a coalition (which shares its depth)."""
    if depth <= 0:
        return Atom(rng.choice(atoms))
    roll = rng.random()
    if roll < 0.35:
        return Next(random_path_formula(rng, atoms, agents, depth - 1))
    if roll < 0.65:
        return Until(random_path_formula(rng, atoms, agents, depth - 1),
                     random_path_formula(rng, atoms, agents, depth - 1))
    if roll < 0.75:
        return Not(random_path_formula(rng, atoms, agents, depth - (0 if top else 1), top))
    if roll < 0.82:
        return Or(random_path_formula(rng, atoms, agents, depth - 1),
                  random_path_formula(rng, atoms, agents, depth - 1))
    if top:
        return random_state_formula(rng, atoms, agents, depth - 1)
    return random_state_formula(rng, atoms, agents, depth)


def random_ltl(rng: random.Random, atoms, depth: int) -> Formula:
    atoms = list(atoms)
    if depth <= 0:
        return Atom(rng.choice(atoms)) if rng.random() < 0.9 else TRUE
    roll = rng.random()
    if roll < 0.15:
        return Atom(rng.choice(atoms))
    if roll < 0.3:
        return Not(random_ltl(rng, atoms, depth - 1))
    if roll < 0.45:
        return Or(random_ltl(rng, atoms, depth - 1), random_ltl(rng, atoms, depth - 1))
    if roll < 0.7:
        return Next(random_ltl(rng, atoms, depth - 1))
    return Until(random_ltl(rng, atoms, depth - 1), random_ltl(rng, atoms, depth - 1))


def random_formula(rng: random.Random, atoms, agents, depth: int) -> Formula:
    """Any ATL* formula (state or path) for structural tests."""
    if rng.random() < 0.5:
        return random_state_formula(rng, atoms, agents, depth)
    return random_path_formula(rng, atoms, agents, depth)


def coalition_under_until(f: Formula, inside: bool = False) -> bool:
    """Does a coalition operator occur in the scope of an until?"""
    if isinstance(f, Coalition):
        if inside:
            return True
        return coalition_under_until(f.arg, False)
    if isinstance(f, Until):
        return coalition_under_until(f.left, True) or coalition_under_until(f.right, True)
    return any(coalition_under_until(k, inside) for k in f.children())
