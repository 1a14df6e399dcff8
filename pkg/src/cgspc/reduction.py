"""Simulating shared control with exclusive control.

Every shared structure G gets an exclusive-control structure G' in which each
agent i writes private copies ``c_<i>_<p>`` of the atoms it controls, and an
extra agent ``*`` (owner of the original atoms and of ``__turn``) applies the
original transition in a second step.  Paths of G' from a canonical state
alternate: choice steps at even positions (``__turn`` false), aggregation
steps at odd positions.  Next operators are doubled to match this tempo.
"""

from __future__ import annotations

import math
import time
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass

from cgspc.checker import ModelChecker, induced
from cgspc.errors import InputError, TotalityError
from cgspc.formulas import Formula, check_vocabulary, translate_tr
from cgspc.structures import (
    DEFAULT_ATOM_CAP,
    STAR_AGENT,
    ExclusiveUnion,
    ExplicitProtocol,
    GameStructure,
    LassoPath,
    StrategyProfile,
    _apply,
    enabled,
    is_step,
)

TURN = "__turn"


def copy_atom(agent: int, atom: str) -> str:
    return f"c_{agent}_{atom}"


@dataclass(frozen=True)
class EpcImage:
    epc: GameStructure
    copy_atoms: Mapping[tuple[int, str], str]
    turn_atom: str
    star_agent: int
    origin: GameStructure

    @property
    def phi(self) -> frozenset:
        return self.origin.atom_set

    def restrict(self, state: frozenset) -> frozenset:
        return state & self.origin.atom_set


class _EpcProtocolTable(Mapping):
    """The protocol of G', computed on demand from the source structure."""

    def __init__(self, G: GameStructure, copies: Mapping, epc_states: list):
        self.G = G
        self.copies = copies
        self.phi = G.atom_set
        self.agents = tuple(G.agents) + (STAR_AGENT,)
        self._states = epc_states
        self._memo: dict = {}

    def _entry(self, agent: int, state: frozenset) -> frozenset:
        G = self.G
        s = state & self.phi
        if TURN not in state:
            if agent == STAR_AGENT:
                return frozenset({s | {TURN}})
            return frozenset(
                frozenset(self.copies[(agent, p)] for p in act) for act in enabled(G, agent, s)
            )
        if agent != STAR_AGENT:
            return frozenset({frozenset()})
        alpha = tuple(
            frozenset(p for p in G.control[i] if self.copies[(i, p)] in state) for i in G.agents
        )
        try:
            return frozenset({_apply(G, s, alpha)})
        except TotalityError:
            # copy pattern no enabled action produces; such states are unreachable
            # from canonical states, so keep the original atoms unchanged
            return frozenset({s})

    def __getitem__(self, key):
        hit = self._memo.get(key)
        if hit is None:
            agent, state = key
            if agent not in self.agents or not isinstance(state, frozenset):
                raise KeyError(key)
            hit = self._entry(agent, state)
            self._memo[key] = hit
        return hit

    def __iter__(self) -> Iterator:
        for s in self._states():
            for i in self.agents:
                yield (i, s)

    def __len__(self):
        return len(self.agents) << (len(self.phi) + 1 + len(self.copies))


def build_epc(G: GameStructure, atom_cap: int | None = None) -> EpcImage:
    """The exclusive-control structure corresponding to the shared structure ``G``."""
    copies = {(i, p): copy_atom(i, p) for i in G.agents for p in sorted(G.control[i])}
    control = {i: frozenset(copies[(i, p)] for p in G.control[i]) for i in G.agents}
    control[STAR_AGENT] = frozenset(G.atoms) | {TURN}
    atoms = set(G.atoms) | {TURN} | set(copies.values())
    agents = tuple(G.agents) + (STAR_AGENT,)
    cap = atom_cap if atom_cap is not None else max(G.atom_cap, DEFAULT_ATOM_CAP)
    holder: list = []
    table = _EpcProtocolTable(G, copies, lambda: holder[0].states())
    epc = GameStructure(
        agents=agents,
        atoms=tuple(atoms),
        control=control,
        protocol=ExplicitProtocol(table, agents=frozenset(agents)),
        transition=ExclusiveUnion(),
        atom_cap=cap,
    )
    holder.append(epc)
    return EpcImage(epc, copies, TURN, STAR_AGENT, G)


def canonical_state(img: EpcImage, s: Iterable[str]) -> frozenset:
    """The G' state agreeing with ``s`` on the original atoms and false elsewhere."""
    return img.origin.check_state(s)


def is_canonical(img: EpcImage, state: frozenset) -> bool:
    return state <= img.phi


# -- paths -----------------------------------------------------------------


def _check_alternation(img: EpcImage, lam: LassoPath) -> None:
    for k in range(len(lam.prefix) + 2 * len(lam.cycle)):
        if (img.turn_atom in lam[k]) != (k % 2 == 1):
            raise InputError(
                f"position {k} breaks the turn alternation ({img.turn_atom} must hold exactly at odd positions)"
            )


def project_path(img: EpcImage, lam: LassoPath) -> LassoPath:
    """The G path ``k -> lam[2k]`` restricted to the original atoms."""
    _check_alternation(img, lam)
    prefix, cycle = list(lam.prefix), list(lam.cycle)
    if len(cycle) % 2:
        cycle = cycle + cycle
    if len(prefix) % 2:
        prefix.append(cycle[0])
        cycle = cycle[1:] + cycle[:1]
    return LassoPath(
        tuple(img.restrict(prefix[k]) for k in range(0, len(prefix), 2)),
        tuple(img.restrict(cycle[k]) for k in range(0, len(cycle), 2)),
    )


def check_dagger(img: EpcImage, lam: LassoPath, lam_prime: LassoPath) -> bool:
    """``lam[k] == lam_prime[2k]|Phi == lam_prime[2k+1]|Phi`` for every k."""
    bound = (len(lam.prefix) + len(lam_prime.prefix)
             + 2 * math.lcm(len(lam.cycle), len(lam_prime.cycle)) + 2)
    for k in range(bound):
        if not lam[k] == img.restrict(lam_prime[2 * k]) == img.restrict(lam_prime[2 * k + 1]):
            return False
    return True


def is_path_of_epc(img: EpcImage, lam: LassoPath) -> bool:
    """Every step of the lasso, including the one closing the cycle, is a G' transition."""
    G = img.epc
    if not all(s <= G.atom_set for s in lam.states()):
        return False
    for k in range(len(lam)):
        if not is_step(G, lam[k], lam[lam.next_position(k)]):
            return False
    return True


def is_canonical_path(img: EpcImage, lam: LassoPath, lam_prime: LassoPath) -> bool:
    """``lam_prime`` is a canonical path associated with ``lam``."""
    return (is_path_of_epc(img, lam_prime) and check_dagger(img, lam, lam_prime)
            and lam_prime[0] == canonical_state(img, lam[0]))


# -- strategies ------------------------------------------------------------


class _LiftedStrategy(Mapping):
    def __init__(self, img: EpcImage, agent: int, table: Mapping):
        self.img = img
        self.agent = agent
        self.table = table

    def __getitem__(self, state):
        if not isinstance(state, frozenset) or not state <= self.img.epc.atom_set:
            raise KeyError(state)
        if self.img.turn_atom in state:
            return frozenset()
        act = self.table[self.img.restrict(state)]
        return frozenset(self.img.copy_atoms[(self.agent, p)] for p in act)

    def __iter__(self):
        return self.img.epc.states()

    def __len__(self):
        return self.img.epc.n_states


def lift_strategy(img: EpcImage, profile: StrategyProfile) -> StrategyProfile:
    """G' strategy writing the copies of what ``profile`` plays on the original atoms."""
    return StrategyProfile({
        i: _LiftedStrategy(img, i, table) for i, table in profile.assignments.items()
    })


def lower_strategy(img: EpcImage, profile: StrategyProfile) -> StrategyProfile:
    """G strategy reading what ``profile`` plays at canonical states."""
    G = img.origin
    out = {}
    for i, table in profile.assignments.items():
        copies = {img.copy_atoms[(i, p)]: p for p in G.control[i]}
        out[i] = {s: frozenset(copies[c] for c in table[s] if c in copies) for s in G.states()}
    return StrategyProfile(out)


def _two_step(img: EpcImage, K) -> dict:
    """For each even state of ``K``, the even states reached after two steps."""
    out: dict = {}
    for u in K.states:
        if img.turn_atom in u:
            continue
        nxt = set()
        for v in K.steps[u]:
            nxt |= K.steps[v]
        out[u] = nxt
    return out


def same_outcomes(img: EpcImage, profile: StrategyProfile, coalition: Iterable[int],
                  s: frozenset, epc_profile: StrategyProfile | None = None,
                  epc_start: frozenset | None = None) -> bool:
    """Does projecting ``out(s', sigma'_C)`` give exactly ``out(s, sigma_C)``?

    ``s'`` defaults to the canonical state of ``s`` and ``sigma'`` to the
    lifted ``profile``.  Both outcome sets are infinite-path languages of
    finite graphs in which every state has a successor, so they coincide iff
    their finite-prefix languages do; that is decided by a subset construction
    over the projected G' graph run in lockstep with the G graph.
    """
    coalition = list(coalition)
    K = induced(img.origin, profile, coalition, start=[s])
    if epc_profile is None:
        epc_profile = lift_strategy(img, profile)
    start = canonical_state(img, s) if epc_start is None else epc_start
    if img.restrict(start) != s:
        return False
    K2 = induced(img.epc, epc_profile, coalition, start=[start])
    two = _two_step(img, K2)
    seen = set()
    frontier = [(s, frozenset({start}))]
    while frontier:
        k, group = frontier.pop()
        if (k, group) in seen:
            continue
        seen.add((k, group))
        by_label: dict = {}
        for u in group:
            for w in two[u]:
                by_label.setdefault(img.restrict(w), set()).add(w)
        if set(by_label) != set(K.steps[k]):
            return False
        for t, ws in by_label.items():
            frontier.append((t, frozenset(ws)))
    return True


# -- Theorem-1 harness -----------------------------------------------------


@dataclass
class TheoremCheck:
    formula: Formula
    translated: Formula
    state: frozenset
    spc_verdict: bool
    epc_verdict: bool
    spc_seconds: float
    epc_seconds: float

    @property
    def agree(self) -> bool:
        return self.spc_verdict == self.epc_verdict


def verify_theorem(G: GameStructure, s: Iterable[str], phi: Formula,
                   img: EpcImage | None = None, strategy_cap: int | None = None) -> TheoremCheck:
    """Check ``phi`` at ``s`` on G and ``tr(phi)`` at the canonical state on G'."""
    s = G.check_state(s)
    check_vocabulary(phi, G.atoms, G.agents)
    if img is None:
        img = build_epc(G)
    kwargs = {} if strategy_cap is None else {"strategy_cap": strategy_cap}
    t0 = time.perf_counter()
    left = ModelChecker(G, **kwargs).holds(phi, s)
    t1 = time.perf_counter()
    translated = translate_tr(phi)
    right = ModelChecker(img.epc, **kwargs).holds(translated, canonical_state(img, s))
    t2 = time.perf_counter()
    return TheoremCheck(phi, translated, s, left, right, t1 - t0, t2 - t1)


__all__ = [
    "TURN", "EpcImage", "build_epc", "canonical_state", "check_dagger", "copy_atom",
    "is_canonical", "is_canonical_path", "is_path_of_epc",
    "lift_strategy", "lower_strategy", "project_path", "same_outcomes", "verify_theorem",
    "TheoremCheck",
]
