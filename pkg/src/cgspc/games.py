"""Encoders for iterated boolean, influence and aggregation games.

Each encoder produces a shared-control structure plus one LTL goal per agent;
deciding whether an agent has a memoryless winning strategy is then the
single coalition query ``<<i>> goal_i`` (see ``checker.ewin``).
"""

from __future__ import annotations

import itertools
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field

from cgspc.checker import WinResult, ewin
from cgspc.errors import InputError
from cgspc.formulas import Formula, Fragment, check_vocabulary, classify
from cgspc.structures import (
    FullProtocol,
    GameStructure,
    Hosted,
    TransitionSpec,
    _structural_diagnostics,
    validate,
)

OP_PREFIX = "op_"
VIS_PREFIX = "vis_"


def op_atom(agent: int, issue: str) -> str:
    return f"{OP_PREFIX}{agent}_{issue}"


def vis_atom(agent: int, issue: str) -> str:
    return f"{VIS_PREFIX}{agent}_{issue}"


@dataclass(frozen=True)
class EncodedGame:
    """A game as a shared-control structure with LTL goals."""

    kind: str  # "ibg" | "influence" | "aggregation"
    structure: GameStructure
    goals: Mapping[int, Formula]
    initial: frozenset | None = None


def _check_goals(G: GameStructure, goals: Mapping[int, Formula]) -> dict:
    out = {}
    for i, goal in goals.items():
        if i not in G.agents:
            raise InputError(f"goal given for unknown agent {i}")
        if classify(goal) is not Fragment.LTL:
            raise InputError(f"goal of agent {i} is not an LTL formula")
        check_vocabulary(goal, G.atoms, G.agents)
        out[i] = goal
    return out


def _raise_on_diagnostics(G: GameStructure) -> None:
    # structural checks only: hosted rules are total by construction, and a
    # full behavioural pass would enumerate every state and joint action
    problems = _structural_diagnostics(G, ())
    if problems:
        raise InputError("; ".join(str(d) for d in problems))


# -- iterated boolean games ------------------------------------------------


def build_ibg(control: Mapping[int, Iterable[str]], transition: TransitionSpec,
              goals: Mapping[int, Formula], atoms: Iterable[str] | None = None,
              initial: Iterable[str] | None = None) -> EncodedGame:
    """Iterated boolean game with (possibly shared) control and a trivial protocol."""
    G = GameStructure.build(control, atoms=atoms, protocol=FullProtocol(), transition=transition)
    problems = validate(G)
    if problems:
        raise InputError("; ".join(str(d) for d in problems))
    goals = _check_goals(G, goals)
    init = None if initial is None else G.check_state(initial)
    return EncodedGame("ibg", G, goals, init)


# -- influence games -------------------------------------------------------


@dataclass(frozen=True)
class InfluenceGameSpec:
    agents: tuple
    issues: tuple
    network: frozenset  # pairs (k, i): k influences i
    opinions: Mapping[int, frozenset]  # B_i: issues agent i believes true
    visible: Mapping[int, frozenset] = field(default_factory=dict)  # V_i
    goals: Mapping[int, Formula] = field(default_factory=dict)

    def influencers(self, agent: int) -> tuple:
        return tuple(sorted(k for k, i in self.network if i == agent))


def unanimous_update(current: bool, revealed: Iterable[bool]) -> bool:
    """New opinion on one issue: adopt the influencers' value if all who reveal agree."""
    values = set(revealed)
    if len(values) == 1:
        return values.pop()
    return current


def _influence_rule(agents: tuple, issues: tuple, inf: Mapping[int, tuple]):
    pos = {i: k for k, i in enumerate(agents)}

    def rule(s: frozenset, alpha: tuple) -> frozenset:
        out = set()
        for i in agents:
            out.update(a for a in alpha[pos[i]])
            for p in issues:
                revealed = [op_atom(k, p) in s for k in inf[i] if vis_atom(k, p) in alpha[pos[k]]]
                if unanimous_update(op_atom(i, p) in s, revealed):
                    out.add(op_atom(i, p))
        return frozenset(out)

    return rule


def build_influence(spec: InfluenceGameSpec) -> EncodedGame:
    agents = tuple(spec.agents)
    issues = tuple(sorted(spec.issues))
    for k, i in spec.network:
        if k == i:
            raise InputError(f"influence network has a self-loop at agent {i}")
        if k not in agents or i not in agents:
            raise InputError(f"influence edge {k}->{i} mentions an unknown agent")
    for table, what in ((spec.opinions, "opinion"), (spec.visible, "visibility")):
        for i, vals in table.items():
            if i not in agents:
                raise InputError(f"{what} profile given for unknown agent {i}")
            extra = set(vals) - set(issues)
            if extra:
                raise InputError(f"{what} profile of agent {i} mentions unknown issues {sorted(extra)}")
    inf = {i: spec.influencers(i) for i in agents}
    control = {i: frozenset(vis_atom(i, p) for p in issues) for i in agents}
    atoms = {op_atom(i, p) for i in agents for p in issues} | set().union(*control.values())
    transition = Hosted("influence-unanimous", _influence_rule(agents, issues, inf),
                        (tuple(sorted(spec.network)), issues))
    G = GameStructure(agents, tuple(atoms), control, FullProtocol(), transition)
    _raise_on_diagnostics(G)
    goals = _check_goals(G, spec.goals)
    initial = frozenset(
        {op_atom(i, p) for i in agents for p in spec.opinions.get(i, ())}
        | {vis_atom(i, p) for i in agents for p in spec.visible.get(i, ())}
    )
    return EncodedGame("influence", G, goals, initial)


# -- aggregation games -----------------------------------------------------


@dataclass(frozen=True)
class Majority:
    """Issue accepted iff at least ``quota`` agents accept it (default: strict majority)."""

    quota: int | None = None

    def threshold(self, n: int) -> int:
        return n // 2 + 1 if self.quota is None else self.quota

    def __call__(self, column: tuple) -> bool:
        return sum(column) >= self.threshold(len(column))


@dataclass(frozen=True)
class Custom:
    """Explicit aggregation table from an opinion column (one bit per agent) to a bit."""

    table: Mapping[tuple, bool]

    def __call__(self, column: tuple) -> bool:
        return bool(self.table[tuple(int(b) for b in column)])

    def check(self, n: int) -> None:
        for column in itertools.product((0, 1), repeat=n):
            if column not in self.table:
                raise InputError(f"aggregation table lacks the row {' '.join(map(str, column))}")


@dataclass(frozen=True)
class AggregationGameSpec:
    agents: tuple
    issues: tuple
    rule: Majority | Custom = Majority()
    goals: Mapping[int, Formula] = field(default_factory=dict)
    initial: frozenset | None = None


def aggregate(rule, issues: Iterable[str], alpha: tuple) -> frozenset:
    """Apply ``rule`` issue by issue to the profile ``alpha``."""
    return frozenset(p for p in issues if rule(tuple(p in a for a in alpha)))


def build_aggregation(spec: AggregationGameSpec) -> EncodedGame:
    agents = tuple(spec.agents)
    issues = tuple(sorted(spec.issues))
    rule = spec.rule
    if isinstance(rule, Custom):
        rule.check(len(agents))
    elif rule.quota is not None and rule.quota < 0:
        raise InputError(f"negative quota {rule.quota}")
    transition = Hosted("aggregation", lambda s, alpha: aggregate(rule, issues, alpha),
                        (rule, issues))
    control = {i: frozenset(issues) for i in agents}
    G = GameStructure(agents, issues, control, FullProtocol(), transition)
    _raise_on_diagnostics(G)
    goals = _check_goals(G, spec.goals)
    initial = None if spec.initial is None else G.check_state(spec.initial)
    return EncodedGame("aggregation", G, goals, initial)


# -- queries ---------------------------------------------------------------


def winning_strategy_query(game: EncodedGame, agent: int, s: Iterable[str] | None = None,
                           **kwargs) -> WinResult:
    """Does ``agent`` have a memoryless strategy enforcing its goal from ``s``?

    ``s`` defaults to the game's initial state.
    """
    if s is None:
        if game.initial is None:
            raise InputError("no state given and the game has no initial state")
        s = game.initial
    return ewin(game.structure, game.goals, agent, s, **kwargs)
