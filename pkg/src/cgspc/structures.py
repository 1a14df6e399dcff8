"""Concurrent game structures with exclusive or shared propositional control.

States and actions are frozensets of atom names: a state lists the atoms that
are true, an action lists the atoms its agent sets to true (every other atom
the agent controls is set to false).  Joint actions are tuples aligned with
``GameStructure.agents``.

Atoms are ordered lexicographically by name.  The canonical index of a state
is the binary number whose i-th bit is the i-th atom, and every enumeration
(states, powersets, joint actions) runs in that order.
"""

from __future__ import annotations

import itertools
import re
from collections.abc import Callable, Iterable, Iterator, Mapping
from dataclasses import dataclass, field

from cgspc.errors import InputError, PreconditionError, ResourceError, TotalityError

State = frozenset
Action = frozenset
JointAction = tuple

DEFAULT_ATOM_CAP = 20
STAR_AGENT = 0  # the aggregating agent added by the shared-to-exclusive reduction
ATOM_PATTERN = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
KEYWORDS = frozenset({"X", "U", "F", "G", "true", "false"})

EMPTY = frozenset()


def agent_label(agent: int) -> str:
    return "*" if agent == STAR_AGENT else str(agent)


def powerset(atoms: Iterable[str]) -> list[frozenset]:
    """All subsets of ``atoms`` in canonical (binary counting) order."""
    ordered = sorted(atoms)
    out = []
    for mask in range(1 << len(ordered)):
        out.append(frozenset(a for k, a in enumerate(ordered) if mask >> k & 1))
    return out


def format_set(atoms: Iterable[str]) -> str:
    return "{" + ",".join(sorted(atoms)) + "}"


# -- protocols -------------------------------------------------------------


@dataclass(frozen=True)
class FullProtocol:
    """Every agent may play any subset of its controlled atoms."""

    kind = "full"


@dataclass(frozen=True)
class ExplicitProtocol:
    """Protocol given as a table ``(agent, state) -> set of actions``.

    Agents that never appear in the table are unconstrained.  An agent that
    does appear must have an entry for every state it is queried at.
    """

    table: Mapping[tuple[int, frozenset], frozenset] = field(default_factory=dict)
    agents: frozenset | None = field(default=None, compare=False)
    kind = "explicit"

    def constrained_agents(self) -> frozenset:
        if self.agents is not None:
            return self.agents
        found = frozenset(agent for agent, _ in self.table)
        object.__setattr__(self, "agents", found)
        return found


Protocol = FullProtocol | ExplicitProtocol


# -- transitions -----------------------------------------------------------


@dataclass(frozen=True)
class ExclusiveUnion:
    """Successor is the union of the chosen actions."""

    kind = "epc"


@dataclass(frozen=True)
class Threshold:
    """``p`` becomes true iff more than ``thresholds[p]`` agents set it.

    Atoms nobody controls keep their current value.  Controlled atoms missing
    from ``thresholds`` use threshold 0.
    """

    thresholds: Mapping[str, int] = field(default_factory=dict)
    kind = "threshold"

    def threshold(self, atom: str) -> int:
        return self.thresholds.get(atom, 0)


@dataclass(frozen=True)
class TableTransition:
    table: Mapping[tuple[frozenset, tuple], frozenset] = field(default_factory=dict)
    kind = "table"


@dataclass(frozen=True)
class Hosted:
    """An arbitrary deterministic rule installed by a game encoder.

    Two hosted rules compare equal when ``name`` and ``params`` agree; the
    callable itself is not compared.
    """

    name: str
    rule: Callable[[frozenset, tuple], frozenset] = field(compare=False, repr=False)
    params: tuple = ()
    kind = "hosted"


TransitionSpec = ExclusiveUnion | Threshold | TableTransition | Hosted


# -- game structure --------------------------------------------------------


@dataclass(frozen=True)
class GameStructure:
    agents: tuple
    atoms: tuple
    control: Mapping[int, frozenset]
    protocol: Protocol = FullProtocol()
    transition: TransitionSpec = ExclusiveUnion()
    atom_cap: int = field(default=DEFAULT_ATOM_CAP, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        object.__setattr__(self, "atoms", tuple(sorted(set(self.atoms))))
        object.__setattr__(
            self, "control", {i: frozenset(self.control.get(i, ())) for i in self.agents}
        )
        if len(self.atoms) > self.atom_cap:
            raise ResourceError(
                f"{len(self.atoms)} atoms exceed the cap of {self.atom_cap}"
            )
        object.__setattr__(self, "_bit", {a: 1 << k for k, a in enumerate(self.atoms)})
        object.__setattr__(self, "_position", {i: k for k, i in enumerate(self.agents)})
        object.__setattr__(
            self, "_full", {i: tuple(powerset(self.control[i])) for i in self.agents}
        )
        object.__setattr__(self, "_cache", {})

    @classmethod
    def build(cls, control: Mapping[int, Iterable[str]], atoms: Iterable[str] | None = None,
              protocol: Protocol | None = None, transition: TransitionSpec | None = None,
              agents: Iterable[int] | None = None, atom_cap: int = DEFAULT_ATOM_CAP):
        control = {int(i): frozenset(c) for i, c in control.items()}
        if agents is None:
            agents = sorted(control)
        universe = set(atoms) if atoms is not None else set()
        for c in control.values():
            universe |= c
        return cls(
            agents=tuple(agents),
            atoms=tuple(universe),
            control=control,
            protocol=protocol or FullProtocol(),
            transition=transition or ExclusiveUnion(),
            atom_cap=atom_cap,
        )

    @property
    def atom_set(self) -> frozenset:
        return frozenset(self.atoms)

    @property
    def uncontrolled(self) -> frozenset:
        controlled = set()
        for c in self.control.values():
            controlled |= c
        return frozenset(self.atoms) - controlled

    @property
    def n_states(self) -> int:
        return 1 << len(self.atoms)

    def index(self, state: frozenset) -> int:
        """Canonical index of ``state``; also the sort key for states."""
        bit = self._bit
        return sum(bit[a] for a in state)

    def state_of(self, index: int) -> frozenset:
        return frozenset(a for k, a in enumerate(self.atoms) if index >> k & 1)

    def states(self) -> Iterator[frozenset]:
        for k in range(self.n_states):
            yield self.state_of(k)

    def position(self, agent: int) -> int:
        try:
            return self._position[agent]
        except KeyError:
            raise InputError(f"unknown agent {agent_label(agent)}") from None

    def check_state(self, state: Iterable[str]) -> frozenset:
        state = frozenset(state)
        extra = state - self.atom_set
        if extra:
            raise InputError(f"state mentions atoms outside the universe: {sorted(extra)}")
        return state

    def with_protocol(self, protocol: Protocol) -> GameStructure:
        return GameStructure(self.agents, self.atoms, self.control, protocol,
                             self.transition, self.atom_cap)


def is_exclusive(G: GameStructure) -> bool:
    """True iff the control sets are pairwise disjoint and cover every atom."""
    seen: set = set()
    for i in G.agents:
        if seen & G.control[i]:
            return False
        seen |= G.control[i]
    return seen == set(G.atoms)


# -- diagnostics -----------------------------------------------------------


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str

    def __str__(self):
        return f"{self.code}: {self.message}"


def _structural_diagnostics(G: GameStructure, reserved_prefixes: tuple) -> list[Diagnostic]:
    out = []
    for a in G.atoms:
        if not ATOM_PATTERN.match(a) or a in KEYWORDS:
            out.append(Diagnostic("BadAtomName", f"{a!r} is not a valid atom name"))
        elif any(a.startswith(pre) for pre in reserved_prefixes):
            out.append(Diagnostic("ReservedName", f"atom {a!r} uses a reserved prefix"))
    ordinary = [i for i in G.agents if i != STAR_AGENT]
    if len(set(G.agents)) != len(G.agents):
        out.append(Diagnostic("DuplicateAgent", "agent list contains duplicates"))
    if sorted(ordinary) != list(range(1, len(ordinary) + 1)):
        out.append(Diagnostic("AgentsNotDense", f"agents must be 1..n, got {list(G.agents)}"))
    for i in G.agents:
        extra = G.control[i] - set(G.atoms)
        if extra:
            out.append(Diagnostic("UnknownAtom", f"agent {agent_label(i)} controls {sorted(extra)}"))
    if isinstance(G.transition, ExclusiveUnion):
        for i, j in itertools.combinations(G.agents, 2):
            shared = G.control[i] & G.control[j]
            if shared:
                out.append(Diagnostic(
                    "NonDisjointControl",
                    f"agents {agent_label(i)} and {agent_label(j)} both control {sorted(shared)}"))
        if G.uncontrolled:
            out.append(Diagnostic(
                "IncompleteControl", f"atoms {sorted(G.uncontrolled)} are controlled by nobody"))
    if isinstance(G.transition, Threshold):
        for a, m in G.transition.thresholds.items():
            if a not in G.atoms:
                out.append(Diagnostic("UnknownAtom", f"threshold given for unknown atom {a!r}"))
            if not isinstance(m, int) or m < 0:
                out.append(Diagnostic("NegativeThreshold", f"threshold of {a!r} is {m!r}"))
    if isinstance(G.protocol, ExplicitProtocol):
        for (i, s), actions in G.protocol.table.items():
            if i not in G.agents:
                out.append(Diagnostic("UnknownAgent", f"protocol entry for agent {i}"))
                continue
            if not actions:
                out.append(Diagnostic(
                    "EmptyProtocol", f"d({agent_label(i)}, {format_set(s)}) is empty"))
            for act in actions:
                if not act <= G.control[i]:
                    out.append(Diagnostic(
                        "ActionOutsideControl",
                        f"d({agent_label(i)}, {format_set(s)}) contains {format_set(act)}"))
    return out


def validate(G: GameStructure, initial: Iterable[str] | None = None,
             reserved_prefixes: tuple = ()) -> list[Diagnostic]:
    """Check every structural invariant of ``G``; returns one diagnostic per violation.

    Protocol and transition totality are checked on the states reachable from
    ``initial`` when given, otherwise on all states.
    """
    out = _structural_diagnostics(G, reserved_prefixes)
    if out:
        return out
    if initial is not None:
        try:
            start = [G.check_state(initial)]
        except InputError as exc:
            return [Diagnostic("BadInitialState", str(exc))]
    else:
        start = list(G.states())
    seen = set(start)
    frontier = list(start)
    while frontier:
        s = frontier.pop()
        try:
            options = [enabled(G, i, s) for i in G.agents]
        except InputError as exc:
            out.append(Diagnostic("MissingProtocolEntry", str(exc)))
            continue
        for alpha in itertools.product(*options):
            try:
                t = _apply(G, s, alpha)
            except TotalityError as exc:
                out.append(Diagnostic("TableMiss", str(exc)))
                continue
            if not t <= G.atom_set:
                out.append(Diagnostic(
                    "TransitionOutOfUniverse", f"successor {format_set(t)} leaves the universe"))
                continue
            if isinstance(G.transition, Hosted) and _apply(G, s, alpha) != t:
                out.append(Diagnostic("NondeterministicTransition", f"rule {G.transition.name}"))
            if t not in seen:
                seen.add(t)
                frontier.append(t)
    return out


# -- semantics -------------------------------------------------------------


def enabled(G: GameStructure, agent: int, state: frozenset) -> tuple:
    """The actions ``d(agent, state)`` in canonical order."""
    cache = G._cache
    key = ("d", agent, state)
    hit = cache.get(key)
    if hit is not None:
        return hit
    if agent not in G.control:
        raise InputError(f"unknown agent {agent_label(agent)}")
    protocol = G.protocol
    if isinstance(protocol, ExplicitProtocol) and agent in protocol.constrained_agents():
        try:
            actions = protocol.table[(agent, state)]
        except KeyError:
            raise InputError(
                f"no protocol entry for agent {agent_label(agent)} at {format_set(state)}"
            ) from None
        result = tuple(sorted(actions, key=G.index))
    else:
        result = G._full[agent]
    cache[key] = result
    return result


def joint_actions(G: GameStructure, state: frozenset) -> Iterator[tuple]:
    """Enabled joint actions at ``state`` (the set Act(s))."""
    return itertools.product(*(enabled(G, i, state) for i in G.agents))


def _as_joint(G: GameStructure, alpha) -> tuple:
    if isinstance(alpha, Mapping):
        missing = set(G.agents) - set(alpha)
        if missing:
            raise PreconditionError(f"joint action lacks agents {sorted(missing)}")
        return tuple(frozenset(alpha[i]) for i in G.agents)
    alpha = tuple(frozenset(a) for a in alpha)
    if len(alpha) != len(G.agents):
        raise PreconditionError(f"joint action has {len(alpha)} components, expected {len(G.agents)}")
    return alpha


def _apply(G: GameStructure, s: frozenset, alpha: tuple) -> frozenset:
    tr = G.transition
    if isinstance(tr, ExclusiveUnion):
        return frozenset().union(*alpha)
    if isinstance(tr, Threshold):
        counts: dict = {}
        for act in alpha:
            for p in act:
                counts[p] = counts.get(p, 0) + 1
        kept = s & G.uncontrolled
        return kept | frozenset(p for p, c in counts.items() if c > tr.threshold(p))
    if isinstance(tr, TableTransition):
        try:
            return tr.table[(s, alpha)]
        except KeyError:
            raise TotalityError(
                f"no table row for state {format_set(s)} and action "
                + " ".join(format_set(a) for a in alpha)
            ) from None
    return frozenset(tr.rule(s, alpha))


def apply(G: GameStructure, s: Iterable[str], alpha) -> frozenset:
    """The successor ``tau(s, alpha)``; ``alpha`` must be enabled at ``s``."""
    s = G.check_state(s)
    alpha = _as_joint(G, alpha)
    for i, act in zip(G.agents, alpha):
        if act not in enabled(G, i, s):
            raise PreconditionError(
                f"action {format_set(act)} of agent {agent_label(i)} is not enabled at {format_set(s)}"
            )
    return _apply(G, s, alpha)


def successors(G: GameStructure, s: Iterable[str]) -> frozenset:
    """Succ(s): images of every enabled joint action."""
    s = G.check_state(s)
    key = ("succ", s)
    hit = G._cache.get(key)
    if hit is None:
        hit = frozenset(_apply(G, s, alpha) for alpha in joint_actions(G, s))
        G._cache[key] = hit
    return hit


def is_step(G: GameStructure, s: frozenset, t: frozenset) -> bool:
    """True iff ``t`` is in Succ(s)."""
    if isinstance(G.transition, ExclusiveUnion) and is_exclusive(G):
        if not t <= G.atom_set:
            return False
        return all(t & G.control[i] in enabled(G, i, s) for i in G.agents)
    return t in successors(G, s)


def reachable(G: GameStructure, start: Iterable[frozenset]) -> list[frozenset]:
    """States reachable from ``start`` (inclusive), in canonical order."""
    seen = set(start)
    frontier = list(seen)
    while frontier:
        s = frontier.pop()
        for t in successors(G, s):
            if t not in seen:
                seen.add(t)
                frontier.append(t)
    return sorted(seen, key=G.index)


# -- strategies and paths --------------------------------------------------


@dataclass
class StrategyProfile:
    """Memoryless strategies for a set of agents: ``assignments[i][s]`` is ``sigma_i(s)``."""

    assignments: dict = field(default_factory=dict)

    @property
    def agents(self) -> tuple:
        return tuple(sorted(self.assignments))

    def action(self, agent: int, state: frozenset) -> frozenset:
        try:
            return self.assignments[agent][state]
        except KeyError:
            raise PreconditionError(
                f"strategy of agent {agent_label(agent)} undefined at {format_set(state)}"
            ) from None

    @classmethod
    def constant(cls, G: GameStructure, actions: Mapping[int, Iterable[str]]) -> StrategyProfile:
        return cls({i: {s: frozenset(a) for s in G.states()} for i, a in actions.items()})

    def check(self, G: GameStructure, states: Iterable[frozenset] | None = None) -> None:
        """Raise PreconditionError unless every covered action is enabled."""
        for i, table in self.assignments.items():
            G.position(i)
            for s in (table if states is None else states):
                act = self.action(i, s)
                if act not in enabled(G, i, s):
                    raise PreconditionError(
                        f"sigma_{agent_label(i)}({format_set(s)}) = {format_set(act)} is not enabled"
                    )


@dataclass(frozen=True)
class LassoPath:
    """The infinite path ``prefix . cycle^omega``.

    ``actions``, when present, holds one joint action per position of
    ``prefix + cycle``; the last one leads back to ``cycle[0]``.
    """

    prefix: tuple
    cycle: tuple
    actions: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(frozenset(s) for s in self.prefix))
        object.__setattr__(self, "cycle", tuple(frozenset(s) for s in self.cycle))
        if not self.cycle:
            raise InputError("lasso cycle must be nonempty")

    def __len__(self):
        return len(self.prefix) + len(self.cycle)

    def __getitem__(self, k: int) -> frozenset:
        if k < len(self.prefix):
            return self.prefix[k]
        return self.cycle[(k - len(self.prefix)) % len(self.cycle)]

    def next_position(self, k: int) -> int:
        """Successor of position ``k`` among the ``len(self)`` distinct positions."""
        return k + 1 if k + 1 < len(self) else len(self.prefix)

    def unroll(self, n: int) -> list[frozenset]:
        return [self[k] for k in range(n)]

    def states(self) -> tuple:
        return self.prefix + self.cycle

    def canonical(self) -> LassoPath:
        """Shortest prefix and cycle denoting the same infinite word."""
        cycle = list(self.cycle)
        n = len(cycle)
        for d in range(1, n + 1):
            if n % d == 0 and cycle == cycle[d:] + cycle[:d]:
                cycle = cycle[:d]
                break
        prefix = list(self.prefix)
        while prefix and prefix[-1] == cycle[-1]:
            prefix.pop()
            cycle = [cycle[-1]] + cycle[:-1]
        return LassoPath(tuple(prefix), tuple(cycle))

    def same_word(self, other: LassoPath) -> bool:
        a, b = self.canonical(), other.canonical()
        return a.prefix == b.prefix and a.cycle == b.cycle


def run(G: GameStructure, s: Iterable[str], profile: StrategyProfile) -> LassoPath:
    """The unique computation from ``s`` when every agent follows ``profile``."""
    s = G.check_state(s)
    missing = set(G.agents) - set(profile.assignments)
    if missing:
        raise PreconditionError(f"profile does not cover agents {sorted(missing)}")
    seen: dict = {}
    trace: list = []
    acts: list = []
    while s not in seen:
        seen[s] = len(trace)
        alpha = tuple(profile.action(i, s) for i in G.agents)
        for i, act in zip(G.agents, alpha):
            if act not in enabled(G, i, s):
                raise PreconditionError(
                    f"sigma_{agent_label(i)}({format_set(s)}) = {format_set(act)} is not enabled"
                )
        trace.append(s)
        acts.append(alpha)
        s = _apply(G, s, alpha)
    k = seen[s]
    return LassoPath(tuple(trace[:k]), tuple(trace[k:]), tuple(acts))
