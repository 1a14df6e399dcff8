"""Model checking ATL* under memoryless strategies.

A coalition formula ``<<C>> psi`` holds at ``s`` when some memoryless joint
strategy of ``C`` makes every computation from ``s`` satisfy ``psi``; agents
outside ``C`` are unrestricted.  Two routes decide it:

* ATL-shaped bodies (``X a`` and ``a U b``) are labelled by fixpoints over
  the one-step force operator;
* everything else is decided by searching the coalition's memoryless
  strategies on the states they reach, testing each candidate with the
  universal LTL check on the induced structure.

Nested coalition subformulas inside ``psi`` are evaluated first and enter the
LTL check as fresh labels.
"""

from __future__ import annotations

import itertools
import time
from collections import deque
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field

from cgspc import ltl
from cgspc.errors import InputError, PreconditionError, ResourceError
from cgspc.formulas import (
    Atom,
    Coalition,
    Formula,
    Fragment,
    Next,
    Not,
    Or,
    Top,
    Until,
    check_vocabulary,
    classify,
    is_atl_coalition,
    is_state_formula,
)
from cgspc.ltl import eval_ltl_on_lasso  # noqa: F401  (re-exported oracle)
from cgspc.structures import (
    GameStructure,
    StrategyProfile,
    _apply,
    enabled,
    format_set,
    reachable,
    successors,
)

DEFAULT_STRATEGY_CAP = 10**7


@dataclass
class InducedStructure:
    """States and one-step successors once a coalition strategy is fixed."""

    states: tuple
    steps: dict

    def successors(self, s: frozenset) -> frozenset:
        return self.steps[s]


@dataclass(frozen=True)
class CoalitionOption:
    """One joint choice of a coalition at a state and the successors it allows."""

    choice: tuple  # actions of the coalition members, in agent order
    succ: frozenset


def coalition_options(G: GameStructure, coalition: Iterable[int], s: frozenset) -> list:
    """Every coalition choice at ``s`` in canonical order, with its successor set."""
    members = set(coalition)
    cache_key = ("opts", frozenset(members), s)
    hit = G._cache.get(cache_key)
    if hit is not None:
        return hit
    member_pos = [k for k, i in enumerate(G.agents) if i in members]
    other_pos = [k for k, i in enumerate(G.agents) if i not in members]
    lists = [enabled(G, i, s) for i in G.agents]
    out = []
    for choice in itertools.product(*(lists[k] for k in member_pos)):
        succ = set()
        joint = [None] * len(G.agents)
        for k, a in zip(member_pos, choice):
            joint[k] = a
        for rest in itertools.product(*(lists[k] for k in other_pos)):
            for k, a in zip(other_pos, rest):
                joint[k] = a
            succ.add(_apply(G, s, tuple(joint)))
        out.append(CoalitionOption(tuple(choice), frozenset(succ)))
    G._cache[cache_key] = out
    return out


def induced(G: GameStructure, profile: StrategyProfile, coalition: Iterable[int],
            start: Iterable[frozenset] | None = None) -> InducedStructure:
    """The structure whose paths from ``s`` are exactly ``out(s, sigma_C)``.

    With ``start`` only the states reachable from it are built, so the
    strategy needs to be defined there only.
    """
    members = sorted(set(coalition), key=G.position)
    if set(profile.assignments) != set(members):
        raise InputError(
            f"strategy covers agents {sorted(profile.assignments)}, coalition is {members}"
        )
    steps: dict = {}

    def step(s):
        choice = tuple(profile.action(i, s) for i in members)
        for opt in coalition_options(G, members, s):
            if opt.choice == choice:
                return opt.succ
        raise PreconditionError(
            f"strategy plays a non-enabled action at {format_set(s)}"
        )

    if start is None:
        for s in G.states():
            steps[s] = step(s)
    else:
        frontier = [G.check_state(s) for s in start]
        while frontier:
            s = frontier.pop()
            if s in steps:
                continue
            steps[s] = step(s)
            frontier.extend(t for t in steps[s] if t not in steps)
    return InducedStructure(tuple(sorted(steps, key=G.index)), steps)


def check_universal_ltl(K: InducedStructure, s: frozenset, psi: Formula,
                        holds=ltl._default_holds, method: str = "auto") -> bool:
    """True iff every infinite path of ``K`` from ``s`` satisfies the LTL formula ``psi``.

    ``method="tableau"`` always uses the Buchi product, even for until-free ``psi``.
    """
    if classify(psi) is not Fragment.LTL:
        raise PreconditionError("check_universal_ltl needs an LTL formula")
    return ltl.holds_universally(frozenset(s), K.steps.__getitem__, psi, holds, method)


# -- ATL fixpoints ---------------------------------------------------------


def _force(G: GameStructure, coalition: frozenset, target: frozenset, domain) -> set:
    return {
        s for s in domain
        if any(opt.succ <= target for opt in coalition_options(G, coalition, s))
    }


def _fixpoint_sat(G: GameStructure, f: Formula, domain: tuple, memo: dict) -> frozenset:
    hit = memo.get(f)
    if hit is not None:
        return hit
    if isinstance(f, Atom):
        out = frozenset(s for s in domain if f.name in s)
    elif isinstance(f, Top):
        out = frozenset(domain)
    elif isinstance(f, Not):
        out = frozenset(domain) - _fixpoint_sat(G, f.arg, domain, memo)
    elif isinstance(f, Or):
        out = _fixpoint_sat(G, f.left, domain, memo) | _fixpoint_sat(G, f.right, domain, memo)
    elif isinstance(f, Coalition) and isinstance(f.arg, Next):
        target = _fixpoint_sat(G, f.arg.arg, domain, memo)
        out = frozenset(_force(G, f.agents, target, domain))
    elif isinstance(f, Coalition) and isinstance(f.arg, Until):
        keep = _fixpoint_sat(G, f.arg.left, domain, memo)
        goal = _fixpoint_sat(G, f.arg.right, domain, memo)
        z = set(goal)
        candidates = [s for s in domain if s in keep and s not in goal]
        while True:
            frozen = frozenset(z)
            new = {s for s in candidates if s not in z
                   and any(opt.succ <= frozen for opt in coalition_options(G, f.agents, s))}
            if not new:
                break
            z |= new
        out = frozenset(z)
    else:
        raise PreconditionError(f"not an ATL formula: {f}")
    memo[f] = out
    return out


def check_atl_fixpoint(G: GameStructure, phi: Formula, states: Iterable[frozenset] | None = None) -> frozenset:
    """States satisfying the ATL formula ``phi``.

    ``states`` restricts the computation to a set closed under successors
    (default: every state).
    """
    if classify(phi) is Fragment.ATLSTAR or not is_state_formula(phi):
        raise PreconditionError(f"not an ATL state formula: {phi}")
    domain = tuple(G.states()) if states is None else tuple(states)
    return _fixpoint_sat(G, phi, domain, {})


# -- general route: strategy search ----------------------------------------


@dataclass
class SearchStats:
    nodes: int = 0
    ltl_checks: int = 0
    states_labelled: int = 0


class ModelChecker:
    """Evaluates state formulas on one structure, memoising every label.

    ``use_fixpoint=False`` forces the strategy-search route even for ATL
    shapes, which the test suite uses to cross-check the two routes.
    """

    def __init__(self, G: GameStructure, strategy_cap: int = DEFAULT_STRATEGY_CAP,
                 use_fixpoint: bool = True):
        self.G = G
        self.strategy_cap = strategy_cap
        self.use_fixpoint = use_fixpoint
        self.stats = SearchStats()
        self._labels: dict = {}
        self._witness: dict = {}

    # public entry points

    def holds(self, f: Formula, s: frozenset) -> bool:
        if isinstance(f, Atom):
            return f.name in s
        if isinstance(f, Top):
            return True
        if isinstance(f, Not):
            return not self.holds(f.arg, s)
        if isinstance(f, Or):
            return self.holds(f.left, s) or self.holds(f.right, s)
        if isinstance(f, Coalition):
            table = self._labels.setdefault(f, {})
            v = table.get(s)
            if v is None:
                v = self._coalition(f, s)
                table[s] = v
            return v
        raise InputError(f"{f} is a path formula; state formulas are required here")

    def witness(self, f: Coalition, s: frozenset) -> StrategyProfile | None:
        """A memoryless strategy for ``f`` at ``s`` found by the search, if any."""
        key = (f, s)
        if key not in self._witness:
            verdict, assignment = self._search(f, s)
            self._labels.setdefault(f, {})[s] = verdict
            self._witness[key] = assignment
        assignment = self._witness[key]
        if assignment is None:
            return None
        members = sorted(f.agents, key=self.G.position)
        return StrategyProfile({
            i: {t: choice[k] for t, choice in assignment.items()} for k, i in enumerate(members)
        })

    # internals

    def _coalition(self, f: Coalition, s: frozenset) -> bool:
        self.stats.states_labelled += 1
        if self.use_fixpoint and is_atl_coalition(f):
            domain = tuple(reachable(self.G, [s]))
            sat = _fixpoint_sat(self.G, f, domain, {})
            table = self._labels.setdefault(f, {})
            for t in domain:
                table[t] = t in sat
            return s in sat
        verdict, assignment = self._search(f, s)
        self._witness[(f, s)] = assignment
        return verdict

    def _search(self, f: Coalition, s: frozenset):
        """Depth-first search over memoryless strategies of ``f.agents`` from ``s``.

        Returns ``(verdict, assignment)`` where ``assignment`` maps each state
        reachable under the witness to the coalition's choice there.
        """
        G = self.G
        coalition = frozenset(f.agents)
        psi, names = _abstract(f.arg)
        label_of = names.get

        def holds(t, name):
            sub = label_of(name)
            if sub is None:
                return name in t
            return self.holds(sub, t)

        props = tuple(sorted(ltl.tableau_for(psi).props))
        val_cache: dict = {}

        def val(t):
            v = val_cache.get(t)
            if v is None:
                v = frozenset(p for p in props if holds(t, p))
                val_cache[t] = v
            return v

        pruned: dict = {}

        def options(t):
            hit = pruned.get(t)
            if hit is None:
                hit = _minimal_options(coalition_options(G, coalition, t), G, coalition, val)
                pruned[t] = hit
            return hit

        full_succ = {}

        def free_steps(t):
            hit = full_succ.get(t)
            if hit is None:
                hit = successors(G, t)
                full_succ[t] = hit
            return hit

        assigned: dict = {}

        def optimistic(t):
            k = assigned.get(t)
            return options(t)[k].succ if k is not None else free_steps(t)

        def pessimistic(t):
            k = assigned.get(t)
            return options(t)[k].succ if k is not None else ()

        stats = self.stats

        # an until-free goal only sees the first `horizon` + 1 positions, so
        # choices at states farther than that from s cannot matter
        horizon = ltl.next_depth(psi) if not ltl.has_until(psi) else None

        def pending_states():
            """Unassigned states reachable under the assignment, nearest first."""
            dist = {s: 0}
            queue = deque([s])
            pending = []
            while queue:
                t = queue.popleft()
                k = assigned.get(t)
                if k is None:
                    if horizon is not None and dist[t] >= horizon:
                        continue
                    opts = options(t)
                    if len(opts) == 1:
                        assigned[t] = 0
                        k = 0
                    else:
                        pending.append(t)
                        continue
                for u in options(t)[k].succ:
                    if u not in dist:
                        dist[u] = dist[t] + 1
                        queue.append(u)
            return pending

        def finish():
            # any completion works once the optimistic check passed
            seen = {s}
            stack = [s]
            while stack:
                t = stack.pop()
                for u in options(t)[assigned.setdefault(t, 0)].succ:
                    if u not in seen:
                        seen.add(u)
                        stack.append(u)
            return {t: options(t)[assigned[t]].choice for t in sorted(seen, key=G.index)}

        def explore():
            stats.nodes += 1
            if stats.nodes > self.strategy_cap:
                raise ResourceError(
                    f"strategy search exceeded the cap of {self.strategy_cap} candidates")
            trail = list(assigned)
            pend = pending_states()
            stats.ltl_checks += 1
            if not ltl.exists_violation(s, optimistic, psi, holds, total=True):
                return True
            if pend:
                stats.ltl_checks += 1
                # every completion keeps the assigned paths: a lost prefix or
                # a violating lasso among them rules the subtree out
                if (ltl.doomed_prefix(s, pessimistic, psi, holds)
                        or ltl.exists_violation(s, pessimistic, psi, holds)):
                    _rollback(assigned, trail)
                    return False
                t = pend[0]
                for k in range(len(options(t))):
                    assigned[t] = k
                    if explore():
                        return True
                    del assigned[t]
            _rollback(assigned, trail)
            return False

        if explore():
            return True, finish()
        return False, None


def _rollback(assigned: dict, trail: list) -> None:
    keep = set(trail)
    for t in [t for t in assigned if t not in keep]:
        del assigned[t]


def _abstract(psi: Formula):
    """Replace maximal coalition subformulas of ``psi`` by fresh label atoms."""
    names: dict = {}
    back: dict = {}

    def go(f):
        if isinstance(f, Coalition):
            name = back.get(f)
            if name is None:
                name = f"#{len(back)}"
                back[f] = name
                names[name] = f
            return Atom(name)
        if isinstance(f, (Atom, Top)):
            return f
        if isinstance(f, Not):
            return Not(go(f.arg))
        if isinstance(f, Next):
            return Next(go(f.arg))
        if isinstance(f, Or):
            return Or(go(f.left), go(f.right))
        if isinstance(f, Until):
            return Until(go(f.left), go(f.right))
        raise TypeError(f"unexpected node {f!r}")

    return go(psi), names


def _minimal_options(opts: list, G: GameStructure, coalition: frozenset, val) -> list:
    """Drop coalition choices that can only allow more behaviour than another choice.

    A successor the coalition cannot influence (a single successor set there)
    is identified with any other such successor carrying the same labels and
    the same successors.  Choices whose successor signature strictly contains
    another's are dropped; among equal signatures the first is kept.
    """
    if len(opts) <= 1:
        return opts

    def key(u):
        u_opts = coalition_options(G, coalition, u)
        first = u_opts[0].succ
        if all(o.succ == first for o in u_opts):
            return ("forced", val(u), first)
        return ("state", u)

    sigs = []
    seen = set()
    for opt in opts:
        sig = frozenset(key(u) for u in opt.succ)
        if sig in seen:
            continue
        seen.add(sig)
        sigs.append((sig, opt))
    return [opt for sig, opt in sigs if not any(other < sig for other, _ in sigs)]


# -- top-level queries -----------------------------------------------------


def check_state(G: GameStructure, s: Iterable[str], phi: Formula, *,
                strategy_cap: int = DEFAULT_STRATEGY_CAP, use_fixpoint: bool = True) -> bool:
    """Decide ``(G, s) |= phi``."""
    s = G.check_state(s)
    check_vocabulary(phi, G.atoms, G.agents)
    if not is_state_formula(phi):
        raise InputError(f"{phi} is not a state formula")
    return ModelChecker(G, strategy_cap, use_fixpoint).holds(phi, s)


@dataclass
class WinResult:
    verdict: bool
    witness: StrategyProfile | None
    stats: SearchStats = field(default_factory=SearchStats)
    seconds: float = 0.0


def ewin(G: GameStructure, goals: Mapping[int, Formula], agent: int, s: Iterable[str], *,
         strategy_cap: int = DEFAULT_STRATEGY_CAP) -> WinResult:
    """Does ``agent`` have a memoryless strategy enforcing its LTL goal from ``s``?"""
    s = G.check_state(s)
    G.position(agent)
    goal = goals.get(agent)
    if goal is None:
        raise InputError(f"agent {agent} has no goal")
    if classify(goal) is not Fragment.LTL:
        raise InputError(f"goal of agent {agent} is not an LTL formula")
    check_vocabulary(goal, G.atoms, G.agents)
    t0 = time.perf_counter()
    mc = ModelChecker(G, strategy_cap)
    f = Coalition(frozenset({agent}), goal)
    witness = mc.witness(f, s)
    verdict = witness is not None
    if witness is not None:
        table = witness.assignments[agent]
        for t in reachable(G, [s]):
            if t not in table:
                table[t] = enabled(G, agent, t)[0]
    return WinResult(verdict, witness, mc.stats, time.perf_counter() - t0)
