import itertools
import random

import pytest
from hypothesis import given, strategies as st

from cgspc.errors import InputError, PreconditionError, ResourceError, TotalityError
from cgspc.randomgen import random_exclusive_structure, random_shared_structure
from cgspc.structures import (
    ExclusiveUnion,
    ExplicitProtocol,
    GameStructure,
    LassoPath,
    StrategyProfile,
    TableTransition,
    Threshold,
    apply,
    enabled,
    is_exclusive,
    joint_actions,
    run,
    successors,
    validate,
)

from conftest import S


def codes(diags):
    return [d.code for d in diags]


class TestValidate:
    def test_wellformed_epc(self):
        G = GameStructure.build({1: {"p"}, 2: {"q"}})
        assert validate(G) == []

    def test_overlapping_control(self):
        G = GameStructure.build({1: {"p"}, 2: {"p"}})
        assert "NonDisjointControl" in codes(validate(G))

    def test_empty_protocol_entry(self):
        G = GameStructure.build({1: {"p"}})
        table = {(1, s): frozenset({S()}) for s in G.states()}
        table[(1, S("p"))] = frozenset()
        assert "EmptyProtocol" in codes(validate(G.with_protocol(ExplicitProtocol(table))))

    def test_incomplete_control_under_union(self):
        G = GameStructure.build({1: {"p"}}, atoms=["p", "q"])
        assert "IncompleteControl" in codes(validate(G))

    def test_action_outside_control(self):
        G = GameStructure.build({1: {"p"}, 2: {"q"}})
        table = {(1, s): frozenset({S("q")}) for s in G.states()}
        assert "ActionOutsideControl" in codes(validate(G.with_protocol(ExplicitProtocol(table))))

    def test_table_miss_is_reported(self):
        G = GameStructure.build({1: {"p"}}, transition=TableTransition({}))
        assert "TableMiss" in codes(validate(G))

    def test_bad_atom_name(self):
        G = GameStructure.build({1: {"X"}})
        assert "BadAtomName" in codes(validate(G))

    def test_sparse_agents(self):
        G = GameStructure.build({1: {"p"}, 3: {"q"}})
        assert "AgentsNotDense" in codes(validate(G))

    def test_atom_cap(self):
        with pytest.raises(ResourceError):
            GameStructure.build({1: {f"a{k}" for k in range(5)}}, atom_cap=4)


class TestEnabled:
    def test_full_protocol_single_atom(self):
        G = GameStructure.build({1: {"p"}, 2: {"p", "q"}}, transition=Threshold({}))
        assert set(enabled(G, 1, S())) == {S(), S("p")}

    def test_full_protocol_two_atoms(self):
        G = GameStructure.build({1: {"p"}, 2: {"p", "q"}}, transition=Threshold({}))
        assert len(enabled(G, 2, S())) == 4

    def test_explicit_protocol(self):
        G = GameStructure.build({1: {"p"}})
        G = G.with_protocol(ExplicitProtocol({(1, s): frozenset({S("p")}) for s in G.states()}))
        assert enabled(G, 1, S()) == (S("p"),)

    def test_canonical_order(self):
        G = GameStructure.build({1: {"q", "p"}})
        assert enabled(G, 1, S()) == (S(), S("p"), S("q"), S("p", "q"))

    def test_unknown_agent(self):
        G = GameStructure.build({1: {"p"}})
        with pytest.raises(InputError):
            enabled(G, 7, S())

    def test_missing_entry_for_constrained_agent(self):
        G = GameStructure.build({1: {"p"}})
        G = G.with_protocol(ExplicitProtocol({(1, S()): frozenset({S()})}))
        with pytest.raises(InputError):
            enabled(G, 1, S("p"))


class TestApply:
    def test_union(self):
        G = GameStructure.build({1: {"p"}, 2: {"q"}})
        assert apply(G, S(), (S("p"), S("q"))) == S("p", "q")

    def test_example1_rule(self, example1):
        assert apply(example1, S(), (S("p"), S("p", "q"))) == S("p", "q")
        assert apply(example1, S(), (S(), S("p", "q"))) == S("q")

    def test_threshold_count_not_greater(self):
        G = GameStructure.build({1: {"p"}, 2: {"p"}, 3: {"p"}}, transition=Threshold({"p": 1}))
        assert apply(G, S(), (S("p"), S(), S())) == S()
        assert apply(G, S(), (S("p"), S("p"), S())) == S("p")

    def test_uncontrolled_atoms_keep_value(self):
        G = GameStructure.build({1: {"p"}}, atoms=["p", "r"], transition=Threshold({}))
        assert apply(G, S("r"), (S(),)) == S("r")
        assert apply(G, S(), (S("p"),)) == S("p")

    def test_disabled_action(self):
        G = GameStructure.build({1: {"p"}})
        G = G.with_protocol(ExplicitProtocol({(1, s): frozenset({S()}) for s in G.states()}))
        with pytest.raises(PreconditionError):
            apply(G, S(), (S("p"),))

    def test_table_miss(self):
        G = GameStructure.build({1: {"p"}}, transition=TableTransition({}))
        with pytest.raises(TotalityError):
            apply(G, S(), (S(),))

    def test_mapping_joint_action(self):
        G = GameStructure.build({1: {"p"}, 2: {"q"}})
        assert apply(G, S(), {2: {"q"}, 1: set()}) == S("q")


class TestSuccessors:
    def test_example1_from_empty(self, example1):
        # enumerate the 2 x 4 joint actions by hand through the rule
        expected = set()
        for a1 in (S(), S("p")):
            for a2 in (S(), S("p"), S("q"), S("p", "q")):
                p = "p" in a1 and "p" in a2
                expected.add(frozenset({"p"} if p else set()) | (a2 & {"q"}))
        assert successors(example1, S()) == expected == {S(), S("q"), S("p"), S("p", "q")}

    def test_single_agent(self):
        G = GameStructure.build({1: {"p"}})
        assert successors(G, S()) == {S(), S("p")}

    def test_pinned_protocol_gives_singleton(self):
        G = GameStructure.build({1: {"p"}, 2: {"q"}})
        table = {(i, s): frozenset({S()}) for i in (1, 2) for s in G.states()}
        assert successors(G.with_protocol(ExplicitProtocol(table)), S("p")) == {S()}


class TestRun:
    def test_idle_union(self):
        G = GameStructure.build({1: {"p"}, 2: {"q"}})
        sigma = StrategyProfile.constant(G, {1: (), 2: ()})
        lam = run(G, S("p"), sigma)
        assert lam.prefix == (S("p"),) and lam.cycle == (S(),)
        lam = run(G, S(), sigma)
        assert lam.prefix == () and lam.cycle == (S(),)

    def test_example1_full_sets(self, example1):
        sigma = StrategyProfile.constant(example1, {1: {"p"}, 2: {"p", "q"}})
        assert run(example1, S(), sigma).cycle == (S("p", "q"),)

    def test_disabled_strategy(self):
        G = GameStructure.build({1: {"p"}})
        G = G.with_protocol(ExplicitProtocol({(1, s): frozenset({S()}) for s in G.states()}))
        with pytest.raises(PreconditionError):
            run(G, S(), StrategyProfile.constant(G, {1: {"p"}}))

    def test_partial_profile(self):
        G = GameStructure.build({1: {"p"}, 2: {"q"}})
        with pytest.raises(PreconditionError):
            run(G, S(), StrategyProfile.constant(G, {1: {"p"}}))


class TestLasso:
    def test_empty_cycle_rejected(self):
        with pytest.raises(InputError):
            LassoPath((S(),), ())

    def test_canonical_form(self):
        a = LassoPath((S("p"), S()), (S("q"), S(), S("q"), S()))
        b = LassoPath((S("p"),), (S(), S("q")))
        assert a.same_word(b)
        assert not a.same_word(LassoPath((S("p"),), (S("q"), S())))


@given(st.integers(0, 10**6))
def test_union_matches_set_union(seed):
    rng = random.Random(seed)
    G = random_exclusive_structure(rng, rng.randint(1, 3), ["p", "q", "r"][: rng.randint(1, 3)])
    assert is_exclusive(G)
    for s in G.states():
        for alpha in joint_actions(G, s):
            assert apply(G, s, alpha) == frozenset().union(*alpha)


@given(st.integers(0, 10**6))
def test_threshold_matches_vote_count(seed):
    rng = random.Random(seed)
    G = random_shared_structure(rng, max_agents=3, max_atoms=3, transition="threshold",
                                explicit_protocol_rate=0)
    m = G.transition.thresholds
    controlled = set().union(*G.control.values())
    for s in G.states():
        for alpha in joint_actions(G, s):
            votes = {p: sum(p in a for a in alpha) for p in G.atoms}
            want = {p for p in G.atoms if p in controlled and votes[p] > m.get(p, 0)}
            want |= {p for p in s if p not in controlled}
            assert apply(G, s, alpha) == frozenset(want)


@given(st.integers(0, 10**6))
def test_successors_nonempty_and_run_is_consistent(seed):
    rng = random.Random(seed)
    G = random_shared_structure(rng)
    sigma = StrategyProfile({
        i: {s: rng.choice(enabled(G, i, s)) for s in G.states()} for i in G.agents
    })
    for s in G.states():
        assert successors(G, s)
        lam = run(G, s, sigma)
        assert lam[0] == s
        for k in range(len(lam)):
            alpha = tuple(sigma.action(i, lam[k]) for i in G.agents)
            assert apply(G, lam[k], alpha) == lam[lam.next_position(k)]
        assert len(set(lam.states())) == len(lam)


def test_is_exclusive_detection():
    atoms = ["p", "q"]
    for owners in itertools.product([set(), {1}, {2}, {1, 2}], repeat=2):
        control = {i: {a for a, o in zip(atoms, owners) if i in o} for i in (1, 2)}
        G = GameStructure.build(control, atoms=atoms, transition=ExclusiveUnion())
        assert is_exclusive(G) == all(len(o) == 1 for o in owners)
