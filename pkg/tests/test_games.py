import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from cgspc.checker import check_state
from cgspc.errors import InputError
from cgspc.formulas import parse
from cgspc.games import (
    AggregationGameSpec,
    Custom,
    InfluenceGameSpec,
    Majority,
    aggregate,
    build_aggregation,
    build_ibg,
    build_influence,
    op_atom,
    unanimous_update,
    vis_atom,
    winning_strategy_query,
)
from cgspc.structures import (
    ExclusiveUnion,
    GameStructure,
    Threshold,
    apply,
    is_exclusive,
    joint_actions,
    reachable,
)

from conftest import S
from oracles import GAME_FACTORIES, brute_force_enforce


def influence(edges, opinions, visible=None, goals=None, agents=(1, 2)):
    return build_influence(InfluenceGameSpec(
        agents, ("p",), frozenset(edges),
        {i: frozenset(v) for i, v in opinions.items()},
        {i: frozenset(v) for i, v in (visible or {}).items()},
        goals or {},
    ))


class TestIbg:
    def test_example1(self):
        game = build_ibg({1: {"p"}, 2: {"p", "q"}}, Threshold({"p": 1, "q": 0}), {})
        G = game.structure
        assert all(check_state(G, s, parse("<<1,2>> X p")) for s in G.states())

    def test_exclusive_input(self):
        game = build_ibg({1: {"p"}, 2: {"q"}}, ExclusiveUnion(), {1: parse("X p")})
        assert is_exclusive(game.structure)

    def test_single_agent_eventually(self):
        game = build_ibg({1: {"p"}}, ExclusiveUnion(), {1: parse("F p")}, initial=())
        assert winning_strategy_query(game, 1).verdict
        assert brute_force_enforce(game.structure, [1], parse("F p"), S())

    def test_same_as_direct_epc(self):
        game = build_ibg({1: {"p"}, 2: {"q"}}, ExclusiveUnion(), {})
        G = GameStructure.build({1: {"p"}, 2: {"q"}})
        for text in ("<<1>> X p", "<<2>> G q", "<<1,2>> F (p & q)", "<<1>> X q"):
            for s in G.states():
                assert check_state(game.structure, s, parse(text)) == check_state(G, s, parse(text))

    def test_goal_must_be_ltl(self):
        with pytest.raises(InputError):
            build_ibg({1: {"p"}}, ExclusiveUnion(), {1: parse("<<1>> X p")})

    def test_goal_for_unknown_agent(self):
        with pytest.raises(InputError):
            build_ibg({1: {"p"}}, ExclusiveUnion(), {2: parse("X p")})


class TestInfluence:
    def test_revealed_opinion_spreads(self):
        game = influence({(1, 2)}, {1: {"p"}, 2: set()})
        G = game.structure
        s = frozenset({op_atom(1, "p")})
        t = apply(G, s, {1: {vis_atom(1, "p")}, 2: set()})
        assert op_atom(2, "p") in t
        assert vis_atom(1, "p") in t

    def test_hidden_opinion_does_not_spread(self):
        G = influence({(1, 2)}, {1: {"p"}, 2: set()}).structure
        t = apply(G, frozenset({op_atom(1, "p")}), {1: set(), 2: set()})
        assert op_atom(2, "p") not in t

    def test_no_influencers_freezes_opinions(self):
        G = influence(set(), {1: {"p"}, 2: set()}).structure
        ops = {op_atom(1, "p"), op_atom(2, "p")}
        for s in G.states():
            for alpha in joint_actions(G, s):
                assert apply(G, s, alpha) & ops == s & ops

    def test_op_atoms_are_uncontrolled(self):
        G = influence({(1, 2), (2, 1)}, {1: {"p"}}).structure
        assert G.uncontrolled == {op_atom(1, "p"), op_atom(2, "p")}

    def test_visibility_copies_action(self):
        G = influence({(1, 2)}, {1: {"p"}}).structure
        for s in G.states():
            for alpha in joint_actions(G, s):
                t = apply(G, s, alpha)
                for i, act in zip(G.agents, alpha):
                    assert (vis_atom(i, "p") in t) == (vis_atom(i, "p") in act)

    def test_initial_state(self):
        game = influence({(1, 2)}, {1: {"p"}}, {2: {"p"}})
        assert game.initial == {op_atom(1, "p"), vis_atom(2, "p")}

    def test_self_loop_rejected(self):
        with pytest.raises(InputError):
            influence({(1, 1)}, {})

    def test_unknown_issue_rejected(self):
        with pytest.raises(InputError):
            build_influence(InfluenceGameSpec((1, 2), ("p",), frozenset(), {1: frozenset({"z"})}))

    def test_frozen_opinion_goal(self):
        goal = parse(f"G {op_atom(1, 'p')}")
        game = influence({(1, 2)}, {1: {"p"}}, goals={1: goal})
        assert winning_strategy_query(game, 1).verdict
        assert brute_force_enforce(game.structure, [1], goal, game.initial)

    def test_unanimity(self):
        assert unanimous_update(False, [True]) is True
        assert unanimous_update(False, [True, True]) is True
        assert unanimous_update(False, [True, False]) is False
        assert unanimous_update(True, []) is True


def test_influence_transitions_match_hand_rule():
    """Three agents on a cycle plus a chord, every reachable transition."""
    edges = {(1, 2), (2, 3), (3, 1), (1, 3)}
    game = influence(edges, {1: {"p"}, 3: {"p"}}, agents=(1, 2, 3))
    G = game.structure
    inf = {i: [k for k, j in edges if j == i] for i in (1, 2, 3)}
    for s in reachable(G, [game.initial]):
        for alpha in joint_actions(G, s):
            t = apply(G, s, alpha)
            for i in (1, 2, 3):
                shown = {op_atom(k, "p") in s for k in inf[i] if vis_atom(k, "p") in alpha[k - 1]}
                want = shown.pop() if len(shown) == 1 else op_atom(i, "p") in s
                assert (op_atom(i, "p") in t) == want


class TestAggregation:
    def test_majority_of_three(self):
        assert aggregate(Majority(), ["p"], (S("p"), S("p"), S())) == S("p")
        assert aggregate(Majority(), ["p"], (S("p"), S(), S())) == S()

    def test_even_tie_is_false(self):
        assert aggregate(Majority(), ["p"], (S("p"), S())) == S()

    def test_unanimous_quota_with_dissenter(self):
        assert aggregate(Majority(3), ["p"], (S("p"), S("p"), S())) == S()

    def test_single_agent_dictates(self):
        game = build_aggregation(AggregationGameSpec((1,), ("p",)))
        G = game.structure
        assert all(check_state(G, s, parse("<<1>> X p")) for s in G.states())

    def test_adversarial_majority(self):
        spec = AggregationGameSpec((1, 2, 3), ("p",), Majority(), {1: parse("X p")}, frozenset())
        game = build_aggregation(spec)
        assert not winning_strategy_query(game, 1).verdict
        assert not brute_force_enforce(game.structure, [1], parse("X p"), S())

    def test_successor_ignores_current_state(self):
        rule = Custom({c: sum(c) % 2 == 1 for c in itertools.product((0, 1), repeat=2)})
        G = build_aggregation(AggregationGameSpec((1, 2), ("p", "q"), rule)).structure
        for alpha in joint_actions(G, S()):
            assert len({apply(G, s, alpha) for s in G.states()}) == 1

    def test_partial_table_rejected(self):
        with pytest.raises(InputError):
            build_aggregation(AggregationGameSpec((1, 2), ("p",), Custom({(0, 0): True})))

    def test_unsatisfiable_goal(self):
        spec = AggregationGameSpec((1,), ("p",), Majority(), {1: parse("X (p & ~p)")}, frozenset())
        assert not winning_strategy_query(build_aggregation(spec), 1).verdict


def test_query_needs_a_state():
    game = build_ibg({1: {"p"}}, ExclusiveUnion(), {1: parse("X p")})
    with pytest.raises(InputError):
        winning_strategy_query(game, 1)


@settings(max_examples=30)
@given(st.sampled_from(sorted(GAME_FACTORIES)), st.integers(0, 10**6))
def test_ewin_matches_brute_force(kind, seed):
    rng = random.Random(seed)
    game = GAME_FACTORIES[kind](rng)
    i = rng.choice(game.structure.agents)
    want = brute_force_enforce(game.structure, [i], game.goals[i], game.initial)
    assert winning_strategy_query(game, i).verdict == want
