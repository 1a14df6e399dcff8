"""Acceptance criteria, one PASS/FAIL line each.

Run standalone (``python3 tests/test_acceptance.py``) for the summary lines
only, or under pytest, where each criterion is a test that prints its line.
"""

from __future__ import annotations

import os
import random
import sys
import time

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from cgspc.checker import ModelChecker, check_universal_ltl, induced  # noqa: E402
from cgspc.document import load_document  # noqa: E402
from cgspc.formulas import node_counts, parse, translate_tr  # noqa: E402
from cgspc.games import winning_strategy_query  # noqa: E402
from cgspc.ltl import eval_ltl_on_lasso  # noqa: E402
from cgspc.randomgen import (  # noqa: E402
    all_exclusive_structures,
    coalition_under_until,
    random_coalition,
    random_formula,
    random_profile,
    random_shared_structure,
    random_state_formula,
)
from cgspc.reduction import (  # noqa: E402
    TURN,
    build_epc,
    check_dagger,
    is_canonical_path,
    is_path_of_epc,
    lift_strategy,
    lower_strategy,
    same_outcomes,
    verify_theorem,
)
from cgspc.structures import GameStructure, LassoPath, powerset, run  # noqa: E402

from oracles import (  # noqa: E402
    GAME_FACTORIES,
    all_memoryless,
    brute_force_enforce,
    enumerate_atl,
    enumerate_ltl,
    projected_outcomes_agree,
)

SWEEP_SEED = 2024
SWEEP_INSTANCES = 200
ROUNDTRIP_INSTANCES = 60
GAMES_PER_CLASS = 25


def line(n: int, ok: bool | None, detail: str) -> str:
    status = {True: "PASS", False: "FAIL", None: "N/A "}[ok]
    return f"C{n} {status} {detail}"


def _sweep_instances():
    rng = random.Random(SWEEP_SEED)
    for _ in range(SWEEP_INSTANCES):
        G = random_shared_structure(rng)
        yield G, random_state_formula(rng, G.atoms, G.agents, 3)


def _roundtrip_instances():
    rng = random.Random(SWEEP_SEED + 1)
    for _ in range(ROUNDTRIP_INSTANCES):
        G = random_shared_structure(rng)
        C = random_coalition(rng, G.agents)
        yield G, C, random_profile(rng, G, C)


def _counterexample_structure():
    return GameStructure.build({1: {"p"}, 2: {"q"}})


# -- criteria --------------------------------------------------------------


def criterion_1():
    t0 = time.perf_counter()
    G = load_document("bundled:example1").structure
    mc = ModelChecker(G)
    both = [mc.holds(parse("<<1,2>> X p"), s) for s in G.states()]
    one = [mc.holds(parse("<<1>> X q"), s) for s in G.states()]
    dt = time.perf_counter() - t0
    ok = both == [True] * 4 and one == [False] * 4 and dt < 1
    return ok, f"<<1,2>> X p: {both}; <<1>> X q: {one}; {dt:.3f}s (< 1s)"


def criterion_2():
    t0 = time.perf_counter()
    img = build_epc(load_document("bundled:example2").structure)
    atoms_ok = set(img.epc.atoms) == {"p", "q", "c_1_p", "c_2_p", "c_2_q", TURN}
    lam = LassoPath((frozenset({"p"}),), (frozenset({"p", "q"}),))
    loop = (frozenset({"p", "q"}), frozenset({"c_1_p", "c_2_p", "c_2_q", "p", "q", TURN}))
    seqs = {
        "a": ({"p"}, {"c_1_p", "c_2_p", "c_2_q", "p", TURN}),
        "b": ({"p"}, {"c_1_p", "c_2_q", "p", TURN}),
        "c": ({"p", "c_1_p"}, {"c_1_p", "c_2_q", "p", TURN}),
        "d": ({"p"}, {"c_2_q", "p", TURN}),
    }
    got = {}
    for name, (s0, s1) in seqs.items():
        lp = LassoPath((frozenset(s0), frozenset(s1)), loop)
        got[name] = (is_path_of_epc(img, lp), check_dagger(img, lam, lp),
                     is_canonical_path(img, lam, lp))
    want = {"a": (True, True, True), "b": (True, True, True),
            "c": (True, True, False), "d": (False, True, False)}
    dt = time.perf_counter() - t0
    ok = atoms_ok and got == want and dt < 1
    shown = " ".join(f"({k}) path={v[0]} dagger={v[1]} canonical={v[2]}" for k, v in got.items())
    return ok, f"atoms ok={atoms_ok}; {shown}; {dt:.3f}s (< 1s)"


def criterion_3():
    t0 = time.perf_counter()
    checks = agree = 0
    plain_checks = plain_agree = 0
    bad_instances = set()
    for n, (G, phi) in enumerate(_sweep_instances()):
        img = build_epc(G)
        nested = coalition_under_until(phi)
        for s in G.states():
            r = verify_theorem(G, s, phi, img=img)
            checks += 1
            agree += r.agree
            if not nested:
                plain_checks += 1
                plain_agree += r.agree
            if not r.agree:
                bad_instances.add(n)
    dt = time.perf_counter() - t0
    inst_ok = SWEEP_INSTANCES - len(bad_instances)
    ok = agree == checks and dt < 600
    # Not part of the verdict: the known counterexample, reported for context.
    pinned = verify_theorem(_counterexample_structure(), frozenset(),
                            parse("<<2>> ((<<1>> X p) U q)")).agree
    return ok, (f"{inst_ok}/{SWEEP_INSTANCES} instances agree at every state "
                f"({agree}/{checks} state checks, {100 * agree / checks:.2f}%); "
                f"without a coalition under an until: {plain_agree}/{plain_checks}; "
                f"{dt:.1f}s (< 600s); pinned counterexample agrees={pinned} "
                f"(coalition nested under U, see decisions ledger)")


def criterion_4():
    t0 = time.perf_counter()
    n = ident = outcomes = lassos = lasso_checks = 0
    for G, C, sigma in _roundtrip_instances():
        n += 1
        img = build_epc(G)
        ident += lower_strategy(img, lift_strategy(img, sigma)).assignments == sigma.assignments
        states = list(G.states())
        outcomes += all(same_outcomes(img, sigma, C, s) for s in states)
        if G.n_states <= 16:
            lasso_checks += 1
            lassos += all(projected_outcomes_agree(img, sigma, C, s, max_len=4) for s in states)
    dt = time.perf_counter() - t0
    ok = n >= 50 and ident == outcomes == n and lassos == lasso_checks
    return ok, (f"lower(lift)=id {ident}/{n}; outcome sets equal {outcomes}/{n}; "
                f"lasso-set comparison {lassos}/{lasso_checks}; {dt:.1f}s")


def criterion_5():
    t0 = time.perf_counter()
    atl = atl_agree = 0
    ltl = ltl_agree = 0
    ltl_formulas = enumerate_ltl(["p", "q"], 2)
    for n_agents in (1, 2):
        coalitions = [frozenset(c) for c in powerset(range(1, n_agents + 1))]
        formulas = enumerate_atl(["p", "q"], coalitions, 2)
        for G in all_exclusive_structures(n_agents, ["p", "q"]):
            states = list(G.states())
            fast, slow = ModelChecker(G), ModelChecker(G, use_fixpoint=False)
            for f in formulas:
                for s in states:
                    atl += 1
                    atl_agree += fast.holds(f, s) == slow.holds(f, s)
            seen = set()
            for sigma in all_memoryless(G, G.agents, states):
                K = induced(G, sigma, G.agents)
                for s in states:
                    key = (s, frozenset((u, v) for u, v in K.steps.items()))
                    if key in seen:
                        continue
                    seen.add(key)
                    lam = run(G, s, sigma)
                    for psi in ltl_formulas:
                        ltl += 1
                        ltl_agree += (check_universal_ltl(K, s, psi, method="tableau")
                                      == eval_ltl_on_lasso(lam, psi))
    dt = time.perf_counter() - t0
    ok = atl_agree == atl and ltl_agree == ltl and dt < 300
    return ok, (f"fixpoint vs search {atl_agree}/{atl}; tableau vs lasso oracle "
                f"{ltl_agree}/{ltl}; {dt:.1f}s (< 300s)")


def criterion_6():
    n = good = 0
    structures = [G for G, _ in _sweep_instances()] + [G for G, _, _ in _roundtrip_instances()]
    for G in structures:
        img = build_epc(G)
        n += 1
        good += (len(img.epc.atoms) == len(G.atoms) + 1 + sum(len(G.control[i]) for i in G.agents)
                 and len(img.epc.agents) == len(G.agents) + 1)
    return good == n, f"{good}/{n} instances"


def criterion_7():
    rng = random.Random(SWEEP_SEED + 7)
    n = good = 0
    for _ in range(1000):
        f = random_formula(rng, ["p", "q", "r"], [1, 2, 3], rng.randint(1, 6))
        before, after = node_counts(f), node_counts(translate_tr(f))
        n += 1
        good += (after["Next"] == 2 * before["Next"]
                 and all(after[k] == before[k] for k in set(before) | set(after) if k != "Next"))
    return good == n, f"{good}/{n} formulas"


def criterion_8():
    t0 = time.perf_counter()
    parts = []
    ok = True
    for kind, factory in sorted(GAME_FACTORIES.items()):
        rng = random.Random(SWEEP_SEED + 8)
        n = good = wins = 0
        for _ in range(GAMES_PER_CLASS):
            game = factory(rng)
            i = rng.choice(game.structure.agents)
            got = winning_strategy_query(game, i).verdict
            want = brute_force_enforce(game.structure, [i], game.goals[i], game.initial)
            n += 1
            good += got == want
            wins += want
        ok &= good == n
        parts.append(f"{kind} {good}/{n} ({wins} winnable)")
    dt = time.perf_counter() - t0
    return ok and dt < 300, "; ".join(parts) + f"; {dt:.1f}s (< 300s)"


def criterion_9():
    return None, ("complexity bounds are not reproducible as such; "
                  "covered only indirectly by the property suites")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9]


@pytest.mark.parametrize("k", range(1, len(CRITERIA) + 1))
def test_criterion(k, capsys):
    ok, detail = CRITERIA[k - 1]()
    with capsys.disabled():
        print("\n" + line(k, ok, detail))
    assert ok is not False, detail


if __name__ == "__main__":
    for k, crit in enumerate(CRITERIA, start=1):
        ok, detail = crit()
        print(line(k, ok, detail), flush=True)
