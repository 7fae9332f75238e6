"""Rank/CLF certificates: checking, Lipschitz bounds, construction, induction."""

import random
from fractions import Fraction

import pytest

from generators import random_automaton, random_deterministic_strategy
from metricsynth.certificates import (
    RankCertificate,
    check_clf,
    check_rank,
    construct_clf_from_strategy,
    induce_strategy_from_clf,
    lipschitz_constant,
    sigma_bound_from_certificate,
)
from metricsynth.library import running_example
from metricsynth.model import MemorylessStrategy
from metricsynth.reach import check_nominally_winning, synthesize_optimal, verify_strategy_sigma

R_A = {
    "q0": Fraction(18), "q1": Fraction(12), "q2": Fraction(24), "q3": Fraction(8),
    "q4": Fraction(6), "q5": Fraction(1), "q6": Fraction(0),
}
R_B = {
    "q0": Fraction(2), "q1": Fraction(1), "q2": Fraction(2), "q3": Fraction(2),
    "q4": Fraction(1), "q5": Fraction(1), "q6": Fraction(0),
}


@pytest.fixture
def reach():
    return running_example("reach")


def test_rank_conditions(reach):
    cert = RankCertificate(R_A, Fraction(1), "reach")
    assert check_rank(reach, cert).ok
    flat = dict(R_A)
    flat["q5"] = Fraction(0)  # vanishes off the target set
    bad = check_rank(reach, RankCertificate(flat, Fraction(1), "reach"))
    assert not bad.ok


def test_clf_decrease_margin(reach):
    assert check_clf(reach, RankCertificate(R_A, Fraction(1), "reach")).ok
    # Doubling the required decrease rate breaks exactly at the state whose
    # slack was 1.
    steep = check_clf(reach, RankCertificate(R_A, Fraction(2), "reach"))
    assert not steep.ok
    assert steep.violations[0][0] == "q5"
    assert check_clf(reach, RankCertificate(R_B, Fraction(1, 8), "reach")).ok


def test_lipschitz_constants(reach):
    lip_a = lipschitz_constant(reach, RankCertificate(R_A, Fraction(1), "reach"))
    assert lip_a.K == Fraction(12)
    assert set(lip_a.witness) == {"q1", "q2"}
    lip_b = lipschitz_constant(reach, RankCertificate(R_B, Fraction(1, 8), "reach"))
    assert lip_b.K == Fraction(1)
    assert set(lip_b.witness) == {"q0", "q1"}


def test_sigma_bounds_are_conservative(reach):
    bound_a = sigma_bound_from_certificate(reach, RankCertificate(R_A, Fraction(1), "reach"))
    bound_b = sigma_bound_from_certificate(reach, RankCertificate(R_B, Fraction(1, 8), "reach"))
    assert bound_a.value == Fraction(12)
    assert bound_b.value == Fraction(8)
    exact = synthesize_optimal(reach).sigma
    assert exact == Fraction(1)
    assert exact <= bound_a.value
    assert exact <= bound_b.value


def test_construct_from_strategies(reach):
    s_a = MemorylessStrategy({q: ("a",) for q in reach.states if q != "q6"})
    s_b = MemorylessStrategy({q: ("b",) for q in reach.states if q != "q6"})
    cons_a = construct_clf_from_strategy(reach, s_a, 1)
    cons_b = construct_clf_from_strategy(reach, s_b, 1)
    assert cons_a.ranks == {
        "q0": Fraction(9), "q1": Fraction(6), "q2": Fraction(12), "q3": Fraction(4),
        "q4": Fraction(3), "q5": Fraction(1), "q6": Fraction(0),
    }
    assert cons_b.ranks == {
        "q0": Fraction(11), "q1": Fraction(6), "q2": Fraction(14), "q3": Fraction(4),
        "q4": Fraction(3), "q5": Fraction(1), "q6": Fraction(0),
    }
    assert check_clf(reach, cons_a).ok
    assert check_clf(reach, cons_b).ok
    assert sigma_bound_from_certificate(reach, cons_a).value == Fraction(6)
    assert sigma_bound_from_certificate(reach, cons_b).value == Fraction(8)


def test_induced_strategy_contains_source(reach):
    s_a = MemorylessStrategy({q: ("a",) for q in reach.states if q != "q6"})
    cons = construct_clf_from_strategy(reach, s_a, 1)
    induced = induce_strategy_from_clf(reach, cons)
    assert induced.choices == {
        "q0": ("a",), "q1": ("a", "b"), "q2": ("a",), "q3": ("a", "b"),
        "q4": ("a", "b"), "q5": ("a", "b"),
    }
    for q, chosen in s_a.choices.items():
        assert set(chosen) <= set(induced.choices[q])
    # The flat hand certificate leaves only the b-moves enough slack.
    induced_b = induce_strategy_from_clf(reach, RankCertificate(R_B, Fraction(1, 8), "reach"))
    assert induced_b.choices["q0"] == ("b",)
    assert all("b" in induced_b.choices[q] for q in reach.states if q != "q6")


def test_buchi_construction_round_trip():
    b = running_example("buchi")
    s_a = MemorylessStrategy({q: ("a",) for q in b.states})
    cons = construct_clf_from_strategy(b, s_a, 1)
    assert cons.objective == "buchi"
    assert cons.ranks == {
        "q0": Fraction(9), "q1": Fraction(6), "q2": Fraction(12), "q3": Fraction(4),
        "q4": Fraction(3), "q5": Fraction(1), "q6": Fraction(0),
    }
    assert check_clf(b, cons).ok
    induced = induce_strategy_from_clf(b, cons)
    for q, chosen in s_a.choices.items():
        assert set(chosen) <= set(induced.choices[q])


def test_parity_construction_round_trip():
    p = running_example("parity")
    s_a = MemorylessStrategy({q: ("a",) for q in p.states})
    cons = construct_clf_from_strategy(p, s_a, 1)
    assert cons.objective == "parity"
    assert {q: v[0] for q, v in cons.ranks.items()} == {
        "q0": Fraction(9), "q1": Fraction(6), "q2": Fraction(12), "q3": Fraction(4),
        "q4": Fraction(3), "q5": Fraction(1), "q6": Fraction(0),
    }
    assert check_clf(p, cons).ok
    assert induce_strategy_from_clf(p, cons).choices == {q: ("a",) for q in p.states}


def test_genbuchi_certificate():
    g = running_example("genbuchi")
    r0 = {"q0": 2, "q1": 1, "q2": 2, "q3": 2, "q4": 1, "q5": 1, "q6": 0}
    r1 = {"q0": 0, "q1": 2, "q2": 3, "q3": 3, "q4": 2, "q5": 2, "q6": 1}
    ranks = {q: (Fraction(r0[q]), Fraction(r1[q])) for q in g.states}
    cert = RankCertificate(ranks, Fraction(1, 8), "genbuchi")
    assert check_rank(g, cert).ok
    assert check_clf(g, cert).ok
    lip = lipschitz_constant(g, cert)
    assert lip.K == Fraction(2)
    assert set(lip.witness) == {"q0", "q1"}
    assert sigma_bound_from_certificate(g, cert).value == Fraction(16)
    induced = induce_strategy_from_clf(g, cert)
    assert induced.choices["q0"] == ("b",)
    assert induced.choices["q2"] == ("b",)
    assert induced.choices["q6"] == ("a",)


def test_construct_induce_containment_sampled():
    rng = random.Random(9)
    checked = 0
    while checked < 25:
        a = random_automaton(rng, objective="reach")
        strategy = random_deterministic_strategy(rng, a)
        if strategy is None:
            continue
        try:
            closed_loop = check_nominally_winning(a, strategy)
        except ValueError:
            continue
        # Keep only the choices the closed loop can ever exercise; states the
        # strategy can never reach may cycle hopelessly without affecting it.
        strategy = MemorylessStrategy(
            {q: c for q, c in strategy.choices.items() if q in closed_loop.states}
        )
        try:
            cons = construct_clf_from_strategy(a, strategy, 1)
        except ValueError:
            continue
        assert check_clf(a, cons).ok
        induced = induce_strategy_from_clf(a, cons)
        for q, chosen in strategy.choices.items():
            if q in a.terminal_set():
                continue  # play is already won there; induction owes nothing
            assert set(chosen) <= set(induced.choices.get(q, ())), q
        bound = sigma_bound_from_certificate(a, cons)
        exact = verify_strategy_sigma(a, strategy).sigma
        if bound.certified:
            assert exact <= bound.value
        checked += 1
