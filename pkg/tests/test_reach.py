"""Reach/Büchi robustness: fixpoint, verification, synthesis, oracle."""

import itertools
import random
from fractions import Fraction

import pytest

from generators import random_automaton
from metricsynth.library import running_example, uniform_strategy
from metricsynth.model import (
    Buchi,
    ConstantBound,
    MemorylessStrategy,
    Metric,
    MetricAutomaton,
    Reachability,
    Transition,
)
from metricsynth.rationals import INF
from metricsynth.reach import (
    brute_force_opt_oracle,
    check_nominally_winning,
    fixpoint_opt,
    synthesize_optimal,
    verify_strategy_sigma,
)

OPT0 = {"q0": 5, "q1": 6, "q2": 8, "q3": 3, "q4": 3, "q5": 1, "q6": 0}
OPT_STAR = {"q0": 1, "q1": 1, "q2": 1, "q3": 1, "q4": 1, "q5": 1, "q6": 0}


@pytest.fixture
def running():
    return running_example("reach")


def test_seed_vector_is_distance_to_target(running):
    a = running
    terminal = a.terminal_set()
    for q, expected in OPT0.items():
        assert a.distance_to_set(q, terminal) == Fraction(expected)


def test_fixpoint_values_and_iteration_count(running):
    opt = fixpoint_opt(running, running.terminal_set())
    assert {q: opt.at(q) for q in running.states} == {
        q: Fraction(v) for q, v in OPT_STAR.items()
    }
    assert opt.iterations == 2
    assert opt.iterations <= len(running.states) - 1


def test_verify_uniform_strategies(running):
    a = running
    rb = verify_strategy_sigma(a, uniform_strategy(a, "b"))
    assert rb.sigma == Fraction(5)
    ra = verify_strategy_sigma(a, uniform_strategy(a, "a"))
    assert ra.sigma == Fraction(1)
    assert ra.sigma_times_gamma == Fraction(1)
    assert not ra.exact_win


def test_synthesis_attains_minimum_with_input_a_at_q0(running):
    report = synthesize_optimal(running)
    assert report.sigma == Fraction(1)
    assert report.strategy.inputs_at("q0") == ("a",)
    expected = {
        "q0": ("a",),
        "q1": ("a", "b"),
        "q2": ("a",),
        "q3": ("a", "b"),
        "q4": ("a", "b"),
        "q5": ("a", "b"),
    }
    for q, inputs in expected.items():
        assert report.strategy.inputs_at(q) == inputs, q
    assert report.strategy.inputs_at("q6") == ()


def test_inflated_target_set(running):
    report = synthesize_optimal(running)
    # states within sigma * gamma_bar = 1 of the target
    assert set(report.inflated_F) == {"q5", "q6"}


def test_verify_rejects_non_winning_strategy(running):
    # choosing b at q3?  b is enabled; build a stalling strategy at q0 only
    s = MemorylessStrategy({"q0": ("a",)})
    # q3/q4/q5 unchosen: closed loop stalls before reaching the target
    with pytest.raises(ValueError):
        verify_strategy_sigma(running, s)


def test_check_nominally_winning_flags_cycles(running):
    a = running
    looping = [
        t
        for t in a.transitions.values()
        if (t.source, t.input) not in (("q3", "a"), ("q3", "b"))
    ] + [Transition("q3", "a", "q0"), Transition("q3", "b", "q0")]
    b = MetricAutomaton(
        a.states, a.initial, a.inputs, looping, a.gamma, a.metric, a.acceptance
    )
    s = uniform_strategy(b, "a")
    with pytest.raises(ValueError):
        check_nominally_winning(b, s)


def test_buchi_verification_and_synthesis():
    a = running_example("buchi")
    sa = uniform_strategy(a, "a")
    sb = uniform_strategy(a, "b")
    assert verify_strategy_sigma(a, sa).sigma == Fraction(1)
    assert verify_strategy_sigma(a, sb).sigma == Fraction(5)
    report = synthesize_optimal(a)
    assert report.sigma == Fraction(1)
    assert report.strategy.inputs_at("q6") == ("a",)


def test_unreachable_target_gives_infinite_value():
    m = Metric.explicit({("a", "b"): 2})
    a = MetricAutomaton(
        ("a", "b"),
        "a",
        ("go",),
        [Transition("a", "go", "a"), Transition("b", "go", "b")],
        ConstantBound(Fraction(1)),
        m,
        Reachability(("b",)),
    )
    opt = fixpoint_opt(a, ("b",))
    # nothing moves: the guaranteed approach stays at the seed distance
    assert opt.at("a") == Fraction(2)
    m2 = Metric.explicit({("a", "b"): INF})
    a2 = MetricAutomaton(
        ("a", "b"),
        "a",
        ("go",),
        [Transition("a", "go", "a"), Transition("b", "go", "b")],
        ConstantBound(Fraction(1)),
        m2,
        Reachability(("b",)),
    )
    assert fixpoint_opt(a2, ("b",)).at("a") is INF


def test_gamma_zero_reports_sigma_zero(running):
    a = running
    zero = MetricAutomaton(
        a.states,
        a.initial,
        a.inputs,
        a.transitions,
        ConstantBound(Fraction(0)),
        a.metric,
        a.acceptance,
    )
    report = verify_strategy_sigma(zero, uniform_strategy(zero, "a"))
    assert report.sigma == Fraction(0)
    assert report.exact_win


def _open_loop_word_value(a, terminal, q):
    """Best max-endpoint distance over admissible fixed input words.

    The controller commits to the whole word up front, so this can only be
    an upper bound on the adaptive value computed by the fixpoint: reacting
    to the adversary's branch never hurts, and on some instances it strictly
    helps (a word is inadmissible as soon as one branch disables its next
    input, while an adaptive controller just plays differently there).
    """
    best = a.distance_to_set(q, terminal)
    for length in range(1, len(a.states)):
        for word in itertools.product(a.inputs, repeat=length):
            frontier = {q}
            for symbol in word:
                if any((p, symbol) not in a.transitions for p in frontier):
                    frontier = None
                    break
                frontier = {s for p in frontier for s in a.disturbed_successors(p, symbol)}
            if frontier is None:
                continue
            worst = max(a.distance_to_set(p, terminal) for p in frontier)
            if worst < best:
                best = worst
    return best


def test_oracle_agreement_sampled():
    rng = random.Random(1205)
    for _ in range(40):
        a = random_automaton(rng, objective="reach")
        terminal = a.terminal_set()
        opt = fixpoint_opt(a, terminal)
        oracle = brute_force_opt_oracle(a, terminal)
        assert {q: opt.at(q) for q in a.states} == oracle
        assert opt.iterations <= max(0, len(a.states) - 1)
        for q in a.states:
            assert opt.at(q) <= _open_loop_word_value(a, terminal, q)


def test_fixpoint_monotone_in_gamma(running):
    a = running
    wider = MetricAutomaton(
        a.states,
        a.initial,
        a.inputs,
        a.transitions,
        ConstantBound(Fraction(2)),
        a.metric,
        a.acceptance,
    )
    tight = fixpoint_opt(a, a.terminal_set())
    loose = fixpoint_opt(wider, a.terminal_set())
    for q in a.states:
        assert loose.at(q) >= tight.at(q)
