"""Bundled example automata and generator families.

Three families ship with the toolkit:

* the seven-state running example (reach, Büchi, generalized-Büchi and
  parity variants share the same metric and transition core);
* Gray-code counters of any width: 2^n states on a Hamming metric whose
  single input advances a cyclic reflected Gray sequence, with a
  disturbance able to flip one bit of the outcome;
* the four-node leader-election network: synchronous belief updates on a
  diamond topology under the min, max or floor-average rule, with either
  ball-shaped outcome disturbances or single-message corruption.
"""

from __future__ import annotations

from fractions import Fraction

from .model import (
    Buchi,
    ConstantBound,
    GeneralizedBuchi,
    MemorylessStrategy,
    Metric,
    MetricAutomaton,
    Parity,
    Reachability,
    Transition,
)

# --------------------------------------------------------------------------
# Running example
# --------------------------------------------------------------------------

_RUNNING_STATES = ("q0", "q1", "q2", "q3", "q4", "q5", "q6")

# Upper triangle of the distance table; symmetric closure is applied below.
_RUNNING_DISTANCES = {
    ("q0", "q1"): 1,
    ("q0", "q2"): 2,
    ("q0", "q3"): 4,
    ("q0", "q4"): 4,
    ("q0", "q5"): 4,
    ("q0", "q6"): 5,
    ("q1", "q2"): 1,
    ("q1", "q3"): 5,
    ("q1", "q4"): 5,
    ("q1", "q5"): 5,
    ("q1", "q6"): 6,
    ("q2", "q3"): 6,
    ("q2", "q4"): 6,
    ("q2", "q5"): 7,
    ("q2", "q6"): 8,
    ("q3", "q4"): 1,
    ("q3", "q5"): 3,
    ("q3", "q6"): 3,
    ("q4", "q5"): 3,
    ("q4", "q6"): 3,
    ("q5", "q6"): 1,
}

_RUNNING_EDGES = [
    ("q0", "b", "q1"),
    ("q0", "a", "q3"),
    ("q1", "a", "q6"),
    ("q1", "b", "q6"),
    ("q2", "b", "q1"),
    ("q2", "a", "q3"),
    ("q3", "a", "q5"),
    ("q3", "b", "q5"),
    ("q4", "a", "q6"),
    ("q4", "b", "q6"),
    ("q5", "a", "q6"),
    ("q5", "b", "q6"),
]

_RUNNING_LOOP_EDGES = [
    ("q6", "a", "q0"),
    ("q6", "b", "q2"),
]


def running_example(objective: str = "reach") -> MetricAutomaton:
    """The seven-state example on an explicit metric with gamma = 1.

    ``objective`` selects the acceptance condition and, for the recurrence
    objectives, adds the two return edges from the terminal state:

    * ``"reach"``       - reach {q6}; q6 is a dead end.
    * ``"buchi"``       - visit {q6} infinitely often; q6 loops back to
                          q0 (input a) and q2 (input b).
    * ``"genbuchi"``    - visit {q6} and {q0} infinitely often, on the same
                          graph as the Büchi variant.
    * ``"parity"``      - single even priority set {q6} (n = 0), again on
                          the Büchi-variant graph.
    """
    edges = list(_RUNNING_EDGES)
    if objective == "reach":
        acceptance = Reachability(["q6"])
    elif objective == "buchi":
        edges += _RUNNING_LOOP_EDGES
        acceptance = Buchi(["q6"])
    elif objective == "genbuchi":
        edges += _RUNNING_LOOP_EDGES
        acceptance = GeneralizedBuchi([["q6"], ["q0"]])
    elif objective == "parity":
        edges += _RUNNING_LOOP_EDGES
        acceptance = Parity([["q6"]])
    else:
        raise ValueError(f"unknown objective {objective!r}")
    return MetricAutomaton(
        states=_RUNNING_STATES,
        initial="q0",
        inputs=("a", "b"),
        transitions=[Transition(src, sym, dst) for src, sym, dst in edges],
        gamma=ConstantBound(1),
        metric=Metric.explicit(_RUNNING_DISTANCES),
        acceptance=acceptance,
    )


def uniform_strategy(a: MetricAutomaton, symbol: str) -> MemorylessStrategy:
    """Play one fixed input at every state where it is enabled."""
    return MemorylessStrategy(
        {q: (symbol,) for q in a.states if (q, symbol) in a.transitions}
    )


# --------------------------------------------------------------------------
# Gray-code counters
# --------------------------------------------------------------------------


def generate_gray_code(bits: int) -> MetricAutomaton:
    """A cyclic counter over the ``bits``-wide reflected Gray sequence.

    2^bits states named by their bit strings, Hamming metric, gamma = 1.
    The single input advances to the next word of the cyclic Gray sequence;
    the disturbance may flip any single bit of the outcome, so each
    disturbed set is the nominal target plus its ``bits`` one-bit flips.
    The objective is to pass through the all-zeros word infinitely often.
    """
    if not 1 <= bits <= 12:
        raise ValueError("bits must be between 1 and 12")
    size = 1 << bits

    def gray(i: int) -> int:
        return i ^ (i >> 1)

    def name(code: int) -> str:
        return format(code, f"0{bits}b")

    sequence = [gray(i) for i in range(size)]
    states = [name(c) for c in sequence]
    coords = {name(c): tuple((c >> (bits - 1 - k)) & 1 for k in range(bits)) for c in sequence}
    transitions = []
    for i, code in enumerate(sequence):
        nxt = sequence[(i + 1) % size]
        disturbed = [name(nxt)] + [name(nxt ^ (1 << k)) for k in range(bits - 1, -1, -1)]
        transitions.append(Transition(name(code), "step", name(nxt), disturbed))
    return MetricAutomaton(
        states=states,
        initial=name(0),
        inputs=("step",),
        transitions=transitions,
        gamma=ConstantBound(1),
        metric=Metric.hamming(),
        acceptance=Buchi([name(0)]),
        coords=coords,
    )


# --------------------------------------------------------------------------
# Leader election
# --------------------------------------------------------------------------

# Diamond topology: node index -> its two neighbours (0-based nodes 0..3
# standing for the printed identifiers 1..4; edges 1-2, 1-3, 2-4, 3-4).
_NEIGHBOURS = ((1, 2), (0, 3), (0, 3), (1, 2))

_RULES = ("min", "max", "floor-avg")


def _apply_rule(rule: str, own: int, m1: int, m2: int) -> int:
    if rule == "min":
        return min(own, m1, m2)
    if rule == "max":
        return max(own, m1, m2)
    if rule == "floor-avg":
        return (own + m1 + m2) // 3
    raise ValueError(f"unknown rule {rule!r}; expected one of {_RULES}")


def _nominal_step(rule: str, state: tuple) -> tuple:
    return tuple(
        _apply_rule(rule, state[i], state[_NEIGHBOURS[i][0]], state[_NEIGHBOURS[i][1]])
        for i in range(4)
    )


def _corrupted_values(v: int) -> list:
    """A transmitted belief may shift by +-1 but stays inside {1..4}."""
    return [w for w in (v - 1, v + 1) if 1 <= w <= 4]


def _message_disturbed(rule: str, state: tuple) -> list:
    """Successors when at most one message network-wide is corrupted."""
    nominal = _nominal_step(rule, state)
    out = [nominal]
    for receiver in range(4):
        for slot in range(2):
            sender = _NEIGHBOURS[receiver][slot]
            other = _NEIGHBOURS[receiver][1 - slot]
            for corrupted in _corrupted_values(state[sender]):
                updated = _apply_rule(rule, state[receiver], corrupted, state[other])
                succ = list(nominal)
                succ[receiver] = updated
                succ = tuple(succ)
                if succ not in out:
                    out.append(succ)
    return out


def _ball_disturbed(nominal: tuple) -> list:
    """Grid states within Manhattan distance 1 of the nominal successor."""
    out = [nominal]
    for i in range(4):
        for delta in (-1, 1):
            v = nominal[i] + delta
            if 1 <= v <= 4:
                succ = nominal[:i] + (v,) + nominal[i + 1 :]
                out.append(succ)
    return out


def generate_leader_election(rule: str = "floor-avg", scope: str = "message") -> MetricAutomaton:
    """The four-node leader-election network as a metric automaton.

    States are the global belief vectors reachable from (1,2,3,4) under the
    chosen update ``rule`` and disturbance ``scope``; the metric is
    Manhattan (L1) over the belief vectors, the disturbance bound is the
    constant 1, and the objective is to reach unanimous consensus
    ``{(i,i,i,i)}``.

    ``scope`` selects what the disturbance can do:

    * ``"message"`` - at most one transmitted belief network-wide is
                      corrupted by +-1 (clamped to {1..4}) before the
                      receiving node applies the update rule.  This is the
                      default: it is the only message-level reading whose
                      state perturbation stays within the declared bound 1.
    * ``"ball"``    - the outcome may be any state within L1 distance 1 of
                      the nominal successor (the toolkit's default ball
                      semantics).  Unlike message corruption this produces
                      hold/self-loop disturbances such as the one at state
                      2223 under the floor-average rule.

    The two scopes disagree on the floor-average rule's robustness (the
    adversary can hold the network off consensus forever only under "ball");
    ``metricsynth.library`` deliberately ships both so the disagreement is
    visible rather than baked in.
    """
    if rule not in _RULES:
        raise ValueError(f"unknown rule {rule!r}; expected one of {_RULES}")
    if scope not in ("ball", "message"):
        raise ValueError(f"unknown scope {scope!r}; expected 'ball' or 'message'")

    initial = (1, 2, 3, 4)
    reachable = [initial]
    seen = {initial}
    successors = {}
    frontier = [initial]
    while frontier:
        state = frontier.pop(0)
        if scope == "message":
            succs = _message_disturbed(rule, state)
        else:
            succs = _ball_disturbed(_nominal_step(rule, state))
        successors[state] = succs
        for s in succs:
            if s not in seen:
                seen.add(s)
                reachable.append(s)
                frontier.append(s)

    def name(state: tuple) -> str:
        return "".join(str(v) for v in state)

    states = [name(s) for s in reachable]
    coords = {name(s): s for s in reachable}
    transitions = []
    for state in reachable:
        nominal = _nominal_step(rule, state)
        if scope == "message":
            disturbed = [name(s) for s in successors[state]]
        else:
            # Ball semantics over the declared states reproduces exactly the
            # grid ball here because the reachable set is closed under it.
            disturbed = None
        transitions.append(Transition(name(state), "update", name(nominal), disturbed))
    terminal = [name(s) for s in reachable if len(set(s)) == 1]
    return MetricAutomaton(
        states=states,
        initial=name(initial),
        inputs=("update",),
        transitions=transitions,
        gamma=ConstantBound(1),
        metric=Metric.manhattan(),
        acceptance=Reachability(terminal),
        coords=coords,
    )
