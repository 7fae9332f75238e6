"""Reachability analyses: guaranteed-approach fixpoint, brute-force oracle,
robustness verification and optimal-strategy synthesis.

The central quantity is, for each state, the closest the controller can
guarantee to get to the target set no matter how the bounded disturbance
resolves each transition.  It is the least fixpoint of

    g(v)(q) = min( v(q),  min over enabled inputs a of
                          max over disturbed successors q' of v(q') )

seeded with v0(q) = d(q, F).  Dividing the initial state's fixpoint value
by the largest disturbance radius gives the robustness figure sigma: the
strategy wins once the target set is inflated to all states within
sigma * gamma_bar of it, and no strategy does better.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .model import (
    Buchi,
    MemorylessStrategy,
    MetricAutomaton,
    Reachability,
    restrict_by_strategy,
)
from .rationals import INF, Scalar, format_scalar


@dataclass
class OptVector:
    """Result of the guaranteed-approach fixpoint: final values per state
    and how many applications of the operator changed the vector."""

    values: dict  # state -> Scalar
    iterations: int

    def at(self, state: str) -> Scalar:
        return self.values[state]


@dataclass
class RobustnessReport:
    """Robustness analysis outcome for one strategy (or for the synthesized
    optimum).  ``sigma_times_gamma`` is the guaranteed-approach value of the
    initial state, ``inflated_F`` the inflated target set the strategy wins
    for, and ``exact_win`` flags guaranteed exact arrival (sigma = 0 covers
    the degenerate zero-disturbance case)."""

    sigma: Fraction
    sigma_times_gamma: Fraction
    inflated_F: tuple
    strategy: MemorylessStrategy
    opt_star: OptVector
    gamma_bar: Fraction
    exact_win: bool


# --------------------------------------------------------------------------
# Fixpoint
# --------------------------------------------------------------------------


def fixpoint_opt(a: MetricAutomaton, terminal) -> OptVector:
    """Least fixpoint of the guaranteed-approach operator.

    ``terminal`` is the target state set; distances may refer to states
    outside the automaton's own state tuple (useful on restricted
    automata).  Converges in at most |Q| - 1 changing applications; this is
    asserted on every run.
    """
    terminal = tuple(terminal)
    values = {q: a.distance_to_set(q, terminal) for q in a.states}
    iterations = 0
    bound = len(a.states) * len(a.states) + 3
    for _ in range(bound):
        nxt = _apply_opt_operator(a, values)
        if nxt == values:
            break
        values = nxt
        iterations += 1
    else:
        raise RuntimeError("guaranteed-approach fixpoint failed to converge")
    assert iterations <= max(0, len(a.states) - 1), (
        f"fixpoint took {iterations} iterations on {len(a.states)} states"
    )
    return OptVector(values=values, iterations=iterations)


def _apply_opt_operator(a: MetricAutomaton, values: dict) -> dict:
    out = {}
    for q in a.states:
        best: Scalar = INF
        for symbol in a.enabled_inputs(q):
            worst = max(values[p] for p in a.disturbed_successors(q, symbol))
            if worst < best:
                best = worst
        current = values[q]
        out[q] = current if current <= best else best
    return out


# --------------------------------------------------------------------------
# Brute-force oracle
# --------------------------------------------------------------------------


def brute_force_opt_oracle(a: MetricAutomaton, terminal, cap: int = 8) -> dict:
    """Independent recomputation of the guaranteed closest approach.

    Solves the underlying game directly by depth-bounded search: at each
    state the controller picks an enabled input (or stops), the adversary
    picks any disturbed successor, and the value is the best worst-case
    distance-to-target achievable within |Q| - 1 moves.  Memoized top-down
    recursion, deliberately sharing no code with the iterated-operator
    implementation.  Refuses automata with more than ``cap`` states.
    """
    if len(a.states) > cap:
        raise ValueError(f"oracle refuses |Q| = {len(a.states)} > cap = {cap}")
    terminal = tuple(terminal)
    horizon = max(0, len(a.states) - 1)
    memo: dict = {}

    def value(q, depth) -> Scalar:
        key = (q, depth)
        if key in memo:
            return memo[key]
        best = a.distance_to_set(q, terminal)  # stop here
        if depth > 0:
            for symbol in a.enabled_inputs(q):
                worst: Scalar = Fraction(0)
                for p in a.disturbed_successors(q, symbol):
                    reply = value(p, depth - 1)
                    if reply > worst:
                        worst = reply
                    if worst >= best:
                        break
                if worst < best:
                    best = worst
        memo[key] = best
        return best

    return {q: value(q, horizon) for q in a.states}


# --------------------------------------------------------------------------
# Nominal-winning checks
# --------------------------------------------------------------------------


def _nominal_graph(a: MetricAutomaton) -> dict:
    return {
        q: tuple(a.nominal_successor(q, s) for s in a.enabled_inputs(q)) for q in a.states
    }


def _find_bad_nominal_cycle(a: MetricAutomaton, terminal, require_total: bool):
    """A witness that the (already restricted) automaton is not nominally
    winning: either a reachable nominal cycle avoiding ``terminal``, or a
    reachable dead end at which the play stalls (off the terminal set for
    reachability; anywhere when an infinite play is required, i.e. Büchi).

    Returns ``None`` when every nominal play wins.
    """
    terminal = set(terminal)
    graph = _nominal_graph(a)

    # Nominal states reachable from the initial state.  Reachability plays
    # end on arrival, so the walk does not continue past terminal states
    # unless the objective needs an infinite play.
    reach = {a.initial}
    queue = [a.initial]
    while queue:
        q = queue.pop()
        if q in terminal and not require_total:
            continue
        for p in graph[q]:
            if p not in reach:
                reach.add(p)
                queue.append(p)

    for q in reach:
        if not graph[q] and (require_total or q not in terminal):
            return ("dead-end", q)

    # Any cycle within the reachable non-terminal part dooms some play
    # (iterative three-color depth-first search).
    core = {q for q in reach if q not in terminal}
    color = {q: 0 for q in core}  # 0 new, 1 on current path, 2 done
    for root in core:
        if color[root] != 0:
            continue
        color[root] = 1
        path = [root]
        stack = [(root, iter([p for p in graph[root] if p in core]))]
        while stack:
            node, successors = stack[-1]
            advanced = False
            for p in successors:
                if color[p] == 1:
                    cycle = path[path.index(p) :] + [p]
                    return ("cycle", tuple(cycle))
                if color[p] == 0:
                    color[p] = 1
                    path.append(p)
                    stack.append((p, iter([x for x in graph[p] if x in core])))
                    advanced = True
                    break
            if not advanced:
                stack.pop()
                path.pop()
                color[node] = 2
    return None


def check_nominally_winning(a: MetricAutomaton, strategy: MemorylessStrategy):
    """Restrict by the strategy and verify every nominal play wins the
    reach/Büchi objective; returns the restricted automaton or raises
    ``ValueError`` with a witness."""
    restricted = restrict_by_strategy(a, strategy)
    terminal = a.terminal_set()
    require_total = isinstance(a.acceptance, Buchi)
    bad = _find_bad_nominal_cycle(restricted, terminal, require_total)
    if bad is not None:
        kind, witness = bad
        if kind == "cycle":
            raise ValueError(
                "strategy is not nominally winning: nominal cycle avoiding the "
                f"terminal set: {' -> '.join(witness)}"
            )
        raise ValueError(
            f"strategy is not nominally winning: nominal play stalls at {witness!r}"
        )
    return restricted


# --------------------------------------------------------------------------
# Verification and synthesis
# --------------------------------------------------------------------------


def _build_report(
    a: MetricAutomaton, analysed: MetricAutomaton, strategy, opt: OptVector
) -> RobustnessReport:
    value = opt.at(analysed.initial)
    gamma_bar = analysed.gamma_bar()
    if value is INF:
        raise ValueError("initial state has no guaranteed approach to the terminal set")
    if gamma_bar == 0:
        sigma = Fraction(0)
    else:
        sigma = value / gamma_bar
    terminal = a.terminal_set()
    inflated = tuple(q for q in a.states if a.distance_to_set(q, terminal) <= value)
    return RobustnessReport(
        sigma=sigma,
        sigma_times_gamma=value,
        inflated_F=inflated,
        strategy=strategy,
        opt_star=opt,
        gamma_bar=gamma_bar,
        exact_win=value == 0,
    )


def verify_strategy_sigma(a: MetricAutomaton, strategy: MemorylessStrategy) -> RobustnessReport:
    """Exact robustness of a nominally winning strategy.

    Restricts the automaton to the closed loop, checks nominal winning
    (reachability: every nominal play reaches the terminal set; Büchi:
    additionally every reachable nominal cycle meets it), then divides the
    restricted guaranteed-approach value of the initial state by the
    restricted automaton's disturbance bound.
    """
    if not isinstance(a.acceptance, (Reachability, Buchi)):
        raise TypeError("verify_strategy_sigma handles reach and Büchi objectives")
    restricted = check_nominally_winning(a, strategy)
    opt = fixpoint_opt(restricted, a.terminal_set())
    return _build_report(a, restricted, strategy, opt)


def _recovery_choices(a: MetricAutomaton, opt: OptVector, q: str):
    """Inputs minimizing the worst-case successor value, preferring those
    whose disturbed set cannot stall at ``q`` itself."""
    enabled = a.enabled_inputs(q)
    if not enabled:
        return None
    worst = {}
    for symbol in enabled:
        worst[symbol] = max(opt.at(p) for p in a.disturbed_successors(q, symbol))
    best = min(worst.values())
    minimizers = tuple(s for s in enabled if worst[s] == best)
    progressing = tuple(
        s for s in minimizers if q not in a.disturbed_successors(q, s)
    )
    return progressing if progressing else minimizers


def synthesize_optimal(a: MetricAutomaton) -> RobustnessReport:
    """Optimally robust memoryless strategy for a reach or Büchi objective.

    Runs the fixpoint on the full automaton and recovers, at every state,
    the inputs that attain the minimal worst-case successor value, dropping
    inputs that may stall in place whenever a progressing minimizer exists.
    For Büchi objectives, terminal states instead take the single first-
    declared input whose nominal successor has the least fixpoint value
    (the play must deliberately leave the terminal set and come back).
    """
    if not isinstance(a.acceptance, (Reachability, Buchi)):
        raise TypeError("synthesize_optimal handles reach and Büchi objectives")
    terminal = a.terminal_set()
    opt = fixpoint_opt(a, terminal)
    choices = {}
    buchi = isinstance(a.acceptance, Buchi)
    for q in a.states:
        if buchi and q in terminal:
            enabled = a.enabled_inputs(q)
            if not enabled:
                continue
            best = min(opt.at(a.nominal_successor(q, s)) for s in enabled)
            pick = next(
                s for s in enabled if opt.at(a.nominal_successor(q, s)) == best
            )
            choices[q] = (pick,)
            continue
        picked = _recovery_choices(a, opt, q)
        if picked is not None:
            choices[q] = picked
    strategy = MemorylessStrategy(choices)
    return _build_report(a, a, strategy, opt)
