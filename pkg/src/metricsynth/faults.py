"""Transient-fault tolerance: how sparse must disturbances be for a winning
strategy to keep winning outright.

A disturbance strategy is N-bounded when any two non-trivial disturbances
are at least N steps apart.  For a σ-robust strategy the sufficient
spacing is the longest nominal strategy trace from any state within σ·γ̄
of the target set back to the target set (per even-priority set for
parity, ignoring sets a state cannot reach).  The exhaustive search
validates such bounds exactly on the product of the automaton with a
saturating steps-since-fault counter.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .model import Buchi, MetricAutomaton, Parity, Reachability
from .parity import _even_sets, _priority_lookup, verify_parity_sigma
from .rationals import INF, Scalar, is_finite
from .reach import verify_strategy_sigma


@dataclass(frozen=True)
class FaultBound:
    """The sufficient fault spacing N plus the trace lengths the max ran
    over (state -> length for Büchi/reach, (state, even index) -> length
    for parity; infinite entries are reported but never contribute).
    ``certified`` is set only when the caller vouches the strategy was
    induced from a checked certificate."""

    N: int | Scalar
    trace_lengths: dict
    sigma: Fraction
    sigma_times_gamma: Fraction
    certified: bool


@dataclass(frozen=True)
class SimOutcome:
    """Verdict of the exhaustive bounded-adversary search: the search is
    exact on the finite product, so ``no-violation-found`` is a proof for
    the given spacing."""

    verdict: str  # "no-violation-found" | "violation"
    witness: tuple | None  # (stem states, loop states, fault positions)
    explored: int
    N: int


@dataclass(frozen=True)
class SimRun:
    """One simulated play: the visited states, which steps were faulted
    (1-based transition indices), and the acceptance evaluation over the
    final cycle once a state repeat closes a lasso (None when no lasso
    closed within the step budget)."""

    trace: tuple
    fault_positions: tuple
    accepted: bool | None
    cycle: tuple
    seed: int | None = None


def _objective_of(a: MetricAutomaton, objective: str | None) -> str:
    kinds = {"reachability": "reach", "buchi": "buchi", "parity": "parity"}
    inferred = kinds.get(a.acceptance.kind)
    if inferred is None:
        raise TypeError(
            f"fault bounds support reachability, Büchi and parity objectives, "
            f"not {a.acceptance.kind!r}"
        )
    if objective is not None and objective != inferred:
        raise ValueError(
            f"requested objective {objective!r} does not match acceptance "
            f"{a.acceptance.kind!r}"
        )
    return inferred


def _single_choice(strategy, q: str):
    chosen = strategy.inputs_at(q)
    if len(chosen) != 1:
        raise ValueError(
            f"fault analysis needs a deterministic strategy; state {q!r} has "
            f"{len(chosen)} choices"
        )
    return chosen[0]


def _trace_length(a: MetricAutomaton, strategy, start: str, targets: set):
    """|τ^S(start, targets)| in the count-the-states convention: 1 when
    start is already inside, ∞ when the nominal strategy orbit never gets
    there (or the strategy is undefined en route)."""
    q = start
    length = 1
    for _ in range(len(a.states) + 1):
        if q in targets:
            return length
        chosen = strategy.inputs_at(q)
        if len(chosen) != 1 or chosen[0] not in a.enabled_inputs(q):
            return INF
        q = a.nominal_successor(q, chosen[0])
        length += 1
    return INF


def compute_fault_bound(
    a: MetricAutomaton, strategy, objective: str | None = None, clf_induced: bool = False
) -> FaultBound:
    """Sufficient spacing N between faults for the strategy to win
    outright: the longest nominal strategy trace from the inflated target
    set (states within σ·γ̄ of it) back to the target set; for parity, the
    max over even sets of the finite entries only."""
    kind = _objective_of(a, objective)
    lengths: dict = {}
    if kind == "parity":
        report = verify_parity_sigma(a, strategy)
        radius = report.sigma_times_gamma
        best = 0
        for i, members in enumerate(_even_sets(a.acceptance.sets)):
            targets = set(members)
            if not targets:
                continue
            for q in a.states:
                if a.distance_to_set(q, members) > radius:
                    continue
                n = _trace_length(a, strategy, q, targets)
                lengths[(q, 2 * i)] = n
                if is_finite(n) or isinstance(n, int):
                    best = max(best, n)
        N: int | Scalar = int(best)
    else:
        report = verify_strategy_sigma(a, strategy)
        radius = report.sigma_times_gamma
        targets = set(a.terminal_set())
        worst: int | Scalar = 0
        for q in a.states:
            if a.distance_to_set(q, targets) > radius:
                continue
            n = _trace_length(a, strategy, q, targets)
            lengths[q] = n
            if not (is_finite(n) or isinstance(n, int)):
                worst = INF
            elif worst is not INF:
                worst = max(worst, n)
        N = worst if worst is INF else int(worst)
    return FaultBound(
        N=N,
        trace_lengths=lengths,
        sigma=report.sigma,
        sigma_times_gamma=report.sigma_times_gamma,
        certified=bool(clf_induced) and N is not INF,
    )


# --------------------------------------------------------------------------
# Exhaustive bounded-adversary search
# --------------------------------------------------------------------------


def _product_graph(a: MetricAutomaton, strategy, N: int):
    """Nodes (state, gap) where gap counts steps since the last fault,
    saturated at N (the start is saturated: an immediate fault is legal).
    Edges carry the concrete successor and whether the step was a fault."""
    start = (a.initial, N)
    edges: dict = {}
    frontier = [start]
    seen = {start}
    while frontier:
        node = frontier.pop()
        q, gap = node
        symbol = _single_choice(strategy, q)
        if symbol not in a.enabled_inputs(q):
            raise ValueError(
                f"strategy chooses disabled input {symbol!r} at reachable state {q!r}"
            )
        nominal = a.nominal_successor(q, symbol)
        succs = [((nominal, min(gap + 1, N)), False)]
        if gap >= N:
            for p in a.disturbed_successors(q, symbol):
                if p != nominal:
                    succs.append(((p, min(1, N)), True))
        edges[node] = succs
        for nxt, _ in succs:
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return start, edges


def _find_cycle(edges: dict, allowed, start, require=None):
    """A reachable cycle through ``allowed`` nodes (all of whose nodes are
    allowed), optionally required to pass through the node ``require``;
    returns (stem nodes, cycle nodes with edge flags) or None."""
    # reachable allowed-entry points with stems recorded
    parent = {start: None}
    order = [start]
    i = 0
    while i < len(order):
        node = order[i]
        i += 1
        for nxt, fault in edges.get(node, ()):
            if nxt not in parent:
                parent[nxt] = (node, fault)
                order.append(nxt)

    def stem_to(node):
        back = []
        cur = node
        while parent[cur] is not None:
            prev, fault = parent[cur]
            back.append((cur, fault))
            cur = prev
        back.reverse()
        return cur, back

    candidates = [require] if require is not None else [n for n in order if n in allowed]
    for entry in candidates:
        if entry not in parent or entry not in allowed:
            continue
        # DFS within allowed from entry back to entry
        stack = [(entry, iter(edges.get(entry, ())))]
        trail = {entry: None}
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt, fault in it:
                if nxt == entry:
                    # close the cycle
                    cyc = [(entry, None)]
                    cur = node
                    chain = [(nxt, fault)]
                    while cur != entry:
                        prev, pf = trail[cur]
                        chain.append((cur, pf))
                        cur = prev
                    chain.reverse()
                    root, stem = stem_to(entry)
                    return root, stem, chain
                if nxt in allowed and nxt not in trail:
                    trail[nxt] = (node, fault)
                    stack.append((nxt, iter(edges.get(nxt, ()))))
                    advanced = True
                    break
            if not advanced:
                stack.pop()
    return None


def _witness_from(root, stem, chain):
    """Flatten a (root, stem edges, cycle edges) triple into state lists
    and 1-based fault step positions along stem+cycle."""
    stem_states = [root[0]] + [node[0] for node, _ in stem]
    cycle_states = [node[0] for node, _ in chain]
    positions = []
    step = 0
    for _, fault in stem:
        step += 1
        if fault:
            positions.append(step)
    for _, fault in chain:
        step += 1
        if fault:
            positions.append(step)
    return tuple(stem_states), tuple(cycle_states), tuple(positions)


def exhaustive_adversary_search(
    a: MetricAutomaton,
    strategy,
    N: int,
    objective: str | None = None,
    state_cap: int = 10,
) -> SimOutcome:
    """Exact bounded-adversary model check: explores every play of the
    N-spaced adversary against the deterministic strategy on the finite
    counter product and reports a violating lasso if one exists.

    Violations: a reachable product cycle avoiding the target set
    (reachability/Büchi), or one whose least visited priority is odd or
    absent (parity)."""
    kind = _objective_of(a, objective)
    if len(a.states) > state_cap:
        raise ValueError(
            f"exhaustive search capped at {state_cap} states, automaton has "
            f"{len(a.states)}"
        )
    if N < 0:
        raise ValueError("fault spacing must be non-negative")
    start, edges = _product_graph(a, strategy, N)

    if kind in ("reach", "buchi"):
        targets = set(a.terminal_set())
        if kind == "reach":
            # the play ends on arrival: cut edges out of target states
            edges = {
                node: (succs if node[0] not in targets else [])
                for node, succs in edges.items()
            }
        allowed = {node for node in edges if node[0] not in targets}
        found = _find_cycle(edges, allowed, start)
        if found is not None:
            return SimOutcome(
                verdict="violation",
                witness=_witness_from(*found),
                explored=len(edges),
                N=N,
            )
        return SimOutcome("no-violation-found", None, len(edges), N)

    # parity
    priority = _priority_lookup(a.acceptance.sets)
    odd_values = sorted(
        {j for j in priority.values() if j % 2 == 1}
    )
    # cycles with least priority odd
    for j in odd_values:
        allowed = {
            node
            for node in edges
            if priority.get(node[0], len(a.acceptance.sets)) >= j
        }
        through = [node for node in allowed if priority.get(node[0]) == j]
        for node in through:
            found = _find_cycle(edges, allowed, start, require=node)
            if found is not None:
                return SimOutcome(
                    "violation", _witness_from(*found), len(edges), N
                )
    # cycles with no priority at all
    allowed = {node for node in edges if node[0] not in priority}
    found = _find_cycle(edges, allowed, start)
    if found is not None:
        return SimOutcome("violation", _witness_from(*found), len(edges), N)
    return SimOutcome("no-violation-found", None, len(edges), N)


# --------------------------------------------------------------------------
# Simulation
# --------------------------------------------------------------------------


def _validate_spacing(positions, N):
    ordered = sorted(positions)
    for prev, nxt in zip(ordered, ordered[1:]):
        if nxt - prev < N:
            raise ValueError(
                f"scripted faults at steps {prev} and {nxt} are closer than "
                f"the requested spacing {N}"
            )
    return ordered


def witness_script(witness) -> dict:
    """Turn a search witness into a scripted adversary: the forced
    successor for each 1-based fault step along stem + one pass of the
    loop."""
    stem, loop, positions = witness
    seq = list(stem) + list(loop)
    return {p: seq[p] for p in positions}


def simulate_run(
    a: MetricAutomaton,
    strategy,
    adversary,
    steps: int = 50,
    min_spacing: int | None = None,
    stop_on_repeat: bool = True,
) -> SimRun:
    """Replay a single play of the strategy against a scripted or seeded
    random adversary.

    ``adversary`` is ("scripted", positions) with 1-based transition
    indices (or a {position: forced-successor} mapping), or
    ("random", seed).  Scripted positions are validated against
    ``min_spacing`` when given.  The run stops at the target set for
    reachability, on a state repeat (closing a lasso and evaluating the
    acceptance over its cycle), or after ``steps`` transitions."""
    kind = _objective_of(a, objective=None)
    mode, arg = adversary
    rng = None
    script: dict = {}
    seed = None
    if mode == "scripted":
        if isinstance(arg, dict):
            script = dict(arg)
            positions = list(arg)
        else:
            positions = list(arg)
            script = {p: None for p in positions}
        if min_spacing is not None:
            _validate_spacing(positions, min_spacing)
        gap_needed = 0
    elif mode == "random":
        seed = arg
        rng = random.Random(arg)
        gap_needed = min_spacing if min_spacing is not None else 1
    else:
        raise ValueError(f"unknown adversary mode {mode!r}")

    q = a.initial
    trace = [q]
    faults = []
    last_fault = None
    targets = set(a.terminal_set()) if kind in ("reach", "buchi") else set()
    seen_at = {q: 0}
    cycle: tuple = ()
    accepted: bool | None = None

    for step in range(1, steps + 1):
        if kind == "reach" and q in targets:
            accepted = True
            break
        chosen = _single_choice(strategy, q)
        if chosen not in a.enabled_inputs(q):
            raise ValueError(
                f"strategy chooses disabled input {chosen!r} at state {q!r}"
            )
        nominal = a.nominal_successor(q, chosen)
        disturbed = [p for p in a.disturbed_successors(q, chosen) if p != nominal]
        target = nominal
        if mode == "scripted":
            if step in script:
                forced = script[step]
                if forced is None:
                    if disturbed:
                        target = disturbed[0]
                        faults.append(step)
                else:
                    if forced != nominal and forced not in disturbed:
                        raise ValueError(
                            f"scripted successor {forced!r} is not a disturbed "
                            f"successor of {q!r} at step {step}"
                        )
                    target = forced
                    if forced != nominal:
                        faults.append(step)
        else:
            allowed = last_fault is None or step - last_fault >= gap_needed
            if allowed and disturbed and rng.random() < 0.5:
                target = rng.choice(disturbed)
                faults.append(step)
                last_fault = step
        q = target
        trace.append(q)
        if kind != "reach" and stop_on_repeat and q in seen_at:
            cycle = tuple(trace[seen_at[q]: -1])
            if kind == "buchi":
                accepted = any(p in targets for p in cycle)
            else:
                priority = _priority_lookup(a.acceptance.sets)
                found = [priority[p] for p in cycle if p in priority]
                accepted = bool(found) and min(found) % 2 == 0
            break
        seen_at[q] = len(trace) - 1

    if kind == "reach" and accepted is None:
        accepted = True if q in targets else None
    return SimRun(
        trace=tuple(trace),
        fault_positions=tuple(faults),
        accepted=accepted,
        cycle=cycle,
        seed=seed,
    )


def fault_threshold_search(
    a: MetricAutomaton,
    strategy,
    objective: str | None = None,
    state_cap: int = 10,
    clf_induced: bool = False,
):
    """Decrement the spacing from the computed sufficient bound until the
    exhaustive search finds a violation; reports the certified bound
    alongside the smallest spacing that is still empirically safe."""
    bound = compute_fault_bound(a, strategy, objective, clf_induced=clf_induced)
    if bound.N is INF:
        return bound, None, None
    n = int(bound.N)
    first_violation = None
    witness = None
    for candidate in range(n, -1, -1):
        outcome = exhaustive_adversary_search(
            a, strategy, candidate, objective, state_cap
        )
        if outcome.verdict == "violation":
            first_violation = candidate
            witness = outcome
            break
    minimal_safe = n if first_violation is None else first_violation + 1
    if first_violation is None:
        minimal_safe = 0
    return bound, minimal_safe, witness
