"""Parity robustness: lexicographic vector fixpoints, the parity progress
relation, the held-set computation, progress-restricted automata, and
verification/synthesis of deterministic strategies.

A parity objective colors (some) states with priorities 0..2n and accepts a
play iff the least priority seen infinitely often is even.  The analysis
tracks, per state, a vector of guaranteed-approach values toward the even
sets F_0, F_2, ..., F_2n, ordered lexicographically; progress of a play is
judged by the source-state-indexed relation

  * source in F_{2i+1}:  vector strictly lex-decreases on components 0..i,
  * source in F_{2i}:    vector not lex-greater on components 0..i-1
                         (vacuous at F_0, so values may reset there),
  * uncolored source:    vector strictly lex-decreases in full.

Around any recurring cycle these conditions force the least priority to be
even, which is what makes the relation a sound progress measure.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction

from .model import (
    MemorylessStrategy,
    MetricAutomaton,
    Parity,
    Transition,
    _intersect_acceptance,
    check_coreachability,
    restrict_by_strategy,
)
from .rationals import INF, Scalar, is_finite


class ParityVector(tuple):
    """A tuple of n+1 extended non-negative values, one per even set
    (F_0, F_2, ..., F_2n); compares lexicographically like any tuple."""

    __slots__ = ()


@dataclass(frozen=True)
class QBar:
    """Even-priority states from which no non-empty disturbed path reaches
    a state of lower-or-equal even priority.  A play can visit such a state
    at most once, so decrease obligations are waived there."""

    states: frozenset

    def __contains__(self, state: str) -> bool:
        return state in self.states

    def __iter__(self):
        return iter(sorted(self.states))


@dataclass
class ParityFixpoint:
    """Least fixpoint of the lexicographic guaranteed-approach operator:
    per-state vectors plus the number of changing applications."""

    values: dict  # state -> ParityVector
    iterations: int

    def at(self, state: str) -> ParityVector:
        return self.values[state]


@dataclass
class ParityReport:
    """Robustness outcome for a parity objective.

    ``sigma`` divides the largest finite component of the initial state's
    vector by the disturbance bound (the conservative figure the
    even-set-separation check can certify); ``sigma_min_component`` is the
    smallest finite component divided by the same bound, reported
    alongside.  ``certified`` is True when every state within sigma times
    gamma_bar of an even set (but outside it) carries no priority, so
    inflating the even sets keeps priorities unambiguous."""

    sigma: Fraction
    sigma_times_gamma: Fraction
    sigma_min_component: Fraction
    certified: bool
    separation_witnesses: tuple
    inflated_even_sets: tuple
    strategy: MemorylessStrategy
    opt_star: ParityFixpoint
    gamma_bar: Fraction
    exact_win: bool


# --------------------------------------------------------------------------
# Acceptance plumbing
# --------------------------------------------------------------------------


def _parity_sets(a: MetricAutomaton, sets):
    if sets is None:
        if not isinstance(a.acceptance, Parity):
            raise TypeError("automaton has no parity acceptance; pass the sets")
        return a.acceptance.sets
    sets = tuple(tuple(s) for s in sets)
    if len(sets) % 2 == 0:
        raise ValueError(
            f"parity needs an odd number of sets (F_0..F_2n), got {len(sets)}"
        )
    return sets


def _priority_lookup(sets) -> dict:
    out = {}
    for j, members in enumerate(sets):
        for q in members:
            out[q] = j
    return out


def _even_sets(sets) -> list:
    return [sets[2 * i] for i in range((len(sets) + 1) // 2)]


def distance_vector(a: MetricAutomaton, state: str, sets) -> ParityVector:
    """The seed vector (d(q,F_0), d(q,F_2), ..., d(q,F_2n)); components for
    empty or unreachable sets are infinite."""
    return ParityVector(a.distance_to_set(state, f) for f in _even_sets(sets))


def rhd_holds(priority, source_vector, target_vector) -> bool:
    """The source-indexed parity progress relation (see module docstring);
    ``priority`` is the source state's priority or None when uncolored."""
    va, vb = tuple(source_vector), tuple(target_vector)
    if priority is None:
        return va > vb
    if priority % 2 == 1:
        i = (priority - 1) // 2
        return va[: i + 1] > vb[: i + 1]
    i = priority // 2
    return va[:i] >= vb[:i]


# --------------------------------------------------------------------------
# Held set
# --------------------------------------------------------------------------


def compute_qbar(a: MetricAutomaton, sets=None) -> QBar:
    """Exact held set: even-priority states with no non-empty disturbed
    path to any state of lower-or-equal even priority (the state itself
    counts as a target only when revisited)."""
    sets = _parity_sets(a, sets)
    evens = _even_sets(sets)
    graph = {
        q: {p for s in a.enabled_inputs(q) for p in a.disturbed_successors(q, s)}
        for q in a.states
    }
    held = set()
    for i, members in enumerate(evens):
        targets = {q for f in evens[: i + 1] for q in f}
        for q in members:
            frontier = list(graph[q])
            seen = set(frontier)
            hit = any(p in targets for p in frontier)
            while frontier and not hit:
                p = frontier.pop()
                for r in graph[p]:
                    if r in targets:
                        hit = True
                        break
                    if r not in seen:
                        seen.add(r)
                        frontier.append(r)
            if not hit:
                held.add(q)
    return QBar(frozenset(held))


# --------------------------------------------------------------------------
# Progress check on lassos
# --------------------------------------------------------------------------


def progress_measure_holds(ranks, stem, loop, sets) -> bool:
    """Sound lasso test: the progress relation must hold at every loop
    position (failures in the finite stem are forgiven).  True implies the
    loop's least priority is even, hence the lasso wins."""
    stem = list(stem)
    loop = list(loop)
    if not loop:
        raise ValueError("lasso needs a non-empty loop")
    if not isinstance(sets, (list, tuple)):
        raise TypeError("progress_measure_holds needs the priority sets")
    sets = tuple(tuple(s) for s in sets)
    if len(sets) % 2 == 0:
        raise ValueError("parity needs an odd number of sets")
    width = (len(sets) + 1) // 2
    priority = _priority_lookup(sets)
    lookup = {}
    for q in stem + loop:
        if q not in ranks:
            raise ValueError(f"no rank vector for lasso state {q!r}")
        vec = tuple(ranks[q])
        if len(vec) != width:
            raise ValueError(
                f"rank vector for {q!r} has {len(vec)} components, expected {width}"
            )
        lookup[q] = vec
    for t in range(len(loop)):
        u = loop[t]
        v = loop[(t + 1) % len(loop)]
        if not rhd_holds(priority.get(u), lookup[u], lookup[v]):
            return False
    return True


def least_loop_priority(loop, sets):
    """Least priority among the loop's colored states (None if uncolored
    throughout); the direct evaluation the progress check is sound for."""
    priority = _priority_lookup(tuple(tuple(s) for s in sets))
    found = [priority[q] for q in loop if q in priority]
    return min(found) if found else None


# --------------------------------------------------------------------------
# Lexicographic fixpoint
# --------------------------------------------------------------------------


def parity_fixpoint(a: MetricAutomaton, sets=None) -> ParityFixpoint:
    """Least fixpoint of the guaranteed-approach operator where values are
    even-set distance vectors compared lexicographically: each application
    takes, per state, the lex-min of the current vector and the best (over
    enabled inputs) worst-case (lex-max over disturbed successors) vector.
    Converges in at most |Q| - 1 changing applications; asserted on every
    run."""
    sets = _parity_sets(a, sets)
    values = {q: distance_vector(a, q, sets) for q in a.states}
    iterations = 0
    bound = len(a.states) * len(a.states) + 3
    for _ in range(bound):
        nxt = {}
        for q in a.states:
            best = None
            for symbol in a.enabled_inputs(q):
                worst = max(values[p] for p in a.disturbed_successors(q, symbol))
                if best is None or worst < best:
                    best = worst
            current = values[q]
            nxt[q] = current if best is None or current <= best else best
        if nxt == values:
            break
        values = nxt
        iterations += 1
    else:
        raise RuntimeError("lexicographic fixpoint failed to converge")
    assert iterations <= max(0, len(a.states) - 1), (
        f"fixpoint took {iterations} iterations on {len(a.states)} states"
    )
    return ParityFixpoint(values=values, iterations=iterations)


# --------------------------------------------------------------------------
# Progress restriction
# --------------------------------------------------------------------------


def restrict_by_progress(a: MetricAutomaton, sets=None) -> MetricAutomaton:
    """Sub-automaton keeping input a at q iff the seed distance vectors
    satisfy the progress relation from q to the nominal successor.  States
    left without inputs are pruned (with a warning) and the removal
    cascades; pruning the initial state is an error."""
    sets = _parity_sets(a, sets)
    priority = _priority_lookup(sets)
    seed = {q: distance_vector(a, q, sets) for q in a.states}

    alive = set(a.states)
    kept = {}
    pruned = []
    while True:
        kept = {}
        empty = []
        for q in alive:
            good = []
            for symbol in a.enabled_inputs(q):
                target = a.nominal_successor(q, symbol)
                if target not in alive:
                    continue
                if rhd_holds(priority.get(q), seed[q], seed[target]):
                    good.append(symbol)
            if good:
                kept[q] = tuple(good)
            else:
                empty.append(q)
        if not empty:
            break
        for q in empty:
            alive.discard(q)
            pruned.append(q)
    if pruned:
        warnings.warn(
            "progress restriction pruned states without progress inputs: "
            + ", ".join(sorted(pruned)),
            stacklevel=2,
        )
    if a.initial not in alive:
        raise ValueError("initial state has no input satisfying the progress relation")

    states = tuple(q for q in a.states if q in alive)
    transitions = {}
    for q in states:
        for symbol in kept[q]:
            t = a.transitions[(q, symbol)]
            disturbed = t.disturbed
            if disturbed is not None:
                disturbed = tuple(p for p in disturbed if p in alive)
            transitions[(q, symbol)] = Transition(q, symbol, t.nominal, disturbed)
    return MetricAutomaton(
        states,
        a.initial,
        a.inputs,
        transitions,
        a.gamma,
        a.metric,
        _intersect_acceptance(a.acceptance, alive)
        if isinstance(a.acceptance, Parity)
        else Parity(tuple(tuple(x for x in s if x in alive) for s in sets)),
        a.coords,
    )


# --------------------------------------------------------------------------
# Winning check (deterministic closed loop)
# --------------------------------------------------------------------------


def _check_parity_winning(restricted: MetricAutomaton, sets):
    """In the deterministic closed loop, the nominal play from every
    reachable state runs into a cycle; each such cycle must carry a least
    priority and it must be even.  Raises with a witness otherwise."""
    priority = _priority_lookup(sets)
    succ = {}
    for q in restricted.states:
        enabled = restricted.enabled_inputs(q)
        if not enabled:
            raise ValueError(
                f"strategy is not nominally winning: play stalls at {q!r}"
            )
        succ[q] = restricted.nominal_successor(q, enabled[0])

    state_status = {}  # state -> True once its nominal tail is known good
    for root in restricted.states:
        if root in state_status:
            continue
        trail = []
        seen_at = {}
        q = root
        while q not in state_status and q not in seen_at:
            seen_at[q] = len(trail)
            trail.append(q)
            q = succ[q]
        if q in seen_at:
            cycle = trail[seen_at[q]:]
            found = [priority[p] for p in cycle if p in priority]
            least = min(found) if found else None
            if least is None or least % 2 == 1:
                label = "no priority" if least is None else f"least priority {least}"
                raise ValueError(
                    "strategy is not nominally winning: nominal cycle "
                    + " -> ".join(cycle + [cycle[0]])
                    + f" has {label}"
                )
        for p in trail:
            state_status[p] = True


# --------------------------------------------------------------------------
# Verification and synthesis
# --------------------------------------------------------------------------


def _finite_components(vector) -> list:
    return [v for v in vector if is_finite(v)]


def even_set_separation(a: MetricAutomaton, sets, radius) -> tuple:
    """Witnesses against inflating every even set by ``radius``: pairs
    (state, priority-set index) where a colored state outside F_{2i} lies
    within the radius of it, so the inflated sets would assign it a second
    priority.  Empty tuple means the inflation is unambiguous."""
    priority = _priority_lookup(sets)
    witnesses = []
    for i, members in enumerate(_even_sets(sets)):
        f2i = set(members)
        for q in a.states:
            if q in f2i or q not in priority:
                continue
            if a.distance_to_set(q, members) <= radius:
                witnesses.append((q, 2 * i))
    return tuple(witnesses)


def _build_parity_report(
    a: MetricAutomaton, analysed: MetricAutomaton, strategy, opt: ParityFixpoint, sets
) -> ParityReport:
    vector = opt.at(analysed.initial)
    finite = _finite_components(vector)
    if not finite:
        raise ValueError(
            "initial state has no guaranteed approach to any even-priority set"
        )
    value = max(finite)
    minimum = min(finite)
    gamma_bar = analysed.gamma_bar()
    if gamma_bar == 0:
        sigma = Fraction(0)
        sigma_min = Fraction(0)
    else:
        sigma = value / gamma_bar
        sigma_min = minimum / gamma_bar

    witnesses = even_set_separation(a, sets, value)
    inflated = tuple(
        tuple(q for q in a.states if a.distance_to_set(q, members) <= value)
        for members in _even_sets(sets)
    )
    return ParityReport(
        sigma=sigma,
        sigma_times_gamma=value,
        sigma_min_component=sigma_min,
        certified=not witnesses,
        separation_witnesses=tuple(witnesses),
        inflated_even_sets=inflated,
        strategy=strategy,
        opt_star=opt,
        gamma_bar=gamma_bar,
        exact_win=value == 0,
    )


def verify_parity_sigma(a: MetricAutomaton, strategy: MemorylessStrategy) -> ParityReport:
    """Exact robustness of a deterministic nominally winning strategy.

    Restricts to the closed loop, requires every nominal tail's cycle to
    have an even least priority, runs the lexicographic fixpoint there, and
    reports the largest finite initial component over the disturbance
    bound.  The bound is marked certified only when every state that close
    to an even set (but outside it) is uncolored, so the even sets inflate
    without priority clashes.
    """
    if not isinstance(a.acceptance, Parity):
        raise TypeError("verify_parity_sigma needs a parity acceptance")
    if not strategy.is_deterministic:
        raise ValueError("parity verification handles deterministic strategies only")
    sets = a.acceptance.sets
    restricted = restrict_by_strategy(a, strategy)
    _check_parity_winning(restricted, sets)
    opt = parity_fixpoint(restricted, sets)
    return _build_parity_report(a, restricted, strategy, opt, sets)


def synthesize_parity(a: MetricAutomaton) -> ParityReport:
    """Optimally robust deterministic strategy for a parity objective.

    Requires the even-set connectedness assumption.  Restricts the
    automaton by the progress relation on seed distance vectors, runs the
    lexicographic fixpoint there, and picks at each surviving state the
    progress input whose nominal successor vector is lexicographically
    least (first declared on ties); held-set states take their first
    declared input.  Reports both the conservative (largest finite
    component) robustness and the smallest-component figure.
    """
    if not isinstance(a.acceptance, Parity):
        raise TypeError("synthesize_parity needs a parity acceptance")
    sets = a.acceptance.sets
    coreach = check_coreachability(a)
    if not coreach.ok:
        details = "; ".join(f"{q}: {why}" for q, why in coreach.witnesses)
        raise ValueError(f"nominal connectedness fails: {details}")

    held = compute_qbar(a, sets)
    restricted = restrict_by_progress(a, sets)
    opt = parity_fixpoint(restricted, sets)

    choices = {}
    for q in a.states:
        if q in held:
            enabled = a.enabled_inputs(q)
            if enabled:
                choices[q] = (enabled[0],)
            continue
        if q in restricted._order:
            candidates = restricted.enabled_inputs(q)
        else:
            candidates = ()
        if not candidates:
            raise ValueError(
                f"no input satisfying the progress relation at state {q!r}"
            )
        best = None
        pick = None
        for symbol in candidates:
            target = restricted.nominal_successor(q, symbol)
            vec = opt.at(target)
            if best is None or vec < best:
                best = vec
                pick = symbol
        choices[q] = (pick,)
    strategy = MemorylessStrategy(choices)
    return _build_parity_report(a, restricted, strategy, opt, sets)
