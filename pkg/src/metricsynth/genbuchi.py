"""Generalized Büchi robustness: per-target-set matrix fixpoint, the
vector-rank chain relations, counter-indexed strategies, and their
verification and synthesis.

A generalized Büchi objective asks that each of the sets F_0 .. F_{n-1} be
visited infinitely often.  Rather than expanding the state space up front,
the analysis runs one guaranteed-approach fixpoint per target set (the
columns of an m-by-n matrix) and synthesizes a strategy indexed by the
awaited set: play the column-i reachability strategy until a state of F_i
is entered, then advance to column (i+1) mod n.  Verification of a given
indexed strategy is the only place a counter product is materialized, and
it stays internal.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .model import (
    GeneralizedBuchi,
    IndexedStrategy,
    Metric,
    MetricAutomaton,
    PerStateBound,
    Reachability,
    Transition,
    check_coreachability,
)
from .rationals import INF
from .reach import OptVector, _recovery_choices, fixpoint_opt


@dataclass
class OptMatrix:
    """Stacked per-target-set guaranteed-approach values.

    ``values`` maps ``(state, k)`` to the column-k fixpoint value, i.e. the
    closest the controller can guarantee to get to F_k from that state.
    ``iterations`` is the largest changing-application count over the
    columns (each column independently satisfies the |Q| - 1 bound)."""

    values: dict  # (state, k) -> Scalar
    iterations: int
    n: int

    def at(self, state: str, k: int) -> Scalar:
        return self.values[(state, k)]

    def column(self, k: int) -> dict:
        return {q: v for (q, kk), v in self.values.items() if kk == k}


@dataclass
class RankVector:
    """Per-state tuples of n non-negative rank components, one component
    per target set.  Component i plays the role of a reachability rank
    toward F_i; vanishing exactly on F_i is not required here."""

    values: dict  # state -> tuple of n Scalars
    n: int

    def at(self, state: str) -> tuple:
        return self.values[state]


@dataclass
class GenBuchiReport:
    """Robustness outcome for a generalized Büchi objective.

    ``column_values`` holds the per-target-set guaranteed-approach value of
    the initial configuration; ``sigma_times_gamma`` is their maximum and
    ``inflated_sets`` the per-set inflations by that radius.  For synthesis
    ``opt_matrix`` is the full-automaton matrix; for verification it holds
    the counter-product values (states named ``q@i``)."""

    sigma: Fraction
    sigma_times_gamma: Fraction
    column_values: tuple
    inflated_sets: tuple
    strategy: IndexedStrategy
    opt_matrix: OptMatrix
    gamma_bar: Fraction
    exact_win: bool


# --------------------------------------------------------------------------
# Matrix fixpoint
# --------------------------------------------------------------------------


def genbuchi_fixpoint(a: MetricAutomaton, sets=None) -> OptMatrix:
    """Column-wise least fixpoint of the guaranteed-approach operator.

    Column k is exactly the reachability fixpoint for target set F_k; the
    columns are independent and merged by index.  Unreachable targets
    simply surface as large (or infinite) column entries; nominal
    connectedness is enforced at synthesis and verification time, not
    here.
    """
    if sets is None:
        if not isinstance(a.acceptance, GeneralizedBuchi):
            raise TypeError("automaton has no generalized Büchi acceptance; pass sets")
        sets = a.acceptance.sets
    sets = [tuple(s) for s in sets]
    if not sets:
        raise ValueError("need at least one target set")
    values = {}
    iterations = 0
    for k, terminal in enumerate(sets):
        column = fixpoint_opt(a, terminal)
        iterations = max(iterations, column.iterations)
        for q, v in column.values.items():
            values[(q, k)] = v
    return OptMatrix(values=values, iterations=iterations, n=len(sets))


# --------------------------------------------------------------------------
# Chain relation on rank vectors
# --------------------------------------------------------------------------


def _rank_lookup(ranks, n: int) -> dict:
    values = ranks.values if isinstance(ranks, RankVector) else ranks
    out = {}
    for q, vec in values.items():
        vec = tuple(vec)
        if len(vec) != n:
            raise ValueError(
                f"rank vector for {q!r} has {len(vec)} components, expected {n}"
            )
        out[q] = vec
    return out


def rhd_chain_check(ranks, stem, loop, sets) -> bool:
    """Sound chain test for generalized Büchi acceptance of a lasso.

    Walks the lasso with an awaited-set index starting at 0.  Leaving a
    state of the awaited set advances the index (mod n); every consecutive
    rank pair (a, b) must satisfy the index's chain relation

        a[i] > b[i]   or   a[(i - 1) mod n] == 0.

    True requires additionally that the periodic part keeps advancing the
    index (a stalled index never discharges the awaited set).  True implies
    the loop visits every set; False proves nothing, since accepting lassos
    may visit the sets out of order.
    """
    stem = list(stem)
    loop = list(loop)
    if not loop:
        raise ValueError("lasso needs a non-empty loop")
    sets = [set(s) for s in sets]
    n = len(sets)
    if n == 0:
        raise ValueError("need at least one target set")
    rank_of = _rank_lookup(ranks, n)
    for q in stem + loop:
        if q not in rank_of:
            raise ValueError(f"no rank vector for lasso state {q!r}")

    def relation(u: str, v: str, i: int) -> bool:
        va, vb = rank_of[u], rank_of[v]
        return va[i] > vb[i] or va[(i - 1) % n] == 0

    index = 0
    path = stem + [loop[0]]
    for t in range(len(path) - 1):
        u = path[t]
        if u in sets[index]:
            index = (index + 1) % n
        if not relation(u, path[t + 1], index):
            return False

    seen = {}
    advances = 0
    pos = 0
    while True:
        config = (pos, index)
        if config in seen:
            return advances - seen[config] >= 1
        seen[config] = advances
        u = loop[pos]
        if u in sets[index]:
            index = (index + 1) % n
            advances += 1
        if not relation(u, loop[(pos + 1) % len(loop)], index):
            return False
        pos = (pos + 1) % len(loop)


# --------------------------------------------------------------------------
# Counter product (internal)
# --------------------------------------------------------------------------


def _strategy_product(a: MetricAutomaton, strategy: IndexedStrategy, sets):
    """The closed loop of an indexed strategy as a metric automaton over
    configurations (state, awaited index).  The index advances exactly when
    the entered state belongs to the currently awaited set.

    Returns the product automaton, the configuration list, the nominal
    closed-loop graph annotated with whether each edge advances the index,
    and the configuration naming function.  The product's metric also
    carries entries from every configuration to every plain target-set
    state, so fixpoints over the product can be seeded with distances to
    the full sets, including set states the closed loop never visits.
    """
    n = len(sets)
    lookup = [set(s) for s in sets]
    separator = "@"
    while any(separator in q for q in a.states):
        separator += "@"

    def cname(state: str, index: int) -> str:
        return f"{state}{separator}{index}"

    def advanced(index: int, entered: str) -> int:
        return (index + 1) % n if entered in lookup[index] else index

    start = (a.initial, 0)
    nodes = [start]
    seen = {start}
    queue = [start]
    transitions = []
    nominal_graph = {}
    while queue:
        q, i = queue.pop(0)
        name = cname(q, i)
        nominal_graph[name] = []
        enabled = a.enabled_inputs(q)
        chosen = tuple(s for s in strategy.inputs_at(q, i) if s in enabled)
        if enabled and not chosen:
            raise ValueError(
                f"strategy chooses no enabled input at state {q!r} while awaiting set {i}"
            )
        for symbol in chosen:
            nominal = a.nominal_successor(q, symbol)
            lifted = []
            for p in a.disturbed_successors(q, symbol):
                node = (p, advanced(i, p))
                lifted.append(node)
                if node not in seen:
                    seen.add(node)
                    nodes.append(node)
                    queue.append(node)
            nominal_target = cname(nominal, advanced(i, nominal))
            nominal_graph[name].append((nominal_target, nominal in lookup[i]))
            transitions.append(
                Transition(
                    name,
                    symbol,
                    nominal_target,
                    [cname(*node) for node in lifted],
                )
            )

    names = [cname(*node) for node in nodes]
    all_targets = sorted({f for members in lookup for f in members})
    entries = {}
    for q, i in nodes:
        for p, j in nodes:
            if (q, i) != (p, j):
                entries[(cname(q, i), cname(p, j))] = a.distance(q, p)
        for f in all_targets:
            entries[(cname(q, i), f)] = a.distance(q, f)
    product = MetricAutomaton(
        states=names,
        initial=cname(*start),
        inputs=a.inputs,
        transitions=transitions,
        gamma=PerStateBound({cname(q, i): a.gamma_at(q) for q, i in nodes}),
        metric=Metric.explicit(entries),
        acceptance=Reachability(names),
    )
    return product, nodes, nominal_graph, cname


def _check_product_winning(nominal_graph: dict):
    """Every nominal play of the closed loop must keep advancing the
    awaited index; a stall (dead end) or a nominal cycle that never enters
    the awaited set dooms some play."""
    for name, succs in nominal_graph.items():
        if not succs:
            raise ValueError(
                f"strategy is not nominally winning: play stalls at configuration {name}"
            )

    stalled = {
        name: [t for t, adv in succs if not adv] for name, succs in nominal_graph.items()
    }
    color = {name: 0 for name in nominal_graph}
    for root in nominal_graph:
        if color[root] != 0:
            continue
        color[root] = 1
        path = [root]
        stack = [(root, iter(stalled[root]))]
        while stack:
            node, successors = stack[-1]
            moved = False
            for p in successors:
                if color[p] == 1:
                    cycle = path[path.index(p):] + [p]
                    raise ValueError(
                        "strategy is not nominally winning: nominal cycle never "
                        "reaches the awaited set: " + " -> ".join(cycle)
                    )
                if color[p] == 0:
                    color[p] = 1
                    path.append(p)
                    stack.append((p, iter(stalled[p])))
                    moved = True
                    break
            if not moved:
                stack.pop()
                path.pop()
                color[node] = 2


# --------------------------------------------------------------------------
# Verification and synthesis
# --------------------------------------------------------------------------


def _inflated_sets(a: MetricAutomaton, sets, radius) -> tuple:
    return tuple(
        tuple(q for q in a.states if a.distance_to_set(q, f) <= radius) for f in sets
    )


def verify_genbuchi_sigma(a: MetricAutomaton, strategy: IndexedStrategy) -> GenBuchiReport:
    """Exact robustness of a nominally winning indexed strategy.

    Builds the strategy's counter product, rejects it unless every nominal
    play keeps discharging the awaited sets, then takes one reachability
    fixpoint per set (targets: configurations whose state lies in the set)
    and divides the worst initial value by the closed loop's disturbance
    bound.
    """
    if not isinstance(a.acceptance, GeneralizedBuchi):
        raise TypeError("verify_genbuchi_sigma needs a generalized Büchi acceptance")
    sets = a.acceptance.sets
    if strategy.n != len(sets):
        raise ValueError(
            f"strategy tracks {strategy.n} sets, acceptance has {len(sets)}"
        )
    product, nodes, nominal_graph, cname = _strategy_product(a, strategy, sets)
    _check_product_winning(nominal_graph)

    values = {}
    iterations = 0
    column_values = []
    for k, terminal in enumerate(sets):
        column = fixpoint_opt(product, terminal)
        iterations = max(iterations, column.iterations)
        for name, v in column.values.items():
            values[(name, k)] = v
        column_values.append(column.at(product.initial))
    matrix = OptMatrix(values=values, iterations=iterations, n=len(sets))

    worst = max(column_values)
    if worst is INF:
        raise ValueError("initial state has no guaranteed approach to some target set")
    gamma_bar = product.gamma_bar()
    sigma = Fraction(0) if gamma_bar == 0 else worst / gamma_bar
    return GenBuchiReport(
        sigma=sigma,
        sigma_times_gamma=worst,
        column_values=tuple(column_values),
        inflated_sets=_inflated_sets(a, sets, worst),
        strategy=strategy,
        opt_matrix=matrix,
        gamma_bar=gamma_bar,
        exact_win=worst == 0,
    )


def synthesize_genbuchi(a: MetricAutomaton) -> GenBuchiReport:
    """Optimally robust indexed strategy for a generalized Büchi objective.

    Requires every state to nominally reach every target set.  Column k's
    choices follow the reachability recovery rule on the column-k fixpoint;
    states inside F_k instead take the single first-declared input whose
    nominal successor has the least column value, so the play deliberately
    continues (with n = 1 this reproduces the plain Büchi synthesis
    exactly).  The index advances on entering the awaited set.
    """
    if not isinstance(a.acceptance, GeneralizedBuchi):
        raise TypeError("synthesize_genbuchi needs a generalized Büchi acceptance")
    sets = a.acceptance.sets
    coreach = check_coreachability(a)
    if not coreach.ok:
        details = "; ".join(f"{q}: {why}" for q, why in coreach.witnesses)
        raise ValueError(f"nominal connectedness fails: {details}")

    matrix = genbuchi_fixpoint(a, sets)
    choices = {}
    for k, terminal in enumerate(sets):
        members = set(terminal)
        column = OptVector(values=matrix.column(k), iterations=matrix.iterations)
        for q in a.states:
            if q in members:
                enabled = a.enabled_inputs(q)
                if not enabled:
                    continue
                best = min(column.at(a.nominal_successor(q, s)) for s in enabled)
                pick = next(
                    s for s in enabled if column.at(a.nominal_successor(q, s)) == best
                )
                choices[(q, k)] = (pick,)
                continue
            picked = _recovery_choices(a, column, q)
            if picked is not None:
                choices[(q, k)] = picked
    strategy = IndexedStrategy(len(sets), choices)

    column_values = tuple(matrix.at(a.initial, k) for k in range(len(sets)))
    worst = max(column_values)
    if worst is INF:
        raise ValueError("initial state has no guaranteed approach to some target set")
    gamma_bar = a.gamma_bar()
    sigma = Fraction(0) if gamma_bar == 0 else worst / gamma_bar
    return GenBuchiReport(
        sigma=sigma,
        sigma_times_gamma=worst,
        column_values=column_values,
        inflated_sets=_inflated_sets(a, sets, worst),
        strategy=strategy,
        opt_matrix=matrix,
        gamma_bar=gamma_bar,
        exact_win=worst == 0,
    )
