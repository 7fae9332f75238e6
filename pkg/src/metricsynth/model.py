"""Core model: finite automata over metric state spaces with bounded disturbances.

A metric automaton couples a finite transition system with a distance
function on its states.  Each transition has a *nominal* target plus a set of
*disturbed* targets the environment may force instead; every disturbed
target lies within distance ``gamma(nominal target)`` of the nominal one.
When a transition does not list its disturbed targets explicitly, the
default *ball semantics* applies: the disturbed set is the closed metric
ball of radius ``gamma`` around the nominal target.

Conventions used throughout the toolkit:

* State and input declaration order is significant: it drives every
  tie-break and makes all analyses deterministic.
* ``gamma_bar`` is the maximum disturbance radius over all states.
* Validation problems are returned as data (lists of :class:`Violation`),
  never raised, so callers can render them; only client programming errors
  (e.g. restricting by a strategy that is undefined at a reachable state)
  raise.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

from .rationals import INF, Infinity, Scalar, format_scalar, is_finite

# --------------------------------------------------------------------------
# Acceptance conditions
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Reachability:
    """Win by reaching a terminal state."""

    terminal: tuple[str, ...]

    kind = "reachability"

    def __init__(self, terminal):
        object.__setattr__(self, "terminal", tuple(terminal))


@dataclass(frozen=True)
class Buchi:
    """Win by visiting the terminal set infinitely often."""

    terminal: tuple[str, ...]

    kind = "buchi"

    def __init__(self, terminal):
        object.__setattr__(self, "terminal", tuple(terminal))


@dataclass(frozen=True)
class GeneralizedBuchi:
    """Win by visiting every one of the sets infinitely often."""

    sets: tuple[tuple[str, ...], ...]

    kind = "generalized-buchi"

    def __init__(self, sets):
        object.__setattr__(self, "sets", tuple(tuple(s) for s in sets))

    @property
    def n(self) -> int:
        return len(self.sets)


@dataclass(frozen=True)
class Parity:
    """Win when the least priority seen infinitely often is even.

    ``sets[i]`` is the set of states with priority ``i`` (0-based, lower is
    stronger, even is good).  The list must have odd length ``2n+1`` so the
    top priority is even; instances whose natural top priority is odd append
    a trailing empty even set.  The coloring may be partial: states in no
    set have undefined priority.
    """

    sets: tuple[tuple[str, ...], ...]

    kind = "parity"

    def __init__(self, sets):
        object.__setattr__(self, "sets", tuple(tuple(s) for s in sets))

    @property
    def n(self) -> int:
        """Number of odd priorities; the vector analyses use n+1 even ones."""
        return (len(self.sets) - 1) // 2

    def priority_of(self, state: str) -> int | None:
        for i, bucket in enumerate(self.sets):
            if state in bucket:
                return i
        return None


Acceptance = Reachability | Buchi | GeneralizedBuchi | Parity


# --------------------------------------------------------------------------
# Metric and disturbance bound
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=True)
class Metric:
    """Distance specification.

    ``explicit`` carries a full symmetric matrix over state names;
    ``hamming`` and ``manhattan`` compute distances from per-state integer
    coordinate vectors stored on the automaton.
    """

    kind: str  # "explicit" | "hamming" | "manhattan"
    matrix: dict | None = None  # (p, q) -> Fraction, both orders present

    @staticmethod
    def explicit(entries: dict) -> "Metric":
        table = {}
        for (p, q), value in entries.items():
            if not isinstance(value, Infinity):
                value = Fraction(value)
            table[(p, q)] = value
            table.setdefault((q, p), value)
        return Metric("explicit", table)

    @staticmethod
    def hamming() -> "Metric":
        return Metric("hamming", None)

    @staticmethod
    def manhattan() -> "Metric":
        return Metric("manhattan", None)


@dataclass(frozen=True)
class ConstantBound:
    """The same disturbance radius at every state."""

    value: Fraction

    kind = "constant"

    def __init__(self, value):
        object.__setattr__(self, "value", Fraction(value))

    def at(self, state: str) -> Fraction:
        return self.value


@dataclass(frozen=True)
class PerStateBound:
    """A disturbance radius per state (radius of the ball around a nominal
    target is the bound at that target state)."""

    values: dict

    kind = "per-state"

    def __init__(self, values):
        object.__setattr__(self, "values", {q: Fraction(v) for q, v in values.items()})

    def at(self, state: str) -> Fraction:
        return self.values[state]


DisturbanceBound = ConstantBound | PerStateBound


# --------------------------------------------------------------------------
# Transitions, strategies
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Transition:
    """One labelled transition.  ``disturbed`` of ``None`` means ball
    semantics; an explicit tuple must contain the nominal target."""

    source: str
    input: str
    nominal: str
    disturbed: tuple[str, ...] | None = None

    def __init__(self, source, input, nominal, disturbed=None):
        object.__setattr__(self, "source", source)
        object.__setattr__(self, "input", input)
        object.__setattr__(self, "nominal", nominal)
        object.__setattr__(
            self, "disturbed", None if disturbed is None else tuple(disturbed)
        )


@dataclass
class MemorylessStrategy:
    """Maps a state to the set of inputs the controller is willing to play
    (declaration-ordered).  Deterministic means exactly one input per state."""

    choices: dict

    kind = "memoryless"

    def __init__(self, choices):
        self.choices = {q: tuple(inputs) for q, inputs in choices.items()}

    def inputs_at(self, state: str) -> tuple[str, ...]:
        return self.choices.get(state, ())

    @property
    def is_deterministic(self) -> bool:
        return all(len(v) == 1 for v in self.choices.values())


@dataclass
class IndexedStrategy:
    """Strategy with a cyclic counter memory (generalized Büchi only):
    the choice may depend on which acceptance set is currently awaited."""

    n: int
    choices: dict  # (state, index) -> tuple of inputs

    kind = "indexed"

    def __init__(self, n, choices):
        self.n = n
        self.choices = {key: tuple(inputs) for key, inputs in choices.items()}

    def inputs_at(self, state: str, index: int) -> tuple[str, ...]:
        return self.choices.get((state, index), ())

    @property
    def is_deterministic(self) -> bool:
        return all(len(v) == 1 for v in self.choices.values())


Strategy = MemorylessStrategy | IndexedStrategy


# --------------------------------------------------------------------------
# The automaton
# --------------------------------------------------------------------------


@dataclass
class MetricAutomaton:
    states: tuple[str, ...]
    initial: str
    inputs: tuple[str, ...]
    transitions: dict  # (state, input) -> Transition
    gamma: DisturbanceBound
    metric: Metric
    acceptance: Acceptance
    coords: dict | None = None  # state -> tuple of ints (hamming/manhattan)

    def __init__(
        self, states, initial, inputs, transitions, gamma, metric, acceptance, coords=None
    ):
        self.states = tuple(states)
        self.initial = initial
        self.inputs = tuple(inputs)
        if isinstance(transitions, dict):
            self.transitions = dict(transitions)
        else:
            self.transitions = {(t.source, t.input): t for t in transitions}
        self.gamma = gamma
        self.metric = metric
        self.acceptance = acceptance
        self.coords = None if coords is None else {q: tuple(c) for q, c in coords.items()}
        self._order = {q: i for i, q in enumerate(self.states)}
        self._succ_cache = {}

    # -- distances ----------------------------------------------------------

    def distance(self, p: str, q: str) -> Fraction:
        if p == q:
            return Fraction(0)
        if self.metric.kind == "explicit":
            try:
                return self.metric.matrix[(p, q)]
            except KeyError:
                raise KeyError(f"metric has no entry for ({p}, {q})") from None
        cp, cq = self.coords[p], self.coords[q]
        if self.metric.kind == "hamming":
            return Fraction(sum(1 for x, y in zip(cp, cq) if x != y))
        if self.metric.kind == "manhattan":
            return Fraction(sum(abs(x - y) for x, y in zip(cp, cq)))
        raise ValueError(f"unknown metric kind {self.metric.kind!r}")

    def distance_to_set(self, state: str, targets) -> Scalar:
        """Least distance from ``state`` to any state in ``targets``
        (infinity for an empty target set)."""
        best: Scalar = INF
        for t in targets:
            d = self.distance(state, t)
            if d < best:
                best = d
        return best

    # -- disturbance radii --------------------------------------------------

    def gamma_at(self, state: str) -> Fraction:
        return self.gamma.at(state)

    def gamma_bar(self) -> Fraction:
        return max(self.gamma.at(q) for q in self.states)

    # -- transition structure ----------------------------------------------

    def enabled_inputs(self, state: str) -> tuple[str, ...]:
        return tuple(a for a in self.inputs if (state, a) in self.transitions)

    def nominal_successor(self, state: str, input: str) -> str:
        return self.transitions[(state, input)].nominal

    def disturbed_successors(self, state: str, input: str) -> tuple[str, ...]:
        """All targets the environment may force for this transition, in
        state declaration order.  This is the explicit set when given, and
        the closed gamma-ball around the nominal target otherwise."""
        key = (state, input)
        cached = self._succ_cache.get(key)
        if cached is not None:
            return cached
        t = self.transitions[key]
        if t.disturbed is not None:
            result = tuple(sorted(t.disturbed, key=self._order.__getitem__))
        else:
            nominal = t.nominal
            radius = self.gamma_at(nominal)
            result = tuple(q for q in self.states if self.distance(q, nominal) <= radius)
        self._succ_cache[key] = result
        return result

    # -- convenience --------------------------------------------------------

    def terminal_set(self) -> tuple[str, ...]:
        """The target set used by plain reach/Büchi analyses."""
        if isinstance(self.acceptance, (Reachability, Buchi)):
            return self.acceptance.terminal
        raise TypeError(
            f"acceptance {self.acceptance.kind} has no single terminal set"
        )

    def with_acceptance(self, acceptance: Acceptance) -> "MetricAutomaton":
        return MetricAutomaton(
            self.states,
            self.initial,
            self.inputs,
            self.transitions,
            self.gamma,
            self.metric,
            acceptance,
            self.coords,
        )


# --------------------------------------------------------------------------
# Module-level operations
# --------------------------------------------------------------------------


def post(a: MetricAutomaton, state: str, word) -> set:
    """States reachable from ``state`` under disturbances.

    ``word`` is a single input symbol or a sequence of them; the empty word
    yields ``{state}``.
    """
    if isinstance(word, str):
        word = [word]
    frontier = {state}
    for symbol in word:
        nxt = set()
        for q in frontier:
            if (q, symbol) not in a.transitions:
                raise KeyError(f"input {symbol!r} is not enabled at state {q!r}")
            nxt.update(a.disturbed_successors(q, symbol))
        frontier = nxt
    return frontier


def reachable_states(a: MetricAutomaton, strategy: MemorylessStrategy | None = None) -> set:
    """States reachable from the initial state via disturbed transitions,
    optionally restricted to a memoryless strategy's chosen inputs.

    Raises ``ValueError`` if the strategy leaves a reachable non-dead-end
    state without any chosen enabled input.
    """
    seen = {a.initial}
    queue = deque([a.initial])
    while queue:
        q = queue.popleft()
        enabled = a.enabled_inputs(q)
        if strategy is None:
            chosen = enabled
        else:
            chosen = tuple(x for x in strategy.inputs_at(q) if x in enabled)
            if enabled and not chosen:
                raise ValueError(
                    f"strategy is undefined (or chooses nothing enabled) at reachable state {q!r}"
                )
        for x in chosen:
            for succ in a.disturbed_successors(q, x):
                if succ not in seen:
                    seen.add(succ)
                    queue.append(succ)
    return seen


def restrict_by_strategy(a: MetricAutomaton, strategy: MemorylessStrategy) -> MetricAutomaton:
    """The sub-automaton the closed loop can visit: states reachable under
    disturbances when the controller plays only its chosen inputs, with all
    unchosen transitions dropped and acceptance sets intersected."""
    keep = reachable_states(a, strategy)
    states = tuple(q for q in a.states if q in keep)
    transitions = {
        (q, x): a.transitions[(q, x)]
        for q in states
        for x in strategy.inputs_at(q)
        if (q, x) in a.transitions
    }
    acceptance = _intersect_acceptance(a.acceptance, keep)
    return MetricAutomaton(
        states, a.initial, a.inputs, transitions, a.gamma, a.metric, acceptance, a.coords
    )


def _intersect_acceptance(acceptance: Acceptance, keep: set) -> Acceptance:
    if isinstance(acceptance, Reachability):
        return Reachability(tuple(q for q in acceptance.terminal if q in keep))
    if isinstance(acceptance, Buchi):
        return Buchi(tuple(q for q in acceptance.terminal if q in keep))
    if isinstance(acceptance, GeneralizedBuchi):
        return GeneralizedBuchi(
            tuple(tuple(q for q in f if q in keep) for f in acceptance.sets)
        )
    if isinstance(acceptance, Parity):
        return Parity(tuple(tuple(q for q in f if q in keep) for f in acceptance.sets))
    raise TypeError(f"unknown acceptance {acceptance!r}")


# --------------------------------------------------------------------------
# Validation
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    """One validation finding; ``location`` names the offending field."""

    location: str
    message: str

    def __str__(self):
        return f"{self.location}: {self.message}"


def validate_automaton(a: MetricAutomaton) -> list:
    """Check every model invariant and return the violations as data.

    An empty list means the automaton is well-formed: the metric satisfies
    the metric axioms, disturbance radii are non-negative, explicit
    disturbed sets contain their nominal target and respect the gamma
    bound, every state is reachable from the initial state via disturbed
    transitions, and the acceptance condition is well-formed.
    """
    out: list[Violation] = []
    states = a.states
    state_set = set(states)

    if len(state_set) != len(states):
        out.append(Violation("states", "duplicate state names"))
    if not states:
        out.append(Violation("states", "state list is empty"))
        return out
    if a.initial not in state_set:
        out.append(Violation("initial", f"initial state {a.initial!r} is not declared"))
        return out
    if len(set(a.inputs)) != len(a.inputs):
        out.append(Violation("inputs", "duplicate input symbols"))
    if not a.inputs:
        out.append(Violation("inputs", "input list is empty"))

    out.extend(_validate_metric(a))
    out.extend(_validate_gamma(a))
    out.extend(_validate_transitions(a))
    out.extend(_validate_acceptance(a))

    # Reachability invariant (via disturbed transitions).  Only meaningful
    # once the structural pieces above parse; unreachable states are data,
    # not an exception.
    if not out:
        seen = reachable_states(a)
        missing = [q for q in states if q not in seen]
        if missing:
            out.append(
                Violation(
                    "states",
                    "not reachable from the initial state via disturbed transitions: "
                    + ", ".join(missing),
                )
            )
    return out


def _validate_metric(a: MetricAutomaton) -> list:
    out = []
    if a.metric.kind in ("hamming", "manhattan"):
        if a.coords is None:
            out.append(Violation("metric", f"{a.metric.kind} metric requires state coordinates"))
            return out
        lengths = set()
        for q in a.states:
            if q not in a.coords:
                out.append(Violation("metric", f"state {q!r} has no coordinates"))
            else:
                lengths.add(len(a.coords[q]))
        if len(lengths) > 1:
            out.append(Violation("metric", "state coordinate vectors have differing lengths"))
        if not out:
            seen = {}
            for q in a.states:
                c = a.coords[q]
                if c in seen:
                    out.append(
                        Violation(
                            "metric",
                            f"states {seen[c]!r} and {q!r} share coordinates {c}; "
                            "distinct states must have positive distance",
                        )
                    )
                else:
                    seen[c] = q
        return out
    if a.metric.kind != "explicit":
        out.append(Violation("metric", f"unknown metric kind {a.metric.kind!r}"))
        return out
    matrix = a.metric.matrix or {}
    for i, p in enumerate(a.states):
        for q in a.states[i:]:
            if p == q:
                d = matrix.get((p, q), Fraction(0))
                if d != 0:
                    out.append(Violation("metric", f"d({p},{p}) = {format_scalar(d)} != 0"))
                continue
            if (p, q) not in matrix or (q, p) not in matrix:
                out.append(Violation("metric", f"missing entry for ({p}, {q})"))
                continue
            d, dr = matrix[(p, q)], matrix[(q, p)]
            if d != dr:
                out.append(
                    Violation(
                        "metric",
                        f"asymmetric: d({p},{q})={format_scalar(d)} but d({q},{p})={format_scalar(dr)}",
                    )
                )
            if d <= 0:
                out.append(
                    Violation(
                        "metric",
                        f"d({p},{q}) = {format_scalar(d)} must be positive for distinct states",
                    )
                )
    if not out:
        for i, p in enumerate(a.states):
            for r in a.states[i + 1 :]:
                direct = a.distance(p, r)
                for q in a.states:
                    if q == p or q == r:
                        continue
                    via = a.distance(p, q) + a.distance(q, r)
                    if direct > via:
                        out.append(
                            Violation(
                                "metric",
                                f"triangle inequality fails: d({p},{r})={format_scalar(direct)} "
                                f"> d({p},{q})+d({q},{r})={format_scalar(via)}",
                            )
                        )
    return out


def _validate_gamma(a: MetricAutomaton) -> list:
    out = []
    if isinstance(a.gamma, ConstantBound):
        if a.gamma.value < 0:
            out.append(Violation("gamma", "disturbance bound must be non-negative"))
        return out
    for q in a.states:
        if q not in a.gamma.values:
            out.append(Violation("gamma", f"no disturbance bound for state {q!r}"))
        elif a.gamma.values[q] < 0:
            out.append(Violation("gamma", f"disturbance bound at {q!r} must be non-negative"))
    return out


def _validate_transitions(a: MetricAutomaton) -> list:
    out = []
    state_set = set(a.states)
    input_set = set(a.inputs)
    for (source, symbol), t in a.transitions.items():
        where = f"transition {source!r} --{symbol}-->"
        if source not in state_set:
            out.append(Violation("transitions", f"{where}: unknown source state"))
            continue
        if symbol not in input_set:
            out.append(Violation("transitions", f"{where}: unknown input symbol"))
            continue
        if (t.source, t.input) != (source, symbol):
            out.append(Violation("transitions", f"{where}: table key disagrees with record"))
        if t.nominal not in state_set:
            out.append(Violation("transitions", f"{where}: unknown nominal target {t.nominal!r}"))
            continue
        if t.disturbed is None:
            continue
        if t.nominal not in t.disturbed:
            out.append(
                Violation(
                    "transitions",
                    f"{where}: disturbed set must contain the nominal target {t.nominal!r}",
                )
            )
        for q in t.disturbed:
            if q not in state_set:
                out.append(Violation("transitions", f"{where}: unknown disturbed target {q!r}"))
            else:
                radius = a.gamma_at(t.nominal)
                if a.distance(q, t.nominal) > radius:
                    out.append(
                        Violation(
                            "transitions",
                            f"{where}: disturbed target {q!r} at distance "
                            f"{format_scalar(a.distance(q, t.nominal))} exceeds the bound "
                            f"{format_scalar(radius)} at {t.nominal!r}",
                        )
                    )
    return out


def _validate_acceptance(a: MetricAutomaton) -> list:
    out = []
    state_set = set(a.states)

    def check_members(name, members):
        for q in members:
            if q not in state_set:
                out.append(Violation("acceptance", f"{name} contains unknown state {q!r}"))

    acc = a.acceptance
    if isinstance(acc, (Reachability, Buchi)):
        check_members("terminal set", acc.terminal)
        if not acc.terminal:
            out.append(Violation("acceptance", "terminal set must be non-empty"))
        if len(set(acc.terminal)) != len(acc.terminal):
            out.append(Violation("acceptance", "terminal set has duplicate states"))
    elif isinstance(acc, GeneralizedBuchi):
        if not acc.sets:
            out.append(Violation("acceptance", "generalized Büchi needs at least one set"))
        for k, f in enumerate(acc.sets):
            check_members(f"set {k}", f)
            if not f:
                out.append(Violation("acceptance", f"set {k} must be non-empty"))
    elif isinstance(acc, Parity):
        if len(acc.sets) % 2 == 0:
            out.append(
                Violation(
                    "acceptance",
                    "parity needs an odd number of priority sets (top priority even); "
                    "append a trailing empty even set if the top priority is odd",
                )
            )
        seen = {}
        for i, f in enumerate(acc.sets):
            check_members(f"priority {i}", f)
            for q in f:
                if q in seen:
                    out.append(
                        Violation(
                            "acceptance",
                            f"state {q!r} appears at priorities {seen[q]} and {i}; "
                            "priority sets must be pairwise disjoint",
                        )
                    )
                else:
                    seen[q] = i
    else:
        out.append(Violation("acceptance", f"unknown acceptance {acc!r}"))
    return out


# --------------------------------------------------------------------------
# Coreachability (the connectedness assumptions)
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CoreachabilityReport:
    """Outcome of the nominal-connectedness check; ``witnesses`` lists each
    state in violation together with the target it cannot nominally reach."""

    ok: bool
    witnesses: tuple  # of (state, description)


def _nominal_coreach(a: MetricAutomaton, targets) -> set:
    """States with a nominal path (possibly empty) into ``targets``."""
    target_set = set(targets)
    preds = {q: set() for q in a.states}
    for (source, symbol), t in a.transitions.items():
        preds[t.nominal].add(source)
    seen = set(q for q in a.states if q in target_set)
    queue = deque(seen)
    while queue:
        q = queue.popleft()
        for p in preds[q]:
            if p not in seen:
                seen.add(p)
                queue.append(p)
    return seen


def check_coreachability(a: MetricAutomaton) -> CoreachabilityReport:
    """Check the per-acceptance nominal connectedness assumption.

    * reach / Büchi: every state has a nominal path to the terminal set;
    * generalized Büchi: every state has a nominal path to every set;
    * parity: every state has a nominal path to some even-priority set, and
      every odd-priority state to an even set of strictly lower priority.
    """
    witnesses = []
    acc = a.acceptance
    if isinstance(acc, (Reachability, Buchi)):
        good = _nominal_coreach(a, acc.terminal)
        witnesses.extend(
            (q, "cannot nominally reach the terminal set") for q in a.states if q not in good
        )
    elif isinstance(acc, GeneralizedBuchi):
        for k, f in enumerate(acc.sets):
            good = _nominal_coreach(a, f)
            witnesses.extend(
                (q, f"cannot nominally reach set {k}") for q in a.states if q not in good
            )
    elif isinstance(acc, Parity):
        even_union = [q for i, f in enumerate(acc.sets) if i % 2 == 0 for q in f]
        good_any_even = _nominal_coreach(a, even_union)
        for q in a.states:
            if q not in good_any_even:
                witnesses.append((q, "cannot nominally reach any even-priority set"))
        for i, f in enumerate(acc.sets):
            if i % 2 == 0:
                continue
            lower_even = [q for j in range(0, i, 2) for q in acc.sets[j]]
            good = _nominal_coreach(a, lower_even)
            for q in f:
                if q not in good:
                    witnesses.append(
                        (q, f"odd priority {i}: cannot nominally reach an even set below {i}")
                    )
    else:
        raise TypeError(f"unknown acceptance {acc!r}")
    return CoreachabilityReport(ok=not witnesses, witnesses=tuple(witnesses))
