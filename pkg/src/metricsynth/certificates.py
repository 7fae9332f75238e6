"""Control Lyapunov certificates for robustness: rank and decrease checks,
Lipschitz constants, certified disturbance bounds, construction of
certificates from winning strategies, and induction of strategies from
certificates.

A certificate assigns each state a rank: a scalar for reachability/Büchi, a
tuple with one component per acceptance set for generalized Büchi, and a
tuple with one component per even-priority set for parity.  ``f`` and
``eta`` are linear, f(x) = c·x, so the certified bound K·γ̄ inverts exactly
to σ = K/c.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .model import (
    Buchi,
    GeneralizedBuchi,
    MemorylessStrategy,
    MetricAutomaton,
    Parity,
    Reachability,
)
from .parity import _even_sets, _priority_lookup, compute_qbar, even_set_separation
from .rationals import INF, Scalar, is_finite

_SCALAR_OBJECTIVES = ("reach", "buchi")


@dataclass(frozen=True)
class RankCertificate:
    """Per-state ranks plus the linear coefficients: ``f_coeff`` is the c of
    the decrease margin f(x) = c·x; ``eta_coeff`` records the coefficient
    the construction used (None for hand-written certificates)."""

    ranks: dict
    f_coeff: Fraction
    objective: str  # "reach" | "buchi" | "genbuchi" | "parity"
    eta_coeff: Fraction | None = None


@dataclass(frozen=True)
class CertificateCheck:
    ok: bool
    violations: tuple  # (state, message)


@dataclass(frozen=True)
class LipschitzResult:
    """Exact Lipschitz constant of the rank function w.r.t. the metric,
    with a witness pair attaining it (None when K = 0)."""

    K: Scalar
    witness: tuple | None


@dataclass(frozen=True)
class SigmaBound:
    """Certified disturbance bound K/c.  For parity the bound is certified
    only when inflating every even set by value·γ̄ leaves priorities
    unambiguous; other objectives are always certified."""

    value: Scalar
    certified: bool
    separation_witnesses: tuple


# --------------------------------------------------------------------------
# Shape plumbing
# --------------------------------------------------------------------------


_OBJECTIVE_KINDS = {
    "reach": "reachability",
    "buchi": "buchi",
    "genbuchi": "generalized-buchi",
    "parity": "parity",
}


def _rank_width(a: MetricAutomaton, objective: str) -> int | None:
    """None for scalar ranks, else the expected tuple length."""
    expected = _OBJECTIVE_KINDS.get(objective)
    if expected is None:
        raise ValueError(f"unknown certificate objective {objective!r}")
    if a.acceptance.kind != expected:
        raise ValueError(
            f"certificate objective {objective!r} does not match acceptance "
            f"{a.acceptance.kind!r}"
        )
    if objective in _SCALAR_OBJECTIVES:
        return None
    if objective == "genbuchi":
        return len(a.acceptance.sets)
    return (len(a.acceptance.sets) + 1) // 2


def _rank_rows(a: MetricAutomaton, cert: RankCertificate) -> dict:
    """Ranks as state -> tuple of components, validated for coverage,
    shape, and non-negativity."""
    width = _rank_width(a, cert.objective)
    rows = {}
    for q in a.states:
        if q not in cert.ranks:
            raise ValueError(f"certificate has no rank for state {q!r}")
        value = cert.ranks[q]
        if width is None:
            row = (value,)
        else:
            row = tuple(value)
            if len(row) != width:
                raise ValueError(
                    f"rank for {q!r} has {len(row)} components, expected {width}"
                )
        for x in row:
            if is_finite(x) and x < 0:
                raise ValueError(f"rank for {q!r} is negative")
        rows[q] = row
    return rows


def _component_zero_sets(a: MetricAutomaton, objective: str) -> list:
    """The state sets whose membership must coincide with a zero rank
    component, in component order."""
    if objective in _SCALAR_OBJECTIVES:
        return [set(a.terminal_set())]
    if objective == "genbuchi":
        return [set(s) for s in a.acceptance.sets]
    return [set(s) for s in _even_sets(a.acceptance.sets)]


# --------------------------------------------------------------------------
# Rank and decrease checks
# --------------------------------------------------------------------------


def check_rank(a: MetricAutomaton, cert: RankCertificate) -> CertificateCheck:
    """Zero-set condition: each rank component vanishes exactly on its
    acceptance set (and is strictly positive elsewhere, which on a finite
    state set is equivalent to admitting a lower-bounding gauge)."""
    rows = _rank_rows(a, cert)
    zero_sets = _component_zero_sets(a, cert.objective)
    violations = []
    for q in a.states:
        row = rows[q]
        for i, members in enumerate(zero_sets):
            label = f"component {i}" if len(row) > 1 else "rank"
            if q in members and row[i] != 0:
                violations.append((q, f"{label} is {row[i]}, expected 0 inside the set"))
            if q not in members and row[i] == 0:
                violations.append((q, f"{label} is 0 outside the set"))
    return CertificateCheck(ok=not violations, violations=tuple(violations))


def _scalar_decrease_ok(a, rows, c, q, symbol, terminal) -> bool:
    succ = a.nominal_successor(q, symbol)
    return rows[succ][0] + c * a.distance_to_set(q, terminal) <= rows[q][0]


def _parity_obligation_ok(a, rows, c, q, symbol, evens, prefix_end) -> bool:
    """Componentwise decrease on components 0..prefix_end with margin
    c·d(q, F_{2l}); a component whose rank at q is infinite is exempt."""
    succ = a.nominal_successor(q, symbol)
    for l in range(prefix_end + 1):
        here = rows[q][l]
        if not is_finite(here):
            continue
        if rows[succ][l] + c * a.distance_to_set(q, evens[l]) > here:
            return False
    return True


def check_clf(a: MetricAutomaton, cert: RankCertificate) -> CertificateCheck:
    """The decrease condition making a rank function a control Lyapunov
    certificate.

    Reachability/Büchi: at every state outside F some input's nominal
    successor satisfies R(succ) + c·d(q,F) ≤ R(q).  Generalized Büchi: the
    same per component, independently.  Parity: at every colored state of
    priority j ≥ 1 outside the held set, some input and some prefix width
    i with 2i ≤ j satisfy the componentwise decrease on components 0..i
    (infinite components exempt); priority-0 states, uncolored states and
    held states carry no obligation.

    Assumes the zero-set condition (``check_rank``) already holds; this
    function checks only decreases.
    """
    rows = _rank_rows(a, cert)
    c = cert.f_coeff
    violations = []

    if cert.objective in _SCALAR_OBJECTIVES:
        terminal = set(a.terminal_set())
        for q in a.states:
            if q in terminal:
                continue
            enabled = a.enabled_inputs(q)
            if any(_scalar_decrease_ok(a, rows, c, q, s, terminal) for s in enabled):
                continue
            margins = {
                s: f"{rows[a.nominal_successor(q, s)][0]}+{c * a.distance_to_set(q, terminal)}>{rows[q][0]}"
                for s in enabled
            }
            violations.append((q, f"no input decreases the rank: {margins}"))
    elif cert.objective == "genbuchi":
        sets = [set(s) for s in a.acceptance.sets]
        for q in a.states:
            enabled = a.enabled_inputs(q)
            for k, members in enumerate(sets):
                if q in members:
                    continue
                ok = False
                for s in enabled:
                    succ = a.nominal_successor(q, s)
                    if rows[succ][k] + c * a.distance_to_set(q, members) <= rows[q][k]:
                        ok = True
                        break
                if not ok:
                    violations.append(
                        (q, f"no input decreases component {k} toward set {k}")
                    )
    else:  # parity
        sets = a.acceptance.sets
        evens = _even_sets(sets)
        priority = _priority_lookup(sets)
        held = compute_qbar(a, sets)
        for q in a.states:
            j = priority.get(q)
            if j is None or j == 0 or q in held:
                continue
            enabled = a.enabled_inputs(q)
            if any(
                _parity_obligation_ok(a, rows, c, q, s, evens, i)
                for s in enabled
                for i in range(j // 2 + 1)
            ):
                continue
            violations.append(
                (q, f"no input satisfies the prefix decrease at priority {j}")
            )
    return CertificateCheck(ok=not violations, violations=tuple(violations))


# --------------------------------------------------------------------------
# Lipschitz constant and the certified bound
# --------------------------------------------------------------------------


def lipschitz_constant(a: MetricAutomaton, cert: RankCertificate) -> LipschitzResult:
    """Exact max over state pairs (componentwise for vectors) of
    |R(p)−R(q)| / d(p,q).  A pair where one component is finite and the
    other infinite makes K infinite; a pair where both are infinite is
    skipped."""
    rows = _rank_rows(a, cert)
    K: Scalar = Fraction(0)
    witness = None
    states = a.states
    for i, p in enumerate(states):
        for q in states[i + 1:]:
            d = a.distance(p, q)
            for rp, rq in zip(rows[p], rows[q]):
                fp, fq = is_finite(rp), is_finite(rq)
                if not fp and not fq:
                    continue
                if fp != fq:
                    return LipschitzResult(K=INF, witness=(p, q))
                if not is_finite(d):
                    continue
                ratio = abs(rp - rq) / d
                if ratio > K:
                    K = ratio
                    witness = (p, q)
    return LipschitzResult(K=K, witness=witness)


def sigma_bound_from_certificate(a: MetricAutomaton, cert: RankCertificate) -> SigmaBound:
    """The certified disturbance bound σ = K/c (linear f inverts exactly);
    for vector ranks K is the max component Lipschitz constant.  Parity
    bounds additionally evaluate the even-set separation at radius σ·γ̄ and
    are tagged uncertified when it fails.  Requires a constant disturbance
    bound; state-dependent bounds are handled by the fixpoint analyses
    instead."""
    if a.gamma.kind != "constant":
        raise ValueError(
            "certified bounds need a constant disturbance bound; "
            "use the fixpoint verification for state-dependent bounds"
        )
    check = check_clf(a, cert)
    if not check.ok:
        details = "; ".join(f"{q}: {why}" for q, why in check.violations)
        raise ValueError(f"certificate fails the decrease check: {details}")
    lip = lipschitz_constant(a, cert)
    value = lip.K / cert.f_coeff if is_finite(lip.K) else INF
    certified = True
    witnesses = ()
    if cert.objective == "parity":
        radius = value * a.gamma_bar() if is_finite(value) else INF
        witnesses = even_set_separation(a, a.acceptance.sets, radius)
        certified = not witnesses
    return SigmaBound(value=value, certified=certified, separation_witnesses=witnesses)


# --------------------------------------------------------------------------
# Construction from a winning strategy
# --------------------------------------------------------------------------


def _scalar_construct(a: MetricAutomaton, strategy, eta: Fraction) -> dict:
    """R(q) = η(d(q,F)) + max over chosen inputs of R(nominal successor),
    zero on F, by iterative memoized depth-first search; a chosen nominal
    cycle avoiding F means the strategy is not nominally winning."""
    terminal = set(a.terminal_set())
    ranks: dict = {q: Fraction(0) for q in terminal}
    ON_PATH = object()

    for root in a.states:
        if root in ranks:
            continue
        stack = [(root, None)]
        marks = {}
        while stack:
            q, state_iter = stack.pop()
            if q in ranks:
                continue
            if state_iter is None:
                if marks.get(q) is ON_PATH:
                    continue
                marks[q] = ON_PATH
                chosen = strategy.inputs_at(q)
                if not chosen:
                    raise ValueError(
                        f"strategy chooses no input at state {q!r} outside the target set"
                    )
                succs = []
                for s in chosen:
                    if s not in a.enabled_inputs(q):
                        raise ValueError(
                            f"strategy chooses disabled input {s!r} at state {q!r}"
                        )
                    succs.append(a.nominal_successor(q, s))
                state_iter = succs
            pending = None
            for succ in state_iter:
                if succ in ranks:
                    continue
                if marks.get(succ) is ON_PATH:
                    raise ValueError(
                        "strategy is not nominally winning: nominal cycle through "
                        f"{succ!r} avoids the target set"
                    )
                pending = succ
                break
            if pending is not None:
                stack.append((q, state_iter))
                stack.append((pending, None))
                continue
            worst = max(ranks[a.nominal_successor(q, s)] for s in strategy.inputs_at(q))
            ranks[q] = eta * a.distance_to_set(q, terminal) + worst
            marks[q] = True
    return ranks


def _parity_construct(a: MetricAutomaton, strategy, eta: Fraction) -> dict:
    """Partition states by the least even set their strategy trace reaches;
    accumulate η-distance weight vectors along each unique trace (infinite
    below the partition index); held-partition states get the patched
    vector (0 at their own component, plain distances above, ∞ below)."""
    sets = a.acceptance.sets
    evens = _even_sets(sets)
    width = len(evens)

    succ = {}
    for q in a.states:
        chosen = strategy.inputs_at(q)
        if len(chosen) != 1:
            raise ValueError(
                f"parity construction needs a deterministic strategy; state {q!r} "
                f"has {len(chosen)} choices"
            )
        if chosen[0] not in a.enabled_inputs(q):
            raise ValueError(
                f"strategy chooses disabled input {chosen[0]!r} at state {q!r}"
            )
        succ[q] = a.nominal_successor(q, chosen[0])

    member_of = [set(f) for f in evens]

    def least_color(p: str, below: int) -> int:
        for i in range(below):
            if p in member_of[i]:
                return i
        return below

    # piece index: least even set the strategy orbit from q touches
    piece = {}
    for q in a.states:
        best = width
        p = q
        seen = set()
        while p not in seen and best > 0:
            seen.add(p)
            best = least_color(p, best)
            p = succ[p]
        if best >= width:
            raise ValueError(
                f"strategy is not nominally winning: no even-priority set is "
                f"reachable from {q!r} under the strategy"
            )
        piece[q] = best

    # states inside their own piece's set get the patched vector
    ranks = {}
    for q in a.states:
        i = piece[q]
        if q in member_of[i]:
            ranks[q] = tuple(
                INF if j < i else (Fraction(0) if j == i else a.distance_to_set(q, evens[j]))
                for j in range(width)
            )

    # remaining states: componentwise sum of weight vectors along the
    # unique strategy trace up to (excluding) the first state of the
    # piece's set; all states on such a trace share the piece index
    for q in a.states:
        if q in ranks:
            continue
        i = piece[q]
        chain = []
        p = q
        while True:
            chain.append(p)
            nxt = succ[p]
            if nxt in member_of[i]:
                base = tuple(Fraction(0) for _ in range(width))
                break
            if nxt in ranks:
                base = ranks[nxt]
                break
            p = nxt
        vec = base
        for p in reversed(chain):
            weight = eta * a.distance_to_set(p, evens[i])
            vec = tuple(
                INF if j < i else vec[j] + weight for j in range(width)
            )
            ranks[p] = vec
    return ranks


def construct_clf_from_strategy(
    a: MetricAutomaton, strategy: MemorylessStrategy, eta_coeff=1
) -> RankCertificate:
    """A certificate the given nominally winning strategy can be induced
    from, with margins η(x) = eta_coeff·x; the result always passes
    ``check_clf`` with f = η."""
    eta = Fraction(eta_coeff)
    if eta <= 0:
        raise ValueError("eta_coeff must be positive")
    kind = a.acceptance.kind
    if kind in ("reachability", "buchi"):
        ranks = _scalar_construct(a, strategy, eta)
        return RankCertificate(
            ranks=ranks,
            f_coeff=eta,
            objective="reach" if kind == "reachability" else "buchi",
            eta_coeff=eta,
        )
    if kind == "parity":
        ranks = _parity_construct(a, strategy, eta)
        return RankCertificate(
            ranks=ranks, f_coeff=eta, objective="parity", eta_coeff=eta
        )
    raise TypeError(f"certificate construction does not support {kind!r} acceptance")


# --------------------------------------------------------------------------
# Strategy induction
# --------------------------------------------------------------------------


def induce_strategy_from_clf(a: MetricAutomaton, cert: RankCertificate):
    """The strategies the certificate sanctions.

    Reachability: at each state outside F, every input satisfying the
    decrease (F states need no choice).  Büchi: the same, plus every
    enabled input inside F.  Generalized Büchi: inputs satisfying every
    component's decrease simultaneously.  Parity: deterministic — outside
    the held set the sanctioned input with the lexicographically least
    successor rank, first declared inside it.
    """
    check = check_clf(a, cert)
    if not check.ok:
        details = "; ".join(f"{q}: {why}" for q, why in check.violations)
        raise ValueError(f"certificate fails the decrease check: {details}")
    rows = _rank_rows(a, cert)
    c = cert.f_coeff
    choices = {}

    if cert.objective in _SCALAR_OBJECTIVES:
        terminal = set(a.terminal_set())
        for q in a.states:
            if q in terminal:
                if cert.objective == "buchi" and a.enabled_inputs(q):
                    choices[q] = a.enabled_inputs(q)
                continue
            good = tuple(
                s
                for s in a.enabled_inputs(q)
                if _scalar_decrease_ok(a, rows, c, q, s, terminal)
            )
            choices[q] = good
        return MemorylessStrategy(choices)

    if cert.objective == "genbuchi":
        sets = [set(s) for s in a.acceptance.sets]
        for q in a.states:
            good = []
            for s in a.enabled_inputs(q):
                succ = a.nominal_successor(q, s)
                if all(
                    q in members
                    or rows[succ][k] + c * a.distance_to_set(q, list(members))
                    <= rows[q][k]
                    for k, members in enumerate(sets)
                ):
                    good.append(s)
            if not good and a.enabled_inputs(q):
                raise ValueError(
                    f"certificate induces no input at state {q!r} "
                    f"(no input decreases every component)"
                )
            choices[q] = tuple(good)
        return MemorylessStrategy(choices)

    # parity
    sets = a.acceptance.sets
    evens = _even_sets(sets)
    priority = _priority_lookup(sets)
    held = compute_qbar(a, sets)
    width = len(evens)
    for q in a.states:
        enabled = a.enabled_inputs(q)
        if not enabled:
            continue
        if q in held:
            choices[q] = (enabled[0],)
            continue
        j = priority.get(q)
        if j is not None and j > 0:
            prefixes = range(j // 2 + 1)
        elif j == 0:
            prefixes = None  # no obligation: all inputs sanctioned
        else:
            prefixes = range(width)
        if prefixes is None:
            good = list(enabled)
        else:
            good = [
                s
                for s in enabled
                if any(
                    _parity_obligation_ok(a, rows, c, q, s, evens, i)
                    for i in prefixes
                )
            ]
        if not good:
            raise ValueError(
                f"certificate induces no input at state {q!r} "
                f"(no decrease prefix is satisfied)"
            )
        best = None
        pick = None
        for s in good:
            vec = rows[a.nominal_successor(q, s)]
            if best is None or vec < best:
                best = vec
                pick = s
        choices[q] = (pick,)
    return MemorylessStrategy(choices)
