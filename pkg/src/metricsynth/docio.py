"""Document formats and graph export.

Automata, strategies and certificates travel as JSON documents with all
numbers carried as exact-rational strings ("5", "5/2", "2.5", "inf") —
never binary floats.  ``serialize_document`` emits a canonical form (fixed
key order, declaration-order listings, upper-triangle metric rows), so
``serialize(parse(serialize(a)))`` is byte-identical to
``serialize(a)`` and canonical documents round-trip byte-exactly.
"""

from __future__ import annotations

import json
from importlib import resources

from .certificates import RankCertificate
from .model import (
    Buchi,
    ConstantBound,
    GeneralizedBuchi,
    IndexedStrategy,
    MemorylessStrategy,
    Metric,
    MetricAutomaton,
    Parity,
    PerStateBound,
    Reachability,
    Transition,
    validate_automaton,
)
from .rationals import INF, format_scalar, parse_scalar


class DocumentError(ValueError):
    """A document failed to parse; ``errors`` lists (location, message)
    pairs, with JSON line/column positions for syntax errors and field
    paths for schema violations."""

    def __init__(self, errors):
        self.errors = [(str(loc), str(msg)) for loc, msg in errors]
        super().__init__("; ".join(f"{loc}: {msg}" for loc, msg in self.errors))


def _load_json(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(
            [(f"line {exc.lineno}, column {exc.colno}", exc.msg)]
        ) from None


class _Collector:
    def __init__(self):
        self.errors = []

    def add(self, location, message):
        self.errors.append((location, message))

    def raise_if_any(self):
        if self.errors:
            raise DocumentError(self.errors)


def _scalar_field(errs, location, raw, allow_infinite=False):
    try:
        value = parse_scalar(raw)
    except ValueError as exc:
        errs.add(location, str(exc))
        return None
    if value is INF and not allow_infinite:
        errs.add(location, "must be finite")
        return None
    return value


_ACCEPTANCE_KINDS = ("reachability", "buchi", "generalized-buchi", "parity")


def parse_document(text: str) -> MetricAutomaton:
    """Parse an automaton document, collecting every schema error with its
    field path before giving up.

    Structural invariants (explicit disturbed sets containing their
    nominal target and staying inside the disturbance ball, well-formed
    acceptance) are enforced; metric-axiom findings beyond symmetry and
    positivity, and reachability findings, are analysis-level facts
    reported by ``validate_automaton`` and do not block parsing.
    """
    doc = _load_json(text)
    errs = _Collector()
    if not isinstance(doc, dict):
        raise DocumentError([("document", "top level must be an object")])

    known = {"states", "metric", "initial", "inputs", "transitions", "gamma", "acceptance"}
    for key in doc:
        if key not in known:
            errs.add(key, "unknown top-level key")
    for key in ("states", "metric", "initial", "inputs", "transitions", "gamma", "acceptance"):
        if key not in doc:
            errs.add(key, "missing")
    errs.raise_if_any()

    # states -----------------------------------------------------------
    states: list[str] = []
    coords: dict = {}
    raw_states = doc["states"]
    if not isinstance(raw_states, list) or not raw_states:
        errs.add("states", "must be a non-empty list")
        raw_states = []
    for i, entry in enumerate(raw_states):
        where = f"states[{i}]"
        if not isinstance(entry, dict) or not isinstance(entry.get("name"), str):
            errs.add(where, "must be an object with a string 'name'")
            continue
        name = entry["name"]
        if name in coords or name in states:
            errs.add(where, f"duplicate state name {name!r}")
            continue
        states.append(name)
        if "coords" in entry:
            raw = entry["coords"]
            if not isinstance(raw, list) or not all(isinstance(x, int) and not isinstance(x, bool) for x in raw):
                errs.add(f"{where}.coords", "must be a list of integers")
            else:
                coords[name] = tuple(raw)
        extra = set(entry) - {"name", "coords"}
        for key in sorted(extra):
            errs.add(f"{where}.{key}", "unknown key")
    state_set = set(states)

    # inputs -----------------------------------------------------------
    inputs: list[str] = []
    raw_inputs = doc["inputs"]
    if not isinstance(raw_inputs, list) or not raw_inputs:
        errs.add("inputs", "must be a non-empty list")
        raw_inputs = []
    for i, symbol in enumerate(raw_inputs):
        if not isinstance(symbol, str):
            errs.add(f"inputs[{i}]", "must be a string")
        elif symbol in inputs:
            errs.add(f"inputs[{i}]", f"duplicate input symbol {symbol!r}")
        else:
            inputs.append(symbol)

    # initial ----------------------------------------------------------
    initial = doc["initial"]
    if not isinstance(initial, str) or (state_set and initial not in state_set):
        errs.add("initial", f"must name a declared state, got {initial!r}")

    # metric -----------------------------------------------------------
    metric = None
    raw_metric = doc["metric"]
    if not isinstance(raw_metric, dict) or raw_metric.get("kind") not in (
        "explicit",
        "hamming",
        "manhattan",
    ):
        errs.add("metric.kind", "must be one of explicit, hamming, manhattan")
    elif raw_metric["kind"] in ("hamming", "manhattan"):
        if "matrix" in raw_metric:
            errs.add("metric.matrix", f"{raw_metric['kind']} metric takes no matrix")
        missing = [q for q in states if q not in coords]
        if missing:
            errs.add(
                "metric",
                f"{raw_metric['kind']} metric requires coords on every state; "
                "missing: " + ", ".join(missing),
            )
        else:
            metric = Metric.hamming() if raw_metric["kind"] == "hamming" else Metric.manhattan()
    else:
        rows = raw_metric.get("matrix")
        if not isinstance(rows, dict):
            errs.add("metric.matrix", "explicit metric requires a matrix object")
        else:
            entries = {}
            for p, row in rows.items():
                if p not in state_set:
                    errs.add(f"metric.matrix.{p}", "unknown state")
                    continue
                if not isinstance(row, dict):
                    errs.add(f"metric.matrix.{p}", "must be an object")
                    continue
                for q, raw in row.items():
                    where = f"metric.matrix.{p}.{q}"
                    if q not in state_set:
                        errs.add(where, "unknown state")
                        continue
                    if q == p:
                        errs.add(where, "self-distances are fixed at 0")
                        continue
                    value = _scalar_field(errs, where, raw, allow_infinite=True)
                    if value is None:
                        continue
                    if value == 0:
                        errs.add(where, "distinct states need positive distance")
                        continue
                    prior = entries.get((p, q))
                    if prior is not None and prior != value:
                        errs.add(where, "conflicts with the entry for the reversed pair")
                        continue
                    entries[(p, q)] = value
                    entries[(q, p)] = value
            for i, p in enumerate(states):
                for q in states[i + 1 :]:
                    if (p, q) not in entries:
                        errs.add("metric.matrix", f"missing entry for ({p}, {q})")
            if not errs.errors:
                metric = Metric.explicit(entries)

    # gamma ------------------------------------------------------------
    gamma = None
    raw_gamma = doc["gamma"]
    if not isinstance(raw_gamma, dict) or set(raw_gamma) not in ({"constant"}, {"per_state"}):
        errs.add("gamma", "must be an object with exactly one of 'constant' or 'per_state'")
    elif "constant" in raw_gamma:
        value = _scalar_field(errs, "gamma.constant", raw_gamma["constant"])
        if value is not None:
            gamma = ConstantBound(value)
    else:
        table = raw_gamma["per_state"]
        if not isinstance(table, dict):
            errs.add("gamma.per_state", "must be an object")
        else:
            values = {}
            for q, raw in table.items():
                if q not in state_set:
                    errs.add(f"gamma.per_state.{q}", "unknown state")
                    continue
                value = _scalar_field(errs, f"gamma.per_state.{q}", raw)
                if value is not None:
                    values[q] = value
            missing = [q for q in states if q not in table]
            if missing:
                errs.add("gamma.per_state", "missing states: " + ", ".join(missing))
            if len(values) == len(states):
                gamma = PerStateBound(values)

    # transitions ------------------------------------------------------
    transitions = []
    seen_keys = set()
    raw_transitions = doc["transitions"]
    if not isinstance(raw_transitions, list):
        errs.add("transitions", "must be a list")
        raw_transitions = []
    for i, entry in enumerate(raw_transitions):
        where = f"transitions[{i}]"
        if not isinstance(entry, dict):
            errs.add(where, "must be an object")
            continue
        extra = set(entry) - {"from", "input", "nominal", "disturbed"}
        for key in sorted(extra):
            errs.add(f"{where}.{key}", "unknown key")
        source = entry.get("from")
        symbol = entry.get("input")
        nominal = entry.get("nominal")
        ok = True
        if source not in state_set:
            errs.add(f"{where}.from", f"unknown state {source!r}")
            ok = False
        if symbol not in set(inputs):
            errs.add(f"{where}.input", f"unknown input {symbol!r}")
            ok = False
        if nominal not in state_set:
            errs.add(f"{where}.nominal", f"unknown state {nominal!r}")
            ok = False
        disturbed = None
        if "disturbed" in entry:
            raw = entry["disturbed"]
            if not isinstance(raw, list):
                errs.add(f"{where}.disturbed", "must be a list of states")
                ok = False
            else:
                bad = [q for q in raw if q not in state_set]
                if bad:
                    errs.add(f"{where}.disturbed", f"unknown states {bad}")
                    ok = False
                else:
                    disturbed = tuple(dict.fromkeys(raw))
        if not ok:
            continue
        if (source, symbol) in seen_keys:
            errs.add(where, f"duplicate transition for ({source!r}, {symbol!r})")
            continue
        seen_keys.add((source, symbol))
        transitions.append(Transition(source, symbol, nominal, disturbed))

    # acceptance -------------------------------------------------------
    acceptance = None
    raw_acc = doc["acceptance"]
    if (
        not isinstance(raw_acc, dict)
        or raw_acc.get("kind") not in _ACCEPTANCE_KINDS
        or set(raw_acc) != {"kind", "sets"}
    ):
        errs.add("acceptance", "must be {kind: reachability|buchi|generalized-buchi|parity, sets: [...]}")
    else:
        raw_sets = raw_acc["sets"]
        sets = []
        if not isinstance(raw_sets, list) or not raw_sets:
            errs.add("acceptance.sets", "must be a non-empty list of state lists")
        else:
            for i, members in enumerate(raw_sets):
                where = f"acceptance.sets[{i}]"
                if not isinstance(members, list):
                    errs.add(where, "must be a list of states")
                    continue
                bad = [q for q in members if q not in state_set]
                if bad:
                    errs.add(where, f"unknown states {bad}")
                    continue
                sets.append(tuple(dict.fromkeys(members)))
        if len(sets) == len(raw_sets or ()):
            kind = raw_acc["kind"]
            if kind in ("reachability", "buchi") and len(sets) != 1:
                errs.add("acceptance.sets", f"{kind} takes exactly one set")
            elif kind == "parity" and len(sets) % 2 == 0:
                errs.add("acceptance.sets", "parity takes an odd number of sets")
            elif kind == "reachability":
                acceptance = Reachability(sets[0])
            elif kind == "buchi":
                acceptance = Buchi(sets[0])
            elif kind == "generalized-buchi":
                acceptance = GeneralizedBuchi(tuple(sets))
            else:
                acceptance = Parity(tuple(sets))

    errs.raise_if_any()
    automaton = MetricAutomaton(
        states=states,
        initial=initial,
        inputs=inputs,
        transitions=transitions,
        gamma=gamma,
        metric=metric,
        acceptance=acceptance,
        coords=coords or None,
    )
    # Structural invariants are fatal; metric-axiom defects beyond
    # symmetry/positivity and reachability findings are data.
    fatal = [
        v
        for v in validate_automaton(automaton)
        if v.location not in ("metric", "states")
    ]
    if fatal:
        raise DocumentError([(v.location, v.message) for v in fatal])
    return automaton


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def serialize_document(a: MetricAutomaton) -> str:
    """Canonical document text: declaration-order listings, upper-triangle
    metric rows, all scalars as exact-rational strings."""
    states = []
    for q in a.states:
        entry: dict = {"name": q}
        if a.coords is not None and q in a.coords:
            entry["coords"] = list(a.coords[q])
        states.append(entry)

    metric: dict = {"kind": a.metric.kind}
    if a.metric.kind == "explicit":
        rows: dict = {}
        for i, p in enumerate(a.states):
            row = {}
            for q in a.states[i + 1 :]:
                row[q] = format_scalar(a.metric.matrix[(p, q)])
            if row:
                rows[p] = row
        metric["matrix"] = rows

    transitions = []
    for q in a.states:
        for symbol in a.inputs:
            t = a.transitions.get((q, symbol))
            if t is None:
                continue
            entry = {"from": q, "input": symbol, "nominal": t.nominal}
            if t.disturbed is not None:
                entry["disturbed"] = list(t.disturbed)
            transitions.append(entry)

    if isinstance(a.gamma, ConstantBound):
        gamma: dict = {"constant": format_scalar(a.gamma.value)}
    else:
        gamma = {"per_state": {q: format_scalar(a.gamma.values[q]) for q in a.states}}

    if isinstance(a.acceptance, (Reachability, Buchi)):
        sets = [list(a.acceptance.terminal)]
    else:
        sets = [list(f) for f in a.acceptance.sets]

    return _json_text(
        {
            "states": states,
            "metric": metric,
            "initial": a.initial,
            "inputs": list(a.inputs),
            "transitions": transitions,
            "gamma": gamma,
            "acceptance": {"kind": a.acceptance.kind, "sets": sets},
        }
    )


# --------------------------------------------------------------------------
# Strategy documents
# --------------------------------------------------------------------------


def serialize_strategy(strategy) -> str:
    if isinstance(strategy, MemorylessStrategy):
        return _json_text(
            {
                "kind": "memoryless",
                "choices": {q: list(v) for q, v in strategy.choices.items()},
            }
        )
    if isinstance(strategy, IndexedStrategy):
        table: dict = {}
        for (q, index), v in strategy.choices.items():
            table.setdefault(q, {})[str(index)] = list(v)
        return _json_text({"kind": "indexed", "n": strategy.n, "choices": table})
    raise TypeError(f"cannot serialize strategy {strategy!r}")


def parse_strategy(text: str):
    doc = _load_json(text)
    errs = _Collector()
    if not isinstance(doc, dict) or doc.get("kind") not in ("memoryless", "indexed"):
        raise DocumentError([("kind", "must be 'memoryless' or 'indexed'")])
    raw = doc.get("choices")
    if not isinstance(raw, dict):
        raise DocumentError([("choices", "must be an object")])
    if doc["kind"] == "memoryless":
        extra = set(doc) - {"kind", "choices"}
        for key in sorted(extra):
            errs.add(key, "unknown key")
        choices = {}
        for q, v in raw.items():
            if not isinstance(v, list) or not all(isinstance(s, str) for s in v):
                errs.add(f"choices.{q}", "must be a list of input symbols")
            else:
                choices[q] = tuple(v)
        errs.raise_if_any()
        return MemorylessStrategy(choices)
    extra = set(doc) - {"kind", "n", "choices"}
    for key in sorted(extra):
        errs.add(key, "unknown key")
    n = doc.get("n")
    if not isinstance(n, int) or n < 1:
        errs.add("n", "must be a positive integer")
        n = 1
    choices = {}
    for q, row in raw.items():
        if not isinstance(row, dict):
            errs.add(f"choices.{q}", "must map counter values to input lists")
            continue
        for index, v in row.items():
            try:
                k = int(index)
            except ValueError:
                errs.add(f"choices.{q}.{index}", "counter must be an integer")
                continue
            if not 0 <= k < n:
                errs.add(f"choices.{q}.{index}", f"counter out of range 0..{n - 1}")
            elif not isinstance(v, list) or not all(isinstance(s, str) for s in v):
                errs.add(f"choices.{q}.{index}", "must be a list of input symbols")
            else:
                choices[(q, k)] = tuple(v)
    errs.raise_if_any()
    return IndexedStrategy(n, choices)


# --------------------------------------------------------------------------
# Certificate documents
# --------------------------------------------------------------------------

_OBJECTIVES = ("reach", "buchi", "genbuchi", "parity")


def serialize_certificate(cert: RankCertificate) -> str:
    ranks: dict = {}
    for q, value in cert.ranks.items():
        if isinstance(value, tuple):
            ranks[q] = [format_scalar(c) for c in value]
        else:
            ranks[q] = format_scalar(value)
    doc = {"objective": cert.objective, "f_coeff": format_scalar(cert.f_coeff)}
    if cert.eta_coeff is not None:
        doc["eta_coeff"] = format_scalar(cert.eta_coeff)
    doc["ranks"] = ranks
    return _json_text(doc)


def parse_certificate(text: str) -> RankCertificate:
    doc = _load_json(text)
    errs = _Collector()
    if not isinstance(doc, dict):
        raise DocumentError([("document", "top level must be an object")])
    extra = set(doc) - {"objective", "f_coeff", "eta_coeff", "ranks"}
    for key in sorted(extra):
        errs.add(key, "unknown key")
    objective = doc.get("objective")
    if objective not in _OBJECTIVES:
        errs.add("objective", f"must be one of {', '.join(_OBJECTIVES)}")
    f_coeff = _scalar_field(errs, "f_coeff", doc.get("f_coeff", "1"))
    if f_coeff is not None and f_coeff == 0:
        errs.add("f_coeff", "must be positive")
        f_coeff = None
    eta_coeff = None
    if "eta_coeff" in doc:
        eta_coeff = _scalar_field(errs, "eta_coeff", doc["eta_coeff"])
    raw = doc.get("ranks")
    ranks: dict = {}
    if not isinstance(raw, dict) or not raw:
        errs.add("ranks", "must be a non-empty object")
    else:
        for q, value in raw.items():
            where = f"ranks.{q}"
            if isinstance(value, list):
                row = []
                for i, component in enumerate(value):
                    parsed = _scalar_field(errs, f"{where}[{i}]", component, allow_infinite=True)
                    if parsed is not None:
                        row.append(parsed)
                if len(row) == len(value):
                    ranks[q] = tuple(row)
            else:
                parsed = _scalar_field(errs, where, value, allow_infinite=True)
                if parsed is not None:
                    ranks[q] = parsed
    errs.raise_if_any()
    return RankCertificate(
        ranks=ranks, f_coeff=f_coeff, objective=objective, eta_coeff=eta_coeff
    )


# --------------------------------------------------------------------------
# DOT export
# --------------------------------------------------------------------------


def _dot_quote(name: str) -> str:
    return '"' + name.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _value_label(value) -> str:
    if isinstance(value, tuple):
        return "(" + ", ".join(format_scalar(c) for c in value) + ")"
    return format_scalar(value)


def export_dot(a: MetricAutomaton, strategy=None, values=None) -> str:
    """Deterministic Graphviz text: solid arrows for nominal transitions
    (labels merged per source/target pair), dashed unlabeled arrows for
    disturbance-only successors, a point marker into the initial state,
    strategy-chosen arrows doubled in width, and per-state value
    annotations when given."""
    terminal = set()
    if isinstance(a.acceptance, (Reachability, Buchi)):
        terminal = set(a.acceptance.terminal)
    marker = "__start"
    while marker in a.states:
        marker = "_" + marker

    lines = ["digraph automaton {", "  rankdir=LR;", "  node [shape=circle];"]
    lines.append(f"  {_dot_quote(marker)} [shape=point, label=\"\"];")
    for q in a.states:
        attrs = []
        if values is not None and q in values:
            attrs.append(f'label="{q}\\n{_value_label(values[q])}"')
        if q in terminal:
            attrs.append("shape=doublecircle")
        if attrs:
            lines.append(f"  {_dot_quote(q)} [{', '.join(attrs)}];")
    lines.append(f"  {_dot_quote(marker)} -> {_dot_quote(a.initial)};")

    chosen = {}
    if isinstance(strategy, MemorylessStrategy):
        chosen = {q: set(strategy.inputs_at(q)) for q in a.states}

    for q in a.states:
        merged: dict = {}
        for symbol in a.inputs:
            t = a.transitions.get((q, symbol))
            if t is not None:
                merged.setdefault(t.nominal, []).append(symbol)
        nominal_targets = set(merged)
        for target, symbols in merged.items():
            attrs = [f'label="{",".join(symbols)}"']
            if chosen.get(q) and set(symbols) & chosen[q]:
                attrs.append("penwidth=2")
            lines.append(
                f"  {_dot_quote(q)} -> {_dot_quote(target)} [{', '.join(attrs)}];"
            )
        extra = []
        for symbol in a.inputs:
            if (q, symbol) not in a.transitions:
                continue
            for p in a.disturbed_successors(q, symbol):
                if p not in nominal_targets and p not in extra:
                    extra.append(p)
        for p in extra:
            lines.append(f"  {_dot_quote(q)} -> {_dot_quote(p)} [style=dashed];")
    lines.append("}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# Bundled fixtures
# --------------------------------------------------------------------------


def bundled_names() -> tuple[str, ...]:
    """Names of the documents shipped inside the package, sorted."""
    root = resources.files("metricsynth") / "data"
    return tuple(sorted(p.name for p in root.iterdir() if p.name.endswith(".json")))


def load_bundled(name: str) -> str:
    """Raw text of a bundled document (see ``bundled_names``)."""
    return (resources.files("metricsynth") / "data" / name).read_text(encoding="utf-8")
