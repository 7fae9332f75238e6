"""Synthesis and verification toolkit for metric automata under bounded
disturbances: optimally robust strategies for reachability, Büchi,
generalized Büchi and parity objectives, control Lyapunov certificates,
and transient-fault tolerance bounds."""

from .rationals import INF, Scalar, format_scalar, is_finite, parse_scalar
from .model import (
    Buchi,
    ConstantBound,
    CoreachabilityReport,
    GeneralizedBuchi,
    IndexedStrategy,
    MemorylessStrategy,
    Metric,
    MetricAutomaton,
    Parity,
    PerStateBound,
    Reachability,
    Transition,
    Violation,
    check_coreachability,
    post,
    reachable_states,
    restrict_by_strategy,
    validate_automaton,
)
from .reach import (
    OptVector,
    RobustnessReport,
    brute_force_opt_oracle,
    fixpoint_opt,
    synthesize_optimal,
    verify_strategy_sigma,
)
from .genbuchi import (
    GenBuchiReport,
    OptMatrix,
    genbuchi_fixpoint,
    rhd_chain_check,
    synthesize_genbuchi,
    verify_genbuchi_sigma,
)
from .parity import (
    ParityFixpoint,
    ParityReport,
    ParityVector,
    QBar,
    compute_qbar,
    parity_fixpoint,
    progress_measure_holds,
    restrict_by_progress,
    synthesize_parity,
    verify_parity_sigma,
)
from .certificates import (
    CertificateCheck,
    LipschitzResult,
    RankCertificate,
    SigmaBound,
    check_clf,
    check_rank,
    construct_clf_from_strategy,
    induce_strategy_from_clf,
    lipschitz_constant,
    sigma_bound_from_certificate,
)
from .faults import (
    FaultBound,
    SimOutcome,
    SimRun,
    compute_fault_bound,
    exhaustive_adversary_search,
    fault_threshold_search,
    simulate_run,
    witness_script,
)
from .docio import (
    DocumentError,
    bundled_names,
    export_dot,
    load_bundled,
    parse_certificate,
    parse_document,
    parse_strategy,
    serialize_certificate,
    serialize_document,
    serialize_strategy,
)
from .library import (
    generate_gray_code,
    generate_leader_election,
    running_example,
    uniform_strategy,
)

__all__ = [name for name in dir() if not name.startswith("_")]

__version__ = "0.1.0"
