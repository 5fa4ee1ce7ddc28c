"""Dependability-annotated architecture models, compiled to stochastic models.

The package turns component models (state machines plus failure patterns,
rates, operations, state configurations) into a continuous-time Markov chain
in PRISM's input language, generates the matching time-bounded reachability
properties, computes transient probabilities, extracts probabilistic
counterexamples, condenses them into fault trees, and renders the surviving
event sequences as UML sequence diagrams.
"""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    AttributeDecl,
    ConfigTag,
    FailureEntry,
    Guard,
    InvalidModel,
    OperationSignature,
    QumComponent,
    QumModel,
    RateEntry,
    State,
    StateConfiguration,
    StateMachine,
    Transition,
    TransitionKind,
    UnknownState,
    Violation,
    assign_ids,
    collect_violations,
    encode,
    module_id_map,
    validate,
)

from .compose import (  # noqa: F401
    ComposedMachine,
    GlobalModel,
    Replay,
    build_global,
    compose,
    config_predicate,
    failure_predicate,
    replay,
)
from .cslgen import CslProperty, emit_csl, generate  # noqa: F401
from .engine import (  # noqa: F401
    Counterexample,
    Ctmc,
    CtmcEdge,
    CxPath,
    StateSpaceLimit,
    StiffModel,
    TargetUnreachable,
    build_ctmc,
    collect_counterexample,
    export_sta,
    export_tra,
    transient_until,
    uniformization_constant,
)
from .faulttree import (  # noqa: F401
    CausalClass,
    FaultTree,
    build_fault_tree,
    causal_filter,
    classify,
    emit_dot,
    emit_text,
    filter_events,
)
from .ingest import (  # noqa: F401
    MissingProfileApplication,
    NativeSyntax,
    UnsupportedXmiVersion,
    load_path,
    parse_native,
    parse_xmi,
)
from .prismgen import translate  # noqa: F401
from .report import (  # noqa: F401
    AnalysisRow,
    render_counterexample,
    render_csv,
    render_figures,
    render_table,
)
from .seqdiag import SequenceDiagram, append_xmi, build_diagram, emit_plantuml  # noqa: F401
from .xmlbase import XmlSyntax  # noqa: F401
