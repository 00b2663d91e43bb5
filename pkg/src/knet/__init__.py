"""Expert-system shell for belief and decision networks.

Library surface: domain model and validation (:mod:`knet.model`), the
knowledge-base format (:mod:`knet.kbformat`), exact inference
(:mod:`knet.inference`), decision evaluation (:mod:`knet.decision`),
consultation sessions (:mod:`knet.consultation`), the HTTP service
(:mod:`knet.service`), and the command line (:mod:`knet.cli`).
"""

from .errors import (
    CyclicGraph,
    ImpossibleEvidence,
    IndexOutOfRange,
    InvalidState,
    KnetError,
    MalformedDecisionNetwork,
    NotAsserted,
    NotDecisionNetwork,
    NotInstantiable,
    NotPolytree,
    SchemaError,
    TooLarge,
    TooManyConfigurations,
    UnknownNode,
    ValidationError,
    VersionError,
)
from .model import (
    ChanceNode,
    Cpt,
    DecisionNode,
    Display,
    Network,
    NetworkKind,
    NodeKind,
    NodeMeta,
    ValidationIssue,
    ValueNode,
    config_index,
    index_to_assignment,
    is_polytree,
    topological_order,
    validate,
)
from .kbformat import parse, parse_file, serialize, serialize_to_file
from .inference import (
    Findings,
    InferenceResult,
    find_loop_cutset,
    infer,
    oracle_joint,
    propagate_polytree,
)
from .decision import (
    DecisionConfiguration,
    EvaluatedDecision,
    Recommendation,
    utility_proxy_transform,
    expected_utility,
    recommend,
)
from .consultation import Session, SessionEvent, import_session, new_session, replay

__version__ = "0.1.0"
