"""Exception types shared across the package."""

from __future__ import annotations


class KnetError(Exception):
    """Base class for all errors raised by this package."""


class IndexOutOfRange(KnetError):
    """A state index is outside its node's cardinality."""


class CyclicGraph(KnetError):
    """A directed cycle was found where a DAG is required."""


class NotPolytree(KnetError):
    """The network skeleton is multiply connected."""


class ImpossibleEvidence(KnetError):
    """The requested findings have zero joint probability."""


class TooLarge(KnetError):
    """The computation exceeds a configured size limit."""


class TooManyConfigurations(KnetError):
    """The decision-configuration space exceeds the configured limit."""


class MalformedDecisionNetwork(KnetError):
    """The network is not a well-formed decision network."""


class UnknownNode(KnetError):
    """A referenced node id does not exist in the network."""


class InvalidState(KnetError):
    """A state index or label is not valid for the node."""


class NotInstantiable(KnetError):
    """The node cannot carry a finding (value nodes never can)."""


class NotAsserted(KnetError):
    """Attempted to retract a finding that is not currently asserted."""


class NotDecisionNetwork(KnetError):
    """A decision-only operation was invoked on a belief network."""


class SchemaError(KnetError):
    """A document violates the knowledge-base schema.

    ``path`` locates the offending field (e.g. ``nodes[2].cpt``); ``line``
    is set when the document is not even well-formed JSON.
    """

    def __init__(self, message: str, path: str = "", line: int | None = None):
        self.path = path
        self.line = line
        where = path or (f"line {line}" if line is not None else "")
        super().__init__(f"{message} ({where})" if where else message)


class VersionError(KnetError):
    """The document declares an unsupported format version."""


class ValidationError(KnetError):
    """A parsed network failed model validation.

    Carries the full list of :class:`knet.model.ValidationIssue`.
    """

    def __init__(self, issues):
        self.issues = list(issues)
        summary = "; ".join(str(i) for i in self.issues[:3])
        more = f" (+{len(self.issues) - 3} more)" if len(self.issues) > 3 else ""
        super().__init__(f"invalid network: {summary}{more}")
