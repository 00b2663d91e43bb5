"""Stateful consultation sessions over one immutable network.

A session accumulates findings, keeps its belief cache coherent with an
exact inference pass after every change, and records a replayable event
history.  What-if queries overlay hypothetical findings without touching
session state.  Operations on a single session must be externally
serialized; distinct sessions are independent.
"""

from __future__ import annotations

import time
import uuid
from dataclasses import dataclass, field
from enum import Enum

from . import decision, inference
from .errors import (
    ImpossibleEvidence,
    InvalidState,
    NotAsserted,
    NotDecisionNetwork,
    NotInstantiable,
    UnknownNode,
)
from .inference import Findings
from .model import Network, NetworkKind, ValueNode


class EventKind(Enum):
    CREATED = "created"
    ASSERTED = "asserted"
    RETRACTED = "retracted"
    REJECTED = "rejected"


@dataclass(frozen=True)
class SessionEvent:
    seq: int
    kind: EventKind
    node: str | None = None
    state: int | None = None
    timestamp: float = 0.0


@dataclass(frozen=True)
class WhatIfView:
    """Result of a hypothetical query: beliefs plus, on decision networks,
    the recommendation under the merged findings."""

    beliefs: dict[str, tuple[float, ...]]
    p_evidence: float
    recommendation: decision.Recommendation | None


@dataclass
class Session:
    """One consultation: network reference, findings, belief cache, history."""

    network: Network
    session_id: str = field(default_factory=lambda: uuid.uuid4().hex)
    findings: Findings = field(default_factory=dict)
    beliefs: dict[str, tuple[float, ...]] = field(default_factory=dict)
    p_evidence: float = 1.0
    history: list[SessionEvent] = field(default_factory=list)
    _recommendation: decision.Recommendation | None = field(default=None, repr=False)

    def assert_finding(self, node: str, state: int) -> dict[str, tuple[float, ...]]:
        """Record an observation and recompute beliefs.

        Re-asserting a node replaces its previous value.  If the new
        evidence set is impossible, the session is left unchanged apart
        from a Rejected history event, and the error propagates.
        """
        self._check_instantiable(node, state)
        candidate = dict(self.findings)
        candidate[node] = state
        try:
            result = inference.infer(self.network, candidate)
        except ImpossibleEvidence:
            self._append(EventKind.REJECTED, node, state)
            raise
        self.findings = candidate
        self.beliefs = result.beliefs
        self.p_evidence = result.p_evidence
        self._recommendation = None
        self._append(EventKind.ASSERTED, node, state)
        return self.beliefs

    def retract_finding(self, node: str) -> dict[str, tuple[float, ...]]:
        """Withdraw a previously asserted finding and recompute beliefs."""
        if node not in self.findings:
            raise NotAsserted(f"node {node!r} has no asserted finding")
        candidate = dict(self.findings)
        del candidate[node]
        result = inference.infer(self.network, candidate)
        self.findings = candidate
        self.beliefs = result.beliefs
        self.p_evidence = result.p_evidence
        self._recommendation = None
        self._append(EventKind.RETRACTED, node, None)
        return self.beliefs

    def what_if(self, overlay: Findings) -> WhatIfView:
        """Beliefs (and recommendation) under overlaid hypothetical findings.

        The overlay extends or overrides the session findings for this
        query only; session state and history are untouched.
        """
        for node, state in overlay.items():
            self._check_instantiable(node, state)
        merged = dict(self.findings)
        merged.update(overlay)
        result = inference.infer(self.network, merged)
        rec = None
        if self.network.kind is NetworkKind.DECISION:
            rec = decision.recommend(self.network, merged)
        return WhatIfView(result.beliefs, result.p_evidence, rec)

    def get_recommendation(self) -> decision.Recommendation:
        """Ranked decision configurations; cached until findings change."""
        if self.network.kind is not NetworkKind.DECISION:
            raise NotDecisionNetwork(f"{self.network.name!r} is a belief network")
        if self._recommendation is None:
            self._recommendation = decision.recommend(self.network, self.findings)
        return self._recommendation

    def export(self) -> dict:
        """Portable session document: KB name plus the event history.

        States are exported as labels so the document stays readable and
        robust on the wire.
        """
        events = []
        for ev in self.history:
            events.append(
                {
                    "seq": ev.seq,
                    "kind": ev.kind.value,
                    "node": ev.node,
                    "state": self._label(ev.node, ev.state),
                    "timestamp": ev.timestamp,
                }
            )
        return {"kb_name": self.network.name, "events": events}

    def _label(self, node: str | None, state: int | None) -> str | None:
        if node is None or state is None:
            return None
        return node_labels(self.network, node)[state]

    def _check_instantiable(self, node: str, state: int) -> None:
        target = self.network.get(node)
        if target is None:
            raise UnknownNode(f"no node {node!r} in network {self.network.name!r}")
        if isinstance(target, ValueNode):
            raise NotInstantiable(f"value node {node!r} cannot carry a finding")
        if isinstance(state, bool) or not isinstance(state, int):
            raise InvalidState(f"state for {node!r} must be an integer index")
        if not 0 <= state < target.cardinality:
            raise InvalidState(
                f"state {state} out of range for {node!r} (cardinality {target.cardinality})"
            )

    def _append(self, kind: EventKind, node: str | None, state: int | None) -> None:
        self.history.append(
            SessionEvent(len(self.history), kind, node, state, time.time())
        )


def new_session(network: Network) -> Session:
    """Fresh consultation: prior beliefs, empty findings, Created event."""
    result = inference.infer(network, {})
    session = Session(network=network, beliefs=result.beliefs, p_evidence=result.p_evidence)
    session._append(EventKind.CREATED, None, None)
    return session


def replay(network: Network, events: list[SessionEvent]) -> Session:
    """Rebuild a session by re-executing its semantic events."""
    session = new_session(network)
    for ev in events:
        if ev.kind is EventKind.ASSERTED:
            session.assert_finding(ev.node, ev.state)
        elif ev.kind is EventKind.RETRACTED:
            session.retract_finding(ev.node)
        elif ev.kind is EventKind.REJECTED:
            try:
                session.assert_finding(ev.node, ev.state)
            except ImpossibleEvidence:
                pass
    return session


def import_session(network: Network, document: dict) -> Session:
    """Rebuild a session from an exported document (labels resolved back)."""
    if document.get("kb_name") != network.name:
        raise ValueError(
            f"document is for KB {document.get('kb_name')!r}, not {network.name!r}"
        )
    events = []
    for raw in document["events"]:
        kind = EventKind(raw["kind"])
        node = raw.get("node")
        label = raw.get("state")
        state = None
        if node is not None and label is not None:
            state = node_labels(network, node).index(label)
        events.append(SessionEvent(raw["seq"], kind, node, state, raw.get("timestamp", 0.0)))
    return replay(network, events)


def node_labels(network: Network, node_id: str) -> tuple[str, ...]:
    """State or alternative labels of an instantiable node."""
    node = network.node(node_id)
    if isinstance(node, ValueNode):
        raise NotInstantiable(f"value node {node_id!r} has no states")
    return node.states if hasattr(node, "states") else node.alternatives
