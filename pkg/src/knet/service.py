"""Consultation server: knowledge bases and sessions over an HTTP/JSON API.

The server loads every ``.knet.json`` file in a directory at startup
(strict parsing; invalid files are reported and skipped) and exposes the
catalog plus in-memory consultation sessions.  State labels, never
indices, appear on the wire.  Requests within one session are serialized
by a per-session lock; idle sessions are evicted after a configurable TTL.
"""

from __future__ import annotations

import sys
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import consultation, kbformat
from .errors import (
    ImpossibleEvidence,
    InvalidState,
    KnetError,
    NotAsserted,
    NotDecisionNetwork,
    NotInstantiable,
    UnknownNode,
)
from .kbformat import FILE_EXTENSION
from .model import ChanceNode, DecisionNode, Network, ValueNode

DEFAULT_PORT = 8628
DEFAULT_SESSION_TTL = 3600.0


class NewSessionBody(BaseModel):
    kb: str


class FindingBody(BaseModel):
    state: str


class WhatIfBody(BaseModel):
    findings: dict[str, str]


@dataclass
class _Entry:
    session: consultation.Session
    kb_name: str
    lock: threading.Lock = field(default_factory=threading.Lock)
    last_access: float = field(default_factory=time.monotonic)


def load_catalog(kb_dir: str | Path) -> tuple[dict[str, Network], list[str]]:
    """Load every KB file in a directory; return catalog and error lines."""
    catalog: dict[str, Network] = {}
    problems: list[str] = []
    for path in sorted(Path(kb_dir).glob(f"*{FILE_EXTENSION}")):
        name = path.name[: -len(FILE_EXTENSION)]
        try:
            catalog[name] = kbformat.parse_file(path, strict=True)
        except KnetError as exc:
            problems.append(f"{path.name}: {exc}")
    return catalog, problems


def create_app(
    kb_dir: str | Path,
    session_ttl: float = DEFAULT_SESSION_TTL,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    catalog, problems = load_catalog(kb_dir)
    for line in problems:
        print(f"skipping invalid KB {line}", file=sys.stderr)

    app = FastAPI(title="knet consultation service", version="1")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    sessions: dict[str, _Entry] = {}
    registry_lock = threading.Lock()

    def error(status: int, code: str, detail: str = "", **extra) -> JSONResponse:
        body = {"error": code}
        if detail:
            body["detail"] = detail
        body.update(extra)
        return JSONResponse(body, status_code=status)

    def acquire(session_id: str) -> _Entry | None:
        now = time.monotonic()
        with registry_lock:
            expired = [
                sid
                for sid, entry in sessions.items()
                if now - entry.last_access > session_ttl
            ]
            for sid in expired:
                del sessions[sid]
            entry = sessions.get(session_id)
            if entry is not None:
                entry.last_access = now
            return entry

    @app.get("/kbs")
    def list_kbs():
        return [
            {
                "name": name,
                "kind": catalog[name].kind.value,
                "node_count": len(catalog[name].nodes),
            }
            for name in sorted(catalog)
        ]

    @app.get("/kbs/{name}")
    def get_kb(name: str, tables: bool = False):
        net = catalog.get(name)
        if net is None:
            return error(404, "unknown_kb", f"no knowledge base {name!r}")
        return _network_doc(net, tables)

    @app.post("/sessions")
    def new_session(body: NewSessionBody):
        net = catalog.get(body.kb)
        if net is None:
            return error(404, "unknown_kb", f"no knowledge base {body.kb!r}")
        session = consultation.new_session(net)
        with registry_lock:
            sessions[session.session_id] = _Entry(session, body.kb)
        return {"session_id": session.session_id}

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        entry = acquire(sid)
        if entry is None:
            return error(404, "unknown_session")
        with entry.lock:
            s = entry.session
            return {
                "kb": entry.kb_name,
                "findings": _findings_doc(s),
                "beliefs": _beliefs_doc(s.network, s.beliefs),
                "history_len": len(s.history),
            }

    @app.put("/sessions/{sid}/findings/{node}")
    def put_finding(sid: str, node: str, body: FindingBody):
        entry = acquire(sid)
        if entry is None:
            return error(404, "unknown_session")
        with entry.lock:
            s = entry.session
            status = _resolve(s.network, node, body.state)
            if isinstance(status, JSONResponse):
                return status
            try:
                s.assert_finding(node, status)
            except ImpossibleEvidence as exc:
                return error(
                    409,
                    "impossible_evidence",
                    str(exc),
                    beliefs=_beliefs_doc(s.network, s.beliefs),
                )
            return {"beliefs": _beliefs_doc(s.network, s.beliefs)}

    @app.delete("/sessions/{sid}/findings/{node}")
    def delete_finding(sid: str, node: str):
        entry = acquire(sid)
        if entry is None:
            return error(404, "unknown_session")
        with entry.lock:
            s = entry.session
            if node not in s.network:
                return error(404, "unknown_node", f"no node {node!r}")
            try:
                s.retract_finding(node)
            except NotAsserted as exc:
                return error(404, "not_asserted", str(exc))
            return {"beliefs": _beliefs_doc(s.network, s.beliefs)}

    @app.get("/sessions/{sid}/beliefs")
    def get_beliefs(sid: str):
        entry = acquire(sid)
        if entry is None:
            return error(404, "unknown_session")
        with entry.lock:
            s = entry.session
            return _beliefs_doc(s.network, s.beliefs)

    @app.get("/sessions/{sid}/recommendation")
    def get_recommendation(sid: str):
        entry = acquire(sid)
        if entry is None:
            return error(404, "unknown_session")
        with entry.lock:
            s = entry.session
            try:
                rec = s.get_recommendation()
            except NotDecisionNetwork as exc:
                return error(409, "not_decision_network", str(exc))
            return _recommendation_doc(s.network, rec)

    @app.post("/sessions/{sid}/whatif")
    def whatif(sid: str, body: WhatIfBody):
        entry = acquire(sid)
        if entry is None:
            return error(404, "unknown_session")
        with entry.lock:
            s = entry.session
            overlay = {}
            for node, label in body.findings.items():
                status = _resolve(s.network, node, label)
                if isinstance(status, JSONResponse):
                    return status
                overlay[node] = status
            try:
                view = s.what_if(overlay)
            except ImpossibleEvidence as exc:
                return error(409, "impossible_evidence", str(exc))
            doc = {"beliefs": _beliefs_doc(s.network, view.beliefs)}
            if view.recommendation is not None:
                doc["recommendation"] = _recommendation_doc(s.network, view.recommendation)
            return doc

    @app.get("/sessions/{sid}/history")
    def get_history(sid: str):
        entry = acquire(sid)
        if entry is None:
            return error(404, "unknown_session")
        with entry.lock:
            return entry.session.export()["events"]

    @app.get("/sessions/{sid}/export")
    def export_session(sid: str):
        entry = acquire(sid)
        if entry is None:
            return error(404, "unknown_session")
        with entry.lock:
            return entry.session.export()

    if ui_dir is not None:
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    @app.exception_handler(KnetError)
    def knet_error_handler(request: Request, exc: KnetError):
        return error(500, "internal_error", str(exc))

    return app


def _resolve(network: Network, node: str, label: str):
    """Map a node/state-label pair to a state index, or an error response."""
    target = network.get(node)
    if target is None:
        return JSONResponse(
            {"error": "unknown_node", "detail": f"no node {node!r}"}, status_code=404
        )
    if isinstance(target, ValueNode):
        return JSONResponse(
            {"error": "not_instantiable", "detail": f"value node {node!r}"},
            status_code=422,
        )
    labels = consultation.node_labels(network, node)
    if label not in labels:
        return JSONResponse(
            {
                "error": "invalid_state",
                "detail": f"{label!r} is not a state of {node!r}",
                "states": list(labels),
            },
            status_code=422,
        )
    return labels.index(label)


def _findings_doc(session: consultation.Session) -> dict[str, str]:
    net = session.network
    return {
        nid: consultation.node_labels(net, nid)[state]
        for nid, state in sorted(session.findings.items())
    }


def _beliefs_doc(network: Network, beliefs: dict[str, tuple[float, ...]]) -> dict:
    doc = {}
    for nid in sorted(beliefs):
        labels = network.node(nid).states
        doc[nid] = {label: p for label, p in zip(labels, beliefs[nid])}
    return doc


def _recommendation_doc(network: Network, rec) -> dict:
    ranking = []
    for ev in rec.ranking:
        config = {
            nid: consultation.node_labels(network, nid)[alt]
            for nid, alt in sorted(ev.configuration.items())
        }
        ranking.append(
            {
                "configuration": config,
                "expected_utility": ev.expected_utility,
                "normalized_score": ev.normalized_score,
                "feasible": ev.feasible,
            }
        )
    return {"best": ranking[0] if ranking else None, "ranking": ranking}


def _network_doc(network: Network, tables: bool) -> dict:
    nodes = []
    for node in network.nodes:
        doc: dict = {"id": node.id, "kind": node.kind.value}
        if isinstance(node, ChanceNode):
            doc["states"] = list(node.states)
        elif isinstance(node, DecisionNode):
            doc["alternatives"] = list(node.alternatives)
        doc["parents"] = list(node.parents)
        d = node.meta.display
        doc["meta"] = {
            "name": node.meta.name or node.id,
            "question": node.meta.question,
            "description": node.meta.description,
            "display": {
                "x": d.x,
                "y": d.y,
                "color": list(d.color),
                "shade": d.shade,
            },
        }
        if tables:
            if isinstance(node, ChanceNode):
                doc["cpt"] = [list(row) for row in node.cpt.rows]
            elif isinstance(node, ValueNode):
                doc["utilities"] = list(node.utilities)
        nodes.append(doc)
    return {
        "name": network.name,
        "kind": network.kind.value,
        "nodes": nodes,
    }
