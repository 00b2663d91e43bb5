"""Textual knowledge-base format: JSON documents with extension ``.knet.json``.

``parse`` and ``serialize`` form an exact round trip: serialization is
canonical (fixed key order, nodes sorted by id, shortest round-trip decimal
for every probability), so equal networks always serialize to identical
bytes.  See FORMAT.md for the schema and the CPT row-ordering convention.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

from . import model
from .errors import SchemaError, ValidationError, VersionError
from .model import (
    ChanceNode,
    Cpt,
    DecisionNode,
    Display,
    Network,
    NetworkKind,
    NodeMeta,
    ValueNode,
)

FORMAT_NAME = "knet-kb"
FORMAT_VERSION = 1
FILE_EXTENSION = ".knet.json"

_TOP_KEYS = ("format", "version", "name", "kind", "nodes")
_NODE_KEYS = {
    "chance": ("id", "kind", "states", "parents", "cpt", "meta"),
    "decision": ("id", "kind", "alternatives", "parents", "meta"),
    "value": ("id", "kind", "parents", "utilities", "meta"),
}
_META_KEYS = ("name", "question", "description", "display")
_DISPLAY_KEYS = ("x", "y", "color", "shade")


def parse(text: str, strict: bool = True) -> Network:
    """Parse a knowledge-base document into a validated Network.

    Raises SchemaError on the first structural problem (with a field path),
    VersionError for unsupported versions, and ValidationError when the
    document is well-formed but the network violates a model invariant.
    In lenient mode unknown top-level and node-level keys are preserved and
    survive re-serialization; strict mode rejects them.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc.msg}", line=exc.lineno) from exc
    if not isinstance(doc, dict):
        raise SchemaError("document must be a JSON object", path="$")

    fmt = _req(doc, "format", str, "$")
    if fmt != FORMAT_NAME:
        raise SchemaError(f"unknown format {fmt!r}, expected {FORMAT_NAME!r}", path="format")
    version = _req(doc, "version", int, "$")
    if version != FORMAT_VERSION:
        raise VersionError(f"unsupported version {version}, expected {FORMAT_VERSION}")
    name = _req(doc, "name", str, "$")
    kind_str = _req(doc, "kind", str, "$")
    if kind_str not in ("belief", "decision"):
        raise SchemaError(f"kind must be 'belief' or 'decision', got {kind_str!r}", path="kind")
    raw_nodes = _req(doc, "nodes", list, "$")

    extra = _collect_extras(doc, _TOP_KEYS, strict, "$")
    nodes = [_parse_node(raw, f"nodes[{i}]", strict) for i, raw in enumerate(raw_nodes)]

    _check_shapes(nodes)

    network = Network(
        name=name,
        kind=NetworkKind(kind_str),
        nodes=tuple(n for n, _ in nodes),
        extra=extra,
    )
    issues = model.validate(network)
    if issues:
        raise ValidationError(issues)
    return network


def parse_file(path: str | Path, strict: bool = True) -> Network:
    return parse(Path(path).read_text(encoding="utf-8"), strict=strict)


def serialize(network: Network) -> str:
    """Render a network in canonical form (UTF-8 text, trailing newline)."""
    doc: dict = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "name": network.name,
        "kind": network.kind.value,
        "nodes": [_node_doc(n) for n in network.nodes],
    }
    for key in sorted(network.extra):
        doc[key] = network.extra[key]
    return json.dumps(doc, ensure_ascii=False, indent=2, allow_nan=False) + "\n"


def serialize_to_file(network: Network, path: str | Path) -> None:
    Path(path).write_text(serialize(network), encoding="utf-8")


def _node_doc(node) -> dict:
    doc: dict = {"id": node.id, "kind": node.kind.value}
    if isinstance(node, ChanceNode):
        doc["states"] = list(node.states)
        doc["parents"] = list(node.parents)
        doc["cpt"] = [[float(p) for p in row] for row in node.cpt.rows]
    elif isinstance(node, DecisionNode):
        doc["alternatives"] = list(node.alternatives)
        doc["parents"] = list(node.parents)
    else:
        doc["parents"] = list(node.parents)
        doc["utilities"] = [float(u) for u in node.utilities]
    d = node.meta.display
    doc["meta"] = {
        "name": node.meta.name,
        "question": node.meta.question,
        "description": node.meta.description,
        "display": {
            "x": float(d.x),
            "y": float(d.y),
            "color": [int(c) for c in d.color],
            "shade": float(d.shade),
        },
    }
    for key in sorted(node.extra):
        doc[key] = node.extra[key]
    return doc


def _parse_node(raw, path: str, strict: bool):
    if not isinstance(raw, dict):
        raise SchemaError("node must be an object", path=path)
    nid = _req(raw, "id", str, path)
    kind = _req(raw, "kind", str, path)
    if kind not in _NODE_KEYS:
        raise SchemaError(f"node kind must be chance/decision/value, got {kind!r}", path=f"{path}.kind")
    extra = _collect_extras(raw, _NODE_KEYS[kind], strict, path)
    meta = _parse_meta(raw.get("meta"), nid, f"{path}.meta", strict)
    parents = tuple(_str_list(_req(raw, "parents", list, path), f"{path}.parents"))

    if kind == "chance":
        states = tuple(_str_list(_req(raw, "states", list, path), f"{path}.states"))
        rows = _req(raw, "cpt", list, path)
        cpt_rows = []
        for r, row in enumerate(rows):
            if not isinstance(row, list):
                raise SchemaError("cpt row must be an array", path=f"{path}.cpt[{r}]")
            cpt_rows.append(tuple(_number(v, f"{path}.cpt[{r}][{j}]") for j, v in enumerate(row)))
        node = ChanceNode(nid, states, parents, Cpt(tuple(cpt_rows)), meta, extra)
    elif kind == "decision":
        alts = tuple(_str_list(_req(raw, "alternatives", list, path), f"{path}.alternatives"))
        node = DecisionNode(nid, alts, parents, meta, extra)
    else:
        utils = _req(raw, "utilities", list, path)
        utilities = tuple(_number(v, f"{path}.utilities[{j}]") for j, v in enumerate(utils))
        node = ValueNode(nid, parents, utilities, meta, extra)
    return node, path


def _parse_meta(raw, node_id: str, path: str, strict: bool) -> NodeMeta:
    if raw is None:
        return NodeMeta(name=node_id)
    if not isinstance(raw, dict):
        raise SchemaError("meta must be an object", path=path)
    if strict:
        for key in raw:
            if key not in _META_KEYS:
                raise SchemaError(f"unknown key {key!r}", path=f"{path}.{key}")
    display = _parse_display(raw.get("display"), f"{path}.display", strict)
    return NodeMeta(
        name=_opt(raw, "name", str, node_id, path),
        question=_opt(raw, "question", str, "", path),
        description=_opt(raw, "description", str, "", path),
        display=display,
    )


def _parse_display(raw, path: str, strict: bool) -> Display:
    if raw is None:
        return Display()
    if not isinstance(raw, dict):
        raise SchemaError("display must be an object", path=path)
    if strict:
        for key in raw:
            if key not in _DISPLAY_KEYS:
                raise SchemaError(f"unknown key {key!r}", path=f"{path}.{key}")
    color_raw = raw.get("color", [0, 0, 0])
    if not isinstance(color_raw, list) or len(color_raw) != 3:
        raise SchemaError("color must be an [r,g,b] array", path=f"{path}.color")
    color = []
    for j, c in enumerate(color_raw):
        if not isinstance(c, int) or isinstance(c, bool):
            raise SchemaError("color components must be integers", path=f"{path}.color[{j}]")
        color.append(c)
    x = _number(raw.get("x", 0.0), f"{path}.x")
    y = _number(raw.get("y", 0.0), f"{path}.y")
    shade = _number(raw.get("shade", 0.0), f"{path}.shade")
    return Display(x=x, y=y, color=tuple(color), shade=shade)


def _check_shapes(nodes) -> None:
    """Pre-validate table shapes while parent cardinalities are resolvable."""
    cards: dict[str, int] = {}
    for node, _ in nodes:
        if isinstance(node, (ChanceNode, DecisionNode)):
            cards.setdefault(node.id, node.cardinality)
    for node, path in nodes:
        if not all(p in cards for p in node.parents):
            continue  # unresolved parents are reported by model.validate
        expected = math.prod(cards[p] for p in node.parents)
        if isinstance(node, ChanceNode):
            if len(node.cpt.rows) != expected:
                raise SchemaError(
                    f"expected {expected} rows, got {len(node.cpt.rows)}", path=f"{path}.cpt"
                )
            for r, row in enumerate(node.cpt.rows):
                if len(row) != len(node.states):
                    raise SchemaError(
                        f"expected {len(node.states)} entries, got {len(row)}",
                        path=f"{path}.cpt[{r}]",
                    )
        elif isinstance(node, ValueNode):
            if len(node.utilities) != expected:
                raise SchemaError(
                    f"expected {expected} utilities, got {len(node.utilities)}",
                    path=f"{path}.utilities",
                )


def _collect_extras(raw: dict, known: tuple[str, ...], strict: bool, path: str) -> dict:
    extras = {}
    for key in raw:
        if key in known:
            continue
        if strict:
            raise SchemaError(f"unknown key {key!r}", path=f"{path}.{key}" if path != "$" else key)
        extras[key] = raw[key]
    return extras


def _req(obj: dict, key: str, typ, path: str):
    if key not in obj:
        raise SchemaError(f"missing required key {key!r}", path=path)
    value = obj[key]
    if typ is int and isinstance(value, bool):
        raise SchemaError(f"{key!r} must be an integer", path=f"{path}.{key}")
    if not isinstance(value, typ):
        raise SchemaError(f"{key!r} must be {typ.__name__}", path=f"{path}.{key}")
    return value


def _opt(obj: dict, key: str, typ, default, path: str):
    if key not in obj:
        return default
    value = obj[key]
    if not isinstance(value, typ):
        raise SchemaError(f"{key!r} must be {typ.__name__}", path=f"{path}.{key}")
    return value


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError("expected a number", path=path)
    return float(value)


def _str_list(values: list, path: str) -> list[str]:
    out = []
    for j, v in enumerate(values):
        if not isinstance(v, str):
            raise SchemaError("expected a string", path=f"{path}[{j}]")
        out.append(v)
    return out
