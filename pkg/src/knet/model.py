"""Domain types for belief and decision networks plus structural validation.

A network is a DAG of typed nodes: chance nodes carry conditional
probability tables, decision nodes carry alternatives, and a value node
carries a utility table.  Everything here is immutable after construction;
``validate`` reports violations as data instead of raising.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from enum import Enum
from itertools import product
from typing import Iterator, Union

from .errors import CyclicGraph, IndexOutOfRange

# Row-sum slack accepted when checking that CPT rows are probability vectors.
ROW_SUM_TOLERANCE = 1e-6
# Tolerance used by inference comparisons and belief normalization checks.
INFERENCE_TOLERANCE = 1e-9


class NodeKind(Enum):
    CHANCE = "chance"
    DECISION = "decision"
    VALUE = "value"


class NetworkKind(Enum):
    BELIEF = "belief"
    DECISION = "decision"


@dataclass(frozen=True)
class Display:
    """Canvas placement and coloring for one node."""

    x: float = 0.0
    y: float = 0.0
    color: tuple[int, int, int] = (0, 0, 0)
    shade: float = 0.0


@dataclass(frozen=True)
class NodeMeta:
    """Presentation metadata: display name, prompt text, free text, canvas info."""

    name: str = ""
    question: str = ""
    description: str = ""
    display: Display = Display()


@dataclass(frozen=True)
class Cpt:
    """Conditional probability table.

    ``rows[i][s]`` is the probability of child state ``s`` given the parent
    configuration with index ``i`` (see :func:`config_index`: the last
    declared parent varies fastest).  A root node has a single row, its
    prior.
    """

    rows: tuple[tuple[float, ...], ...]

    @staticmethod
    def of(rows) -> "Cpt":
        return Cpt(tuple(tuple(float(p) for p in row) for row in rows))


@dataclass(frozen=True)
class ChanceNode:
    id: str
    states: tuple[str, ...]
    parents: tuple[str, ...]
    cpt: Cpt
    meta: NodeMeta = NodeMeta()
    extra: dict = field(default_factory=dict)

    @property
    def kind(self) -> NodeKind:
        return NodeKind.CHANCE

    @property
    def cardinality(self) -> int:
        return len(self.states)


@dataclass(frozen=True)
class DecisionNode:
    id: str
    alternatives: tuple[str, ...]
    parents: tuple[str, ...]
    meta: NodeMeta = NodeMeta()
    extra: dict = field(default_factory=dict)

    @property
    def kind(self) -> NodeKind:
        return NodeKind.DECISION

    @property
    def cardinality(self) -> int:
        return len(self.alternatives)


@dataclass(frozen=True)
class ValueNode:
    id: str
    parents: tuple[str, ...]
    utilities: tuple[float, ...]
    meta: NodeMeta = NodeMeta()
    extra: dict = field(default_factory=dict)

    @property
    def kind(self) -> NodeKind:
        return NodeKind.VALUE


Node = Union[ChanceNode, DecisionNode, ValueNode]


@dataclass(frozen=True)
class Network:
    """A named collection of nodes forming a belief or decision network.

    Nodes are stored sorted by id, so two networks built from the same nodes
    in any insertion order compare equal.  Instances are immutable and safe
    to share across threads once validated.
    """

    name: str
    kind: NetworkKind
    nodes: tuple[Node, ...]
    extra: dict = field(default_factory=dict)
    _by_id: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        ordered = tuple(sorted(self.nodes, key=lambda n: n.id))
        object.__setattr__(self, "nodes", ordered)
        object.__setattr__(self, "_by_id", {n.id: n for n in ordered})

    def node(self, node_id: str) -> Node:
        return self._by_id[node_id]

    def get(self, node_id: str) -> Node | None:
        return self._by_id.get(node_id)

    def __contains__(self, node_id: str) -> bool:
        return node_id in self._by_id

    @property
    def chance_nodes(self) -> tuple[ChanceNode, ...]:
        return tuple(n for n in self.nodes if isinstance(n, ChanceNode))

    @property
    def decision_nodes(self) -> tuple[DecisionNode, ...]:
        return tuple(n for n in self.nodes if isinstance(n, DecisionNode))

    @property
    def value_nodes(self) -> tuple[ValueNode, ...]:
        return tuple(n for n in self.nodes if isinstance(n, ValueNode))

    def children_of(self, node_id: str) -> tuple[str, ...]:
        return tuple(n.id for n in self.nodes if node_id in n.parents)


@dataclass(frozen=True)
class ValidationIssue:
    """One violated invariant: rule name, involved node ids, free-form detail."""

    rule: str
    nodes: tuple[str, ...] = ()
    detail: str = ""
    row: int | None = None

    def __str__(self) -> str:
        parts = [self.rule]
        if self.nodes:
            parts.append("nodes=" + ",".join(self.nodes))
        if self.row is not None:
            parts.append(f"row={self.row}")
        if self.detail:
            parts.append(self.detail)
        return " ".join(parts)


def config_index(cards: tuple[int, ...] | list[int], assignment) -> int:
    """Row index of a parent configuration, last parent varying fastest.

    ``idx = sum(a_k * prod(cards[k+1:]))``; the empty configuration maps
    to 0.
    """
    if len(cards) != len(assignment):
        raise ValueError(
            f"assignment length {len(assignment)} != cardinality count {len(cards)}"
        )
    idx = 0
    for card, a in zip(cards, assignment):
        if not 0 <= a < card:
            raise IndexOutOfRange(f"state index {a} out of range for cardinality {card}")
        idx = idx * card + a
    return idx


def index_to_assignment(cards: tuple[int, ...] | list[int], index: int) -> tuple[int, ...]:
    """Inverse of :func:`config_index`."""
    total = 1
    for c in cards:
        total *= c
    if not 0 <= index < max(total, 1):
        raise IndexOutOfRange(f"configuration index {index} out of range for {cards}")
    out = []
    for card in reversed(cards):
        out.append(index % card)
        index //= card
    return tuple(reversed(out))


def iter_configs(cards: tuple[int, ...] | list[int]) -> Iterator[tuple[int, ...]]:
    """All configurations in config_index order (last coordinate fastest)."""
    return product(*(range(c) for c in cards))


def parent_cards(network: Network, node: Node) -> tuple[int, ...]:
    """Cardinalities of a node's parents, in declared order.

    Only meaningful when every parent resolves to a chance or decision node.
    """
    return tuple(network.node(p).cardinality for p in node.parents)


def validate(network: Network) -> list[ValidationIssue]:
    """Check every structural and numeric invariant; return all violations.

    Never raises: an empty report means the network is valid.
    """
    issues: list[ValidationIssue] = []
    ids = [n.id for n in network.nodes]

    seen: set[str] = set()
    for nid in ids:
        if not nid:
            issues.append(ValidationIssue("EmptyNodeId"))
        elif nid in seen:
            issues.append(ValidationIssue("DuplicateNodeId", (nid,)))
        seen.add(nid)

    known = set(ids)
    for node in network.nodes:
        declared: set[str] = set()
        for p in node.parents:
            if p not in known:
                issues.append(
                    ValidationIssue("UnknownParent", (node.id,), f"parent {p!r} not found")
                )
            elif p in declared:
                issues.append(
                    ValidationIssue("DuplicateParent", (node.id,), f"parent {p!r} repeated")
                )
            declared.add(p)
        if isinstance(node, ValueNode):
            for child in network.children_of(node.id):
                issues.append(
                    ValidationIssue(
                        "ValueNodeChildren", (node.id, child), "value nodes must be terminal"
                    )
                )

    cycle = _find_cycle_nodes(network)
    if cycle:
        issues.append(ValidationIssue("Acyclicity", tuple(sorted(cycle))))

    for node in network.nodes:
        issues.extend(_check_node(network, node, known))

    issues.extend(_check_kind(network))
    return issues


def _check_node(network: Network, node: Node, known: set[str]) -> list[ValidationIssue]:
    issues: list[ValidationIssue] = []
    resolvable = all(
        p in known and not isinstance(network.node(p), ValueNode) for p in node.parents
    ) and len(set(node.parents)) == len(node.parents)

    if isinstance(node, ChanceNode):
        if len(node.states) < 2:
            issues.append(ValidationIssue("MinStates", (node.id,), "need at least 2 states"))
        if len(set(node.states)) != len(node.states):
            issues.append(ValidationIssue("DuplicateState", (node.id,)))
        width = len(node.states)
        for r, row in enumerate(node.cpt.rows):
            if len(row) != width:
                issues.append(
                    ValidationIssue(
                        "CptShape", (node.id,), f"row width {len(row)} != {width}", row=r
                    )
                )
                continue
            if any(not math.isfinite(p) or p < 0.0 or p > 1.0 for p in row):
                issues.append(ValidationIssue("ProbabilityRange", (node.id,), row=r))
            elif abs(sum(row) - 1.0) > ROW_SUM_TOLERANCE:
                issues.append(
                    ValidationIssue(
                        "RowNormalization", (node.id,), f"sum={sum(row)!r}", row=r
                    )
                )
        if resolvable:
            expected = math.prod(parent_cards(network, node))
            if len(node.cpt.rows) != expected:
                issues.append(
                    ValidationIssue(
                        "CptShape",
                        (node.id,),
                        f"{len(node.cpt.rows)} rows, expected {expected}",
                    )
                )
    elif isinstance(node, DecisionNode):
        if len(node.alternatives) < 2:
            issues.append(
                ValidationIssue("MinStates", (node.id,), "need at least 2 alternatives")
            )
        if len(set(node.alternatives)) != len(node.alternatives):
            issues.append(ValidationIssue("DuplicateAlternative", (node.id,)))
    else:
        if not node.parents:
            issues.append(
                ValidationIssue("ValueNodeParents", (node.id,), "need at least 1 parent")
            )
        if any(not math.isfinite(u) for u in node.utilities):
            issues.append(ValidationIssue("UtilityFinite", (node.id,)))
        if resolvable:
            expected = math.prod(parent_cards(network, node))
            if len(node.utilities) != expected:
                issues.append(
                    ValidationIssue(
                        "UtilityShape",
                        (node.id,),
                        f"{len(node.utilities)} entries, expected {expected}",
                    )
                )

    d = node.meta.display
    if not (math.isfinite(d.x) and math.isfinite(d.y)):
        issues.append(ValidationIssue("DisplayRange", (node.id,), "non-finite coordinates"))
    if len(d.color) != 3 or any(not 0 <= c <= 255 for c in d.color):
        issues.append(ValidationIssue("DisplayRange", (node.id,), f"color {d.color!r}"))
    if not 0.0 <= d.shade <= 1.0:
        issues.append(ValidationIssue("DisplayRange", (node.id,), f"shade {d.shade!r}"))
    return issues


def _check_kind(network: Network) -> list[ValidationIssue]:
    issues: list[ValidationIssue] = []
    decisions = network.decision_nodes
    values = network.value_nodes
    if network.kind is NetworkKind.BELIEF:
        for n in decisions + values:
            issues.append(
                ValidationIssue(
                    "NetworkKind", (n.id,), "belief networks contain only chance nodes"
                )
            )
    else:
        if not decisions:
            issues.append(ValidationIssue("DecisionNodesRequired"))
        if not values:
            issues.append(ValidationIssue("MissingValueNode"))
        elif len(values) > 1:
            issues.append(
                ValidationIssue("MultipleValueNodes", tuple(v.id for v in values))
            )
    return issues


def _find_cycle_nodes(network: Network) -> set[str]:
    """Node ids on or upstream of a directed cycle; empty for a DAG."""
    known = {n.id for n in network.nodes}
    indeg = {n.id: sum(1 for p in set(n.parents) if p in known) for n in network.nodes}
    children: dict[str, list[str]] = {n.id: [] for n in network.nodes}
    for n in network.nodes:
        for p in set(n.parents):
            if p in known:
                children[p].append(n.id)
    ready = [nid for nid, d in indeg.items() if d == 0]
    removed = 0
    while ready:
        nid = ready.pop()
        removed += 1
        for c in children[nid]:
            indeg[c] -= 1
            if indeg[c] == 0:
                ready.append(c)
    return {nid for nid, d in indeg.items() if d > 0}


def topological_order(network: Network) -> list[str]:
    """Parent-before-child order; ties broken lexicographically by node id."""
    known = {n.id for n in network.nodes}
    indeg = {n.id: sum(1 for p in set(n.parents) if p in known) for n in network.nodes}
    children: dict[str, list[str]] = {n.id: [] for n in network.nodes}
    for n in network.nodes:
        for p in set(n.parents):
            if p in known:
                children[p].append(n.id)
    heap = [nid for nid, d in indeg.items() if d == 0]
    heapq.heapify(heap)
    out: list[str] = []
    while heap:
        nid = heapq.heappop(heap)
        out.append(nid)
        for c in children[nid]:
            indeg[c] -= 1
            if indeg[c] == 0:
                heapq.heappush(heap, c)
    if len(out) != len(network.nodes):
        cyclic = sorted(nid for nid, d in indeg.items() if d > 0)
        raise CyclicGraph(f"cycle involving {cyclic}")
    return out


def is_polytree(network: Network) -> bool:
    """True iff the undirected skeleton of the chance-node subgraph is acyclic."""
    chance = {n.id for n in network.chance_nodes}
    parent_of = {}

    def find(x: str) -> str:
        while parent_of.get(x, x) != x:
            parent_of[x] = parent_of.get(parent_of[x], parent_of[x])
            x = parent_of[x]
        return x

    for node in network.chance_nodes:
        for p in node.parents:
            if p not in chance:
                continue
            ra, rb = find(p), find(node.id)
            if ra == rb:
                return False
            parent_of[ra] = rb
    return True
