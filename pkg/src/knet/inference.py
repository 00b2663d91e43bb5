"""Exact posterior computation over belief networks.

Three routes to the same numbers:

* ``oracle_joint``: brute-force enumeration of the full joint (vectorized),
  used as the independent reference everywhere in the test suite.
* ``propagate_polytree``: single-sweep message passing on singly connected
  networks, returning causal/diagnostic support vectors alongside beliefs.
* ``infer``: the production entry point, dispatching to the polytree sweep
  or to loop-cutset conditioning for multiply connected networks.

Decision networks are accepted by ``oracle_joint`` and ``infer``: free
decision nodes are treated as uniformly random, which is exactly the
convention the decision-evaluation transform relies on (the uniform factors
cancel in every conditional query).  Posteriors are reported for chance
nodes only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import model
from .errors import (
    ImpossibleEvidence,
    InvalidState,
    NotInstantiable,
    NotPolytree,
    TooLarge,
    UnknownNode,
)
from .model import (
    ChanceNode,
    Cpt,
    DecisionNode,
    Network,
    NetworkKind,
    ValueNode,
    config_index,
    index_to_assignment,
    iter_configs,
)

# Findings map instantiable node ids to observed state indices.
Findings = dict[str, int]

# Joint-enumeration cap: 20 binary-equivalent nodes.
DEFAULT_ORACLE_LIMIT = 2**20
# Cap on the number of loop-cutset instantiations evaluated by infer.
DEFAULT_CUTSET_LIMIT = 4096


@dataclass(frozen=True)
class InferenceResult:
    """Posterior distribution per chance node, plus the evidence probability."""

    beliefs: dict[str, tuple[float, ...]]
    p_evidence: float


@dataclass(frozen=True)
class SupportVectors:
    """Per-node causal (pi) and diagnostic (lambda) support, plus all messages.

    ``pi_messages`` is keyed by (parent, child); ``lambda_messages`` by
    (child, parent).  Message vectors are over the receiving end's states
    for lambda and over the sender's states for pi.
    """

    pi: dict[str, tuple[float, ...]]
    lam: dict[str, tuple[float, ...]]
    pi_messages: dict[tuple[str, str], tuple[float, ...]]
    lambda_messages: dict[tuple[str, str], tuple[float, ...]]


@dataclass(frozen=True)
class PropagationResult:
    beliefs: dict[str, tuple[float, ...]]
    support: SupportVectors
    p_evidence: float


def validate_findings(network: Network, findings: Findings) -> None:
    """Raise unless every finding names an instantiable node and legal state."""
    for nid, state in findings.items():
        node = network.get(nid)
        if node is None:
            raise UnknownNode(f"no node {nid!r} in network {network.name!r}")
        if isinstance(node, ValueNode):
            raise NotInstantiable(f"value node {nid!r} cannot carry a finding")
        if isinstance(state, bool) or not isinstance(state, int):
            raise InvalidState(f"state for {nid!r} must be an integer index")
        if not 0 <= state < node.cardinality:
            raise InvalidState(
                f"state {state} out of range for {nid!r} (cardinality {node.cardinality})"
            )


def oracle_joint(
    network: Network, findings: Findings, max_states: int = DEFAULT_ORACLE_LIMIT
) -> InferenceResult:
    """Posteriors by summing the full joint distribution.

    Builds the joint as a dense tensor with one axis per chance/decision
    node (topological order), multiplies in each node's table, slices the
    observed axes, and normalizes the per-node marginals.  Value nodes do
    not enter the joint.
    """
    validate_findings(network, findings)
    order = model.topological_order(network)
    enum_nodes = [network.node(nid) for nid in order if not isinstance(network.node(nid), ValueNode)]
    axis = {node.id: i for i, node in enumerate(enum_nodes)}
    total = math.prod(node.cardinality for node in enum_nodes)
    if total > max_states:
        raise TooLarge(f"joint has {total} configurations, limit {max_states}")

    joint = np.ones((), dtype=np.float64)
    for i, node in enumerate(enum_nodes):
        joint = joint[..., np.newaxis] * _factor(network, node, axis, i)

    for nid, state in findings.items():
        joint = np.take(joint, [state], axis=axis[nid])

    p = float(joint.sum())
    if p == 0.0:
        raise ImpossibleEvidence(f"findings {findings!r} have zero probability")

    beliefs: dict[str, tuple[float, ...]] = {}
    for node in network.chance_nodes:
        a = axis[node.id]
        if node.id in findings:
            beliefs[node.id] = _indicator(node.cardinality, findings[node.id])
            continue
        other = tuple(j for j in range(len(enum_nodes)) if j != a)
        marg = joint.sum(axis=other) if other else joint
        norm = float(marg.sum())
        beliefs[node.id] = tuple(float(v) / norm for v in marg)
    return InferenceResult(beliefs, p)


def _factor(network: Network, node, axis: dict[str, int], i: int) -> np.ndarray:
    """Node's table as a broadcastable tensor over the first i+1 axes."""
    shape = [1] * (i + 1)
    if isinstance(node, DecisionNode):
        shape[i] = node.cardinality
        return np.full(node.cardinality, 1.0 / node.cardinality).reshape(shape)
    pcards = [network.node(p).cardinality for p in node.parents]
    arr = np.asarray(node.cpt.rows, dtype=np.float64).reshape(*pcards, node.cardinality)
    paxes = [axis[p] for p in node.parents]
    perm = sorted(range(len(paxes)), key=lambda k: paxes[k])
    arr = np.transpose(arr, axes=[*perm, len(paxes)])
    for a, k in zip(sorted(paxes), perm):
        shape[a] = pcards[k]
    shape[i] = node.cardinality
    return arr.reshape(shape)


def _indicator(card: int, state: int) -> tuple[float, ...]:
    return tuple(1.0 if s == state else 0.0 for s in range(card))


def propagate_polytree(network: Network, findings: Findings) -> PropagationResult:
    """Single two-phase message-passing sweep over a singly connected network.

    Each directed message crosses its arc exactly once: first inward to a
    root pivot per connected component, then outward.  All messages are kept
    unnormalized, so the pivot's local normalization constant is the
    component's evidence probability; the product over components is
    P(findings).
    """
    result = _propagate(network, findings)
    if result.p_evidence == 0.0:
        raise ImpossibleEvidence(f"findings {findings!r} have zero probability")
    return result


def _propagate(network: Network, findings: Findings) -> PropagationResult:
    """Like propagate_polytree but reports zero evidence instead of raising.

    When p_evidence is 0 the belief and support maps are empty.
    """
    if any(not isinstance(n, ChanceNode) for n in network.nodes):
        raise ValueError("polytree propagation requires a pure belief network")
    validate_findings(network, findings)
    if not model.is_polytree(network):
        raise NotPolytree(f"network {network.name!r} is multiply connected")

    nodes: dict[str, ChanceNode] = {n.id: n for n in network.nodes}
    children: dict[str, list[str]] = {nid: [] for nid in nodes}
    for n in network.nodes:
        for p in n.parents:
            children[p].append(n.id)
    neighbors = {
        nid: list(nodes[nid].parents) + children[nid] for nid in nodes
    }
    evidence = {
        nid: _indicator(nodes[nid].cardinality, findings[nid])
        if nid in findings
        else (1.0,) * nodes[nid].cardinality
        for nid in nodes
    }

    pi_msg: dict[tuple[str, str], tuple[float, ...]] = {}
    lam_msg: dict[tuple[str, str], tuple[float, ...]] = {}

    def incoming_pi(nid: str) -> list[tuple[float, ...]]:
        return [pi_msg[(p, nid)] for p in nodes[nid].parents]

    def pi_value(nid: str) -> tuple[float, ...]:
        node = nodes[nid]
        if not node.parents:
            return node.cpt.rows[0]
        msgs = incoming_pi(nid)
        out = [0.0] * node.cardinality
        for row, assign in zip(node.cpt.rows, iter_configs(model.parent_cards(network, node))):
            w = 1.0
            for m, a in zip(msgs, assign):
                w *= m[a]
            if w == 0.0:
                continue
            for s, p in enumerate(row):
                out[s] += w * p
        return tuple(out)

    def lam_value(nid: str) -> tuple[float, ...]:
        node = nodes[nid]
        out = list(evidence[nid])
        for c in children[nid]:
            m = lam_msg[(c, nid)]
            out = [a * b for a, b in zip(out, m)]
        return tuple(out)

    def send(src: str, dst: str) -> None:
        node = nodes[src]
        if dst in node.parents:
            # Diagnostic message: marginalize the CPT against the other
            # parents' causal messages, weighted by this node's lambda.
            lam = lam_value(src)
            msgs = incoming_pi_except(src, dst)
            pos = node.parents.index(dst)
            out = [0.0] * nodes[dst].cardinality
            cards = model.parent_cards(network, node)
            for row, assign in zip(node.cpt.rows, iter_configs(cards)):
                w = 1.0
                for k, a in enumerate(assign):
                    if k != pos:
                        w *= msgs[k][a]
                if w == 0.0:
                    continue
                t = 0.0
                for s, p in enumerate(row):
                    t += p * lam[s]
                out[assign[pos]] += w * t
            lam_msg[(src, dst)] = tuple(out)
        else:
            # Causal message: belief with the target child's diagnostic
            # contribution excluded by product, never by division.
            pi = pi_value(src)
            out = [e * p for e, p in zip(evidence[src], pi)]
            for c in children[src]:
                if c == dst:
                    continue
                m = lam_msg[(c, src)]
                out = [a * b for a, b in zip(out, m)]
            pi_msg[(src, dst)] = tuple(out)

    def incoming_pi_except(nid: str, skip: str) -> list[tuple[float, ...] | None]:
        return [
            pi_msg[(p, nid)] if p != skip else None for p in nodes[nid].parents
        ]

    p_evidence = 1.0
    visited: set[str] = set()
    component_order: list[list[str]] = []
    tree_parent: dict[str, str | None] = {}
    for seed in sorted(nodes):
        if seed in visited:
            continue
        component = _bfs_component(seed, neighbors)
        roots = [nid for nid in component if not nodes[nid].parents]
        pivot = min(roots)
        order = _bfs_order(pivot, neighbors, tree_parent)
        visited.update(order)
        component_order.append(order)

        for nid in reversed(order[1:]):
            send(nid, tree_parent[nid])
        pivot_post = [
            p * l for p, l in zip(pi_value(pivot), lam_value(pivot))
        ]
        p_comp = math.fsum(pivot_post)
        p_evidence *= p_comp
        if p_comp == 0.0:
            empty = SupportVectors({}, {}, {}, {})
            return PropagationResult({}, empty, 0.0)
        for nid in order:
            for c in neighbors[nid]:
                if tree_parent.get(c) == nid:
                    send(nid, c)

    beliefs: dict[str, tuple[float, ...]] = {}
    pi_all: dict[str, tuple[float, ...]] = {}
    lam_all: dict[str, tuple[float, ...]] = {}
    for order in component_order:
        for nid in order:
            pi = pi_value(nid)
            lam = lam_value(nid)
            pi_all[nid] = pi
            lam_all[nid] = lam
            post = [p * l for p, l in zip(pi, lam)]
            norm = math.fsum(post)
            beliefs[nid] = tuple(v / norm for v in post)
    beliefs = {nid: beliefs[nid] for nid in sorted(beliefs)}
    support = SupportVectors(pi_all, lam_all, dict(pi_msg), dict(lam_msg))
    return PropagationResult(beliefs, support, p_evidence)


def _bfs_component(seed: str, neighbors: dict[str, list[str]]) -> list[str]:
    seen = {seed}
    queue = [seed]
    for nid in queue:
        for nb in neighbors[nid]:
            if nb not in seen:
                seen.add(nb)
                queue.append(nb)
    return queue


def _bfs_order(
    pivot: str, neighbors: dict[str, list[str]], tree_parent: dict[str, str | None]
) -> list[str]:
    tree_parent[pivot] = None
    order = [pivot]
    seen = {pivot}
    for nid in order:
        for nb in neighbors[nid]:
            if nb not in seen:
                seen.add(nb)
                tree_parent[nb] = nid
                order.append(nb)
    return order


def find_loop_cutset(network: Network) -> frozenset[str]:
    """Chance nodes whose instantiation renders the network singly connected.

    Greedy: among nodes with an outgoing arc on some remaining cycle, pick
    the one with maximum undirected degree (ties by id), absorb its outgoing
    arcs, and repeat.  Restricting candidates to arc tails guarantees that
    conditioning on the returned set actually cuts every loop: an
    instantiated node decouples its children, not its parents.
    """
    chance = {n.id for n in network.chance_nodes}
    arcs = [
        (p, n.id) for n in network.chance_nodes for p in n.parents if p in chance
    ]
    cut: set[str] = set()
    while True:
        residual = [(u, v) for (u, v) in arcs if u not in cut]
        if _is_forest(residual):
            return frozenset(cut)
        on_cycle = _cycle_edges(residual)
        # Every cycle has a non-bridge edge and every edge has a tail, so
        # candidates is never empty while the residual has a cycle.
        candidates = sorted({u for (u, v) in residual if (u, v) in on_cycle})
        degree: dict[str, int] = {}
        for u, v in residual:
            degree[u] = degree.get(u, 0) + 1
            degree[v] = degree.get(v, 0) + 1
        # max keeps the first maximum; candidates are sorted, so ties go to
        # the smallest id.
        cut.add(max(candidates, key=lambda nid: degree[nid]))


def _is_forest(edges: list[tuple[str, str]]) -> bool:
    parent: dict[str, str] = {}

    def find(x: str) -> str:
        while parent.setdefault(x, x) != x:
            parent[x] = parent.get(parent[x], parent[x])
            x = parent[x]
        return x

    for u, v in edges:
        ru, rv = find(u), find(v)
        if ru == rv:
            return False
        parent[ru] = rv
    return True


def _cycle_edges(edges: list[tuple[str, str]]) -> set[tuple[str, str]]:
    """Edges lying on some undirected cycle (i.e. the non-bridges)."""
    out: set[tuple[str, str]] = set()
    for i, (u, v) in enumerate(edges):
        rest = edges[:i] + edges[i + 1 :]
        adj: dict[str, list[str]] = {}
        for a, b in rest:
            adj.setdefault(a, []).append(b)
            adj.setdefault(b, []).append(a)
        seen = {u}
        queue = [u]
        for nid in queue:
            for nb in adj.get(nid, ()):  # still connected without the edge?
                if nb not in seen:
                    seen.add(nb)
                    queue.append(nb)
        if v in seen:
            out.add((u, v))
    return out


def infer(
    network: Network,
    findings: Findings,
    max_cutset_configs: int = DEFAULT_CUTSET_LIMIT,
) -> InferenceResult:
    """Exact posteriors for any valid network.

    Polytrees go through a single propagation sweep.  Multiply connected
    networks are handled by conditioning: for every instantiation of a loop
    cutset, a polytree pass yields conditional beliefs weighted by the
    instantiation's joint evidence probability; the weighted mixture is the
    exact posterior and the weight total is P(findings).
    """
    validate_findings(network, findings)
    bnet = _as_belief_network(network)
    chance_ids = {n.id for n in network.chance_nodes}

    if model.is_polytree(bnet):
        result = propagate_polytree(bnet, findings)
        beliefs = {k: v for k, v in result.beliefs.items() if k in chance_ids}
        return InferenceResult(beliefs, result.p_evidence)

    cutset = sorted(find_loop_cutset(bnet))
    free = [c for c in cutset if c not in findings]
    free_cards = [bnet.node(c).cardinality for c in free]
    count = math.prod(free_cards)
    if count > max_cutset_configs:
        raise TooLarge(
            f"cutset {cutset} has {count} instantiations, limit {max_cutset_configs}"
        )

    cut = set(cutset)
    accum: dict[str, list[float]] = {
        n.id: [0.0] * n.cardinality for n in bnet.nodes
    }
    total = 0.0
    for idx in range(count):
        assign = index_to_assignment(free_cards, idx)
        cvals = {c: findings[c] for c in cutset if c in findings}
        cvals.update(zip(free, assign))
        reduced = _absorb_cutset(bnet, cut, cvals)
        pass_findings = dict(findings)
        pass_findings.update(cvals)
        outcome = _propagate(reduced, pass_findings)
        if outcome.p_evidence == 0.0:
            continue
        total += outcome.p_evidence
        for nid, vec in outcome.beliefs.items():
            acc = accum[nid]
            for s, v in enumerate(vec):
                acc[s] += outcome.p_evidence * v
    if total == 0.0:
        raise ImpossibleEvidence(f"findings {findings!r} have zero probability")

    beliefs = {}
    for nid in sorted(accum):
        if nid not in chance_ids:
            continue
        vec = accum[nid]
        norm = math.fsum(vec)
        beliefs[nid] = tuple(v / norm for v in vec)
    return InferenceResult(beliefs, total)


def _as_belief_network(network: Network) -> Network:
    """Marginal belief-network view: decisions uniform, value nodes dropped."""
    if network.kind is NetworkKind.BELIEF:
        return network
    nodes: list[ChanceNode] = []
    for node in network.nodes:
        if isinstance(node, ChanceNode):
            nodes.append(node)
        elif isinstance(node, DecisionNode):
            nodes.append(_uniform_chance(network, node))
    return Network(network.name, NetworkKind.BELIEF, tuple(nodes))


def _uniform_chance(network: Network, node: DecisionNode) -> ChanceNode:
    card = node.cardinality
    n_rows = math.prod(model.parent_cards(network, node))
    row = tuple(1.0 / card for _ in range(card))
    return ChanceNode(
        node.id, node.alternatives, node.parents, Cpt((row,) * n_rows), node.meta
    )


def _absorb_cutset(
    network: Network, cut: set[str], cvals: dict[str, int]
) -> Network:
    """Fix the cutset values: children absorb them into reduced CPTs.

    Every node drops its cutset parents and keeps only the CPT rows
    selected by ``cvals``; cutset nodes themselves keep their (reduced)
    tables and are observed by the caller.  The resulting skeleton is the
    original minus the cutset's outgoing arcs, which is singly connected by
    construction of the cutset.
    """
    nodes = []
    for node in network.nodes:
        if not any(p in cut for p in node.parents):
            nodes.append(node)
            continue
        old_cards = model.parent_cards(network, node)
        keep = [i for i, p in enumerate(node.parents) if p not in cut]
        new_parents = tuple(node.parents[i] for i in keep)
        new_cards = [old_cards[i] for i in keep]
        full = [cvals[p] if p in cut else 0 for p in node.parents]
        rows = []
        for assign in iter_configs(new_cards):
            for j, i in enumerate(keep):
                full[i] = assign[j]
            rows.append(node.cpt.rows[config_index(old_cards, full)])
        nodes.append(
            ChanceNode(node.id, node.states, new_parents, Cpt(tuple(rows)), node.meta)
        )
    return Network(network.name, NetworkKind.BELIEF, tuple(nodes))
