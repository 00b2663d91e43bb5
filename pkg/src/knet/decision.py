"""Decision-network evaluation via reduction to belief-network inference.

The reduction replaces every decision node by a uniformly distributed
chance node and the single value node by a binary chance node whose
"high" probability is the affinely rescaled utility of each parent
configuration.  Any exact belief-network engine then answers
expected-utility queries: EU = u_min + (u_max - u_min) * P(high | evidence),
and ``recommend`` ranks every joint configuration of the free decisions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import inference, model
from .errors import (
    ImpossibleEvidence,
    MalformedDecisionNetwork,
    TooManyConfigurations,
)
from .inference import Findings
from .model import (
    ChanceNode,
    Cpt,
    DecisionNode,
    Network,
    NetworkKind,
    ValueNode,
    index_to_assignment,
)

PROXY_STATES = ("high", "low")

# Cap on the joint decision configurations recommend will enumerate.
DEFAULT_CONFIG_LIMIT = 1024

# One alternative index per decision node.
DecisionConfiguration = dict[str, int]


@dataclass(frozen=True)
class TransformedNetwork:
    """Belief-network reduction of a decision network plus bookkeeping."""

    network: Network
    u_min: float
    u_max: float
    proxy_id: str

    @property
    def span(self) -> float:
        return self.u_max - self.u_min


@dataclass(frozen=True)
class EvaluatedDecision:
    """One decision configuration with its expected utility.

    ``normalized_score`` is the utility rescaled to [0, 1] over the value
    table's range.  Configurations whose joint instantiation is impossible
    under the current findings carry ``feasible=False`` and no utility.
    """

    configuration: DecisionConfiguration
    expected_utility: float | None
    normalized_score: float | None
    feasible: bool = True


@dataclass(frozen=True)
class Recommendation:
    """All evaluated configurations, best first.

    Feasible entries are ordered by descending expected utility with ties
    broken by ascending configuration index (earlier-declared alternatives
    win); infeasible entries are flagged and ranked last.
    """

    ranking: tuple[EvaluatedDecision, ...]

    @property
    def best(self) -> EvaluatedDecision:
        return self.ranking[0]


def utility_proxy_transform(network: Network) -> TransformedNetwork:
    """Reduce a decision network to a belief network with a utility proxy.

    Decision nodes keep their id, parents, and alternatives but become
    uniformly distributed chance nodes; the value node becomes a binary
    (high, low) chance node with P(high) = (u - u_min) / (u_max - u_min)
    per parent configuration, or 0.5 everywhere when the table is constant.
    """
    if network.kind is not NetworkKind.DECISION:
        raise MalformedDecisionNetwork(f"{network.name!r} is not a decision network")
    values = network.value_nodes
    if len(values) != 1 or not network.decision_nodes:
        raise MalformedDecisionNetwork(
            f"{network.name!r} needs >=1 decision node and exactly 1 value node"
        )
    value = values[0]
    u_min = min(value.utilities)
    u_max = max(value.utilities)
    span = u_max - u_min

    nodes: list[ChanceNode] = []
    for node in network.nodes:
        if isinstance(node, ChanceNode):
            nodes.append(node)
        elif isinstance(node, DecisionNode):
            card = node.cardinality
            n_rows = math.prod(model.parent_cards(network, node))
            row = tuple(1.0 / card for _ in range(card))
            nodes.append(
                ChanceNode(node.id, node.alternatives, node.parents, Cpt((row,) * n_rows), node.meta)
            )
        else:
            rows = []
            for u in node.utilities:
                p_high = (u - u_min) / span if span > 0.0 else 0.5
                rows.append((p_high, 1.0 - p_high))
            nodes.append(
                ChanceNode(node.id, PROXY_STATES, node.parents, Cpt(tuple(rows)), node.meta)
            )
    belief = Network(network.name, NetworkKind.BELIEF, tuple(nodes))
    return TransformedNetwork(belief, u_min, u_max, value.id)


def expected_utility(
    network: Network, findings: Findings, config: DecisionConfiguration
) -> float:
    """Expected utility of one complete configuration of the free decisions.

    ``config`` must cover exactly the decision nodes not already fixed by
    findings.  Raises ImpossibleEvidence when findings plus the
    configuration have zero joint probability.
    """
    transformed = utility_proxy_transform(network)
    _check_config(network, findings, config)
    return _eu(transformed, findings, config)[0]


def _eu(
    transformed: TransformedNetwork, findings: Findings, config: DecisionConfiguration
) -> tuple[float, float]:
    merged = dict(findings)
    merged.update(config)
    result = inference.infer(transformed.network, merged)
    p_high = result.beliefs[transformed.proxy_id][0]
    return transformed.u_min + transformed.span * p_high, p_high


def _check_config(
    network: Network, findings: Findings, config: DecisionConfiguration
) -> None:
    inference.validate_findings(network, findings)
    free = {d.id for d in network.decision_nodes if d.id not in findings}
    if set(config) != free:
        raise ValueError(
            f"configuration must cover exactly the free decision nodes {sorted(free)}"
        )
    for nid, alt in config.items():
        card = network.node(nid).cardinality
        if not 0 <= alt < card:
            raise ValueError(f"alternative {alt} out of range for {nid!r}")


def recommend(
    network: Network,
    findings: Findings,
    max_configs: int = DEFAULT_CONFIG_LIMIT,
) -> Recommendation:
    """Rank every configuration of the decisions not fixed by findings.

    Impossible configurations are flagged and ranked last rather than
    aborting; ImpossibleEvidence is raised only if nothing is feasible.
    """
    transformed = utility_proxy_transform(network)
    inference.validate_findings(network, findings)
    free = sorted(d.id for d in network.decision_nodes if d.id not in findings)
    cards = [network.node(nid).cardinality for nid in free]
    count = math.prod(cards)
    if count > max_configs:
        raise TooManyConfigurations(f"{count} configurations, limit {max_configs}")

    feasible: list[tuple[float, int, EvaluatedDecision]] = []
    infeasible: list[EvaluatedDecision] = []
    for idx in range(count):
        config = dict(zip(free, index_to_assignment(cards, idx)))
        try:
            eu, p_high = _eu(transformed, findings, config)
        except ImpossibleEvidence:
            infeasible.append(EvaluatedDecision(config, None, None, feasible=False))
            continue
        feasible.append((eu, idx, EvaluatedDecision(config, eu, p_high)))
    if not feasible:
        raise ImpossibleEvidence("every decision configuration has zero probability")
    feasible.sort(key=lambda item: (-item[0], item[1]))
    ranking = tuple(item[2] for item in feasible) + tuple(infeasible)
    return Recommendation(ranking)
