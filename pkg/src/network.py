"""Chase network grounding and exact inference.

The network is a multigraph whose nodes are chase instances (deduplicated by
provenance-canonical key) and whose edges are single soft rule applications,
each followed by hard closure. A node's weight is the sum of the labels of
every edge pointing into it or into one of its ancestors.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple, Union

import networkx as nx
import numpy as np

from .analysis import rewrite_query
from .chase import Chase, ChaseState, Unifier
from .errors import GroundingBudgetExceeded
from .model import PKG, Fact, FactKey, NullFactory, Rule, canonical_fact_key
from .parser import format_facts

logger = logging.getLogger(__name__)


@dataclass
class NetworkNode:
    node_id: int
    key: str
    state: ChaseState
    weight: float = 0.0
    probability: float = 0.0

    @property
    def instance(self):
        return self.state.instance


@dataclass(frozen=True)
class NetworkEdge:
    source: int
    target: int
    rule_id: str
    unifier: Tuple
    label: float


class ChaseNetwork:
    """Grounded network; ``graph`` is a :class:`networkx.MultiDiGraph` over node ids."""

    def __init__(self, nulls: NullFactory):
        self.graph = nx.MultiDiGraph()
        self.nodes: Dict[int, NetworkNode] = {}
        self.by_key: Dict[str, int] = {}
        self.source = 0
        self.nulls = nulls

    def add_node(self, state: ChaseState) -> Tuple[NetworkNode, bool]:
        key = state.key
        existing = self.by_key.get(key)
        if existing is not None:
            return self.nodes[existing], False
        node = NetworkNode(len(self.nodes), key, state)
        self.nodes[node.node_id] = node
        self.by_key[key] = node.node_id
        self.graph.add_node(node.node_id)
        return node, True

    def add_edge(self, edge: NetworkEdge) -> None:
        self.graph.add_edge(edge.source, edge.target, edge=edge, label=edge.label)

    @property
    def edges(self) -> List[NetworkEdge]:
        return [data["edge"] for _, _, data in self.graph.edges(data=True)]

    def fact_key(self, fact: Union[Fact, FactKey]) -> FactKey:
        if isinstance(fact, tuple):
            return fact
        return canonical_fact_key(fact, self.nulls)

    def node_for(self, key: str) -> Optional[NetworkNode]:
        node_id = self.by_key.get(key)
        return None if node_id is None else self.nodes[node_id]

    def dump(self) -> str:
        """Human-readable listing of nodes and edges."""
        lines = [f"# nodes={len(self.nodes)} edges={self.graph.number_of_edges()}"]
        for node in self.nodes.values():
            facts = " ".join(format_facts(node.instance.facts))
            lines.append(
                f"node\t{node.node_id}\t{node.weight:.6f}\t{node.probability:.6f}\t{facts}"
            )
        for edge in self.edges:
            unifier = ",".join(f"{name}={term}" for name, term in edge.unifier)
            lines.append(
                f"edge\t{edge.source}\t{edge.target}\t{edge.rule_id}\t{edge.label:g}\t{unifier}"
            )
        return "\n".join(lines) + "\n"

    def __len__(self) -> int:
        return len(self.nodes)


def transition(chase: Chase, state: ChaseState, rule: Rule, unifier: Unifier) -> ChaseState:
    """Copy ``state``, fire one soft application, and close under hard rules."""
    successor = state.copy()
    app = chase.apply_chase_step(rule, unifier, successor.instance, successor.provenance)
    chase.close_after_step(app, successor.instance, successor.provenance)
    successor.weight += rule.weight
    return successor


def ground_chase_network(pkg: PKG, budget: int = 5000,
                         chase: Optional[Chase] = None) -> ChaseNetwork:
    """Breadth-first grounding from the hard closure of the database.

    Raises :class:`GroundingBudgetExceeded` once more than ``budget`` distinct
    nodes have been found.
    """
    chase = chase or Chase(pkg.program)
    initial = chase.initial_state(pkg.database)
    network = ChaseNetwork(initial.instance.nulls)
    root, _ = network.add_node(initial)
    network.source = root.node_id

    queue = deque([root])
    while queue:
        node = queue.popleft()
        candidates = chase.soft_candidates(node.instance, node.state.provenance)
        for rule_id, unifiers in candidates.items():
            rule = chase.rule(rule_id)
            for unifier in unifiers:
                successor = transition(chase, node.state, rule, unifier)
                target, created = network.add_node(successor)
                network.add_edge(NetworkEdge(
                    node.node_id, target.node_id, rule_id, unifier.bindings, rule.weight
                ))
                if created:
                    if len(network) > budget:
                        raise GroundingBudgetExceeded(
                            f"chase network exceeded {budget} nodes",
                            nodes=len(network),
                            edges=network.graph.number_of_edges(),
                        )
                    queue.append(target)

    logger.info(
        "Grounded chase network: %d nodes, %d edges",
        len(network), network.graph.number_of_edges(),
    )
    node_weights(network)
    node_probabilities(network)
    return network


def node_weights(network: ChaseNetwork) -> Dict[int, float]:
    """Sum the labels of edges whose target is the node or one of its ancestors."""
    weights: Dict[int, float] = {}
    edges = list(network.graph.edges(data="label"))
    for node_id in network.graph.nodes:
        scope = nx.ancestors(network.graph, node_id)
        scope.add(node_id)
        weights[node_id] = float(sum(label for _, target, label in edges if target in scope))
        network.nodes[node_id].weight = weights[node_id]
    return weights


def normalize_log_weights(weights: Iterable[float]) -> np.ndarray:
    """exp(w) / Z computed with a max shift."""
    values = np.asarray(list(weights), dtype=float)
    if values.size == 0:
        return values
    scaled = np.exp(values - values.max())
    return scaled / scaled.sum()


def node_probabilities(network: ChaseNetwork) -> Dict[int, float]:
    ids = sorted(network.nodes)
    probs = normalize_log_weights(network.nodes[i].weight for i in ids)
    out = {}
    for node_id, p in zip(ids, probs):
        network.nodes[node_id].probability = float(p)
        out[node_id] = float(p)
    return out


def marginal(network: ChaseNetwork, fact: Union[Fact, FactKey]) -> float:
    """Total probability of the nodes containing the fact (0 if none does)."""
    key = network.fact_key(fact)
    total = 0.0
    for node in network.nodes.values():
        if any(network.fact_key(f) == key for f in node.instance.facts_of(key[0])):
            total += node.probability
    return total


def fact_marginals(network: ChaseNetwork,
                   predicate: Optional[str] = None) -> Dict[FactKey, Tuple[Fact, float]]:
    """Marginal of every fact in the network, optionally restricted to one predicate."""
    out: Dict[FactKey, Tuple[Fact, float]] = {}
    for node in network.nodes.values():
        facts = node.instance.facts_of(predicate) if predicate else node.instance.facts
        for fact in facts:
            key = network.fact_key(fact)
            representative, total = out.get(key, (fact, 0.0))
            out[key] = (representative, total + node.probability)
    return out


def answer_query(pkg: PKG, query: Union[str, Rule], budget: int = 5000,
                 chase_options: Optional[dict] = None) -> List[Tuple[Fact, float]]:
    """Exact answers to a query: facts of the answer predicate with their marginals."""
    rewrite = rewrite_query(pkg.program, query)
    augmented = PKG(pkg.database, rewrite.program, pkg.name)
    chase = Chase(augmented.program, **(chase_options or {}))
    network = ground_chase_network(augmented, budget, chase)
    rows = [
        (fact, prob)
        for fact, prob in fact_marginals(network, rewrite.predicate).values()
        if prob > 0.0
    ]
    return sorted(rows, key=lambda row: row[0].sort_key)
