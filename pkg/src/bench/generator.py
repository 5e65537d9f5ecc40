"""Scale-free ownership graphs for the company-control benchmark."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from typing import Dict, List, TextIO, Tuple

import networkx as nx
import numpy as np

from ..errors import ConfigError

logger = logging.getLogger(__name__)

Edge = Tuple[str, str, float]


@dataclass(frozen=True)
class ScaleFreeParams:
    """Probabilities of the three growth moves of a directed scale-free graph.

    ``alpha``: new node owns an existing one; ``beta``: edge between existing
    nodes; ``gamma``: existing node owns a new one.
    """

    n: int
    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        if self.n < 3:
            raise ConfigError(f"a scale-free graph needs at least 3 nodes, got {self.n}")
        for name in ("alpha", "beta", "gamma"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ConfigError(f"{name} must lie strictly between 0 and 1, got {value}")
        total = self.alpha + self.beta + self.gamma
        if abs(total - 1.0) > 1e-9:
            raise ConfigError(f"alpha + beta + gamma must equal 1, got {total:.12g}")


TOPOLOGIES: Dict[str, Tuple[float, float, float]] = {
    "base": (0.71, 0.09, 0.20),
    "dense": (0.51, 0.34, 0.15),
    "super-dense": (0.51, 0.44, 0.05),
}


def topology(name: str, n: int) -> ScaleFreeParams:
    try:
        alpha, beta, gamma = TOPOLOGIES[name]
    except KeyError:
        raise ConfigError(f"unknown topology {name!r}; choose from {', '.join(TOPOLOGIES)}")
    return ScaleFreeParams(n, alpha, beta, gamma)


def gen_scale_free(params: ScaleFreeParams, seed: int = 0,
                   corruption_rate: float = 0.0) -> List[Edge]:
    """Directed ownership edges ``(owner, owned, share)`` with shares in (0, 1].

    Self-loops and parallel edges are dropped. With ``corruption_rate`` a
    fraction of shares is pushed above 1 to exercise the unreliable-data rules.
    """
    if not 0.0 <= corruption_rate <= 1.0:
        raise ConfigError(f"corruption rate must lie in [0, 1], got {corruption_rate}")
    graph = nx.scale_free_graph(
        params.n, alpha=params.alpha, beta=params.beta, gamma=params.gamma, seed=seed
    )
    rng = np.random.default_rng(seed)
    edges: List[Edge] = []
    seen = set()
    for owner, owned in graph.edges():
        if owner == owned or (owner, owned) in seen:
            continue
        seen.add((owner, owned))
        share = 1.0 - rng.random()
        if corruption_rate and rng.random() < corruption_rate:
            share += 1.0
        edges.append((f"c{owner}", f"c{owned}", round(float(share), 6) or 1e-6))
    logger.info("Generated %d ownership edges over %d companies", len(edges), params.n)
    return edges


def write_edges_csv(edges: List[Edge], stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["src", "dst", "share"])
    for owner, owned, share in edges:
        writer.writerow([owner, owned, f"{share:.6f}"])


def read_edges_csv(stream: TextIO) -> List[Edge]:
    reader = csv.reader(stream)
    rows = [row for row in reader if row]
    if rows and rows[0][:3] == ["src", "dst", "share"]:
        rows = rows[1:]
    edges: List[Edge] = []
    for line_no, row in enumerate(rows, start=2):
        if len(row) != 3:
            raise ConfigError(f"edge file line {line_no}: expected 3 columns, found {len(row)}")
        try:
            edges.append((row[0].strip(), row[1].strip(), float(row[2])))
        except ValueError:
            raise ConfigError(f"edge file line {line_no}: share {row[2]!r} is not a number")
    return edges
