"""Metropolis-Hastings sampling over chase instances.

Each iteration draws a Poisson number of steps. A step goes forward (fire a
random selection of soft rules) or backward (undo a random selection of soft
applications); every rule in a step is selected with the same uniform draw,
so rule ``r`` is taken iff ``mu < 1 - exp(-w(r))``. The proposed state is
accepted with probability ``min(1, exp(w(T) - w(D)))``, where weights are the
sums of soft steps along the trajectory that reached each state.
"""

from __future__ import annotations

import csv
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Hashable, Iterable, List, Optional, Sequence, TextIO, Tuple, TypeVar

import numpy as np

from .chase import Chase, ChaseState
from .errors import ConfigError, EmptySampleError
from .model import PKG, Fact, FactKey, Instance, canonical_fact_key
from .network import ChaseNetwork, normalize_log_weights

logger = logging.getLogger(__name__)

T = TypeVar("T")


@dataclass(frozen=True)
class McmcConfig:
    iterations: int
    jump_rate: float = 5.0
    seed: int = 0
    backward_threshold: float = 0.5

    def __post_init__(self):
        if self.iterations < 1:
            raise ConfigError(f"iterations must be at least 1, got {self.iterations}")
        if not self.jump_rate > 0:
            raise ConfigError(f"jump rate must be positive, got {self.jump_rate}")
        if not 0.0 <= self.backward_threshold <= 1.0:
            raise ConfigError(
                f"backward threshold must lie in [0, 1], got {self.backward_threshold}"
            )


@dataclass
class Sample:
    iteration: int
    key: str
    instance: Instance
    weight: float


@dataclass
class SampleSet:
    """Accepted states, plus the state the chain held after every iteration."""

    samples: List[Sample] = field(default_factory=list)
    proposals: int = 0
    trace: List[str] = field(default_factory=list)
    weight_trace: List[float] = field(default_factory=list)
    seed: Optional[int] = None

    @property
    def accepted(self) -> int:
        return len(self.samples)

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.proposals if self.proposals else 0.0

    def merge(self, other: "SampleSet") -> "SampleSet":
        """Pool two independent chains; iteration numbers of ``other`` are shifted."""
        offset = self.proposals
        shifted = [
            Sample(s.iteration + offset, s.key, s.instance, s.weight) for s in other.samples
        ]
        return SampleSet(
            self.samples + shifted,
            self.proposals + other.proposals,
            self.trace + other.trace,
            self.weight_trace + other.weight_trace,
            self.seed,
        )

    def __len__(self) -> int:
        return len(self.samples)


def selected(weight: float, mu: float) -> bool:
    """Whether a rule of this weight is selected by the shared draw ``mu``."""
    if weight > 0:
        return mu < 1.0 - math.exp(-weight)
    if weight < 0:
        return mu > 1.0 - math.exp(weight)
    return False


def sample_rules(candidates: Dict[str, Sequence[T]], weights: Dict[str, float],
                 rng: np.random.Generator, mu: Optional[float] = None) -> List[Tuple[str, T]]:
    """Select rules with one shared draw, then one candidate per selected rule."""
    if mu is None:
        mu = rng.random()
    picks: List[Tuple[str, T]] = []
    for rule_id, items in candidates.items():
        if items and selected(weights[rule_id], mu):
            picks.append((rule_id, items[int(rng.integers(len(items)))]))
    return picks


def transition_step(chase: Chase, state: ChaseState, picks) -> ChaseState:
    """Fire the picked soft applications in order, closing under hard rules after each."""
    for rule_id, unifier in picks:
        rule = chase.rule(rule_id)
        if not chase.still_applicable(rule, unifier, state.instance, state.provenance):
            logger.debug("Dropping stale selection of %s", rule_id)
            continue
        app = chase.apply_chase_step(rule, unifier, state.instance, state.provenance)
        chase.close_after_step(app, state.instance, state.provenance)
        state.weight += rule.weight
    return state


def undo_transition_step(chase: Chase, state: ChaseState, picks) -> ChaseState:
    """Undo the picked soft applications in order, skipping any no longer undoable."""
    for rule_id, app in picks:
        undoable = {a.identity for a in chase.undoable_applications(state.instance,
                                                                    state.provenance)}
        if app.identity not in undoable:
            logger.debug("Dropping stale undo of %s", rule_id)
            continue
        chase.undo_application(app, state.instance, state.provenance)
        state.weight -= app.weight
    return state


def _undo_candidates(chase: Chase, state: ChaseState) -> Dict[str, list]:
    grouped: Dict[str, list] = {}
    for app in chase.undoable_applications(state.instance, state.provenance):
        grouped.setdefault(app.rule_id, []).append(app)
    order = [r.rule_id for r in chase.program.soft_rules]
    return {rule_id: grouped[rule_id] for rule_id in order if rule_id in grouped}


def mcmc_chase(pkg: PKG, config: McmcConfig, chase: Optional[Chase] = None) -> SampleSet:
    """Run the sampler for ``config.iterations`` proposals."""
    chase = chase or Chase(pkg.program)
    rng = np.random.default_rng(config.seed)
    weights = {r.rule_id: r.weight for r in chase.program.soft_rules}

    state = chase.initial_state(pkg.database)
    state_key = state.key
    result = SampleSet(seed=config.seed)

    for iteration in range(1, config.iterations + 1):
        steps = int(rng.poisson(config.jump_rate))
        trial = state.copy() if steps else state
        for _ in range(steps):
            direction = rng.random()
            mu = rng.random()
            if direction < config.backward_threshold:
                candidates = chase.soft_candidates(trial.instance, trial.provenance)
                picks = sample_rules(candidates, weights, rng, mu)
                transition_step(chase, trial, picks)
            else:
                picks = sample_rules(_undo_candidates(chase, trial), weights, rng, mu)
                undo_transition_step(chase, trial, picks)

        log_alpha = min(0.0, trial.weight - state.weight)
        u = rng.random()
        result.proposals += 1
        if u < math.exp(log_alpha):
            if trial is not state:
                state = trial
                state_key = state.key
            result.samples.append(Sample(iteration, state_key, state.instance, state.weight))
        result.trace.append(state_key)
        result.weight_trace.append(state.weight)

    logger.info(
        "MCMC chase: %d iterations, %d accepted (%.3f), %d distinct states",
        result.proposals, result.accepted, result.acceptance_rate,
        len({s.key for s in result.samples}),
    )
    return result


def _distinct(samples: SampleSet) -> List[Sample]:
    seen: Dict[str, Sample] = {}
    for sample in samples.samples:
        seen.setdefault(sample.key, sample)
    return list(seen.values())


def estimate_marginals(samples: SampleSet, reference: Optional[ChaseNetwork] = None,
                       predicate: Optional[str] = None) -> Dict[FactKey, Tuple[Fact, float]]:
    """Marginals over the distinct sampled instances, normalised locally.

    Each instance keeps the weight recorded along its trajectory unless a
    ``reference`` network is given, in which case its network weight is used.
    """
    distinct = _distinct(samples)
    if not distinct:
        raise EmptySampleError("no accepted samples to estimate from")
    weights = []
    for sample in distinct:
        weight = sample.weight
        if reference is not None:
            node = reference.node_for(sample.key)
            if node is None:
                logger.warning("Sampled state %s is not in the reference network", sample.key[:12])
            else:
                weight = node.weight
        weights.append(weight)

    out: Dict[FactKey, Tuple[Fact, float]] = {}
    for sample, prob in zip(distinct, normalize_log_weights(weights)):
        nulls = sample.instance.nulls
        facts = sample.instance.facts_of(predicate) if predicate else sample.instance.facts
        for fact in facts:
            key = canonical_fact_key(fact, nulls)
            representative, total = out.get(key, (fact, 0.0))
            out[key] = (representative, total + float(prob))
    return out


def samples_from_network(network: ChaseNetwork) -> SampleSet:
    """Treat every network node as one sample carrying its network weight."""
    result = SampleSet()
    for node in network.nodes.values():
        result.samples.append(Sample(node.node_id, node.key, node.instance, node.weight))
        result.proposals += 1
    return result


def node_frequencies(samples: SampleSet) -> Dict[str, float]:
    """Fraction of iterations the chain spent in each state."""
    if not samples.trace:
        return {}
    counts = Counter(samples.trace)
    total = len(samples.trace)
    return {key: count / total for key, count in counts.items()}


def total_variation(p: Dict[Hashable, float], q: Dict[Hashable, float]) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


def diagnostics(samples: SampleSet) -> dict:
    """Serializable summary of a run."""
    return {
        "proposals": samples.proposals,
        "accepted": samples.accepted,
        "acceptance_rate": round(samples.acceptance_rate, 6),
        "distinct_states": len({s.key for s in samples.samples}),
        "final_weight": samples.weight_trace[-1] if samples.weight_trace else None,
        "mean_weight": float(np.mean(samples.weight_trace)) if samples.weight_trace else None,
        "seed": samples.seed,
    }


def write_sample_trace(samples: SampleSet, stream: TextIO) -> None:
    """CSV with one row per iteration: state key, weight, and whether a proposal was accepted."""
    accepted_at = {s.iteration for s in samples.samples}
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["iteration", "state", "weight", "accepted"])
    for index, (key, weight) in enumerate(zip(samples.trace, samples.weight_trace), start=1):
        writer.writerow([index, key[:16], f"{weight:.6f}", int(index in accepted_at)])


def estimated_answer(samples: SampleSet, predicate: str,
                     reference: Optional[ChaseNetwork] = None) -> List[Tuple[Fact, float]]:
    rows = [
        (fact, prob)
        for fact, prob in estimate_marginals(samples, reference, predicate).values()
        if prob > 0.0
    ]
    return sorted(rows, key=lambda row: row[0].sort_key)


def pool(runs: Iterable[SampleSet]) -> SampleSet:
    runs = list(runs)
    if not runs:
        return SampleSet()
    merged = runs[0]
    for other in runs[1:]:
        merged = merged.merge(other)
    return merged
