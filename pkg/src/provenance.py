"""Rule-application records and the lineage graph the chase keeps beside an instance."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Hashable, Iterable, List, Optional, Set, Tuple

from .model import Fact, Term


@dataclass(frozen=True)
class RuleApplication:
    """One firing of a rule: its body unifier, the facts it matched and produced."""

    rule_id: str
    bindings: Tuple[Tuple[str, Term], ...]
    body_facts: Tuple[Fact, ...]
    head_facts: Tuple[Fact, ...]
    new_facts: Tuple[Fact, ...]
    key: Hashable
    weight: float

    @property
    def identity(self) -> Tuple[str, Hashable]:
        return (self.rule_id, self.key)

    @property
    def is_soft(self) -> bool:
        return self.weight != float("inf")

    @property
    def substitution(self) -> Dict[str, Term]:
        return dict(self.bindings)

    def describe(self) -> str:
        unifier = ",".join(f"{name}={term}" for name, term in self.bindings)
        facts = ",".join(str(f) for f in self.new_facts)
        return f"{self.rule_id}\t{unifier}\t{facts}"


class ProvenanceGraph:
    """Applications in firing order, with fact -> generator and fact -> consumer links."""

    def __init__(self):
        self._applications: List[RuleApplication] = []
        self._used: Dict[str, Set[Hashable]] = {}
        self.generator: Dict[Fact, RuleApplication] = {}
        self.consumers: Dict[Fact, List[RuleApplication]] = {}

    def record(self, app: RuleApplication) -> None:
        self._applications.append(app)
        self._used.setdefault(app.rule_id, set()).add(app.key)
        for fact in app.new_facts:
            self.generator.setdefault(fact, app)
        for fact in app.body_facts:
            self.consumers.setdefault(fact, []).append(app)

    def is_used(self, rule_id: str, key: Hashable) -> bool:
        return key in self._used.get(rule_id, ())

    @property
    def applications(self) -> Tuple[RuleApplication, ...]:
        return tuple(self._applications)

    def soft_applications(self) -> List[RuleApplication]:
        return [app for app in self._applications if app.is_soft]

    def generated_facts(self) -> Set[Fact]:
        return set(self.generator)

    def downstream(self, app: RuleApplication) -> Optional[Set[Fact]]:
        """Facts derived from ``app`` through hard applications only.

        Returns ``None`` as soon as a soft application consumes any of them.
        """
        reached: Set[Fact] = set(app.new_facts)
        frontier: List[Fact] = list(app.new_facts)
        while frontier:
            fact = frontier.pop()
            for consumer in self.consumers.get(fact, ()):
                if consumer.identity == app.identity:
                    continue
                if consumer.is_soft:
                    return None
                for produced in consumer.new_facts:
                    if produced not in reached:
                        reached.add(produced)
                        frontier.append(produced)
        return reached

    def assign(self, other: "ProvenanceGraph") -> None:
        self._applications = list(other._applications)
        self._used = {k: set(v) for k, v in other._used.items()}
        self.generator = dict(other.generator)
        self.consumers = {k: list(v) for k, v in other.consumers.items()}

    def copy(self) -> "ProvenanceGraph":
        clone = ProvenanceGraph()
        clone.assign(self)
        return clone

    def extend(self, apps: Iterable[RuleApplication]) -> None:
        for app in apps:
            self.record(app)

    def __len__(self) -> int:
        return len(self._applications)
