"""Static checks: affected positions, wardedness, stratification, safety.

All checks return verdicts carrying :class:`Diagnostic` lists; nothing here
raises except :func:`rewrite_query`, which refuses a non-warded query.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, FrozenSet, List, Optional, Set, Tuple, Union

import networkx as nx

from .errors import AnalysisError, Diagnostic
from .model import Atom, Program, Rule, condition_variables
from .parser import format_rule

logger = logging.getLogger(__name__)

Position = Tuple[str, int]
PositionSet = FrozenSet[Position]

HARMLESS = "harmless"
HARMFUL = "harmful"
DANGEROUS = "dangerous"


def _positions(atoms, name: str) -> List[Position]:
    return [
        (atom.predicate, i + 1)
        for atom in atoms
        for i, t in enumerate(atom.terms)
        if getattr(t, "name", None) == name
    ]


def affected_positions(program: Program) -> PositionSet:
    """Least fixpoint of positions where a labeled null may appear."""
    affected: Set[Position] = set()
    for rule in program.rules:
        for atom in rule.head:
            for i, t in enumerate(atom.terms):
                if getattr(t, "name", None) in rule.existentials:
                    affected.add((atom.predicate, i + 1))

    changed = True
    while changed:
        changed = False
        for rule in program.rules:
            for name in rule.frontier:
                body = _positions(rule.positive_atoms, name)
                if not body or not all(p in affected for p in body):
                    continue
                for p in _positions(rule.head, name):
                    if p not in affected:
                        affected.add(p)
                        changed = True
    return frozenset(affected)


@dataclass
class VariableClassification:
    rule_id: str
    kinds: Dict[str, str]
    ward: Optional[int] = None

    @property
    def dangerous(self) -> FrozenSet[str]:
        return frozenset(v for v, k in self.kinds.items() if k == DANGEROUS)

    @property
    def harmful(self) -> FrozenSet[str]:
        return frozenset(v for v, k in self.kinds.items() if k != HARMLESS)


def classify_variables(rule: Rule, affected: PositionSet) -> VariableClassification:
    kinds: Dict[str, str] = {}
    for name in rule.body_variables:
        body = _positions(rule.positive_atoms, name)
        if not body or not all(p in affected for p in body):
            kinds[name] = HARMLESS
        elif name in rule.frontier:
            kinds[name] = DANGEROUS
        else:
            kinds[name] = HARMFUL
    return VariableClassification(rule.rule_id, kinds)


@dataclass
class WardednessVerdict:
    warded: bool
    violations: List[Diagnostic] = field(default_factory=list)
    warnings: List[Diagnostic] = field(default_factory=list)
    classification: Dict[str, VariableClassification] = field(default_factory=dict)
    affected: PositionSet = frozenset()


def check_warded(program: Program) -> WardednessVerdict:
    affected = affected_positions(program)
    verdict = WardednessVerdict(True, affected=affected)

    for rule in program.rules:
        cls = classify_variables(rule, affected)
        verdict.classification[rule.rule_id] = cls
        atoms = rule.positive_atoms

        harmful = cls.harmful
        for name in sorted(harmful):
            holders = [a for a in atoms if name in a.variables()]
            if len(holders) > 1:
                verdict.warnings.append(Diagnostic(
                    "W103",
                    f"rule {rule.rule_id}: harmful join on {name}",
                    rule.span,
                    rule.rule_id,
                ))

        dangerous = cls.dangerous
        if not dangerous:
            continue
        candidates = [i for i, a in enumerate(atoms) if dangerous <= set(a.variables())]
        if not candidates:
            verdict.warded = False
            verdict.violations.append(Diagnostic(
                "W100",
                f"rule {rule.rule_id}: dangerous variables {', '.join(sorted(dangerous))} "
                f"do not occur together in one body atom",
                rule.span,
                rule.rule_id,
            ))
            continue
        for i in candidates:
            others = set()
            for j, a in enumerate(atoms):
                if j != i:
                    others.update(a.variables())
            shared = set(atoms[i].variables()) & others
            if not shared & harmful:
                cls.ward = i
                break
        if cls.ward is None:
            verdict.warded = False
            verdict.violations.append(Diagnostic(
                "W101",
                f"rule {rule.rule_id}: every ward candidate shares a harmful variable "
                f"with the rest of the body",
                rule.span,
                rule.rule_id,
            ))
    return verdict


@dataclass
class StratificationVerdict:
    stratified: bool
    strata: Dict[str, int] = field(default_factory=dict)
    cycles: List[Diagnostic] = field(default_factory=list)
    relaxed: bool = False

    def rule_stratum(self, rule: Rule) -> int:
        return max((self.strata.get(a.predicate, 0) for a in rule.head), default=0)


def dependency_graph(program: Program) -> nx.DiGraph:
    """Predicate graph; each edge carries the set of its labels."""
    graph = nx.DiGraph()
    graph.add_nodes_from(program.arities)
    for rule in program.rules:
        operands = {agg.operand for agg in rule.aggregates}
        for head in rule.head:
            graph.add_node(head.predicate)
            for atom in rule.positive_atoms:
                label = "aggregate" if operands & set(atom.variables()) else "positive"
                _add_label(graph, atom.predicate, head.predicate, label, rule.rule_id)
            for atom in rule.negated_atoms:
                _add_label(graph, atom.predicate, head.predicate, "negative", rule.rule_id)
    return graph


def _add_label(graph: nx.DiGraph, source: str, target: str, label: str, rule_id: str) -> None:
    if graph.has_edge(source, target):
        graph[source][target]["labels"].add(label)
        graph[source][target]["rules"].add(rule_id)
    else:
        graph.add_edge(source, target, labels={label}, rules={rule_id})


def check_stratified(program: Program, relax_aggregates: bool = False) -> StratificationVerdict:
    graph = dependency_graph(program)
    verdict = StratificationVerdict(True, relaxed=relax_aggregates)

    component_of: Dict[str, int] = {}
    for index, members in enumerate(nx.strongly_connected_components(graph)):
        for pred in members:
            component_of[pred] = index

    for source, target, data in graph.edges(data=True):
        if component_of[source] != component_of[target]:
            continue
        rules = ", ".join(sorted(data["rules"]))
        if "negative" in data["labels"]:
            verdict.stratified = False
            verdict.cycles.append(Diagnostic(
                "S100", f"negation of {source} inside a recursive cycle through {target} ({rules})"
            ))
        if "aggregate" in data["labels"]:
            if relax_aggregates:
                logger.warning(
                    "Aggregate over %s is recursive through %s; evaluating in generation order",
                    source, target,
                )
            else:
                verdict.stratified = False
                verdict.cycles.append(Diagnostic(
                    "S101", f"aggregation over {source} inside a recursive cycle through "
                            f"{target} ({rules})"
                ))

    condensed = nx.condensation(graph, scc=None)
    members = condensed.graph["mapping"]
    level: Dict[int, int] = {}
    for node in nx.topological_sort(condensed):
        best = 0
        for pred in condensed.predecessors(node):
            strict = any(
                graph[s][t]["labels"] & {"negative", "aggregate"}
                for s in condensed.nodes[pred]["members"]
                for t in condensed.nodes[node]["members"]
                if graph.has_edge(s, t)
            )
            best = max(best, level[pred] + (1 if strict else 0))
        level[node] = best
    verdict.strata = {pred: level[members[pred]] for pred in graph.nodes}
    return verdict


def check_safety(program: Program) -> List[Diagnostic]:
    """Range restriction of negation, aggregates and filters, plus weight checks."""
    diagnostics: List[Diagnostic] = []
    for rule in program.rules:
        bound = set(rule.body_variables)
        positive = {name for atom in rule.positive_atoms for name in atom.variables()}
        if rule.weight == -math.inf:
            diagnostics.append(Diagnostic(
                "A101", f"rule {rule.rule_id} has weight -inf", rule.span, rule.rule_id
            ))
        for atom in rule.negated_atoms:
            loose = [v for v in atom.variables() if v not in bound]
            if loose:
                diagnostics.append(Diagnostic(
                    "A100",
                    f"rule {rule.rule_id}: negated {atom.predicate} uses unbound "
                    f"{', '.join(loose)}",
                    rule.span,
                    rule.rule_id,
                ))
        for agg in rule.aggregates:
            if agg.operand not in positive:
                diagnostics.append(Diagnostic(
                    "A102",
                    f"rule {rule.rule_id}: aggregate operand {agg.operand} is not bound "
                    f"by a positive atom",
                    rule.span,
                    rule.rule_id,
                ))
        for cond in rule.conditions:
            loose = sorted(condition_variables(cond) - bound)
            if loose:
                diagnostics.append(Diagnostic(
                    "A103",
                    f"rule {rule.rule_id}: comparison uses unbound {', '.join(loose)}",
                    rule.span,
                    rule.rule_id,
                ))
    return diagnostics


@dataclass
class ProgramReport:
    """Combined result of every static check, as used by ``check`` and the engines."""

    warded: WardednessVerdict
    stratification: StratificationVerdict
    safety: List[Diagnostic]

    @property
    def ok(self) -> bool:
        return self.warded.warded and self.stratification.stratified and not self.safety

    @property
    def diagnostics(self) -> List[Diagnostic]:
        return list(self.safety) + self.warded.violations + self.stratification.cycles

    @property
    def warnings(self) -> List[Diagnostic]:
        return list(self.warded.warnings)


def analyze_program(program: Program, relax_aggregates: bool = False) -> ProgramReport:
    report = ProgramReport(
        check_warded(program),
        check_stratified(program, relax_aggregates),
        check_safety(program),
    )
    logger.info(
        "Analysed %d rules: warded=%s stratified=%s diagnostics=%d",
        len(program.rules), report.warded.warded, report.stratification.stratified,
        len(report.diagnostics),
    )
    return report


def require_valid(program: Program, relax_aggregates: bool = False) -> ProgramReport:
    """Analyse the program and raise :class:`AnalysisError` on any violation."""
    report = analyze_program(program, relax_aggregates)
    if not report.ok:
        first = report.diagnostics[0]
        raise AnalysisError(first.message, first.span, first.code, report.diagnostics)
    return report


@dataclass
class QueryRewrite:
    program: Program
    predicate: str
    rule: Optional[Rule] = None


def rewrite_query(program: Program, query: Union[str, Rule]) -> QueryRewrite:
    """Turn a query into a single answer predicate over an augmented program.

    A bare predicate name is returned unchanged. A rule-form query gets its head
    renamed to a fresh ``ans_<n>`` predicate and is appended as a hard rule.
    """
    if isinstance(query, str):
        predicate = query.lower()
        if predicate not in program.arities:
            logger.warning("Query predicate %s does not occur in the program", predicate)
        return QueryRewrite(program, predicate)

    if query.existentials:
        raise AnalysisError(
            f"query answer variables {', '.join(sorted(query.existentials))} "
            f"are not bound by the query body",
            query.span,
            code="W102",
        )
    taken = set(program.arities)
    n = 0
    while f"ans_{n}" in taken:
        n += 1
    answer = f"ans_{n}"
    head = query.head[0]
    rule = replace(
        query,
        head=(Atom(answer, head.terms),),
        weight=math.inf,
        rule_id=f"q{n}",
    )
    arities = dict(program.arities)
    arities[answer] = head.arity
    augmented = Program(program.rules + (rule,), arities)

    verdict = check_warded(augmented)
    if any(d.rule_id == rule.rule_id for d in verdict.violations):
        raise AnalysisError(
            "query is not warded with respect to the program", query.span, code="W102"
        )
    if any(d.code == "W103" and d.rule_id == rule.rule_id for d in verdict.warnings):
        raise AnalysisError(
            "query joins affected positions on a harmful variable", query.span, code="W102"
        )
    logger.debug("Rewrote query into %s over %s", format_rule(rule), answer)
    return QueryRewrite(augmented, answer, rule)
