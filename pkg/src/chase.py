"""Warded chase: unifier enumeration, chase steps, hard closure and undo.

A :class:`Chase` is bound to one analysed program. Facts, nulls and lineage live
in the :class:`~src.model.Instance` and :class:`~src.provenance.ProvenanceGraph`
passed to each call, so the same engine drives the plain chase, network
grounding and the sampler.

Rule applications are suppressed up to isomorphism of the matched body tuple:
a rule never fires twice on body tuples that differ only by a renaming of
nulls. Nulls are interned by their origin, so replaying an application after
an undo reproduces the same facts.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Callable, Dict, Hashable, Iterable, List, Optional, Sequence, Set, Tuple, Union

import numpy as np

from .analysis import require_valid
from .errors import InapplicableUnifierError, NotUndoableError, StepBudgetExceeded
from .model import (
    Absolute,
    AggregateBinding,
    Atom,
    Comparison,
    Condition,
    Constant,
    Expression,
    Fact,
    Instance,
    Null,
    NullFactory,
    Program,
    Rule,
    Term,
    Variable,
    apply_substitution,
    canonical_instance_key,
    canonical_tuple_key,
    condition_variables,
)
from .provenance import ProvenanceGraph, RuleApplication

logger = logging.getLogger(__name__)

Substitution = Dict[str, Term]

_UNDEFINED = object()


@dataclass(frozen=True)
class Unifier:
    """A body unifier together with the facts it matched."""

    bindings: Tuple[Tuple[str, Term], ...]
    body_facts: Tuple[Fact, ...]
    key: Hashable

    @property
    def substitution(self) -> Substitution:
        return dict(self.bindings)


@dataclass
class ChaseState:
    """An instance, its lineage, and the accumulated weight of soft steps."""

    instance: Instance
    provenance: ProvenanceGraph
    weight: float = 0.0

    def copy(self) -> "ChaseState":
        return ChaseState(self.instance.copy(), self.provenance.copy(), self.weight)

    @property
    def key(self) -> str:
        return canonical_instance_key(self.instance)


# filters

def _evaluate(expr: Expression, subst: Substitution):
    if isinstance(expr, Constant):
        return expr.value
    if isinstance(expr, Variable):
        term = subst[expr.name]
        return term.value if isinstance(term, Constant) else term
    if isinstance(expr, Absolute):
        value = _evaluate(expr.arg, subst)
        return abs(value) if isinstance(value, float) else _UNDEFINED
    left = _evaluate(expr.left, subst)
    right = _evaluate(expr.right, subst)
    if not isinstance(left, float) or not isinstance(right, float):
        return _UNDEFINED
    if expr.op == "+":
        return left + right
    if expr.op == "-":
        return left - right
    if expr.op == "*":
        return left * right
    if right == 0.0:
        return _UNDEFINED
    return left / right


def _compare(comp: Comparison, subst: Substitution) -> bool:
    left = _evaluate(comp.left, subst)
    right = _evaluate(comp.right, subst)
    if left is _UNDEFINED or right is _UNDEFINED:
        return False
    same_kind = type(left) is type(right)
    if comp.op == "=":
        return same_kind and left == right
    if comp.op == "!=":
        return not (same_kind and left == right)
    if not same_kind or isinstance(left, Null):
        return False
    if comp.op == "<":
        return left < right
    if comp.op == "<=":
        return left <= right
    if comp.op == ">":
        return left > right
    return left >= right


def holds(condition: Condition, subst: Substitution) -> bool:
    """A filter holds if any of its alternatives does; non-numeric operands never compare."""
    return any(_compare(comp, subst) for comp in condition.alternatives)


def _fold(operator: str, values: Sequence[float], count: int) -> Optional[float]:
    if operator == "count":
        return float(count)
    if operator == "sum":
        return float(sum(values))
    if not values:
        return None
    return float(min(values) if operator == "min" else max(values))


def _unify(atom: Atom, fact: Fact, subst: Substitution) -> Optional[Substitution]:
    if atom.predicate != fact.predicate or len(atom.terms) != len(fact.terms):
        return None
    out = dict(subst)
    for t, value in zip(atom.terms, fact.terms):
        if isinstance(t, Variable):
            bound = out.get(t.name)
            if bound is None:
                out[t.name] = value
            elif bound != value:
                return None
        elif t != value:
            return None
    return out


def _candidates(atom: Atom, subst: Substitution, instance: Instance) -> Tuple[Fact, ...]:
    for pos, t in enumerate(atom.terms):
        if isinstance(t, Variable):
            if t.name in subst:
                return instance.lookup(atom.predicate, pos, subst[t.name])
        else:
            return instance.lookup(atom.predicate, pos, t)
    return instance.facts_of(atom.predicate)


class Chase:
    """Chase engine for one program.

    ``trace`` receives every recorded application. ``order_seed`` shuffles rule
    and unifier order, which is only useful for checking order independence.
    """

    def __init__(
        self,
        program: Program,
        *,
        step_budget: int = 200000,
        relax_aggregate_strata: bool = False,
        trace: Optional[Callable[[RuleApplication], None]] = None,
        order_seed: Optional[int] = None,
    ):
        self.program = program
        self.report = require_valid(program, relax_aggregate_strata)
        self.step_budget = step_budget
        self.trace = trace
        self._rng = np.random.default_rng(order_seed) if order_seed is not None else None
        self._rules = {rule.rule_id: rule for rule in program.rules}

        by_stratum: Dict[int, List[Rule]] = {}
        for rule in program.rules:
            by_stratum.setdefault(self.report.stratification.rule_stratum(rule), []).append(rule)
        self.strata: List[List[Rule]] = [by_stratum[k] for k in sorted(by_stratum)]
        self._hard_strata = [[r for r in s if r.is_hard] for s in self.strata]
        self._hard_strata = [s for s in self._hard_strata if s]
        self._retracting = self._nonmonotone_predicates(program)

    @staticmethod
    def _nonmonotone_predicates(program: Program) -> Set[str]:
        """Predicates whose growth can invalidate a hard consequence already derived.

        These are the predicates read under negation or by an aggregate in a hard
        rule, plus every predicate that reaches one of them through hard rules.
        """
        found: Set[str] = set()
        for rule in program.hard_rules:
            found.update(atom.predicate for atom in rule.negated_atoms)
            if rule.aggregates:
                found.update(atom.predicate for atom in rule.positive_atoms)
        changed = True
        while changed:
            changed = False
            for rule in program.hard_rules:
                if any(atom.predicate in found for atom in rule.head):
                    for atom in rule.positive_atoms:
                        if atom.predicate not in found:
                            found.add(atom.predicate)
                            changed = True
        return found

    def rule(self, rule_id: str) -> Rule:
        return self._rules[rule_id]

    # unifiers

    def _join(self, rule: Rule, instance: Instance, seed: Substitution,
              delta: Optional[Set[Fact]] = None) -> List[Tuple[Substitution, Tuple[Fact, ...]]]:
        atoms = rule.positive_atoms
        if not atoms:
            return [(dict(seed), ())]
        results: List[Tuple[Substitution, Tuple[Fact, ...]]] = []
        seen: Set[Tuple[Fact, ...]] = set()
        pools: Dict[str, List[Fact]] = {}
        if delta is not None:
            for fact in sorted(delta, key=lambda f: f.sort_key):
                pools.setdefault(fact.predicate, []).append(fact)

        def extend(index: int, subst: Substitution, chosen: Tuple[Fact, ...], pivot: int):
            if index == len(atoms):
                if chosen not in seen:
                    seen.add(chosen)
                    results.append((subst, chosen))
                return
            atom = atoms[index]
            if index == pivot:
                pool = pools.get(atom.predicate, ())
            else:
                pool = _candidates(atom, subst, instance)
            for fact in pool:
                extended = _unify(atom, fact, subst)
                if extended is not None:
                    extend(index + 1, extended, chosen + (fact,), pivot)

        if delta is None:
            extend(0, dict(seed), (), -1)
        else:
            for pivot in range(len(atoms)):
                extend(0, dict(seed), (), pivot)
        return results

    def _passes(self, rule: Rule, subst: Substitution, instance: Instance,
                bound: Iterable[str]) -> bool:
        bound = set(bound)
        for cond in rule.conditions:
            if condition_variables(cond) <= bound and not holds(cond, subst):
                return False
        for atom in rule.negated_atoms:
            if set(atom.variables()) <= bound and apply_substitution(atom, subst) in instance:
                return False
        return True

    def _passes_post(self, rule: Rule, subst: Substitution, instance: Instance,
                     pre_bound: Set[str]) -> bool:
        for cond in rule.conditions:
            if not condition_variables(cond) <= pre_bound and not holds(cond, subst):
                return False
        for atom in rule.negated_atoms:
            if set(atom.variables()) <= pre_bound:
                continue
            if apply_substitution(atom, subst) in instance:
                return False
        return True

    def applicable_unifiers(
        self,
        rule: Rule,
        instance: Instance,
        provenance: ProvenanceGraph,
        delta: Optional[Set[Fact]] = None,
    ) -> List[Unifier]:
        """Unifiers of the rule body that satisfy filters and negation and are not yet used."""
        if rule.aggregates:
            found = self._aggregate_unifiers(rule, instance)
        else:
            found = []
            positive = set(rule.body_variables)
            for subst, facts in self._join(rule, instance, {}, delta):
                if not self._passes(rule, subst, instance, positive):
                    continue
                bindings = tuple(sorted((v, subst[v]) for v in rule.body_variables))
                found.append(Unifier(bindings, facts, canonical_tuple_key(facts)))

        out: List[Unifier] = []
        keys: Set[Hashable] = set()
        for unifier in found:
            if unifier.key in keys or provenance.is_used(rule.rule_id, unifier.key):
                continue
            keys.add(unifier.key)
            out.append(unifier)
        if self._rng is not None:
            out = [out[i] for i in self._rng.permutation(len(out))]
        return out

    def _group_variables(self, rule: Rule) -> Tuple[str, ...]:
        results = {agg.result for agg in rule.aggregates}
        positive = {v for atom in rule.positive_atoms for v in atom.variables()}
        return tuple(v for v in rule.head_variables if v in positive and v not in results)

    def _aggregate_unifiers(self, rule: Rule, instance: Instance) -> List[Unifier]:
        group_vars = self._group_variables(rule)
        pre_bound = {v for atom in rule.positive_atoms for v in atom.variables()}
        groups: Dict[Tuple[Term, ...], List[Tuple[Substitution, Tuple[Fact, ...]]]] = {}
        for subst, facts in self._join(rule, instance, {}):
            if not self._passes(rule, subst, instance, pre_bound):
                continue
            groups.setdefault(tuple(subst[v] for v in group_vars), []).append((subst, facts))

        found: List[Unifier] = []
        for group_key, matches in groups.items():
            subst = dict(zip(group_vars, group_key))
            rejected = False
            for agg in rule.aggregates:
                value = self.evaluate_aggregate(agg, rule, instance, subst, matches)
                if value is None:
                    rejected = True
                    break
                subst[agg.result] = Constant(value)
            if rejected or not self._passes_post(rule, subst, instance, pre_bound):
                continue
            contributing = sorted({f for _, facts in matches for f in facts},
                                  key=lambda f: f.sort_key)
            key = ("agg", canonical_tuple_key(contributing),
                   tuple(repr(subst[a.result].value) for a in rule.aggregates))
            bindings = tuple(sorted(subst.items()))
            found.append(Unifier(bindings, tuple(contributing), key))
        found.sort(key=lambda u: tuple(t.sort_key for _, t in u.bindings))
        return found

    def _fold_matches(self, agg: AggregateBinding,
                      matches: Sequence[Tuple[Substitution, Tuple[Fact, ...]]]) -> Optional[float]:
        values: List[float] = []
        for subst, _ in matches:
            term = subst[agg.operand]
            if isinstance(term, Constant) and term.is_numeric():
                values.append(term.value)
            elif agg.operator != "count":
                logger.warning("Skipping non-numeric %s operand %s", agg.operator, term)
        return _fold(agg.operator, values, len(matches))

    def evaluate_aggregate(
        self,
        binding: AggregateBinding,
        rule: Rule,
        instance: Instance,
        prefix: Substitution,
        matches: Optional[Sequence[Tuple[Substitution, Tuple[Fact, ...]]]] = None,
    ) -> Optional[float]:
        """Aggregate value for the group selected by ``prefix``; ``None`` rejects the group.

        ``matches`` are the group's body matches when the caller already has them.
        An empty group sums and counts to 0; ``min`` and ``max`` reject it.
        """
        if matches is None:
            pre_bound = {v for atom in rule.positive_atoms for v in atom.variables()}
            matches = [
                (subst, facts)
                for subst, facts in self._join(rule, instance, dict(prefix))
                if self._passes(rule, subst, instance, pre_bound)
            ]
        if not matches:
            return 0.0 if binding.operator in ("sum", "count") else None
        return self._fold_matches(binding, matches)

    # steps

    def _resolve(self, rule: Rule, unifier: Union[Unifier, Substitution], instance: Instance,
                 provenance: ProvenanceGraph) -> Unifier:
        if isinstance(unifier, Unifier):
            if provenance.is_used(rule.rule_id, unifier.key):
                raise InapplicableUnifierError(f"{rule.rule_id} already fired on {unifier.key}")
            if not all(f in instance for f in unifier.body_facts):
                raise InapplicableUnifierError(f"{rule.rule_id}: matched facts are gone")
            return unifier
        wanted = {k: v for k, v in unifier.items() if k in rule.body_variables}
        for candidate in self.applicable_unifiers(rule, instance, provenance):
            if candidate.substitution == wanted:
                return candidate
        raise InapplicableUnifierError(f"no applicable unifier of {rule.rule_id} matches {wanted}")

    def apply_chase_step(self, rule: Rule, unifier: Union[Unifier, Substitution],
                         instance: Instance, provenance: ProvenanceGraph) -> RuleApplication:
        """Fire one rule application, inventing interned nulls for existential variables."""
        unifier = self._resolve(rule, unifier, instance, provenance)
        subst = unifier.substitution
        if rule.existentials:
            origin_terms = tuple(
                (name, instance.nulls.token(term)) for name, term in unifier.bindings
            )
            for name in sorted(rule.existentials):
                subst[name] = instance.nulls.null_for((rule.rule_id, origin_terms, name))
        head = tuple(apply_substitution(atom, subst) for atom in rule.head)
        new = tuple(f for f in head if instance.add(f))
        app = RuleApplication(
            rule.rule_id, unifier.bindings, unifier.body_facts, head, new, unifier.key, rule.weight
        )
        provenance.record(app)
        if self.trace is not None:
            self.trace(app)
        return app

    def _saturate(self, strata: List[List[Rule]], instance: Instance,
                  provenance: ProvenanceGraph, delta: Optional[Set[Fact]]) -> int:
        steps = 0
        since_start = set(delta) if delta is not None else None
        for rules in strata:
            round_delta = None if since_start is None else set(since_start)
            while True:
                added: List[Fact] = []
                ordered = list(rules)
                if self._rng is not None:
                    ordered = [ordered[i] for i in self._rng.permutation(len(ordered))]
                for rule in ordered:
                    if round_delta is not None and not round_delta and not rule.aggregates:
                        continue
                    found = self.applicable_unifiers(rule, instance, provenance, round_delta)
                    for unifier in found:
                        if provenance.is_used(rule.rule_id, unifier.key):
                            continue
                        steps += 1
                        if steps > self.step_budget:
                            raise StepBudgetExceeded(
                                f"chase exceeded the step budget of {self.step_budget}"
                            )
                        app = self.apply_chase_step(rule, unifier, instance, provenance)
                        added.extend(app.new_facts)
                if not added:
                    break
                if since_start is not None:
                    since_start.update(added)
                round_delta = set(added)
        return steps

    def close_under_hard_rules(self, instance: Instance, provenance: ProvenanceGraph,
                               delta: Optional[Iterable[Fact]] = None) -> Instance:
        """Saturate with hard rules only, stratum by stratum.

        With ``delta``, the first round of each stratum only joins through facts
        added since the call started.
        """
        steps = self._saturate(
            self._hard_strata, instance, provenance, None if delta is None else set(delta)
        )
        logger.debug("Hard closure took %d steps, %d facts", steps, len(instance))
        return instance

    def warded_chase(self, database: Instance) -> Tuple[Instance, ProvenanceGraph]:
        """Chase with every rule, ignoring weights."""
        instance = Instance(database.facts, nulls=NullFactory())
        provenance = ProvenanceGraph()
        steps = self._saturate(self.strata, instance, provenance, None)
        logger.info("Warded chase finished: %d steps, %d facts", steps, len(instance))
        return instance, provenance

    def initial_state(self, database: Instance) -> ChaseState:
        """The chase source: the database closed under hard rules."""
        state = ChaseState(Instance(database.facts, nulls=NullFactory()), ProvenanceGraph())
        self.close_under_hard_rules(state.instance, state.provenance)
        return state

    # soft transitions

    def is_productive(self, rule: Rule, unifier: Unifier, instance: Instance) -> bool:
        if rule.existentials:
            return True
        subst = unifier.substitution
        return any(apply_substitution(atom, subst) not in instance for atom in rule.head)

    def soft_candidates(self, instance: Instance,
                        provenance: ProvenanceGraph) -> Dict[str, List[Unifier]]:
        """Applicable, productive unifiers of every soft rule, keyed by rule id in program order."""
        out: Dict[str, List[Unifier]] = {}
        for rule in self.program.soft_rules:
            found = [
                u for u in self.applicable_unifiers(rule, instance, provenance)
                if self.is_productive(rule, u, instance)
            ]
            if found:
                out[rule.rule_id] = found
        return out

    def still_applicable(self, rule: Rule, unifier: Unifier, instance: Instance,
                         provenance: ProvenanceGraph) -> bool:
        if rule.aggregates:
            current = self.applicable_unifiers(rule, instance, provenance)
            return any(u.key == unifier.key for u in current)
        if provenance.is_used(rule.rule_id, unifier.key):
            return False
        if not all(f in instance for f in unifier.body_facts):
            return False
        subst = unifier.substitution
        if not self._passes(rule, subst, instance, set(rule.body_variables)):
            return False
        return self.is_productive(rule, unifier, instance)

    def undoable_applications(self, instance: Instance,
                              provenance: ProvenanceGraph) -> List[RuleApplication]:
        """Soft applications whose output no other soft application depends on."""
        out = []
        for app in provenance.soft_applications():
            if not app.new_facts or not all(f in instance for f in app.new_facts):
                continue
            if provenance.downstream(app) is not None:
                out.append(app)
        return out

    def undo_application(self, app: RuleApplication, instance: Instance,
                         provenance: ProvenanceGraph) -> Instance:
        """Retract a soft application and everything derived from it through hard rules.

        The instance is rebuilt from the database, the outputs of the remaining
        soft applications and a fresh hard closure; both arguments are updated
        in place.
        """
        undoable = {a.identity for a in self.undoable_applications(instance, provenance)}
        if app.identity not in undoable:
            raise NotUndoableError(f"application of {app.rule_id} cannot be undone")

        before = len(instance)
        self._rebuild(instance, provenance, skip=app.identity)
        logger.debug("Undid %s: %d facts removed", app.rule_id, before - len(instance))
        return instance

    def close_after_step(self, app: RuleApplication, instance: Instance,
                         provenance: ProvenanceGraph) -> Instance:
        """Hard closure after the soft application ``app``.

        When ``app`` adds facts that hard rules read under negation or aggregation,
        earlier hard consequences may no longer hold, so the instance is rebuilt
        from the database and the soft outputs. Otherwise the closure continues
        from the new facts.
        """
        if any(f.predicate in self._retracting for f in app.new_facts):
            self._rebuild(instance, provenance)
        else:
            self.close_under_hard_rules(instance, provenance, delta=app.new_facts)
        return instance

    def _rebuild(self, instance: Instance, provenance: ProvenanceGraph,
                 skip: Optional[Tuple[str, Hashable]] = None) -> None:
        """Recompute the hard closure of the database plus every soft output but ``skip``."""
        generated = provenance.generated_facts()
        base = Instance((f for f in instance.facts if f not in generated), nulls=instance.nulls)
        rebuilt = ProvenanceGraph()
        for kept in provenance.soft_applications():
            if kept.identity == skip:
                continue
            new = tuple(f for f in kept.head_facts if base.add(f))
            rebuilt.record(replace(kept, new_facts=new))
        self.close_under_hard_rules(base, rebuilt)
        instance.assign(base)
        provenance.assign(rebuilt)


def warded_chase(program: Program, database: Instance, **options) -> Instance:
    """Run the warded chase of ``program`` over ``database`` and return the result."""
    instance, _ = Chase(program, **options).warded_chase(database)
    return instance
