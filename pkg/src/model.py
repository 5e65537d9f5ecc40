"""Terms, atoms, rules, programs and instances.

Everything here is immutable except :class:`Instance`, which is the fact store
the chase mutates. Nulls are interned per session by a :class:`NullFactory`, so
replaying the same rule application always yields the same null.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, FrozenSet, Hashable, Iterable, Iterator, List, Optional, Tuple, Union

from .errors import SourceSpan, UnboundVariableError


_PLAIN_CONSTANT = re.compile(r"^[a-z][A-Za-z0-9_]*$")


@dataclass(frozen=True)
class Constant:
    value: Union[str, float]

    def __post_init__(self):
        if isinstance(self.value, int) and not isinstance(self.value, bool):
            object.__setattr__(self, "value", float(self.value))

    def is_numeric(self) -> bool:
        return isinstance(self.value, float)

    @cached_property
    def sort_key(self) -> tuple:
        if self.is_numeric():
            return (0, 0, self.value, "")
        return (0, 1, 0.0, self.value)

    def __str__(self) -> str:
        return format_constant(self.value)


@dataclass(frozen=True)
class Null:
    id: int

    @cached_property
    def sort_key(self) -> tuple:
        return (1, 0, float(self.id), "")

    def __str__(self) -> str:
        return f"_:v{self.id}"


@dataclass(frozen=True)
class Variable:
    name: str

    @cached_property
    def sort_key(self) -> tuple:
        return (2, 0, 0.0, self.name)

    def __str__(self) -> str:
        return self.name


Term = Union[Constant, Null, Variable]


def format_constant(value: Union[str, float]) -> str:
    if isinstance(value, float):
        if value.is_integer() and abs(value) < 1e15:
            return str(int(value))
        return repr(value)
    if _PLAIN_CONSTANT.match(value):
        return value
    return json.dumps(value, ensure_ascii=False)


@dataclass(frozen=True)
class Atom:
    predicate: str
    terms: Tuple[Term, ...] = ()

    @property
    def arity(self) -> int:
        return len(self.terms)

    def is_ground(self) -> bool:
        return not any(isinstance(t, Variable) for t in self.terms)

    def variables(self) -> Tuple[str, ...]:
        seen: List[str] = []
        for t in self.terms:
            if isinstance(t, Variable) and t.name not in seen:
                seen.append(t.name)
        return tuple(seen)

    def nulls(self) -> Tuple[Null, ...]:
        return tuple(t for t in self.terms if isinstance(t, Null))

    @cached_property
    def sort_key(self) -> tuple:
        return (self.predicate, tuple(t.sort_key for t in self.terms))

    def __str__(self) -> str:
        if not self.terms:
            return f"{self.predicate}()"
        return f"{self.predicate}({','.join(str(t) for t in self.terms)})"


Fact = Atom


# Filter expressions

@dataclass(frozen=True)
class Arithmetic:
    op: str
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True)
class Absolute:
    arg: "Expression"


Expression = Union[Constant, Variable, Arithmetic, Absolute]


@dataclass(frozen=True)
class Comparison:
    op: str
    left: Expression
    right: Expression


@dataclass(frozen=True)
class Condition:
    """Disjunction of comparisons; a plain filter has a single alternative."""

    alternatives: Tuple[Comparison, ...]


@dataclass(frozen=True)
class Negation:
    atom: Atom


@dataclass(frozen=True)
class AggregateBinding:
    """``result = operator(operand)`` evaluated per group of body matches."""

    result: str
    operator: str
    operand: str


Literal = Union[Atom, Negation, Condition, AggregateBinding]

AGGREGATE_OPERATORS = ("sum", "count", "min", "max")


def expression_variables(expr: Expression) -> Tuple[str, ...]:
    if isinstance(expr, Variable):
        return (expr.name,)
    if isinstance(expr, Arithmetic):
        return expression_variables(expr.left) + expression_variables(expr.right)
    if isinstance(expr, Absolute):
        return expression_variables(expr.arg)
    return ()


def condition_variables(cond: Condition) -> FrozenSet[str]:
    names: List[str] = []
    for comp in cond.alternatives:
        names.extend(expression_variables(comp.left))
        names.extend(expression_variables(comp.right))
    return frozenset(names)


@dataclass(frozen=True)
class Rule:
    body: Tuple[Literal, ...]
    head: Tuple[Atom, ...]
    existentials: FrozenSet[str] = frozenset()
    weight: float = math.inf
    rule_id: str = ""
    span: Optional[SourceSpan] = field(default=None, compare=False)

    @property
    def is_hard(self) -> bool:
        return self.weight == math.inf

    @property
    def is_soft(self) -> bool:
        return not self.is_hard

    @cached_property
    def positive_atoms(self) -> Tuple[Atom, ...]:
        return tuple(lit for lit in self.body if isinstance(lit, Atom))

    @cached_property
    def negated_atoms(self) -> Tuple[Atom, ...]:
        return tuple(lit.atom for lit in self.body if isinstance(lit, Negation))

    @cached_property
    def conditions(self) -> Tuple[Condition, ...]:
        return tuple(lit for lit in self.body if isinstance(lit, Condition))

    @cached_property
    def aggregates(self) -> Tuple[AggregateBinding, ...]:
        return tuple(lit for lit in self.body if isinstance(lit, AggregateBinding))

    @cached_property
    def body_variables(self) -> Tuple[str, ...]:
        """Variables bound by the body: positive atoms, then aggregate results."""
        names: List[str] = []
        for atom in self.positive_atoms:
            for name in atom.variables():
                if name not in names:
                    names.append(name)
        for agg in self.aggregates:
            if agg.result not in names:
                names.append(agg.result)
        return tuple(names)

    @cached_property
    def head_variables(self) -> Tuple[str, ...]:
        names: List[str] = []
        for atom in self.head:
            for name in atom.variables():
                if name not in names:
                    names.append(name)
        return tuple(names)

    @cached_property
    def frontier(self) -> FrozenSet[str]:
        return frozenset(self.head_variables) & frozenset(self.body_variables)

    def __str__(self) -> str:
        from .parser import format_rule

        return format_rule(self)


@dataclass
class Program:
    rules: Tuple[Rule, ...]
    arities: Dict[str, int] = field(default_factory=dict)

    @property
    def intensional(self) -> FrozenSet[str]:
        return frozenset(atom.predicate for rule in self.rules for atom in rule.head)

    @property
    def extensional(self) -> FrozenSet[str]:
        return frozenset(self.arities) - self.intensional

    @property
    def hard_rules(self) -> Tuple[Rule, ...]:
        return tuple(r for r in self.rules if r.is_hard)

    @property
    def soft_rules(self) -> Tuple[Rule, ...]:
        return tuple(r for r in self.rules if r.is_soft)


def apply_substitution(atom: Atom, substitution: Dict[str, Term]) -> Atom:
    terms: List[Term] = []
    for t in atom.terms:
        if isinstance(t, Variable):
            if t.name not in substitution:
                raise UnboundVariableError(f"variable {t.name} unbound in {atom}")
            terms.append(substitution[t.name])
        else:
            terms.append(t)
    return Atom(atom.predicate, tuple(terms))


class NullFactory:
    """Interns labeled nulls by the rule application that introduced them."""

    def __init__(self):
        self._next = 0
        self._by_origin: Dict[Hashable, Null] = {}
        self._digests: Dict[int, str] = {}

    @property
    def next_id(self) -> int:
        return self._next

    def null_for(self, origin: Hashable) -> Null:
        null = self._by_origin.get(origin)
        if null is None:
            null = Null(self._next)
            self._next += 1
            self._by_origin[origin] = null
            self._digests[null.id] = hashlib.sha256(repr(origin).encode()).hexdigest()[:24]
        return null

    def token(self, term: Term) -> Tuple[str, str]:
        """Session-independent token for a term; nulls map to their origin digest."""
        if isinstance(term, Null):
            digest = self._digests.get(term.id)
            return ("n", digest if digest is not None else f"#{term.id}")
        return term_token(term)


def term_token(term: Term) -> Tuple[str, str]:
    if isinstance(term, Constant):
        if term.is_numeric():
            return ("f", repr(term.value))
        return ("s", term.value)
    if isinstance(term, Variable):
        return ("v", term.name)
    return ("n", f"#{term.id}")


FactKey = Tuple[str, Tuple[Tuple[str, str], ...]]


def canonical_fact_key(fact: Fact, provenance: Optional[NullFactory] = None) -> FactKey:
    """Hashable key for a fact.

    Without provenance, nulls are renamed by first appearance, so two facts get
    equal keys iff they are isomorphic. With a :class:`NullFactory`, nulls are
    keyed by the application that introduced them.
    """
    if provenance is not None:
        return (fact.predicate, tuple(provenance.token(t) for t in fact.terms))
    return canonical_tuple_key((fact,))[0]


def canonical_tuple_key(facts: Iterable[Fact]) -> Tuple[FactKey, ...]:
    """Isomorphism key of a tuple of facts under one shared renaming of nulls."""
    names: Dict[int, str] = {}
    keys: List[FactKey] = []
    for fact in facts:
        tokens = []
        for t in fact.terms:
            if isinstance(t, Null):
                if t.id not in names:
                    names[t.id] = str(len(names))
                tokens.append(("n", names[t.id]))
            else:
                tokens.append(term_token(t))
        keys.append((fact.predicate, tuple(tokens)))
    return tuple(keys)


class Instance:
    """A set of ground facts with per-predicate and per-position indexes."""

    def __init__(self, facts: Iterable[Fact] = (), nulls: Optional[NullFactory] = None):
        self.nulls = nulls if nulls is not None else NullFactory()
        self._facts: set = set()
        self._by_predicate: Dict[str, set] = {}
        self._index: Dict[Tuple[str, int], Dict[Term, set]] = {}
        self._sorted: Dict[str, Tuple[Fact, ...]] = {}
        for fact in facts:
            self.add(fact)

    def add(self, fact: Fact) -> bool:
        if fact in self._facts:
            return False
        if not fact.is_ground():
            raise ValueError(f"cannot store non-ground fact {fact}")
        self._facts.add(fact)
        self._by_predicate.setdefault(fact.predicate, set()).add(fact)
        for pos, term in enumerate(fact.terms):
            self._index.setdefault((fact.predicate, pos), {}).setdefault(term, set()).add(fact)
        self._sorted.pop(fact.predicate, None)
        return True

    def remove(self, fact: Fact) -> bool:
        if fact not in self._facts:
            return False
        self._facts.discard(fact)
        self._by_predicate[fact.predicate].discard(fact)
        for pos, term in enumerate(fact.terms):
            self._index[(fact.predicate, pos)][term].discard(fact)
        self._sorted.pop(fact.predicate, None)
        return True

    def assign(self, other: "Instance") -> None:
        """Replace this instance's contents with ``other``'s, in place."""
        self._facts = set(other._facts)
        self._by_predicate = {p: set(s) for p, s in other._by_predicate.items()}
        self._index = {
            k: {t: set(s) for t, s in terms.items()} for k, terms in other._index.items()
        }
        self._sorted = dict(other._sorted)
        self.nulls = other.nulls

    def copy(self) -> "Instance":
        clone = Instance(nulls=self.nulls)
        clone.assign(self)
        return clone

    def facts_of(self, predicate: str) -> Tuple[Fact, ...]:
        cached = self._sorted.get(predicate)
        if cached is None:
            cached = tuple(sorted(self._by_predicate.get(predicate, ()), key=_fact_order))
            self._sorted[predicate] = cached
        return cached

    def lookup(self, predicate: str, position: int, term: Term) -> Tuple[Fact, ...]:
        bucket = self._index.get((predicate, position), {}).get(term)
        if not bucket:
            return ()
        return tuple(sorted(bucket, key=_fact_order))

    def predicates(self) -> List[str]:
        return sorted(p for p, s in self._by_predicate.items() if s)

    def sorted_facts(self) -> List[Fact]:
        return sorted(self._facts, key=_fact_order)

    @property
    def facts(self) -> FrozenSet[Fact]:
        return frozenset(self._facts)

    def __contains__(self, fact: object) -> bool:
        return fact in self._facts

    def __iter__(self) -> Iterator[Fact]:
        return iter(self.sorted_facts())

    def __len__(self) -> int:
        return len(self._facts)

    def __repr__(self) -> str:
        return f"Instance({len(self._facts)} facts)"


def _fact_order(fact: Fact) -> tuple:
    return fact.sort_key


def canonical_instance_key(instance: Instance) -> str:
    """Digest of the provenance-canonical keys of all facts in the instance."""
    keys = sorted(canonical_fact_key(f, instance.nulls) for f in instance.facts)
    return hashlib.sha256(repr(keys).encode()).hexdigest()


def isomorphism_classes(instance: Instance) -> FrozenSet[FactKey]:
    return frozenset(canonical_fact_key(f) for f in instance.facts)


@dataclass
class PKG:
    """A probabilistic knowledge graph: extensional facts plus a weighted program."""

    database: Instance
    program: Program
    name: str = ""
    metadata: Dict[str, Any] = field(default_factory=dict)
