"""Brute-force reference implementations the engine is checked against."""

import itertools
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from src.analysis import analyze_program
from src.model import Atom, Constant, Fact, Instance, Null, Program, Variable, apply_substitution
from src.parser import parse_facts, parse_program


def _match(atom: Atom, fact: Fact, subst: dict) -> Optional[dict]:
    if atom.predicate != fact.predicate or atom.arity != fact.arity:
        return None
    out = dict(subst)
    for t, value in zip(atom.terms, fact.terms):
        if isinstance(t, Variable):
            if out.setdefault(t.name, value) != value:
                return None
        elif t != value:
            return None
    return out


def _matches(atoms: Sequence[Atom], facts: Iterable[Fact]) -> List[Tuple[dict, Tuple[Fact, ...]]]:
    facts = list(facts)
    results = [({}, ())]
    for atom in atoms:
        step = []
        for subst, chosen in results:
            for fact in facts:
                extended = _match(atom, fact, subst)
                if extended is not None:
                    step.append((extended, chosen + (fact,)))
        results = step
    return results


def reference_chase(program: Program, database: Instance, depth: int) -> Set[Fact]:
    """Oblivious chase of a negation-free program, cut after ``depth`` rounds.

    Every (rule, body tuple) fires once with fresh nulls; no isomorphism checks.
    """
    facts = set(database.facts)
    fired = set()
    counter = itertools.count(1_000_000)
    for _ in range(depth):
        new = set()
        snapshot = frozenset(facts)
        for rule in program.rules:
            assert not rule.negated_atoms and not rule.aggregates and not rule.conditions
            for subst, body in _matches(rule.positive_atoms, snapshot):
                if (rule.rule_id, body) in fired:
                    continue
                fired.add((rule.rule_id, body))
                full = dict(subst)
                for name in sorted(rule.existentials):
                    full[name] = Null(next(counter))
                for atom in rule.head:
                    fact = apply_substitution(atom, full)
                    if fact not in facts:
                        new.add(fact)
        if not new:
            break
        facts |= new
    return facts


def naive_fixpoint(program: Program, database: Instance) -> Set[Fact]:
    """Least model of a plain Datalog program by naive iteration."""
    assert not any(rule.existentials for rule in program.rules)
    return reference_chase(program, database, depth=10_000)


def isomorphic(left: Fact, right: Fact) -> bool:
    """Search for a null bijection making the two facts equal."""
    if left.predicate != right.predicate or left.arity != right.arity:
        return False
    forward: Dict[Null, Null] = {}
    backward: Dict[Null, Null] = {}
    for a, b in zip(left.terms, right.terms):
        if isinstance(a, Null) != isinstance(b, Null):
            return False
        if not isinstance(a, Null):
            if a != b:
                return False
            continue
        if forward.setdefault(a, b) != b or backward.setdefault(b, a) != a:
            return False
    return True


def random_fact(rng: np.random.Generator, predicate: str = "p", arity: int = 3) -> Fact:
    terms = []
    for _ in range(arity):
        if rng.random() < 0.5:
            terms.append(Null(int(rng.integers(3))))
        else:
            terms.append(Constant(["a", "b"][int(rng.integers(2))]))
    return Atom(predicate, tuple(terms))


def pp2dnf_probability(n: int, edges: Iterable[Tuple[int, int]],
                       n_y: Optional[int] = None) -> float:
    """Fraction of assignments to x1..xn, y1..y_ny satisfying OR of (x_i AND y_j) over edges."""
    n_y = n if n_y is None else n_y
    edges = list(edges)
    total = n + n_y
    hits = 0
    for bits in itertools.product((False, True), repeat=total):
        xs, ys = bits[:n], bits[n:]
        if any(xs[i - 1] and ys[j - 1] for i, j in edges):
            hits += 1
    return hits / 2 ** total


_ARITIES = {"e": 2, "f": 1, "p": 2, "q": 1, "r": 2}
_IDB = ("p", "q", "r")
_VARIABLES = ("X", "Y", "Z")


def _random_atom(rng: np.random.Generator, predicates: Sequence[str]) -> str:
    name = predicates[int(rng.integers(len(predicates)))]
    terms = [_VARIABLES[int(rng.integers(len(_VARIABLES)))] for _ in range(_ARITIES[name])]
    return f"{name}({', '.join(terms)})"


def _random_rule(rng: np.random.Generator, existential: bool) -> str:
    body = [_random_atom(rng, list(_ARITIES)) for _ in range(int(rng.integers(1, 3)))]
    bound = sorted({v for atom in body for v in _VARIABLES if v in atom})
    head_name = _IDB[int(rng.integers(len(_IDB)))]
    terms = [bound[int(rng.integers(len(bound)))] for _ in range(_ARITIES[head_name])]
    prefix = ""
    if existential and rng.random() < 0.4:
        terms[int(rng.integers(len(terms)))] = "W"
        prefix = "exists W: "
    return f"{', '.join(body)} -> {prefix}{head_name}({', '.join(terms)})."


def random_program(rng: np.random.Generator, rules: int = 3, existential: bool = True) -> Program:
    """A small warded, stratified program without harmful joins."""
    while True:
        text = "\n".join(_random_rule(rng, existential) for _ in range(rules))
        program = parse_program(text)
        report = analyze_program(program)
        if report.ok and not report.warnings:
            return program


def _random_negated_rule(rng: np.random.Generator) -> str:
    positive = _random_atom(rng, list(_ARITIES))
    bound = sorted({v for v in _VARIABLES if v in positive})
    blocked = _IDB[int(rng.integers(len(_IDB)))]
    blocked_terms = [bound[int(rng.integers(len(bound)))] for _ in range(_ARITIES[blocked])]
    head_name = _IDB[int(rng.integers(len(_IDB)))]
    head_terms = [bound[int(rng.integers(len(bound)))] for _ in range(_ARITIES[head_name])]
    return (f"{positive}, not {blocked}({', '.join(blocked_terms)}) "
            f"-> {head_name}({', '.join(head_terms)}).")


def random_soft_program(rng: np.random.Generator, rules: int = 3) -> Program:
    """A stratified program mixing soft and hard rules, with one hard rule under negation."""
    while True:
        lines = []
        for _ in range(rules):
            rule = _random_rule(rng, existential=False)
            if rng.random() < 0.6:
                rule = f"{float(rng.uniform(0.2, 1.5)):.2f} :: {rule}"
            lines.append(rule)
        lines.append(_random_negated_rule(rng))
        program = parse_program("\n".join(lines))
        report = analyze_program(program)
        if report.ok and not report.warnings and program.soft_rules:
            return program

def random_database(rng: np.random.Generator, program: Program, facts: int = 6) -> Instance:
    constants = ("a", "b", "c")
    lines = []
    for _ in range(facts):
        name = ("e", "f")[int(rng.integers(2))]
        terms = [constants[int(rng.integers(len(constants)))] for _ in range(_ARITIES[name])]
        lines.append(f"{name}({', '.join(terms)}).")
    return parse_facts("\n".join(lines), arities=program.arities)


def total_variation(p: Dict, q: Dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)
