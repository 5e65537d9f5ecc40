"""Surface syntax: programs, fact files, queries and answer serialization.

Program grammar, informally::

    statement  := [weight "::"] [body] "->" head "."  |  [weight "::"] head "."
    weight     := number | "inf" | "-inf"
    head       := ["exists" Var {"," Var} ":"] atom {"," atom}
    literal    := atom | "not" atom | Var "=" agg "(" Var ")" | comparison chain
                | "(" comparison {"or" comparison} ")"

Predicates are case-insensitive and stored lower-case. Variables start with an
upper-case letter or ``_``; constants are numbers, lower-case identifiers or
double-quoted strings. ``%``, ``#`` and ``//`` start comments.
"""

from __future__ import annotations

import csv
import io
import json
import math
import re
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple, Union

from .errors import Diagnostic, ParseError, SourceSpan
from .model import (
    AGGREGATE_OPERATORS,
    Absolute,
    AggregateBinding,
    Arithmetic,
    Atom,
    Comparison,
    Condition,
    Constant,
    Expression,
    Fact,
    Instance,
    Literal,
    Negation,
    Null,
    Program,
    Rule,
    Term,
    Variable,
    format_constant,
)

__all__ = [
    "SourceSpan",
    "parse_program",
    "parse_facts",
    "parse_query",
    "format_program",
    "format_rule",
    "format_facts",
    "serialize_answer",
]


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>(?:%|\#|//)[^\n]*)
  | (?P<num>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<str>"(?:[^"\\\n]|\\.)*")
  | (?P<var>(?:[A-Z]|_)[A-Za-z0-9_]*)
  | (?P<ident>[a-z][A-Za-z0-9_]*)
  | (?P<sym>::|->|<=|>=|!=|==|\|\||[(),.:<>=|+\-*/∨¬∃])
    """,
    re.VERBOSE,
)

_COMPARATORS = {"<", "<=", ">", ">=", "=", "!=", "=="}
_KEYWORDS = {"not", "exists", "or", "inf"}


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    span: SourceSpan


def _tokenize(text: str) -> List[Token]:
    tokens: List[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            span = SourceSpan(line, pos - line_start + 1, pos, pos + 1)
            raise ParseError(f"unexpected character {text[pos]!r}", span)
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            span = SourceSpan(line, pos - line_start + 1, pos, m.end())
            tokens.append(Token(kind, m.group(), span))
        newlines = m.group().count("\n")
        if newlines:
            line += newlines
            line_start = pos + m.group().rfind("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", SourceSpan(line, pos - line_start + 1, pos, pos)))
    return tokens


class _Parser:
    """Recursive-descent parser over a token list; backtracks only inside filters."""

    def __init__(self, text: str, arities: Optional[Dict[str, int]] = None):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.arities: Dict[str, int] = dict(arities or {})
        self._anonymous = 0

    # token helpers

    def peek(self, offset: int = 0) -> Token:
        index = min(self.pos + offset, len(self.tokens) - 1)
        return self.tokens[index]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def at(self, text: str, offset: int = 0) -> bool:
        tok = self.peek(offset)
        return tok.kind in ("sym", "ident") and tok.text == text

    def expect(self, text: str) -> Token:
        tok = self.peek()
        if not self.at(text):
            shown = tok.text or "end of input"
            raise ParseError(f"expected {text!r}, found {shown!r}", tok.span)
        return self.advance()

    def error(self, message: str, tok: Optional[Token] = None, code: str = "P100"):
        tok = tok or self.peek()
        return ParseError(message, tok.span, code)

    def skip_statement(self) -> None:
        while self.peek().kind != "eof":
            if self.advance().text == "." and self.tokens[self.pos - 1].kind == "sym":
                return

    # statements

    def statement(self, index: int) -> Rule:
        start = self.peek().span
        weight = math.inf
        if self._weight_ahead():
            weight = self.weight()
            self.expect("::")

        body: List[Literal] = []
        head: List[Atom] = []
        declared: List[str] = []
        if self.at("exists") or self.at("∃"):
            declared, head = self.head()
        elif self.at("->"):
            self.advance()
            declared, head = self.head()
        else:
            body = self.literals()
            if self.at("->"):
                self.advance()
                declared, head = self.head()
            else:
                if not all(isinstance(lit, Atom) for lit in body):
                    raise self.error("expected '->' after rule body")
                head, body = list(body), []
        self.expect(".")

        span = SourceSpan(start.line, start.column, start.start, self.tokens[self.pos - 1].span.end)
        return self._build_rule(body, head, declared, weight, f"r{index}", span)

    def _weight_ahead(self) -> bool:
        offset = 1 if self.at("-") or self.at("+") else 0
        tok = self.peek(offset)
        if tok.kind == "num" or (tok.kind == "ident" and tok.text == "inf"):
            return self.at("::", offset + 1)
        return False

    def weight(self) -> float:
        sign = 1.0
        if self.at("-") or self.at("+"):
            sign = -1.0 if self.advance().text == "-" else 1.0
        tok = self.advance()
        value = math.inf if tok.text == "inf" else float(tok.text)
        return sign * value

    def head(self) -> Tuple[List[str], List[Atom]]:
        declared: List[str] = []
        if self.at("exists") or self.at("∃"):
            self.advance()
            while True:
                tok = self.advance()
                if tok.kind != "var":
                    raise self.error("expected an existential variable", tok)
                declared.append(tok.text)
                if not self.at(","):
                    break
                self.advance()
            self.expect(":")
        atoms = [self.atom()]
        while self.at(","):
            self.advance()
            atoms.append(self.atom())
        return declared, atoms

    def _build_rule(self, body, head, declared, weight, rule_id, span) -> Rule:
        if weight != weight:
            raise ParseError("rule weight is not a number", span)
        bound = set()
        for lit in body:
            if isinstance(lit, Atom):
                bound.update(lit.variables())
            elif isinstance(lit, AggregateBinding):
                bound.add(lit.result)
        for name in declared:
            if name in bound:
                raise ParseError(f"existential variable {name} also occurs in the body", span)
        existentials = set(declared)
        for atom in head:
            for name in atom.variables():
                if name not in bound:
                    existentials.add(name)
        return Rule(tuple(body), tuple(head), frozenset(existentials), weight, rule_id, span)

    # literals

    def literals(self) -> List[Literal]:
        out: List[Literal] = []
        while True:
            out.extend(self.literal())
            if not self.at(","):
                return out
            self.advance()

    def literal(self) -> List[Literal]:
        tok = self.peek()
        if self.at("not") or self.at("¬"):
            self.advance()
            return [Negation(self.atom())]
        if (
            tok.kind == "var"
            and self.at("=", 1)
            and self.peek(2).kind == "ident"
            and self.peek(2).text in AGGREGATE_OPERATORS
            and self.at("(", 3)
        ):
            return [self.aggregate()]
        if tok.kind in ("ident", "var") and self.at("(", 1):
            return [self.atom()]
        if tok.kind == "ident" and tok.text not in _KEYWORDS:
            follow = self.peek(1)
            if follow.kind == "eof" or follow.text in (",", ".", "->"):
                return [self.atom()]
        if self.at("("):
            saved = self.pos
            try:
                return [self.disjunction()]
            except ParseError:
                self.pos = saved
        return self.comparison_chain()

    def aggregate(self) -> AggregateBinding:
        result = self.advance().text
        self.expect("=")
        operator = self.advance().text
        self.expect("(")
        tok = self.advance()
        if tok.kind != "var":
            raise self.error("aggregate operand must be a variable", tok)
        self.expect(")")
        return AggregateBinding(result, operator, tok.text)

    def disjunction(self) -> Condition:
        self.expect("(")
        alternatives = [self._single_comparison()]
        while self.at("or") or self.at("∨") or self.at("||"):
            self.advance()
            alternatives.append(self._single_comparison())
        self.expect(")")
        return Condition(tuple(alternatives))

    def _single_comparison(self) -> Comparison:
        chain = self.comparison_chain()
        if len(chain) != 1:
            raise self.error("chained comparisons are not allowed inside a disjunction")
        return chain[0].alternatives[0]

    def comparison_chain(self) -> List[Condition]:
        left = self.expression()
        out: List[Condition] = []
        while self.peek().kind == "sym" and self.peek().text in _COMPARATORS:
            op = self.advance().text
            op = "=" if op == "==" else op
            right = self.expression()
            out.append(Condition((Comparison(op, left, right),)))
            left = right
        if not out:
            raise self.error("expected a comparison operator")
        return out

    def expression(self) -> Expression:
        expr = self._product()
        while self.at("+") or self.at("-"):
            op = self.advance().text
            expr = Arithmetic(op, expr, self._product())
        return expr

    def _product(self) -> Expression:
        expr = self._factor()
        while self.at("*") or self.at("/"):
            op = self.advance().text
            expr = Arithmetic(op, expr, self._factor())
        return expr

    def _factor(self) -> Expression:
        tok = self.peek()
        if self.at("-"):
            self.advance()
            if self.peek().kind == "num":
                return Constant(-float(self.advance().text))
            return Arithmetic("-", Constant(0.0), self._factor())
        if self.at("("):
            self.advance()
            expr = self.expression()
            self.expect(")")
            return expr
        if self.at("|"):
            self.advance()
            expr = self.expression()
            self.expect("|")
            return Absolute(expr)
        if tok.kind == "var":
            return self.term()
        if tok.kind in ("num", "str", "ident") and tok.text not in _KEYWORDS:
            return self.term()
        raise self.error(f"unexpected token {tok.text or 'end of input'!r} in expression")

    # atoms and terms

    def atom(self) -> Atom:
        tok = self.advance()
        if tok.kind not in ("ident", "var") or tok.text in _KEYWORDS:
            raise self.error(f"expected a predicate, found {tok.text or 'end of input'!r}", tok)
        predicate = tok.text.lower()
        terms: List[Term] = []
        if self.at("("):
            self.advance()
            if not self.at(")"):
                terms.append(self.term())
                while self.at(","):
                    self.advance()
                    terms.append(self.term())
            self.expect(")")
        known = self.arities.setdefault(predicate, len(terms))
        if known != len(terms):
            raise ParseError(
                f"predicate {predicate} used with arity {len(terms)}, expected {known}",
                tok.span,
                code="P101",
            )
        return Atom(predicate, tuple(terms))

    def term(self) -> Term:
        tok = self.advance()
        if tok.kind == "sym" and tok.text in ("-", "+") and self.peek().kind == "num":
            value = float(self.advance().text)
            return Constant(-value if tok.text == "-" else value)
        if tok.kind == "num":
            return Constant(float(tok.text))
        if tok.kind == "str":
            return Constant(json.loads(tok.text))
        if tok.kind == "ident":
            return Constant(tok.text)
        if tok.kind == "var":
            if tok.text == "_":
                self._anonymous += 1
                return Variable(f"_{self._anonymous}")
            return Variable(tok.text)
        raise self.error(f"expected a term, found {tok.text or 'end of input'!r}", tok)


def parse_program(text: str) -> Program:
    """Parse a weighted program; raises :class:`ParseError` listing every bad statement."""
    parser = _Parser(text)
    rules: List[Rule] = []
    diagnostics: List[Diagnostic] = []
    while parser.peek().kind != "eof":
        try:
            rules.append(parser.statement(len(rules) + len(diagnostics) + 1))
        except ParseError as e:
            diagnostics.append(Diagnostic(e.code, e.message, e.span))
            parser.skip_statement()
    if diagnostics:
        first = diagnostics[0]
        raise ParseError(first.message, first.span, first.code, diagnostics)
    return Program(tuple(rules), dict(parser.arities))


def parse_facts(text: str, format: str = "datalog",
                arities: Optional[Dict[str, int]] = None) -> Instance:
    """Parse a ground fact file into a fresh :class:`Instance`."""
    if format == "csv":
        return _parse_csv_facts(text, arities)
    if format != "datalog":
        raise ParseError(f"unknown fact format {format!r}", code="P102")

    parser = _Parser(text, arities)
    instance = Instance()
    while parser.peek().kind != "eof":
        if parser._weight_ahead():
            raise parser.error("weights are not allowed in fact files", code="P102")
        start = parser.peek()
        atom = parser.atom()
        parser.expect(".")
        if not atom.is_ground():
            raise ParseError(f"fact {atom} is not ground", start.span, code="P103")
        instance.add(atom)
    return instance


def _parse_csv_facts(text: str, arities: Optional[Dict[str, int]]) -> Instance:
    rows = [row for row in csv.reader(io.StringIO(text)) if row and any(c.strip() for c in row)]
    if not rows:
        return Instance()
    header = rows[0][0].strip()
    if ":" in header:
        name, _, arity_text = header.partition(":")
        try:
            arity = int(arity_text)
        except ValueError:
            raise ParseError(f"bad arity in CSV header {header!r}", SourceSpan(1, 1, 0, 0), "P102")
    else:
        name, arity = header, None
    predicate = name.strip().lower()
    if not re.match(r"^[a-z][a-z0-9_]*$", predicate):
        raise ParseError(f"bad predicate in CSV header {header!r}", SourceSpan(1, 1, 0, 0), "P102")
    if arities and predicate in arities:
        arity = arities[predicate] if arity is None else arity
        if arities[predicate] != arity:
            raise ParseError(
                f"predicate {predicate} has arity {arities[predicate]}, CSV declares {arity}",
                SourceSpan(1, 1, 0, 0),
                "P101",
            )

    instance = Instance()
    for line_no, row in enumerate(rows[1:], start=2):
        if arity is None:
            arity = len(row)
        if len(row) != arity:
            raise ParseError(
                f"expected {arity} columns, found {len(row)}",
                SourceSpan(line_no, 1, 0, 0),
                "P102",
            )
        instance.add(Atom(predicate, tuple(_csv_constant(cell) for cell in row)))
    return instance


def _csv_constant(cell: str) -> Constant:
    cell = cell.strip()
    try:
        return Constant(float(cell))
    except ValueError:
        return Constant(cell)


def parse_query(text: str, arities: Optional[Dict[str, int]] = None) -> Union[str, Rule]:
    """A bare predicate name, or a single rule-form conjunctive query."""
    stripped = text.strip()
    if re.match(r"^[A-Za-z][A-Za-z0-9_]*$", stripped):
        return stripped.lower()
    if not stripped.endswith("."):
        stripped += "."
    parser = _Parser(stripped, arities)
    rule = parser.statement(0)
    if parser.peek().kind != "eof":
        raise parser.error("a query must be a single rule")
    if len(rule.head) != 1 or rule.is_soft:
        raise ParseError("a query must be a hard rule with one head atom", rule.span)
    return rule


# formatting

_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2}


def format_term(term: Term, names: Optional[Dict[int, str]] = None) -> str:
    if isinstance(term, Null) and names is not None:
        if term.id not in names:
            names[term.id] = f"_:n{len(names)}"
        return names[term.id]
    return str(term)


def format_atom(atom: Atom, names: Optional[Dict[int, str]] = None) -> str:
    return f"{atom.predicate}({','.join(format_term(t, names) for t in atom.terms)})"


def _format_expression(expr: Expression, min_prec: int = 0) -> str:
    if isinstance(expr, Arithmetic):
        prec = _PRECEDENCE[expr.op]
        text = (
            f"{_format_expression(expr.left, prec)} {expr.op} "
            f"{_format_expression(expr.right, prec + 1)}"
        )
        return f"({text})" if prec < min_prec else text
    if isinstance(expr, Absolute):
        return f"|{_format_expression(expr.arg)}|"
    if isinstance(expr, Constant):
        return format_constant(expr.value)
    return str(expr)


def _format_comparison(comp: Comparison) -> str:
    return f"{_format_expression(comp.left)} {comp.op} {_format_expression(comp.right)}"


def _format_literal(lit: Literal) -> str:
    if isinstance(lit, Atom):
        return format_atom(lit)
    if isinstance(lit, Negation):
        return f"not {format_atom(lit.atom)}"
    if isinstance(lit, AggregateBinding):
        return f"{lit.result} = {lit.operator}({lit.operand})"
    if len(lit.alternatives) == 1:
        return _format_comparison(lit.alternatives[0])
    return "(" + " or ".join(_format_comparison(c) for c in lit.alternatives) + ")"


def _format_weight(weight: float) -> str:
    if weight == -math.inf:
        return "-inf"
    return repr(float(weight))


def format_rule(rule: Rule) -> str:
    prefix = "" if rule.is_hard else f"{_format_weight(rule.weight)} :: "
    head = ", ".join(format_atom(a) for a in rule.head)
    if rule.existentials:
        head = f"exists {', '.join(sorted(rule.existentials))}: {head}"
    if not rule.body:
        return f"{prefix}{head}."
    body = ", ".join(_format_literal(lit) for lit in rule.body)
    return f"{prefix}{body} -> {head}."


def format_program(program: Program) -> str:
    return "".join(format_rule(rule) + "\n" for rule in program.rules)


def _answer_order(fact: Fact) -> tuple:
    shape = tuple((1, 0, 0.0, "") if isinstance(t, Null) else t.sort_key for t in fact.terms)
    return (fact.predicate, shape, fact.sort_key)


def format_facts(facts: Iterable[Fact]) -> List[str]:
    """Render facts in canonical order, naming nulls ``_:n0, _:n1, ...`` by first appearance."""
    names: Dict[int, str] = {}
    return [format_atom(f, names) for f in sorted(facts, key=_answer_order)]


def serialize_answer(rows: Iterable[Tuple[Fact, float]], fmt: str = "tsv") -> str:
    """One ``fact<sep>probability`` line per answer, probabilities to six decimals."""
    ordered = sorted(rows, key=lambda row: _answer_order(row[0]))
    names: Dict[int, str] = {}
    rendered = [(format_atom(fact, names), f"{prob:.6f}") for fact, prob in ordered]
    if fmt == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerows(rendered)
        return buffer.getvalue()
    if fmt != "tsv":
        raise ValueError(f"unknown answer format {fmt!r}")
    return "".join(f"{fact}\t{prob}\n" for fact, prob in rendered)

