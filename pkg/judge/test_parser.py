"""Program, fact and query parsing"""

import math

import pytest

from src.bench.programs import BUILTIN_SCENARIOS, load_scenario
from src.errors import ParseError
from src.model import AggregateBinding, Atom, Condition, Constant, Negation, Null, Variable
from src.parser import (
    format_facts,
    format_program,
    parse_facts,
    parse_program,
    parse_query,
    serialize_answer,
)


class TestProgramParsing:

    def setup_method(self):
        self.running = parse_program(load_scenario("running-example")["program"])

    def test_running_example_rules(self):
        rules = self.running.rules
        assert [r.rule_id for r in rules] == ["r1", "r2", "r3", "r4"]
        assert [r.weight for r in rules[:3]] == [0.9, 0.8, 0.7]
        assert rules[3].is_hard and math.isinf(rules[3].weight)
        assert rules[0].existentials == frozenset({"V"})
        assert rules[0].head == (Atom("guarantee", (Variable("X"), Variable("Z"), Variable("V"))),)

    def test_predicates_are_lower_cased_with_arities(self):
        assert self.running.arities["regulatoryrestriction"] == 2
        assert self.running.arities["contract"] == 3
        assert "lenderclass" in self.running.extensional
        assert "guarantee" in self.running.intensional

    def test_head_only_variables_are_existential(self):
        program = parse_program("p(X) -> q(X, Y).")
        assert program.rules[0].existentials == frozenset({"Y"})

    def test_existential_in_body_is_rejected(self):
        with pytest.raises(ParseError):
            parse_program("p(X, Y) -> exists Y: q(X, Y).")

    def test_filters_negation_and_aggregates(self):
        program = parse_program(
            "own(X, Y, S), not bad(X), V = sum(S), 0 < S < 1, (S < 0 or S > 1) -> c(X, V)."
        )
        body = program.rules[0].body
        assert isinstance(body[1], Negation)
        assert body[2] == AggregateBinding("V", "sum", "S")
        conditions = [lit for lit in body if isinstance(lit, Condition)]
        assert len(conditions) == 3, "a chained comparison becomes two filters plus one disjunction"
        assert len(conditions[2].alternatives) == 2

    def test_empty_bodies_and_zero_arity_atoms(self):
        program = parse_program("0.8 :: accuracy(a, income).\nr(X), s(X) -> q().\nflag.")
        soft, rule, flag = program.rules
        assert soft.is_soft and soft.body == () and soft.weight == 0.8
        assert rule.head == (Atom("q"),)
        assert flag.head == (Atom("flag"),) and flag.is_hard

    def test_multi_atom_heads(self):
        program = parse_program("in(X, Y) -> exists Z: own(X, Y, Z), unreliable(X, Y).")
        assert len(program.rules[0].head) == 2
        assert program.rules[0].existentials == frozenset({"Z"})

    def test_negative_weights_and_numbers(self):
        program = parse_program("-1.5 :: p(X) -> q(X, -2).")
        assert program.rules[0].weight == -1.5
        assert program.rules[0].head[0].terms[1] == Constant(-2.0)

    def test_arity_mismatch(self):
        with pytest.raises(ParseError) as info:
            parse_program("p(X) -> q(X).\nq(X, Y) -> r(X).")
        assert info.value.code == "P101"
        assert info.value.span.line == 2, f"span should point at line 2, got {info.value.span}"

    def test_every_bad_statement_is_reported(self):
        with pytest.raises(ParseError) as info:
            parse_program("p(X) -> .\nq(X) -> r(X).\ns(X) r(X).")
        assert len(info.value.diagnostics) == 2, [d.as_line() for d in info.value.diagnostics]
        assert [d.span.line for d in info.value.diagnostics] == [1, 3]

    @pytest.mark.parametrize("name", sorted(BUILTIN_SCENARIOS))
    def test_serialization_round_trip(self, name):
        program = parse_program(load_scenario(name)["program"])
        again = parse_program(format_program(program))
        assert again.rules == program.rules, f"{name} does not survive format_program"


class TestFactParsing:

    def test_datalog_facts(self):
        instance = parse_facts("own(a, b, 0.5).\nown(b, c, 1).")
        assert len(instance) == 2
        assert Atom("own", (Constant("b"), Constant("c"), Constant(1.0))) in instance

    def test_weights_are_not_allowed(self):
        with pytest.raises(ParseError) as info:
            parse_facts("0.5 :: own(a, b, 0.5).")
        assert info.value.code == "P102"

    def test_facts_must_be_ground(self):
        with pytest.raises(ParseError) as info:
            parse_facts("own(a, X, 0.5).")
        assert info.value.code == "P103"

    def test_csv_facts(self):
        instance = parse_facts("own:3\na,b,0.5\nb,c,0.25\n", format="csv")
        assert Atom("own", (Constant("a"), Constant("b"), Constant(0.5))) in instance
        with pytest.raises(ParseError) as info:
            parse_facts("own:3\na,b\n", format="csv")
        assert info.value.code == "P102"

    def test_facts_respect_program_arities(self):
        with pytest.raises(ParseError) as info:
            parse_facts("own(a, b).", arities={"own": 3})
        assert info.value.code == "P101"


class TestQueriesAndOutput:

    def test_query_forms(self):
        assert parse_query("Contract") == "contract"
        rule = parse_query("own(X, Y, S), S > 0.5 -> big(X)")
        assert rule.head == (Atom("big", (Variable("X"),)),)
        with pytest.raises(ParseError):
            parse_query("0.5 :: own(X, Y, S) -> big(X)")

    def test_answer_serialization(self):
        rows = [(Atom("p", (Constant("b"),)), 0.25), (Atom("p", (Constant("a"),)), 1.0)]
        assert serialize_answer(rows) == "p(a)\t1.000000\np(b)\t0.250000\n"
        assert serialize_answer(rows, "csv") == "p(a),1.000000\np(b),0.250000\n"

    def test_nulls_are_named_by_first_appearance(self):
        instance = parse_facts("person(alice).")
        facts = list(instance.facts) + [
            Atom("hasmother", (Constant("alice"), Null(7))),
            Atom("hasmother", (Null(7), Null(3))),
        ]
        lines = format_facts(facts)
        assert lines == [
            "hasmother(alice,_:n0)",
            "hasmother(_:n0,_:n1)",
            "person(alice)",
        ], lines
