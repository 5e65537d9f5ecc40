"""Seed 02: Every person has a mother - an infinite chase made finite"""

PROGRAM = """\
Person(X) -> exists Z: HasMother(X, Z).
HasMother(X, Y) -> Person(Y).
"""

FACTS = """\
Person(alice).
"""


def build():
    return {
        "seed": "mother",
        "description": "Existential recursion cut by isomorphism checks",
        "program": PROGRAM,
        "facts": FACTS,
        "query": "hasmother",
        "expected": {"facts": 5},
    }
