"""Seed 03: Record linkage between company registries"""

from src.model import format_constant

PROGRAM = """\
0.5 :: Company(X), Industry(X, Z), Company(Y), Industry(Y, Z) -> Match(X, Y).
0.3 :: Company(X), Size(X, Z), Company(Y), Size(Y, W), SameSize(Z, W) -> Match(X, Y).
0.9 :: Company(X), Company(Y), Size(X, Z), Size(Y, W), |Z - W| < {epsilon} -> SameSize(Z, W).
Company(X) -> exists Z: Group(X, Z).
Company(X), Company(Y), Subsidiary(X, Y), Group(Y, Z) -> Group(X, Z).
0.7 :: Company(X), Company(Y), Group(X, Z), Group(Y, Z),
    Industry(X, W), Industry(Y, W) -> SameSize(X, Y).
"""

FACTS = """\
Company(acme).
Company(acme_holding).
Industry(acme, steel).
Industry(acme_holding, steel).
Size(acme, 40).
Size(acme_holding, 45).
Subsidiary(acme, acme_holding).
"""


def build(epsilon=10):
    return {
        "seed": "record_linkage",
        "description": "Matching companies on industry, size and group membership",
        "program": PROGRAM.replace("{epsilon}", format_constant(float(epsilon))),
        "facts": FACTS,
        "query": "match",
        "expected": {"soft_rules": 4, "hard_rules": 2},
    }
