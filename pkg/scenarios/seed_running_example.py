"""Seed 01: Lending contracts and guarantees - the running example"""

PROGRAM = """\
% Soft rules carry a weight; the last rule is hard.
0.9 :: LenderType(X, Y), RegulatoryRestriction(Y, Z) -> exists V: Guarantee(X, Z, V).
0.8 :: LenderType(X, Y), LenderClass(Y, Z) -> LenderType(X, Z).
0.7 :: Contract(X, Y, Z), Exposure(Y, W) -> Contract(Z, W, X).
Contract(X, Y, Z), RegulatoryRestriction(W, Y) -> LenderType(X, W).
"""

FACTS = """\
Contract(a, b, c).
Exposure(b, l).
RegulatoryRestriction(m, l).
LenderClass(m, n).
"""


def build():
    return {
        "seed": "running_example",
        "description": "Contracts, lender types and guarantees with three soft rules",
        "program": PROGRAM,
        "facts": FACTS,
        "query": "contract",
        "expected": {"worlds": 5, "contract(c,l,a)": 0.986262},
    }
