"""Seed 04: Data fusion over copying providers

Demo data: three providers voting on one company's income. Accuracy and copy
likelihoods are soft ground rules.
"""

PROGRAM = """\
0.9 :: Accuracy(pa, income).
0.8 :: Accuracy(pb, income).
0.6 :: Accuracy(pc, income).
0.7 :: Copies(pc, pa, income).
0.4 :: Copies(pb, pc, income).
Copies(S, U, F) -> DoesCopy(S, F).
Vote(S, C, F, V), not DoesCopy(S, F), Accuracy(S, F) -> Value(C, F, V).
Copies(X, Z, F), Copies(Z, Y, F) -> Copies(X, Y, F).
"""

FACTS = """\
Vote(pa, acme, income, 100).
Vote(pb, acme, income, 120).
Vote(pc, acme, income, 100).
"""


def build():
    return {
        "seed": "data_fusion",
        "description": "Conflicting votes resolved by accuracy and copy detection",
        "program": PROGRAM,
        "facts": FACTS,
        "query": "value",
    }
