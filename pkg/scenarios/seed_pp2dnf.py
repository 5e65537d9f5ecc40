"""Seed 06: Counting PP2DNF models through a zero-weight program"""

PROGRAM = """\
0 :: R(X) -> Rp(X).
0 :: T(Y) -> Tp(Y).
Rp(X), S(X, Y), Tp(Y) -> Q().
"""


def facts_for(n, edges, n_y=None):
    n_y = n if n_y is None else n_y
    lines = [f"R(x{i})." for i in range(1, n + 1)]
    lines += [f"T(y{j})." for j in range(1, n_y + 1)]
    lines += [f"S(x{i}, y{j})." for i, j in sorted(set(edges))]
    return "".join(line + "\n" for line in lines)


def build(n=2, edges=((1, 1),), n_y=None):
    return {
        "seed": "pp2dnf",
        "description": "Marginal of q() equals the model count over 2^(n + n_y)",
        "program": PROGRAM,
        "facts": facts_for(n, edges, n_y),
        "query": "q",
        "expected": {"q": 0.25},
    }
