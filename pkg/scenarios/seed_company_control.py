"""Seed 05: Company control over uncertain ownership"""

from src.model import format_constant

PROGRAM = """\
0.9 :: InputOwn(X, Y, S), 0 < S < 1 -> Own(X, Y, S).
0.1 :: InputOwn(X, Y, S), (S < 0 or S > 1) -> exists Z: Own(X, Y, Z), Unreliable(X, Y).
Own(X, Y, S), not Unreliable(X, Y), S > 0.5 -> Control(X, Y).
0.5 :: Own(X, Y, S), Unreliable(X, Y) -> Control(X, Y).
Control(X, Y), Own(Y, Z, S), not Unreliable(Y, Z), V = sum(S), V > 0.5 -> Control(X, Z).
0.3 :: Control(X, Y), Own(Y, Z, S), Unreliable(Y, Z) -> Control(X, Z).
Company(X) -> Control(X, X).
"""

DEFAULT_EDGES = (("a", "b", 0.6),)


def facts_for(edges, companies=()):
    names = set(companies)
    lines = []
    for owner, owned, share in edges:
        names.update((owner, owned))
        lines.append(
            f"InputOwn({format_constant(owner)}, {format_constant(owned)}, "
            f"{format_constant(float(share))})."
        )
    lines = [f"Company({format_constant(name)})." for name in sorted(names)] + lines
    return "".join(line + "\n" for line in lines)


def build(edges=DEFAULT_EDGES, companies=()):
    return {
        "seed": "company_control",
        "description": "Control through direct and aggregated indirect ownership",
        "program": PROGRAM,
        "facts": facts_for(edges, companies),
        "query": "control",
        "expected": {"control(a,b)": 0.710950},
    }
