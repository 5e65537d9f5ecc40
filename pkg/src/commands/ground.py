from ..chase import Chase
from ..helpers import chase_options, envelope, failure, load_pkg, param, settings_of
from ..network import ground_chase_network


def ground_network(params):
    """Full chase network with node weights and probabilities"""
    try:
        pkg = load_pkg(params)
        settings = settings_of(params)
        budget = param(params, "budget", settings.grounding_budget)
        chase = Chase(pkg.program, **chase_options(settings))
        network = ground_chase_network(pkg, budget, chase)
        return envelope("ground", "pass", {
            "output": network.dump(),
            "nodes": len(network),
            "edges": network.graph.number_of_edges(),
        })
    except Exception as e:
        return failure("ground", e)
