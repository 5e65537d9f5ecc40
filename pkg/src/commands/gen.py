import io

from ..bench.generator import ScaleFreeParams, gen_scale_free, topology, write_edges_csv
from ..helpers import envelope, failure, param, settings_of


def generate_graph(params):
    """Scale-free ownership edge list as CSV"""
    try:
        settings = settings_of(params)
        n = param(params, "nodes", 100)
        if params.get("alpha") is not None:
            graph_params = ScaleFreeParams(n, params["alpha"], params["beta"], params["gamma"])
        else:
            graph_params = topology(params.get("topology") or "base", n)
        seed = settings.seed if params.get("seed") is None else params["seed"]
        edges = gen_scale_free(graph_params, seed, param(params, "corruption", 0.0))
        buffer = io.StringIO()
        write_edges_csv(edges, buffer)
        return envelope("gen", "pass", {"output": buffer.getvalue(), "edges": len(edges)})
    except Exception as e:
        return failure("gen", e)
