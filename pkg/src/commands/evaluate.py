import io

from ..bench.generator import read_edges_csv
from ..bench.programs import company_control_pkg
from ..helpers import (
    EXIT_BUDGET, EXIT_INPUT, envelope, failure, load_pkg, param, read_text, settings_of,
)
from ..orchestrator import evaluate, write_fact_rows_csv, write_report_csv


def run_evaluation(params):
    """Exact versus MCMC marginals, one report row per iteration multiplier"""
    try:
        settings = settings_of(params)
        if params.get("graph"):
            edges = read_edges_csv(io.StringIO(read_text(params["graph"])))
            pkg = company_control_pkg(edges)
            pkg.metadata["query"] = "control"
        else:
            pkg = load_pkg(params)
        query = params.get("query") or pkg.metadata.get("query")

        result = evaluate(
            pkg,
            multipliers=params.get("multipliers") or (1, 10, 100),
            repetitions=param(params, "repetitions", 5),
            seed=settings.seed if params.get("seed") is None else params["seed"],
            jump_rate=param(params, "jump_rate", settings.jump_rate),
            exact=not params.get("skip_exact"),
            predicate=query.lower() if query else None,
            budget=param(params, "budget", settings.grounding_budget),
            jobs=param(params, "jobs", settings.jobs),
            estimator=params.get("estimator") or "trajectory",
        )
        if result["status"] == "fail":
            code = EXIT_BUDGET if "aborted" in result["error"] else EXIT_INPUT
            return envelope("eval", "fail", {}, result["error"], code)

        reports = result["data"]["reports"]
        delimiter = "\t" if params.get("format") == "tsv" else ","
        buffer = io.StringIO()
        write_report_csv(reports, buffer, delimiter)
        if params.get("facts_report") and reports:
            buffer.write("\n")
            write_fact_rows_csv(reports[-1], buffer, delimiter)
        return envelope("eval", "pass", {
            "output": buffer.getvalue(),
            "reports": [r.as_dict() for r in reports],
        })
    except Exception as e:
        return failure("eval", e)
