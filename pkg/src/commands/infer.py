from ..analysis import rewrite_query
from ..chase import Chase
from ..errors import ConfigError
from ..helpers import chase_options, envelope, failure, load_pkg, param, settings_of
from ..mcmc import McmcConfig, diagnostics, estimated_answer, mcmc_chase
from ..model import PKG
from ..network import answer_query
from ..parser import parse_query, serialize_answer


def infer_marginals(params):
    """Marginal probabilities of the query answers"""
    try:
        pkg = load_pkg(params)
        settings = settings_of(params)
        query_text = params.get("query") or pkg.metadata.get("query")
        if not query_text:
            raise ConfigError("Provide --query")
        query = parse_query(query_text, pkg.program.arities)
        mode = params.get("mode") or "exact"
        options = chase_options(settings)
        data = {"mode": mode}

        if mode == "exact":
            budget = param(params, "budget", settings.grounding_budget)
            rows = answer_query(pkg, query, budget, options)
        elif mode == "mcmc":
            rewrite = rewrite_query(pkg.program, query)
            augmented = PKG(pkg.database, rewrite.program, pkg.name)
            config = McmcConfig(
                param(params, "iterations", settings.iterations),
                param(params, "jump_rate", settings.jump_rate),
                settings.seed if params.get("seed") is None else params["seed"],
                settings.backward_threshold,
            )
            samples = mcmc_chase(augmented, config, Chase(augmented.program, **options))
            rows = estimated_answer(samples, rewrite.predicate)
            data["diagnostics"] = diagnostics(samples)
        else:
            raise ConfigError(f"Unknown mode {mode!r}; use exact or mcmc")

        data["output"] = serialize_answer(rows, params.get("format") or "tsv")
        data["answers"] = len(rows)
        return envelope("infer", "pass", data)
    except Exception as e:
        return failure("infer", e)
