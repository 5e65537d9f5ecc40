import io

from ..chase import Chase
from ..helpers import chase_options, envelope, failure, load_pkg, param, settings_of
from ..mcmc import McmcConfig, diagnostics, mcmc_chase, write_sample_trace


def sample_chain(params):
    """Per-iteration chain trace as CSV"""
    try:
        pkg = load_pkg(params)
        settings = settings_of(params)
        config = McmcConfig(
            param(params, "iterations", settings.iterations),
            param(params, "jump_rate", settings.jump_rate),
            settings.seed if params.get("seed") is None else params["seed"],
            settings.backward_threshold,
        )
        samples = mcmc_chase(pkg, config, Chase(pkg.program, **chase_options(settings)))
        buffer = io.StringIO()
        write_sample_trace(samples, buffer)
        return envelope("sample", "pass", {
            "output": buffer.getvalue(),
            "diagnostics": diagnostics(samples),
        })
    except Exception as e:
        return failure("sample", e)
