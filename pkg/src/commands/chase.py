from ..chase import Chase
from ..helpers import chase_options, envelope, failure, load_pkg, settings_of
from ..parser import format_facts


def run_chase(params):
    """Warded chase of the whole program, weights ignored"""
    try:
        pkg = load_pkg(params)
        settings = settings_of(params)
        trace = []
        hook = trace.append if params.get("trace") else None
        chase = Chase(pkg.program, **chase_options(settings, trace=hook))
        instance, provenance = chase.warded_chase(pkg.database)
        return envelope("chase", "pass", {
            "output": "".join(line + "\n" for line in format_facts(instance.facts)),
            "trace": [app.describe() for app in trace],
            "facts": len(instance),
            "steps": len(provenance),
        })
    except Exception as e:
        return failure("chase", e)
