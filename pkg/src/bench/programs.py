"""Built-in programs, loaded from the ``scenarios`` seed modules."""

from __future__ import annotations

import importlib
import logging
import sys
from typing import Any, Dict, Iterable, Optional, Sequence, Tuple

from ..errors import ConfigError
from ..model import PKG
from ..parser import parse_facts, parse_program

logger = logging.getLogger(__name__)

sys.path.append(".")

BUILTIN_SCENARIOS: Dict[str, str] = {
    "running-example": "seed_running_example",
    "mother": "seed_mother",
    "record-linkage": "seed_record_linkage",
    "data-fusion": "seed_data_fusion",
    "company-control": "seed_company_control",
    "pp2dnf": "seed_pp2dnf",
}


def load_scenario(name: str, **params) -> Dict[str, Any]:
    """Build the scenario dict (program text, facts text, query, ...) of a built-in."""
    module_name = BUILTIN_SCENARIOS.get(name, name)
    try:
        seed_module = importlib.import_module(f"scenarios.{module_name}")
    except ImportError as e:
        raise ConfigError(f"unknown built-in program {name!r}: {type(e).__name__}: {str(e)}")
    return seed_module.build(**params)


def pkg_from_text(program_text: str, facts_text: str, name: str = "",
                  facts_format: str = "datalog") -> PKG:
    program = parse_program(program_text)
    database = parse_facts(facts_text, facts_format, program.arities)
    return PKG(database, program, name)


def builtin_pkg(name: str, **params) -> PKG:
    scenario = load_scenario(name, **params)
    pkg = pkg_from_text(scenario["program"], scenario["facts"], name)
    pkg.metadata = {k: v for k, v in scenario.items() if k not in ("program", "facts")}
    logger.debug("Loaded built-in %s: %d rules, %d facts",
                 name, len(pkg.program.rules), len(pkg.database))
    return pkg


def company_control_pkg(edges: Iterable[Tuple[str, str, float]],
                        companies: Sequence[str] = ()) -> PKG:
    """Company-control program over an ownership edge list."""
    return builtin_pkg("company-control", edges=tuple(edges), companies=tuple(companies))


def pp2dnf_pkg(n: int, edges: Iterable[Tuple[int, int]], n_y: Optional[int] = None) -> PKG:
    """PKG whose ``q()`` marginal is the PP2DNF model count over ``2^(n + n_y)``."""
    return builtin_pkg("pp2dnf", n=n, edges=tuple(edges), n_y=n_y)
