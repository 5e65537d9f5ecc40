"""Helper functions shared by the commands"""

from __future__ import annotations

import os
from typing import Any, Dict, Optional

from .bench.programs import builtin_pkg, pkg_from_text
from .config import Settings
from .errors import (
    AnalysisError,
    ConfigError,
    GroundingBudgetExceeded,
    ParseError,
    SoftChaseError,
    StepBudgetExceeded,
)
from .model import PKG

EXIT_OK = 0
EXIT_VIOLATIONS = 1
EXIT_INPUT = 2
EXIT_BUDGET = 3


def envelope(action: str, status: str, data: Optional[Dict[str, Any]] = None,
             error: Optional[str] = None, exit_code: int = EXIT_OK) -> Dict[str, Any]:
    result = {"action": action, "status": status, "data": data or {}, "exit_code": exit_code}
    if error is not None:
        result["error"] = error
    return result


def failure(action: str, exc: BaseException) -> Dict[str, Any]:
    """Map an exception onto a failed envelope with the matching exit code."""
    if isinstance(exc, (StepBudgetExceeded, GroundingBudgetExceeded)):
        code = EXIT_BUDGET
    elif isinstance(exc, AnalysisError):
        code = EXIT_VIOLATIONS
    else:
        code = EXIT_INPUT
    data: Dict[str, Any] = {}
    if isinstance(exc, (ParseError, AnalysisError)):
        data["diagnostics"] = [d.as_line() for d in exc.diagnostics]
    elif isinstance(exc, SoftChaseError):
        data["diagnostics"] = [exc.diagnostic().as_line()]
    if isinstance(exc, GroundingBudgetExceeded):
        data["partial"] = {"nodes": exc.nodes, "edges": exc.edges}
    return envelope(action, "fail", data, f"{type(exc).__name__}: {str(exc)}", code)


def read_text(path: str) -> str:
    if not os.path.exists(path):
        raise ConfigError(f"File not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        return f.read()


def load_pkg(params: Dict[str, Any]) -> PKG:
    """The PKG named by ``builtin`` or read from ``program`` and ``facts`` paths."""
    if params.get("builtin"):
        return builtin_pkg(params["builtin"])
    if not params.get("program"):
        raise ConfigError("Provide --program (and --facts) or --builtin")
    program_text = read_text(params["program"])
    facts_text = read_text(params["facts"]) if params.get("facts") else ""
    facts_format = "csv" if str(params.get("facts", "")).endswith(".csv") else "datalog"
    return pkg_from_text(program_text, facts_text, os.path.basename(params["program"]),
                         facts_format)


def settings_of(params: Dict[str, Any]) -> Settings:
    return params.get("settings") or Settings()


def param(params: Dict[str, Any], name: str, default: Any) -> Any:
    """The flag value unless it was left unset; zero is a value."""
    value = params.get(name)
    return default if value is None else value


def chase_options(settings: Settings, **extra) -> Dict[str, Any]:
    options = {
        "step_budget": settings.step_budget,
        "relax_aggregate_strata": settings.relax_aggregate_strata,
    }
    options.update(extra)
    return options
