"""Benchmark inputs: scale-free ownership graphs and the built-in programs."""

from .generator import TOPOLOGIES, ScaleFreeParams, gen_scale_free, read_edges_csv, write_edges_csv
from .programs import (
    BUILTIN_SCENARIOS,
    builtin_pkg,
    company_control_pkg,
    load_scenario,
    pkg_from_text,
    pp2dnf_pkg,
)

__all__ = [
    "TOPOLOGIES",
    "ScaleFreeParams",
    "gen_scale_free",
    "read_edges_csv",
    "write_edges_csv",
    "BUILTIN_SCENARIOS",
    "builtin_pkg",
    "company_control_pkg",
    "load_scenario",
    "pkg_from_text",
    "pp2dnf_pkg",
]
