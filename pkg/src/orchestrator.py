"""Evaluation harness: exact inference versus repeated MCMC runs.

Each phase returns a result envelope (``status``/``data``/``error``) so a
failing phase is reported instead of aborting the whole evaluation.
"""

from __future__ import annotations

import csv
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence, TextIO, Tuple

from .chase import Chase
from .errors import GroundingBudgetExceeded
from .mcmc import McmcConfig, SampleSet, estimate_marginals, mcmc_chase, pool, samples_from_network
from .model import PKG, Fact, FactKey
from .network import fact_marginals, ground_chase_network
from .parser import format_atom

logger = logging.getLogger(__name__)

Marginals = Dict[FactKey, Tuple[Fact, float]]


@dataclass
class FactReport:
    fact: str
    exact: Optional[float]
    estimate: float
    error: Optional[float]


@dataclass
class EvalReport:
    label: str
    iterations: int
    repetitions: int
    rows: List[FactReport] = field(default_factory=list)
    error_rate: Optional[float] = None
    acceptance_rate: float = 0.0
    seconds: float = 0.0
    exact_seconds: Optional[float] = None

    def as_dict(self) -> Dict[str, Any]:
        return asdict(self)


def iterations_for(multiplier: int, pkg: PKG) -> int:
    """``N_i``: ``i`` times the number of database facts."""
    return max(1, multiplier * len(pkg.database))


def error_rate(exact: Marginals, estimate: Marginals) -> float:
    """Mean absolute marginal difference over the exactly computed facts, in percent."""
    if not exact:
        return 0.0
    total = sum(abs(p - estimate.get(key, (None, 0.0))[1]) for key, (_, p) in exact.items())
    return 100.0 * total / len(exact)


def _rows(exact: Optional[Marginals], estimate: Marginals) -> List[FactReport]:
    keys = set(estimate) | set(exact or {})
    rows = []
    for key in keys:
        fact = (exact or {}).get(key, estimate.get(key))[0]
        q = estimate.get(key, (fact, 0.0))[1]
        p = exact[key][1] if exact and key in exact else None
        rows.append(FactReport(format_atom(fact), p, q, None if p is None else abs(p - q)))
    return sorted(rows, key=lambda r: r.fact)


def run_exact(pkg: PKG, predicate: Optional[str], budget: int,
              chase: Optional[Chase] = None) -> Dict[str, Any]:
    try:
        started = time.perf_counter()
        network = ground_chase_network(pkg, budget, chase)
        return {
            "status": "pass",
            "data": {
                "network": network,
                "marginals": fact_marginals(network, predicate),
                "seconds": time.perf_counter() - started,
            },
        }
    except GroundingBudgetExceeded as e:
        return {
            "status": "fail",
            "error": f"Exact inference aborted: {e.message} ({e.nodes} nodes, {e.edges} edges)",
        }
    except Exception as e:
        return {"status": "fail", "error": f"Exact inference failed: {type(e).__name__}: {str(e)}"}


def run_sampling(pkg: PKG, iterations: int, seeds: Sequence[int], jump_rate: float,
                 jobs: int = 1, chase: Optional[Chase] = None) -> Dict[str, Any]:
    try:
        chase = chase or Chase(pkg.program)
        started = time.perf_counter()

        def one(seed: int) -> SampleSet:
            return mcmc_chase(pkg, McmcConfig(iterations, jump_rate, seed), chase)

        with ThreadPoolExecutor(max_workers=max(1, jobs)) as executor:
            runs = list(executor.map(one, seeds))
        return {
            "status": "pass",
            "data": {"runs": runs, "seconds": (time.perf_counter() - started) / len(runs)},
        }
    except Exception as e:
        return {"status": "fail", "error": f"Sampling failed: {type(e).__name__}: {str(e)}"}


def evaluate(
    pkg: PKG,
    multipliers: Sequence[int] = (1, 10, 100),
    repetitions: int = 5,
    seed: int = 0,
    jump_rate: float = 5.0,
    exact: bool = True,
    predicate: Optional[str] = None,
    budget: int = 5000,
    jobs: int = 1,
    estimator: str = "trajectory",
) -> Dict[str, Any]:
    """Compare exact marginals with MCMC estimates for each iteration multiplier.

    ``estimator`` is ``"trajectory"`` (weights recorded by the sampler) or
    ``"network"`` (sampled states reweighted by the exact network; needs ``exact``).
    A multiplier of 0 reports the exact network itself as the estimate.
    """
    try:
        chase = Chase(pkg.program)
        reports: List[EvalReport] = []

        reference = None
        exact_marginals: Optional[Marginals] = None
        exact_seconds: Optional[float] = None
        if exact:
            exact_result = run_exact(pkg, predicate, budget, chase)
            if exact_result["status"] == "fail":
                return exact_result
            reference = exact_result["data"]["network"]
            exact_marginals = exact_result["data"]["marginals"]
            exact_seconds = exact_result["data"]["seconds"]
        elif estimator == "network":
            return {"status": "fail", "error": "The network estimator needs exact inference"}

        for multiplier in multipliers:
            if multiplier == 0:
                if reference is None:
                    continue
                estimate = estimate_marginals(samples_from_network(reference), None, predicate)
                reports.append(EvalReport(
                    "exact", 0, 1, _rows(exact_marginals, estimate),
                    error_rate(exact_marginals, estimate), 1.0, 0.0, exact_seconds,
                ))
                continue

            iterations = iterations_for(multiplier, pkg)
            seeds = [seed + r for r in range(repetitions)]
            sampled = run_sampling(pkg, iterations, seeds, jump_rate, jobs, chase)
            if sampled["status"] == "fail":
                return sampled
            runs: List[SampleSet] = sampled["data"]["runs"]
            weights_from = reference if estimator == "network" else None
            estimates = [estimate_marginals(run, weights_from, predicate) for run in runs]

            rate = None
            if exact_marginals is not None:
                rate = sum(error_rate(exact_marginals, e) for e in estimates) / len(estimates)
            merged = pool(runs)
            reports.append(EvalReport(
                f"N{multiplier}",
                iterations,
                repetitions,
                _rows(exact_marginals, estimate_marginals(merged, weights_from, predicate)),
                rate,
                merged.acceptance_rate,
                sampled["data"]["seconds"],
                exact_seconds,
            ))
            logger.info("Evaluated N%d (%d iterations): error rate %s",
                        multiplier, iterations, "n/a" if rate is None else f"{rate:.2f}%")

        return {"status": "pass", "data": {"reports": reports}}

    except Exception as e:
        return {
            "status": "fail",
            "error": f"Evaluation failed at main level: {type(e).__name__}: {str(e)}",
        }


def write_report_csv(reports: Sequence[EvalReport], stream: TextIO, delimiter: str = ",") -> None:
    writer = csv.writer(stream, delimiter=delimiter, lineterminator="\n")
    writer.writerow([
        "config", "iterations", "repetitions", "error_rate", "acceptance_rate",
        "seconds", "exact_seconds",
    ])
    for report in reports:
        writer.writerow([
            report.label,
            report.iterations,
            report.repetitions,
            "" if report.error_rate is None else f"{report.error_rate:.4f}",
            f"{report.acceptance_rate:.4f}",
            f"{report.seconds:.3f}",
            "" if report.exact_seconds is None else f"{report.exact_seconds:.3f}",
        ])


def write_fact_rows_csv(report: EvalReport, stream: TextIO, delimiter: str = ",") -> None:
    writer = csv.writer(stream, delimiter=delimiter, lineterminator="\n")
    writer.writerow(["fact", "exact", "estimate", "error"])
    for row in report.rows:
        writer.writerow([
            row.fact,
            "" if row.exact is None else f"{row.exact:.6f}",
            f"{row.estimate:.6f}",
            "" if row.error is None else f"{row.error:.6f}",
        ])
