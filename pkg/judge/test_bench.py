"""Scale-free generator, built-in programs and the evaluation harness"""

import io

import pytest

from src.bench.generator import (
    TOPOLOGIES,
    ScaleFreeParams,
    gen_scale_free,
    read_edges_csv,
    topology,
    write_edges_csv,
)
from src.bench.programs import BUILTIN_SCENARIOS, builtin_pkg, load_scenario, pp2dnf_pkg
from src.errors import ConfigError
from src.orchestrator import error_rate, evaluate, iterations_for, write_report_csv


class TestGenerator:

    @pytest.mark.parametrize("name", sorted(TOPOLOGIES))
    def test_published_topologies_are_accepted(self, name):
        params = topology(name, 50)
        assert abs(params.alpha + params.beta + params.gamma - 1.0) < 1e-9

    @pytest.mark.parametrize("triple", [
        (0.71, 0.09, 0.21),
        (0.51, 0.34, 0.14),
        (0.0, 0.8, 0.2),
        (0.5, 0.6, -0.1),
    ])
    def test_perturbed_triples_are_rejected(self, triple):
        with pytest.raises(ConfigError):
            ScaleFreeParams(50, *triple)

    def test_unknown_topology_and_tiny_graphs(self):
        with pytest.raises(ConfigError):
            topology("sparse", 50)
        with pytest.raises(ConfigError):
            topology("base", 2)

    def test_same_seed_same_edges(self):
        params = topology("base", 100)
        assert gen_scale_free(params, seed=1) == gen_scale_free(params, seed=1)
        assert gen_scale_free(params, seed=1) != gen_scale_free(params, seed=2)

    def test_edges_are_simple_with_valid_shares(self):
        edges = gen_scale_free(topology("dense", 120), seed=4)
        assert all(src != dst for src, dst, _ in edges), "self-loops must be dropped"
        assert len({(src, dst) for src, dst, _ in edges}) == len(edges)
        assert all(0.0 < share <= 1.0 for _, _, share in edges)

    def test_corruption_pushes_shares_above_one(self):
        edges = gen_scale_free(topology("base", 60), seed=4, corruption_rate=1.0)
        assert edges and all(share > 1.0 for _, _, share in edges)
        with pytest.raises(ConfigError):
            gen_scale_free(topology("base", 60), corruption_rate=1.5)

    def test_dense_has_more_edges_than_base(self):
        base = sum(len(gen_scale_free(topology("base", 250), seed=s)) for s in range(20))
        dense = sum(len(gen_scale_free(topology("dense", 250), seed=s)) for s in range(20))
        assert dense > base, f"dense {dense} vs base {base}"

    def test_edge_csv(self):
        edges = [("c0", "c1", 0.5), ("c1", "c2", 0.125)]
        buffer = io.StringIO()
        write_edges_csv(edges, buffer)
        assert buffer.getvalue().splitlines()[0] == "src,dst,share"
        assert read_edges_csv(io.StringIO(buffer.getvalue())) == edges
        with pytest.raises(ConfigError):
            read_edges_csv(io.StringIO("src,dst,share\nc0,c1,lots\n"))


class TestBuiltins:

    @pytest.mark.parametrize("name", sorted(BUILTIN_SCENARIOS))
    def test_scenarios_build(self, name):
        scenario = load_scenario(name)
        assert {"seed", "description", "program", "facts"} <= set(scenario)
        pkg = builtin_pkg(name)
        assert pkg.program.rules, f"{name} has no rules"
        assert pkg.metadata["description"] == scenario["description"]

    def test_unknown_builtin(self):
        with pytest.raises(ConfigError):
            builtin_pkg("no-such-program")

    def test_record_linkage_counts(self):
        pkg = builtin_pkg("record-linkage")
        expected = pkg.metadata["expected"]
        assert len(pkg.program.soft_rules) == expected["soft_rules"]
        assert len(pkg.program.hard_rules) == expected["hard_rules"]

    def test_pp2dnf_facts(self):
        pkg = pp2dnf_pkg(3, [(1, 2), (3, 1)], n_y=2)
        assert len(pkg.database.facts_of("r")) == 3
        assert len(pkg.database.facts_of("t")) == 2
        assert len(pkg.database.facts_of("s")) == 2


class TestEvaluation:

    def setup_method(self):
        self.pkg = builtin_pkg("running-example")

    def test_iteration_scheme(self):
        assert iterations_for(10, self.pkg) == 10 * len(self.pkg.database)

    def test_error_rate(self):
        exact = {"k1": (None, 0.5), "k2": (None, 1.0)}
        estimate = {"k1": (None, 0.4)}
        assert error_rate(exact, estimate) == pytest.approx(100.0 * (0.1 + 1.0) / 2)

    def test_reports_per_multiplier(self):
        result = evaluate(self.pkg, multipliers=(0, 1, 5), repetitions=2, seed=3)
        assert result["status"] == "pass", result.get("error")
        reports = result["data"]["reports"]
        assert [r.label for r in reports] == ["exact", "N1", "N5"]
        assert reports[0].error_rate == pytest.approx(0.0, abs=1e-9)
        assert all(r.error_rate is not None and r.error_rate >= 0.0 for r in reports)
        buffer = io.StringIO()
        write_report_csv(reports, buffer)
        assert buffer.getvalue().splitlines()[0].startswith("config,iterations,repetitions")

    def test_network_estimator_needs_exact(self):
        result = evaluate(self.pkg, multipliers=(1,), exact=False, estimator="network")
        assert result["status"] == "fail"

    def test_budget_failure_is_reported(self):
        result = evaluate(self.pkg, multipliers=(1,), budget=2)
        assert result["status"] == "fail"
        assert "aborted" in result["error"]
