"""Command-line surface, command registry and settings"""

import json

import pytest

from src.bench.programs import load_scenario
from src.cli import main
from src.commands import execute_command, known_commands
from src.config import Settings, load_settings
from src.errors import ConfigError

NOT_WARDED = """\
a(X) -> exists Z: r(X, Z).
a(X) -> exists Z: s(X, Z).
r(X, Y), s(X, W) -> t(Y, W).
"""


class TestCli:

    def setup_method(self):
        self.scenario = load_scenario("running-example")

    def write_inputs(self, tmp_path, scenario=None):
        scenario = scenario or self.scenario
        program = tmp_path / "program.svdlg"
        facts = tmp_path / "facts.dl"
        program.write_text(scenario["program"], encoding="utf-8")
        facts.write_text(scenario["facts"], encoding="utf-8")
        return str(program), str(facts)

    def validate_manifest(self, stderr, command):
        manifest = json.loads(stderr.strip().splitlines()[-1])
        assert manifest["command"] == command
        assert "engine_version" in manifest and "config" in manifest
        return manifest

    def test_check_accepts_the_running_example(self, tmp_path, capsys):
        program, facts = self.write_inputs(tmp_path)
        code = main(["check", "--program", program, "--facts", facts])
        out, err = capsys.readouterr()
        assert code == 0, err
        assert "warded=true" in out and "stratified=true" in out
        self.validate_manifest(err, "check")

    def test_check_rejects_a_non_warded_program(self, tmp_path, capsys):
        path = tmp_path / "bad.svdlg"
        path.write_text(NOT_WARDED, encoding="utf-8")
        code = main(["check", "--program", str(path)])
        out, _ = capsys.readouterr()
        assert code == 1
        assert out.startswith("W100\t3:1\t"), out

    def test_missing_file(self, tmp_path, capsys):
        code = main(["check", "--program", str(tmp_path / "absent.svdlg")])
        _, err = capsys.readouterr()
        assert code == 2
        assert "not found" in err

    def test_parse_errors_exit_two(self, tmp_path, capsys):
        path = tmp_path / "broken.svdlg"
        path.write_text("p(X) -> q(X).\nq(X, Y) -> r(X).\n", encoding="utf-8")
        code = main(["chase", "--program", str(path)])
        _, err = capsys.readouterr()
        assert code == 2
        assert err.startswith("P101\t2:1\t"), err

    def test_chase_prints_canonical_nulls(self, capsys):
        code = main(["chase", "--builtin", "mother"])
        out, _ = capsys.readouterr()
        assert code == 0
        assert out.splitlines() == [
            "hasmother(alice,_:n0)",
            "hasmother(_:n0,_:n1)",
            "person(alice)",
            "person(_:n0)",
            "person(_:n1)",
        ], out

    def test_chase_trace_goes_to_stderr(self, capsys):
        main(["chase", "--builtin", "mother", "--trace"])
        out, err = capsys.readouterr()
        assert "r1\tX=alice" not in out
        assert err.splitlines()[0].startswith("r1\tX=alice\t")

    def test_ground_lists_five_nodes(self, capsys):
        code = main(["ground", "--builtin", "running-example"])
        out, _ = capsys.readouterr()
        assert code == 0
        assert out.splitlines()[0] == "# nodes=5 edges=5"
        weights = sorted(float(line.split("\t")[2]) for line in out.splitlines()
                         if line.startswith("node\t"))
        assert weights == pytest.approx([0.0, 0.7, 1.5, 1.6, 4.1])

    def test_ground_budget_exits_three(self, capsys):
        code = main(["ground", "--builtin", "running-example", "--budget", "2"])
        _, err = capsys.readouterr()
        assert code == 3
        assert "N100" in err

    def test_exact_inference(self, tmp_path, capsys):
        program, facts = self.write_inputs(tmp_path)
        code = main(["infer", "--program", program, "--facts", facts, "--query", "contract"])
        out, _ = capsys.readouterr()
        assert code == 0
        assert out == "contract(a,b,c)\t1.000000\ncontract(c,l,a)\t0.986262\n", out

    def test_exact_inference_csv(self, capsys):
        code = main(["infer", "--builtin", "pp2dnf", "--query", "q", "--format", "csv"])
        out, _ = capsys.readouterr()
        assert code == 0
        assert out == "q(),0.250000\n"

    def test_mcmc_inference_is_reproducible(self, capsys):
        argv = ["infer", "--builtin", "running-example", "--query", "contract",
                "--mode", "mcmc", "--iterations", "300", "--seed", "7"]
        assert main(argv) == 0
        first, _ = capsys.readouterr()
        assert main(argv) == 0
        second, _ = capsys.readouterr()
        assert first == second and first.startswith("contract(a,b,c)\t1.000000\n")

    def test_sample_writes_a_trace(self, capsys):
        code = main(["sample", "--builtin", "running-example", "--iterations", "50", "--seed", "1"])
        out, _ = capsys.readouterr()
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "iteration,state,weight,accepted" and len(lines) == 51

    def test_gen_is_reproducible(self, tmp_path, capsys):
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"
        for target in (first, second):
            code = main(["gen", "--topology", "base", "--nodes", "100", "--seed", "1",
                         "--output", str(target)])
            assert code == 0
        capsys.readouterr()
        assert first.read_text() == second.read_text()
        assert first.read_text().startswith("src,dst,share\n")

    def test_eval_on_a_generated_graph(self, tmp_path, capsys):
        graph = tmp_path / "graph.csv"
        graph.write_text("src,dst,share\nc0,c1,0.6\n", encoding="utf-8")
        manifest = tmp_path / "manifest.json"
        code = main(["eval", "--graph", str(graph), "--multipliers", "0,1",
                     "--repetitions", "2", "--manifest", str(manifest)])
        out, err = capsys.readouterr()
        assert code == 0, err
        rows = out.splitlines()
        assert rows[0].startswith("config,iterations,repetitions")
        assert [row.split(",")[0] for row in rows[1:]] == ["exact", "N1"]
        assert json.loads(manifest.read_text())["inputs"]["graph"] == str(graph)

    def test_invalid_flag_values_exit_two(self, capsys):
        code = main(["sample", "--builtin", "mother", "--iterations", "0"])
        _, err = capsys.readouterr()
        assert code == 2
        assert err.startswith("K100")


class TestCommandRegistry:

    def test_every_command_is_described(self):
        assert set(known_commands) == {"check", "chase", "ground", "infer", "sample", "gen", "eval"}

    def test_unknown_command(self):
        result = execute_command("fuse", {})
        assert result["status"] == "fail"
        assert "Unknown command" in result["error"]

    def test_envelope_shape(self):
        result = execute_command("chase", {"builtin": "mother"})
        assert result["action"] == "chase" and result["status"] == "pass"
        assert result["data"]["facts"] == 5
        assert result["exit_code"] == 0

    def test_zero_jump_rate_is_not_replaced_by_the_default(self):
        result = execute_command("infer", {
            "builtin": "running-example", "query": "contract", "mode": "mcmc",
            "iterations": 10, "jump_rate": 0.0, "settings": Settings(),
        })
        assert result["status"] == "fail" and result["exit_code"] == 2
        assert "jump rate must be positive" in result["error"]

    def test_zero_iterations_reach_the_sampler(self):
        result = execute_command("sample", {
            "builtin": "mother", "iterations": 0, "settings": Settings(),
        })
        assert result["status"] == "fail" and result["exit_code"] == 2
        assert result["data"]["diagnostics"][0].startswith("K100")

    def test_zero_budget_is_kept(self):
        result = execute_command("ground", {
            "builtin": "running-example", "budget": 0, "settings": Settings(),
        })
        assert result["status"] == "fail" and result["exit_code"] == 3


class TestSettings:

    def test_defaults(self):
        settings = Settings()
        assert settings.jump_rate == 5.0 and settings.grounding_budget == 5000

    def test_precedence(self, tmp_path, monkeypatch):
        config = tmp_path / "softchase.yml"
        config.write_text("seed: 4\njump_rate: 3\niterations: 100\n", encoding="utf-8")
        monkeypatch.setenv("SOFTCHASE_SEED", "9")
        settings = load_settings({"iterations": 7, "jump_rate": None}, str(config))
        assert settings.seed == 9, "environment beats the file"
        assert settings.iterations == 7, "flags beat everything"
        assert settings.jump_rate == 3.0

    def test_unknown_keys_are_rejected(self, tmp_path):
        config = tmp_path / "softchase.yml"
        config.write_text("lambda: 3\n", encoding="utf-8")
        with pytest.raises(ConfigError):
            load_settings(config_path=str(config))

    def test_invalid_values(self):
        with pytest.raises(ConfigError):
            Settings(jobs=0)
        with pytest.raises(ConfigError):
            Settings(log_level="LOUD")
