import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from qrelevance.cli import ConfigError, list_scenarios, validate_config
from qrelevance.cli.main import main
from qrelevance.cli.runner import BASE_COLUMNS, OUT_ENV
from qrelevance.cli.scenarios import BUILTINS

MINIMAL = """
name = "tiny"
seed = 1
[space]
factors = [["A", 2], ["B", 2]]
[hamiltonian]
preset = "coupled-pair"
coupling = 0.3
[projection]
kind = "dephase"
[initial]
kind = "basis"
index = 1
[solver]
kind = "exact"
dt = 0.1
steps = 5
"""


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def run(tmp_path, ref, *extra):
    return main(["run", ref, "--out", str(tmp_path), *extra])


class TestValidate:
    def test_all_errors_listed(self):
        bad = MINIMAL.replace('index = 1', 'index = 9\ncolour = "red"').replace("dt = 0.1", 'dt = "0.1"')
        with pytest.raises(ConfigError) as exc:
            validate_config(bad)
        msgs = exc.value.errors
        assert any("unknown key 'colour'" in m for m in msgs)
        assert any("out of range" in m for m in msgs)
        assert any("solver.dt" in m and "expected a number" in m for m in msgs)

    def test_dimension_cap_names_factors(self):
        bad = MINIMAL.replace('[["A", 2], ["B", 2]]', '[["A", 4], ["B", 4], ["C", 8]]')
        with pytest.raises(ConfigError) as exc:
            validate_config(bad)
        assert any("A=4" in m and "C=8" in m and "64" in m for m in exc.value.errors)

    @pytest.mark.parametrize("solver", ["premaster", "markov"])
    def test_nonlinear_projection_rejected(self, solver):
        bad = MINIMAL.replace('kind = "dephase"', 'kind = "product_of_marginals"\nsplit = [["A"], ["B"]]')
        bad = bad.replace('kind = "exact"', f'kind = "{solver}"')
        with pytest.raises(ConfigError) as exc:
            validate_config(bad)
        assert any("nonlinear" in m for m in exc.value.errors)

    def test_booleans_are_not_numbers(self):
        with pytest.raises(ConfigError):
            validate_config(MINIMAL.replace("steps = 5", "steps = true"))

    def test_integer_accepted_for_real(self):
        assert validate_config(MINIMAL.replace("dt = 0.1", "dt = 1")).solver.grid.dt == 1.0

    def test_digest_ignores_formatting(self):
        a = validate_config(MINIMAL)
        b = validate_config(MINIMAL.replace("\n", "\n\n").replace(" = ", "="))
        assert a.digest == b.digest
        assert a.digest != validate_config(MINIMAL.replace("steps = 5", "steps = 6")).digest

    def test_exit_code_two(self, tmp_path, capsys):
        p = tmp_path / "bad.toml"
        p.write_text(MINIMAL.replace("coupling = 0.3", "coupling = 0.3\nwhat = 1"))
        assert main(["validate", str(p)]) == 2
        assert "unknown key 'what'" in capsys.readouterr().err
        assert main(["run", "no-such-scenario"]) == 2


class TestRegistry:
    def test_stable_and_valid(self):
        names = [n for n, _ in list_scenarios()]
        assert len(names) >= 4
        assert names == [n for n, _ in list_scenarios()] == list(BUILTINS)
        for n in names:
            assert validate_config(BUILTINS[n]).name == n

    def test_list_command(self, capsys):
        assert main(["list"]) == 0
        out = capsys.readouterr().out
        assert all(n in out for n in BUILTINS)


class TestRun:
    def test_trajectory_header(self, tmp_path):
        assert run(tmp_path, "premaster-vs-exact") == 0
        header, data = read_csv(tmp_path / "premaster-vs-exact.trajectory.csv")
        assert tuple(header[:len(BASE_COLUMNS)]) == BASE_COLUMNS
        assert "oracle_trace_distance" in header
        assert data.shape[0] == 201
        assert np.max(data[:, header.index("oracle_trace_distance")]) < 1e-5
        manifest = json.loads((tmp_path / "premaster-vs-exact.manifest.json").read_text())
        assert manifest["tool_version"] and len(manifest["config_digest"]) == 64
        assert all(c["passed"] for c in manifest["checks"])

    def test_dephasing_entropy_monotone(self, tmp_path):
        assert run(tmp_path, "dephasing-qubit-bath") == 0
        header, data = read_csv(tmp_path / "dephasing-qubit-bath.trajectory.csv")
        s = data[:, header.index("entropy")]
        assert np.min(np.diff(s)) >= -1e-10
        assert s[-1] > s[0]

    def test_pointer_branch_probabilities(self, tmp_path):
        assert run(tmp_path, "pointer-measurement") == 0
        tree = json.loads((tmp_path / "pointer-measurement.branches.json").read_text())
        probs = [n["probability"] for n in tree["tree"]["nodes"] if n["level"] == 1]
        assert abs(sum(probs) - 1) <= 1e-8
        assert sorted(np.round(probs, 12)) == [0.36, 0.64]
        assert sum(tree["samples"]["counts"]) == tree["samples"]["n"]
        header, _ = read_csv(tmp_path / "pointer-measurement.trajectory.csv")
        assert "schmidt_c1" in header

    def test_seed_override_and_determinism(self, tmp_path):
        a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
        for d, seed in ((a, "3"), (b, "3"), (c, "4")):
            assert run(d, "pointer-measurement", "--seed", seed) == 0
        name = "pointer-measurement.branches.json"
        assert (a / name).read_bytes() == (b / name).read_bytes()
        assert (a / name).read_bytes() != (c / name).read_bytes()

    def test_env_out_dir(self, tmp_path, monkeypatch):
        monkeypatch.setenv(OUT_ENV, str(tmp_path / "env"))
        assert main(["run", "nested-ghz"]) == 0
        assert (tmp_path / "env" / "nested-ghz.branches.json").exists()
        assert run(tmp_path / "flag", "nested-ghz") == 0
        assert (tmp_path / "flag" / "nested-ghz.branches.json").exists()

    def test_guard_exit_three(self, tmp_path):
        text = BUILTINS["premaster-vs-exact"].replace("dt = 0.01", "dt = 0.5") \
            .replace("T = 2.0", "T = 20.0").replace("coupling = 0.5", "coupling = 3.0")
        p = tmp_path / "unstable.toml"
        p.write_text(text)
        assert run(tmp_path / "o", str(p)) == 3
        manifest = json.loads((tmp_path / "o" / "premaster-vs-exact.manifest.json").read_text())
        assert any(c["guard"] and not c["passed"] for c in manifest["checks"])

    def test_module_entry_point(self, tmp_path):
        out = subprocess.run([sys.executable, "-m", "qrelevance", "validate", "nested-ghz"],
                             capture_output=True, text=True)
        assert out.returncode == 0 and "nested-ghz: ok" in out.stdout
