"""Configuration parsing/validation and the command line interface."""

import numpy as np
import pytest

from fraginv import ConfigError, parse_config, read_profile_csv
from fraginv.cli import main
from fraginv.grid import build_geometric_grid

TEST1_YAML = """
domain: {R: 5.0, cells: 35, ratio: 1.4}
time: {T: 2.0, steps: 20}
kernel:
  selection: {kind: power, S0: 1.0, alpha: 1.0}
  daughter: {kind: power_law_binary}
scheme: fvs
optimizer: {eps0: 0.002, max_iters: 50, seed: 0}
target: {benchmark: test1, s: 1.0}
initial_guess: {builtin: truncated_ramp}
output_dir: out
"""

SMALL_INVERT_YAML = """
domain: {R: 5.0, cells: 12, ratio: 1.4}
time: {T: 2.0, steps: 10}
kernel:
  selection: {S0: 1.0, alpha: 1.0}
scheme: wfvs
optimizer: {eps0: 0.01, max_iters: 3, seed: 0}
target: {benchmark: test1}
output_dir: out
"""


def write(tmp_path, text, name="config.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def read_rows(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# fraginv config=")
    header = lines[1].split(",")
    data = np.array([[float(v) for v in line.split(",")] for line in lines[2:]])
    return header, data


class TestParseConfig:
    def test_valid_benchmark_config(self, tmp_path):
        config = parse_config(write(tmp_path, TEST1_YAML))
        assert config.domain.cells == 35
        assert config.domain.ratio == 1.4
        assert config.time.steps == 20
        assert config.optimizer.eps0 == 0.002
        assert config.optimizer.max_iters == 50
        assert config.scheme == "fvs"
        assert config.target.benchmark == "test1"
        assert config.taylor_etas == (1e-1, 1e-2, 1e-3)

    def test_missing_required_key_is_named(self, tmp_path):
        bad = TEST1_YAML.replace("time: {T: 2.0, steps: 20}", "time: {T: 2.0}")
        with pytest.raises(ConfigError) as info:
            parse_config(write(tmp_path, bad))
        assert any("time.steps" in p for p in info.value.problems)

    def test_ratio_range_error(self, tmp_path):
        bad = TEST1_YAML.replace("ratio: 1.4", "ratio: 0.9")
        with pytest.raises(ConfigError) as info:
            parse_config(write(tmp_path, bad))
        assert any("domain.ratio" in p and "exceed 1" in p for p in info.value.problems)

    def test_all_problems_reported_at_once(self, tmp_path):
        bad = (TEST1_YAML
               .replace("ratio: 1.4", "ratio: 0.5")
               .replace("steps: 20", "steps: -2")
               .replace("eps0: 0.002", "eps0: 0"))
        with pytest.raises(ConfigError) as info:
            parse_config(write(tmp_path, bad))
        joined = "\n".join(info.value.problems)
        assert "domain.ratio" in joined
        assert "time.steps" in joined
        assert "optimizer.eps0" in joined

    def test_unknown_keys_flagged(self, tmp_path):
        bad = TEST1_YAML.replace("output_dir: out", "output_dir: out\nextra_knob: 1")
        with pytest.raises(ConfigError) as info:
            parse_config(write(tmp_path, bad))
        assert any("extra_knob" in p for p in info.value.problems)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError) as info:
            parse_config(tmp_path / "nope.yaml")
        assert any("not found" in p for p in info.value.problems)

    def test_invalid_yaml(self, tmp_path):
        with pytest.raises(ConfigError):
            parse_config(write(tmp_path, "scheme: [unclosed"))

    def test_target_needs_exactly_one_source(self, tmp_path):
        bad = TEST1_YAML.replace("target: {benchmark: test1, s: 1.0}",
                                 "target: {benchmark: test1, csv: t.csv}")
        with pytest.raises(ConfigError) as info:
            parse_config(write(tmp_path, bad))
        assert any("target" in p and "not both" in p for p in info.value.problems)

    def test_empty_taylor_etas_rejected(self, tmp_path):
        bad = TEST1_YAML + "taylor: {etas: []}\n"
        with pytest.raises(ConfigError) as info:
            parse_config(write(tmp_path, bad))
        assert any("taylor.etas" in p for p in info.value.problems)

    def test_profile_csv_roundtrip(self, tmp_path):
        grid = build_geometric_grid(5.0, 6, 1.4)
        lines = ["x_center,value"] + [
            f"{x},{v}" for x, v in zip(grid.centers, np.exp(-grid.centers))]
        path = tmp_path / "profile.csv"
        path.write_text("\n".join(lines) + "\n")
        values = read_profile_csv(path, grid)
        np.testing.assert_allclose(values, np.exp(-grid.centers), rtol=1e-15)

    def test_profile_csv_errors(self, tmp_path):
        grid = build_geometric_grid(5.0, 6, 1.4)
        path = tmp_path / "bad.csv"
        path.write_text("x,val\n1,2\n")
        with pytest.raises(ConfigError):
            read_profile_csv(path, grid)
        path.write_text("x_center,value\n1.0,2.0\n")
        with pytest.raises(ConfigError):
            read_profile_csv(path, grid)


class TestForwardCommand:
    def test_wfvs_moments_conserve_mass(self, tmp_path):
        cfg = TEST1_YAML.replace("scheme: fvs", "scheme: wfvs")
        out = tmp_path / "run"
        code = main(["forward", "--config", write(tmp_path, cfg), "--out", str(out)])
        assert code == 0
        _, data = read_rows(out / "moments.csv")
        masses = data[:, 2]
        assert np.max(np.abs(masses - masses[0])) / masses[0] <= 1e-12
        header, solution = read_rows(out / "solution.csv")
        assert header == ["x_center", "dx", "f_initial", "f_final"]
        assert solution.shape == (35, 4)

    def test_zero_steps_copies_initial_state(self, tmp_path):
        cfg = TEST1_YAML.replace("time: {T: 2.0, steps: 20}",
                                 "time: {T: 2.0, steps: 0}")
        out = tmp_path / "run"
        code = main(["forward", "--config", write(tmp_path, cfg), "--out", str(out)])
        assert code == 0
        _, data = read_rows(out / "solution.csv")
        np.testing.assert_array_equal(data[:, 2], data[:, 3])

    @pytest.mark.filterwarnings("ignore")
    def test_blowup_exits_3_without_partial_output(self, tmp_path):
        cfg = TEST1_YAML.replace("S0: 1.0", "S0: 1.0e+300")
        out = tmp_path / "run"
        code = main(["forward", "--config", write(tmp_path, cfg), "--out", str(out)])
        assert code == 3
        assert not (out / "solution.csv").exists()
        assert not (out / "moments.csv").exists()

    def test_scheme_override_flag(self, tmp_path):
        out = tmp_path / "run"
        code = main(["forward", "--config", write(tmp_path, TEST1_YAML),
                     "--out", str(out), "--scheme", "wfvs"])
        assert code == 0
        first_line = (out / "solution.csv").read_text().splitlines()[0]
        assert "scheme=wfvs" in first_line

    def test_invalid_config_exits_2(self, tmp_path):
        bad = TEST1_YAML.replace("ratio: 1.4", "ratio: 0.9")
        assert main(["forward", "--config", write(tmp_path, bad)]) == 2

    def test_env_var_sets_output_root(self, tmp_path, monkeypatch):
        monkeypatch.setenv("FRAGINV_OUT", str(tmp_path / "root"))
        code = main(["forward", "--config", write(tmp_path, TEST1_YAML),
                     "--out", "sub"])
        assert code == 0
        assert (tmp_path / "root" / "sub" / "solution.csv").exists()


class TestInvertCommand:
    def test_history_has_one_row_per_iterate(self, tmp_path):
        out = tmp_path / "run"
        code = main(["invert", "--config", write(tmp_path, SMALL_INVERT_YAML),
                     "--out", str(out)])
        assert code == 0
        header, data = read_rows(out / "history.csv")
        assert header == ["iter", "J", "E_target", "E_init"]
        assert data.shape == (4, 4)
        assert list(data[:, 0]) == [0.0, 1.0, 2.0, 3.0]
        header, recon = read_rows(out / "reconstruction.csv")
        assert header == ["x_center", "f0_exact_if_known", "f0_reconstructed"]
        header, final = read_rows(out / "final_state.csv")
        assert header == ["x_center", "f_final", "target"]

    def test_zero_iterations_single_row(self, tmp_path):
        cfg = SMALL_INVERT_YAML.replace("max_iters: 3", "max_iters: 0")
        out = tmp_path / "run"
        assert main(["invert", "--config", write(tmp_path, cfg),
                     "--out", str(out)]) == 0
        _, data = read_rows(out / "history.csv")
        assert data.shape[0] == 1

    def test_clip_flag_keeps_reconstruction_nonnegative(self, tmp_path):
        cfg = SMALL_INVERT_YAML.replace(
            "optimizer: {eps0: 0.01, max_iters: 3, seed: 0}",
            "optimizer: {eps0: 0.05, max_iters: 8, clip_nonnegative: true, seed: 0}")
        out = tmp_path / "run"
        assert main(["invert", "--config", write(tmp_path, cfg),
                     "--out", str(out)]) == 0
        _, data = read_rows(out / "reconstruction.csv")
        assert np.all(data[:, 2] >= 0.0)

    def test_byte_identical_reruns(self, tmp_path):
        config = write(tmp_path, SMALL_INVERT_YAML)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["invert", "--config", config, "--out", str(out1)]) == 0
        assert main(["invert", "--config", config, "--out", str(out2)]) == 0
        for name in ("history.csv", "reconstruction.csv", "final_state.csv"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_missing_optimizer_section_exits_2(self, tmp_path):
        cfg = "\n".join(line for line in SMALL_INVERT_YAML.splitlines()
                        if not line.startswith("optimizer"))
        assert main(["invert", "--config", write(tmp_path, cfg)]) == 2


class TestTaylorCommand:
    def test_default_three_rows(self, tmp_path):
        out = tmp_path / "run"
        code = main(["taylor", "--config", write(tmp_path, SMALL_INVERT_YAML),
                     "--out", str(out)])
        assert code == 0
        header, data = read_rows(out / "taylor.csv")
        assert header == ["eta", "remainder", "ratio"]
        assert data.shape == (3, 3)
        np.testing.assert_array_equal(data[:, 0], [1e-1, 1e-2, 1e-3])

    def test_transpose_gradient_ratio_constant(self, tmp_path):
        cfg = SMALL_INVERT_YAML.replace(
            "optimizer: {eps0: 0.01, max_iters: 3, seed: 0}",
            "optimizer: {eps0: 0.01, max_iters: 3, seed: 0, gradient_kind: transpose}")
        out = tmp_path / "run"
        assert main(["taylor", "--config", write(tmp_path, cfg),
                     "--out", str(out)]) == 0
        _, data = read_rows(out / "taylor.csv")
        ratios = data[:, 2]
        assert (ratios.max() - ratios.min()) / ratios.mean() <= 1e-6

    def test_empty_eta_list_exits_2(self, tmp_path):
        cfg = SMALL_INVERT_YAML + "taylor: {etas: []}\n"
        assert main(["taylor", "--config", write(tmp_path, cfg)]) == 2


class TestBenchCommand:
    def test_unknown_case_exits_2_with_usage(self, tmp_path, capsys):
        assert main(["bench", "test9"]) == 2
        assert "usage" in capsys.readouterr().err.lower()

    def test_single_scheme_bundle(self, tmp_path):
        out = tmp_path / "bundle"
        code = main(["bench", "test1", "wfvs", "--out", str(out), "--max-iters", "2"])
        assert code == 0
        for name in ("history.csv", "reconstruction.csv", "final_state.csv",
                     "solution.csv", "moments.csv"):
            assert (out / "wfvs" / name).exists()
        assert not (out / "fvs").exists()
        report = (out / "report.txt").read_text()
        assert "wfvs" in report and "E(target)" in report

    @pytest.mark.filterwarnings("ignore::UserWarning")
    def test_both_schemes_by_default(self, tmp_path):
        out = tmp_path / "bundle"
        code = main(["bench", "test2", "--out", str(out), "--max-iters", "2"])
        assert code == 0
        assert (out / "fvs" / "history.csv").exists()
        assert (out / "wfvs" / "history.csv").exists()

    def test_default_budget_writes_one_row_per_iterate(self, tmp_path):
        out = tmp_path / "bundle"
        assert main(["bench", "test1", "fvs", "--out", str(out)]) == 0
        _, data = read_rows(out / "fvs" / "history.csv")
        assert data.shape[0] == 51  # iterations 0 through 50

    def test_missing_config_flag_exits_2(self):
        assert main(["forward"]) == 2

    def test_unknown_subcommand_exits_2(self):
        assert main(["solve"]) == 2


class TestEntryPoints:
    def test_module_invocation(self):
        import subprocess
        import sys
        done = subprocess.run([sys.executable, "-m", "fraginv", "--help"],
                              capture_output=True, text=True)
        assert done.returncode == 0
        assert "forward" in done.stdout and "bench" in done.stdout

    def test_console_script(self):
        import shutil
        import subprocess
        exe = shutil.which("fraginv")
        if exe is None:
            pytest.skip("console script not on PATH")
        done = subprocess.run([exe, "--help"], capture_output=True, text=True)
        assert done.returncode == 0
