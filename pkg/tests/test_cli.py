import json

import pytest

from latentcl.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestTheoryCommand:
    def test_single_point_vanilla(self, capsys):
        code, out, _ = run_cli(capsys, "theory", "--variant", "vanilla",
                               "--rho-a", "1", "--rho-b", "0")
        assert code == 0
        header, row = out.strip().splitlines()
        assert header.startswith("variant,rho_a,rho_b")
        fields = row.split(",")
        assert float(fields[4]) == -1.0
        assert float(fields[5]) == -1.0

    def test_default_grid_cardinality(self, capsys):
        code, out, _ = run_cli(capsys, "theory", "--variant", "gated",
                               "--alpha", "0.75")
        assert code == 0
        assert len(out.strip().splitlines()) == 1 + 121

    def test_empty_grid_usage_error(self, capsys):
        code, _, err = run_cli(capsys, "theory", "--variant", "vanilla", "--rho-a")
        assert code == 2
        assert "empty" in err

    def test_unknown_variant_exits_two(self):
        with pytest.raises(SystemExit) as exc:
            main(["theory", "--variant", "nonsense"])
        assert exc.value.code == 2

    def test_missing_hyper_flag(self, capsys):
        code, _, err = run_cli(capsys, "theory", "--variant", "gated")
        assert code == 2
        assert "--alpha" in err

    def test_out_file(self, capsys, tmp_path):
        dest = tmp_path / "theory.csv"
        code, out, _ = run_cli(capsys, "theory", "--variant", "euclid",
                               "--gamma", "0.5", "--rho-a", "0.5",
                               "--rho-b", "0.5", "--out", str(dest))
        assert code == 0 and out == ""
        assert dest.exists()


class TestSweepCommand:
    def _config(self, tmp_path, **extra):
        cfg = dict(variant="vanilla", hyper=[1.0], seeds=[0, 1],
                   rho_a=[0.0, 1.0], rho_b=[0.5], n_s=5, n_x=60, n_y=3)
        cfg.update(extra)
        path = tmp_path / "spec.json"
        path.write_text(json.dumps(cfg))
        return path

    def test_writes_deterministic_csv(self, capsys, tmp_path):
        cfg = self._config(tmp_path)
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        assert run_cli(capsys, "sweep", "--config", str(cfg), "--out", str(out1))[0] == 0
        assert run_cli(capsys, "sweep", "--config", str(cfg), "--out", str(out2))[0] == 0

        def strip_seconds(path):
            return ["," .join(line.split(",")[:-1])
                    for line in path.read_text().splitlines()]

        assert strip_seconds(out1) == strip_seconds(out2)
        assert len(out1.read_text().splitlines()) == 1 + 4

    def test_stdout_streaming(self, capsys, tmp_path):
        cfg = self._config(tmp_path)
        code, out, err = run_cli(capsys, "sweep", "--config", str(cfg))
        assert code == 0
        assert out.splitlines()[0].startswith("variant,rho_a")
        assert "cells" in err

    def test_missing_config_reports_path(self, capsys, tmp_path):
        code, _, err = run_cli(capsys, "sweep", "--config", str(tmp_path / "gone.json"))
        assert code == 2
        assert "gone.json" in err

    def test_unknown_key_rejected(self, capsys, tmp_path):
        cfg = self._config(tmp_path, workers=4)
        code, _, err = run_cli(capsys, "sweep", "--config", str(cfg))
        assert code == 2
        assert "workers" in err

    def test_cell_failures_keep_exit_zero(self, capsys, tmp_path):
        cfg = self._config(tmp_path, variant="gated", hyper=[0.02],
                           n_s=10, n_x=60, seeds=[0, 1, 2])
        code, out, err = run_cli(capsys, "sweep", "--config", str(cfg))
        assert code == 0
        assert "error tags" in err

    def test_small_profile_full_grid_under_five_minutes(self, capsys, tmp_path):
        import time

        grid = [round(0.1 * i, 1) for i in range(11)]
        cfg = self._config(tmp_path, rho_a=grid, rho_b=grid,
                           seeds=[0], n_s=30, n_x=3000, n_y=10)
        start = time.perf_counter()
        code, _, _ = run_cli(capsys, "sweep", "--config", str(cfg),
                             "--small", "--out", str(tmp_path / "s.csv"))
        elapsed = time.perf_counter() - start
        assert code == 0
        assert elapsed < 300
        lines = (tmp_path / "s.csv").read_text().splitlines()
        assert len(lines) == 1 + 121 * 5  # --small swaps in the 5-seed profile


class TestAverageCommand:
    def test_tiny_average(self, capsys):
        code, out, _ = run_cli(capsys, "average", "--variant", "vanilla",
                               "--hyper", "1.0", "--n-pairs", "4",
                               "--seeds", "0", "--n-s", "5", "--n-x", "60",
                               "--n-y", "3")
        assert code == 0
        header, row = out.strip().splitlines()
        assert "transfer_avg" in header
        assert row.startswith("vanilla,")


class TestMnistCommand:
    def test_synthetic_run(self, capsys, tmp_path):
        dest = tmp_path / "mnist.csv"
        code, _, _ = run_cli(capsys, "mnist", "--synthetic", "600",
                             "--variant", "vanilla", "--rho-a", "1.0",
                             "--rho-b", "1.0", "--seed", "0",
                             "--out", str(dest))
        assert code == 0
        lines = dest.read_text().splitlines()
        assert len(lines) == 2
        assert lines[0].endswith("epoch_T2_at_eval,test_mse_task1,test_mse_task2")

    def test_requires_data_source(self, capsys):
        code, _, err = run_cli(capsys, "mnist", "--rho-a", "0.5", "--rho-b", "0.5")
        assert code == 2
        assert "data-dir" in err

    def test_missing_files_under_data_dir(self, capsys, tmp_path):
        code, _, err = run_cli(capsys, "mnist", "--data-dir", str(tmp_path),
                               "--rho-a", "0.5", "--rho-b", "0.5")
        assert code == 2
        assert "IDX" in err


class TestSelftest:
    def test_passes(self, capsys):
        code, out, _ = run_cli(capsys, "selftest")
        assert code == 0
        assert "selftest passed" in out
        assert "[FAIL]" not in out
