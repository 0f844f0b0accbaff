"""Unit tests for the wsawctl command line."""

import pytest
import yaml
from click.testing import CliRunner

from wsawlab import __version__
from wsawlab.domain.errors import BudgetExceededError, DegenerateSamplerError, PreconditionError
from wsawlab.infrastructure.outputs import read_summary, read_table
from wsawlab.infrastructure.settings import get_settings
from wsawlab.interfaces.cli.main import (
    EXIT_BUDGET,
    EXIT_DEGENERATE,
    EXIT_INTERNAL,
    EXIT_INVALID,
    classify,
    cli,
)


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, *args):
    return runner.invoke(cli, [str(a) for a in args], catch_exceptions=False)


class TestEnumerateCommand:
    """Test cases for ``wsawctl enumerate``."""

    def test_free_counts(self, runner, tmp_path):
        """Test that d = 5, beta = 0, n = 3 writes c_3 = 1000."""
        out = tmp_path / "run"
        result = invoke(runner, "enumerate", "--dim", 5, "--beta", 0, "--n", 3, "--out", out)
        assert result.exit_code == 0, result.output

        rows = read_table(out / "counts.csv")
        assert [float(row["c_n"]) for row in rows] == [1.0, 10.0, 100.0, 1000.0]
        values = read_summary(out / "summary.json")["values"]
        assert values["c_n"] == 1000.0
        assert values["mu_hat"] == pytest.approx(10.0)
        assert values["a_hat"] == pytest.approx(1.0)
        assert values["fit_window"] == [2, 3]

        manifest = yaml.safe_load((out / "manifest.yaml").read_text())
        assert manifest["experiment"] == "enumerate"
        assert manifest["tool_version"] == __version__
        assert set(manifest["files"]) == {
            "counts.csv",
            "endpoints.csv",
            "ratios.csv",
            "summary.json",
            "manifest.yaml",
        }

    def test_reruns_are_identical(self, runner, tmp_path):
        """Test that the same flags reproduce every CSV byte for byte."""
        args = ["enumerate", "--dim", 2, "--beta", 0.3, "--n", 5]
        first, second = tmp_path / "a", tmp_path / "b"
        assert invoke(runner, *args, "--out", first).exit_code == 0
        assert invoke(runner, *args, "--out", second).exit_code == 0
        for name in ("counts.csv", "endpoints.csv", "ratios.csv", "summary.json"):
            assert (first / name).read_bytes() == (second / name).read_bytes()

    def test_manifest_replays(self, runner, tmp_path):
        """Test that ``run --config manifest.yaml`` reproduces the run."""
        first, replay = tmp_path / "a", tmp_path / "replay"
        assert invoke(runner, "enumerate", "--beta", 0.2, "--r", 3, "--n", 4, "--out", first).exit_code == 0
        result = invoke(runner, "run", "--config", first / "manifest.yaml", "--out", replay)
        assert result.exit_code == 0, result.output
        assert (first / "counts.csv").read_bytes() == (replay / "counts.csv").read_bytes()

    def test_manifest_pins_budget_and_defaults(self, runner, tmp_path, monkeypatch):
        """Test that replay uses the recorded caps, not the current preset or settings."""
        first, replay = tmp_path / "a", tmp_path / "replay"
        assert invoke(runner, "perm", "--beta", 0.2, "--n", 4, "--out", first).exit_code == 0
        manifest = yaml.safe_load((first / "manifest.yaml").read_text())
        assert manifest["config"]["budget"] == "small"
        resolved = manifest["resolved"]
        assert resolved["budget"] == manifest["node_budget"] == manifest["budget"]["node_budget"]
        assert resolved["options"]["tours"] == manifest["budget"]["tours"]
        assert {"sweeps", "samples"} <= set(resolved["options"])

        monkeypatch.setenv("WSAW_NODE_BUDGET", "5")
        get_settings.cache_clear()
        capped = invoke(runner, "perm", "--beta", 0.2, "--n", 4, "--out", tmp_path / "capped")
        assert capped.exit_code == EXIT_BUDGET
        result = invoke(runner, "run", "--config", first / "manifest.yaml", "--out", replay)
        assert result.exit_code == 0, result.output
        assert (first / "perm.csv").read_bytes() == (replay / "perm.csv").read_bytes()

    def test_budget_exceeded(self, runner, tmp_path):
        """Test exit code 3 and the error line when the node cap is hit."""
        result = invoke(
            runner, "enumerate", "--beta", 0.1, "--n", 8, "--budget", 50, "--out", tmp_path
        )
        assert result.exit_code == EXIT_BUDGET
        assert "error=budget-exceeded" in result.output

    def test_invalid_parameters(self, runner, tmp_path):
        """Test exit code 2 for beta outside [0, 1]."""
        result = invoke(runner, "enumerate", "--beta", 1.5, "--n", 2, "--out", tmp_path)
        assert result.exit_code == EXIT_INVALID
        assert "error=invalid-config" in result.output
        assert "beta" in result.output

    def test_unknown_budget_preset(self, runner, tmp_path):
        """Test that an unknown preset name is a configuration error."""
        result = invoke(runner, "enumerate", "--n", 2, "--budget", "huge", "--out", tmp_path)
        assert result.exit_code == EXIT_INVALID


class TestOtherCommands:
    """Test cases for the remaining subcommands."""

    def test_lace_check_rejects_torus(self, runner, tmp_path):
        """Test that the lace identity is only checked on Z^d."""
        result = invoke(runner, "lace-check", "--r", 3, "--n", 3, "--out", tmp_path)
        assert result.exit_code == EXIT_INVALID

    def test_lace_check_exact(self, runner, tmp_path):
        """Test a zero residual in rational arithmetic."""
        out = tmp_path / "lace"
        result = invoke(
            runner, "lace-check", "--n", 4, "--betas", "0.25,1", "--exact", "--pi-n-max", 4, "--out", out
        )
        assert result.exit_code == 0, result.output
        values = read_summary(out / "summary.json")["values"]
        assert values["exact_zero"] is True
        assert len(read_table(out / "kjk.csv")) == 2 * 5

    def test_perm_degenerate(self, runner, tmp_path):
        """Test exit code 4 when every tour dies."""
        result = invoke(
            runner, "perm", "--dim", 1, "--beta", 1, "--r", 3, "--n", 4, "--tours", 10, "--out", tmp_path
        )
        assert result.exit_code == EXIT_DEGENERATE
        assert "error=degenerate-sampler" in result.output

    def test_metropolis_trace(self, runner, tmp_path):
        """Test the trace layout with two observables."""
        out = tmp_path / "mc"
        result = invoke(
            runner,
            "metropolis",
            "--beta", 0.2,
            "--n", 6,
            "--sweeps", 60,
            "--observable", "end_to_end_sq",
            "--observable", "contacts",
            "--out", out,
        )
        assert result.exit_code == 0, result.output
        rows = read_table(out / "trace.csv")
        assert list(rows[0]) == ["chain", "sweep", "end_to_end_sq", "contacts"]
        assert {"end_to_end_sq", "contacts"} <= set(read_summary(out / "summary.json")["estimates"])

    def test_dilute_ratio_pairs(self, runner, tmp_path):
        """Test the n:r pair syntax and the exact rows."""
        out = tmp_path / "dilute"
        result = invoke(
            runner, "dilute-ratio", "--dim", 2, "--beta", 0.3, "--pairs", "2:5,4:3", "--out", out
        )
        assert result.exit_code == 0, result.output
        rows = read_table(out / "dilute_ratio.csv")
        assert [row["method"] for row in rows] == ["exact", "exact"]
        assert float(rows[0]["ratio"]) == 1.0
        values = read_summary(out / "summary.json")["values"]
        assert values["fitted_on"] == [[2, 5]]
        assert values["bounded"] is False

    def test_dilute_ratio_fit_pairs(self, runner, tmp_path):
        """Test that --fit-pairs chooses the rows C is fitted on."""
        out = tmp_path / "dilute"
        result = invoke(
            runner, "dilute-ratio", "--dim", 2, "--beta", 0.3, "--pairs", "2:5,4:3",
            "--fit-pairs", "4:3", "--out", out,
        )
        assert result.exit_code == 0, result.output
        values = read_summary(out / "summary.json")["values"]
        assert values["fitted_on"] == [[4, 3]]
        assert values["held_out"] == 1
        assert values["bounded"] is True

    def test_bad_pair_syntax(self, runner, tmp_path):
        """Test that malformed pairs are a usage error."""
        result = runner.invoke(cli, ["degenerate", "--pairs", "25-20", "--out", str(tmp_path)])
        assert result.exit_code == 2
        assert "n:r" in result.output

    def test_plateau_needs_torus(self, runner, tmp_path):
        """Test that the plateau comparison requires --r."""
        result = invoke(runner, "plateau", "--n", 3, "--out", tmp_path)
        assert result.exit_code == EXIT_INVALID

    def test_catalog(self, runner):
        """Test that every experiment is listed."""
        result = invoke(runner, "catalog")
        assert result.exit_code == 0
        for name in ("enumerate", "lace-check", "dilute-ratio", "plateau"):
            assert name in result.output

    def test_missing_config_file(self, runner, tmp_path):
        """Test that a missing config file is an invalid configuration."""
        result = invoke(runner, "run", "--config", tmp_path / "absent.yaml")
        assert result.exit_code == EXIT_INVALID

    def test_unexpected_failure(self, runner, tmp_path, mocker):
        """Test exit code 1 for errors outside the known failure classes."""
        mocker.patch("wsawlab.interfaces.cli.main.run_experiment", side_effect=RuntimeError("boom"))
        result = invoke(runner, "perm", "--n", 3, "--out", tmp_path)
        assert result.exit_code == EXIT_INTERNAL
        assert 'error=internal reason="RuntimeError: boom"' in result.output

    def test_version(self, runner):
        """Test the version flag."""
        result = invoke(runner, "--version")
        assert __version__ in result.output


class TestClassify:
    """Test cases for mapping failures to exit codes."""

    def test_codes(self):
        """Test each failure class and the fallback."""
        assert classify(BudgetExceededError("nodes", 10, 11))[:2] == (EXIT_BUDGET, "budget-exceeded")
        assert classify(DegenerateSamplerError("dead", {"tours": 3}))[0] == EXIT_DEGENERATE
        assert "tours=3" in classify(DegenerateSamplerError("dead", {"tours": 3}))[2]
        assert classify(PreconditionError("bad"))[0] == EXIT_INVALID
        assert classify(FileNotFoundError("x"))[0] == EXIT_INVALID
        assert classify(RuntimeError("boom")) == (EXIT_INTERNAL, "internal", "RuntimeError: boom")
