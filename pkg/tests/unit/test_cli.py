"""Unit tests for CLI module."""

import numpy as np
import pytest
from click.testing import CliRunner

import src
from src.cli import cli_main, main
from src.harness import HarnessError, InvariantCheck
from src.models import NetworkConfig, SeOdiaParams, SlopeEstimate, SweepPoint, SweepResult


@pytest.fixture
def runner():
    """Create a CLI test runner."""
    return CliRunner()


@pytest.fixture
def sample_result():
    """A one-point sweep result."""
    point = SweepPoint(
        scheme="se_odia",
        config=NetworkConfig(K=3, N=20, M=4, L=2, S=2, snr_db=3.0),
        n_f=None,
        se_params=SeOdiaParams(eta_i=2.5, eta_d=2.5, alpha=0.8),
        drops=10,
        sum_rate_mean=3.2,
        sum_rate_sem=0.1,
        sum_interference_mean=1.0,
        residual_intra_mean=0.0,
        outage_rate=0.0,
        resampled=0,
    )
    return SweepResult(points=(point,), provenance={"config_hash": "0" * 16, "seed": "0"})


@pytest.fixture
def sweep_config(tmp_path):
    """Small config file for a real sweep."""
    path = tmp_path / "sweep.cfg"
    path.write_text(
        "# two-point odia sweep\n"
        "k = 3\nn = 6\nm = 4\nl = 2\ns = 2\nsnr_db = 10\n"
        "scheme = odia\naxis = snr_db\naxis_values = 10, 20\ndrops = 3\n"
    )
    return path


@pytest.mark.unit
class TestMainGroup:
    """Tests for the top-level command group."""

    def test_help(self, runner):
        """Test help lists the subcommands."""
        result = runner.invoke(main, ["--help"])

        assert result.exit_code == 0
        for name in ("sweep", "preset", "eta-cdf", "decay", "codebook", "validate", "curves"):
            assert name in result.output

    def test_version(self, runner):
        """Test --version prints the package version."""
        result = runner.invoke(main, ["--version"])

        assert result.exit_code == 0
        assert src.__version__ in result.output

    def test_unknown_command(self, runner):
        """Test unknown subcommands fail."""
        assert runner.invoke(main, ["plot"]).exit_code != 0


@pytest.mark.unit
class TestSweepCommand:
    """Tests for config-driven sweeps."""

    def test_runs_and_writes_csv(self, runner, sweep_config, tmp_path):
        """Test a config file sweep writes one row per axis value."""
        out = tmp_path / "odia.csv"
        result = runner.invoke(main, ["sweep", "--config", str(sweep_config), "--out", str(out)])

        assert result.exit_code == 0, result.output
        assert "✅ Wrote 2 rows" in result.output
        assert len(out.read_text().splitlines()) == 3 + 1 + 2

    def test_flags_override_config(self, runner, sweep_config, tmp_path, mocker):
        """Test --drops and --seed win over the config file."""
        run = mocker.patch("src.cli.run_sweeps", return_value=SweepResult(points=()))
        mocker.patch("src.cli.save_sweep_csv", return_value=str(tmp_path / "x.csv"))

        result = runner.invoke(
            main, ["sweep", "--config", str(sweep_config), "--drops", "7", "--seed", "9"]
        )

        assert result.exit_code == 0, result.output
        spec = run.call_args.args[0][0]
        assert spec.drops == 7
        assert spec.base.seed == 9

    def test_missing_config_is_usage_error(self):
        """Test sweep without --config exits 2."""
        assert cli_main(["sweep"]) == 2

    def test_bad_config_reports_error(self, runner, tmp_path):
        """Test a malformed config file exits 1 with an error line."""
        path = tmp_path / "bad.cfg"
        path.write_text("colour = blue\n")

        result = runner.invoke(main, ["sweep", "--config", str(path)])

        assert result.exit_code == 1
        assert "❌ Error" in result.output
        assert "unknown key" in result.output


@pytest.mark.unit
class TestPresetCommand:
    """Tests for figure presets."""

    def test_figure_preset(self, runner, mocker, sample_result, tmp_path):
        """Test fig2 runs its four sweeps with the requested drops."""
        run = mocker.patch("src.cli.run_sweeps", return_value=sample_result)
        out = tmp_path / "fig2.csv"

        result = runner.invoke(main, ["preset", "fig2", "--drops", "5", "--out", str(out)])

        assert result.exit_code == 0, result.output
        specs = run.call_args.args[0]
        assert len(specs) == 4
        assert all(spec.drops == 5 for spec in specs)
        assert out.exists()

    def test_grid_search_preset(self, runner, mocker, sample_result, tmp_path):
        """Test tab1-grid prints the best thresholds."""
        grid = mocker.patch(
            "src.cli.grid_search_se_odia", return_value=(sample_result, sample_result.points[0])
        )

        result = runner.invoke(
            main, ["preset", "tab1-grid", "--snr-db", "3", "--n", "20", "--drops", "10",
                   "--out", str(tmp_path / "grid.csv")],
        )

        assert result.exit_code == 0, result.output
        assert "(2.5, 2.5, 0.8)" in result.output
        assert grid.call_args.args[0].N == 20

    def test_unknown_preset(self, runner):
        """Test unknown preset names are usage errors."""
        assert runner.invoke(main, ["preset", "fig9"]).exit_code == 2

    def test_harness_error_exits_one(self, runner, mocker):
        """Test harness failures print an error and exit 1."""
        mocker.patch("src.cli.run_sweeps", side_effect=HarnessError("3 of 10 drops failed"))

        result = runner.invoke(main, ["preset", "fig5", "--drops", "10"])

        assert result.exit_code == 1
        assert "❌ Error: 3 of 10 drops failed" in result.output


@pytest.mark.unit
class TestExperimentCommands:
    """Tests for eta-cdf and decay."""

    @pytest.fixture
    def estimate(self):
        return SlopeEstimate(slope=3.01, intercept=0.0, r_squared=0.99,
                             x=np.array([-3.0, -2.0]), y=np.array([-9.0, -6.0]))

    def test_eta_cdf_writes_points(self, runner, mocker, estimate, tmp_path):
        """Test eta-cdf reports the slope and saves the fitted points."""
        experiment = mocker.patch("src.cli.eta_cdf_experiment", return_value=estimate)
        out = tmp_path / "cdf.dat"

        result = runner.invoke(main, ["eta-cdf", "--samples", "5000", "--out", str(out)])

        assert result.exit_code == 0, result.output
        assert "expected 3" in result.output
        assert experiment.call_args.args[1] == 5000
        assert out.read_text().splitlines()[0] == "# log_eta log_cdf"

    def test_decay_parses_user_counts(self, runner, mocker, estimate):
        """Test --n-values is parsed and sorted."""
        experiment = mocker.patch("src.cli.decay_experiment", return_value=estimate)

        result = runner.invoke(main, ["decay", "--n-values", "100,10,30", "--drops", "20"])

        assert result.exit_code == 0, result.output
        assert experiment.call_args.args[1] == (10, 30, 100)
        assert experiment.call_args.kwargs["drops"] == 20


@pytest.mark.unit
class TestCodebookCommands:
    """Tests for codebook generation and checks."""

    def test_gen_then_check(self, runner, tmp_path):
        """Test a generated random codebook passes its check."""
        path = tmp_path / "cb.txt"

        gen = runner.invoke(main, ["codebook", "gen", "--s", "2", "--n-f", "3", "--kind", "random",
                                   "--out", str(path)])
        check = runner.invoke(main, ["codebook", "check", str(path)])

        assert gen.exit_code == 0, gen.output
        assert check.exit_code == 0, check.output
        assert "printed bound = 0.125000" in check.output

    def test_gen_needs_out(self, runner):
        """Test codebook gen without --out is a usage error."""
        result = runner.invoke(main, ["codebook", "gen", "--s", "2", "--n-f", "2"])

        assert result.exit_code == 2

    def test_check_non_compliant(self, runner, mocker, tmp_path):
        """Test a codebook beyond the bound exits 1."""
        mocker.patch("src.cli.load_codebook")
        mocker.patch("src.cli.check_codebook", return_value={
            "min_chordal_sq": 0.9, "bound": 0.6, "literal_bound": 0.25, "compliant": 0.0,
        })

        result = runner.invoke(main, ["codebook", "check", str(tmp_path / "cb.txt")])

        assert result.exit_code == 1
        assert "exceeds" in result.output

    def test_check_missing_file(self, runner, tmp_path):
        """Test a missing codebook is reported."""
        result = runner.invoke(main, ["codebook", "check", str(tmp_path / "none.txt")])

        assert result.exit_code == 1
        assert "not found" in result.output


@pytest.mark.unit
class TestValidateCommand:
    """Tests for the invariant suite command."""

    def test_all_pass(self, runner, mocker):
        """Test passing checks exit 0."""
        suite = mocker.patch("src.cli.run_invariant_suite", return_value=[
            InvariantCheck("zf exactness", True, "worst 1e-30"),
        ])

        result = runner.invoke(main, ["validate"])

        assert result.exit_code == 0
        assert "✓ zf exactness" in result.output
        assert suite.call_args.kwargs["drops"] == 50

    def test_failure_exits_one(self, runner, mocker):
        """Test any failed check exits 1."""
        mocker.patch("src.cli.run_invariant_suite", return_value=[
            InvariantCheck("zf exactness", True, "worst 1e-30"),
            InvariantCheck("metric decomposition", False, "worst 1e-3"),
        ])

        assert cli_main(["validate", "--drops", "5"]) == 1


@pytest.mark.unit
class TestCurvesCommand:
    """Tests for curve export."""

    def test_curves(self, runner, sweep_config, tmp_path):
        """Test curves splits a real sweep CSV."""
        out = tmp_path / "odia.csv"
        runner.invoke(main, ["sweep", "--config", str(sweep_config), "--out", str(out)])

        result = runner.invoke(main, ["curves", str(out), str(tmp_path / "curves")])

        assert result.exit_code == 0, result.output
        assert (tmp_path / "curves" / "odia_K3_M4_L2_S2_snr_db.dat").exists()
