"""Unit tests for config module."""

import pytest

from src.config import (
    SE_ODIA_PRESETS,
    Config,
    ConfigFileError,
    load_config_file,
    nearest_se_odia_preset,
    parse_bool,
)


@pytest.mark.unit
class TestEnvironmentDefaults:
    """Tests for environment-backed settings."""

    def test_seed_default(self, monkeypatch):
        """Test the seed defaults to 0."""
        monkeypatch.delenv("ODIA_SEED", raising=False)

        assert Config.get_default_seed() == 0

    def test_seed_from_env(self, monkeypatch):
        """Test ODIA_SEED is read."""
        monkeypatch.setenv("ODIA_SEED", "42")

        assert Config.get_default_seed() == 42

    def test_threads_floor(self, monkeypatch):
        """Test thread counts below one are raised to one."""
        monkeypatch.setenv("ODIA_THREADS", "0")

        assert Config.get_threads() == 1

    def test_output_dir_falls_back_to_cwd(self, monkeypatch, tmp_path):
        """Test an unset output dir means the working directory."""
        monkeypatch.delenv("ODIA_OUTPUT_DIR", raising=False)
        monkeypatch.chdir(tmp_path)

        assert Config.get_output_dir() == str(tmp_path)


@pytest.mark.unit
class TestLoadConfigFile:
    """Tests for key = value config documents."""

    def test_parses_keys_and_comments(self, tmp_path):
        """Test keys are lower-cased and comments dropped."""
        path = tmp_path / "run.cfg"
        path.write_text("# network\nK = 3\n\nsnr_db = 20  # dB\naxis_values = 0, 10\n")

        assert load_config_file(str(path)) == {"k": "3", "snr_db": "20", "axis_values": "0, 10"}

    def test_missing_file(self, tmp_path):
        """Test a missing file raises ConfigFileError."""
        with pytest.raises(ConfigFileError, match="not found"):
            load_config_file(str(tmp_path / "none.cfg"))

    def test_bare_key(self, tmp_path):
        """Test a key with no '=' is refused and named."""
        path = tmp_path / "run.cfg"
        path.write_text("k = 3\nsnr_db\n")

        with pytest.raises(ConfigFileError, match="expected 'key = value' for 'snr_db'"):
            load_config_file(str(path))

    def test_quoted_values_and_export(self, tmp_path):
        """Test shell-style quoting and export prefixes are accepted."""
        path = tmp_path / "run.cfg"
        path.write_text("export SCHEME = \"se_odia\"\neta_d_scaling='log_n'  # ln N\n")

        assert load_config_file(str(path)) == {"scheme": "se_odia", "eta_d_scaling": "log_n"}

    def test_no_variable_expansion(self, tmp_path, monkeypatch):
        """Test ${VAR} references are kept verbatim."""
        monkeypatch.setenv("ODIA_OUTPUT_DIR", "/tmp/elsewhere")
        path = tmp_path / "run.cfg"
        path.write_text("output = ${ODIA_OUTPUT_DIR}/odia.csv\n")

        assert load_config_file(str(path))["output"] == "${ODIA_OUTPUT_DIR}/odia.csv"

    def test_unknown_key(self, tmp_path):
        """Test unknown keys are refused."""
        path = tmp_path / "run.cfg"
        path.write_text("antennas = 4\n")

        with pytest.raises(ConfigFileError, match="unknown key"):
            load_config_file(str(path))


@pytest.mark.unit
class TestParseBool:
    """Tests for config booleans."""

    @pytest.mark.parametrize("value", ["1", "true", "Yes", " on "])
    def test_true_values(self, value):
        """Test accepted true spellings."""
        assert parse_bool(value) is True

    @pytest.mark.parametrize("value", ["0", "false", "NO", "off"])
    def test_false_values(self, value):
        """Test accepted false spellings."""
        assert parse_bool(value) is False

    def test_invalid(self):
        """Test anything else raises."""
        with pytest.raises(ConfigFileError):
            parse_bool("maybe")


@pytest.mark.unit
class TestNearestPreset:
    """Tests for SE-ODIA preset lookup."""

    def test_exact_match(self):
        """Test an exact (SNR, N) hit returns that row."""
        assert nearest_se_odia_preset(3.0, 50) is SE_ODIA_PRESETS["tab1_snr3_n50"]

    def test_snr_dominates(self):
        """Test 20 dB with N = 50 uses the 21 dB, N = 50 row."""
        preset = nearest_se_odia_preset(20.0, 48)

        assert (preset["eta_i"], preset["eta_d"], preset["alpha"]) == (1.0, 2.0, 0.8)

    def test_low_snr(self):
        """Test 0 dB maps to the 3 dB rows."""
        assert nearest_se_odia_preset(0.0, 20)["snr_db"] == 3.0
