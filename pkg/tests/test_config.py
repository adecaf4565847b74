"""Tests for configuration loading and validation."""

import json

import pytest

from daa_bench.config.settings import (
    MdpConfig,
    PerceptionBackendKind,
    ToolkitConfig,
    load_config,
    parse_config,
    require_ordered,
)
from daa_bench.core.errors import ConfigError
from daa_bench.core.models import FloatRange


class TestLoadConfig:
    """Test load_config."""

    def test_defaults_without_file(self):
        """Test no path gives the default configuration."""
        config = load_config(None)
        assert config == ToolkitConfig()
        assert config.encounters.duration == 50.0
        assert config.simulation.camera.horizontal_fov == 100.0

    def test_yaml_file(self, tmp_path):
        """Test a partial YAML document overrides only what it names."""
        path = tmp_path / "config.yaml"
        path.write_text(
            "seed: 11\n"
            "perception:\n  backend: stochastic\n  probability_scale: 0.5\n"
            "mdp:\n  h_points: 9\n",
            encoding="utf-8",
        )
        config = load_config(path)
        assert config.seed == 11
        assert config.perception.backend is PerceptionBackendKind.STOCHASTIC
        assert config.perception.probability_scale == 0.5
        assert config.mdp.h_points == 9
        assert config.mdp.dh_own_points == MdpConfig().dh_own_points

    def test_json_file(self, tmp_path):
        """Test JSON documents are accepted by suffix."""
        path = tmp_path / "config.json"
        document = {"encounters": {"hmd": [0.0, 50.0]}}
        path.write_text(json.dumps(document), encoding="utf-8")
        assert load_config(path).encounters.hmd == FloatRange(low=0.0, high=50.0)

    def test_empty_yaml(self, tmp_path):
        """Test an empty file means defaults."""
        path = tmp_path / "empty.yaml"
        path.write_text("", encoding="utf-8")
        assert load_config(path) == ToolkitConfig()

    def test_missing_file(self, tmp_path):
        """Test an unreadable path."""
        with pytest.raises(ConfigError, match="Cannot read"):
            load_config(tmp_path / "absent.yaml")

    def test_malformed_yaml(self, tmp_path):
        """Test text that does not parse."""
        path = tmp_path / "bad.yaml"
        path.write_text("seed: [1, 2\n", encoding="utf-8")
        with pytest.raises(ConfigError) as exc_info:
            load_config(path)
        assert exc_info.value.original_data == "seed: [1, 2\n"


class TestValidation:
    """Test configuration validation errors."""

    def test_invalid_value_lists_errors(self):
        """Test a negative duration is reported with its location."""
        with pytest.raises(ConfigError) as exc_info:
            parse_config({"encounters": {"duration": -5.0}})
        errors = exc_info.value.validation_errors
        assert any("encounters -> duration" in e for e in errors)

    def test_unknown_key_rejected(self):
        """Test extra keys are forbidden."""
        with pytest.raises(ConfigError) as exc_info:
            parse_config({"simulation": {"dt": 1.0, "turbo": True}})
        assert any("turbo" in e for e in exc_info.value.validation_errors)

    def test_top_level_must_be_mapping(self):
        """Test a list document."""
        with pytest.raises(ConfigError, match="mapping"):
            parse_config([1, 2, 3])

    def test_cpa_inside_duration(self):
        """Test a CPA time beyond the encounter."""
        with pytest.raises(ConfigError):
            parse_config({"encounters": {"duration": 30.0, "cpa_time": 40.0}})

    def test_inverted_range(self):
        """Test a range given high before low."""
        with pytest.raises(ConfigError):
            parse_config({"encounters": {"ownship_speed": [70.0, 60.0]}})

    def test_intruder_accel_probabilities(self):
        """Test probabilities that do not sum to one."""
        with pytest.raises(ConfigError):
            parse_config({"mdp": {"intruder_accel_probs": [0.5, 0.5, 0.5]}})

    def test_require_ordered(self):
        """Test the re-check of a range built without validation."""
        assert require_ordered("hmd", FloatRange(low=0.0, high=1.0)).high == 1.0
        with pytest.raises(ConfigError, match="hmd"):
            require_ordered("hmd", FloatRange.model_construct(low=2.0, high=1.0))

    def test_config_is_frozen(self):
        """Test configuration objects are immutable."""
        config = ToolkitConfig()
        with pytest.raises(ValueError):
            config.seed = 3
