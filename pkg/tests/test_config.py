"""Configuration loading, per-class resolution, and override semantics."""

import numpy as np
import pytest

from immtrack.config import TrackerConfig, apply_overrides
from immtrack.errors import ConfigError
from immtrack.motion import ModelKind
from immtrack.preprocessing import DbseKind


class TestDefaults:
    def test_empty_config_is_valid(self):
        cfg = TrackerConfig.from_yaml("")
        assert cfg.default_dt == 0.5

    def test_shipped_class_routing(self, default_config):
        cfg = default_config
        for name in ("bicycle", "bus", "car", "motorcycle", "truck"):
            assert cfg.uses_imm(name)
        assert not cfg.uses_imm("pedestrian")
        for name in ("bus", "car", "pedestrian", "trailer"):
            assert cfg.uses_dw(name)
        assert not cfg.uses_dw("bicycle")

    def test_shipped_dw_thresholds(self, default_config):
        assert default_config.damping_for("bus").theta_active == 0.4
        assert default_config.damping_for("car").theta_active == 0.3
        assert default_config.damping_for("car").theta_tentative == 0.05
        assert default_config.damping_for("pedestrian").theta_tentative == 0.1
        assert default_config.damping_for("trailer").theta_active == 0.6

    def test_shipped_dbse_params(self, default_config):
        car = default_config.dbse_for("car")
        assert car.kind is DbseKind.POWER and car.alpha == 0.01 and car.beta == 0.1
        bus = default_config.dbse_for("bus")
        assert bus.kind is DbseKind.EXPONENTIAL and bus.alpha == 70.0
        bicycle = default_config.dbse_for("bicycle")
        assert bicycle.alpha == 90.0 and bicycle.beta == 0.2
        assert default_config.dbse_for("pedestrian").kind is DbseKind.NONE

    def test_fallback_single_model(self, default_config):
        cfg = default_config.imm_config_for("pedestrian")
        assert cfg.model_set == (ModelKind.CTRA,)
        assert cfg.markov_matrix.shape == (1, 1)

    def test_association_routing(self, default_config):
        metric, gate = default_config.association_for("car")
        assert metric == "bev_giou" and gate == 1.2
        metric, gate = default_config.association_for("pedestrian")
        assert metric == "bev_center_distance" and gate == 2.0


class TestValidation:
    def test_bad_yaml_rejected(self):
        with pytest.raises(ConfigError):
            TrackerConfig.from_yaml("frame: [unclosed")

    def test_non_mapping_rejected(self):
        with pytest.raises(ConfigError):
            TrackerConfig.from_yaml("- a\n- b\n")

    def test_bad_dt_rejected(self):
        with pytest.raises(ConfigError):
            TrackerConfig.from_dict({"frame": {"default_dt": 0}})

    def test_bad_method_rejected(self):
        with pytest.raises(ConfigError):
            TrackerConfig.from_dict({"association": {"method": "magic"}})

    def test_bad_markov_rejected(self):
        with pytest.raises(ConfigError):
            TrackerConfig.from_dict({"imm": {"markov_matrix": [[0.5, 0.6], [0.5, 0.5]]}})

    def test_bad_threshold_order_rejected(self):
        with pytest.raises(ConfigError):
            TrackerConfig.from_dict(
                {"lifecycle": {"dw": {"thresholds": {"car": [0.05, 0.4]}}}}
            )

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            TrackerConfig.load(str(tmp_path / "none.yaml"))


class TestOverrides:
    def test_dotted_overrides(self):
        merged = apply_overrides({"a": {"b": 1}}, {"a.b": 2, "a.c.d": 3})
        assert merged == {"a": {"b": 2, "c": {"d": 3}}}

    def test_module_switches(self, default_config):
        off = default_config.with_overrides({
            "preprocessing.dbse.enabled": False,
            "imm.enabled": False,
            "lifecycle.dw.enabled": False,
        })
        assert off.dbse_for("car").kind is DbseKind.NONE
        assert not off.uses_imm("car")
        assert not off.uses_dw("car")
        # and the original is untouched
        assert default_config.uses_imm("car")

    def test_yaml_partial_override(self):
        cfg = TrackerConfig.from_yaml(
            "lifecycle:\n  dw:\n    lam: 0.7\n"
        )
        assert cfg.damping_for("car").lam == 0.7
        assert cfg.damping_for("car").theta_active == 0.3  # default preserved

    def test_noise_per_class_override(self):
        cfg = TrackerConfig.from_dict({
            "noise": {"per_class": {"car": {"measurement": {"position": 0.2}}}}
        })
        assert cfg.noise_for("car").measurement["position"] == 0.2
        assert cfg.noise_for("bus").measurement["position"] == 0.5
        assert cfg.noise_for("car").process["velocity"] == 1.0
