"""Tracker configuration: defaults, YAML loading, per-class resolution.

Configuration is keyed by class *name*; scene files carry the id -> name
table that binds detections to these settings. Everything here has a
shipped default so an empty config file is valid.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import yaml

from .errors import ConfigError
from .imm import DEFAULT_STAY_PROBABILITY, ImmConfig, sticky_markov_matrix
from .kalman import (
    DEFAULT_INITIAL_KINEMATIC_VARIANCE,
    DEFAULT_MEASUREMENT_NOISE,
    DEFAULT_PROCESS_NOISE,
    NoiseConfig,
)
from .lifecycle import CountConfig, DampingConfig
from .motion import ModelKind
from .preprocessing import DbseKind, DbseParams

DEFAULT_CLASS_NAMES = (
    "car", "truck", "bus", "trailer", "pedestrian", "bicycle", "motorcycle",
)

IMM_CLASSES = ("bicycle", "bus", "car", "motorcycle", "truck")
DW_CLASSES = ("bus", "car", "pedestrian", "trailer")

# (theta_active, theta_tentative) per damping-window class.
DW_THRESHOLDS = {
    "bus": (0.4, 0.05),
    "car": (0.3, 0.05),
    "pedestrian": (0.3, 0.1),
    "trailer": (0.6, 0.1),
}

DBSE_DEFAULTS = {
    "car": DbseParams(DbseKind.POWER, alpha=0.01, beta=0.1),
    "trailer": DbseParams(DbseKind.POWER, alpha=0.01, beta=0.1),
    "bus": DbseParams(DbseKind.EXPONENTIAL, alpha=70.0, beta=0.1),
    "bicycle": DbseParams(DbseKind.EXPONENTIAL, alpha=90.0, beta=0.2),
}

# GIoU for large rigid classes, plain center distance for small agile ones.
ASSOCIATION_DEFAULTS = {
    "pedestrian": ("bev_center_distance", 2.0),
    "bicycle": ("bev_center_distance", 2.0),
    "motorcycle": ("bev_center_distance", 2.0),
}
ASSOCIATION_FALLBACK = ("bev_giou", 1.2)

DEFAULT_SCORE_THRESHOLD = 0.16
DEFAULT_NMS_IOU = 0.1
DEFAULT_DT = 0.5


def _default_config_dict() -> dict:
    return {
        "version": 1,
        "frame": {"default_dt": DEFAULT_DT},
        "preprocessing": {
            "dbse": {
                "enabled": True,
                "default": {"kind": "none"},
                "per_class": {
                    name: {
                        "kind": params.kind.value,
                        "alpha": params.alpha,
                        "beta": params.beta,
                    }
                    for name, params in DBSE_DEFAULTS.items()
                },
            },
            "score_filter": {
                "default_threshold": DEFAULT_SCORE_THRESHOLD,
                "per_class": {},
            },
            "nms": {"default_iou": DEFAULT_NMS_IOU, "per_class": {}},
        },
        "imm": {
            "enabled": True,
            "model_set": ["cv", "ca", "ctrv", "ctra"],
            "stay_probability": DEFAULT_STAY_PROBABILITY,
            "markov_matrix": None,
            "initial_probabilities": None,
            "use_mixing": False,
            "classes": list(IMM_CLASSES),
            "fallback_model": "ctra",
        },
        "noise": {
            "process": dict(DEFAULT_PROCESS_NOISE),
            "measurement": dict(DEFAULT_MEASUREMENT_NOISE),
            "observe_velocity": False,
            "initial_kinematic_variance": DEFAULT_INITIAL_KINEMATIC_VARIANCE,
            "per_class": {},
        },
        "association": {
            "method": "optimal",
            "default": {
                "metric": ASSOCIATION_FALLBACK[0],
                "gate": ASSOCIATION_FALLBACK[1],
            },
            "per_class": {
                name: {"metric": metric, "gate": gate}
                for name, (metric, gate) in ASSOCIATION_DEFAULTS.items()
            },
        },
        "lifecycle": {
            "dw": {
                "enabled": True,
                "lam": 0.4,
                "max_coast": 10,
                "classes": list(DW_CLASSES),
                "thresholds": {
                    name: list(pair) for name, pair in DW_THRESHOLDS.items()
                },
                "default_thresholds": [0.3, 0.05],
                "force_tentative_first_frame": False,
            },
            "count": {"confirm_hits": 2, "kill_misses": 5},
        },
    }


def _deep_merge(base: dict, override: dict) -> dict:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if key in merged and isinstance(merged[key], dict) and isinstance(value, dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def apply_overrides(config_dict: dict, overrides: Dict[str, object]) -> dict:
    """Apply {"dotted.key.path": value} overrides to a config dict."""
    result = copy.deepcopy(config_dict)
    for dotted, value in overrides.items():
        node = result
        parts = dotted.split(".")
        for part in parts[:-1]:
            if not isinstance(node.get(part), dict):
                node[part] = {}
            node = node[part]
        node[parts[-1]] = value
    return result


@dataclass
class TrackerConfig:
    """Validated tracker configuration resolved per class by name."""

    raw: dict = field(default_factory=_default_config_dict)

    def __post_init__(self):
        try:
            self.raw = _deep_merge(_default_config_dict(), self.raw or {})
            self._validate()
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid configuration: {exc}") from exc

    # -- construction -----------------------------------------------------

    @classmethod
    def from_dict(cls, data: Optional[dict]) -> "TrackerConfig":
        return cls(raw=data or {})

    @classmethod
    def from_yaml(cls, text: str) -> "TrackerConfig":
        try:
            data = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"config is not valid YAML: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config root must be a mapping")
        return cls.from_dict(data)

    @classmethod
    def load(cls, path: str) -> "TrackerConfig":
        try:
            with open(path, "r", encoding="utf-8") as handle:
                return cls.from_yaml(handle.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc

    def with_overrides(self, overrides: Dict[str, object]) -> "TrackerConfig":
        return TrackerConfig(raw=apply_overrides(self.raw, overrides))

    def to_dict(self) -> dict:
        return copy.deepcopy(self.raw)

    # -- validation --------------------------------------------------------

    def _validate(self) -> None:
        self.default_dt = float(self.raw["frame"]["default_dt"])
        if self.default_dt <= 0.0:
            raise ConfigError(f"default_dt must be positive, got {self.default_dt}")

        imm = self.raw["imm"]
        self.model_set = tuple(ModelKind(k) for k in imm["model_set"])
        self.fallback_model = ModelKind(imm["fallback_model"])
        method = self.raw["association"]["method"]
        if method not in ("greedy", "optimal"):
            raise ConfigError(f"unknown assignment method {method!r}")
        self.assignment_method = method

        # Build these eagerly so bad values fail at load, not mid-scene.
        self._imm_config_cache: Dict[bool, ImmConfig] = {}
        for name in set(list(imm["classes"]) + ["__fallback__"]):
            self.imm_config_for(name)
        self._noise_cache: Dict[str, NoiseConfig] = {}
        self._dbse_cache: Dict[str, DbseParams] = {}
        for name in DEFAULT_CLASS_NAMES:
            self.noise_for(name)
            self.dbse_for(name)
            self.damping_for(name)

    # -- per-class resolution ----------------------------------------------

    def uses_imm(self, class_name: str) -> bool:
        imm = self.raw["imm"]
        return bool(imm["enabled"]) and class_name in imm["classes"]

    def imm_config_for(self, class_name: str) -> ImmConfig:
        full = self.uses_imm(class_name)
        if full not in self._imm_config_cache:
            imm = self.raw["imm"]
            if full:
                model_set = self.model_set
                matrix = imm["markov_matrix"]
                if matrix is None:
                    matrix = sticky_markov_matrix(
                        len(model_set), float(imm["stay_probability"])
                    )
                mu0 = imm["initial_probabilities"]
                self._imm_config_cache[full] = ImmConfig(
                    model_set=model_set,
                    markov_matrix=np.asarray(matrix, dtype=float),
                    initial_probabilities=None if mu0 is None else np.asarray(mu0, dtype=float),
                    use_mixing=bool(imm["use_mixing"]),
                )
            else:
                self._imm_config_cache[full] = ImmConfig(
                    model_set=(self.fallback_model,),
                    markov_matrix=np.array([[1.0]]),
                    initial_probabilities=np.array([1.0]),
                )
        return self._imm_config_cache[full]

    def noise_for(self, class_name: str) -> NoiseConfig:
        if class_name not in self._noise_cache:
            noise = self.raw["noise"]
            override = noise["per_class"].get(class_name, {})
            process = {**noise["process"], **override.get("process", {})}
            measurement = {**noise["measurement"], **override.get("measurement", {})}
            for key in DEFAULT_PROCESS_NOISE:
                if process[key] < 0:
                    raise ConfigError(f"process noise {key} must be non-negative")
            for key in DEFAULT_MEASUREMENT_NOISE:
                if measurement[key] < 0:
                    raise ConfigError(f"measurement noise {key} must be non-negative")
            self._noise_cache[class_name] = NoiseConfig(
                process=process,
                measurement=measurement,
                observe_velocity=bool(
                    override.get("observe_velocity", noise["observe_velocity"])
                ),
                initial_kinematic_variance=float(
                    override.get(
                        "initial_kinematic_variance",
                        noise["initial_kinematic_variance"],
                    )
                ),
            )
        return self._noise_cache[class_name]

    def dbse_for(self, class_name: str) -> DbseParams:
        if class_name not in self._dbse_cache:
            section = self.raw["preprocessing"]["dbse"]
            if not section["enabled"]:
                entry = {"kind": "none"}
            else:
                entry = section["per_class"].get(class_name, section["default"])
            kind = DbseKind(entry.get("kind", "none"))
            self._dbse_cache[class_name] = DbseParams(
                kind=kind,
                alpha=float(entry.get("alpha", 1.0)),
                beta=float(entry.get("beta", 0.0)),
            )
        return self._dbse_cache[class_name]

    def score_threshold_for(self, class_name: str) -> float:
        section = self.raw["preprocessing"]["score_filter"]
        return float(section["per_class"].get(class_name, section["default_threshold"]))

    def nms_iou_for(self, class_name: str) -> float:
        section = self.raw["preprocessing"]["nms"]
        return float(section["per_class"].get(class_name, section["default_iou"]))

    def association_for(self, class_name: str) -> Tuple[str, float]:
        section = self.raw["association"]
        entry = section["per_class"].get(class_name, section["default"])
        return str(entry["metric"]), float(entry["gate"])

    def uses_dw(self, class_name: str) -> bool:
        dw = self.raw["lifecycle"]["dw"]
        return bool(dw["enabled"]) and class_name in dw["classes"]

    def damping_for(self, class_name: str) -> DampingConfig:
        dw = self.raw["lifecycle"]["dw"]
        pair = dw["thresholds"].get(class_name, dw["default_thresholds"])
        return DampingConfig(
            lam=float(dw["lam"]),
            theta_active=float(pair[0]),
            theta_tentative=float(pair[1]),
            max_coast=int(dw["max_coast"]),
        )

    def count_config(self) -> CountConfig:
        count = self.raw["lifecycle"]["count"]
        return CountConfig(
            confirm_hits=int(count["confirm_hits"]),
            kill_misses=int(count["kill_misses"]),
        )

    @property
    def force_tentative_first_frame(self) -> bool:
        return bool(self.raw["lifecycle"]["dw"]["force_tentative_first_frame"])
