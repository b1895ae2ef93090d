"""Trajectory lifecycle management.

Each trajectory keeps the full sequence of per-frame association flags
(1 = matched, 0 = coasted). Its score is a damped average of those flags:
recent frames dominate because the weight of a flag at offset x <= 0 from
the current frame is exp(lam * x). The score always lies in [0, 1]; it is 1
while every frame associated and decays toward 0 once associations stop,
recovering partially when the track re-associates. Phase transitions
compare the score with per-class active/tentative thresholds.

Classes not managed by the damping window fall back to streak counting:
confirm after `confirm_hits` consecutive hits, kill after `kill_misses`
consecutive misses.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import List

import numpy as np

from .errors import ConfigError, ContractError


class LifecyclePhase(enum.Enum):
    TENTATIVE = "tentative"
    ACTIVE = "active"
    TERMINATED = "terminated"


@dataclass
class DampingConfig:
    """Decay rate, phase thresholds, and the hard coast cap for one class."""

    lam: float = 0.4
    theta_active: float = 0.3
    theta_tentative: float = 0.05
    max_coast: int = 10

    def __post_init__(self):
        if self.lam <= 0.0:
            raise ConfigError(f"damping rate must be positive, got {self.lam}")
        if not (0.0 <= self.theta_tentative < self.theta_active <= 1.0):
            raise ConfigError(
                "thresholds must satisfy 0 <= tentative < active <= 1, got "
                f"({self.theta_active}, {self.theta_tentative})"
            )
        if self.max_coast < 1:
            raise ConfigError(f"max_coast must be at least 1, got {self.max_coast}")


@dataclass
class CountConfig:
    """Streak thresholds for classes outside damping-window management."""

    confirm_hits: int = 2
    kill_misses: int = 5


@dataclass
class AssociationHistory:
    """Per-frame association flags; index 0 is the birth frame."""

    flags: List[int] = field(default_factory=lambda: [1])
    birth_frame: int = 0

    def __post_init__(self):
        if not self.flags:
            raise ContractError("association history must not be empty")
        if self.flags[0] != 1:
            raise ContractError("a trajectory is born from an associated detection")

    def append(self, associated: bool) -> None:
        self.flags.append(1 if associated else 0)


def damping_function(lam: float, x: float) -> float:
    """Weight exp(lam * x) of a flag at non-positive frame offset x."""
    if x > 0.0:
        raise ValueError(f"frame offset must be non-positive, got {x}")
    if lam <= 0.0:
        raise ValueError(f"damping rate must be positive, got {lam}")
    return math.exp(lam * x)


def dw_score(history: AssociationHistory, t: int, config: DampingConfig) -> float:
    """Damped association average sum(w_i f(i - t)) / sum(f(i - t)).

    Because every weight rescales by the same factor as t advances, the ratio
    depends only on flag positions relative to the newest entry; it is
    evaluated there for numerical stability on long histories.
    """
    flags = np.asarray(history.flags, dtype=float)
    last = len(flags) - 1
    if t < last:
        raise ContractError(f"evaluation frame {t} precedes last flag index {last}")
    offsets = np.arange(len(flags)) - last
    weights = np.exp(config.lam * offsets)
    return float(np.dot(flags, weights) / weights.sum())


class DwRunning:
    """O(1) incremental form of :func:`dw_score`.

    One decayed numerator/denominator pair updated per frame:
    N <- N * exp(-lam) + w, D <- D * exp(-lam) + 1.
    """

    def __init__(self, lam: float):
        self._decay = math.exp(-lam)
        self._numerator = 0.0
        self._denominator = 0.0

    def step(self, associated: bool) -> float:
        self._numerator = self._numerator * self._decay + (1.0 if associated else 0.0)
        self._denominator = self._denominator * self._decay + 1.0
        return self.score

    @property
    def score(self) -> float:
        if self._denominator == 0.0:
            return 0.0
        return self._numerator / self._denominator


def step_phase(
    phase: LifecyclePhase,
    score: float,
    consecutive_misses: int,
    config: DampingConfig,
) -> LifecyclePhase:
    """Damping-window phase transition; Terminated is absorbing."""
    if phase is LifecyclePhase.TERMINATED:
        return LifecyclePhase.TERMINATED
    if consecutive_misses >= config.max_coast:
        return LifecyclePhase.TERMINATED
    if score >= config.theta_active:
        return LifecyclePhase.ACTIVE
    if score >= config.theta_tentative:
        return LifecyclePhase.TENTATIVE
    return LifecyclePhase.TERMINATED


def step_count_phase(
    phase: LifecyclePhase,
    hit_streak: int,
    miss_streak: int,
    config: CountConfig,
) -> LifecyclePhase:
    """Streak-count phase transition for non-damping-window classes."""
    if phase is LifecyclePhase.TERMINATED:
        return LifecyclePhase.TERMINATED
    if miss_streak >= config.kill_misses:
        return LifecyclePhase.TERMINATED
    if hit_streak >= config.confirm_hits:
        return LifecyclePhase.ACTIVE
    return phase
