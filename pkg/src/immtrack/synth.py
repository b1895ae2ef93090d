"""Synthetic maneuvering-target scenarios with known ground truth.

A target follows a sequence of motion regimes (cruise, accelerate,
decelerate, turn), each integrated with its exact closed form so tests can
check generated geometry against hand-computed kinematics. Detections are
ground-truth boxes with Gaussian pose noise, a score that falls off with
sensor distance, independent dropout, and Poisson clutter.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .errors import ConfigError
from .geometry import wrap_angle
from .preprocessing import Detection
from .scene import DEFAULT_CLASS_TABLE, GroundTruthBox, SceneFile, SceneFrame


class RegimeKind(enum.Enum):
    CRUISE = "cruise"
    ACCELERATE = "accelerate"
    DECELERATE = "decelerate"
    TURN = "turn"


@dataclass
class Regime:
    kind: RegimeKind
    frames: int
    accel: float = 0.0
    omega: float = 0.0

    def __post_init__(self):
        if self.frames <= 0:
            raise ConfigError(f"regime length must be positive, got {self.frames}")
        if self.kind is RegimeKind.TURN and self.omega == 0.0:
            raise ConfigError("turn regime needs a non-zero turn rate")
        if self.kind in (RegimeKind.ACCELERATE, RegimeKind.DECELERATE) and self.accel == 0.0:
            raise ConfigError(f"{self.kind.value} regime needs a non-zero acceleration")


@dataclass
class TargetSpec:
    class_id: int = 0
    start: Tuple[float, float, float] = (20.0, 0.0, 0.0)
    heading: float = 0.0
    speed: float = 5.0
    extent: Tuple[float, float, float] = (2.0, 4.5, 1.6)
    regimes: List[Regime] = field(default_factory=lambda: [Regime(RegimeKind.CRUISE, 40)])


@dataclass
class ScenarioSpec:
    scene_id: str = "synthetic"
    dt: float = 0.5
    targets: List[TargetSpec] = field(default_factory=lambda: [TargetSpec()])
    sensor_origin: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    position_sigma: float = 0.0
    yaw_sigma: float = 0.0
    score_sigma: float = 0.0
    score_base: float = 0.9
    score_distance_scale: float = 150.0
    dropout_probability: float = 0.0
    clutter_rate: float = 0.0
    clutter_range: Tuple[float, float] = (5.0, 60.0)
    clutter_score_range: Tuple[float, float] = (0.2, 0.5)
    clutter_class_id: Optional[int] = None
    clutter_extent: Tuple[float, float, float] = (2.0, 4.5, 1.6)


@dataclass
class _TargetCursor:
    x: float
    y: float
    z: float
    heading: float
    speed: float

    def step(self, regime: Regime, dt: float) -> None:
        """Advance one frame with the regime's exact closed form."""
        if regime.kind is RegimeKind.TURN:
            omega = regime.omega
            phi = self.heading + omega * dt
            self.x += (self.speed / omega) * (math.sin(phi) - math.sin(self.heading))
            self.y += (self.speed / omega) * (math.cos(self.heading) - math.cos(phi))
            self.heading = wrap_angle(phi)
            return
        accel = regime.accel if regime.kind is not RegimeKind.CRUISE else 0.0
        if accel < 0.0 and self.speed + accel * dt < 0.0:
            # Braking to a stop inside this step: integrate only to the
            # stop time so the target never reverses.
            t_stop = self.speed / -accel
            distance = self.speed * t_stop + 0.5 * accel * t_stop * t_stop
            self.speed = 0.0
        else:
            distance = self.speed * dt + 0.5 * accel * dt * dt
            self.speed += accel * dt
        self.x += distance * math.cos(self.heading)
        self.y += distance * math.sin(self.heading)


def generate_scenario(spec: ScenarioSpec, seed: int = 0) -> SceneFile:
    """Deterministic scene with ground truth for the given seed."""
    rng = np.random.default_rng(seed)
    # Frame k holds the state after k regime steps, so a schedule of N
    # steps produces N + 1 frames (frame 0 is the initial state).
    n_frames = max(sum(r.frames for r in t.regimes) for t in spec.targets) + 1
    origin = np.asarray(spec.sensor_origin, dtype=float)

    cursors = [
        _TargetCursor(
            x=t.start[0], y=t.start[1], z=t.start[2], heading=t.heading, speed=t.speed
        )
        for t in spec.targets
    ]
    schedules = [_regime_schedule(t.regimes) for t in spec.targets]

    scene = SceneFile(
        scene_id=spec.scene_id,
        classes=dict(DEFAULT_CLASS_TABLE),
        frame_rate=1.0 / spec.dt,
    )

    for frame_idx in range(n_frames):
        ground_truth = []
        detections = []
        for target_idx, (target, cursor) in enumerate(zip(spec.targets, cursors)):
            schedule = schedules[target_idx]
            if frame_idx > len(schedule):
                continue
            if frame_idx > 0:
                cursor.step(schedule[frame_idx - 1], spec.dt)
            gt = GroundTruthBox(
                track_id=target_idx,
                class_id=target.class_id,
                center=np.array([cursor.x, cursor.y, cursor.z]),
                extent=np.asarray(target.extent, dtype=float),
                yaw=cursor.heading,
            )
            ground_truth.append(gt)

            if rng.random() < spec.dropout_probability:
                continue
            center = gt.center + np.array(
                [
                    rng.normal(0.0, spec.position_sigma) if spec.position_sigma else 0.0,
                    rng.normal(0.0, spec.position_sigma) if spec.position_sigma else 0.0,
                    rng.normal(0.0, 0.5 * spec.position_sigma) if spec.position_sigma else 0.0,
                ]
            )
            yaw = wrap_angle(
                gt.yaw + (rng.normal(0.0, spec.yaw_sigma) if spec.yaw_sigma else 0.0)
            )
            distance = float(np.linalg.norm(center - origin))
            score = spec.score_base * math.exp(-distance / spec.score_distance_scale)
            if spec.score_sigma:
                score += rng.normal(0.0, spec.score_sigma)
            detections.append(
                Detection(
                    center=center,
                    extent=gt.extent.copy(),
                    yaw=yaw,
                    score=float(np.clip(score, 0.01, 1.0)),
                    class_id=target.class_id,
                    sensor_origin=origin.copy(),
                )
            )

        for _ in range(rng.poisson(spec.clutter_rate) if spec.clutter_rate else 0):
            distance = rng.uniform(*spec.clutter_range)
            angle = rng.uniform(-math.pi, math.pi)
            center = origin + np.array(
                [distance * math.cos(angle), distance * math.sin(angle), 0.0]
            )
            detections.append(
                Detection(
                    center=center,
                    extent=np.asarray(spec.clutter_extent, dtype=float),
                    yaw=rng.uniform(-math.pi, math.pi),
                    score=float(rng.uniform(*spec.clutter_score_range)),
                    class_id=(
                        spec.clutter_class_id
                        if spec.clutter_class_id is not None
                        else spec.targets[0].class_id
                    ),
                    sensor_origin=origin.copy(),
                )
            )

        scene.frames.append(
            SceneFrame(
                frame_index=frame_idx,
                timestamp=frame_idx * spec.dt,
                sensor_origin=origin.copy(),
                detections=detections,
                ground_truth=ground_truth,
            )
        )
    return scene


def _regime_schedule(regimes: List[Regime]) -> List[Regime]:
    schedule: List[Regime] = []
    for regime in regimes:
        schedule.extend([regime] * regime.frames)
    return schedule


def scenario_from_dict(data: dict) -> ScenarioSpec:
    """Build a scenario spec from parsed YAML/JSON (the CLI/service surface)."""
    try:
        targets = []
        for target in data.get("targets", [{}]):
            regimes = [
                Regime(
                    kind=RegimeKind(r["kind"]),
                    frames=int(r["frames"]),
                    accel=float(r.get("accel", 0.0)),
                    omega=float(r.get("omega", 0.0)),
                )
                for r in target.get("regimes", [{"kind": "cruise", "frames": 40}])
            ]
            targets.append(
                TargetSpec(
                    class_id=int(target.get("class_id", 0)),
                    start=tuple(target.get("start", (20.0, 0.0, 0.0))),
                    heading=float(target.get("heading", 0.0)),
                    speed=float(target.get("speed", 5.0)),
                    extent=tuple(target.get("extent", (2.0, 4.5, 1.6))),
                    regimes=regimes,
                )
            )
        return ScenarioSpec(
            scene_id=str(data.get("scene_id", "synthetic")),
            dt=float(data.get("dt", 0.5)),
            targets=targets,
            sensor_origin=tuple(data.get("sensor_origin", (0.0, 0.0, 0.0))),
            position_sigma=float(data.get("position_sigma", 0.0)),
            yaw_sigma=float(data.get("yaw_sigma", 0.0)),
            score_sigma=float(data.get("score_sigma", 0.0)),
            score_base=float(data.get("score_base", 0.9)),
            score_distance_scale=float(data.get("score_distance_scale", 150.0)),
            dropout_probability=float(data.get("dropout_probability", 0.0)),
            clutter_rate=float(data.get("clutter_rate", 0.0)),
            clutter_range=tuple(data.get("clutter_range", (5.0, 60.0))),
            clutter_score_range=tuple(data.get("clutter_score_range", (0.2, 0.5))),
            clutter_class_id=data.get("clutter_class_id"),
            clutter_extent=tuple(data.get("clutter_extent", (2.0, 4.5, 1.6))),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad scenario spec: {exc}") from exc
