"""Detection-stream conditioning, applied in order: distance-based score
enhancement, score filter, non-maximum suppression.

Score enhancement multiplies each detection score by a weight that decays
with distance from the sensor, sharpening the separation between confident
nearby boxes and noisy distant ones before the fixed-threshold filter runs.
Enhanced scores may exceed 1 near the sensor; they are deliberately not
re-clamped, otherwise the mechanism would be invisible to the filter.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Dict, List, Mapping, Optional

import numpy as np

from .errors import ConfigError
from .geometry import iou_bev

SCORE_EPSILON = 1e-12


class DbseKind(enum.Enum):
    POWER = "power"
    EXPONENTIAL = "exponential"
    NONE = "none"


@dataclass
class DbseParams:
    """Weight-function choice and shape parameters for one class."""

    kind: DbseKind = DbseKind.NONE
    alpha: float = 1.0
    beta: float = 0.0

    def __post_init__(self):
        if self.alpha <= 0.0:
            raise ConfigError(f"dbse alpha must be positive, got {self.alpha}")
        if self.beta < 0.0:
            raise ConfigError(f"dbse beta must be non-negative, got {self.beta}")


@dataclass(eq=False)
class Detection:
    """One detector output box in the global frame."""

    center: np.ndarray
    extent: np.ndarray
    yaw: float
    score: float
    class_id: int
    velocity: Optional[np.ndarray] = None
    sensor_origin: Optional[np.ndarray] = None

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        self.extent = np.asarray(self.extent, dtype=float)
        if self.velocity is not None:
            self.velocity = np.asarray(self.velocity, dtype=float)
        if self.sensor_origin is not None:
            self.sensor_origin = np.asarray(self.sensor_origin, dtype=float)

    def sensor_distance(self) -> Optional[float]:
        if self.sensor_origin is None:
            return None
        return float(np.linalg.norm(self.center - self.sensor_origin))

    def bev_box(self) -> tuple:
        return (
            float(self.center[0]),
            float(self.center[1]),
            float(self.extent[0]),
            float(self.extent[1]),
            float(self.yaw),
        )


def dbse_weight(params: DbseParams, distance: float) -> float:
    """Distance weight f(d): power form d**-alpha + beta, exponential form
    exp(-d / alpha) + beta, or 1 when disabled."""
    if params.kind is DbseKind.NONE:
        return 1.0
    if distance <= 0.0:
        raise ValueError(f"distance must be positive, got {distance}")
    if params.kind is DbseKind.POWER:
        return distance ** (-params.alpha) + params.beta
    return math.exp(-distance / params.alpha) + params.beta


def dbse_enhance(
    detections: List[Detection],
    params_by_class: Mapping[int, DbseParams],
    default: Optional[DbseParams] = None,
) -> List[Detection]:
    """Rescale detection scores by the per-class distance weight.

    Geometry, class, order, and count are untouched; only scores change.
    """
    default = default or DbseParams()
    out = []
    for det in detections:
        params = params_by_class.get(det.class_id, default)
        if params.kind is DbseKind.NONE:
            out.append(det)
            continue
        distance = det.sensor_distance()
        if distance is None:
            raise ConfigError(
                f"score enhancement enabled for class {det.class_id} "
                "but the detection has no sensor origin"
            )
        out.append(replace(det, score=det.score * dbse_weight(params, distance)))
    return out


def score_filter(
    detections: List[Detection],
    thresholds: Mapping[int, float],
    default_threshold: float = 0.0,
) -> List[Detection]:
    """Keep detections whose score reaches the class threshold (stable order)."""
    return [
        det
        for det in detections
        if det.score >= thresholds.get(det.class_id, default_threshold)
    ]


def nms(
    detections: List[Detection],
    iou_thresholds: Mapping[int, float],
    default_threshold: float = 0.1,
) -> List[Detection]:
    """Greedy per-class suppression on BEV rotated-box IoU.

    Candidates are visited in descending score; score ties prefer the box
    closer to the sensor, then earlier input position. Survivors come back
    in their original input order.
    """
    keep = [True] * len(detections)
    by_class: Dict[int, List[int]] = {}
    for idx, det in enumerate(detections):
        by_class.setdefault(det.class_id, []).append(idx)

    for class_id, indices in by_class.items():
        threshold = iou_thresholds.get(class_id, default_threshold)
        order = sorted(
            indices,
            key=lambda i: (
                -detections[i].score,
                detections[i].sensor_distance() or 0.0,
                i,
            ),
        )
        suppressed = set()
        for pos, i in enumerate(order):
            if i in suppressed:
                continue
            box_i = detections[i].bev_box()
            for j in order[pos + 1:]:
                if j in suppressed:
                    continue
                if iou_bev(box_i, detections[j].bev_box()) > threshold:
                    suppressed.add(j)
                    keep[j] = False

    return [det for det, kept in zip(detections, keep) if kept]
