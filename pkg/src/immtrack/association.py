"""Track-to-detection matching: cost construction, gating, assignment.

Costs are either BEV center distance or 1 - GIoU of the BEV boxes, chosen
per class. Pairs of different classes are always inadmissible; admissible
pairs beyond the class gate are masked out too. Masked entries carry a
sentinel cost far above anything a gate allows, so the optimal solver can
run on the dense matrix and masked picks are dropped afterwards, which
yields a maximum-cardinality, minimum-cost matching over admissible pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ConfigError
from .geometry import giou_bev
from .motion import UnifiedState
from .preprocessing import Detection

GATED_COST = 1e9

METRIC_CENTER_DISTANCE = "bev_center_distance"
METRIC_GIOU = "bev_giou"
_METRICS = (METRIC_CENTER_DISTANCE, METRIC_GIOU)


@dataclass
class TrackEstimate:
    """Fused predicted state of one live track, as association sees it."""

    state: UnifiedState
    class_id: int
    covariance: Optional[np.ndarray] = None

    def bev_box(self) -> tuple:
        s = self.state
        return (s.x, s.y, s.w, s.l, s.theta)


@dataclass
class CostMatrix:
    values: np.ndarray
    gate_mask: np.ndarray
    sentinel: float = GATED_COST


@dataclass
class AssociationResult:
    matches: List[Tuple[int, int]] = field(default_factory=list)
    unmatched_tracks: List[int] = field(default_factory=list)
    unmatched_detections: List[int] = field(default_factory=list)


def pair_cost(track: TrackEstimate, det: Detection, metric: str) -> float:
    if metric == METRIC_CENTER_DISTANCE:
        return math.hypot(track.state.x - det.center[0], track.state.y - det.center[1])
    if metric == METRIC_GIOU:
        return 1.0 - giou_bev(track.bev_box(), det.bev_box())
    raise ConfigError(f"unknown association metric {metric!r}")


def build_costs(
    tracks: Sequence[TrackEstimate],
    detections: Sequence[Detection],
    metric_for_class,
    gate_for_class,
) -> CostMatrix:
    """Dense cost matrix with gating.

    `metric_for_class` and `gate_for_class` are callables (class_id) -> value
    so per-class configuration stays outside this module.
    """
    n_tracks, n_dets = len(tracks), len(detections)
    values = np.full((n_tracks, n_dets), GATED_COST)
    mask = np.zeros((n_tracks, n_dets), dtype=bool)

    for ti, track in enumerate(tracks):
        metric = metric_for_class(track.class_id)
        gate = gate_for_class(track.class_id)
        if metric not in _METRICS:
            raise ConfigError(f"unknown association metric {metric!r}")
        if gate >= GATED_COST:
            raise ConfigError(f"gate {gate} must stay below the sentinel cost")
        for di, det in enumerate(detections):
            if det.class_id != track.class_id:
                continue
            cost = pair_cost(track, det, metric)
            if cost <= gate:
                values[ti, di] = cost
                mask[ti, di] = True

    return CostMatrix(values=values, gate_mask=mask)


def assign(costs: CostMatrix, method: str = "optimal") -> AssociationResult:
    """Match tracks to detections.

    greedy: repeatedly take the globally cheapest admissible pair.
    optimal: minimum-total-cost assignment over admissible pairs
    (maximum cardinality first, enforced by the gate sentinel).
    """
    n_tracks, n_dets = costs.values.shape
    if n_tracks == 0 or n_dets == 0 or not costs.gate_mask.any():
        return AssociationResult(
            matches=[],
            unmatched_tracks=list(range(n_tracks)),
            unmatched_detections=list(range(n_dets)),
        )

    if method == "greedy":
        matches = _assign_greedy(costs)
    elif method == "optimal":
        rows, cols = linear_sum_assignment(costs.values)
        matches = [
            (int(r), int(c)) for r, c in zip(rows, cols) if costs.gate_mask[r, c]
        ]
    else:
        raise ConfigError(f"unknown assignment method {method!r}")

    matches.sort()
    matched_tracks = {t for t, _ in matches}
    matched_dets = {d for _, d in matches}
    return AssociationResult(
        matches=matches,
        unmatched_tracks=[t for t in range(n_tracks) if t not in matched_tracks],
        unmatched_detections=[d for d in range(n_dets) if d not in matched_dets],
    )


def _assign_greedy(costs: CostMatrix) -> List[Tuple[int, int]]:
    values = np.where(costs.gate_mask, costs.values, np.inf)
    matches = []
    while np.isfinite(values).any():
        flat = int(np.argmin(values))
        row, col = divmod(flat, values.shape[1])
        matches.append((row, col))
        values[row, :] = np.inf
        values[:, col] = np.inf
    return matches
