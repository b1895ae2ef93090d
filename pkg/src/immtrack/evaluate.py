"""CLEAR-style tracking evaluation.

Per frame, predictions match ground truth by minimum-cost assignment on BEV
center distance, class-constrained, under a fixed distance gate. Matched
pairs are true positives; leftovers are false positives / negatives. An
identity switch is counted when a ground-truth track's matched prediction
id differs from the id it matched most recently (gaps between matches do
not reset that memory).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ContractError
from .scene import SceneFile, TrajectoryFile

GATE_SENTINEL = 1e9


@dataclass
class ClassStats:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    ids: int = 0
    gt_count: int = 0
    position_error_sum: float = 0.0

    @property
    def mota(self) -> float:
        if self.gt_count == 0:
            return 1.0 if (self.fp + self.fn + self.ids) == 0 else 0.0
        return 1.0 - (self.fp + self.fn + self.ids) / self.gt_count

    @property
    def mean_position_error(self) -> float:
        return self.position_error_sum / self.tp if self.tp else 0.0

    @property
    def fn_ratio(self) -> float:
        denom = self.tp + self.fn
        return self.fn / denom if denom else 0.0

    @property
    def fp_ratio(self) -> float:
        denom = self.tp + self.fn
        return self.fp / denom if denom else 0.0

    def to_dict(self) -> dict:
        return {
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "ids": self.ids,
            "gt_count": self.gt_count,
            "mota": self.mota,
            "mean_position_error": self.mean_position_error,
            "fn_ratio": self.fn_ratio,
            "fp_ratio": self.fp_ratio,
        }


@dataclass
class EvalReport:
    overall: ClassStats = field(default_factory=ClassStats)
    per_class: Dict[str, ClassStats] = field(default_factory=dict)
    amota: Optional[float] = None
    amota_points: Optional[List[Tuple[float, float]]] = None

    def to_dict(self) -> dict:
        data = {
            "overall": self.overall.to_dict(),
            "per_class": {name: stats.to_dict() for name, stats in self.per_class.items()},
        }
        if self.amota is not None:
            data["amota"] = self.amota
            data["amota_points"] = [list(p) for p in self.amota_points or []]
        return data


def evaluate(
    predictions: TrajectoryFile,
    scene: SceneFile,
    match_distance: float = 2.0,
    min_score: Optional[float] = None,
) -> EvalReport:
    """Score `predictions` against the ground truth carried by `scene`."""
    gt_frames = {f.frame_index: f for f in scene.frames}
    pred_frames = {f.frame_index: f for f in predictions.frames}
    if set(gt_frames) != set(pred_frames):
        missing = sorted(set(gt_frames) ^ set(pred_frames))
        raise ContractError(f"prediction and scene frame sets differ at {missing[:5]}")
    if not scene.has_ground_truth():
        raise ContractError("scene carries no ground truth to evaluate against")

    report = EvalReport()
    class_names = dict(scene.classes)
    last_match: Dict[Tuple[int, int], int] = {}  # (class, gt track) -> pred id

    for frame_index in sorted(gt_frames):
        gt_boxes = gt_frames[frame_index].ground_truth or []
        tracks = pred_frames[frame_index].tracks
        if min_score is not None:
            tracks = [t for t in tracks if t.detection_score >= min_score]

        n_gt, n_pred = len(gt_boxes), len(tracks)
        for gt in gt_boxes:
            _stats_for(report, class_names, gt.class_id).gt_count += 1
        report.overall.gt_count += n_gt

        if n_gt == 0 or n_pred == 0:
            matched_gt, matched_pred, pairs = set(), set(), []
        else:
            costs = np.full((n_gt, n_pred), GATE_SENTINEL)
            for gi, gt in enumerate(gt_boxes):
                for pi, track in enumerate(tracks):
                    if track.class_id != gt.class_id:
                        continue
                    dist = math.hypot(
                        gt.center[0] - track.state.x, gt.center[1] - track.state.y
                    )
                    if dist <= match_distance:
                        costs[gi, pi] = dist
            rows, cols = linear_sum_assignment(costs)
            pairs = [
                (int(g), int(p))
                for g, p in zip(rows, cols)
                if costs[g, p] < GATE_SENTINEL
            ]
            matched_gt = {g for g, _ in pairs}
            matched_pred = {p for _, p in pairs}

        for gi, pi in pairs:
            gt, track = gt_boxes[gi], tracks[pi]
            stats = _stats_for(report, class_names, gt.class_id)
            distance = math.hypot(gt.center[0] - track.state.x, gt.center[1] - track.state.y)
            for bucket in (stats, report.overall):
                bucket.tp += 1
                bucket.position_error_sum += distance
            key = (gt.class_id, gt.track_id)
            previous = last_match.get(key)
            if previous is not None and previous != track.track_id:
                stats.ids += 1
                report.overall.ids += 1
            last_match[key] = track.track_id

        for gi, gt in enumerate(gt_boxes):
            if gi not in matched_gt:
                _stats_for(report, class_names, gt.class_id).fn += 1
                report.overall.fn += 1
        for pi, track in enumerate(tracks):
            if pi not in matched_pred:
                _stats_for(report, class_names, track.class_id).fp += 1
                report.overall.fp += 1

    return report


def _stats_for(report: EvalReport, class_names: Dict[int, str], class_id: int) -> ClassStats:
    name = class_names.get(class_id, str(class_id))
    if name not in report.per_class:
        report.per_class[name] = ClassStats()
    return report.per_class[name]


def evaluate_with_amota(
    predictions: TrajectoryFile,
    scene: SceneFile,
    match_distance: float = 2.0,
    n_points: int = 40,
) -> EvalReport:
    """Full report plus MOTA averaged over a sweep of score thresholds.

    Per-threshold MOTA is clamped at zero before averaging, so sparse
    operating points cannot drag the average below zero.
    """
    report = evaluate(predictions, scene, match_distance)
    scores = sorted(
        {t.detection_score for f in predictions.frames for t in f.tracks}
    )
    if not scores:
        report.amota = 0.0
        report.amota_points = []
        return report
    thresholds = np.linspace(scores[0], scores[-1], n_points)
    points = []
    for threshold in thresholds:
        sub = evaluate(predictions, scene, match_distance, min_score=float(threshold))
        points.append((float(threshold), max(0.0, sub.overall.mota)))
    report.amota = float(np.mean([mota for _, mota in points]))
    report.amota_points = points
    return report


def render_report(report: EvalReport) -> str:
    """Fixed-width text table for terminal output."""
    header = f"{'class':<12}{'TP':>7}{'FP':>7}{'FN':>7}{'IDS':>6}{'GT':>7}" \
        f"{'MOTA':>9}{'err(m)':>9}{'FN/(TP+FN)':>12}{'FP/(TP+FN)':>12}"
    lines = [header, "-" * len(header)]
    rows = sorted(report.per_class.items()) + [("overall", report.overall)]
    for name, stats in rows:
        lines.append(
            f"{name:<12}{stats.tp:>7}{stats.fp:>7}{stats.fn:>7}{stats.ids:>6}"
            f"{stats.gt_count:>7}{stats.mota:>9.4f}{stats.mean_position_error:>9.3f}"
            f"{stats.fn_ratio:>12.4f}{stats.fp_ratio:>12.4f}"
        )
    if report.amota is not None:
        lines.append(f"AMOTA over {len(report.amota_points or [])} points: {report.amota:.4f}")
    return "\n".join(lines)
