"""Association checks: metric values against the geometry oracle, gate
discipline, and assignment against brute-force permutation enumeration."""

import itertools
import math

import numpy as np
import pytest
from shapely.geometry import Polygon

from immtrack.association import (
    GATED_COST,
    AssociationResult,
    CostMatrix,
    TrackEstimate,
    assign,
    build_costs,
    pair_cost,
)
from immtrack.errors import ConfigError
from immtrack.geometry import box_corners
from immtrack.motion import UnifiedState
from immtrack.preprocessing import Detection


def track(x, y, yaw=0.0, class_id=0, w=2.0, l=4.0):
    return TrackEstimate(
        state=UnifiedState(x=x, y=y, w=w, l=l, theta=yaw), class_id=class_id
    )


def det(x, y, yaw=0.0, class_id=0, w=2.0, l=4.0):
    return Detection(
        center=[x, y, 0.0], extent=[w, l, 1.5], yaw=yaw, score=0.5, class_id=class_id
    )


def const(value):
    return lambda class_id: value


class TestBuildCosts:
    def test_coincident_boxes_zero_cost(self):
        for metric in ("bev_center_distance", "bev_giou"):
            costs = build_costs([track(3, 4)], [det(3, 4)], const(metric), const(5.0))
            assert costs.values[0, 0] == pytest.approx(0.0, abs=1e-9)
            assert costs.gate_mask[0, 0]

    def test_disjoint_giou_cost_above_one(self):
        cost = pair_cost(track(0, 0), det(30, 0), "bev_giou")
        assert cost > 1.0

    def test_cross_class_always_gated(self):
        costs = build_costs(
            [track(0, 0, class_id=0)], [det(0, 0, class_id=1)], const("bev_giou"), const(100.0)
        )
        assert not costs.gate_mask[0, 0]
        assert costs.values[0, 0] == GATED_COST

    def test_gate_threshold_masks(self):
        costs = build_costs(
            [track(0, 0)], [det(1.0, 0), det(5.0, 0)], const("bev_center_distance"), const(2.0)
        )
        assert costs.gate_mask[0, 0] and not costs.gate_mask[0, 1]

    def test_unknown_metric_rejected(self):
        with pytest.raises(ConfigError):
            build_costs([track(0, 0)], [det(0, 0)], const("volume_iou"), const(1.0))

    def test_giou_matches_polygon_oracle(self, rng):
        for _ in range(25):
            tracks = [
                track(rng.uniform(-8, 8), rng.uniform(-8, 8), rng.uniform(-math.pi, math.pi))
                for _ in range(5)
            ]
            dets = [
                det(rng.uniform(-8, 8), rng.uniform(-8, 8), rng.uniform(-math.pi, math.pi))
                for _ in range(5)
            ]
            costs = build_costs(tracks, dets, const("bev_giou"), const(1e6))
            for ti, tr in enumerate(tracks):
                pa = Polygon(box_corners(*tr.bev_box()))
                for di, dt_ in enumerate(dets):
                    pb = Polygon(
                        box_corners(dt_.center[0], dt_.center[1], dt_.extent[0], dt_.extent[1], dt_.yaw)
                    )
                    inter = pa.intersection(pb).area
                    union = pa.area + pb.area - inter
                    hull = pa.union(pb).convex_hull.area
                    giou = inter / union - (hull - union) / hull
                    assert costs.values[ti, di] == pytest.approx(1.0 - giou, abs=1e-9)


def brute_force_minimum(values):
    """Minimum total cost over all full assignments of a square matrix."""
    n = values.shape[0]
    best = math.inf
    for perm in itertools.permutations(range(n)):
        best = min(best, sum(values[i, perm[i]] for i in range(n)))
    return best


def check_partition(result: AssociationResult, n_tracks, n_dets):
    seen_tracks = [t for t, _ in result.matches] + result.unmatched_tracks
    seen_dets = [d for _, d in result.matches] + result.unmatched_detections
    assert sorted(seen_tracks) == list(range(n_tracks))
    assert sorted(seen_dets) == list(range(n_dets))


class TestAssign:
    def test_empty_tracks(self):
        costs = CostMatrix(np.zeros((0, 3)), np.zeros((0, 3), dtype=bool))
        result = assign(costs, "optimal")
        assert result.matches == []
        assert result.unmatched_detections == [0, 1, 2]

    def test_single_admissible_pair(self):
        costs = CostMatrix(np.array([[0.4]]), np.array([[True]]))
        for method in ("greedy", "optimal"):
            assert assign(costs, method).matches == [(0, 0)]

    def test_unknown_method(self):
        costs = CostMatrix(np.array([[0.4]]), np.array([[True]]))
        with pytest.raises(ConfigError):
            assign(costs, "auction")

    def test_optimal_matches_brute_force_on_200_instances(self, rng):
        for _ in range(200):
            values = rng.integers(1, 10, (7, 7)).astype(float)
            costs = CostMatrix(values, np.ones((7, 7), dtype=bool))
            result = assign(costs, "optimal")
            total = sum(values[t, d] for t, d in result.matches)
            assert len(result.matches) == 7
            assert total == pytest.approx(brute_force_minimum(values))

    def test_greedy_never_beats_optimal(self, rng):
        for _ in range(200):
            values = rng.integers(1, 10, (7, 7)).astype(float)
            costs = CostMatrix(values, np.ones((7, 7), dtype=bool))
            greedy_total = sum(values[t, d] for t, d in assign(costs, "greedy").matches)
            optimal_total = sum(values[t, d] for t, d in assign(costs, "optimal").matches)
            assert optimal_total <= greedy_total + 1e-12

    def test_partition_property(self, rng):
        for _ in range(100):
            n_tracks, n_dets = rng.integers(0, 6, 2)
            values = rng.uniform(0.1, 3.0, (n_tracks, n_dets))
            mask = rng.random((n_tracks, n_dets)) < 0.6
            values = np.where(mask, values, GATED_COST)
            costs = CostMatrix(values, mask)
            for method in ("greedy", "optimal"):
                check_partition(assign(costs, method), n_tracks, n_dets)

    def test_gate_mask_is_absolute(self, rng):
        for method in ("greedy", "optimal"):
            for _ in range(100):
                values = rng.uniform(0.1, 3.0, (5, 5))
                mask = rng.random((5, 5)) < 0.4
                masked_values = np.where(mask, values, GATED_COST)
                result = assign(CostMatrix(masked_values, mask), method)
                for t, d in result.matches:
                    assert mask[t, d]

    def test_scale_invariance_of_optimal(self, rng):
        for _ in range(50):
            values = rng.integers(1, 10, (6, 6)).astype(float)
            costs = CostMatrix(values, np.ones((6, 6), dtype=bool))
            base = assign(costs, "optimal").matches
            for factor in (0.5, 2.0, 4.0):  # powers of two keep floats exact
                scaled = CostMatrix(values * factor, np.ones((6, 6), dtype=bool))
                assert assign(scaled, "optimal").matches == base

    def test_optimal_prefers_cardinality_over_cheapness(self):
        # Greedy takes the cheapest pair (0, 0) and strands track 1 behind
        # the gate; optimal sacrifices cost to keep both tracks matched.
        values = np.array([[1.0, 3.0], [2.0, GATED_COST]])
        mask = np.array([[True, True], [True, False]])
        greedy = assign(CostMatrix(values, mask), "greedy")
        assert greedy.matches == [(0, 0)]
        assert greedy.unmatched_tracks == [1]
        optimal = assign(CostMatrix(values, mask), "optimal")
        assert sorted(optimal.matches) == [(0, 1), (1, 0)]
