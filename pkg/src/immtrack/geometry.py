"""Planar geometry for rotated bird's-eye-view boxes.

A BEV box is (cx, cy, width, length, yaw): length runs along the heading
direction, width across it. All polygon routines assume counterclockwise
vertex order, which :func:`box_corners` produces.
"""

from __future__ import annotations

import math

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    wrapped = math.remainder(theta, TWO_PI)
    if wrapped <= -math.pi:
        wrapped += TWO_PI
    return wrapped


def wrap_angle_array(theta: np.ndarray) -> np.ndarray:
    """Vectorized :func:`wrap_angle`."""
    wrapped = np.mod(np.asarray(theta, dtype=float) + np.pi, TWO_PI) - np.pi
    return np.where(wrapped <= -np.pi, wrapped + TWO_PI, wrapped)


def box_corners(cx: float, cy: float, width: float, length: float, yaw: float) -> np.ndarray:
    """Corners of a rotated BEV box, counterclockwise, shape (4, 2)."""
    c, s = math.cos(yaw), math.sin(yaw)
    half_l, half_w = 0.5 * length, 0.5 * width
    local = np.array(
        [
            [half_l, -half_w],
            [half_l, half_w],
            [-half_l, half_w],
            [-half_l, -half_w],
        ]
    )
    rot = np.array([[c, -s], [s, c]])
    return local @ rot.T + np.array([cx, cy])


def polygon_area(points: np.ndarray) -> float:
    """Shoelace area of a simple polygon (positive for CCW order)."""
    if len(points) < 3:
        return 0.0
    x, y = points[:, 0], points[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def clip_polygon(subject: np.ndarray, clip: np.ndarray) -> np.ndarray:
    """Sutherland-Hodgman clip of `subject` against convex CCW polygon `clip`."""
    output = [tuple(p) for p in subject]
    n = len(clip)
    for i in range(n):
        if not output:
            break
        ax, ay = clip[i]
        bx, by = clip[(i + 1) % n]
        ex, ey = bx - ax, by - ay
        points = output
        output = []
        prev = points[-1]
        prev_side = ex * (prev[1] - ay) - ey * (prev[0] - ax)
        for curr in points:
            curr_side = ex * (curr[1] - ay) - ey * (curr[0] - ax)
            if curr_side >= 0.0:
                if prev_side < 0.0:
                    output.append(_edge_intersection(prev, curr, (ax, ay), (bx, by)))
                output.append(curr)
            elif prev_side >= 0.0:
                output.append(_edge_intersection(prev, curr, (ax, ay), (bx, by)))
            prev, prev_side = curr, curr_side
    return np.array(output) if output else np.empty((0, 2))


def _edge_intersection(p1, p2, q1, q2):
    """Intersection of line p1-p2 with line q1-q2 (assumed non-parallel)."""
    x1, y1 = p1
    x2, y2 = p2
    x3, y3 = q1
    x4, y4 = q2
    denom = (x1 - x2) * (y3 - y4) - (y1 - y2) * (x3 - x4)
    t = ((x1 - x3) * (y3 - y4) - (y1 - y3) * (x3 - x4)) / denom
    return (x1 + t * (x2 - x1), y1 + t * (y2 - y1))


def convex_hull(points: np.ndarray) -> np.ndarray:
    """Convex hull (monotone chain), CCW, shape (m, 2)."""
    pts = sorted({(float(p[0]), float(p[1])) for p in points})
    if len(pts) <= 2:
        return np.array(pts)

    def half(seq):
        chain = []
        for p in seq:
            while len(chain) >= 2:
                ox, oy = chain[-2]
                ax, ay = chain[-1]
                if (ax - ox) * (p[1] - oy) - (ay - oy) * (p[0] - ox) <= 0.0:
                    chain.pop()
                else:
                    break
            chain.append(p)
        return chain

    lower = half(pts)
    upper = half(reversed(pts))
    return np.array(lower[:-1] + upper[:-1])


def intersection_area_bev(box_a: tuple, box_b: tuple) -> float:
    """Overlap area of two rotated BEV boxes (cx, cy, w, l, yaw)."""
    ca = box_corners(*box_a)
    cb = box_corners(*box_b)
    inter = clip_polygon(ca, cb)
    return abs(polygon_area(inter))


def iou_bev(box_a: tuple, box_b: tuple) -> float:
    """IoU of two rotated BEV boxes."""
    inter = intersection_area_bev(box_a, box_b)
    area_a = box_a[2] * box_a[3]
    area_b = box_b[2] * box_b[3]
    union = area_a + area_b - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def giou_bev(box_a: tuple, box_b: tuple) -> float:
    """Generalized IoU of two rotated BEV boxes, in (-1, 1].

    The enclosing region is the convex hull of both corner sets, so the
    value penalizes separation between disjoint boxes.
    """
    inter = intersection_area_bev(box_a, box_b)
    area_a = box_a[2] * box_a[3]
    area_b = box_b[2] * box_b[3]
    union = area_a + area_b - inter
    hull = convex_hull(np.vstack([box_corners(*box_a), box_corners(*box_b)]))
    hull_area = abs(polygon_area(hull))
    if union <= 0.0 or hull_area <= 0.0:
        return 0.0
    return inter / union - (hull_area - union) / hull_area
