"""Columnar data series for external plotting.

Covers the damping-window score over time for five canonical association
patterns, and the score-enhancement weight as a function of distance for
both function families.
"""

from __future__ import annotations

from typing import Dict, List, Sequence

from .lifecycle import DwRunning
from .preprocessing import DbseKind, DbseParams, dbse_weight

# Association flag patterns: 1 = matched that frame, 0 = coasted.
#   1: matched at birth only
#   2: matched for the first three frames only
#   3: matched at birth, then every other frame
#   4: matched at birth, then every fourth frame
#   5: matched at birth, then at irregular intervals
_CONDITION_BUILDERS = {
    1: lambda n: [1] + [0] * (n - 1),
    2: lambda n: [1, 1, 1] + [0] * (n - 3),
    3: lambda n: [1 if i % 2 == 0 else 0 for i in range(n)],
    4: lambda n: [1 if i % 4 == 0 else 0 for i in range(n)],
    5: lambda n: [(1 if i in _IRREGULAR_HITS else 0) for i in range(n)],
}
_IRREGULAR_HITS = {0, 1, 4, 5, 6, 11, 17, 18, 24, 31, 32, 33}


def condition_flags(condition: int, n_frames: int) -> List[int]:
    if condition not in _CONDITION_BUILDERS:
        raise ValueError(f"condition must be 1..5, got {condition}")
    if n_frames < 3:
        raise ValueError(f"need at least 3 frames, got {n_frames}")
    return _CONDITION_BUILDERS[condition](n_frames)


def dw_condition_curves(lam: float = 0.4, n_frames: int = 40) -> Dict[int, List[float]]:
    """Score series per condition, evaluated frame by frame."""
    curves = {}
    for condition in sorted(_CONDITION_BUILDERS):
        running = DwRunning(lam)
        curves[condition] = [
            running.step(bool(flag)) for flag in condition_flags(condition, n_frames)
        ]
    return curves


def dbse_weight_curves(
    params: Sequence[DbseParams] = (
        DbseParams(DbseKind.POWER, alpha=0.01, beta=0.1),
        DbseParams(DbseKind.EXPONENTIAL, alpha=70.0, beta=0.1),
        DbseParams(DbseKind.EXPONENTIAL, alpha=90.0, beta=0.2),
    ),
    distances: Sequence[float] = tuple(range(1, 101)),
) -> Dict[str, List[float]]:
    """Weight-vs-distance columns keyed by a readable parameter label."""
    curves = {"distance": [float(d) for d in distances]}
    for p in params:
        label = f"{p.kind.value}(alpha={p.alpha:g},beta={p.beta:g})"
        curves[label] = [dbse_weight(p, float(d)) for d in distances]
    return curves


def render_dw_curves(lam: float = 0.4, n_frames: int = 40) -> str:
    """Tab-separated table: frame index then one score column per condition."""
    curves = dw_condition_curves(lam, n_frames)
    header = "frame\t" + "\t".join(f"condition_{c}" for c in sorted(curves))
    lines = [header]
    for i in range(n_frames):
        row = [str(i)] + [f"{curves[c][i]:.6f}" for c in sorted(curves)]
        lines.append("\t".join(row))
    return "\n".join(lines)


def render_dbse_curves(**kwargs) -> str:
    curves = dbse_weight_curves(**kwargs)
    labels = [k for k in curves if k != "distance"]
    header = "distance\t" + "\t".join(labels)
    lines = [header]
    for i, d in enumerate(curves["distance"]):
        row = [f"{d:g}"] + [f"{curves[label][i]:.6f}" for label in labels]
        lines.append("\t".join(row))
    return "\n".join(lines)
