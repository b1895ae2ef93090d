"""Scene and trajectory files.

Both are JSON Lines: a header record followed by one record per frame.
The header carries a format version, the scene id, and the class table
(id -> name) that binds detections to per-class configuration. Frames must
appear with strictly increasing indices. Ground truth is optional and only
needed for evaluation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .errors import DataError
from .motion import UnifiedState
from .preprocessing import Detection

SCENE_VERSION = 1
TRAJECTORY_VERSION = 1

DEFAULT_CLASS_TABLE = {
    0: "car",
    1: "truck",
    2: "bus",
    3: "trailer",
    4: "pedestrian",
    5: "bicycle",
    6: "motorcycle",
}


@dataclass
class GroundTruthBox:
    track_id: int
    class_id: int
    center: np.ndarray
    extent: np.ndarray
    yaw: float

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        self.extent = np.asarray(self.extent, dtype=float)


@dataclass
class SceneFrame:
    frame_index: int
    timestamp: float
    sensor_origin: np.ndarray
    detections: List[Detection] = field(default_factory=list)
    ground_truth: Optional[List[GroundTruthBox]] = None

    def __post_init__(self):
        self.sensor_origin = np.asarray(self.sensor_origin, dtype=float)


@dataclass
class SceneFile:
    scene_id: str
    classes: Dict[int, str]
    frame_rate: float
    frames: List[SceneFrame] = field(default_factory=list)

    def has_ground_truth(self) -> bool:
        return any(f.ground_truth is not None for f in self.frames)


@dataclass
class EmittedTrack:
    """One active track as written to the trajectory file."""

    track_id: int
    class_id: int
    state: UnifiedState
    dw_score: float
    detection_score: float


@dataclass
class FrameOutput:
    frame_index: int
    timestamp: float
    tracks: List[EmittedTrack] = field(default_factory=list)


@dataclass
class TrajectoryFile:
    scene_id: str
    classes: Dict[int, str]
    frames: List[FrameOutput] = field(default_factory=list)


def _parse_line(line: str, line_no: int, path: str) -> dict:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}:{line_no}: malformed JSON ({exc})") from exc
    if not isinstance(record, dict):
        raise DataError(f"{path}:{line_no}: record must be a JSON object")
    return record


def _class_table(record: dict, line_no: int, path: str) -> Dict[int, str]:
    raw = record.get("classes")
    if raw is None:
        return dict(DEFAULT_CLASS_TABLE)
    try:
        return {int(k): str(v) for k, v in raw.items()}
    except (TypeError, ValueError, AttributeError) as exc:
        raise DataError(f"{path}:{line_no}: bad class table ({exc})") from exc


def parse_scene(text: str, path: str = "<memory>") -> SceneFile:
    """Parse and validate scene JSONL from a string."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise DataError(f"{path}: empty scene file")

    header = _parse_line(lines[0], 1, path)
    if header.get("version") != SCENE_VERSION:
        raise DataError(
            f"{path}:1: expected scene version {SCENE_VERSION}, got {header.get('version')!r}"
        )
    classes = _class_table(header, 1, path)
    scene = SceneFile(
        scene_id=str(header.get("scene_id", "scene")),
        classes=classes,
        frame_rate=float(header.get("frame_rate", 2.0)),
    )

    last_index = None
    for line_no, line in enumerate(lines[1:], start=2):
        record = _parse_line(line, line_no, path)
        try:
            frame_index = int(record["frame_index"])
            timestamp = float(record["timestamp"])
            sensor_origin = np.asarray(record.get("sensor_origin", [0.0, 0.0, 0.0]), dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{path}:{line_no}: bad frame record ({exc})") from exc
        if last_index is not None and frame_index <= last_index:
            raise DataError(
                f"{path}:{line_no}: frame {frame_index} is not after frame {last_index}"
            )
        last_index = frame_index

        detections = []
        for det_no, det in enumerate(record.get("detections", [])):
            detections.append(
                _parse_detection(det, sensor_origin, classes, f"{path}:{line_no}", det_no)
            )

        ground_truth = None
        if "ground_truth" in record and record["ground_truth"] is not None:
            ground_truth = []
            for gt_no, gt in enumerate(record["ground_truth"]):
                ground_truth.append(
                    _parse_ground_truth(gt, classes, f"{path}:{line_no}", gt_no)
                )

        scene.frames.append(
            SceneFrame(frame_index, timestamp, sensor_origin, detections, ground_truth)
        )
    return scene


def _parse_detection(det, sensor_origin, classes, where, det_no) -> Detection:
    try:
        class_id = int(det["class_id"])
        if class_id not in classes:
            raise DataError(f"{where}: detection {det_no} has unknown class id {class_id}")
        center = np.asarray(det["center"], dtype=float)
        extent = np.asarray(det["extent"], dtype=float)
        score = float(det["score"])
        yaw = float(det["yaw"])
        velocity = det.get("velocity")
    except DataError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{where}: bad detection {det_no} ({exc})") from exc
    if center.shape != (3,) or extent.shape != (3,):
        raise DataError(f"{where}: detection {det_no} center/extent must have 3 entries")
    if np.any(extent <= 0.0):
        raise DataError(f"{where}: detection {det_no} extent must be positive")
    if not (0.0 <= score <= 1.0):
        raise DataError(f"{where}: detection {det_no} score {score} outside [0, 1]")
    return Detection(
        center=center,
        extent=extent,
        yaw=yaw,
        score=score,
        class_id=class_id,
        velocity=None if velocity is None else np.asarray(velocity, dtype=float),
        sensor_origin=sensor_origin,
    )


def _parse_ground_truth(gt, classes, where, gt_no) -> GroundTruthBox:
    try:
        class_id = int(gt["class_id"])
        if class_id not in classes:
            raise DataError(f"{where}: ground truth {gt_no} has unknown class id {class_id}")
        return GroundTruthBox(
            track_id=int(gt["track_id"]),
            class_id=class_id,
            center=np.asarray(gt["center"], dtype=float),
            extent=np.asarray(gt["extent"], dtype=float),
            yaw=float(gt["yaw"]),
        )
    except DataError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{where}: bad ground truth {gt_no} ({exc})") from exc


def load_scene(path: str) -> SceneFile:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise DataError(f"cannot read scene {path}: {exc}") from exc
    return parse_scene(text, path)


def dump_scene(scene: SceneFile) -> str:
    """Serialize a scene back to JSONL (inverse of :func:`parse_scene`)."""
    out = [
        json.dumps(
            {
                "version": SCENE_VERSION,
                "scene_id": scene.scene_id,
                "classes": {str(k): v for k, v in sorted(scene.classes.items())},
                "frame_rate": scene.frame_rate,
            }
        )
    ]
    for frame in scene.frames:
        record = {
            "frame_index": frame.frame_index,
            "timestamp": frame.timestamp,
            "sensor_origin": frame.sensor_origin.tolist(),
            "detections": [
                {
                    "center": det.center.tolist(),
                    "extent": det.extent.tolist(),
                    "yaw": det.yaw,
                    "score": det.score,
                    "class_id": det.class_id,
                    **({"velocity": det.velocity.tolist()} if det.velocity is not None else {}),
                }
                for det in frame.detections
            ],
        }
        if frame.ground_truth is not None:
            record["ground_truth"] = [
                {
                    "track_id": gt.track_id,
                    "class_id": gt.class_id,
                    "center": gt.center.tolist(),
                    "extent": gt.extent.tolist(),
                    "yaw": gt.yaw,
                }
                for gt in frame.ground_truth
            ]
        out.append(json.dumps(record))
    return "\n".join(out) + "\n"


def write_scene(scene: SceneFile, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(dump_scene(scene))


def dump_trajectories(result: TrajectoryFile) -> str:
    out = [
        json.dumps(
            {
                "version": TRAJECTORY_VERSION,
                "scene_id": result.scene_id,
                "classes": {str(k): v for k, v in sorted(result.classes.items())},
            }
        )
    ]
    for frame in result.frames:
        out.append(
            json.dumps(
                {
                    "frame_index": frame.frame_index,
                    "timestamp": frame.timestamp,
                    "tracks": [
                        {
                            "track_id": t.track_id,
                            "class_id": t.class_id,
                            "center": [t.state.x, t.state.y, t.state.z],
                            "extent": [t.state.w, t.state.l, t.state.h],
                            "yaw": t.state.theta,
                            "velocity": [t.state.vx, t.state.vy, t.state.vz],
                            "dw_score": t.dw_score,
                            "detection_score": t.detection_score,
                        }
                        for t in frame.tracks
                    ],
                }
            )
        )
    return "\n".join(out) + "\n"


def parse_trajectories(text: str, path: str = "<memory>") -> TrajectoryFile:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise DataError(f"{path}: empty trajectory file")
    header = _parse_line(lines[0], 1, path)
    if header.get("version") != TRAJECTORY_VERSION:
        raise DataError(
            f"{path}:1: expected trajectory version {TRAJECTORY_VERSION}, "
            f"got {header.get('version')!r}"
        )
    result = TrajectoryFile(
        scene_id=str(header.get("scene_id", "scene")),
        classes=_class_table(header, 1, path),
    )
    last_index = None
    for line_no, line in enumerate(lines[1:], start=2):
        record = _parse_line(line, line_no, path)
        try:
            frame_index = int(record["frame_index"])
            timestamp = float(record["timestamp"])
            tracks = [
                EmittedTrack(
                    track_id=int(t["track_id"]),
                    class_id=int(t["class_id"]),
                    state=UnifiedState(
                        x=t["center"][0], y=t["center"][1], z=t["center"][2],
                        w=t["extent"][0], l=t["extent"][1], h=t["extent"][2],
                        vx=t["velocity"][0], vy=t["velocity"][1], vz=t["velocity"][2],
                        theta=t["yaw"],
                    ),
                    dw_score=float(t["dw_score"]),
                    detection_score=float(t["detection_score"]),
                )
                for t in record.get("tracks", [])
            ]
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise DataError(f"{path}:{line_no}: bad trajectory record ({exc})") from exc
        if last_index is not None and frame_index <= last_index:
            raise DataError(
                f"{path}:{line_no}: frame {frame_index} is not after frame {last_index}"
            )
        last_index = frame_index
        result.frames.append(FrameOutput(frame_index, timestamp, tracks))
    return result


def load_trajectories(path: str) -> TrajectoryFile:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise DataError(f"cannot read trajectories {path}: {exc}") from exc
    return parse_trajectories(text, path)


def write_trajectories(result: TrajectoryFile, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(dump_trajectories(result))
