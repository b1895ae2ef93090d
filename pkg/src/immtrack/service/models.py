"""Pydantic request/response models for the tracking service.

Bulk scene and trajectory payloads travel as JSONL text (the same format
the files use), so clients round-trip bytes without re-encoding;
structured results (reports, sweep tables, curves) come back as typed
models.
"""

from __future__ import annotations

from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str = "ok"
    version: str


class ErrorBody(BaseModel):
    category: str
    message: str


class TrackRequest(BaseModel):
    scene_jsonl: str
    config_yaml: Optional[str] = None
    config_overrides: Optional[Dict[str, object]] = None


class TrackResponse(BaseModel):
    trajectories_jsonl: str
    num_frames: int
    num_tracks: int


class EvalRequest(BaseModel):
    predictions_jsonl: str
    scene_jsonl: str
    match_distance: float = 2.0
    amota: bool = False


class ClassStatsModel(BaseModel):
    tp: int
    fp: int
    fn: int
    ids: int
    gt_count: int
    mota: float
    mean_position_error: float
    fn_ratio: float
    fp_ratio: float


class EvalResponse(BaseModel):
    overall: ClassStatsModel
    per_class: Dict[str, ClassStatsModel]
    amota: Optional[float] = None
    amota_points: Optional[List[Tuple[float, float]]] = None
    table: str


class SynthRequest(BaseModel):
    spec: Dict[str, object] = Field(default_factory=dict)
    seed: int = 0


class SynthResponse(BaseModel):
    scene_jsonl: str
    num_frames: int


class SweepVariant(BaseModel):
    name: str
    overrides: Dict[str, object] = Field(default_factory=dict)


class SweepRequest(BaseModel):
    scenes: Dict[str, str]  # scene name -> scene JSONL
    variants: List[SweepVariant]
    config_yaml: Optional[str] = None
    match_distance: float = 2.0
    max_workers: int = 4


class SweepRow(BaseModel):
    variant: str
    scene: str
    tp: int
    fp: int
    fn: int
    ids: int
    mota: float


class SweepResponse(BaseModel):
    rows: List[SweepRow]
    table: str


class CurvesRequest(BaseModel):
    kind: str = "all"  # dw | dbse | all
    lam: float = 0.4
    frames: int = 40


class CurvesResponse(BaseModel):
    dw: Optional[str] = None
    dbse: Optional[str] = None


class SessionCreateRequest(BaseModel):
    config_yaml: Optional[str] = None
    config_overrides: Optional[Dict[str, object]] = None
    class_table: Optional[Dict[int, str]] = None


class SessionCreateResponse(BaseModel):
    session_id: str


class DetectionModel(BaseModel):
    center: Tuple[float, float, float]
    extent: Tuple[float, float, float]
    yaw: float
    score: float
    class_id: int
    velocity: Optional[Tuple[float, float]] = None


class SessionFrameRequest(BaseModel):
    frame_index: int
    timestamp: Optional[float] = None
    sensor_origin: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    detections: List[DetectionModel] = Field(default_factory=list)


class TrackModel(BaseModel):
    track_id: int
    class_id: int
    center: Tuple[float, float, float]
    extent: Tuple[float, float, float]
    yaw: float
    velocity: Tuple[float, float, float]
    dw_score: float
    detection_score: float


class SessionFrameResponse(BaseModel):
    frame_index: int
    tracks: List[TrackModel]
