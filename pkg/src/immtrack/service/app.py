"""FastAPI service wrapping the tracking engine.

Stateless endpoints cover whole-scene batch work (track, eval, synth,
sweep, curves); stateful sessions stream one frame at a time for
long-running clients. Library errors map to JSON bodies carrying a
category ("config", "data", "numerical") that the CLI translates into
exit codes.
"""

from __future__ import annotations

import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, Optional

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..config import TrackerConfig
from ..curves import render_dbse_curves, render_dw_curves
from ..errors import ConfigError, DataError, ImmTrackError
from ..evaluate import EvalReport, evaluate, evaluate_with_amota, render_report
from ..pipeline import TrackerPipeline, run_scene
from ..preprocessing import Detection
from ..scene import (
    DEFAULT_CLASS_TABLE,
    dump_scene,
    dump_trajectories,
    parse_scene,
    parse_trajectories,
)
from ..synth import generate_scenario, scenario_from_dict
from . import models

_ERROR_STATUS = {"config": 400, "data": 400, "numerical": 500}


def _load_config(
    config_yaml: Optional[str], overrides: Optional[Dict[str, object]]
) -> TrackerConfig:
    config = TrackerConfig.from_yaml(config_yaml) if config_yaml else TrackerConfig()
    if overrides:
        config = config.with_overrides(overrides)
    return config


def _eval_response(report: EvalReport) -> models.EvalResponse:
    data = report.to_dict()
    return models.EvalResponse(
        overall=models.ClassStatsModel(**data["overall"]),
        per_class={k: models.ClassStatsModel(**v) for k, v in data["per_class"].items()},
        amota=report.amota,
        amota_points=report.amota_points,
        table=render_report(report),
    )


class _Session:
    def __init__(self, pipeline: TrackerPipeline):
        self.pipeline = pipeline
        self.lock = threading.Lock()


def create_app() -> FastAPI:
    app = FastAPI(title="immtrack", version=__version__)
    sessions: Dict[str, _Session] = {}
    sessions_lock = threading.Lock()

    @app.exception_handler(ImmTrackError)
    async def _handle_library_error(request: Request, exc: ImmTrackError):
        return JSONResponse(
            status_code=_ERROR_STATUS.get(exc.category, 500),
            content=models.ErrorBody(category=exc.category, message=str(exc)).model_dump(),
        )

    @app.get("/health", response_model=models.HealthResponse)
    def health():
        return models.HealthResponse(version=__version__)

    @app.post("/track", response_model=models.TrackResponse)
    def track(request: models.TrackRequest):
        config = _load_config(request.config_yaml, request.config_overrides)
        scene = parse_scene(request.scene_jsonl, "<request>")
        result = run_scene(scene, config)
        track_ids = {t.track_id for frame in result.frames for t in frame.tracks}
        return models.TrackResponse(
            trajectories_jsonl=dump_trajectories(result),
            num_frames=len(result.frames),
            num_tracks=len(track_ids),
        )

    @app.post("/eval", response_model=models.EvalResponse)
    def eval_tracks(request: models.EvalRequest):
        predictions = parse_trajectories(request.predictions_jsonl, "<predictions>")
        scene = parse_scene(request.scene_jsonl, "<scene>")
        if request.amota:
            report = evaluate_with_amota(predictions, scene, request.match_distance)
        else:
            report = evaluate(predictions, scene, request.match_distance)
        return _eval_response(report)

    @app.post("/synth", response_model=models.SynthResponse)
    def synth(request: models.SynthRequest):
        spec = scenario_from_dict(request.spec)
        scene = generate_scenario(spec, seed=request.seed)
        return models.SynthResponse(
            scene_jsonl=dump_scene(scene), num_frames=len(scene.frames)
        )

    @app.post("/sweep", response_model=models.SweepResponse)
    def sweep(request: models.SweepRequest):
        if not request.variants:
            raise ConfigError("sweep needs at least one variant")
        if not request.scenes:
            raise DataError("sweep needs at least one scene")
        base = TrackerConfig.from_yaml(request.config_yaml) if request.config_yaml \
            else TrackerConfig()
        scenes = {
            name: parse_scene(text, f"<scene:{name}>")
            for name, text in request.scenes.items()
        }
        jobs = [
            (variant, scene_name)
            for variant in request.variants
            for scene_name in sorted(scenes)
        ]

        def run_job(job):
            variant, scene_name = job
            config = base.with_overrides(variant.overrides) if variant.overrides else base
            scene = scenes[scene_name]
            result = run_scene(scene, config)
            report = evaluate(result, scene, request.match_distance)
            return models.SweepRow(
                variant=variant.name,
                scene=scene_name,
                tp=report.overall.tp,
                fp=report.overall.fp,
                fn=report.overall.fn,
                ids=report.overall.ids,
                mota=report.overall.mota,
            )

        workers = max(1, min(request.max_workers, len(jobs)))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run_job, jobs))

        header = f"{'variant':<20}{'scene':<16}{'TP':>7}{'FP':>7}{'FN':>7}{'IDS':>6}{'MOTA':>9}"
        lines = [header, "-" * len(header)]
        for row in rows:
            lines.append(
                f"{row.variant:<20}{row.scene:<16}{row.tp:>7}{row.fp:>7}"
                f"{row.fn:>7}{row.ids:>6}{row.mota:>9.4f}"
            )
        return models.SweepResponse(rows=rows, table="\n".join(lines))

    @app.post("/curves", response_model=models.CurvesResponse)
    def curves(request: models.CurvesRequest):
        if request.kind not in ("dw", "dbse", "all"):
            raise ConfigError(f"unknown curve kind {request.kind!r}")
        response = models.CurvesResponse()
        if request.kind in ("dw", "all"):
            response.dw = render_dw_curves(request.lam, request.frames)
        if request.kind in ("dbse", "all"):
            response.dbse = render_dbse_curves()
        return response

    @app.post("/sessions", response_model=models.SessionCreateResponse)
    def create_session(request: models.SessionCreateRequest):
        config = _load_config(request.config_yaml, request.config_overrides)
        table = request.class_table or dict(DEFAULT_CLASS_TABLE)
        session_id = uuid.uuid4().hex
        with sessions_lock:
            sessions[session_id] = _Session(TrackerPipeline(config, table))
        return models.SessionCreateResponse(session_id=session_id)

    def _get_session(session_id: str) -> _Session:
        with sessions_lock:
            session = sessions.get(session_id)
        if session is None:
            raise DataError(f"unknown session {session_id}")
        return session

    @app.post("/sessions/{session_id}/frames", response_model=models.SessionFrameResponse)
    def push_frame(session_id: str, request: models.SessionFrameRequest):
        session = _get_session(session_id)
        origin = np.asarray(request.sensor_origin, dtype=float)
        detections = [
            Detection(
                center=np.asarray(d.center, dtype=float),
                extent=np.asarray(d.extent, dtype=float),
                yaw=d.yaw,
                score=d.score,
                class_id=d.class_id,
                velocity=None if d.velocity is None else np.asarray(d.velocity, dtype=float),
                sensor_origin=origin,
            )
            for d in request.detections
        ]
        with session.lock:
            output = session.pipeline.process_frame(
                detections, request.frame_index, request.timestamp
            )
        return models.SessionFrameResponse(
            frame_index=output.frame_index,
            tracks=[
                models.TrackModel(
                    track_id=t.track_id,
                    class_id=t.class_id,
                    center=(t.state.x, t.state.y, t.state.z),
                    extent=(t.state.w, t.state.l, t.state.h),
                    yaw=t.state.theta,
                    velocity=(t.state.vx, t.state.vy, t.state.vz),
                    dw_score=t.dw_score,
                    detection_score=t.detection_score,
                )
                for t in output.tracks
            ],
        )

    @app.delete("/sessions/{session_id}")
    def close_session(session_id: str):
        with sessions_lock:
            if sessions.pop(session_id, None) is None:
                raise DataError(f"unknown session {session_id}")
        return {"closed": session_id}

    return app


app = create_app()
