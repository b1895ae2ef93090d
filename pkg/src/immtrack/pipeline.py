"""Per-frame tracking orchestration.

Frame order: condition the detections, predict every live track through its
filter bank, match predictions to detections, update matched tracks, coast
the unmatched ones, start a trajectory for every leftover detection, then
re-score phases and emit the active tracks. The trajectory store belongs to
one scene; separate scenes run in their own pipelines.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional

from . import association, lifecycle, preprocessing
from .association import TrackEstimate
from .config import TrackerConfig
from .errors import ContractError
from .imm import ImmState, imm_init, imm_predict, imm_update
from .kalman import Observation
from .lifecycle import AssociationHistory, DwRunning, LifecyclePhase
from .preprocessing import Detection
from .scene import EmittedTrack, FrameOutput, SceneFile, TrajectoryFile


@dataclass
class Trajectory:
    """One tracked object and everything its lifecycle depends on."""

    track_id: int
    class_id: int
    class_name: str
    imm: ImmState
    history: AssociationHistory
    phase: LifecyclePhase
    uses_dw: bool
    dw: Optional[DwRunning]
    dw_score: float = 1.0
    hit_streak: int = 1
    miss_streak: int = 0
    last_update_frame: int = 0
    last_detection_score: float = 0.0


class TrackerPipeline:
    """Stateful tracker for one scene."""

    def __init__(self, config: TrackerConfig, class_table: Dict[int, str]):
        self.config = config
        self.class_table = dict(class_table)
        self.tracks: List[Trajectory] = []
        self._next_id = 0
        self._last_frame_index: Optional[int] = None
        self._last_timestamp: Optional[float] = None
        self._dbse_by_class = {
            cid: config.dbse_for(name) for cid, name in self.class_table.items()
        }
        self._score_thresholds = {
            cid: config.score_threshold_for(name) for cid, name in self.class_table.items()
        }
        self._nms_iou = {
            cid: config.nms_iou_for(name) for cid, name in self.class_table.items()
        }

    # -- helpers -----------------------------------------------------------

    def _class_name(self, class_id: int) -> str:
        try:
            return self.class_table[class_id]
        except KeyError:
            raise ContractError(f"detection class id {class_id} not in scene class table")

    def _preprocess(self, detections: List[Detection]) -> List[Detection]:
        enhanced = preprocessing.dbse_enhance(detections, self._dbse_by_class)
        filtered = preprocessing.score_filter(enhanced, self._score_thresholds)
        return preprocessing.nms(filtered, self._nms_iou)

    def _live_tracks(self) -> List[Trajectory]:
        return [t for t in self.tracks if t.phase is not LifecyclePhase.TERMINATED]

    def _birth(self, det: Detection, frame_index: int) -> Trajectory:
        name = self._class_name(det.class_id)
        imm_cfg = self.config.imm_config_for(name)
        noise = self.config.noise_for(name)
        uses_dw = self.config.uses_dw(name)
        dw = None
        dw_score = 1.0
        phase = lifecycle.LifecyclePhase.TENTATIVE
        if uses_dw:
            damping = self.config.damping_for(name)
            dw = DwRunning(damping.lam)
            dw_score = dw.step(True)
            if not self.config.force_tentative_first_frame:
                phase = lifecycle.step_phase(phase, dw_score, 0, damping)
        track = Trajectory(
            track_id=self._next_id,
            class_id=det.class_id,
            class_name=name,
            imm=imm_init(det, imm_cfg, noise),
            history=AssociationHistory(flags=[1], birth_frame=frame_index),
            phase=phase,
            uses_dw=uses_dw,
            dw=dw,
            dw_score=dw_score,
            last_update_frame=frame_index,
            last_detection_score=det.score,
        )
        self._next_id += 1
        self.tracks.append(track)
        return track

    def _step_lifecycle(self, track: Trajectory) -> None:
        if track.uses_dw:
            damping = self.config.damping_for(track.class_name)
            track.phase = lifecycle.step_phase(
                track.phase, track.dw_score, track.miss_streak, damping
            )
        else:
            track.phase = lifecycle.step_count_phase(
                track.phase, track.hit_streak, track.miss_streak, self.config.count_config()
            )

    # -- main entry ---------------------------------------------------------

    def process_frame(
        self,
        raw_detections: List[Detection],
        frame_index: int,
        timestamp: Optional[float] = None,
    ) -> FrameOutput:
        if self._last_frame_index is not None and frame_index <= self._last_frame_index:
            raise ContractError(
                f"frame index {frame_index} is not after {self._last_frame_index}"
            )
        if timestamp is not None and self._last_timestamp is not None:
            dt = timestamp - self._last_timestamp
            if dt <= 0.0:
                raise ContractError(f"timestamps must increase, got dt={dt}")
        else:
            dt = self.config.default_dt
        self._last_frame_index = frame_index
        if timestamp is not None:
            self._last_timestamp = timestamp

        detections = self._preprocess(raw_detections)

        live = self._live_tracks()
        estimates: List[TrackEstimate] = []
        for track in live:
            imm_cfg = self.config.imm_config_for(track.class_name)
            noise = self.config.noise_for(track.class_name)
            track.imm, fused = imm_predict(track.imm, dt, imm_cfg, noise)
            estimates.append(
                TrackEstimate(
                    state=fused,
                    class_id=track.class_id,
                    covariance=track.imm.fused_covariance,
                )
            )

        costs = association.build_costs(
            estimates,
            detections,
            metric_for_class=lambda cid: self.config.association_for(self._class_name(cid))[0],
            gate_for_class=lambda cid: self.config.association_for(self._class_name(cid))[1],
        )
        result = association.assign(costs, self.config.assignment_method)

        for track_idx, det_idx in result.matches:
            track = live[track_idx]
            det = detections[det_idx]
            obs = Observation(
                center=det.center,
                extent=det.extent,
                heading=det.yaw,
                timestamp=timestamp or 0.0,
                velocity=det.velocity,
            )
            imm_cfg = self.config.imm_config_for(track.class_name)
            noise = self.config.noise_for(track.class_name)
            track.imm = imm_update(track.imm, obs, imm_cfg, noise)
            track.history.append(True)
            track.hit_streak += 1
            track.miss_streak = 0
            track.last_update_frame = frame_index
            track.last_detection_score = det.score
            if track.dw is not None:
                track.dw_score = track.dw.step(True)

        for track_idx in result.unmatched_tracks:
            track = live[track_idx]
            track.history.append(False)
            track.miss_streak += 1
            track.hit_streak = 0
            if track.dw is not None:
                track.dw_score = track.dw.step(False)

        born = {
            self._birth(detections[det_idx], frame_index).track_id
            for det_idx in result.unmatched_detections
        }

        # Newborns had their phase decided at birth; re-score the rest.
        for track in self._live_tracks():
            if track.track_id not in born:
                self._step_lifecycle(track)

        emitted = [
            EmittedTrack(
                track_id=t.track_id,
                class_id=t.class_id,
                state=t.imm.fused,
                dw_score=t.dw_score,
                detection_score=t.last_detection_score,
            )
            for t in self.tracks
            if t.phase is LifecyclePhase.ACTIVE
        ]
        # Terminated trajectories never come back; drop them from the store.
        self.tracks = self._live_tracks()
        return FrameOutput(
            frame_index=frame_index,
            timestamp=timestamp if timestamp is not None else float(frame_index),
            tracks=emitted,
        )


def run_scene(scene: SceneFile, config: Optional[TrackerConfig] = None) -> TrajectoryFile:
    """Track a whole scene and collect the per-frame outputs."""
    config = config or TrackerConfig()
    tracker = TrackerPipeline(config, scene.classes)
    result = TrajectoryFile(scene_id=scene.scene_id, classes=dict(scene.classes))
    for frame in scene.frames:
        result.frames.append(
            tracker.process_frame(frame.detections, frame.frame_index, frame.timestamp)
        )
    return result
