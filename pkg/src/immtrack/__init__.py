"""3D multi-object tracking with an interacting-multiple-model filter bank."""

__version__ = "0.1.0"

from .config import TrackerConfig
from .motion import ModelKind, ModelState, UnifiedState
from .pipeline import TrackerPipeline, run_scene
from .preprocessing import Detection
from .scene import SceneFile, TrajectoryFile, load_scene, load_trajectories

__all__ = [
    "Detection",
    "ModelKind",
    "ModelState",
    "SceneFile",
    "TrackerConfig",
    "TrackerPipeline",
    "TrajectoryFile",
    "UnifiedState",
    "load_scene",
    "load_trajectories",
    "run_scene",
    "__version__",
]
