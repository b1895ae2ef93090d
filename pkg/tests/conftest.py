import numpy as np
import pytest

from immtrack.config import TrackerConfig
from immtrack.kalman import NoiseConfig
from immtrack.motion import STATE_DIM, ModelKind, ModelState


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)


@pytest.fixture
def default_config():
    return TrackerConfig()


@pytest.fixture
def noise():
    return NoiseConfig()


def random_model_vector(kind: ModelKind, rng: np.random.Generator) -> np.ndarray:
    """Plausible random state: positions anywhere, extents positive, speeds urban."""
    dim = STATE_DIM[kind]
    vec = np.zeros(dim)
    vec[0:3] = rng.uniform(-50.0, 50.0, 3)
    vec[3:6] = rng.uniform(0.5, 5.0, 3)
    if kind is ModelKind.CV:
        vec[6:9] = rng.uniform(-10.0, 10.0, 3)
        vec[9] = rng.uniform(-np.pi, np.pi)
    elif kind is ModelKind.CA:
        vec[6:9] = rng.uniform(-10.0, 10.0, 3)
        vec[9:12] = rng.uniform(-3.0, 3.0, 3)
        vec[12] = rng.uniform(-np.pi, np.pi)
    elif kind is ModelKind.CTRV:
        vec[6] = rng.uniform(0.0, 15.0)
        vec[7] = rng.uniform(-np.pi, np.pi)
        vec[8] = rng.uniform(-1.0, 1.0)
    else:
        vec[6] = rng.uniform(0.0, 15.0)
        vec[7] = rng.uniform(-3.0, 3.0)
        vec[8] = rng.uniform(-np.pi, np.pi)
        vec[9] = rng.uniform(-1.0, 1.0)
    return vec


def random_model_state(kind: ModelKind, rng: np.random.Generator) -> ModelState:
    dim = STATE_DIM[kind]
    root = rng.normal(0.0, 1.0, (dim, dim))
    covariance = root @ root.T + 0.1 * np.eye(dim)
    return ModelState(kind, random_model_vector(kind, rng), covariance)
