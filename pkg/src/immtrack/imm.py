"""Interacting-multiple-model filter bank.

Runs one Kalman/EKF filter per motion model in parallel. Each cycle:

1. every model predicts from its own previous state,
2. the predictions are fused in the unified space with the previous mode
   probabilities (this fused state feeds association),
3. the associated measurement updates every model, yielding per-model
   likelihoods,
4. mode probabilities update through the Markov chain:
   mu_i = c_i * L_i / sum_j c_j * L_j  with  c_i = sum_j M[j, i] * mu_j.

By default there is no state interaction between the models before the
predict step; the classical mixing stage can be enabled with
``ImmConfig.use_mixing`` for experimentation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import kalman
from .errors import ConfigError
from .geometry import wrap_angle
from .kalman import NoiseConfig, Observation
from .motion import (
    UNIFIED_DIM,
    ModelKind,
    ModelState,
    UnifiedState,
    from_unified,
    reduction_jacobian,
    to_unified,
    unified_jacobian,
)
from .preprocessing import Detection

SIMPLEX_TOLERANCE = 1e-9
LIKELIHOOD_FLOOR = 1e-300

DEFAULT_MODEL_SET = (ModelKind.CV, ModelKind.CA, ModelKind.CTRV, ModelKind.CTRA)
DEFAULT_STAY_PROBABILITY = 0.91


def sticky_markov_matrix(n_models: int, stay: float = DEFAULT_STAY_PROBABILITY) -> np.ndarray:
    """Row-stochastic matrix with `stay` on the diagonal, uniform elsewhere."""
    if n_models == 1:
        return np.array([[1.0]])
    off = (1.0 - stay) / (n_models - 1)
    matrix = np.full((n_models, n_models), off)
    np.fill_diagonal(matrix, stay)
    return matrix


@dataclass
class ImmConfig:
    """Model set, mode-transition matrix, and prior mode probabilities."""

    model_set: Tuple[ModelKind, ...] = DEFAULT_MODEL_SET
    markov_matrix: Optional[np.ndarray] = None
    initial_probabilities: Optional[np.ndarray] = None
    use_mixing: bool = False

    def __post_init__(self):
        n = len(self.model_set)
        if n == 0:
            raise ConfigError("model set must not be empty")
        if self.markov_matrix is None:
            self.markov_matrix = sticky_markov_matrix(n)
        self.markov_matrix = np.asarray(self.markov_matrix, dtype=float)
        if self.initial_probabilities is None:
            self.initial_probabilities = np.full(n, 1.0 / n)
        self.initial_probabilities = np.asarray(self.initial_probabilities, dtype=float)

        if self.markov_matrix.shape != (n, n):
            raise ConfigError(
                f"markov matrix must be {n}x{n}, got {self.markov_matrix.shape}"
            )
        if np.any(self.markov_matrix < 0.0) or np.any(self.markov_matrix > 1.0):
            raise ConfigError("markov matrix entries must lie in [0, 1]")
        row_sums = self.markov_matrix.sum(axis=1)
        if np.any(np.abs(row_sums - 1.0) > SIMPLEX_TOLERANCE):
            raise ConfigError(f"markov matrix rows must sum to 1, got {row_sums}")
        _check_simplex(self.initial_probabilities, "initial probabilities")


def _check_simplex(probabilities: np.ndarray, label: str) -> None:
    if probabilities.ndim != 1:
        raise ConfigError(f"{label} must be a vector")
    if np.any(probabilities < -SIMPLEX_TOLERANCE) or np.any(probabilities > 1.0 + SIMPLEX_TOLERANCE):
        raise ConfigError(f"{label} entries must lie in [0, 1], got {probabilities}")
    total = probabilities.sum()
    if abs(total - 1.0) > SIMPLEX_TOLERANCE:
        raise ConfigError(f"{label} must sum to 1, got {total}")


@dataclass
class ImmState:
    """Per-model filter states plus the fused estimate."""

    models: List[ModelState]
    probabilities: np.ndarray
    fused: UnifiedState
    fused_covariance: np.ndarray = field(
        default_factory=lambda: np.zeros((UNIFIED_DIM, UNIFIED_DIM))
    )


def imm_init(detection: Detection, config: ImmConfig, noise: NoiseConfig) -> ImmState:
    """Start a filter bank from one detection: pose/extent set, kinematics zero."""
    seed = UnifiedState(
        x=float(detection.center[0]),
        y=float(detection.center[1]),
        z=float(detection.center[2]),
        w=float(detection.extent[0]),
        l=float(detection.extent[1]),
        h=float(detection.extent[2]),
        theta=float(detection.yaw),
    )
    models = [
        ModelState(kind, from_unified(kind, seed), noise.initial_covariance(kind))
        for kind in config.model_set
    ]
    probabilities = config.initial_probabilities.copy()
    fused, fused_cov = _fuse(models, probabilities)
    return ImmState(models, probabilities, fused, fused_cov)


def imm_predict(
    state: ImmState,
    dt: float,
    config: ImmConfig,
    noise: NoiseConfig,
) -> Tuple[ImmState, UnifiedState]:
    """Predict every model and fuse with the previous mode probabilities.

    Returns the new bank state and the fused prediction that the
    association stage consumes.
    """
    sources = state.models
    if config.use_mixing and len(sources) > 1:
        sources = _mix_states(state, config)

    predicted = [kalman.predict(model, noise, dt) for model in sources]
    fused, fused_cov = _fuse(predicted, state.probabilities)
    new_state = ImmState(predicted, state.probabilities.copy(), fused, fused_cov)
    return new_state, fused


def update_mode_probabilities(
    probabilities: np.ndarray,
    markov_matrix: np.ndarray,
    likelihoods: np.ndarray,
) -> np.ndarray:
    """mu_i = c_i * L_i / sum_j c_j * L_j with c = mu @ M.

    Likelihoods are floored at a tiny constant; if every one underflows the
    floor, the Markov-predicted modes c come back unchanged instead of a
    0/0 division.
    """
    predicted_modes = probabilities @ markov_matrix
    if np.all(likelihoods <= LIKELIHOOD_FLOOR):
        updated = predicted_modes.copy()
    else:
        weighted = predicted_modes * np.maximum(likelihoods, LIKELIHOOD_FLOOR)
        updated = weighted / weighted.sum()
    return updated / updated.sum()


def imm_update(
    state: ImmState,
    obs: Observation,
    config: ImmConfig,
    noise: NoiseConfig,
) -> ImmState:
    """Update every model with `obs` and refresh the mode probabilities."""
    results = [kalman.update(model, obs, noise) for model in state.models]
    posteriors = [r.posterior for r in results]
    likelihoods = np.array([r.likelihood for r in results])
    probabilities = update_mode_probabilities(
        state.probabilities, config.markov_matrix, likelihoods
    )
    fused, fused_cov = _fuse(posteriors, probabilities)
    return ImmState(posteriors, probabilities, fused, fused_cov)


def _fuse(models: Sequence[ModelState], probabilities: np.ndarray):
    """Probability-weighted moment fusion in the unified space.

    Linear components combine as a weighted sum; heading uses the circular
    mean so mixtures straddling +-pi stay sane. The covariance is the
    mixture moment: weighted per-model covariances plus spread of means,
    with heading deviations wrapped.
    """
    unified = np.array([to_unified(m).as_array() for m in models])
    weights = np.asarray(probabilities, dtype=float)

    mean = np.zeros(UNIFIED_DIM)
    for row, weight in zip(unified, weights):  # fixed order: deterministic
        mean += weight * row
    sin_sum = float(np.dot(weights, np.sin(unified[:, 12])))
    cos_sum = float(np.dot(weights, np.cos(unified[:, 12])))
    mean[12] = math.atan2(sin_sum, cos_sum) if (sin_sum or cos_sum) else unified[0, 12]

    covariance = np.zeros((UNIFIED_DIM, UNIFIED_DIM))
    for model, row, weight in zip(models, unified, weights):
        jac = unified_jacobian(model)
        expanded = jac @ model.covariance @ jac.T
        delta = row - mean
        delta[12] = wrap_angle(delta[12])
        covariance += weight * (expanded + np.outer(delta, delta))
    covariance = 0.5 * (covariance + covariance.T)
    return UnifiedState.from_array(mean), covariance


def _mix_states(state: ImmState, config: ImmConfig) -> List[ModelState]:
    """Classical interaction step: per-model mixed initial conditions."""
    mu = state.probabilities
    markov = config.markov_matrix
    c = mu @ markov
    mixed = []
    for i, model in enumerate(state.models):
        if c[i] <= 0.0:
            mixed.append(model)
            continue
        weights = markov[:, i] * mu / c[i]
        mean_u, cov_u = _fuse(state.models, weights)
        vector = from_unified(model.kind, mean_u)
        reduce = reduction_jacobian(model.kind, mean_u)
        covariance = reduce @ cov_u @ reduce.T
        covariance = 0.5 * (covariance + covariance.T)
        mixed.append(ModelState(model.kind, vector, covariance))
    return mixed
