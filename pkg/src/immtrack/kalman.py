"""Shared linear / extended Kalman predict and update steps.

The measurement is a detector box [x, y, z, w, l, h, theta] (optionally
extended with planar velocity [vx, vy] before theta when the detector
provides it). Pose and extent appear directly in every model's state, so
the observation function is a selector for CV/CA and stays a selector for
CTRV/CTRA except for the velocity rows, which resolve v along the heading.

Covariance updates use the Joseph form to keep long-lived tracks positive
semidefinite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ContractError, NumericalError
from .geometry import wrap_angle
from .motion import STATE_DIM, THETA_INDEX, ModelKind, ModelState, jacobian, transition

PSD_EIGENVALUE_TOLERANCE = 1e-9
MAX_CONDITION_NUMBER = 1e12

# Diagonal noise magnitudes, SI units, overridable per class in the
# tracker config.
DEFAULT_PROCESS_NOISE = {
    "position": 0.1,
    "extent": 0.1,
    "velocity": 1.0,
    "acceleration": 1.0,
    "heading": 0.1,
    "turn_rate": 1.0,
}
DEFAULT_MEASUREMENT_NOISE = {
    "position": 0.5,
    "extent": 0.1,
    "heading": 0.1,
    "velocity": 1.0,
}
DEFAULT_INITIAL_KINEMATIC_VARIANCE = 10.0

# Role of each state component, per model, used to assemble diagonal Q.
_COMPONENT_ROLES = {
    ModelKind.CV: ["position"] * 3 + ["extent"] * 3 + ["velocity"] * 3 + ["heading"],
    ModelKind.CA: ["position"] * 3 + ["extent"] * 3 + ["velocity"] * 3
    + ["acceleration"] * 3 + ["heading"],
    ModelKind.CTRV: ["position"] * 3 + ["extent"] * 3 + ["velocity", "heading", "turn_rate"],
    ModelKind.CTRA: ["position"] * 3 + ["extent"] * 3
    + ["velocity", "acceleration", "heading", "turn_rate"],
}


@dataclass
class Observation:
    """One associated detector box in measurement space."""

    center: np.ndarray
    extent: np.ndarray
    heading: float
    timestamp: float = 0.0
    velocity: Optional[np.ndarray] = None

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        self.extent = np.asarray(self.extent, dtype=float)
        if self.velocity is not None:
            self.velocity = np.asarray(self.velocity, dtype=float)
        if np.any(self.extent <= 0.0):
            raise ContractError(f"observation extent must be positive, got {self.extent}")
        self.heading = wrap_angle(float(self.heading))

    def vector(self, with_velocity: bool = False) -> np.ndarray:
        """Measurement vector; heading last so residual wrapping is uniform."""
        parts = [self.center, self.extent]
        if with_velocity:
            if self.velocity is None:
                raise ContractError("velocity observation requested but detection has none")
            parts.append(self.velocity)
        parts.append([self.heading])
        return np.concatenate(parts)


@dataclass
class NoiseConfig:
    """Process and measurement noise for one object class."""

    process: dict = field(default_factory=lambda: dict(DEFAULT_PROCESS_NOISE))
    measurement: dict = field(default_factory=lambda: dict(DEFAULT_MEASUREMENT_NOISE))
    observe_velocity: bool = False
    initial_kinematic_variance: float = DEFAULT_INITIAL_KINEMATIC_VARIANCE

    def process_matrix(self, kind: ModelKind) -> np.ndarray:
        return np.diag([self.process[r] for r in _COMPONENT_ROLES[kind]])

    def measurement_matrix(self, with_velocity: Optional[bool] = None) -> np.ndarray:
        if with_velocity is None:
            with_velocity = self.observe_velocity
        m = self.measurement
        diag = [m["position"]] * 3 + [m["extent"]] * 3
        if with_velocity:
            diag += [m["velocity"]] * 2
        diag.append(m["heading"])
        return np.diag(diag)

    def initial_covariance(self, kind: ModelKind) -> np.ndarray:
        m = self.measurement
        diag = []
        for role in _COMPONENT_ROLES[kind]:
            if role == "position":
                diag.append(m["position"])
            elif role == "extent":
                diag.append(m["extent"])
            elif role == "heading":
                diag.append(m["heading"])
            else:
                diag.append(self.initial_kinematic_variance)
        return np.diag(diag)


@dataclass
class UpdateResult:
    """Posterior state plus the update by-products the filter bank needs."""

    posterior: ModelState
    residual: np.ndarray
    residual_covariance: np.ndarray
    likelihood: float


def ensure_psd(matrix: np.ndarray, tolerance: float = PSD_EIGENVALUE_TOLERANCE) -> np.ndarray:
    """Symmetrize and clamp tiny negative eigenvalues; fail on real ones."""
    sym = 0.5 * (matrix + matrix.T)
    eigenvalues = np.linalg.eigvalsh(sym)
    smallest = float(eigenvalues[0])
    if smallest < -tolerance:
        raise NumericalError(
            f"covariance lost positive semidefiniteness (eigenvalue {smallest:.3e})",
            value=smallest,
        )
    if smallest < 0.0:
        values, vectors = np.linalg.eigh(sym)
        values = np.clip(values, 0.0, None)
        sym = vectors @ np.diag(values) @ vectors.T
        sym = 0.5 * (sym + sym.T)
    return sym


def measurement_function(state: ModelState, with_velocity: bool = False):
    """Predicted measurement h(x) and its Jacobian H for one model state."""
    s = state.vector
    kind = state.kind
    dim = STATE_DIM[kind]
    theta_idx = THETA_INDEX[kind]

    rows = [np.eye(dim)[i] for i in range(6)]
    values = list(s[0:6])

    if with_velocity:
        if kind in (ModelKind.CV, ModelKind.CA):
            rows.append(np.eye(dim)[6])
            rows.append(np.eye(dim)[7])
            values.extend([s[6], s[7]])
        else:
            v, theta = s[6], s[theta_idx]
            sin_t, cos_t = math.sin(theta), math.cos(theta)
            row_vx = np.zeros(dim)
            row_vx[6] = cos_t
            row_vx[theta_idx] = -v * sin_t
            row_vy = np.zeros(dim)
            row_vy[6] = sin_t
            row_vy[theta_idx] = v * cos_t
            rows.extend([row_vx, row_vy])
            values.extend([v * cos_t, v * sin_t])

    rows.append(np.eye(dim)[theta_idx])
    values.append(s[theta_idx])
    return np.array(values), np.vstack(rows)


def predict(state: ModelState, noise: NoiseConfig, dt: float) -> ModelState:
    """Propagate mean and covariance by `dt` (EKF form for turn models)."""
    mean = transition(state.kind, state.vector, dt)
    f = jacobian(state.kind, state.vector, dt)
    covariance = f @ state.covariance @ f.T + noise.process_matrix(state.kind)
    covariance = ensure_psd(covariance)
    return ModelState(state.kind, mean, covariance)


def update(state: ModelState, obs: Observation, noise: NoiseConfig) -> UpdateResult:
    """Measurement update returning the posterior and Gaussian likelihood."""
    with_velocity = noise.observe_velocity and obs.velocity is not None
    z = obs.vector(with_velocity)
    if not np.all(np.isfinite(z)):
        raise ContractError(f"observation contains non-finite values: {z}")

    predicted, h = measurement_function(state, with_velocity)
    residual = z - predicted
    residual[-1] = wrap_angle(residual[-1])

    r = noise.measurement_matrix(with_velocity)
    s_matrix = h @ state.covariance @ h.T + r
    s_matrix = 0.5 * (s_matrix + s_matrix.T)
    condition = np.linalg.cond(s_matrix)
    if not np.isfinite(condition) or condition > MAX_CONDITION_NUMBER:
        raise NumericalError(
            f"residual covariance is ill-conditioned (cond {condition:.3e})",
            value=float(condition),
        )

    gain = state.covariance @ h.T @ np.linalg.inv(s_matrix)
    mean = state.vector + gain @ residual
    theta_idx = THETA_INDEX[state.kind]
    mean[theta_idx] = wrap_angle(mean[theta_idx])

    identity = np.eye(STATE_DIM[state.kind])
    joseph = identity - gain @ h
    covariance = joseph @ state.covariance @ joseph.T + gain @ r @ gain.T
    covariance = ensure_psd(covariance)

    likelihood = gaussian_likelihood(residual, s_matrix)
    return UpdateResult(
        posterior=ModelState(state.kind, mean, covariance),
        residual=residual,
        residual_covariance=s_matrix,
        likelihood=likelihood,
    )


def gaussian_likelihood(residual: np.ndarray, covariance: np.ndarray) -> float:
    """Density of `residual` under a zero-mean Gaussian with `covariance`."""
    dim = residual.shape[0]
    sign, logdet = np.linalg.slogdet(covariance)
    if sign <= 0:
        raise NumericalError("residual covariance has non-positive determinant")
    maha = float(residual @ np.linalg.solve(covariance, residual))
    log_density = -0.5 * (maha + logdet + dim * math.log(2.0 * math.pi))
    if log_density < -700.0:
        return 0.0
    return math.exp(log_density)
