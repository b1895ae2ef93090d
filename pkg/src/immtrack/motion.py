"""Kinematic motion models: CV, CA, CTRV, CTRA.

Each model owns a state vector layout that shares a pose/extent prefix
[x, y, z, w, l, h] and appends its own kinematic tail:

    CV    [..., vx, vy, vz, theta]                  (10)
    CA    [..., vx, vy, vz, ax, ay, az, theta]      (13)
    CTRV  [..., v, theta, omega]                    (9)
    CTRA  [..., v, a, theta, omega]                 (10)

All four project into one 14-dimensional representation
[x, y, z, w, l, h, vx, vy, vz, ax, ay, az, theta, omega] so that a filter
bank can fuse them. Box extent propagates as a constant. Heading is wrapped
to (-pi, pi] by every transition.

Turn models fall back to their straight-line form below `OMEGA_EPS` to avoid
the 1/omega singularity; the fallback Jacobians carry the analytic
omega -> 0 limits of the curved form so the two branches join smoothly.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError
from .geometry import wrap_angle

OMEGA_EPS = 1e-6

UNIFIED_DIM = 14
UNIFIED_FIELDS = (
    "x", "y", "z", "w", "l", "h",
    "vx", "vy", "vz", "ax", "ay", "az",
    "theta", "omega",
)


class ModelKind(enum.Enum):
    CV = "cv"
    CA = "ca"
    CTRV = "ctrv"
    CTRA = "ctra"


STATE_DIM = {
    ModelKind.CV: 10,
    ModelKind.CA: 13,
    ModelKind.CTRV: 9,
    ModelKind.CTRA: 10,
}

# Index of theta within each model's state vector.
THETA_INDEX = {
    ModelKind.CV: 9,
    ModelKind.CA: 12,
    ModelKind.CTRV: 7,
    ModelKind.CTRA: 8,
}


@dataclass
class UnifiedState:
    """Shared 14-dimensional kinematic state used for fusion and output."""

    x: float = 0.0
    y: float = 0.0
    z: float = 0.0
    w: float = 1.0
    l: float = 1.0
    h: float = 1.0
    vx: float = 0.0
    vy: float = 0.0
    vz: float = 0.0
    ax: float = 0.0
    ay: float = 0.0
    az: float = 0.0
    theta: float = 0.0
    omega: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f) for f in UNIFIED_FIELDS], dtype=float)

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "UnifiedState":
        arr = np.asarray(arr, dtype=float)
        if arr.shape != (UNIFIED_DIM,):
            raise ContractError(f"unified state must have {UNIFIED_DIM} entries, got {arr.shape}")
        return cls(**dict(zip(UNIFIED_FIELDS, arr.tolist())))


@dataclass
class ModelState:
    """State vector and covariance of one motion-model filter."""

    kind: ModelKind
    vector: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        self.vector = np.asarray(self.vector, dtype=float)
        self.covariance = np.asarray(self.covariance, dtype=float)
        dim = STATE_DIM[self.kind]
        if self.vector.shape != (dim,):
            raise ContractError(
                f"{self.kind.value} state needs {dim} entries, got {self.vector.shape}"
            )
        if self.covariance.shape != (dim, dim):
            raise ContractError(
                f"{self.kind.value} covariance needs shape {(dim, dim)}, got {self.covariance.shape}"
            )


def _check_state(kind: ModelKind, state: np.ndarray, dt: float) -> np.ndarray:
    state = np.asarray(state, dtype=float)
    if state.shape != (STATE_DIM[kind],):
        raise ContractError(
            f"{kind.value} state needs {STATE_DIM[kind]} entries, got {state.shape}"
        )
    if dt <= 0.0:
        raise ContractError(f"dt must be positive, got {dt}")
    return state


def transition(kind: ModelKind, state: np.ndarray, dt: float) -> np.ndarray:
    """Propagate a model state vector by `dt` seconds."""
    state = _check_state(kind, state, dt)
    out = state.copy()

    if kind is ModelKind.CV:
        out[0:3] += state[6:9] * dt
    elif kind is ModelKind.CA:
        out[0:3] += state[6:9] * dt + 0.5 * state[9:12] * dt * dt
        out[6:9] += state[9:12] * dt
    elif kind is ModelKind.CTRV:
        v, theta, omega = state[6], state[7], state[8]
        if abs(omega) < OMEGA_EPS:
            out[0] += v * math.cos(theta) * dt
            out[1] += v * math.sin(theta) * dt
        else:
            phi = theta + omega * dt
            out[0] += (v / omega) * (math.sin(phi) - math.sin(theta))
            out[1] += (v / omega) * (math.cos(theta) - math.cos(phi))
        out[7] = theta + omega * dt
    elif kind is ModelKind.CTRA:
        v, a, theta, omega = state[6], state[7], state[8], state[9]
        if abs(omega) < OMEGA_EPS:
            ds = v * dt + 0.5 * a * dt * dt
            out[0] += ds * math.cos(theta)
            out[1] += ds * math.sin(theta)
        else:
            phi = theta + omega * dt
            v_end = v + a * dt
            out[0] += (v_end * math.sin(phi) - v * math.sin(theta)) / omega \
                + (a / omega**2) * (math.cos(phi) - math.cos(theta))
            out[1] += (-v_end * math.cos(phi) + v * math.cos(theta)) / omega \
                + (a / omega**2) * (math.sin(phi) - math.sin(theta))
        out[6] = v + a * dt
        out[8] = theta + omega * dt

    idx = THETA_INDEX[kind]
    out[idx] = wrap_angle(out[idx])
    return out


def jacobian(kind: ModelKind, state: np.ndarray, dt: float) -> np.ndarray:
    """Jacobian of :func:`transition` at `state`.

    Constant for the linear models; state-dependent for CTRV/CTRA.
    """
    state = _check_state(kind, state, dt)
    dim = STATE_DIM[kind]
    jac = np.eye(dim)

    if kind is ModelKind.CV:
        jac[0, 6] = jac[1, 7] = jac[2, 8] = dt
    elif kind is ModelKind.CA:
        jac[0, 6] = jac[1, 7] = jac[2, 8] = dt
        jac[0, 9] = jac[1, 10] = jac[2, 11] = 0.5 * dt * dt
        jac[6, 9] = jac[7, 10] = jac[8, 11] = dt
    elif kind is ModelKind.CTRV:
        v, theta, omega = state[6], state[7], state[8]
        sin_t, cos_t = math.sin(theta), math.cos(theta)
        if abs(omega) < OMEGA_EPS:
            # omega -> 0 limits of the curved-form partials
            jac[0, 6] = cos_t * dt
            jac[0, 7] = -v * sin_t * dt
            jac[0, 8] = -0.5 * v * sin_t * dt * dt
            jac[1, 6] = sin_t * dt
            jac[1, 7] = v * cos_t * dt
            jac[1, 8] = 0.5 * v * cos_t * dt * dt
        else:
            phi = theta + omega * dt
            sin_p, cos_p = math.sin(phi), math.cos(phi)
            jac[0, 6] = (sin_p - sin_t) / omega
            jac[0, 7] = (v / omega) * (cos_p - cos_t)
            jac[0, 8] = (v * dt / omega) * cos_p - (v / omega**2) * (sin_p - sin_t)
            jac[1, 6] = (cos_t - cos_p) / omega
            jac[1, 7] = (v / omega) * (sin_p - sin_t)
            jac[1, 8] = (v * dt / omega) * sin_p - (v / omega**2) * (cos_t - cos_p)
        jac[7, 8] = dt
    elif kind is ModelKind.CTRA:
        v, a, theta, omega = state[6], state[7], state[8], state[9]
        sin_t, cos_t = math.sin(theta), math.cos(theta)
        if abs(omega) < OMEGA_EPS:
            ds = v * dt + 0.5 * a * dt * dt
            jac[0, 6] = cos_t * dt
            jac[0, 7] = 0.5 * cos_t * dt * dt
            jac[0, 8] = -sin_t * ds
            jac[0, 9] = -sin_t * (0.5 * v * dt * dt + a * dt**3 / 3.0)
            jac[1, 6] = sin_t * dt
            jac[1, 7] = 0.5 * sin_t * dt * dt
            jac[1, 8] = cos_t * ds
            jac[1, 9] = cos_t * (0.5 * v * dt * dt + a * dt**3 / 3.0)
        else:
            phi = theta + omega * dt
            sin_p, cos_p = math.sin(phi), math.cos(phi)
            v_end = v + a * dt
            inv_w = 1.0 / omega
            inv_w2 = inv_w * inv_w
            dx = (v_end * sin_p - v * sin_t) * inv_w + a * inv_w2 * (cos_p - cos_t)
            dy = (-v_end * cos_p + v * cos_t) * inv_w + a * inv_w2 * (sin_p - sin_t)
            jac[0, 6] = (sin_p - sin_t) * inv_w
            jac[0, 7] = dt * sin_p * inv_w + inv_w2 * (cos_p - cos_t)
            jac[0, 8] = (v_end * cos_p - v * cos_t) * inv_w - a * inv_w2 * (sin_p - sin_t)
            jac[0, 9] = v_end * dt * cos_p * inv_w - dx * inv_w - a * dt * sin_p * inv_w2 \
                - a * inv_w2 * (cos_p - cos_t) * inv_w
            jac[1, 6] = (cos_t - cos_p) * inv_w
            jac[1, 7] = -dt * cos_p * inv_w + inv_w2 * (sin_p - sin_t)
            jac[1, 8] = (v_end * sin_p - v * sin_t) * inv_w + a * inv_w2 * (cos_p - cos_t)
            jac[1, 9] = v_end * dt * sin_p * inv_w - dy * inv_w + a * dt * cos_p * inv_w2 \
                - a * inv_w2 * (sin_p - sin_t) * inv_w
        jac[6, 7] = dt
        jac[8, 9] = dt

    return jac


def to_unified(state: ModelState) -> UnifiedState:
    """Project a model state into the shared 14-dimensional representation.

    Fields a model does not carry are zero (they are zero by that model's
    definition); CTRV/CTRA speed and acceleration resolve along the heading.
    """
    s = state.vector
    u = np.zeros(UNIFIED_DIM)
    u[0:6] = s[0:6]
    if state.kind is ModelKind.CV:
        u[6:9] = s[6:9]
        u[12] = s[9]
    elif state.kind is ModelKind.CA:
        u[6:9] = s[6:9]
        u[9:12] = s[9:12]
        u[12] = s[12]
    elif state.kind is ModelKind.CTRV:
        v, theta, omega = s[6], s[7], s[8]
        u[6] = v * math.cos(theta)
        u[7] = v * math.sin(theta)
        u[12] = theta
        u[13] = omega
    elif state.kind is ModelKind.CTRA:
        v, a, theta, omega = s[6], s[7], s[8], s[9]
        u[6] = v * math.cos(theta)
        u[7] = v * math.sin(theta)
        u[9] = a * math.cos(theta)
        u[10] = a * math.sin(theta)
        u[12] = theta
        u[13] = omega
    return UnifiedState.from_array(u)


def from_unified(kind: ModelKind, unified: UnifiedState) -> np.ndarray:
    """Inverse projection: extract the state vector model `kind` carries.

    Speed is the planar magnitude hypot(vx, vy); acceleration projects onto
    the heading so deceleration keeps its sign.
    """
    u = unified.as_array()
    if kind is ModelKind.CV:
        return np.concatenate([u[0:9], [u[12]]])
    if kind is ModelKind.CA:
        return np.concatenate([u[0:12], [u[12]]])
    speed = math.hypot(u[6], u[7])
    if kind is ModelKind.CTRV:
        return np.concatenate([u[0:6], [speed, u[12], u[13]]])
    accel = u[9] * math.cos(u[12]) + u[10] * math.sin(u[12])
    return np.concatenate([u[0:6], [speed, accel, u[12], u[13]]])


def unified_jacobian(state: ModelState) -> np.ndarray:
    """Jacobian of the unified projection, shape (14, model_dim).

    Used to carry model covariances into the shared space: selector rows
    for the linear models, linearized speed/heading resolution for the
    turn models.
    """
    s = state.vector
    dim = STATE_DIM[state.kind]
    jac = np.zeros((UNIFIED_DIM, dim))
    for i in range(6):
        jac[i, i] = 1.0
    if state.kind is ModelKind.CV:
        jac[6, 6] = jac[7, 7] = jac[8, 8] = 1.0
        jac[12, 9] = 1.0
    elif state.kind is ModelKind.CA:
        for u_row, col in zip(range(6, 12), range(6, 12)):
            jac[u_row, col] = 1.0
        jac[12, 12] = 1.0
    elif state.kind is ModelKind.CTRV:
        v, theta = s[6], s[7]
        sin_t, cos_t = math.sin(theta), math.cos(theta)
        jac[6, 6] = cos_t
        jac[6, 7] = -v * sin_t
        jac[7, 6] = sin_t
        jac[7, 7] = v * cos_t
        jac[12, 7] = 1.0
        jac[13, 8] = 1.0
    elif state.kind is ModelKind.CTRA:
        v, a, theta = s[6], s[7], s[8]
        sin_t, cos_t = math.sin(theta), math.cos(theta)
        jac[6, 6] = cos_t
        jac[6, 8] = -v * sin_t
        jac[7, 6] = sin_t
        jac[7, 8] = v * cos_t
        jac[9, 7] = cos_t
        jac[9, 8] = -a * sin_t
        jac[10, 7] = sin_t
        jac[10, 8] = a * cos_t
        jac[12, 8] = 1.0
        jac[13, 9] = 1.0
    return jac


def reduction_jacobian(kind: ModelKind, unified: UnifiedState) -> np.ndarray:
    """Jacobian of :func:`from_unified`, shape (model_dim, 14)."""
    u = unified.as_array()
    dim = STATE_DIM[kind]
    jac = np.zeros((dim, UNIFIED_DIM))
    for i in range(6):
        jac[i, i] = 1.0
    if kind is ModelKind.CV:
        jac[6, 6] = jac[7, 7] = jac[8, 8] = 1.0
        jac[9, 12] = 1.0
        return jac
    if kind is ModelKind.CA:
        for row, u_col in zip(range(6, 12), range(6, 12)):
            jac[row, u_col] = 1.0
        jac[12, 12] = 1.0
        return jac

    speed = math.hypot(u[6], u[7])
    if speed > 1e-12:
        dv = (u[6] / speed, u[7] / speed)
    else:
        dv = (math.cos(u[12]), math.sin(u[12]))
    jac[6, 6], jac[6, 7] = dv
    if kind is ModelKind.CTRV:
        jac[7, 12] = 1.0
        jac[8, 13] = 1.0
        return jac

    sin_h, cos_h = math.sin(u[12]), math.cos(u[12])
    jac[7, 9] = cos_h
    jac[7, 10] = sin_h
    jac[7, 12] = -u[9] * sin_h + u[10] * cos_h
    jac[8, 12] = 1.0
    jac[9, 13] = 1.0
    return jac
