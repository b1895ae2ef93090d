"""Motion model checks.

Curved transitions are checked against RK4 integration of the underlying
kinematic ODE; Jacobians against central finite differences; projections
against round-trip identities. None of the oracles share code with the
closed forms they verify.
"""

import math

import numpy as np
import pytest

from immtrack.errors import ContractError
from immtrack.motion import (
    STATE_DIM,
    ModelKind,
    ModelState,
    UnifiedState,
    from_unified,
    jacobian,
    to_unified,
    transition,
    unified_jacobian,
)

from conftest import random_model_vector

ALL_KINDS = list(ModelKind)


def rk4_plane_motion(kind, state, dt, steps=4000):
    """Integrate dx/dt = v cos(theta), dy/dt = v sin(theta), dtheta/dt = omega
    (plus dv/dt = a for CTRA) with classic fixed-step RK4."""
    if kind is ModelKind.CTRV:
        x, y, v, theta, omega, a = state[0], state[1], state[6], state[7], state[8], 0.0
    else:
        x, y, v, a, theta, omega = state[0], state[1], state[6], state[7], state[8], state[9]

    def deriv(q):
        qx, qy, qv, qtheta = q
        return np.array([qv * math.cos(qtheta), qv * math.sin(qtheta), a, omega])

    q = np.array([x, y, v, theta])
    h = dt / steps
    for _ in range(steps):
        k1 = deriv(q)
        k2 = deriv(q + 0.5 * h * k1)
        k3 = deriv(q + 0.5 * h * k2)
        k4 = deriv(q + h * k3)
        q = q + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return q  # x, y, v, theta


class TestTransition:
    def test_cv_linear_motion(self):
        state = np.zeros(10)
        state[6] = 2.0
        out = transition(ModelKind.CV, state, 0.5)
        assert out[0] == pytest.approx(1.0)
        assert np.allclose(np.delete(out, 0), np.delete(state, 0))

    def test_ctrv_zero_turn_rate(self):
        state = np.zeros(9)
        state[6] = 3.0
        out = transition(ModelKind.CTRV, state, 1.0)
        assert out[0] == pytest.approx(3.0)
        assert out[7] == 0.0

    def test_ctrv_quarter_turn_matches_rk4(self):
        state = np.zeros(9)
        state[6], state[7], state[8] = 2.0, 0.0, math.pi / 2
        out = transition(ModelKind.CTRV, state, 1.0)
        ox, oy, _, otheta = rk4_plane_motion(ModelKind.CTRV, state, 1.0)
        assert out[0] == pytest.approx(ox, abs=1e-6)
        assert out[1] == pytest.approx(oy, abs=1e-6)
        assert out[7] == pytest.approx(otheta, abs=1e-9)

    @pytest.mark.parametrize("kind", [ModelKind.CTRV, ModelKind.CTRA])
    def test_curved_transitions_match_rk4(self, kind, rng):
        for _ in range(25):
            state = random_model_vector(kind, rng)
            dt = rng.uniform(0.1, 1.5)
            out = transition(kind, state, dt)
            ox, oy, ov, otheta = rk4_plane_motion(kind, state, dt)
            assert out[0] == pytest.approx(ox, abs=1e-6)
            assert out[1] == pytest.approx(oy, abs=1e-6)
            assert out[6] == pytest.approx(ov, abs=1e-9)
            assert math.sin(out[STATE_DIM[kind] - 2]) == pytest.approx(
                math.sin(otheta), abs=1e-9
            )

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_extent_constant_and_heading_wrapped(self, kind, rng):
        for _ in range(50):
            state = random_model_vector(kind, rng)
            out = transition(kind, state, rng.uniform(0.1, 3.0))
            assert np.array_equal(out[3:6], state[3:6])
            theta = out[STATE_DIM[kind] - 1 if kind in (ModelKind.CV, ModelKind.CA) else -2]
            assert -math.pi < theta <= math.pi

    @pytest.mark.parametrize("kind", [ModelKind.CV, ModelKind.CA])
    def test_linear_semigroup(self, kind, rng):
        for _ in range(30):
            state = random_model_vector(kind, rng)
            dt = rng.uniform(0.2, 2.0)
            twice = transition(kind, transition(kind, state, dt / 2), dt / 2)
            once = transition(kind, state, dt)
            assert np.allclose(twice, once, atol=1e-9)

    def test_dimension_mismatch(self):
        with pytest.raises(ContractError):
            transition(ModelKind.CV, np.zeros(9), 0.5)

    def test_non_positive_dt(self):
        with pytest.raises(ContractError):
            transition(ModelKind.CV, np.zeros(10), 0.0)

    @pytest.mark.parametrize("kind", [ModelKind.CTRV, ModelKind.CTRA])
    def test_branch_continuity_at_singularity(self, kind, rng):
        for _ in range(20):
            state = random_model_vector(kind, rng)
            omega_idx = STATE_DIM[kind] - 1
            near = state.copy()
            near[omega_idx] = 2e-6  # just above the fallback threshold
            zero = state.copy()
            zero[omega_idx] = 0.0
            out_near = transition(kind, near, 0.5)
            out_zero = transition(kind, zero, 0.5)
            assert np.allclose(out_near[:2], out_zero[:2], atol=1e-4)


class TestJacobian:
    def test_cv_constant_blocks(self):
        jac = jacobian(ModelKind.CV, np.zeros(10), 0.5)
        assert jac[0, 6] == jac[1, 7] == jac[2, 8] == 0.5
        assert np.allclose(jac - np.eye(10), _only(jac.shape, {(0, 6), (1, 7), (2, 8)}, 0.5))

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_matches_finite_differences(self, kind, rng):
        for _ in range(100):
            state = random_model_vector(kind, rng)
            if kind in (ModelKind.CTRV, ModelKind.CTRA):
                omega_idx = STATE_DIM[kind] - 1
                if abs(state[omega_idx]) < 0.1:
                    state[omega_idx] = 0.1 * np.sign(state[omega_idx] or 1.0)
            dt = rng.uniform(0.2, 1.0)
            analytic = jacobian(kind, state, dt)
            numeric = _finite_difference(kind, state, dt)
            scale = np.maximum(np.abs(numeric), 1.0)
            mask = np.abs(numeric) >= 1e-8
            rel = np.abs(analytic - numeric) / scale
            assert np.all(rel[mask] < 1e-5), (kind, np.max(rel[mask]))

    @pytest.mark.parametrize("kind", [ModelKind.CTRV, ModelKind.CTRA])
    def test_fallback_jacobian_continuous(self, kind, rng):
        for _ in range(20):
            state = random_model_vector(kind, rng)
            omega_idx = STATE_DIM[kind] - 1
            near = state.copy()
            near[omega_idx] = 1e-7
            zero = state.copy()
            zero[omega_idx] = 0.0
            assert np.allclose(
                jacobian(kind, near, 0.5), jacobian(kind, zero, 0.5), atol=1e-4
            )

    @pytest.mark.parametrize("kind", [ModelKind.CTRV, ModelKind.CTRA])
    def test_fallback_omega_column_matches_wide_difference(self, kind, rng):
        # The omega partials of the fallback must equal the omega -> 0 limit
        # of the curved branch. A wide central difference (h large enough to
        # dodge the 1/omega cancellation noise, small enough for O(h^2)
        # truncation) across the curved branch is the independent oracle.
        h = 1e-3
        for _ in range(20):
            state = random_model_vector(kind, rng)
            omega_idx = STATE_DIM[kind] - 1
            zero = state.copy()
            zero[omega_idx] = 0.0
            plus, minus = zero.copy(), zero.copy()
            plus[omega_idx] = h
            minus[omega_idx] = -h
            column = (transition(kind, plus, 0.5) - transition(kind, minus, 0.5)) / (2 * h)
            analytic = jacobian(kind, zero, 0.5)[:, omega_idx]
            assert np.allclose(analytic[:2], column[:2], atol=1e-4)


def _finite_difference(kind, state, dt, step=1e-6):
    dim = STATE_DIM[kind]
    jac = np.zeros((dim, dim))
    for j in range(dim):
        plus = state.copy()
        minus = state.copy()
        plus[j] += step
        minus[j] -= step
        delta = transition(kind, plus, dt) - transition(kind, minus, dt)
        theta_row = dim - 1 if kind in (ModelKind.CV, ModelKind.CA) else dim - 2
        # Undo the wrap so differences near +-pi stay differentiable.
        if delta[theta_row] > math.pi:
            delta[theta_row] -= 2 * math.pi
        elif delta[theta_row] < -math.pi:
            delta[theta_row] += 2 * math.pi
        jac[:, j] = delta / (2 * step)
    return jac


def _only(shape, entries, value):
    out = np.zeros(shape)
    for i, j in entries:
        out[i, j] = value
    return out


class TestProjections:
    def test_ctrv_axis_aligned(self):
        vec = np.zeros(9)
        vec[6] = 2.0
        unified = to_unified(ModelState(ModelKind.CTRV, vec, np.eye(9)))
        assert unified.vx == pytest.approx(2.0)
        assert unified.vy == unified.vz == 0.0
        assert unified.ax == unified.ay == unified.az == 0.0

    def test_cv_identity_embedding(self, rng):
        vec = random_model_vector(ModelKind.CV, rng)
        unified = to_unified(ModelState(ModelKind.CV, vec, np.eye(10)))
        assert unified.ax == unified.ay == unified.az == unified.omega == 0.0
        assert unified.vx == vec[6] and unified.theta == vec[9]

    def test_ctra_diagonal_heading(self):
        vec = np.zeros(10)
        vec[6], vec[7], vec[8] = math.sqrt(2.0), 1.0, math.pi / 4
        unified = to_unified(ModelState(ModelKind.CTRA, vec, np.eye(10)))
        assert unified.vx == pytest.approx(1.0)
        assert unified.vy == pytest.approx(1.0)
        assert unified.ax == pytest.approx(math.cos(math.pi / 4))
        assert unified.ay == pytest.approx(math.sin(math.pi / 4))

    def test_hypot_speed(self):
        unified = UnifiedState(vx=3.0, vy=4.0)
        assert from_unified(ModelKind.CTRV, unified)[6] == pytest.approx(5.0)

    def test_zero_motion_maps_to_zero_state(self):
        unified = UnifiedState(x=1.0, y=2.0, z=0.5, w=2.0, l=4.0, h=1.5)
        for kind in ALL_KINDS:
            vec = from_unified(kind, unified)
            assert np.allclose(vec[0:6], [1.0, 2.0, 0.5, 2.0, 4.0, 1.5])
            assert np.allclose(vec[6:], 0.0)

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_model_round_trip(self, kind, rng):
        # model -> unified -> model preserves everything the model carries
        # (speeds are non-negative in the valid domain).
        for _ in range(1000):
            vec = random_model_vector(kind, rng)
            state = ModelState(kind, vec, np.eye(STATE_DIM[kind]))
            back = from_unified(kind, to_unified(state))
            assert np.allclose(back, vec, atol=1e-12), kind

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_unified_round_trip_carried_fields(self, kind, rng):
        for _ in range(200):
            u = UnifiedState(
                x=rng.uniform(-20, 20), y=rng.uniform(-20, 20), z=rng.uniform(-2, 2),
                w=rng.uniform(0.5, 3), l=rng.uniform(0.5, 6), h=rng.uniform(0.5, 3),
                vx=rng.uniform(-10, 10), vy=rng.uniform(-10, 10), vz=rng.uniform(-2, 2),
                ax=rng.uniform(-3, 3), ay=rng.uniform(-3, 3), az=rng.uniform(-1, 1),
                theta=rng.uniform(-np.pi, np.pi), omega=rng.uniform(-1, 1),
            )
            state = ModelState(kind, from_unified(kind, u), np.eye(STATE_DIM[kind]))
            again = to_unified(state)
            assert again.x == u.x and again.y == u.y and again.z == u.z
            assert again.w == u.w and again.l == u.l and again.h == u.h
            assert again.theta == u.theta
            if kind in (ModelKind.CV, ModelKind.CA):
                assert again.vx == u.vx and again.vy == u.vy and again.vz == u.vz
            else:
                # heading-resolved models preserve planar speed magnitude
                assert math.hypot(again.vx, again.vy) == pytest.approx(
                    math.hypot(u.vx, u.vy), abs=1e-12
                )
                assert again.omega == u.omega
            if kind is ModelKind.CA:
                assert again.ax == u.ax and again.ay == u.ay and again.az == u.az
            if kind is ModelKind.CTRA:
                # carried acceleration is the component along the heading
                along = u.ax * math.cos(u.theta) + u.ay * math.sin(u.theta)
                back = again.ax * math.cos(u.theta) + again.ay * math.sin(u.theta)
                assert back == pytest.approx(along, abs=1e-12)

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_unified_jacobian_matches_finite_difference(self, kind, rng):
        for _ in range(20):
            vec = random_model_vector(kind, rng)
            state = ModelState(kind, vec, np.eye(STATE_DIM[kind]))
            analytic = unified_jacobian(state)
            step = 1e-7
            for j in range(STATE_DIM[kind]):
                plus, minus = vec.copy(), vec.copy()
                plus[j] += step
                minus[j] -= step
                column = (
                    to_unified(ModelState(kind, plus, np.eye(STATE_DIM[kind]))).as_array()
                    - to_unified(ModelState(kind, minus, np.eye(STATE_DIM[kind]))).as_array()
                ) / (2 * step)
                assert np.allclose(analytic[:, j], column, atol=1e-5)
