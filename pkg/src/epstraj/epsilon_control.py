"""Feedback control of the point displaced a fixed distance ahead of the axle.

The displaced point behaves like a double integrator once the vehicle inputs
are recovered through the displacement matrix, so a linear state-feedback law
with acceleration feed-forward tracks any twice-differentiable point target.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, SingularVelocity, ValidationError
from .kinematics import (BicycleInput, BicycleState, UnicycleInput,
                         UnicycleState, bicycle_derivative, integrate_step,
                         unicycle_derivative)


@dataclass(frozen=True)
class EpsilonParams:
    """Displacement (m) of the controlled point ahead of the vehicle."""

    epsilon: float

    def __post_init__(self):
        if not (self.epsilon > 0.0 and math.isfinite(self.epsilon)):
            raise DomainError(f"epsilon must be positive and finite, got {self.epsilon}")


@dataclass
class PointState:
    """Controlled point: position and velocity, each shape (2,)."""

    q: np.ndarray
    q_dot: np.ndarray


@dataclass
class PointReference:
    """Target for the controlled point: position, velocity, acceleration."""

    q: np.ndarray
    q_dot: np.ndarray
    q_ddot: np.ndarray


# Double-integrator plant in block form, state [q, q_dot].
_A = np.block([[np.zeros((2, 2)), np.eye(2)], [np.zeros((2, 2)), np.zeros((2, 2))]])
_B = np.vstack([np.zeros((2, 2)), np.eye(2)])


@dataclass(frozen=True)
class GainMatrix:
    """2x4 state-feedback gain; construction rejects non-stabilizing gains."""

    K: np.ndarray
    eigenvalues: np.ndarray = field(init=False)

    def __post_init__(self):
        K = np.asarray(self.K, dtype=float)
        if K.shape != (2, 4):
            raise ValidationError(f"gain matrix must be 2x4, got {K.shape}")
        object.__setattr__(self, "K", K)
        eig = np.linalg.eigvals(_A - _B @ K)
        if np.any(eig.real >= 0.0):
            raise ValidationError(
                "gain matrix does not stabilize the point dynamics: "
                f"eigenvalue real parts {np.sort(eig.real)}")
        object.__setattr__(self, "eigenvalues", eig)

    @classmethod
    def pd(cls, kp=1.0, kd=2.0):
        """Decoupled proportional-derivative gains [kp*I, kd*I]."""
        return cls(np.hstack([kp * np.eye(2), kd * np.eye(2)]))

    @property
    def lambda_max(self):
        """Largest (slowest) real part among the closed-loop eigenvalues."""
        return float(np.max(self.eigenvalues.real))


def displacement_matrix(psi, eps: EpsilonParams):
    """Matrix mapping (v, omega) to the velocity of the displaced point."""
    c, s = math.cos(psi), math.sin(psi)
    e = eps.epsilon
    return np.array([[c, -e * s], [s, e * c]])


def displacement_matrix_inv(psi, eps: EpsilonParams):
    """Algebraic inverse of displacement_matrix; determinant is epsilon > 0."""
    c, s = math.cos(psi), math.sin(psi)
    e = eps.epsilon
    return np.array([[c, s], [-s / e, c / e]])


def coriolis_matrix(omega, eps: EpsilonParams):
    """Velocity-coupling matrix in the displaced-point acceleration."""
    e = eps.epsilon
    return np.array([[0.0, -e * omega], [omega / e, 0.0]])


def epsilon_point(s: UnicycleState, eps: EpsilonParams) -> PointState:
    """Displaced point and its velocity for a unicycle state."""
    c, p = math.cos(s.psi), math.sin(s.psi)
    e = eps.epsilon
    q = np.array([s.x + e * c, s.y + e * p])
    q_dot = np.array([s.v * c - e * p * s.omega, s.v * p + e * c * s.omega])
    return PointState(q, q_dot)


def point_control(p: PointState, ref: PointReference, gains: GainMatrix):
    """Acceleration command: feed-forward plus full-state error feedback."""
    z = np.concatenate([p.q - ref.q, p.q_dot - ref.q_dot])
    return ref.q_ddot - gains.K @ z


def unicycle_input_from_point(u_eps, s: UnicycleState, eps: EpsilonParams) -> UnicycleInput:
    """Recover (a, alpha) so the displaced point accelerates at exactly u_eps."""
    r_inv = displacement_matrix_inv(s.psi, eps)
    w = coriolis_matrix(s.omega, eps)
    acc = r_inv @ np.asarray(u_eps, dtype=float) - w @ np.array([s.v, s.omega])
    return UnicycleInput(float(acc[0]), float(acc[1]))


def bicycle_input_from_unicycle(a, alpha, s: BicycleState, v_min=1e-3) -> BicycleInput:
    """Steering rate realizing a requested yaw acceleration at the current state.

    Inverts alpha = (a / L) tan(phi) + (v / L) xi / cos^2(phi), which loses
    rank as v -> 0; speeds at or below v_min are rejected rather than clamped.
    """
    if abs(s.v) <= v_min:
        raise SingularVelocity(
            f"speed {s.v:.6g} m/s is within {v_min:.6g} of the steering singularity")
    cos_phi = math.cos(s.phi)
    xi = cos_phi * cos_phi / s.v * (s.wheelbase * alpha - a * math.tan(s.phi))
    return BicycleInput(float(a), float(xi))


def unicycle_alpha_from_bicycle(a, xi, s: BicycleState):
    """Yaw acceleration produced by (a, xi) at a bicycle state."""
    cos_phi = math.cos(s.phi)
    return a / s.wheelbase * math.tan(s.phi) + s.v / s.wheelbase * xi / (cos_phi * cos_phi)


@dataclass
class TrackingStepInfo:
    """Intermediate quantities of one tracking step, for logging."""

    q_eps: np.ndarray
    u_eps: np.ndarray
    inp: object  # UnicycleInput or BicycleInput actually applied


def epsilon_tracking_step(s, ref: PointReference, gains: GainMatrix,
                          eps: EpsilonParams, dt):
    """One closed-loop step: measure the displaced point, command it toward the
    reference, map the command to vehicle inputs, integrate with inputs held.

    Accepts a UnicycleState or a BicycleState; returns (next_state, info).
    """
    if isinstance(s, BicycleState):
        uni_view = UnicycleState(s.x, s.y, s.psi, s.v, s.omega())
    elif isinstance(s, UnicycleState):
        uni_view = s
    else:
        raise DomainError(f"unsupported vehicle state {type(s).__name__}")

    p = epsilon_point(uni_view, eps)
    u_eps = point_control(p, ref, gains)
    acc = unicycle_input_from_point(u_eps, uni_view, eps)

    if isinstance(s, BicycleState):
        inp = bicycle_input_from_unicycle(acc.a, acc.alpha, s)
        nxt = integrate_step(bicycle_derivative, s, inp, dt)
    else:
        inp = acc
        nxt = integrate_step(unicycle_derivative, s, inp, dt)
    return nxt, TrackingStepInfo(p.q, u_eps, inp)
