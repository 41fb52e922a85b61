"""Vehicle states recovered from trajectory derivatives, and the displaced
reference trajectory derived from them.

A planar path with nonvanishing velocity determines heading, speed, and their
rates algebraically; the same map applied ahead of the path by the control
displacement yields the target the displaced point must follow.
"""

import math
from dataclasses import dataclass

import numpy as np

from .epsilon_control import (EpsilonParams, PointReference, coriolis_matrix,
                              displacement_matrix)
from .errors import DegenerateVelocity

V_FLOOR = 1e-6  # m/s below which the heading of a path is undefined


@dataclass
class TrajectoryDerivatives:
    """Position and its first three time derivatives, each shape (2,)."""

    r: np.ndarray
    r_dot: np.ndarray
    r_ddot: np.ndarray
    r_dddot: np.ndarray


@dataclass
class FlatStates:
    """Vehicle states determined by the path derivatives."""

    psi: float    # heading, rad
    v: float      # forward speed, m/s
    a: float      # forward acceleration, m/s^2
    omega: float  # yaw rate, rad/s
    alpha: float  # yaw acceleration, rad/s^2


def flat_states(d: TrajectoryDerivatives, v_floor=V_FLOOR) -> FlatStates:
    """Recover (psi, v, a, omega, alpha) from the first three derivatives.

    Raises DegenerateVelocity when the velocity magnitude drops below v_floor.
    """
    xd, yd = float(d.r_dot[0]), float(d.r_dot[1])
    xdd, ydd = float(d.r_ddot[0]), float(d.r_ddot[1])
    xddd, yddd = float(d.r_dddot[0]), float(d.r_dddot[1])

    v = math.hypot(xd, yd)
    if not v >= v_floor:
        raise DegenerateVelocity(f"reference speed {v:.3e} m/s below floor {v_floor:.3e}")

    psi = math.atan2(yd, xd)
    a = (xd * xdd + yd * ydd) / v
    v2 = v * v
    omega = (xd * ydd - yd * xdd) / v2
    alpha = (xd * yddd - yd * xddd) / v2 - 2.0 * a * omega / v
    return FlatStates(psi, v, a, omega, alpha)


@dataclass
class EpsilonReference:
    """Displaced-point target and its own motion states along the reference."""

    q: np.ndarray       # displaced reference position, (2,)
    q_dot: np.ndarray   # its velocity, (2,)
    q_ddot: np.ndarray  # its acceleration, (2,)
    psi: float          # heading of the displaced point's velocity
    v: float            # speed of the displaced point (> 0 whenever f.v > 0)
    omega: float        # turn rate of the displaced point's velocity


def epsilon_reference(d: TrajectoryDerivatives, f: FlatStates,
                      eps: EpsilonParams) -> EpsilonReference:
    """Target for the displaced point so the axle rides the reference path."""
    e = eps.epsilon
    c, s = math.cos(f.psi), math.sin(f.psi)
    q = np.array([d.r[0] + e * c, d.r[1] + e * s])

    vel = np.array([f.v, f.omega])
    R = displacement_matrix(f.psi, eps)
    q_dot = R @ vel
    q_ddot = R @ (coriolis_matrix(f.omega, eps) @ vel + np.array([f.a, f.alpha]))

    v_eps = math.hypot(q_dot[0], q_dot[1])
    if not v_eps >= V_FLOOR:
        raise DegenerateVelocity(
            f"displaced reference speed {v_eps:.3e} m/s below floor {V_FLOOR:.3e}")
    psi_eps = math.atan2(q_dot[1], q_dot[0])
    omega_eps = (q_dot[0] * q_ddot[1] - q_dot[1] * q_ddot[0]) / (v_eps * v_eps)
    return EpsilonReference(q, q_dot, q_ddot, psi_eps, v_eps, omega_eps)


def point_reference(e: EpsilonReference) -> PointReference:
    """View of the displaced target as a plain point-control reference."""
    return PointReference(e.q, e.q_dot, e.q_ddot)
