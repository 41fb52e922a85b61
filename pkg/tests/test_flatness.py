import math

import numpy as np
import pytest

from epstraj.epsilon_control import EpsilonParams, displacement_matrix
from epstraj.errors import DegenerateVelocity
from epstraj.flatness import (TrajectoryDerivatives, epsilon_reference,
                              flat_states, point_reference)
from epstraj.kinematics import wrap_angle
from epstraj.references import (CircleReference, CosineReference,
                                PolynomialReference)


def random_quintic(rng):
    # dominant linear coefficient keeps speed away from the floor on [0, 1]
    cx = np.concatenate([[0.0, rng.uniform(1.0, 3.0)],
                         rng.uniform(-0.3, 0.3, size=4)])
    cy = np.concatenate([[0.0, rng.uniform(-2.0, 2.0)],
                         rng.uniform(-0.3, 0.3, size=4)])
    return PolynomialReference(cx, cy)


def test_flat_states_against_finite_differences():
    rng = np.random.default_rng(23)
    h = 1e-4
    for _ in range(25):
        ref = random_quintic(rng)
        t = rng.uniform(0.1, 0.9)
        f = flat_states(ref.derivatives(t))

        def at(tt):
            return flat_states(ref.derivatives(tt))

        fm, fp = at(t - h), at(t + h)
        a_fd = (fp.v - fm.v) / (2.0 * h)
        omega_fd = wrap_angle(fp.psi - fm.psi) / (2.0 * h)
        alpha_fd = (fp.omega - fm.omega) / (2.0 * h)
        d = ref.derivatives(t)
        assert abs(f.psi - math.atan2(d.r_dot[1], d.r_dot[0])) < 1e-14
        assert abs(f.v - np.linalg.norm(d.r_dot)) < 1e-14
        assert abs(f.a - a_fd) <= 1e-6 * max(1.0, abs(f.a))
        assert abs(f.omega - omega_fd) <= 1e-6 * max(1.0, abs(f.omega))
        assert abs(f.alpha - alpha_fd) <= 1e-6 * max(1.0, abs(f.alpha))


def test_flat_states_on_circle():
    # constant-rate circle: v = R*w, omega = w, a = alpha = 0
    ref = CircleReference(radius=4.0, speed=1.2, center=(1.0, -2.0))
    for t in (0.0, 1.7, 5.2):
        f = flat_states(ref.derivatives(t))
        assert abs(f.v - 4.0 * 0.3) < 1e-12
        assert abs(f.omega - 0.3) < 1e-12
        assert abs(f.a) < 1e-12
        assert abs(f.alpha) < 1e-12


def test_degenerate_velocity_raises():
    d = TrajectoryDerivatives(r=np.zeros(2), r_dot=np.array([1e-9, 0.0]),
                              r_ddot=np.zeros(2), r_dddot=np.zeros(2))
    with pytest.raises(DegenerateVelocity):
        flat_states(d)


def test_epsilon_reference_displacement_and_speed():
    # displaced point sits eps ahead along the reference heading; on a circle
    # of radius R its speed is v*sqrt(1 + (eps/R)^2)
    ep = EpsilonParams(2.0)
    R, w = 5.0, 0.4
    ref = CircleReference(radius=R, speed=R * w)
    for t in (0.3, 2.0, 4.4):
        d = ref.derivatives(t)
        f = flat_states(d)
        er = epsilon_reference(d, f, ep)
        assert np.allclose(er.q, d.r + 2.0 * np.array([math.cos(f.psi),
                                                       math.sin(f.psi)]))
        v_eps = np.linalg.norm(er.q_dot)
        assert abs(v_eps - f.v * math.sqrt(1.0 + (2.0 / R) ** 2)) < 1e-12
        assert np.allclose(er.q_dot,
                           displacement_matrix(f.psi, ep) @ [f.v, f.omega])


def test_epsilon_reference_derivative_consistency():
    # q_dot and q_ddot of the displaced reference are the time derivatives of q
    ep = EpsilonParams(1.3)
    ref = CosineReference(speed_x=2.0, amplitude=1.5, spatial_freq=0.5)
    rng = np.random.default_rng(41)
    h = 1e-5
    for _ in range(20):
        t = rng.uniform(0.5, 8.0)

        def er_at(tt):
            d = ref.derivatives(tt)
            return epsilon_reference(d, flat_states(d), ep)

        em, e0, epl = er_at(t - h), er_at(t), er_at(t + h)
        q_dot_fd = (epl.q - em.q) / (2.0 * h)
        q_ddot_fd = (epl.q_dot - em.q_dot) / (2.0 * h)
        assert np.allclose(e0.q_dot, q_dot_fd, atol=1e-7)
        assert np.allclose(e0.q_ddot, q_ddot_fd, atol=1e-6)


def test_epsilon_heading_stays_in_half_plane():
    # angle between the displaced-point velocity and the vehicle heading obeys
    # tan(delta) = eps*omega/v, strictly inside (-pi/2, pi/2) for v > 0
    rng = np.random.default_rng(59)
    for _ in range(300):
        v = rng.uniform(0.2, 8.0)
        om = rng.uniform(-4.0, 4.0)
        eps = rng.uniform(0.2, 6.0)
        psi = rng.uniform(-math.pi, math.pi)
        q_dot = displacement_matrix(psi, EpsilonParams(eps)) @ [v, om]
        psi_eps = math.atan2(q_dot[1], q_dot[0])
        gap = wrap_angle(psi_eps - psi)
        assert abs(gap) < math.pi / 2
        assert abs(math.tan(gap) - eps * om / v) < 1e-9 * max(1.0, abs(eps * om / v))


def test_point_reference_conversion():
    ep = EpsilonParams(1.0)
    ref = CircleReference(radius=3.0, speed=1.5)
    d = ref.derivatives(1.0)
    er = epsilon_reference(d, flat_states(d), ep)
    pr = point_reference(er)
    assert np.allclose(pr.q, er.q)
    assert np.allclose(pr.q_dot, er.q_dot)
    assert np.allclose(pr.q_ddot, er.q_ddot)
