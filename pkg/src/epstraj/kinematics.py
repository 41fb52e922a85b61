"""Vehicle kinematic models and the fixed-step integrator.

All models are first-order ODE systems driven by piecewise-constant inputs.
States are small dataclasses; derivative functions return plain numpy arrays
ordered like the state's array form.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError, NumericalError

TWO_PI = 2.0 * math.pi


def wrap_angle(a):
    """Wrap an angle (scalar or array) to [-pi, pi)."""
    return (a + math.pi) % TWO_PI - math.pi


@dataclass
class UnicycleState:
    """Planar unicycle: position, heading, forward speed, yaw rate."""

    x: float
    y: float
    psi: float
    v: float
    omega: float

    ANGLE_INDICES = (2,)

    def __post_init__(self):
        self.psi = wrap_angle(self.psi)

    def to_array(self):
        return np.array([self.x, self.y, self.psi, self.v, self.omega])

    def with_array(self, arr):
        return UnicycleState(arr[0], arr[1], arr[2], arr[3], arr[4])


@dataclass
class UnicycleInput:
    a: float      # forward acceleration
    alpha: float  # yaw angular acceleration


def unicycle_derivative(s: UnicycleState, u: UnicycleInput):
    """Rate of change of a unicycle state: [xd, yd, psid, vd, omegad]."""
    return np.array([
        s.v * math.cos(s.psi),
        s.v * math.sin(s.psi),
        s.omega,
        u.a,
        u.alpha,
    ])


@dataclass
class BicycleState:
    """Kinematic bicycle with wheelbase L and front steering angle phi."""

    x: float
    y: float
    psi: float
    v: float
    phi: float
    wheelbase: float = 1.0

    ANGLE_INDICES = (2,)

    def __post_init__(self):
        self.psi = wrap_angle(self.psi)

    def to_array(self):
        return np.array([self.x, self.y, self.psi, self.v, self.phi])

    def with_array(self, arr):
        return replace(self, x=arr[0], y=arr[1], psi=arr[2], v=arr[3], phi=arr[4])

    def omega(self):
        """Equivalent unicycle yaw rate (v / L) tan(phi)."""
        return self.v / self.wheelbase * math.tan(self.phi)


@dataclass
class BicycleInput:
    a: float   # forward acceleration
    xi: float  # steering rate


def bicycle_derivative(s: BicycleState, u: BicycleInput):
    """Rate of change of a bicycle state; the steering angle must stay off the
    tan singularity."""
    if abs(s.phi) >= math.pi / 2:
        raise DomainError(f"steering angle {s.phi:.6f} rad outside (-pi/2, pi/2)")
    return np.array([
        s.v * math.cos(s.psi),
        s.v * math.sin(s.psi),
        s.v / s.wheelbase * math.tan(s.phi),
        u.a,
        u.xi,
    ])


@dataclass
class ExtendedDubinsState:
    """Constant-speed vehicle whose curvature is a state driven by its rate."""

    x: float
    y: float
    psi: float
    kappa: float
    v: float = 1.0  # constant forward speed, not integrated

    ANGLE_INDICES = (2,)

    def __post_init__(self):
        self.psi = wrap_angle(self.psi)

    def to_array(self):
        return np.array([self.x, self.y, self.psi, self.kappa])

    def with_array(self, arr):
        return replace(self, x=arr[0], y=arr[1], psi=arr[2], kappa=arr[3])


@dataclass
class ExtendedDubinsInput:
    sigma: float  # curvature rate


def extended_dubins_derivative(s: ExtendedDubinsState, u: ExtendedDubinsInput):
    """Rate of change [xd, yd, psid, kappad]; speed must be positive."""
    if s.v <= 0.0:
        raise DomainError(f"extended Dubins speed must be positive, got {s.v}")
    return np.array([
        s.v * math.cos(s.psi),
        s.v * math.sin(s.psi),
        s.v * s.kappa,
        u.sigma,
    ])


@dataclass
class TrailerState:
    """Unicycle tractor with one trailer hitched at distance d behind the axle."""

    x: float
    y: float
    psi: float
    psi_t: float
    v: float
    omega: float
    hitch: float = 1.0

    ANGLE_INDICES = (2, 3)

    def __post_init__(self):
        self.psi = wrap_angle(self.psi)
        self.psi_t = wrap_angle(self.psi_t)

    def to_array(self):
        return np.array([self.x, self.y, self.psi, self.psi_t, self.v, self.omega])

    def with_array(self, arr):
        return replace(self, x=arr[0], y=arr[1], psi=arr[2], psi_t=arr[3],
                       v=arr[4], omega=arr[5])


def trailer_derivative(s: TrailerState, u: UnicycleInput):
    """Rate of change [xd, yd, psid, psi_td, vd, omegad]."""
    if s.hitch <= 0.0:
        raise DomainError(f"hitch length must be positive, got {s.hitch}")
    return np.array([
        s.v * math.cos(s.psi),
        s.v * math.sin(s.psi),
        s.omega,
        s.v / s.hitch * math.sin(s.psi - s.psi_t),
        u.a,
        u.alpha,
    ])


def trailer_position(s: TrailerState):
    """Cartesian position of the trailer axle."""
    return np.array([
        s.x - s.hitch * math.cos(s.psi_t),
        s.y - s.hitch * math.sin(s.psi_t),
    ])


def rk4_step(f, t, y, h):
    """One classical Runge-Kutta step of ydot = f(t, y) over [t, t + h]."""
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_step(derivative, state, inp, dt):
    """Advance a model state by one step with the input held constant.

    Heading components of the result are renormalized to [-pi, pi).  Raises
    NumericalError if the step produces a non-finite value.
    """
    if dt <= 0.0:
        raise DomainError(f"step size must be positive, got {dt}")

    def f(_t, y):
        return derivative(state.with_array(y), inp)

    y1 = rk4_step(f, 0.0, state.to_array(), dt)
    if not np.all(np.isfinite(y1)):
        raise NumericalError("integration step produced a non-finite state")
    for i in state.ANGLE_INDICES:
        y1[i] = wrap_angle(y1[i])
    return state.with_array(y1)
