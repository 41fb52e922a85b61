"""Analytic reference trajectories.

Anything with a ``derivatives(t)`` method returning TrajectoryDerivatives can
drive the simulator; planned trajectories provide the same interface.  The
references here have closed-form derivatives and unbounded duration.
"""

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial

from .flatness import TrajectoryDerivatives


@dataclass
class LineReference:
    """Constant-speed straight line from a start point along a fixed heading."""

    start: tuple
    heading: float
    speed: float
    duration: float = math.inf

    def derivatives(self, t):
        c, s = math.cos(self.heading), math.sin(self.heading)
        r = np.array([self.start[0] + self.speed * t * c,
                      self.start[1] + self.speed * t * s])
        r_dot = np.array([self.speed * c, self.speed * s])
        zero = np.zeros(2)
        return TrajectoryDerivatives(r, r_dot, zero, zero.copy())


@dataclass
class CircleReference:
    """Counterclockwise circle of given radius traversed at constant speed."""

    radius: float
    speed: float
    center: tuple = (0.0, 0.0)
    duration: float = math.inf

    def derivatives(self, t):
        w = self.speed / self.radius
        th = w * t
        c, s = math.cos(th), math.sin(th)
        R = self.radius
        r = np.array([self.center[0] + R * c, self.center[1] + R * s])
        r_dot = R * w * np.array([-s, c])
        r_ddot = R * w * w * np.array([-c, -s])
        r_dddot = R * w ** 3 * np.array([s, -c])
        return TrajectoryDerivatives(r, r_dot, r_ddot, r_dddot)


@dataclass
class CosineReference:
    """Cosine sweep: x advances at constant rate, y = A cos(k x)."""

    speed_x: float
    amplitude: float
    spatial_freq: float  # rad per meter of x
    duration: float = math.inf

    def derivatives(self, t):
        vx = self.speed_x
        w = self.spatial_freq * vx  # temporal angular frequency
        A = self.amplitude
        th = w * t
        r = np.array([vx * t, A * math.cos(th)])
        r_dot = np.array([vx, -A * w * math.sin(th)])
        r_ddot = np.array([0.0, -A * w * w * math.cos(th)])
        r_dddot = np.array([0.0, A * w ** 3 * math.sin(th)])
        return TrajectoryDerivatives(r, r_dot, r_ddot, r_dddot)


class PolynomialReference:
    """Path whose coordinates are polynomials in time; derivatives are exact."""

    def __init__(self, coeffs_x, coeffs_y, duration=math.inf):
        self.duration = duration
        self._polys = []
        for coeffs in (coeffs_x, coeffs_y):
            p = Polynomial(coeffs)
            self._polys.append([p, p.deriv(1), p.deriv(2), p.deriv(3)])

    def derivatives(self, t):
        px, py = self._polys
        vals = [np.array([px[k](t), py[k](t)]) for k in range(4)]
        return TrajectoryDerivatives(*vals)
