"""Continuous-curvature trajectory planning through oriented waypoints.

A trajectory is a chain of primitives: straight lines, circular arcs at the
curvature bound, and linear curvature transitions (clothoids) at the
curvature-rate bound.  Each waypoint-to-waypoint leg is turn / line / turn,
with the line direction solved so both turns are tangent to it.  Transition
samples come from integrating the constant-speed curvature-rate model; the
closed-form Fresnel expression of the same curve is used for fast candidate
evaluation and for dense in-segment evaluation at arbitrary times.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special

from .errors import InfeasibleError, ParamError, TurnTooTight
from .flatness import TrajectoryDerivatives
from .kinematics import (ExtendedDubinsInput, ExtendedDubinsState,
                         extended_dubins_derivative, rk4_step, wrap_angle)

TWO_PI = 2.0 * math.pi

# primitive kinds
LINE = "line"
CLOTHOID_IN = "clothoid_in"
CLOTHOID_OUT = "clothoid_out"
CLOTHOID = "clothoid"
ARC = "arc"

_DELTA_FLOOR = 1e-11  # net heading change below which a turn is empty


@dataclass(frozen=True)
class Waypoint:
    """Oriented waypoint; heading is normalized to [-pi, pi)."""

    x: float
    y: float
    psi: float

    def __post_init__(self):
        for name in ("x", "y", "psi"):
            if not math.isfinite(getattr(self, name)):
                raise ParamError(f"waypoint field {name} must be finite")
        object.__setattr__(self, "psi", wrap_angle(self.psi))


@dataclass(frozen=True)
class PlannerParams:
    """Speed, curvature bound, curvature-rate bound, and sample period."""

    v: float
    kappa_max: float
    sigma_max: float
    dt: float

    def __post_init__(self):
        for name in ("v", "kappa_max", "sigma_max", "dt"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0.0):
                raise ParamError(f"planner parameter {name} must be positive, got {val}")

    @property
    def t_cs(self):
        """Duration of a full transition from zero to peak curvature."""
        return self.kappa_max / self.sigma_max

    @property
    def psi_cs(self):
        """Heading gained over one full transition."""
        return self.v * self.kappa_max ** 2 / (2.0 * self.sigma_max)


@dataclass(frozen=True)
class PathPoint:
    """Pose plus curvature along a path."""

    x: float
    y: float
    psi: float
    kappa: float = 0.0


@dataclass(frozen=True)
class TurnWaypoint:
    x: float
    y: float
    psi: float
    kappa: float
    sigma: float


@dataclass(frozen=True)
class CCTurnWaypoints:
    """The four boundary poses of a turn: start, transition ends, finish.

    d_c is +1 for a clockwise turn (heading decreasing), -1 for
    counterclockwise.
    """

    w_s: TurnWaypoint
    w_cs: TurnWaypoint
    w_ce: TurnWaypoint
    w_e: TurnWaypoint
    delta: float
    d_c: int


@dataclass
class SegmentSamples:
    """Uniformly sampled primitive; the last sample sits exactly on its end."""

    kind: str
    t: np.ndarray       # local times from 0, step dt, plus the exact endpoint
    x: np.ndarray
    y: np.ndarray
    psi: np.ndarray     # wrapped per sample
    kappa: np.ndarray
    sigma: float        # constant curvature rate over the segment
    duration: float
    start: PathPoint
    end: PathPoint
    v: float


@dataclass(frozen=True)
class Segment:
    """Descriptor of one primitive for exact in-segment evaluation."""

    kind: str
    t0: float
    duration: float
    x0: float
    y0: float
    psi0: float
    kappa0: float
    sigma: float
    v: float


@dataclass
class TrajectorySample:
    t: float
    r: np.ndarray
    r_dot: np.ndarray
    r_ddot: np.ndarray
    r_dddot: np.ndarray
    psi: float
    kappa: float
    sigma: float
    segment_id: int


_CSV_HEADER = "t,x,y,xd,yd,xdd,ydd,xddd,yddd,psi,kappa,sigma,segment_id"


@dataclass
class CCTrajectory:
    """Sampled continuous-curvature trajectory plus its segment descriptors."""

    v: float
    dt: float
    t: np.ndarray
    pos: np.ndarray          # (N, 2)
    psi: np.ndarray
    kappa: np.ndarray
    sigma: np.ndarray
    segment_id: np.ndarray   # index into segments
    segments: list
    turns: list = field(default_factory=list)
    vel: np.ndarray = None   # filled by annotate_derivatives
    acc: np.ndarray = None
    jerk: np.ndarray = None

    @property
    def duration(self):
        seg = self.segments[-1]
        return seg.t0 + seg.duration

    def sample(self, i) -> TrajectorySample:
        if self.vel is None:
            raise ParamError("derivatives not annotated yet")
        return TrajectorySample(
            float(self.t[i]), self.pos[i].copy(), self.vel[i].copy(),
            self.acc[i].copy(), self.jerk[i].copy(), float(self.psi[i]),
            float(self.kappa[i]), float(self.sigma[i]), int(self.segment_id[i]))

    def _segment_at(self, t):
        starts = self._starts
        i = int(np.searchsorted(starts, t, side="right")) - 1
        i = min(max(i, 0), len(self.segments) - 1)
        seg = self.segments[i]
        tau = min(max(t - seg.t0, 0.0), seg.duration)
        return seg, tau

    def __post_init__(self):
        self._starts = np.array([s.t0 for s in self.segments])

    def breakpoints(self):
        """Interior times where the curvature rate jumps (segment joints)."""
        return self._starts[1:].copy()

    def segment_index(self, t):
        """Index of the segment owning time t (right-continuous at joints)."""
        i = int(np.searchsorted(self._starts, t, side="right")) - 1
        return min(max(i, 0), len(self.segments) - 1)

    def state_at(self, t):
        """Exact (x, y, psi, kappa, sigma) at an arbitrary time."""
        seg, tau = self._segment_at(t)
        x, y, psi, kappa = _segment_state(seg, tau)
        return x, y, wrap_angle(psi), kappa, seg.sigma

    def derivatives(self, t, segment=None) -> TrajectoryDerivatives:
        """Exact position and first three derivatives at an arbitrary time.

        Values are right-continuous at segment joints; pass segment to pin
        evaluation to one segment (its one-sided limit at either end), which
        integrators use so no step reads across a curvature-rate jump.
        """
        if segment is None:
            seg, tau = self._segment_at(t)
        else:
            seg = self.segments[segment]
            tau = min(max(t - seg.t0, 0.0), seg.duration)
        x, y, psi, kappa = _segment_state(seg, tau)
        v = seg.v
        c, s = math.cos(psi), math.sin(psi)
        r = np.array([x, y])
        r_dot = np.array([v * c, v * s])
        r_ddot = np.array([-v * v * kappa * s, v * v * kappa * c])
        sg = seg.sigma
        r_dddot = np.array([-v * v * (sg * s + v * kappa * kappa * c),
                            -v * v * (-sg * c + v * kappa * kappa * s)])
        return TrajectoryDerivatives(r, r_dot, r_ddot, r_dddot)

    def write_csv(self, path):
        if self.vel is None:
            raise ParamError("derivatives not annotated yet")
        cols = [self.t, self.pos[:, 0], self.pos[:, 1],
                self.vel[:, 0], self.vel[:, 1], self.acc[:, 0], self.acc[:, 1],
                self.jerk[:, 0], self.jerk[:, 1], self.psi, self.kappa, self.sigma]
        with open(path, "w", newline="") as fh:
            fh.write(_CSV_HEADER + "\n")
            for i in range(len(self.t)):
                row = ",".join(f"{c[i]:.15g}" for c in cols)
                fh.write(f"{row},{int(self.segment_id[i])}\n")


def _segment_state(seg: Segment, tau):
    """Pose and curvature inside one segment (heading unwrapped)."""
    if seg.kind == LINE:
        c, s = math.cos(seg.psi0), math.sin(seg.psi0)
        return (seg.x0 + seg.v * tau * c, seg.y0 + seg.v * tau * s, seg.psi0, 0.0)
    if seg.kind == ARC:
        k = seg.kappa0
        psi = seg.psi0 + seg.v * k * tau
        cx = seg.x0 - math.sin(seg.psi0) / k
        cy = seg.y0 + math.cos(seg.psi0) / k
        return (cx + math.sin(psi) / k, cy - math.cos(psi) / k, psi, k)
    # clothoid
    psi = seg.psi0 + seg.v * (seg.kappa0 * tau + 0.5 * seg.sigma * tau * tau)
    kappa = seg.kappa0 + seg.sigma * tau
    x, y = _clothoid_xy(seg.x0, seg.y0, seg.psi0, seg.kappa0, seg.sigma, seg.v, tau)
    return (x, y, psi, kappa)


def _fresnel_primitive(w, b):
    """Integral of exp(i b s^2) ds from 0 to w (odd in w); b must be nonzero."""
    S, C = special.fresnel(np.asarray(w) * math.sqrt(2.0 * abs(b) / math.pi))
    return math.sqrt(0.5 * math.pi / abs(b)) * (C + 1j * math.copysign(1.0, b) * S)


def _clothoid_xy(x0, y0, psi0, kappa0, sigma, v, tau):
    """Closed-form clothoid position after time tau (sigma must be nonzero)."""
    b = 0.5 * v * sigma
    c = kappa0 / sigma
    phase = psi0 - v * kappa0 * kappa0 / (2.0 * sigma)
    F = _fresnel_primitive(np.array([tau + c, c]), b)
    z = complex(x0, y0) + v * np.exp(1j * phase) * (F[0] - F[1])
    return float(z.real), float(z.imag)


def _segment_times(T, dt):
    """Local sample times: uniform grid plus one exact endpoint sample."""
    n = int(math.floor(T / dt + 1e-12))
    if n * dt >= T - 1e-12 * max(1.0, T):
        return np.concatenate([np.arange(n) * dt, [T]])
    return np.concatenate([np.arange(n + 1) * dt, [T]])


def clothoid_segment(start: PathPoint, target_kappa, params: PlannerParams,
                     kind=CLOTHOID) -> SegmentSamples:
    """Linear curvature transition at the curvature-rate bound.

    The samples come from integrating the constant-speed curvature-rate model
    step by step; the final heading and curvature are snapped to their
    closed-form values so chained segments cannot drift.
    """
    if abs(target_kappa) > params.kappa_max + 1e-12:
        raise ParamError(
            f"target curvature {target_kappa} exceeds bound {params.kappa_max}")
    if abs(start.kappa) > params.kappa_max + 1e-12:
        raise ParamError(
            f"start curvature {start.kappa} exceeds bound {params.kappa_max}")
    dk = target_kappa - start.kappa
    T = abs(dk) / params.sigma_max
    if T <= 1e-15:
        return _empty_segment(kind, start, params)
    sigma = math.copysign(params.sigma_max, dk)

    times = _segment_times(T, params.dt)
    inp = ExtendedDubinsInput(sigma)
    v = params.v

    def f(_t, yv):
        s = ExtendedDubinsState(yv[0], yv[1], yv[2], yv[3], v)
        return extended_dubins_derivative(s, inp)

    ys = np.empty((len(times), 4))
    y = np.array([start.x, start.y, start.psi, start.kappa])
    ys[0] = y
    for i in range(1, len(times)):
        y = rk4_step(f, times[i - 1], y, times[i] - times[i - 1])
        ys[i] = y

    psi_end = start.psi + v * (start.kappa * T + 0.5 * sigma * T * T)
    ys[-1, 2] = psi_end
    ys[-1, 3] = target_kappa
    end = PathPoint(ys[-1, 0], ys[-1, 1], wrap_angle(psi_end), target_kappa)
    return SegmentSamples(kind, times, ys[:, 0], ys[:, 1], wrap_angle(ys[:, 2]),
                          ys[:, 3], sigma, T, start, end, v)


def arc_segment(start: PathPoint, sweep, d_c, params: PlannerParams) -> SegmentSamples:
    """Circular arc at the curvature bound sweeping a nonnegative heading change."""
    if sweep < 0.0 or not math.isfinite(sweep):
        raise ParamError(f"arc sweep must be nonnegative, got {sweep}")
    if d_c not in (1, -1):
        raise ParamError(f"turn direction must be +1 or -1, got {d_c}")
    if sweep <= 1e-15:
        return _empty_segment(ARC, start, params)
    k = -d_c * params.kappa_max  # counterclockwise turns carry positive curvature
    v = params.v
    T = sweep / (v * params.kappa_max)
    times = _segment_times(T, params.dt)
    psi = start.psi + v * k * times
    cx = start.x - math.sin(start.psi) / k
    cy = start.y + math.cos(start.psi) / k
    xs = cx + np.sin(psi) / k
    ys = cy - np.cos(psi) / k
    end = PathPoint(float(xs[-1]), float(ys[-1]), wrap_angle(float(psi[-1])), k)
    return SegmentSamples(ARC, times, xs, ys, wrap_angle(psi),
                          np.full(len(times), k), 0.0, T, start, end, v)


def line_segment(p1, p2, params: PlannerParams) -> SegmentSamples:
    """Straight segment between two distinct points at the planning speed."""
    dx, dy = p2[0] - p1[0], p2[1] - p1[1]
    length = math.hypot(dx, dy)
    if length <= 0.0:
        raise ParamError("line segment endpoints coincide")
    psi = math.atan2(dy, dx)
    v = params.v
    T = length / v
    times = _segment_times(T, params.dt)
    ux, uy = dx / length, dy / length
    xs = p1[0] + v * times * ux
    ys = p1[1] + v * times * uy
    xs[-1], ys[-1] = p2[0], p2[1]
    start = PathPoint(p1[0], p1[1], psi, 0.0)
    end = PathPoint(p2[0], p2[1], psi, 0.0)
    n = len(times)
    return SegmentSamples(LINE, times, xs, ys, np.full(n, psi), np.zeros(n),
                          0.0, T, start, end, v)


def _empty_segment(kind, start: PathPoint, params) -> SegmentSamples:
    return SegmentSamples(kind, np.zeros(0), np.zeros(0), np.zeros(0),
                          np.zeros(0), np.zeros(0), 0.0, 0.0, start, start,
                          params.v)


def _peak_curvature(delta, params: PlannerParams):
    """Peak transition curvature for a turn of net heading change |delta|.

    Turns too short to reach the curvature bound scale the peak down so the
    two transitions meet exactly at the requested heading change.
    """
    return min(params.kappa_max,
               math.sqrt(abs(delta) * params.sigma_max / params.v))


def cc_turn(entry: Waypoint, delta, d_c, params: PlannerParams):
    """Curvature-continuous turn: transition in, arc at the bound, transition out.

    delta is the signed net heading change; d_c = +1 turns clockwise
    (negative delta), d_c = -1 counterclockwise.  Returns the four boundary
    poses and the list of sampled primitives (empty for delta == 0).
    """
    if d_c not in (1, -1):
        raise ParamError(f"turn direction must be +1 or -1, got {d_c}")
    if not math.isfinite(delta):
        raise ParamError("turn heading change must be finite")
    if abs(delta) > TWO_PI + 1e-9:
        raise TurnTooTight(
            f"net heading change {delta:.6f} rad exceeds a full revolution")
    if abs(delta) > _DELTA_FLOOR and math.copysign(1.0, delta) != -d_c:
        raise ParamError(
            f"turn direction d_c={d_c} inconsistent with delta={delta:.6f}")

    start = PathPoint(entry.x, entry.y, entry.psi, 0.0)
    if abs(delta) <= _DELTA_FLOOR:
        w = TurnWaypoint(entry.x, entry.y, entry.psi, 0.0, 0.0)
        return CCTurnWaypoints(w, w, w, w, 0.0, d_c), []

    s = -d_c
    k_peak = _peak_curvature(delta, params)
    psi_in = s * params.v * k_peak ** 2 / (2.0 * params.sigma_max)
    sweep = abs(delta) - 2.0 * abs(psi_in)
    sweep = max(sweep, 0.0)

    blocks = []
    cl_in = clothoid_segment(start, s * k_peak, params, kind=CLOTHOID_IN)
    blocks.append(cl_in)
    p = cl_in.end
    w_s = TurnWaypoint(start.x, start.y, start.psi, 0.0, s * params.sigma_max)
    arc = arc_segment(p, sweep, d_c, params)
    sigma_after_cs = 0.0 if arc.duration > 0.0 else -s * params.sigma_max
    w_cs = TurnWaypoint(p.x, p.y, p.psi, s * k_peak, sigma_after_cs)
    if arc.duration > 0.0:
        blocks.append(arc)
        p = arc.end
    w_ce = TurnWaypoint(p.x, p.y, p.psi, s * k_peak, -s * params.sigma_max)
    cl_out = clothoid_segment(PathPoint(p.x, p.y, p.psi, s * k_peak), 0.0,
                              params, kind=CLOTHOID_OUT)
    blocks.append(cl_out)
    p = cl_out.end
    # snap the turn exit heading to the exact net change
    psi_exit = wrap_angle(entry.psi + delta)
    last = blocks[-1]
    last.psi[-1] = psi_exit
    end = PathPoint(p.x, p.y, psi_exit, 0.0)
    blocks[-1] = SegmentSamples(last.kind, last.t, last.x, last.y, last.psi,
                                last.kappa, last.sigma, last.duration,
                                last.start, end, last.v)
    w_e = TurnWaypoint(end.x, end.y, end.psi, 0.0, 0.0)
    return CCTurnWaypoints(w_s, w_cs, w_ce, w_e, float(delta), d_c), blocks


def trajectory_from_blocks(blocks, params: PlannerParams, turns=()) -> CCTrajectory:
    """Stitch sampled primitives into one trajectory.

    Consecutive primitives share their joint sample; the shared sample keeps
    the earlier segment's id but carries the later segment's curvature rate so
    per-sample values are right-continuous in time.
    """
    blocks = [b for b in blocks if b.duration > 0.0]
    if not blocks:
        raise ParamError("no nonempty segments to assemble")
    ts, xs, ys, psis, kappas, sigmas, ids = [], [], [], [], [], [], []
    segments = []
    t0 = 0.0
    for i, b in enumerate(blocks):
        segments.append(Segment(b.kind, t0, b.duration, b.start.x, b.start.y,
                                b.start.psi, b.start.kappa, b.sigma, b.v))
        sl = slice(0, None) if i == 0 else slice(1, None)
        if i > 0:
            sigmas[-1][-1] = b.sigma  # joint sample: later segment's rate
        n = len(b.t[sl])
        ts.append(t0 + b.t[sl])
        xs.append(b.x[sl])
        ys.append(b.y[sl])
        psis.append(b.psi[sl])
        kappas.append(b.kappa[sl])
        sigmas.append(np.full(n, b.sigma))
        ids.append(np.full(n, i, dtype=int))
        t0 += b.duration
    sigmas[-1][-1] = 0.0  # trajectory ends; no further curvature change
    traj = CCTrajectory(
        params.v, params.dt, np.concatenate(ts),
        np.stack([np.concatenate(xs), np.concatenate(ys)], axis=1),
        np.concatenate(psis), np.concatenate(kappas), np.concatenate(sigmas),
        np.concatenate(ids), segments, list(turns))
    return annotate_derivatives(traj)


def annotate_derivatives(traj: CCTrajectory) -> CCTrajectory:
    """Fill per-sample velocity, acceleration, and jerk from (psi, kappa, sigma)."""
    v = traj.v
    c, s = np.cos(traj.psi), np.sin(traj.psi)
    k, sg = traj.kappa, traj.sigma
    traj.vel = v * np.stack([c, s], axis=1)
    traj.acc = (v * v) * np.stack([-k * s, k * c], axis=1)
    traj.jerk = np.stack([-v * v * (sg * s + v * k * k * c),
                          -v * v * (-sg * c + v * k * k * s)], axis=1)
    return traj


# --- leg solving -----------------------------------------------------------

def _dirmod(x, s):
    """Angle x reduced to a turn of direction s: [0, 2pi) signed by s."""
    return s * (np.asarray(x) * s % TWO_PI)


def _turn_displacement(delta, params: PlannerParams):
    """Closed-form displacement of a canonical turn (start at origin, heading 0).

    Vectorized over delta; the two transitions are Fresnel integrals and the
    middle arc is elementary.  Used to solve for tangent directions quickly;
    the trajectory itself is built by integration.
    """
    delta = np.asarray(delta, dtype=float)
    scalar = delta.ndim == 0
    delta = np.atleast_1d(delta)
    ad = np.abs(delta)
    sgn = np.where(delta >= 0.0, 1.0, -1.0)
    k_peak = np.minimum(params.kappa_max,
                        np.sqrt(ad * params.sigma_max / params.v))
    nz = k_peak > 0.0
    k_safe = np.where(nz, k_peak, 1.0)
    t1 = k_peak / params.sigma_max
    psi_in = sgn * params.v * k_peak ** 2 / (2.0 * params.sigma_max)
    darc = delta - 2.0 * psi_in
    b = sgn * params.v * params.sigma_max / 2.0
    w = t1 * np.sqrt(2.0 * np.abs(b) / math.pi)
    S, C = special.fresnel(w)
    zA = params.v * np.sqrt(0.5 * math.pi / np.abs(b)) * (C + 1j * sgn * S)
    ks = sgn * k_safe
    zB = (np.exp(1j * (psi_in + darc)) - np.exp(1j * psi_in)) / (1j * ks)
    zC = np.exp(1j * delta) * np.conj(zA)
    D = np.where(nz, zA + zB + zC, 0.0 + 0.0j)
    return complex(D[0]) if scalar else D


def _turn_duration(delta, params: PlannerParams):
    delta = np.abs(np.asarray(delta, dtype=float))
    k_peak = np.minimum(params.kappa_max,
                        np.sqrt(delta * params.sigma_max / params.v))
    k_safe = np.where(k_peak > 0.0, k_peak, 1.0)
    darc = np.maximum(delta - params.v * k_peak ** 2 / params.sigma_max, 0.0)
    return np.where(k_peak > 0.0, 2.0 * k_peak / params.sigma_max
                    + darc / (params.v * k_safe), 0.0)


class _Leg:
    """Solver state for one waypoint pair."""

    def __init__(self, w0: Waypoint, w1: Waypoint, params: PlannerParams):
        self.w0, self.w1, self.params = w0, w1, params
        self.P0 = complex(w0.x, w0.y)
        self.P1 = complex(w1.x, w1.y)

    def _geometry(self, theta, s1, s2, disp):
        d1 = _dirmod(theta - self.w0.psi, s1)
        d2 = _dirmod(self.w1.psi - theta, s2)
        Q1 = self.P0 + np.exp(1j * self.w0.psi) * disp(d1)
        Q2 = self.P1 - np.exp(1j * theta) * disp(d2)
        w = (Q2 - Q1) * np.exp(-1j * theta)
        return w.imag, w.real, d1, d2

    def _g_fast(self, theta, s1, s2):
        return self._geometry(theta, s1, s2,
                              lambda d: _turn_displacement(d, self.params))

    def _built_disp(self, delta):
        if abs(delta) <= _DELTA_FLOOR:
            return 0.0 + 0.0j
        d_c = -int(math.copysign(1.0, delta))
        _, blocks = cc_turn(Waypoint(0.0, 0.0, 0.0), delta, d_c, self.params)
        end = blocks[-1].end
        return complex(end.x, end.y)

    def _g_built(self, theta, s1, s2):
        return self._geometry(theta, s1, s2, self._built_disp)

    def _polish(self, theta, s1, s2):
        """Refine a tangent direction against the integrated turn geometry."""
        g0 = self._g_built(theta, s1, s2)[0]
        if abs(g0) < 1e-13:
            return theta
        th0, th1 = theta, theta + 1e-7
        g1 = self._g_built(th1, s1, s2)[0]
        for _ in range(12):
            if g1 == g0:
                break
            th2 = th1 - g1 * (th1 - th0) / (g1 - g0)
            if abs(th2 - theta) > 0.05:  # left the local root basin
                return theta
            th0, g0, th1 = th1, g1, th2
            g1 = self._g_built(th1, s1, s2)[0]
            if abs(g1) < 1e-13:
                return th1
        return th1 if abs(g1) < abs(g0) else th0

    def solve(self):
        """All (theta, d1, d2, line length, duration) candidates, best first."""
        cands = []
        for s1 in (1, -1):
            for s2 in (1, -1):
                for theta in self._roots(s1, s2):
                    theta = self._polish(theta, s1, s2)
                    g, ell, d1, d2 = self._g_built(theta, s1, s2)
                    if abs(g) > 1e-9 or ell < -1e-9:
                        continue
                    ell = max(ell, 0.0)
                    dur = (_turn_duration(abs(d1), self.params)
                           + ell / self.params.v
                           + _turn_duration(abs(d2), self.params))
                    cands.append((float(dur), float(theta), float(d1),
                                  float(d2), float(ell)))
        cands.sort(key=lambda c: c[0])
        return cands

    def _roots(self, s1, s2):
        """Bracketed roots of the fast tangency residual over [-pi, pi)."""
        cuts = sorted({wrap_angle(self.w0.psi), wrap_angle(self.w1.psi)})
        edges = [-math.pi] + cuts + [math.pi]
        roots = []
        for a, b in zip(edges[:-1], edges[1:]):
            if b - a < 1e-9:
                continue
            pad = min(1e-9, 0.25 * (b - a))
            n = max(32, int((b - a) / 0.01))
            thetas = np.linspace(a + pad, b - pad, n)
            gv = self._g_fast(thetas, s1, s2)[0]
            sign_change = np.nonzero(np.diff(np.sign(gv)) != 0)[0]
            for i in sign_change:
                try:
                    r = optimize.brentq(
                        lambda th: self._g_fast(float(th), s1, s2)[0],
                        thetas[i], thetas[i + 1], xtol=1e-13, rtol=8.9e-16)
                except ValueError:
                    continue
                roots.append(float(r))
        return roots


def connect_waypoints(waypoints, params: PlannerParams) -> CCTrajectory:
    """Plan a trajectory through every waypoint with matching position and heading.

    Each leg is turn / line / turn with the line direction solved for
    tangency; among the feasible connections the one with the shortest
    duration wins.  Raises InfeasibleError naming the waypoint pair when no
    connection exists.
    """
    if len(waypoints) < 2:
        raise ParamError(f"need at least two waypoints, got {len(waypoints)}")
    waypoints = [w if isinstance(w, Waypoint) else Waypoint(*w) for w in waypoints]

    blocks, turns = [], []
    for i in range(len(waypoints) - 1):
        w0, w1 = waypoints[i], waypoints[i + 1]
        leg_blocks, leg_turns = _build_leg(w0, w1, params, i)
        blocks.extend(leg_blocks)
        turns.extend(leg_turns)
    return trajectory_from_blocks(blocks, params, turns)


def _build_leg(w0: Waypoint, w1: Waypoint, params: PlannerParams, index):
    dist = math.hypot(w1.x - w0.x, w1.y - w0.y)
    if dist > 0.0:
        theta_direct = math.atan2(w1.y - w0.y, w1.x - w0.x)
        if (abs(wrap_angle(theta_direct - w0.psi)) < 1e-12
                and abs(wrap_angle(w1.psi - theta_direct)) < 1e-12):
            return [line_segment((w0.x, w0.y), (w1.x, w1.y), params)], []

    cands = _Leg(w0, w1, params).solve()
    if not cands:
        raise InfeasibleError(
            f"no line/turn connection between waypoints {index} and {index + 1}")
    _, theta, d1, d2, ell = cands[0]

    blocks, turns = [], []
    p = PathPoint(w0.x, w0.y, w0.psi, 0.0)
    if abs(d1) > _DELTA_FLOOR:
        wps, tb = cc_turn(Waypoint(p.x, p.y, p.psi), d1,
                          -int(math.copysign(1.0, d1)), params)
        blocks.extend(tb)
        turns.append(wps)
        p = tb[-1].end
    if abs(d2) > _DELTA_FLOOR:
        q2 = complex(w1.x, w1.y) - np.exp(1j * theta) * _turn2_disp(d2, params)
        line_end = (q2.real, q2.imag)
    else:
        line_end = (w1.x, w1.y)
    if ell > 1e-12:
        blocks.append(line_segment((p.x, p.y), line_end, params))
        p = blocks[-1].end
    if abs(d2) > _DELTA_FLOOR:
        wps, tb = cc_turn(Waypoint(p.x, p.y, wrap_angle(theta)), d2,
                          -int(math.copysign(1.0, d2)), params)
        blocks.extend(tb)
        turns.append(wps)
    return blocks, turns


def _turn2_disp(delta, params):
    if abs(delta) <= _DELTA_FLOOR:
        return 0.0 + 0.0j
    d_c = -int(math.copysign(1.0, delta))
    _, tb = cc_turn(Waypoint(0.0, 0.0, 0.0), delta, d_c, params)
    end = tb[-1].end
    return complex(end.x, end.y)
