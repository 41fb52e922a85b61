"""Closed-loop simulation of offset-point trajectory tracking.

The simulator integrates the vehicle state with classical RK4 while the
feedback chain (offset point -> linear point control -> input maps) is
re-evaluated at every integration stage against the exact reference
derivatives at that stage time.  Logging happens on a uniform grid; between
log points the integration is split at reference breakpoints (segment joints)
so no RK4 step straddles a feedforward discontinuity.  A reduced model of the
converged loop (one guide point towing two heading followers) provides an
independent prediction of the heading dynamics.
"""

import math
from dataclasses import dataclass

import numpy as np

from .epsilon_control import (EpsilonParams, GainMatrix, PointReference,
                              bicycle_input_from_unicycle, epsilon_point,
                              point_control, unicycle_input_from_point)
from .errors import NumericalError, ParamError, SingularVelocity, ValidationError
from .flatness import epsilon_reference, flat_states, point_reference
from .kinematics import (BicycleInput, BicycleState, UnicycleInput,
                         UnicycleState, bicycle_derivative, rk4_step,
                         unicycle_derivative, wrap_angle)

MODES = ("eps", "plain")
VEHICLES = ("unicycle", "bicycle")


@dataclass(frozen=True)
class SimConfig:
    """Vehicle, initial state, controller offset and gains, step, run length."""

    initial: object          # UnicycleState or BicycleState
    epsilon: float
    gains: GainMatrix
    dt: float
    duration: float
    mode: str = "eps"        # "eps": track the offset-shifted reference;
                             # "plain": the offset point tracks the reference itself
    vehicle: str = None      # inferred from the initial state when omitted
    v_min: float = 1e-3

    def __post_init__(self):
        if isinstance(self.initial, UnicycleState):
            inferred = "unicycle"
        elif isinstance(self.initial, BicycleState):
            inferred = "bicycle"
        else:
            raise ValidationError(
                f"unsupported vehicle state {type(self.initial).__name__}")
        if self.vehicle is None:
            object.__setattr__(self, "vehicle", inferred)
        elif self.vehicle != inferred:
            raise ValidationError(
                f"vehicle {self.vehicle!r} does not match initial state type")
        if not (math.isfinite(self.epsilon) and self.epsilon > 0.0):
            raise ValidationError(f"epsilon must be positive, got {self.epsilon}")
        if not (math.isfinite(self.dt) and self.dt > 0.0):
            raise ValidationError(f"dt must be positive, got {self.dt}")
        if not (math.isfinite(self.duration) and self.duration > 0.0):
            raise ValidationError(f"duration must be positive, got {self.duration}")
        if self.mode not in MODES:
            raise ValidationError(f"mode must be one of {MODES}, got {self.mode!r}")


_SIM_CSV_HEADER = ("t,x,y,psi,v,omega_or_phi,qe_x,qe_y,qer_x,qer_y,"
                   "a,alpha_or_xi,err_pos,err_psi")


@dataclass
class SimulationLog:
    """Per-step record of one closed-loop run (terminal sample included)."""

    vehicle: str
    mode: str
    epsilon: float
    t: np.ndarray
    state: np.ndarray        # (N+1, 5): x, y, psi, v, omega (or phi for bicycle)
    q_eps: np.ndarray        # (N+1, 2) controlled point
    q_ref: np.ndarray        # (N+1, 2) point it tracks
    inputs: np.ndarray       # (N+1, 2): a, alpha (or a, xi for bicycle)
    err_pos: np.ndarray      # distance from vehicle position to reference position
    err_psi: np.ndarray      # wrapped heading error against the reference heading
    eps_err: np.ndarray      # distance from controlled point to its target
    psi_ref: np.ndarray
    psi_guide: np.ndarray    # direction of the tracked point's velocity

    @property
    def e_psi_r(self):
        """Wrapped angle between the tracked direction and the reference heading."""
        return wrap_angle(self.psi_guide - self.psi_ref)

    def write_csv(self, path):
        cols = [self.t,
                self.state[:, 0], self.state[:, 1], self.state[:, 2],
                self.state[:, 3], self.state[:, 4],
                self.q_eps[:, 0], self.q_eps[:, 1],
                self.q_ref[:, 0], self.q_ref[:, 1],
                self.inputs[:, 0], self.inputs[:, 1],
                self.err_pos, self.err_psi]
        with open(path, "w", newline="") as fh:
            fh.write(_SIM_CSV_HEADER + "\n")
            for i in range(len(self.t)):
                fh.write(",".join(f"{c[i]:.15g}" for c in cols) + "\n")


def initial_state(reference, offset_lateral=0.0, offset_heading=0.0,
                  vehicle="unicycle", wheelbase=1.0, v_min=1e-3):
    """Vehicle state on (or laterally offset from) the reference at time zero."""
    d = reference.derivatives(0.0)
    f = flat_states(d)
    ox = -math.sin(f.psi) * offset_lateral
    oy = math.cos(f.psi) * offset_lateral
    psi = wrap_angle(f.psi + offset_heading)
    if vehicle == "unicycle":
        return UnicycleState(d.r[0] + ox, d.r[1] + oy, psi, f.v, f.omega)
    if vehicle == "bicycle":
        if abs(f.v) <= v_min:
            raise SingularVelocity(
                f"cannot place a bicycle on a reference with speed {f.v}")
        phi = math.atan(wheelbase * f.omega / f.v)
        return BicycleState(d.r[0] + ox, d.r[1] + oy, psi, f.v, phi, wheelbase)
    raise ValidationError(f"unknown vehicle {vehicle!r}")


def _point_target(derivs, t, mode, ep: EpsilonParams):
    """Point-space reference plus bookkeeping headings at one time."""
    d = derivs(t)
    f = flat_states(d)
    if mode == "eps":
        er = epsilon_reference(d, f, ep)
        return point_reference(er), f, er.psi
    return PointReference(d.r, d.r_dot, d.r_ddot), f, f.psi


def run_simulation(config: SimConfig, reference) -> SimulationLog:
    """Integrate the vehicle under offset-point feedback along a reference.

    The reference needs derivatives(t); if it exposes breakpoints() (times
    where its higher derivatives jump), integration steps are split there.
    Raises NumericalError naming the step if the state stops being finite,
    and SingularVelocity if the bicycle input map hits its speed guard.
    """
    start = config.initial
    vehicle = config.vehicle
    if vehicle == "unicycle":
        derivative = unicycle_derivative
    else:
        derivative = bicycle_derivative
    eps = config.epsilon
    ep = EpsilonParams(eps)

    def as_unicycle(s):
        if vehicle == "unicycle":
            return s
        return UnicycleState(s.x, s.y, s.psi, s.v, s.omega())

    def control(t, s, derivs=reference.derivatives):
        ref, f, psi_guide = _point_target(derivs, t, config.mode, ep)
        uni = as_unicycle(s)
        ps = epsilon_point(uni, ep)
        u_eps = point_control(ps, ref, config.gains)
        u_uni = unicycle_input_from_point(u_eps, uni, ep)
        if vehicle == "bicycle":
            inp = bicycle_input_from_unicycle(u_uni.a, u_uni.alpha, s,
                                              v_min=config.v_min)
        else:
            inp = u_uni
        return inp, ps, ref, f, psi_guide

    def make_rate(derivs):
        def rate(t, y):
            s = start.with_array(y)
            inp, *_ = control(t, s, derivs)
            return derivative(s, inp)
        return rate

    n_steps = max(1, int(math.floor(config.duration / config.dt + 1e-9)))
    t_grid = np.arange(n_steps + 1) * config.dt

    pinnable = hasattr(reference, "breakpoints")
    breaks = np.asarray(reference.breakpoints(), dtype=float) \
        if pinnable else np.zeros(0)
    breaks = breaks[(breaks > 0.0) & (breaks < t_grid[-1])]

    N = n_steps + 1
    state = np.empty((N, 5))
    q_eps = np.empty((N, 2))
    q_ref = np.empty((N, 2))
    inputs = np.empty((N, 2))
    err_pos = np.empty(N)
    err_psi = np.empty(N)
    eps_err = np.empty(N)
    psi_ref = np.empty(N)
    psi_guide = np.empty(N)

    s = start
    for k in range(N):
        t = float(t_grid[k])
        try:
            inp, ps, ref, f, guide = control(t, s)
        except SingularVelocity as exc:
            raise SingularVelocity(f"step {k} (t={t:.6f}): {exc}") from exc
        y = s.to_array()
        state[k] = y[:5]
        q_eps[k] = ps.q
        q_ref[k] = ref.q
        inputs[k] = (inp.a, inp.alpha) if vehicle == "unicycle" else (inp.a, inp.xi)
        d = reference.derivatives(t)
        err_pos[k] = math.hypot(s.x - d.r[0], s.y - d.r[1])
        err_psi[k] = wrap_angle(s.psi - f.psi)
        eps_err[k] = float(np.hypot(*(ps.q - ref.q)))
        psi_ref[k] = f.psi
        psi_guide[k] = guide
        if k == n_steps:
            break
        t_next = float(t_grid[k + 1])
        # split the step at breakpoints and pin each piece to its own segment
        # so no RK4 stage reads the target across a curvature-rate jump
        inner = breaks[(breaks > t) & (breaks < t_next)]
        t_cur = t
        for t_stop in list(inner) + [t_next]:
            t_stop = float(t_stop)
            if pinnable:
                seg = reference.segment_index(0.5 * (t_cur + t_stop))
                rate = make_rate(lambda tt: reference.derivatives(tt, segment=seg))
            else:
                rate = make_rate(reference.derivatives)
            y = rk4_step(rate, t_cur, y, t_stop - t_cur)
            t_cur = t_stop
        if not np.all(np.isfinite(y)):
            raise NumericalError(
                f"simulation state not finite after step {k} (t={t_next:.6f})")
        s = start.with_array(y)

    return SimulationLog(vehicle, config.mode, eps, t_grid, state, q_eps,
                         q_ref, inputs, err_pos, err_psi, eps_err, psi_ref,
                         psi_guide)


# --- reduced model of the converged loop ------------------------------------

@dataclass(frozen=True)
class TwoTrailerState:
    """Guide point at the shifted reference towing two heading followers.

    Once the controlled point rides the shifted reference exactly, both the
    vehicle heading and the reference heading behave like trailers hitched a
    distance eps behind the same moving point: each is dragged toward the
    guide's velocity direction psi_eps at rate (v_eps / eps) sin(psi_eps - .).
    """

    x: float
    y: float
    psi_eps: float
    psi: float        # towed vehicle heading
    psi_r: float      # towed reference heading
    v_eps: float
    omega_eps: float

    def to_array(self):
        return np.array([self.x, self.y, self.psi_eps, self.psi, self.psi_r,
                         self.v_eps, self.omega_eps])

    @classmethod
    def with_array(cls, arr):
        return cls(*map(float, arr))


def two_trailer_derivative(s: TwoTrailerState, a_eps, alpha_eps, eps):
    """Rates of the guide/follower chain driven by guide acceleration inputs."""
    if eps <= 0.0:
        raise ParamError(f"offset must be positive, got {eps}")
    return np.array([
        s.v_eps * math.cos(s.psi_eps),
        s.v_eps * math.sin(s.psi_eps),
        s.omega_eps,
        s.v_eps / eps * math.sin(s.psi_eps - s.psi),
        s.v_eps / eps * math.sin(s.psi_eps - s.psi_r),
        a_eps,
        alpha_eps,
    ])


@dataclass
class TwoTrailerLog:
    t: np.ndarray
    state: np.ndarray  # (N+1, 7)

    @property
    def psi_eps(self):
        return self.state[:, 2]

    @property
    def psi(self):
        return self.state[:, 3]

    @property
    def psi_r(self):
        return self.state[:, 4]


def two_trailer_oracle(initial: TwoTrailerState, eps_trajectory, eps,
                       dt, duration, t0=0.0) -> TwoTrailerLog:
    """Integrate the towed-heading chain along a shifted reference.

    eps_trajectory is either a callable t -> (a_eps, alpha_eps) driving all
    seven states, or a reference with derivatives(t): then the guide states
    ride the shifted reference's own flat states exactly (from time t0) and
    only the two towed headings are integrated.  The guide speed must stay
    positive for the towing terms to keep their sign; headings are wrapped
    per step.
    """
    if dt <= 0.0 or duration <= 0.0:
        raise ParamError("dt and duration must be positive")
    if initial.v_eps <= 0.0:
        raise ParamError("guide speed must be positive")
    n = max(1, int(math.floor(duration / dt + 1e-9)))
    t = np.arange(n + 1) * dt
    out = np.empty((n + 1, 7))

    if callable(eps_trajectory):
        y = initial.to_array()
        out[0] = y

        def f(tt, yy):
            a_eps, alpha_eps = eps_trajectory(tt)
            return two_trailer_derivative(TwoTrailerState.with_array(yy),
                                          a_eps, alpha_eps, eps)

        for k in range(n):
            y = rk4_step(f, float(t[k]), y, float(t[k + 1] - t[k]))
            y[2:5] = wrap_angle(y[2:5])
            if not np.all(np.isfinite(y)):
                raise NumericalError(f"reduced model not finite after step {k}")
            if y[5] <= 0.0:
                raise NumericalError(f"guide speed became nonpositive at step {k}")
            out[k + 1] = y
        return TwoTrailerLog(t, out)

    ep = EpsilonParams(eps)

    def guide(tt):
        d = eps_trajectory.derivatives(t0 + tt)
        return epsilon_reference(d, flat_states(d), ep)

    def f(tt, yy):
        er = guide(tt)
        if er.v <= 0.0:
            raise NumericalError(f"guide speed nonpositive at t={t0 + tt:.6f}")
        return np.array([er.v / eps * math.sin(er.psi - yy[0]),
                         er.v / eps * math.sin(er.psi - yy[1])])

    y = np.array([wrap_angle(initial.psi), wrap_angle(initial.psi_r)])
    for k in range(n + 1):
        er = guide(float(t[k]))
        out[k] = (er.q[0], er.q[1], er.psi, y[0], y[1], er.v, er.omega)
        if k == n:
            break
        y = rk4_step(f, float(t[k]), y, float(t[k + 1] - t[k]))
        y = wrap_angle(y)
        if not np.all(np.isfinite(y)):
            raise NumericalError(f"reduced model not finite after step {k}")
    return TwoTrailerLog(t, out)


def two_trailer_initial(reference, eps, t0, psi, psi_r) -> TwoTrailerState:
    """Oracle start on the shifted reference with given follower headings."""
    ep = EpsilonParams(eps)
    d = reference.derivatives(t0)
    er = epsilon_reference(d, flat_states(d), ep)
    return TwoTrailerState(er.q[0], er.q[1], er.psi, wrap_angle(psi),
                           wrap_angle(psi_r), er.v, er.omega)


# --- metrics ----------------------------------------------------------------

_METRIC_KEYS = ("duration", "samples", "max_err_pos", "final_err_pos",
                "final_err_psi", "max_eps_err", "final_eps_err",
                "time_to_eps", "time_to_eps_10", "time_to_eps_100",
                "decay_rate", "lyapunov_monotone")

_CONVERGED_EPS_ERR = 1e-3  # controlled-point error below which the loop
                           # counts as converged for monotonicity checks


def _sustained_crossing(t, err, threshold):
    """First time after which err stays below threshold; nan if it never does."""
    above = np.nonzero(err >= threshold)[0]
    if len(above) == 0:
        return float(t[0])
    if above[-1] == len(err) - 1:
        return float("nan")
    return float(t[above[-1] + 1])


def convergence_metrics(log: SimulationLog) -> dict:
    """Summary of a run: error extremes, settling times, decay rate.

    Settling times are for the vehicle position error against thresholds
    {1, 0.1, 0.01} times the offset; the decay rate is a log-linear fit of
    the controlled-point error over its fall from the initial value to 1e-6
    of it; lyapunov_monotone records whether half the squared heading error
    is non-increasing (1e-8 slack per step) once the point error is small.
    """
    eps = log.epsilon
    out = {
        "duration": float(log.t[-1] - log.t[0]),
        "samples": int(len(log.t)),
        "max_err_pos": float(log.err_pos.max()),
        "final_err_pos": float(log.err_pos[-1]),
        "final_err_psi": float(abs(log.err_psi[-1])),
        "max_eps_err": float(log.eps_err.max()),
        "final_eps_err": float(log.eps_err[-1]),
    }
    for key, frac in (("time_to_eps", 1.0), ("time_to_eps_10", 0.1),
                      ("time_to_eps_100", 0.01)):
        out[key] = _sustained_crossing(log.t, log.err_pos, frac * eps)

    e0 = log.eps_err[0]
    floor = max(1e-12, 1e-6 * e0)
    mask = (log.eps_err > floor) & (log.eps_err <= e0 * (1.0 + 1e-12))
    if e0 > 0 and mask.sum() >= 3:
        coef = np.polyfit(log.t[mask], np.log(log.eps_err[mask]), 1)
        out["decay_rate"] = float(-coef[0])
    else:
        out["decay_rate"] = float("nan")

    small = np.nonzero(log.eps_err < _CONVERGED_EPS_ERR)[0]
    if len(small) > 0:
        V = 0.5 * log.err_psi[small[0]:] ** 2
        out["lyapunov_monotone"] = bool(np.all(np.diff(V) <= 1e-8))
    else:
        out["lyapunov_monotone"] = False
    return out


def format_metrics(metrics) -> str:
    """Render metrics as key=value lines in a fixed order."""
    lines = []
    for key in _METRIC_KEYS:
        val = metrics[key]
        if isinstance(val, bool):
            lines.append(f"{key}={'true' if val else 'false'}")
        elif isinstance(val, int):
            lines.append(f"{key}={val}")
        else:
            lines.append(f"{key}={val:.15g}")
    return "\n".join(lines) + "\n"
