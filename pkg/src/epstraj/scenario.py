"""Scenario files: a flat key/value text format for planner + simulation runs.

One `key = value` pair per line, `#` comments, blank lines ignored.  Waypoints
are repeated `waypoint = x, y, psi` lines in path order.  `parse_scenario`
applies documented defaults and validates every field against the module
preconditions before any planning work starts; `echo_scenario` renders the
parsed result back in a canonical form that re-parses to the same scenario.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ccplanner import PlannerParams, Waypoint
from .epsilon_control import GainMatrix
from .errors import ParseError, ValidationError

MODES = ("eps", "plain")
VEHICLES = ("unicycle", "bicycle")

# keys taking a single scalar/string value; waypoint is the only repeatable key
_SCALAR_KEYS = (
    "name", "v", "kappa_max", "sigma_max", "dt", "epsilon", "kp", "kd", "K",
    "vehicle", "wheelbase", "mode", "duration", "sim_dt",
    "offset_lateral", "offset_heading", "out_dir",
)
_STRING_KEYS = ("name", "vehicle", "mode", "out_dir")


@dataclass(frozen=True)
class Scenario:
    """Fully validated run description: waypoints, planner, control, outputs."""

    waypoints: tuple = ()
    v: float = 1.0
    kappa_max: float = 1.0
    sigma_max: float = 1.0
    dt: float = 0.01
    epsilon: float = 1.0
    kp: float | None = None
    kd: float | None = None
    K: tuple | None = None
    vehicle: str = "unicycle"
    wheelbase: float = 1.0
    mode: str = "eps"
    duration: float | None = None
    sim_dt: float | None = None
    offset_lateral: float = 0.0
    offset_heading: float = 0.0
    name: str | None = None
    out_dir: str | None = None

    def planner_params(self) -> PlannerParams:
        return PlannerParams(v=self.v, kappa_max=self.kappa_max,
                             sigma_max=self.sigma_max, dt=self.dt)

    def gain_matrix(self) -> GainMatrix:
        if self.K is not None:
            return GainMatrix(np.asarray(self.K, dtype=float).reshape(2, 4))
        kp = 1.0 if self.kp is None else self.kp
        kd = 2.0 if self.kd is None else self.kd
        return GainMatrix.pd(kp, kd)

    def validate(self) -> "Scenario":
        """Check every module precondition; raises ValidationError naming the field."""
        if len(self.waypoints) < 2:
            raise ValidationError(
                f"waypoints: at least two required, got {len(self.waypoints)}")
        for key in ("v", "kappa_max", "sigma_max", "dt", "epsilon", "wheelbase"):
            val = getattr(self, key)
            if not (math.isfinite(val) and val > 0.0):
                raise ValidationError(f"{key}: must be finite and > 0, got {val}")
        for key in ("duration", "sim_dt"):
            val = getattr(self, key)
            if val is not None and not (math.isfinite(val) and val > 0.0):
                raise ValidationError(f"{key}: must be finite and > 0, got {val}")
        for key in ("offset_lateral", "offset_heading"):
            if not math.isfinite(getattr(self, key)):
                raise ValidationError(f"{key}: must be finite")
        if self.mode not in MODES:
            raise ValidationError(f"mode: must be one of {MODES}, got {self.mode!r}")
        if self.vehicle not in VEHICLES:
            raise ValidationError(
                f"vehicle: must be one of {VEHICLES}, got {self.vehicle!r}")
        if self.K is not None and (self.kp is not None or self.kd is not None):
            raise ValidationError("K: exclusive with kp/kd, give one or the other")
        if self.K is not None and len(self.K) != 8:
            raise ValidationError(
                f"K: expected 8 row-major entries (2x4), got {len(self.K)}")
        for key in ("kp", "kd"):
            val = getattr(self, key)
            if val is not None and not (math.isfinite(val) and val > 0.0):
                raise ValidationError(f"{key}: must be finite and > 0, got {val}")
        try:
            self.gain_matrix()
        except ValidationError as exc:
            raise ValidationError(f"K: {exc}") from exc
        return self


def _parse_float(key, text, lineno):
    try:
        val = float(text)
    except ValueError:
        raise ParseError(f"line {lineno}: {key}: not a number: {text!r}") from None
    return val


def _parse_waypoint(text, lineno, index):
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 3:
        raise ParseError(
            f"line {lineno}: waypoint: expected 'x, y, psi', got {text!r}")
    vals = [_parse_float("waypoint", p, lineno) for p in parts]
    if not all(math.isfinite(v) for v in vals):
        raise ValidationError(f"waypoint {index}: non-finite coordinate in {text!r}")
    return Waypoint(*vals)


def parse_scenario_text(text, origin="<scenario>") -> Scenario:
    """Parse scenario text; ParseError carries line numbers, then validate."""
    raw = {}
    waypoints = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ParseError(f"line {lineno}: expected 'key = value': {stripped!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if not value:
            raise ParseError(f"line {lineno}: {key}: empty value")
        if key == "waypoint":
            waypoints.append(_parse_waypoint(value, lineno, len(waypoints)))
            continue
        if key not in _SCALAR_KEYS:
            raise ParseError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ParseError(f"line {lineno}: duplicate key {key!r}")
        if key in _STRING_KEYS:
            raw[key] = value
        elif key == "K":
            parts = [p.strip() for p in value.split(",")]
            raw[key] = tuple(_parse_float("K", p, lineno) for p in parts)
        else:
            raw[key] = _parse_float(key, value, lineno)
    for key in ("v", "kappa_max", "sigma_max", "dt"):
        if key not in raw:
            raise ParseError(f"{origin}: missing required key {key!r}")
    if len(waypoints) < 2:
        raise ParseError(
            f"{origin}: at least two 'waypoint = x, y, psi' lines required, "
            f"got {len(waypoints)}")
    return Scenario(waypoints=tuple(waypoints), **raw).validate()


def parse_scenario(path) -> Scenario:
    """Read and parse a scenario file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror or exc}") from exc
    return parse_scenario_text(text, origin=str(path))


def echo_scenario(scenario: Scenario) -> str:
    """Canonical text form; parsing it reproduces the scenario byte-for-byte.

    Optional fields that were never set (name, duration, sim_dt, out_dir, K)
    are omitted; everything else is written with resolved values in a fixed
    order so echo(parse(echo(s))) == echo(s).
    """
    lines = []
    if scenario.name is not None:
        lines.append(f"name = {scenario.name}")
    for key in ("v", "kappa_max", "sigma_max", "dt"):
        lines.append(f"{key} = {getattr(scenario, key)!r}")
    for w in scenario.waypoints:
        lines.append(f"waypoint = {w.x!r}, {w.y!r}, {w.psi!r}")
    lines.append(f"epsilon = {scenario.epsilon!r}")
    if scenario.K is not None:
        lines.append("K = " + ", ".join(repr(k) for k in scenario.K))
    else:
        kp = 1.0 if scenario.kp is None else scenario.kp
        kd = 2.0 if scenario.kd is None else scenario.kd
        lines.append(f"kp = {kp!r}")
        lines.append(f"kd = {kd!r}")
    lines.append(f"vehicle = {scenario.vehicle}")
    if scenario.vehicle == "bicycle":
        lines.append(f"wheelbase = {scenario.wheelbase!r}")
    lines.append(f"mode = {scenario.mode}")
    if scenario.duration is not None:
        lines.append(f"duration = {scenario.duration!r}")
    if scenario.sim_dt is not None:
        lines.append(f"sim_dt = {scenario.sim_dt!r}")
    lines.append(f"offset_lateral = {scenario.offset_lateral!r}")
    lines.append(f"offset_heading = {scenario.offset_heading!r}")
    if scenario.out_dir is not None:
        lines.append(f"out_dir = {scenario.out_dir}")
    return "\n".join(lines) + "\n"
