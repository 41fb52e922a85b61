"""Trajectory planning and displaced-point tracking for nonholonomic vehicles."""

from .errors import (DegenerateVelocity, DomainError, EpstrajError,
                     InfeasibleError, NumericalError, ParamError, ParseError,
                     SingularVelocity, TurnTooTight, ValidationError)
from .kinematics import (BicycleInput, BicycleState, ExtendedDubinsInput,
                         ExtendedDubinsState, TrailerState, UnicycleInput,
                         UnicycleState, bicycle_derivative,
                         extended_dubins_derivative, integrate_step, rk4_step,
                         trailer_derivative, trailer_position,
                         unicycle_derivative, wrap_angle)
from .epsilon_control import (EpsilonParams, GainMatrix, PointReference,
                              PointState, bicycle_input_from_unicycle,
                              coriolis_matrix, displacement_matrix,
                              displacement_matrix_inv, epsilon_point,
                              epsilon_tracking_step, point_control,
                              unicycle_alpha_from_bicycle,
                              unicycle_input_from_point)
from .flatness import (EpsilonReference, FlatStates, TrajectoryDerivatives,
                       epsilon_reference, flat_states, point_reference)
from .references import (CircleReference, CosineReference, LineReference,
                         PolynomialReference)
from .ccplanner import (CCTrajectory, CCTurnWaypoints, PathPoint,
                        PlannerParams, Segment, SegmentSamples, TurnWaypoint,
                        Waypoint, arc_segment, cc_turn, clothoid_segment,
                        connect_waypoints, line_segment,
                        trajectory_from_blocks)
from .simulator import (SimConfig, SimulationLog, TwoTrailerLog,
                        TwoTrailerState, convergence_metrics, format_metrics,
                        initial_state, run_simulation, two_trailer_derivative,
                        two_trailer_initial, two_trailer_oracle)
from .scenario import Scenario, echo_scenario, parse_scenario, parse_scenario_text

__version__ = "0.1.0"

__all__ = [
    "EpstrajError", "DomainError", "NumericalError", "SingularVelocity",
    "DegenerateVelocity", "ParamError", "TurnTooTight", "InfeasibleError",
    "ParseError", "ValidationError",
    "UnicycleState", "BicycleState", "ExtendedDubinsState", "TrailerState",
    "UnicycleInput", "BicycleInput", "ExtendedDubinsInput",
    "unicycle_derivative", "bicycle_derivative", "extended_dubins_derivative",
    "trailer_derivative", "trailer_position", "rk4_step", "integrate_step",
    "wrap_angle",
    "EpsilonParams", "PointState", "PointReference", "GainMatrix",
    "displacement_matrix", "displacement_matrix_inv", "coriolis_matrix",
    "epsilon_point", "point_control", "unicycle_input_from_point",
    "bicycle_input_from_unicycle", "unicycle_alpha_from_bicycle",
    "epsilon_tracking_step",
    "TrajectoryDerivatives", "FlatStates", "flat_states", "EpsilonReference",
    "epsilon_reference", "point_reference",
    "LineReference", "CircleReference", "CosineReference",
    "PolynomialReference",
    "Waypoint", "PlannerParams", "PathPoint", "TurnWaypoint",
    "CCTurnWaypoints", "SegmentSamples", "Segment", "CCTrajectory",
    "clothoid_segment", "arc_segment", "line_segment", "cc_turn",
    "trajectory_from_blocks", "connect_waypoints",
    "SimConfig", "SimulationLog", "initial_state", "run_simulation",
    "TwoTrailerState", "TwoTrailerLog", "two_trailer_derivative",
    "two_trailer_oracle", "two_trailer_initial", "convergence_metrics",
    "format_metrics",
    "Scenario", "parse_scenario", "parse_scenario_text", "echo_scenario",
    "__version__",
]
