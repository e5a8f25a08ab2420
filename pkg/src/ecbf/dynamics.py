"""Kinematic single-track vehicle models and fixed-step integration.

States are 4-vectors (X, Y, psi, v): ground-frame position, heading,
and speed in the vehicle frame. Two input conventions exist:

* the exact model takes (a, delta_f), acceleration and front steering angle;
* the small-slip affine model takes (a, beta), acceleration and slip angle.

``slip_to_steer`` / ``steer_to_slip`` convert between the two.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class VehicleGeometry:
    """Distances from the center of gravity to the front and rear axles (m)."""

    l_f: float = 1.2
    l_r: float = 1.6

    def __post_init__(self):
        if not (self.l_f > 0.0 and self.l_r > 0.0):
            raise ValueError("axle distances must be positive")

    @property
    def wheelbase(self) -> float:
        return self.l_f + self.l_r


@dataclass(frozen=True)
class EgoState:
    X: float
    Y: float
    psi: float
    v: float

    def as_array(self) -> np.ndarray:
        return np.array([self.X, self.Y, self.psi, self.v], dtype=float)

    @staticmethod
    def from_array(x) -> "EgoState":
        return EgoState(float(x[0]), float(x[1]), float(x[2]), float(x[3]))


@dataclass(frozen=True)
class EgoInput:
    a: float
    beta: float


@dataclass(frozen=True)
class ObstacleState:
    X_s: float
    Y_s: float
    psi_s: float
    v_s: float

    def as_array(self) -> np.ndarray:
        return np.array([self.X_s, self.Y_s, self.psi_s, self.v_s], dtype=float)

    @staticmethod
    def from_array(x) -> "ObstacleState":
        return ObstacleState(float(x[0]), float(x[1]), float(x[2]), float(x[3]))


@dataclass(frozen=True)
class ObstacleInput:
    a_s: float
    delta_f_s: float


def steer_to_slip(delta_f: float, geom: VehicleGeometry) -> float:
    """Slip angle produced by a front steering angle."""
    return math.atan(geom.l_r / geom.wheelbase * math.tan(delta_f))


def slip_to_steer(beta: float, geom: VehicleGeometry) -> float:
    """Front steering angle that realizes a slip angle; inverse of steer_to_slip."""
    if not abs(beta) < math.pi / 2:
        raise ValueError(f"slip angle {beta!r} outside (-pi/2, pi/2)")
    return math.atan(geom.wheelbase / geom.l_r * math.tan(beta))


def nonlinear_derivative(state, inp, geom: VehicleGeometry) -> np.ndarray:
    """Exact single-track kinematics; ``inp`` is (a, delta_f)."""
    _, _, psi, v = state
    a, delta_f = inp
    beta = steer_to_slip(delta_f, geom)
    return np.array(
        [
            v * math.cos(psi + beta),
            v * math.sin(psi + beta),
            v / geom.l_r * math.sin(beta),
            a,
        ]
    )


def affine_derivative(state, inp, geom: VehicleGeometry) -> np.ndarray:
    """Small-slip control-affine model f(x) + g(x) u; ``inp`` is (a, beta)."""
    _, _, psi, v = state
    a, beta = inp
    return np.array(
        [
            v * math.cos(psi) - v * beta * math.sin(psi),
            v * math.sin(psi) + v * beta * math.cos(psi),
            v * beta / geom.l_r,
            a,
        ]
    )


def affine_fields(state, geom: VehicleGeometry) -> tuple[np.ndarray, np.ndarray]:
    """Drift f(x) and input matrix g(x) of the small-slip model."""
    _, _, psi, v = state
    f = np.array([v * math.cos(psi), v * math.sin(psi), 0.0, 0.0])
    g = np.array(
        [
            [0.0, -v * math.sin(psi)],
            [0.0, v * math.cos(psi)],
            [0.0, v / geom.l_r],
            [1.0, 0.0],
        ]
    )
    return f, g


def integrate_step(derivative_fn, state, inp, dt: float) -> np.ndarray:
    """One classical RK4 step with the input held constant over [t, t+dt]."""
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    x = np.asarray(state, dtype=float)
    k1 = derivative_fn(x, inp)
    k2 = derivative_fn(x + 0.5 * dt * k1, inp)
    k3 = derivative_fn(x + 0.5 * dt * k2, inp)
    k4 = derivative_fn(x + dt * k3, inp)
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@dataclass(frozen=True)
class ManeuverProfile:
    """Scripted lane-change steering for the obstacle.

    One full sinusoid period of front steering over [t_start, t_start+duration],
    zero outside; speed is held (zero acceleration). The amplitude is tuned so
    the open-loop lateral displacement matches one lane width; see config.
    """

    t_start: float = 1.0
    duration: float = 4.5
    steer_amplitude: float = -0.047698248

    def __post_init__(self):
        if self.duration <= 0.0:
            raise ValueError("maneuver duration must be positive")


def obstacle_maneuver(t: float, maneuver: ManeuverProfile) -> ObstacleInput:
    """Obstacle input at time t: constant speed, sinusoidal steering pulse."""
    if t < 0.0:
        raise ValueError("time must be nonnegative")
    tau = t - maneuver.t_start
    if tau < 0.0 or tau > maneuver.duration:
        return ObstacleInput(0.0, 0.0)
    delta = maneuver.steer_amplitude * math.sin(2.0 * math.pi * tau / maneuver.duration)
    return ObstacleInput(0.0, delta)
