"""Bounded-error observer for the obstacle vehicle.

Gains come from an offline semidefinite program: minimize gamma subject to a
decay condition at every linearization grid point, a gain-size coupling, and
a disturbance-attenuation block with prescribed level lambda. Online, the
estimate integrates the obstacle model plus a Luenberger correction, and the
estimation-error ball of radius lambda * w_bar_eff feeds the robust
controller through position/rate error bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .barrier import OperatingRegion, environment_rate_lipschitz
from .dynamics import (
    ObstacleInput,
    VehicleGeometry,
    integrate_step,
    nonlinear_derivative,
    steer_to_slip,
)


class InfeasibleSynthesisError(RuntimeError):
    """No gain satisfies the synthesis LMIs at the given theta, lambda."""


@dataclass(frozen=True)
class MeasurementModel:
    """Measured outputs (X_s, Y_s, v_s) with per-channel bounded noise.

    Positions carry noise bounded by w_bar, speed by d_bar; heading is
    unmeasured. Noise is uniform per channel per step.
    """

    w_bar: float = 0.2
    d_bar: float = 0.2

    def __post_init__(self):
        if self.w_bar < 0.0 or self.d_bar < 0.0:
            raise ValueError("noise bounds must be nonnegative")

    @property
    def C(self) -> np.ndarray:
        return np.array(
            [
                [1.0, 0.0, 0.0, 0.0],
                [0.0, 1.0, 0.0, 0.0],
                [0.0, 0.0, 0.0, 1.0],
            ]
        )

    @property
    def D(self) -> np.ndarray:
        """Noise scaling of the normalized (sup-norm <= 1) noise channels."""
        return np.diag([self.w_bar, self.w_bar, self.d_bar])

    @property
    def w_bar_eff(self) -> float:
        return max(self.w_bar, self.d_bar)

    def measure(self, x_s: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        noise = rng.uniform(-1.0, 1.0, 3) * np.array([self.w_bar, self.w_bar, self.d_bar])
        return self.C @ x_s + noise


@dataclass(frozen=True)
class ObserverGains:
    P: np.ndarray  # 4x4 symmetric positive definite
    R: np.ndarray  # 3x4
    L: np.ndarray  # 4x3, equals P^-1 R^T
    theta: float
    lam: float
    gamma_obj: float


@dataclass(frozen=True)
class ObserverState:
    x_hat: np.ndarray  # (4,) obstacle state estimate
    err_radius: float


@dataclass(frozen=True)
class ErrorBounds:
    eps1: float  # bound on position estimate error (m)
    eps2: float  # bound on rate estimate error (m/s)


def obstacle_jacobian(x_s, u_s: ObstacleInput, geom: VehicleGeometry) -> np.ndarray:
    """d f_s / d x_s of the single-track model at fixed input."""
    _, _, psi, v = x_s
    beta = steer_to_slip(u_s.delta_f_s, geom)
    c = math.cos(psi + beta)
    s = math.sin(psi + beta)
    return np.array(
        [
            [0.0, 0.0, -v * s, c],
            [0.0, 0.0, v * c, s],
            [0.0, 0.0, 0.0, math.sin(beta) / geom.l_r],
            [0.0, 0.0, 0.0, 0.0],
        ]
    )


def default_grid(
    speeds=(6.0, 8.0, 10.0),
    headings=(-0.2, 0.0, 0.2),
    steers=(-0.1, 0.0, 0.1),
) -> list[tuple[np.ndarray, ObstacleInput]]:
    """Linearization points covering the obstacle's maneuver envelope."""
    grid = []
    for v in speeds:
        for psi in headings:
            for delta in steers:
                grid.append((np.array([0.0, 0.0, psi, v]), ObstacleInput(0.0, delta)))
    return grid


def synthesize_gains(
    model_grid,
    measurement: MeasurementModel,
    theta: float = 0.5,
    lam: float = 0.8,
    geom: VehicleGeometry = VehicleGeometry(),
    margin: float = 1e-6,
) -> ObserverGains:
    """Solve the gain-synthesis SDP; raises InfeasibleSynthesisError.

    All matrix inequalities are tightened by ``margin`` so the returned gains
    verify the untightened conditions with slack even through solver
    tolerance, and the independent eigenvalue check passes at 1e-8.
    """
    import cvxpy as cp

    if not model_grid:
        raise ValueError("model grid must be nonempty")
    if theta < 0.0 or lam <= 0.0:
        raise ValueError("theta must be nonnegative and lambda positive")

    C = measurement.C
    D = measurement.D
    n = 4
    ny = C.shape[0]
    P = cp.Variable((n, n), symmetric=True)
    R = cp.Variable((ny, n))
    gamma = cp.Variable()

    eps = margin
    cons = [P - np.eye(n) >> eps * np.eye(n)]
    cons.append(cp.bmat([[P, R.T], [R, gamma * np.eye(ny)]]) >> eps * np.eye(n + ny))
    for x_s, u_s in model_grid:
        A = obstacle_jacobian(np.asarray(x_s, dtype=float), u_s, geom)
        decay = A.T @ P + P @ A - C.T @ R - R.T @ C + 2.0 * theta * P
        cons.append(decay << -eps * np.eye(n))
        atten = cp.bmat(
            [
                [A.T @ P + P @ A - C.T @ R - R.T @ C + np.eye(n), -R.T @ D],
                [-D.T @ R, -(lam**2) * np.eye(ny)],
            ]
        )
        cons.append(atten << -eps * np.eye(n + ny))

    prob = cp.Problem(cp.Minimize(gamma), cons)
    prob.solve(solver=cp.CLARABEL)
    if prob.status not in ("optimal", "optimal_inaccurate") or P.value is None:
        raise InfeasibleSynthesisError(
            f"synthesis SDP returned status {prob.status!r} at theta={theta}, lambda={lam}"
        )
    P_v = 0.5 * (P.value + P.value.T)
    R_v = R.value
    L_v = np.linalg.solve(P_v, R_v.T)
    return ObserverGains(P_v, R_v, L_v, float(theta), float(lam), float(gamma.value))


def lmi_check(
    gains: ObserverGains,
    model_grid,
    measurement: MeasurementModel,
    geom: VehicleGeometry = VehicleGeometry(),
    tol: float = 1e-8,
) -> tuple[bool, float]:
    """Eigenvalue verification of every synthesis inequality.

    Returns (ok, worst) where worst is the largest violating eigenvalue
    across all conditions (positive means violated by that amount); ok
    requires worst <= tol.
    """
    P, R = np.asarray(gains.P), np.asarray(gains.R)
    C = measurement.C
    D = measurement.D
    n = P.shape[0]
    if P.shape != (n, n) or R.shape != (C.shape[0], n):
        raise ValueError("gain matrix dimensions are inconsistent")

    worst = -math.inf

    def psd_violation(M):
        # most negative eigenvalue of M, sign-flipped: > 0 means not PSD
        return -float(np.linalg.eigvalsh(0.5 * (M + M.T)).min())

    worst = max(worst, psd_violation(P - np.eye(n)))
    gamma = gains.gamma_obj
    block = np.block([[P, R.T], [R, gamma * np.eye(R.shape[0])]])
    worst = max(worst, psd_violation(block))
    for x_s, u_s in model_grid:
        A = obstacle_jacobian(np.asarray(x_s, dtype=float), u_s, geom)
        decay = A.T @ P + P @ A - C.T @ R - R.T @ C + 2.0 * gains.theta * P
        worst = max(worst, psd_violation(-decay))
        atten = np.block(
            [
                [A.T @ P + P @ A - C.T @ R - R.T @ C + np.eye(n), -R.T @ D],
                [-D.T @ R, -(gains.lam**2) * np.eye(R.shape[0])],
            ]
        )
        worst = max(worst, psd_violation(-atten))
    return worst <= tol, worst


def observer_step(
    obs: ObserverState,
    y: np.ndarray,
    u_s: ObstacleInput,
    gains: ObserverGains,
    geom: VehicleGeometry,
    dt: float,
) -> ObserverState:
    """Advance the estimate one step and absorb the measurement taken at the
    step's end.

    The model is propagated by RK4 with the input held constant, then the
    Luenberger correction dt * L (y - C x_pred) is applied against the
    propagated estimate. Comparing the measurement with the estimate at its
    own sampling instant avoids the v*dt/2 drag that freezing y across the
    integration interval would induce.
    """
    C = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0]])
    x_pred = integrate_step(
        lambda s, i: nonlinear_derivative(s, i, geom),
        obs.x_hat,
        (u_s.a_s, u_s.delta_f_s),
        dt,
    )
    x_next = x_pred + dt * (gains.L @ (y - C @ x_pred))
    return ObserverState(x_next, obs.err_radius)


def init_observer(y: np.ndarray, lane_heading: float, measurement: MeasurementModel,
                  gains: ObserverGains) -> ObserverState:
    """Start from the first measurement; the unmeasured heading defaults to
    the lane direction."""
    x0 = np.array([y[0], y[1], lane_heading, y[2]])
    return ObserverState(x0, gains.lam * measurement.w_bar_eff)


def error_bounds(obs: ObserverState, region: OperatingRegion) -> ErrorBounds:
    """Environment-error bounds induced by the state-error ball.

    Positions are an orthogonal selection of the state (coefficient 1); the
    rate map's regional Lipschitz constant is the supremum of its Jacobian
    norm, max(v_max, 1).
    """
    if not math.isfinite(obs.err_radius):
        raise ValueError("error radius must be finite")
    return ErrorBounds(
        eps1=obs.err_radius,
        eps2=environment_rate_lipschitz(region) * obs.err_radius,
    )


def estimate_environment(
    obs: ObserverState,
    gains: ObserverGains,
    u_s: ObstacleInput,
    geom: VehicleGeometry = VehicleGeometry(),
) -> tuple[np.ndarray, np.ndarray]:
    """Obstacle position estimate and its rate from the observer's model."""
    e_hat = obs.x_hat[:2].copy()
    deriv = nonlinear_derivative(obs.x_hat, (u_s.a_s, u_s.delta_f_s), geom)
    return e_hat, deriv[:2]


def save_gains(gains: ObserverGains, path) -> None:
    """Plain-text fixture: dimension header then row-major matrices.

    Floats are written with 17 significant digits, so reloading is bit-exact.
    """
    with open(path, "w") as fh:
        fh.write(f"{gains.P.shape[0]} {gains.R.shape[0]}\n")
        fh.write(f"{gains.theta:.17g} {gains.lam:.17g} {gains.gamma_obj:.17g}\n")
        for M in (gains.P, gains.R, gains.L):
            for row in np.atleast_2d(M):
                fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def load_gains(path) -> ObserverGains:
    with open(path) as fh:
        tokens = fh.read().split()
    it = iter(tokens)
    n = int(next(it))
    ny = int(next(it))
    theta = float(next(it))
    lam = float(next(it))
    gamma_obj = float(next(it))

    def take(r, c):
        return np.array([float(next(it)) for _ in range(r * c)]).reshape(r, c)

    P = take(n, n)
    R = take(ny, n)
    L = take(n, ny)
    return ObserverGains(P, R, L, theta, lam, gamma_obj)
