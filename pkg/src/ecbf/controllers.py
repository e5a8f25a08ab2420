"""The three safety filters: nominal QP, worst-case SOCP, observer-based QP.

Each step builds the barrier constraint in the decision variables
(a, beta) plus tracking slack variables (rho_v, rho_y, rho_psi), solves one
convex program, and converts the slip angle back to a steering command.
Safety is a hard constraint; speed, lane and heading tracking are soft.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .barrier import (
    AugmentedState,
    BarrierEvaluation,
    ClassK,
    EllipseParams,
    LipschitzSet,
    OperatingRegion,
    eval_barrier,
)
from .dynamics import EgoInput, EgoState, VehicleGeometry, slip_to_steer
from .observer import ErrorBounds, MeasurementModel
from .solvers import (
    OPTIMAL,
    QpProblem,
    SocpProblem,
    Solution,
    hypograph_reformulate,
    solve_qp,
    solve_socp,
)

NOMINAL = "nominal"
ROBUST_SOCP = "robust-socp"
PROPOSED = "proposed"
MODES = (NOMINAL, ROBUST_SOCP, PROPOSED)


@dataclass(frozen=True)
class ClfSpec:
    """Tracking targets and rates for the speed/lane/heading Lyapunov terms."""

    v_d: float = 16.0
    Y_l: float = 3.5
    alpha_v: float = 1.0
    alpha_y: float = 2.0
    alpha_psi: float = 2.0
    p_v: float = 1.0
    p_y: float = 10.0
    p_psi: float = 10.0


@dataclass(frozen=True)
class InputBounds:
    a_max: float = 3.0
    beta_max: float = 0.3


@dataclass(frozen=True)
class ControllerConfig:
    clf: ClfSpec
    ellipse: EllipseParams
    alpha: ClassK
    geom: VehicleGeometry
    bounds: InputBounds


@dataclass(frozen=True)
class ControllerOutput:
    input: EgoInput
    delta_f: float
    slacks: np.ndarray  # (rho_v, rho_y, rho_psi)
    barrier_margin: float
    solve_time_us: int
    status: str
    sign_condition_ok: bool


def clf_constraints(
    x: EgoState, spec: ClfSpec, geom: VehicleGeometry
) -> tuple[np.ndarray, np.ndarray]:
    """Rows G z <= h over z = (a, beta, rho_v, rho_y, rho_psi).

    Each row encodes L_f V_j + L_g V_j u <= -alpha_j V_j + rho_j for the
    speed, lateral and heading Lyapunov functions along the small-slip model.
    """
    ev = x.v - spec.v_d
    ey = x.Y - spec.Y_l
    G = np.array(
        [
            [2.0 * ev, 0.0, -1.0, 0.0, 0.0],
            [0.0, 2.0 * ey * x.v * math.cos(x.psi), 0.0, -1.0, 0.0],
            [0.0, 2.0 * x.psi * x.v / geom.l_r, 0.0, 0.0, -1.0],
        ]
    )
    h = np.array(
        [
            -spec.alpha_v * ev * ev,
            -spec.alpha_y * ey * ey - 2.0 * ey * x.v * math.sin(x.psi),
            -spec.alpha_psi * x.psi * x.psi,
        ]
    )
    return G, h


def raw_error_bounds(
    measurement: MeasurementModel, envelope: OperatingRegion
) -> ErrorBounds:
    """Worst-case bounds from sensor specs alone (no observer).

    Position error is the two-channel noise bound in the Euclidean norm. The
    rate estimate assumes lane-aligned heading, so its error combines the
    speed-noise bound with the unmeasured heading's geometric effect over the
    obstacle envelope.
    """
    eps1 = math.sqrt(2.0) * measurement.w_bar
    eps2 = measurement.d_bar + 2.0 * envelope.v_max * math.sin(envelope.psi_max / 2.0)
    return ErrorBounds(eps1, eps2)


def _base_problem(x: EgoState, cfg: ControllerConfig) -> tuple[np.ndarray, ...]:
    """Objective and shared rows: CLF, slack nonnegativity, input box."""
    spec = cfg.clf
    Q = np.diag([1.0, 1.0, spec.p_v, spec.p_y, spec.p_psi])
    q = np.zeros(5)
    G_clf, h_clf = clf_constraints(x, spec, cfg.geom)
    G_rows = [G_clf]
    h_rows = [h_clf]
    # rho_j >= 0
    for j in range(3):
        row = np.zeros(5)
        row[2 + j] = -1.0
        G_rows.append(row[None, :])
        h_rows.append(np.zeros(1))
    # input box
    b = cfg.bounds
    box = np.zeros((4, 5))
    box[0, 0] = 1.0
    box[1, 0] = -1.0
    box[2, 1] = 1.0
    box[3, 1] = -1.0
    G_rows.append(box)
    h_rows.append(np.array([b.a_max, b.a_max, b.beta_max, b.beta_max]))
    return Q, q, np.vstack(G_rows), np.concatenate(h_rows)


def _fallback(cfg: ControllerConfig, status: str, solve_us: int,
              sign_ok: bool = True) -> ControllerOutput:
    """Deterministic last resort: maximum braking, zero slip."""
    return ControllerOutput(
        input=EgoInput(-cfg.bounds.a_max, 0.0),
        delta_f=0.0,
        slacks=np.full(3, np.nan),
        barrier_margin=float("nan"),
        solve_time_us=solve_us,
        status=status,
        sign_condition_ok=sign_ok,
    )


def finalize_output(
    sol: Solution,
    cfg: ControllerConfig,
    margin_fn,
    sign_ok: bool = True,
) -> ControllerOutput:
    """Extract (a, beta), recover the steering angle, and re-evaluate the
    barrier margin independently of the solver."""
    if sol.status != OPTIMAL:
        return _fallback(cfg, sol.status, sol.solve_time_us, sign_ok)
    a, beta = float(sol.x_star[0]), float(sol.x_star[1])
    return ControllerOutput(
        input=EgoInput(a, beta),
        delta_f=slip_to_steer(beta, cfg.geom),
        slacks=sol.x_star[2:5].copy(),
        barrier_margin=float(margin_fn(sol.x_star[:2])),
        solve_time_us=sol.solve_time_us,
        status=sol.status,
        sign_condition_ok=sign_ok,
    )


def _barrier_terms(
    x: EgoState, e: np.ndarray, cfg: ControllerConfig
) -> BarrierEvaluation:
    ev = eval_barrier(AugmentedState.of(x.as_array(), e), cfg.ellipse, cfg.geom)
    # the case-study barrier has no speed dependence, so acceleration never
    # enters the safety constraint
    assert ev.L_G_H[0] == 0.0
    return ev


def nominal_step(
    x: EgoState, e_meas: np.ndarray, e_dot_meas: np.ndarray, cfg: ControllerConfig
) -> ControllerOutput:
    """Barrier-constrained tracking QP evaluated at the raw measurement."""
    ev = _barrier_terms(x, e_meas, cfg)
    const = ev.L_F_H + float(ev.dH_de @ e_dot_meas) + cfg.alpha(ev.H)
    # L_G_H[:2] . u >= -const
    row = np.zeros(5)
    row[:2] = -ev.L_G_H[:2]
    Q, q, G, h = _base_problem(x, cfg)
    G = np.vstack([G, row[None, :]])
    h = np.concatenate([h, [const]])
    sol = solve_qp(QpProblem(Q, q, G, h))

    def margin(u):
        return const + float(ev.L_G_H[:2] @ u)

    return finalize_output(sol, cfg, margin)


def robust_socp_step(
    x: EgoState,
    e_meas: np.ndarray,
    e_dot_meas: np.ndarray,
    raw_bounds: ErrorBounds,
    lip: LipschitzSet,
    cfg: ControllerConfig,
) -> ControllerOutput:
    """Worst-case robustified filter solved as a second-order cone program.

    The barrier inequality at the measured state is tightened by the
    Lipschitz-propagated position error and the worst-case rate error, and
    the input-dependent part of the position-error term becomes a cone:

        lhs(u) - Delta >= eps1 * || diag(L_G) u_xi ||.
    """
    ev = _barrier_terms(x, e_meas, cfg)
    eps1, eps2 = raw_bounds.eps1, raw_bounds.eps2
    delta_a = (lip.L_LF + lip.L_Gd * eps2 + lip.L_aH) * eps1
    norm_gd = float(np.linalg.norm(ev.L_Gd_H))
    const = (
        ev.L_F_H
        + float(ev.dH_de @ e_dot_meas)
        + cfg.alpha(ev.H)
        - delta_a
        - norm_gd * eps2
    )
    Q, q, G, h = _base_problem(x, cfg)
    # cone ||F z + g|| <= f z + d over z = (a, beta, rhos)
    F = np.zeros((4, 5))
    F[0, 0] = eps1 * lip.L_G[0]
    F[1, 1] = eps1 * lip.L_G[1]
    g_vec = np.array([0.0, 0.0, eps1 * lip.L_G[2] * e_dot_meas[0], eps1 * lip.L_G[3] * e_dot_meas[1]])
    f_lin = np.zeros(5)
    f_lin[:2] = ev.L_G_H[:2]
    sol = solve_socp(
        SocpProblem(Q, q, G, h, F=F, g=g_vec, f=f_lin, d=const),
        x_init=_interior_guesses(x, cfg, G, h),
    )

    def margin(u):
        u_full = np.concatenate([u, e_dot_meas])
        cone = eps1 * float(np.linalg.norm(lip.L_G * u_full))
        return const + float(ev.L_G_H[:2] @ u) - cone

    return finalize_output(sol, cfg, margin)


def proposed_step(
    x: EgoState,
    e_hat: np.ndarray,
    e_dot_hat: np.ndarray,
    bounds: ErrorBounds,
    lip: LipschitzSet,
    cfg: ControllerConfig,
) -> ControllerOutput:
    """Observer-based robust filter solved as one quadratic program.

    Builds the tightened affine term and the interval coefficients
    b_-, b_+ = L_G H -+ eps1 L_G around each input channel, folds the known
    environment-rate components into the constant, and imposes the resulting
    sum-of-min constraint through its exact linear description.
    """
    ev = _barrier_terms(x, e_hat, cfg)
    eps1, eps2 = bounds.eps1, bounds.eps2
    norm_gd = float(np.linalg.norm(ev.L_Gd_H))
    a0 = (
        ev.L_F_H
        - norm_gd * eps2
        + cfg.alpha(ev.H)
        - (lip.L_LF + lip.L_Gd * eps2 + lip.L_aH) * eps1
    )
    delta_b = eps1 * lip.L_G
    block = hypograph_reformulate(
        a0,
        ev.L_G_H - delta_b,
        ev.L_G_H + delta_b,
        known_values={2: e_dot_hat[0], 3: e_dot_hat[1]},
    )
    sign_ok = bool(
        np.all(np.sign(block.b_minus) == np.sign(block.b_plus))
    )
    G_u, h_u = block.eliminated_rows()
    rows = np.zeros((len(h_u), 5))
    rows[:, :2] = G_u
    Q, q, G, h = _base_problem(x, cfg)
    G = np.vstack([G, rows])
    h = np.concatenate([h, h_u])
    sol = solve_qp(QpProblem(Q, q, G, h))
    return finalize_output(sol, cfg, block.margin, sign_ok)


def _interior_guesses(x: EgoState, cfg: ControllerConfig, G, h) -> list[np.ndarray]:
    """Candidate strictly feasible starts: padded slacks over a fan of inputs.

    The linear rows are always satisfiable through the tracking slacks; the
    cone may need a nonzero slip angle, so both steering extremes are probed.
    The solver falls back to its own phase-I stage if every candidate fails.
    """
    b = cfg.bounds
    out = []
    for u in ((0.0, 0.0), (0.0, -0.9 * b.beta_max), (0.0, 0.9 * b.beta_max),
              (-0.9 * b.a_max, -0.9 * b.beta_max), (-0.9 * b.a_max, 0.9 * b.beta_max)):
        z = np.zeros(5)
        z[0], z[1] = u
        resid = G @ z - h
        for j in range(3):
            # rows were stacked CLF-first, one per slack variable
            z[2 + j] = max(0.0, float(resid[j])) + 1.0
        out.append(z)
    return out
