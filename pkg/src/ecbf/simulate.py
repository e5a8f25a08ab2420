"""Closed-loop scenario engine and comparison runner.

Both vehicles are always integrated with the exact single-track model; the
small-slip affine form appears only inside the controllers. Measurement
noise is drawn once per step from the seeded stream regardless of the
controller mode, so runs that share a seed share the exact noise
realization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .barrier import AugmentedState, eval_h, lipschitz_bounds
from .config import ScenarioConfig
from .controllers import (
    MODES,
    NOMINAL,
    PROPOSED,
    ROBUST_SOCP,
    ControllerConfig,
    nominal_step,
    proposed_step,
    raw_error_bounds,
    robust_socp_step,
)
from .dynamics import EgoState, integrate_step, nonlinear_derivative, obstacle_maneuver
from .observer import (
    ErrorBounds,
    ObserverGains,
    error_bounds,
    estimate_environment,
    init_observer,
    observer_step,
)


@dataclass
class SimLog:
    """Per-step arrays of one closed-loop run."""

    mode: str
    seed: int
    dt: float
    t: np.ndarray          # (n,)
    ego: np.ndarray        # (n, 4) true ego state
    obs: np.ndarray        # (n, 4) true obstacle state
    y: np.ndarray          # (n, 3) measurement
    est: np.ndarray        # (n, 4) obstacle estimate (raw-derived outside proposed)
    ehat_dot: np.ndarray   # (n, 2) environment rate estimate
    eps1: np.ndarray       # (n,)
    eps2: np.ndarray       # (n,)
    H_true: np.ndarray     # (n,)
    H_est: np.ndarray      # (n,)
    a: np.ndarray          # (n,)
    beta: np.ndarray       # (n,)
    delta_f: np.ndarray    # (n,)
    slacks: np.ndarray     # (n, 3)
    margin: np.ndarray     # (n,)
    sign_ok: np.ndarray    # (n,) bool
    solve_us: np.ndarray   # (n,) int
    status: list[str]

    def data_equal(self, other: "SimLog") -> bool:
        """Equality of everything the physics determines (wall-clock solve
        times excluded)."""
        arrays = ("t", "ego", "obs", "y", "est", "ehat_dot", "eps1", "eps2",
                  "H_true", "H_est", "a", "beta", "delta_f", "slacks",
                  "margin", "sign_ok")
        return (
            self.mode == other.mode
            and self.seed == other.seed
            and self.status == other.status
            and all(np.array_equal(getattr(self, k), getattr(other, k)) for k in arrays)
        )


@dataclass(frozen=True)
class RunSummary:
    mode: str
    min_H: float
    mean_u: float
    max_u: float
    median_solve_us: float
    p95_solve_us: float
    safety_violated: bool
    infeasible_steps: int


def summarize(log: SimLog) -> RunSummary:
    u_norm = np.hypot(log.a, log.beta)
    return RunSummary(
        mode=log.mode,
        min_H=float(log.H_true.min()),
        mean_u=float(u_norm.mean()),
        max_u=float(u_norm.max()),
        median_solve_us=float(np.median(log.solve_us)),
        p95_solve_us=float(np.percentile(log.solve_us, 95)),
        safety_violated=bool(log.H_true.min() < 0.0),
        infeasible_steps=int(sum(s != "optimal" for s in log.status)),
    )


def controller_config(cfg: ScenarioConfig) -> ControllerConfig:
    return ControllerConfig(
        clf=cfg.clf,
        ellipse=cfg.ellipse,
        alpha=cfg.alpha,
        geom=cfg.ego_geom,
        bounds=cfg.bounds,
    )


def run_scenario(cfg: ScenarioConfig, gains: ObserverGains | None = None) -> SimLog:
    """Simulate one mode over the configured horizon, fully seeded.

    ``gains`` are required in proposed mode (load the packaged fixture or
    synthesize offline); the other modes ignore them.
    """
    cfg.validate()
    if cfg.mode == PROPOSED and gains is None:
        raise ValueError("proposed mode needs observer gains")

    n = cfg.n_steps
    dt = cfg.dt
    rng = np.random.default_rng(cfg.seed)
    ctrl_cfg = controller_config(cfg)
    lip = lipschitz_bounds(cfg.ego_region, cfg.ellipse, cfg.alpha, cfg.ego_geom)
    raw_eps = raw_error_bounds(cfg.measurement, cfg.obstacle_region)

    ego = cfg.ego_init.as_array()
    obs_state = cfg.obstacle_init.as_array()
    noise_scale = np.array(
        [cfg.measurement.w_bar, cfg.measurement.w_bar, cfg.measurement.d_bar]
    )

    def measure(x_s):
        noise = rng.uniform(-1.0, 1.0, 3) * noise_scale
        assert np.all(np.abs(noise) <= noise_scale)
        return cfg.measurement.C @ x_s + noise

    y = measure(obs_state)
    observer = None
    if cfg.mode == PROPOSED:
        observer = init_observer(y, cfg.lane_heading, cfg.measurement, gains)

    log = SimLog(
        mode=cfg.mode, seed=cfg.seed, dt=dt,
        t=np.zeros(n), ego=np.zeros((n, 4)), obs=np.zeros((n, 4)),
        y=np.zeros((n, 3)), est=np.zeros((n, 4)), ehat_dot=np.zeros((n, 2)),
        eps1=np.zeros(n), eps2=np.zeros(n), H_true=np.zeros(n), H_est=np.zeros(n),
        a=np.zeros(n), beta=np.zeros(n), delta_f=np.zeros(n),
        slacks=np.zeros((n, 3)), margin=np.zeros(n),
        sign_ok=np.zeros(n, dtype=bool), solve_us=np.zeros(n, dtype=np.int64),
        status=[],
    )

    ego_deriv = lambda s, i: nonlinear_derivative(s, i, cfg.ego_geom)
    obs_deriv = lambda s, i: nonlinear_derivative(s, i, cfg.obstacle_geom)

    for k in range(n):
        t = k * dt
        u_s = obstacle_maneuver(t, cfg.maneuver)

        if cfg.mode == PROPOSED:
            est = observer.x_hat.copy()
            e_hat, e_dot_hat = estimate_environment(observer, gains, u_s, cfg.obstacle_geom)
            eps = error_bounds(observer, cfg.obstacle_region)
            if t < cfg.observer.transient_time:
                f = cfg.observer.transient_factor
                eps = ErrorBounds(eps.eps1 * f, eps.eps2 * f)
        else:
            est = np.array([y[0], y[1], cfg.lane_heading, y[2]])
            e_hat = est[:2].copy()
            e_dot_hat = np.array(
                [y[2] * math.cos(cfg.lane_heading), y[2] * math.sin(cfg.lane_heading)]
            )
            eps = raw_eps if cfg.mode == ROBUST_SOCP else ErrorBounds(0.0, 0.0)

        x_ego = EgoState.from_array(ego)
        if cfg.mode == NOMINAL:
            out = nominal_step(x_ego, e_hat, e_dot_hat, ctrl_cfg)
        elif cfg.mode == ROBUST_SOCP:
            out = robust_socp_step(x_ego, e_hat, e_dot_hat, eps, lip, ctrl_cfg)
        else:
            out = proposed_step(x_ego, e_hat, e_dot_hat, eps, lip, ctrl_cfg)

        log.t[k] = t
        log.ego[k] = ego
        log.obs[k] = obs_state
        log.y[k] = y
        log.est[k] = est
        log.ehat_dot[k] = e_dot_hat
        log.eps1[k] = eps.eps1
        log.eps2[k] = eps.eps2
        log.H_true[k] = eval_h(AugmentedState.of(ego, obs_state[:2]), cfg.ellipse)
        log.H_est[k] = eval_h(AugmentedState.of(ego, e_hat), cfg.ellipse)
        log.a[k] = out.input.a
        log.beta[k] = out.input.beta
        log.delta_f[k] = out.delta_f
        log.slacks[k] = out.slacks
        log.margin[k] = out.barrier_margin
        log.sign_ok[k] = out.sign_condition_ok
        log.solve_us[k] = out.solve_time_us
        log.status.append(out.status)

        ego = integrate_step(ego_deriv, ego, (out.input.a, out.delta_f), dt)
        obs_state = integrate_step(obs_deriv, obs_state, (u_s.a_s, u_s.delta_f_s), dt)
        y = measure(obs_state)
        if cfg.mode == PROPOSED:
            observer = observer_step(observer, y, u_s, gains, cfg.obstacle_geom, dt)

    return log


def run_comparison(
    cfg: ScenarioConfig, gains: ObserverGains | None = None
) -> tuple[dict[str, SimLog], list[RunSummary]]:
    """Run the identical scenario and noise realization through all three
    controllers."""
    logs = {}
    for mode in MODES:
        logs[mode] = run_scenario(replace(cfg, mode=mode), gains)
    return logs, [summarize(logs[m]) for m in MODES]


def summary_table(summaries: list[RunSummary]) -> str:
    header = (
        f"{'mode':<12} {'min H':>9} {'mean|u|':>9} {'max|u|':>9} "
        f"{'med us':>8} {'p95 us':>8} {'viol':>5} {'infeas':>6}"
    )
    lines = [header, "-" * len(header)]
    for s in summaries:
        lines.append(
            f"{s.mode:<12} {s.min_H:>9.4f} {s.mean_u:>9.4f} {s.max_u:>9.4f} "
            f"{s.median_solve_us:>8.0f} {s.p95_solve_us:>8.0f} "
            f"{str(s.safety_violated):>5} {s.infeasible_steps:>6}"
        )
    return "\n".join(lines)
