"""Delimited output and figure rendering for simulation logs.

CSV emission is byte-deterministic for a given log: floats carry 9
significant digits, booleans are 0/1, and rows end with a bare newline on
every platform. Figures are written as self-contained SVG via matplotlib.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .barrier import EllipseParams
from .simulate import SimLog

CSV_COLUMNS = (
    "t", "ego_X", "ego_Y", "ego_psi", "ego_v",
    "obs_X", "obs_Y", "obs_psi", "obs_v",
    "meas_X", "meas_Y", "meas_v",
    "est_X", "est_Y", "est_psi", "est_v",
    "ehat_dx", "ehat_dy", "eps1", "eps2",
    "H_true", "H_est", "a", "beta", "delta_f",
    "rho_v", "rho_y", "rho_psi", "margin", "sign_ok", "solve_us", "status",
)

# wall-clock timing is the one column a reproducible rerun cannot pin down
NONDETERMINISTIC_COLUMNS = ("solve_us",)


def _fmt(value: float) -> str:
    return f"{value:.9g}"


def write_csv(log: SimLog, path) -> Path:
    """One header row, then one row per step with the fixed column schema."""
    path = Path(path)
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write(",".join(CSV_COLUMNS) + "\n")
            for k in range(len(log.t)):
                fields = [
                    _fmt(log.t[k]),
                    *(_fmt(v) for v in log.ego[k]),
                    *(_fmt(v) for v in log.obs[k]),
                    *(_fmt(v) for v in log.y[k]),
                    *(_fmt(v) for v in log.est[k]),
                    *(_fmt(v) for v in log.ehat_dot[k]),
                    _fmt(log.eps1[k]),
                    _fmt(log.eps2[k]),
                    _fmt(log.H_true[k]),
                    _fmt(log.H_est[k]),
                    _fmt(log.a[k]),
                    _fmt(log.beta[k]),
                    _fmt(log.delta_f[k]),
                    *(_fmt(v) for v in log.slacks[k]),
                    _fmt(log.margin[k]),
                    "1" if log.sign_ok[k] else "0",
                    str(int(log.solve_us[k])),
                    log.status[k],
                ]
                fh.write(",".join(fields) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc
    return path


def read_csv(path) -> dict[str, np.ndarray | list[str]]:
    """Parse a written log back into column arrays (status stays strings)."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    out: dict[str, np.ndarray | list[str]] = {}
    for j, name in enumerate(header):
        col = [r[j] for r in rows]
        if name == "status":
            out[name] = col
        else:
            out[name] = np.array([float(v) for v in col])
    return out


def axes_bounds(logs, ell: EllipseParams) -> tuple[float, float, float, float]:
    """Bounding box of every logged position, padded by one ellipse radius."""
    xs, ys = [], []
    for log in logs:
        xs.extend([log.ego[:, 0].min(), log.ego[:, 0].max(),
                   log.obs[:, 0].min(), log.obs[:, 0].max()])
        ys.extend([log.ego[:, 1].min(), log.ego[:, 1].max(),
                   log.obs[:, 1].min(), log.obs[:, 1].max()])
    pad = max(ell.r_a, ell.r_b)
    return min(xs) - pad, max(xs) + pad, min(ys) - pad, max(ys) + pad


def _ellipse_outline(cx, cy, ell: EllipseParams):
    th = np.linspace(0.0, 2.0 * math.pi, 80)
    return cx + ell.r_a * np.cos(th), cy + ell.r_b * np.sin(th)


def build_trajectory_fig(logs: list[SimLog], ell: EllipseParams, lane_width=3.5):
    """One panel per controller: paths plus unsafe-ellipse snapshots."""
    fig, axs = plt.subplots(len(logs), 1, figsize=(9.0, 2.6 * len(logs)),
                            sharex=True, squeeze=False)
    x0, x1, y0, y1 = axes_bounds(logs, ell)
    for ax, log in zip(axs[:, 0], logs):
        for yline, style in ((-lane_width / 2, "k-"), (lane_width / 2, "k--"),
                             (3 * lane_width / 2, "k-")):
            ax.plot([x0, x1], [yline, yline], style, lw=0.8, alpha=0.6)
        ax.plot(log.ego[:, 0], log.ego[:, 1], "b-", lw=1.5, label="ego")
        ax.plot(log.obs[:, 0], log.obs[:, 1], "r-", lw=1.2, label="obstacle")
        n = len(log.t)
        for k in np.linspace(0, n - 1, 5).astype(int):
            ex, ey = _ellipse_outline(log.obs[k, 0], log.obs[k, 1], ell)
            ax.plot(ex, ey, "r:", lw=0.8, alpha=0.7)
        ax.set_xlim(x0, x1)
        ax.set_ylim(y0, y1)
        ax.set_ylabel("Y (m)")
        ax.set_title(log.mode, fontsize=10)
        ax.legend(loc="upper right", fontsize=8)
    axs[-1, 0].set_xlabel("X (m)")
    fig.tight_layout()
    return fig


def build_barrier_fig(logs: list[SimLog]):
    """Barrier value along each run with the zero safety threshold."""
    fig, ax = plt.subplots(figsize=(7.0, 3.4))
    for log in logs:
        ax.plot(log.t, log.H_true, lw=1.4, label=log.mode)
    ax.axhline(0.0, color="k", lw=1.0)
    ax.set_xlabel("t (s)")
    ax.set_ylabel("barrier value")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return fig


def build_inputs_fig(logs: list[SimLog]):
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7.0, 4.6), sharex=True)
    for log in logs:
        ax1.plot(log.t, log.beta, lw=1.2, label=log.mode)
        ax2.plot(log.t, log.delta_f, lw=1.2, label=log.mode)
    ax1.set_ylabel("slip angle (rad)")
    ax2.set_ylabel("steering angle (rad)")
    ax2.set_xlabel("t (s)")
    ax1.legend(fontsize=8)
    fig.tight_layout()
    return fig


def build_timing_fig(logs: list[SimLog]):
    fig, ax = plt.subplots(figsize=(6.0, 3.2))
    ax.boxplot([log.solve_us for log in logs], tick_labels=[log.mode for log in logs],
               showfliers=False)
    ax.set_ylabel("per-step solve time (us)")
    fig.tight_layout()
    return fig


def render_plots(logs, path_prefix, ell: EllipseParams | None = None,
                 lane_width: float = 3.5) -> list[Path]:
    """Write the figure set next to the delimited output.

    A single log yields trajectory, barrier, and input figures; with two or
    more logs a solve-time comparison box plot joins them.
    """
    if isinstance(logs, dict):
        logs = list(logs.values())
    if not logs:
        raise ValueError("no logs to plot")
    ell = ell or EllipseParams()
    prefix = str(path_prefix)
    made = []
    figures = {
        "trajectories": build_trajectory_fig(logs, ell, lane_width),
        "barrier": build_barrier_fig(logs),
        "inputs": build_inputs_fig(logs),
    }
    if len(logs) >= 2:
        figures["timing"] = build_timing_fig(logs)
    for name, fig in figures.items():
        out = Path(f"{prefix}{name}.svg")
        out.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(out, format="svg", metadata={"Date": None})
        plt.close(fig)
        made.append(out)
    return made
