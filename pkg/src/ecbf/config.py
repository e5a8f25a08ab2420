"""Scenario configuration: defaults, INI-style file parsing, validation.

The file format is flat key = value pairs under sections that mirror the
config dataclasses; every key is optional and falls back to the packaged
default. See README for the full key table.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace

from .barrier import ClassK, EllipseParams, OperatingRegion
from .controllers import ClfSpec, InputBounds, MODES
from .dynamics import EgoState, ManeuverProfile, ObstacleState, VehicleGeometry
from .observer import MeasurementModel


class ConfigError(ValueError):
    """Invalid or unreadable scenario configuration."""


@dataclass(frozen=True)
class ObserverConfig:
    theta: float = 2.5
    lam: float = 0.8
    grid_speeds: tuple[float, ...] = (6.0, 8.0, 10.0)
    grid_headings: tuple[float, ...] = (-0.2, 0.0, 0.2)
    grid_steers: tuple[float, ...] = (-0.1, 0.0, 0.1)
    transient_time: float = 1.0
    transient_factor: float = 1.5
    fixture: str | None = None


@dataclass(frozen=True)
class ScenarioConfig:
    dt: float = 0.01
    horizon: float = 10.0
    seed: int = 0
    lane_width: float = 3.5
    lane_heading: float = 0.0
    mode: str = "proposed"

    ego_init: EgoState = field(default_factory=lambda: EgoState(0.0, 0.0, 0.0, 16.0))
    ego_geom: VehicleGeometry = field(default_factory=VehicleGeometry)
    obstacle_init: ObstacleState = field(
        default_factory=lambda: ObstacleState(24.0, 3.5, 0.0, 8.0)
    )
    obstacle_geom: VehicleGeometry = field(default_factory=VehicleGeometry)
    maneuver: ManeuverProfile = field(default_factory=ManeuverProfile)

    ellipse: EllipseParams = field(default_factory=EllipseParams)
    alpha: ClassK = field(default_factory=lambda: ClassK(2.5))
    clf: ClfSpec = field(default_factory=ClfSpec)
    bounds: InputBounds = field(default_factory=InputBounds)
    measurement: MeasurementModel = field(default_factory=MeasurementModel)
    observer: ObserverConfig = field(default_factory=ObserverConfig)
    ego_region: OperatingRegion = field(default_factory=OperatingRegion)
    obstacle_region: OperatingRegion = field(
        default_factory=lambda: OperatingRegion(v_max=8.5, rho_max=15.0, psi_max=0.3)
    )

    def validate(self) -> "ScenarioConfig":
        if not self.dt > 0.0:
            raise ConfigError("dt must be positive")
        if self.horizon < self.dt:
            raise ConfigError("horizon must be at least one step")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.ego_init.v < 0.0 or self.obstacle_init.v_s < 0.0:
            raise ConfigError("initial speeds must be nonnegative")
        return self

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.dt))


def default_config() -> ScenarioConfig:
    return ScenarioConfig()


def _floats(raw: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in raw.replace(",", " ").split())


def load_config(path, **overrides) -> ScenarioConfig:
    """Read an INI-style scenario file; missing keys keep their defaults."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file {path}: {exc}") from exc

    base = ScenarioConfig()

    def get(section, key, cast, fallback):
        if parser.has_option(section, key):
            try:
                return cast(parser.get(section, key))
            except ValueError as exc:
                raise ConfigError(f"bad value for [{section}] {key}: {exc}") from exc
        return fallback

    try:
        cfg = ScenarioConfig(
            dt=get("scenario", "dt", float, base.dt),
            horizon=get("scenario", "horizon", float, base.horizon),
            seed=get("scenario", "seed", int, base.seed),
            lane_width=get("scenario", "lane_width", float, base.lane_width),
            lane_heading=get("scenario", "lane_heading", float, base.lane_heading),
            mode=get("scenario", "mode", str, base.mode),
            ego_init=EgoState(
                get("ego", "x0", float, base.ego_init.X),
                get("ego", "y0", float, base.ego_init.Y),
                get("ego", "psi0", float, base.ego_init.psi),
                get("ego", "v0", float, base.ego_init.v),
            ),
            ego_geom=VehicleGeometry(
                get("ego", "l_f", float, base.ego_geom.l_f),
                get("ego", "l_r", float, base.ego_geom.l_r),
            ),
            obstacle_init=ObstacleState(
                get("obstacle", "x0", float, base.obstacle_init.X_s),
                get("obstacle", "y0", float, base.obstacle_init.Y_s),
                get("obstacle", "psi0", float, base.obstacle_init.psi_s),
                get("obstacle", "v0", float, base.obstacle_init.v_s),
            ),
            obstacle_geom=VehicleGeometry(
                get("obstacle", "l_f", float, base.obstacle_geom.l_f),
                get("obstacle", "l_r", float, base.obstacle_geom.l_r),
            ),
            maneuver=ManeuverProfile(
                get("obstacle", "maneuver_start", float, base.maneuver.t_start),
                get("obstacle", "maneuver_duration", float, base.maneuver.duration),
                get("obstacle", "maneuver_steer_amplitude", float, base.maneuver.steer_amplitude),
            ),
            ellipse=EllipseParams(
                get("ellipse", "r_a", float, base.ellipse.r_a),
                get("ellipse", "r_b", float, base.ellipse.r_b),
            ),
            alpha=ClassK(get("classk", "gamma", float, base.alpha.gamma)),
            clf=ClfSpec(
                get("clf", "v_d", float, base.clf.v_d),
                get("clf", "y_target", float, base.clf.Y_l),
                get("clf", "alpha_v", float, base.clf.alpha_v),
                get("clf", "alpha_y", float, base.clf.alpha_y),
                get("clf", "alpha_psi", float, base.clf.alpha_psi),
                get("clf", "p_v", float, base.clf.p_v),
                get("clf", "p_y", float, base.clf.p_y),
                get("clf", "p_psi", float, base.clf.p_psi),
            ),
            bounds=InputBounds(
                get("bounds", "a_max", float, base.bounds.a_max),
                get("bounds", "beta_max", float, base.bounds.beta_max),
            ),
            measurement=MeasurementModel(
                get("measurement", "w_bar", float, base.measurement.w_bar),
                get("measurement", "d_bar", float, base.measurement.d_bar),
            ),
            observer=ObserverConfig(
                theta=get("observer", "theta", float, base.observer.theta),
                lam=get("observer", "lambda", float, base.observer.lam),
                grid_speeds=get("observer", "grid_speeds", _floats, base.observer.grid_speeds),
                grid_headings=get("observer", "grid_headings", _floats, base.observer.grid_headings),
                grid_steers=get("observer", "grid_steers", _floats, base.observer.grid_steers),
                transient_time=get("observer", "transient_time", float, base.observer.transient_time),
                transient_factor=get("observer", "transient_factor", float, base.observer.transient_factor),
                fixture=get("observer", "fixture", str, base.observer.fixture),
            ),
            ego_region=OperatingRegion(
                get("ego_region", "v_max", float, base.ego_region.v_max),
                get("ego_region", "rho_max", float, base.ego_region.rho_max),
                get("ego_region", "psi_max", float, base.ego_region.psi_max),
            ),
            obstacle_region=OperatingRegion(
                get("obstacle_region", "v_max", float, base.obstacle_region.v_max),
                get("obstacle_region", "rho_max", float, base.obstacle_region.rho_max),
                get("obstacle_region", "psi_max", float, base.obstacle_region.psi_max),
            ),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    if overrides:
        cfg = replace(cfg, **overrides)
    return cfg.validate()
