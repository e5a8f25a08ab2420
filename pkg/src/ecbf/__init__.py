"""Safety-filtered lane-change control with an observer-robustified barrier.

A library plus CLI: single-track vehicle models, an elliptical safe-set
barrier with regional Lipschitz bounds, a bounded-error obstacle observer
synthesized by semidefinite programming, dense QP/SOCP solvers, three
safety-filter controllers, and a deterministic closed-loop simulator with
CSV and SVG reporting.
"""

from .barrier import (
    AugmentedState,
    BarrierEvaluation,
    ClassK,
    EllipseParams,
    EnvironmentState,
    LipschitzSet,
    OperatingRegion,
    eval_barrier,
    eval_h,
    lipschitz_bounds,
)
from .config import ConfigError, ScenarioConfig, default_config, load_config
from .controllers import (
    ClfSpec,
    ControllerConfig,
    ControllerOutput,
    InputBounds,
    clf_constraints,
    nominal_step,
    proposed_step,
    raw_error_bounds,
    robust_socp_step,
)
from .dynamics import (
    EgoInput,
    EgoState,
    ManeuverProfile,
    ObstacleInput,
    ObstacleState,
    VehicleGeometry,
    affine_derivative,
    integrate_step,
    nonlinear_derivative,
    obstacle_maneuver,
    slip_to_steer,
    steer_to_slip,
)
from .observer import (
    ErrorBounds,
    InfeasibleSynthesisError,
    MeasurementModel,
    ObserverGains,
    ObserverState,
    default_grid,
    error_bounds,
    estimate_environment,
    lmi_check,
    load_gains,
    observer_step,
    save_gains,
    synthesize_gains,
)
from .simulate import RunSummary, SimLog, run_comparison, run_scenario, summarize
from .solvers import (
    HypographBlock,
    QpProblem,
    SocpProblem,
    Solution,
    hypograph_reformulate,
    solve_qp,
    solve_socp,
)

__version__ = "0.1.0"
