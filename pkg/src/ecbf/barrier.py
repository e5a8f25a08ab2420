"""Ellipsoidal safe-set barrier, its Lie derivatives, and regional Lipschitz bounds.

The barrier over the augmented state (ego state x, obstacle position e) is

    H(xi) = a_s (X - X_s)^2 + b_s (Y - Y_s)^2 - 1,

nonnegative exactly on and outside the elliptical unsafe region around the
obstacle. Lie derivatives are taken along the augmented dynamics whose drift
stacks the ego's small-slip drift over a zero environment rate, and whose
input matrix stacks g(x) over an identity block acting on the environment
rate. The input ordering everywhere is (a, beta, edot_1, edot_2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import VehicleGeometry, affine_fields


@dataclass(frozen=True)
class EllipseParams:
    """Semi-axes of the elliptical unsafe set (m)."""

    r_a: float = 5.0
    r_b: float = 2.0

    def __post_init__(self):
        if not (self.r_a > 0.0 and self.r_b > 0.0):
            raise ValueError("ellipse semi-axes must be positive")

    @property
    def a_s(self) -> float:
        return 1.0 / self.r_a**2

    @property
    def b_s(self) -> float:
        return 1.0 / self.r_b**2


@dataclass(frozen=True)
class ClassK:
    """Linear class-K function alpha(s) = gamma * s."""

    gamma: float = 1.0

    def __post_init__(self):
        if not self.gamma > 0.0:
            raise ValueError("gamma must be positive")

    def __call__(self, s: float) -> float:
        return self.gamma * s


@dataclass(frozen=True)
class OperatingRegion:
    """Box over which regional Lipschitz constants are taken.

    v_max bounds speed, rho_max the ego-obstacle planar distance, psi_max the
    heading magnitude.
    """

    v_max: float = 18.0
    rho_max: float = 15.0
    psi_max: float = 0.5

    def __post_init__(self):
        if not (self.v_max >= 0.0 and self.rho_max > 0.0 and self.psi_max > 0.0):
            raise ValueError("region bounds must be positive (v_max nonnegative)")


@dataclass(frozen=True)
class AugmentedState:
    """Ego state joined with the obstacle position."""

    x: np.ndarray  # (4,) ego (X, Y, psi, v)
    e: np.ndarray  # (2,) obstacle (X_s, Y_s)

    @staticmethod
    def of(x, e) -> "AugmentedState":
        return AugmentedState(np.asarray(x, dtype=float), np.asarray(e, dtype=float))


@dataclass(frozen=True)
class EnvironmentState:
    e: np.ndarray
    e_dot: np.ndarray


@dataclass(frozen=True)
class BarrierEvaluation:
    """H and its derivatives at one augmented state.

    L_G_H is ordered (a, beta, edot_1, edot_2); its acceleration component is
    identically zero because H does not depend on speed. L_Gd_H equals dH_de.
    """

    H: float
    dH_dx: np.ndarray  # (4,)
    dH_de: np.ndarray  # (2,)
    L_F_H: float
    L_G_H: np.ndarray  # (4,)
    L_Gd_H: np.ndarray  # (2,)


@dataclass(frozen=True)
class LipschitzSet:
    """Regional Lipschitz constants of the barrier terms in the argument e.

    L_G is per input component, ordered like L_G_H.
    """

    L_LF: float
    L_Gd: float
    L_aH: float
    L_G: np.ndarray  # (4,)


def eval_h(xi: AugmentedState, ell: EllipseParams) -> float:
    dx = xi.x[0] - xi.e[0]
    dy = xi.x[1] - xi.e[1]
    return ell.a_s * dx * dx + ell.b_s * dy * dy - 1.0


def eval_barrier(
    xi: AugmentedState, ell: EllipseParams, geom: VehicleGeometry
) -> BarrierEvaluation:
    """H with gradients and Lie derivatives along the augmented dynamics."""
    dx = xi.x[0] - xi.e[0]
    dy = xi.x[1] - xi.e[1]
    h = ell.a_s * dx * dx + ell.b_s * dy * dy - 1.0

    dH_dx = np.array([2.0 * ell.a_s * dx, 2.0 * ell.b_s * dy, 0.0, 0.0])
    dH_de = np.array([-2.0 * ell.a_s * dx, -2.0 * ell.b_s * dy])

    f, g = affine_fields(xi.x, geom)
    L_F_H = float(dH_dx @ f)
    L_G_H = np.concatenate([dH_dx @ g, dH_de])
    return BarrierEvaluation(h, dH_dx, dH_de, L_F_H, L_G_H, dH_de.copy())


def lipschitz_bounds(
    region: OperatingRegion,
    ell: EllipseParams,
    alpha: ClassK,
    geom: VehicleGeometry,
) -> LipschitzSet:
    """Closed-form suprema of the barrier terms' sensitivity to e on the region.

    Valid for any pair of augmented states in the region that differ only in e:

    * L_F H has e-gradient (-2 a_s v cos psi, -2 b_s v sin psi), norm at most
      2 v_max max(a_s, b_s);
    * ||L_Gd H|| = 2 ||(a_s dx, b_s dy)|| changes by at most
      2 max(a_s, b_s) ||e - e'||;
    * the beta component of L_G H has e-gradient (2 a_s v sin psi,
      -2 b_s v cos psi); the acceleration component is identically zero and
      each environment-rate component depends on a single coordinate of e;
    * alpha(H) = gamma H, and H has e-gradient norm at most
      2 max(a_s, b_s) rho_max on the region.
    """
    m = max(ell.a_s, ell.b_s)
    motion = 2.0 * region.v_max * m
    return LipschitzSet(
        L_LF=motion,
        L_Gd=2.0 * m,
        L_aH=alpha.gamma * 2.0 * m * region.rho_max,
        L_G=np.array([0.0, motion, 2.0 * ell.a_s, 2.0 * ell.b_s]),
    )


def environment_rate_lipschitz(region: OperatingRegion) -> float:
    """Regional Lipschitz constant of x_s -> (v cos(psi+beta), v sin(psi+beta)).

    The Jacobian in (X, Y, psi, v) has orthogonal nonzero columns of norms v
    and 1, so its spectral norm is max(v, 1); the regional supremum is
    max(v_max, 1), which the conventional sqrt(v_max^2 + 1) cap dominates.
    """
    return max(region.v_max, 1.0)


def sample_region_state(rng: np.random.Generator, region: OperatingRegion) -> np.ndarray:
    """Uniform sample of an ego state within the region around the origin."""
    ang = rng.uniform(0.0, 2.0 * math.pi)
    rho = region.rho_max * math.sqrt(rng.uniform(0.0, 1.0))
    return np.array(
        [
            rho * math.cos(ang),
            rho * math.sin(ang),
            rng.uniform(-region.psi_max, region.psi_max),
            rng.uniform(0.0, region.v_max),
        ]
    )
