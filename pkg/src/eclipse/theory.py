"""Entropy-capacity objective and numerical convexity certification.

The scalar objective is

    L(H) = alpha * (H - H_pref)^2 + lam * sigmoid(a*(H - H_pref) - b*C + c)

with second derivative 2*alpha + lam*a^2*s(1-s)(1-2s), s = sigmoid(z). The
cubic term u(1-u)(1-2u) is bounded by 1/(6*sqrt(3)) in absolute value, so
alpha > lam*a^2/8 (which makes even the looser 2*alpha - lam*a^2/4 bound
positive) guarantees strict convexity, a unique minimizer, and
gradient-descent convergence. The certifier checks this numerically on a
grid and by running fixed-step descent from both ends of the range.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from eclipse import kernels

CUBIC_MAX = 1.0 / (6.0 * math.sqrt(3.0))
CUBIC_ARGMAX = 0.5 - math.sqrt(3.0) / 6.0


@dataclass(frozen=True)
class ObjectiveParams:
    alpha: float
    lam: float
    a: float
    b: float
    c: float
    h_pref: float
    capacity: float

    def __post_init__(self):
        if self.alpha <= 0 or self.lam <= 0 or self.a <= 0 or self.b <= 0:
            raise ValueError("alpha, lam, a, b must be positive")
        if self.h_pref < 0:
            raise ValueError("h_pref must be >= 0")

    @property
    def z0(self) -> float:
        """Constant part of the logistic argument: -b*C + c."""
        return -self.b * self.capacity + self.c

    @property
    def convexity_bound_satisfied(self) -> bool:
        return self.alpha > self.lam * self.a**2 / 8.0

    def as_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "lambda": self.lam,
            "a": self.a,
            "b": self.b,
            "c": self.c,
            "h_pref": self.h_pref,
            "capacity": self.capacity,
        }


def _sigmoid(z: float) -> float:
    return 1.0 / (1.0 + math.exp(-min(max(z, -35.0), 35.0)))


def p_hall(h: float, params: ObjectiveParams) -> float:
    """Hallucination probability: sigmoid(a*(H - H_pref) - b*C + c)."""
    return _sigmoid(params.a * (h - params.h_pref) + params.z0)


def objective(h: float, params: ObjectiveParams) -> float:
    """alpha*(H - H_pref)^2 + lam * p_hall(H)."""
    return params.alpha * (h - params.h_pref) ** 2 + params.lam * p_hall(h, params)


def first_derivative(h: float, params: ObjectiveParams) -> float:
    s = p_hall(h, params)
    return 2.0 * params.alpha * (h - params.h_pref) + params.lam * params.a * s * (1.0 - s)


def second_derivative(h: float, params: ObjectiveParams) -> float:
    """Closed form 2*alpha + lam*a^2*s(1-s)(1-2s); equals 2*alpha at z=0."""
    s = p_hall(h, params)
    return 2.0 * params.alpha + params.lam * params.a**2 * s * (1.0 - s) * (1.0 - 2.0 * s)


def second_derivative_fd(h: float, params: ObjectiveParams, step: float = 1e-5) -> float:
    """Central finite difference of the first derivative.

    Differencing the gradient rather than the objective keeps float64
    roundoff near 1e-11, so the closed form can be checked to 1e-6; a
    second difference of the objective itself would drown in cancellation
    at this step size.
    """
    return (first_derivative(h + step, params) - first_derivative(h - step, params)) / (2.0 * step)


def max_cubic_term(grid_points: int = 1_000_001) -> tuple[float, float]:
    """Extremum of |u(1-u)(1-2u)| on (0,1): u* = 1/2 - sqrt(3)/6, |f| = 1/(6*sqrt(3)).

    The analytic values are verified against a dense grid before returning;
    a grid maximum above the analytic bound would be a contradiction.
    """
    u = np.linspace(0.0, 1.0, grid_points)
    values = np.abs(u * (1.0 - u) * (1.0 - 2.0 * u))
    grid_max = float(values.max())
    if grid_max > CUBIC_MAX + 1e-9:
        raise AssertionError(f"grid max {grid_max} exceeds analytic bound {CUBIC_MAX}")
    if grid_max < CUBIC_MAX - 1e-6:
        raise AssertionError("grid too coarse to confirm the cubic bound")
    return CUBIC_ARGMAX, CUBIC_MAX


@dataclass
class ConvexityCertificate:
    params: ObjectiveParams
    bound_satisfied: bool
    min_second_derivative: float
    argmin_second_derivative: float
    grid_lo: float
    grid_hi: float
    grid_points: int
    negative_curvature_point: float | None
    gd_converged: bool
    h_star: float | None
    gd_endpoint_gap: float | None

    def as_dict(self) -> dict:
        return {
            "params": self.params.as_dict(),
            "bound_satisfied": self.bound_satisfied,
            "min_second_derivative": self.min_second_derivative,
            "argmin_second_derivative": self.argmin_second_derivative,
            "grid": {"lo": self.grid_lo, "hi": self.grid_hi, "points": self.grid_points},
            "negative_curvature_point": self.negative_curvature_point,
            "gd_converged": self.gd_converged,
            "h_star": self.h_star,
            "gd_endpoint_gap": self.gd_endpoint_gap,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, indent=1)


def certify_convexity(
    params: ObjectiveParams,
    h_range: tuple[float, float] | None = None,
    grid_points: int = 4001,
) -> ConvexityCertificate:
    """Grid + descent certification of strict convexity.

    Evaluates the closed-form second derivative on a grid spanning at least
    [H_pref - 10/a, H_pref + 10/a] (the logistic saturates outside), then
    runs fixed-step gradient descent (step 1/(2*alpha + lam*a^2/4), at most
    1e4 iterations) from both range endpoints and records whether the two
    runs land on the same minimizer within 1e-6.
    """
    if grid_points < 1000:
        raise ValueError("grid_points must be >= 1000")
    span = 10.0 / params.a
    lo_req, hi_req = params.h_pref - span, params.h_pref + span
    if h_range is None:
        lo, hi = lo_req, hi_req
    else:
        lo, hi = h_range
        if lo > lo_req or hi < hi_req:
            raise ValueError(f"h_range must cover [{lo_req}, {hi_req}]")

    grid = np.linspace(lo, hi, grid_points)
    curvature = kernels.second_derivative_grid(
        grid, params.alpha, params.lam, params.a, params.h_pref, params.z0
    )
    i_min = int(np.argmin(curvature))
    min_curv = float(curvature[i_min])
    bound = params.convexity_bound_satisfied
    if bound and min_curv <= 0.0:
        raise AssertionError(
            f"bound alpha > lam*a^2/8 holds but curvature {min_curv} <= 0 at H={grid[i_min]}"
        )
    negative_at = None if min_curv > 0.0 else float(grid[i_min])

    step = 1.0 / (2.0 * params.alpha + params.lam * params.a**2 / 4.0)
    h_a, _, conv_a = kernels.minimize_scalar_gd(
        lo, params.alpha, params.lam, params.a, params.h_pref, params.z0, step, 10_000, 1e-9
    )
    h_b, _, conv_b = kernels.minimize_scalar_gd(
        hi, params.alpha, params.lam, params.a, params.h_pref, params.z0, step, 10_000, 1e-9
    )
    gap = abs(h_a - h_b)
    gd_converged = bool(conv_a and conv_b and gap < 1e-6)
    return ConvexityCertificate(
        params=params,
        bound_satisfied=bound,
        min_second_derivative=min_curv,
        argmin_second_derivative=float(grid[i_min]),
        grid_lo=float(lo),
        grid_hi=float(hi),
        grid_points=grid_points,
        negative_curvature_point=negative_at,
        gd_converged=gd_converged,
        h_star=float((h_a + h_b) / 2.0) if gd_converged else None,
        gd_endpoint_gap=float(gap),
    )
