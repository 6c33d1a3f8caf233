"""Box-projected BFGS ascent with backtracking line search."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NoAscentError

__all__ = ["OptimizerConfig", "OptResult", "maximize", "default_bounds"]

ARMIJO = 1e-4
MAX_BACKTRACKS = 40
BOUND_MARGIN = 0.005


def default_bounds():
    """The estimation box: (lambda, mu) wide, (alpha, sigma, beta) strictly interior."""
    lo = np.array([-50.0, -50.0, 1.0 + BOUND_MARGIN, BOUND_MARGIN, -1.0 + BOUND_MARGIN])
    hi = np.array([50.0, 50.0, 2.0 - BOUND_MARGIN, 1.0e3, 1.0 - BOUND_MARGIN])
    return lo, hi


@dataclass(frozen=True)
class OptimizerConfig:
    bounds: tuple = field(default_factory=default_bounds)
    grad_tol: float = 1e-6
    step_tol: float = 1e-8
    max_iters: int = 500
    init_drift: tuple = (2.0, 3.0)
    max_step: tuple | None = None      # per-coordinate trust cap on one step

    def __post_init__(self):
        lo, hi = self.bounds
        if np.any(np.asarray(lo) >= np.asarray(hi)):
            raise ValueError("bounds must satisfy lo < hi per coordinate")
        if self.max_step is not None and np.any(np.asarray(self.max_step) <= 0.0):
            raise ValueError("max_step entries must be positive")


@dataclass(frozen=True, eq=False)
class OptResult:
    theta_star: np.ndarray
    value: float
    iterations: int
    converged: bool
    termination: str
    grad_norm: float


def maximize(objective, start, config: OptimizerConfig = OptimizerConfig(), normalizer=None,
             init_scale=None) -> OptResult:
    """Maximize objective(x) -> (value, gradient, ok) over the config box.

    BFGS-style inverse-Hessian updates with backtracking (Armijo) line
    search and projection onto the box; an invalid evaluation shrinks the
    step like a failed Armijo test.  Convergence is measured on the
    normalizer-scaled gradient (sup-norm) so that coordinates with very
    different rates are comparable; normalizer(x) returns the scaling
    matrix and defaults to the identity.  init_scale seeds the inverse
    Hessian (e.g. with the squared rate matrix) so the first steps are
    sized to the problem's mixed convergence rates.
    """
    lo, hi = (np.asarray(b, dtype=float) for b in config.bounds)
    x = np.clip(np.asarray(start, dtype=float), lo, hi)
    dim = x.size
    eye = np.eye(dim)
    B0 = eye if init_scale is None else np.asarray(init_scale, dtype=float)

    def scaled_grad_norm(xv, grad):
        if normalizer is None:
            return float(np.max(np.abs(grad)))
        return float(np.max(np.abs(normalizer(xv).T @ grad)))

    fcur, gcur, ok = objective(x)
    if not ok or not math.isfinite(fcur):
        raise NoAscentError("objective invalid at the starting point")
    B = B0.copy()                        # inverse Hessian approx of the negated objective
    gnorm = scaled_grad_norm(x, gcur)
    iters = 0
    termination, converged = "max_iters", False
    while iters < config.max_iters:
        if gnorm < config.grad_tol:
            termination, converged = "grad_tol", True
            break
        d = B @ gcur                     # ascent direction
        if float(d @ gcur) <= 0.0:
            B = B0.copy()
            d = B @ gcur
        if config.max_step is not None:
            cap = np.asarray(config.max_step, dtype=float)
            biggest = np.max(np.abs(d) / cap)
            if biggest > 1.0:
                d = d / biggest
        t, accepted = 1.0, False
        while t > 0.5 ** MAX_BACKTRACKS:
            xn = np.clip(x + t * d, lo, hi)
            step = xn - x
            if np.max(np.abs(step)) == 0.0:
                break
            fn, gn, okn = objective(xn)
            if okn and math.isfinite(fn) and fn >= fcur + ARMIJO * float(gcur @ step):
                accepted = True
                break
            t *= 0.5
        if not accepted:
            if iters == 0:
                raise NoAscentError("line search failed from the starting point")
            termination, converged = "line_search", gnorm < 10.0 * config.grad_tol
            break
        iters += 1
        s = xn - x
        y_desc = -(gn - gcur)            # gradient change of the negated objective
        sy = float(s @ y_desc)
        if sy > 1e-12 * float(np.linalg.norm(s) * np.linalg.norm(y_desc)):
            rho = 1.0 / sy
            left = eye - rho * np.outer(s, y_desc)
            B = left @ B @ left.T + rho * np.outer(s, s)
        x, fcur, gcur = xn, fn, gn
        gnorm = scaled_grad_norm(x, gcur)
        if np.max(np.abs(s)) < config.step_tol * max(1.0, float(np.max(np.abs(x)))):
            termination, converged = "step_tol", True
            break
    if gnorm < config.grad_tol:
        termination, converged = "grad_tol", True
    return OptResult(theta_star=x, value=fcur, iterations=iters, converged=converged,
                     termination=termination, grad_norm=gnorm)
