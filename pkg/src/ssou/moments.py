"""Moment-based preliminary estimators of (alpha, sigma, beta) from path differences."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientDataError
from .moments_util import bisect_monotone
from .ou import ObservedPath
from .stable import moment_m1, moment_m2

__all__ = [
    "MomentConfig",
    "MomentEstimate",
    "second_diffs",
    "centralized_diffs",
    "estimate_alpha_sigma",
    "estimate_beta",
    "estimate_noise_params",
]


@dataclass(frozen=True)
class MomentConfig:
    q: float = 0.2
    alpha_bracket: tuple = (1.001, 1.999)
    beta_bracket: tuple = (-0.999, 0.999)
    root_tol: float = 1e-10

    def __post_init__(self):
        lo, hi = self.alpha_bracket
        if not (1.0 <= lo < hi < 2.0):
            raise ValueError(f"alpha bracket must sit inside [1, 2), got {self.alpha_bracket}")
        if not 0.0 < self.q < lo / 2.0:
            raise ValueError(f"need 0 < q < alpha_bracket.lo/2, got q={self.q}")
        blo, bhi = self.beta_bracket
        if not (-1.0 < blo < bhi < 1.0):
            raise ValueError(f"beta bracket must sit inside (-1, 1), got {self.beta_bracket}")


@dataclass(frozen=True)
class MomentEstimate:
    alpha_hat: float
    sigma_hat: float
    beta_hat: float
    diagnostics: dict = field(default_factory=dict)


def second_diffs(path: ObservedPath):
    """Second-order increments dY_j - dY_{j-1}, j = 2..n (kills constant drift)."""
    if path.scheme.n < 2:
        raise InsufficientDataError("second differences need n >= 2")
    return np.diff(np.diff(path.values))


def centralized_diffs(path: ObservedPath):
    """Centralized increments dY_j + dY_{j-2} - 2*dY_{j-1}, j = 3..n."""
    if path.scheme.n < 3:
        raise InsufficientDataError("centralized differences need n >= 3")
    dy = np.diff(path.values)
    return dy[2:] + dy[:-2] - 2.0 * dy[1:-1]


def _m1_ratio(alpha, q):
    return moment_m1(q, alpha) ** 2 / moment_m1(2.0 * q, alpha)


def estimate_alpha_sigma(path: ObservedPath, config: MomentConfig = MomentConfig()):
    """(alpha, sigma) from the absolute-moment ratio of second differences.

    alpha solves m1(q)^2/m1(2q) = empirical ratio by bisection; sigma is the
    plug-in scale estimate.  Ratios outside the attainable range clamp to
    the nearer bracket endpoint (flagged in diagnostics).
    """
    if path.scheme.n < 3:
        raise InsufficientDataError("moment estimation needs n >= 3")
    q = config.q
    d2 = second_diffs(path)
    m = d2.size
    abs_q = np.abs(d2) ** q
    mean_q = np.sum(abs_q) / m
    mean_2q = np.sum(abs_q * abs_q) / m
    emp_ratio = mean_q ** 2 / mean_2q
    alpha_hat, hit = bisect_monotone(
        lambda a: _m1_ratio(a, q) - emp_ratio, config.alpha_bracket, config.root_tol
    )
    h = path.scheme.h
    scale_q = np.sum((np.abs(d2) / (2.0 * h) ** (1.0 / alpha_hat)) ** q) / m
    sigma_hat = (scale_q / moment_m1(q, alpha_hat)) ** (1.0 / q)
    diag = {"alpha_ratio": emp_ratio, "alpha_bracket_hit": hit}
    return alpha_hat, float(sigma_hat), diag


def estimate_beta(path: ObservedPath, alpha_hat, config: MomentConfig = MomentConfig()):
    """beta from the signed/absolute moment ratio of centralized differences.

    The theoretical ratio map beta -> m2_signed/m2_abs is monotone on the
    bracket; its orientation is detected numerically rather than assumed.
    """
    if path.scheme.n < 4:
        raise InsufficientDataError("beta estimation needs n >= 4")
    if not 1.0 < alpha_hat < 2.0:
        raise ValueError(f"alpha_hat must be in (1, 2), got {alpha_hat}")
    q = config.q
    dc = centralized_diffs(path)
    abs_q = np.abs(dc) ** q
    emp_ratio = float(np.sum(np.sign(dc) * abs_q) / np.sum(abs_q))

    def ratio(beta):
        m_abs, m_sgn = moment_m2(q, alpha_hat, beta)
        return m_sgn / m_abs

    beta_hat, hit = bisect_monotone(
        lambda b: ratio(b) - emp_ratio, config.beta_bracket, config.root_tol
    )
    return beta_hat, {"beta_ratio": emp_ratio, "beta_bracket_hit": hit}


def estimate_noise_params(path: ObservedPath, config: MomentConfig = MomentConfig()) -> MomentEstimate:
    """Full preliminary estimate (alpha, sigma, beta) used as optimizer warm start."""
    alpha_hat, sigma_hat, diag = estimate_alpha_sigma(path, config)
    beta_hat, diag_b = estimate_beta(path, alpha_hat, config)
    diag.update(diag_b)
    return MomentEstimate(alpha_hat=alpha_hat, sigma_hat=sigma_hat, beta_hat=beta_hat,
                          diagnostics=diag)
