"""Rate matrix, observed information, Studentization, and the limit-information MC estimate."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import stable
from .errors import NotPositiveDefiniteError
from .likelihood import exact_loglik, quasi_loglik
from .ou import ModelParams, ObservedPath, SamplingScheme, xi_h
from .stable import StableParams, tan_half

__all__ = [
    "RateMatrix",
    "InferenceReport",
    "LimitInformation",
    "rate_matrix",
    "observed_information",
    "studentize",
    "normalize_estimates",
    "path_time_averages",
    "limit_information_mc",
]

EIG_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class RateMatrix:
    """Non-diagonal normalizing matrix phi_n(theta).

    The lower-right block is (1/(sqrt(n)*xi_h(alpha))) * [[1,0,0],
    [-sigma*lbar/alpha^2, sigma, 0], [0,0,1]]; this concrete choice makes
    the mixed rate conditions hold with identity limit entries.
    """

    matrix: np.ndarray
    r_n: float
    block: np.ndarray

    @property
    def inverse(self):
        return np.linalg.inv(self.matrix)


@dataclass(frozen=True, eq=False)
class InferenceReport:
    theta_hat: ModelParams
    observed_info: np.ndarray
    min_eigenvalue: float
    studentized: np.ndarray | None = None
    stderr: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class LimitInformation:
    matrix: np.ndarray
    stderr: np.ndarray
    min_eigenvalue: float


def rate_matrix(theta: ModelParams, scheme: SamplingScheme) -> RateMatrix:
    h = scheme.h
    if not h < 1.0:
        raise ValueError(f"rate matrix needs h < 1, got h={h}")
    a, sg = theta.alpha, theta.sigma
    if not 1.0 < a < 2.0:
        raise ValueError(f"rate matrix needs alpha in (1, 2), got {a}")
    n = scheme.n
    lbar = scheme.lbar
    r_n = math.sqrt(n) * h ** (1.0 - 1.0 / a)
    tilde = np.array([
        [1.0, 0.0, 0.0],
        [-sg * lbar / a ** 2, sg, 0.0],
        [0.0, 0.0, 1.0],
    ])
    block = tilde / (math.sqrt(n) * xi_h(a, h))
    m = np.zeros((5, 5))
    m[0, 0] = m[1, 1] = 1.0 / r_n
    m[2:, 2:] = block
    return RateMatrix(matrix=m, r_n=r_n, block=block)


def observed_information(objective, theta: ModelParams, path: ObservedPath, hessian=None):
    """Normalized observed information -phi_n' H phi_n, symmetrized.

    objective selects the Hessian source: "qmle" (FD of the analytic H_n
    gradient) or "mle" (FD of the exact log-likelihood).  A precomputed raw
    Hessian can be passed to skip re-evaluation.  Returns (matrix, min_eig).
    """
    if hessian is None:
        if objective == "qmle":
            hessian = quasi_loglik(theta, path, hessian="fd").hessian
        elif objective == "mle":
            hessian = exact_loglik(theta, path, hessian="fd").hessian
        else:
            raise ValueError(f"objective must be 'qmle' or 'mle', got {objective!r}")
        if hessian is None or not np.all(np.isfinite(hessian)):
            raise ValueError("Hessian evaluation failed")
    phi = rate_matrix(theta, path.scheme).matrix
    info = -phi.T @ hessian @ phi
    info = 0.5 * (info + info.T)
    min_eig = float(np.linalg.eigvalsh(info)[0])
    return info, min_eig


def _sqrtm_psd(m):
    w, v = np.linalg.eigh(m)
    return (v * np.sqrt(np.maximum(w, EIG_FLOOR))) @ v.T


def studentize(theta_hat: ModelParams, theta0: ModelParams, info, rate: RateMatrix):
    """I_n^{1/2} phi_n^{-1} (theta_hat - theta0); approximately N(0, I_5)."""
    info = np.asarray(info)
    if np.linalg.eigvalsh(info)[0] <= 0.0:
        raise NotPositiveDefiniteError("observed information is not positive definite")
    diff = theta_hat.as_array() - theta0.as_array()
    return _sqrtm_psd(info) @ np.linalg.solve(rate.matrix, diff)


def normalize_estimates(theta_hat: ModelParams, theta0: ModelParams, scheme: SamplingScheme):
    """Errors scaled by the theoretical rates, for histogram export."""
    h = scheme.h
    n = scheme.n
    lbar = scheme.lbar
    a = theta0.alpha
    r_n = math.sqrt(n) * h ** (1.0 - 1.0 / a)
    d = theta_hat.as_array() - theta0.as_array()
    return np.array([
        r_n * d[0],
        r_n * d[1],
        math.sqrt(n) * d[2],
        math.sqrt(n) / lbar * d[3],
        math.sqrt(n) * d[4],
    ])


def path_time_averages(path: ObservedPath):
    """Time averages (1/T) int Y dt and (1/T) int Y^2 dt by trapezoid rule."""
    t = path.scheme.times
    y = path.values
    T = path.scheme.T
    return (float(np.trapezoid(y, t) / T), float(np.trapezoid(y * y, t) / T))


def limit_information_mc(theta: ModelParams, path_summary, mc_draws=10 ** 6, rng=None) -> LimitInformation:
    """Monte Carlo estimate of the limit information matrix.

    Averages the limit kernels over i.i.d. standardized noise draws and
    assembles the three blocks with the observed-path time averages; the
    rate-matrix entry choice makes the block mixing matrix the identity.
    """
    if not theta.in_estimation_range():
        raise ValueError("limit information needs alpha in (1, 2)")
    if rng is None:
        rng = np.random.default_rng()
    ybar, y2bar = path_summary
    a, sg, b = theta.alpha, theta.sigma, theta.beta
    eps = stable.sample(StableParams(a, b, 1.0, 0.0), int(mc_draws), rng)
    d = stable.density(a, b, eps, cols=("v", "x", "a", "b"))
    v = d["v"]
    psi, f, g = d["x"] / v, d["a"] / v, d["b"] / v
    t = tan_half(a)
    tp = 0.5 * math.pi * (1.0 + t * t)
    chi = np.stack([b * tp * psi - f, b * t * psi + eps * psi + 1.0, t * psi - g])

    def mean_se(x):
        return float(np.mean(x)), float(np.std(x) / math.sqrt(x.size))

    e_psi2, se_psi2 = mean_se(psi * psi)
    r_vals, r_ses = np.empty(3), np.empty(3)
    for k in range(3):
        r_vals[k], r_ses[k] = mean_se(chi[k] * psi)
    sign = np.array([1.0, -1.0, 1.0])
    R = sign * r_vals / t
    R_se = r_ses / abs(t)
    Q = np.empty((3, 3))
    Q_se = np.empty((3, 3))
    for i in range(3):
        for j in range(i, 3):
            m, s = mean_se(chi[i] * chi[j])
            Q[i, j] = Q[j, i] = m / t ** 2
            Q_se[i, j] = Q_se[j, i] = s / t ** 2

    upat = np.array([[y2bar, -ybar], [-ybar, 1.0]])
    U = e_psi2 / sg ** 2 * upat
    U_se = se_psi2 / sg ** 2 * np.abs(upat)
    vpat = np.array([[ybar, -ybar, ybar], [-1.0, 1.0, -1.0]])
    V = -(vpat * R[None, :]) / sg
    V_se = np.abs(vpat) * R_se[None, :] / sg

    info = np.block([[U, V], [V.T, Q]])
    se = np.block([[U_se, V_se], [V_se.T, Q_se]])
    return LimitInformation(matrix=info, stderr=se,
                            min_eigenvalue=float(np.linalg.eigvalsh(info)[0]))
