"""Estimation pipeline: moment warm start, likelihood maximization, standard errors."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

import numpy as np

from .inference import observed_information, rate_matrix, studentize
from .likelihood import exact_loglik, quasi_loglik
from .moments import MomentConfig, estimate_noise_params
from .optim import OptimizerConfig, maximize
from .ou import ModelParams, ObservedPath, SamplingScheme
from .stable import tan_half

__all__ = [
    "FitResult",
    "fit_moment",
    "fit_likelihood",
    "fit",
    "TimescaleResult",
    "timescale_transform",
    "timescale_back",
    "fit_timescale",
]

METHODS = ("moment", "qmle", "mle")


@dataclass(frozen=True, eq=False)
class FitResult:
    method: str
    theta_hat: ModelParams
    loglik: float | None
    converged: bool
    iterations: int
    grad_norm: float | None
    observed_info: np.ndarray | None
    min_eigenvalue: float | None
    stderr: np.ndarray | None
    studentized: np.ndarray | None
    runtime_s: float
    diagnostics: dict


def _clip_to_bounds(v, lo, hi):
    return np.minimum(np.maximum(v, lo), hi)


def fit_moment(path: ObservedPath, moment_config: MomentConfig = MomentConfig(),
               opt_config: OptimizerConfig = OptimizerConfig()) -> FitResult:
    """Moment estimates of (alpha, sigma, beta); drift left at the search start."""
    t0 = time.perf_counter()
    est = estimate_noise_params(path, moment_config)
    lam0, mu0 = opt_config.init_drift
    theta = ModelParams(lam0, mu0, est.alpha_hat, est.sigma_hat, est.beta_hat)
    return FitResult(method="moment", theta_hat=theta, loglik=None, converged=True,
                     iterations=0, grad_norm=None, observed_info=None,
                     min_eigenvalue=None, stderr=None, studentized=None,
                     runtime_s=time.perf_counter() - t0, diagnostics=est.diagnostics)


def fit_likelihood(path: ObservedPath, method, moment_config: MomentConfig = MomentConfig(),
                   opt_config: OptimizerConfig = OptimizerConfig(), theta0: ModelParams | None = None,
                   want_info=True) -> FitResult:
    """Warm start from moments, then maximize H_n ("qmle") or l_n ("mle")."""
    if method not in ("qmle", "mle"):
        raise ValueError(f"method must be 'qmle' or 'mle', got {method!r}")
    t0 = time.perf_counter()
    est = estimate_noise_params(path, moment_config)
    lo, hi = opt_config.bounds
    lam0, mu0 = opt_config.init_drift
    start = _clip_to_bounds(
        np.array([lam0, mu0, est.alpha_hat, est.sigma_hat, est.beta_hat]), lo, hi)
    loglik = quasi_loglik if method == "qmle" else exact_loglik

    def objective(x):
        ev = loglik(ModelParams.from_array(x), path, want_derivs=True)
        return ev.value, ev.gradient, ev.ok

    def normalizer(x):
        return rate_matrix(ModelParams.from_array(x), path.scheme).matrix

    if opt_config.max_step is None:
        opt_config = replace(opt_config, max_step=(10.0, 10.0, 0.2, 5.0, 0.4))
    phi0 = normalizer(start)
    res = maximize(objective, start, opt_config, normalizer=normalizer,
                   init_scale=phi0 @ phi0.T)
    theta_hat = ModelParams.from_array(res.theta_star)

    info = min_eig = stderr = stud = None
    if want_info:
        kind = "qmle" if method == "qmle" else "mle"
        info, min_eig = observed_information(kind, theta_hat, path)
        rate = rate_matrix(theta_hat, path.scheme)
        if min_eig > 0.0:
            cov = rate.matrix @ np.linalg.solve(info, rate.matrix.T)
            stderr = np.sqrt(np.maximum(np.diag(cov), 0.0))
            if theta0 is not None:
                stud = studentize(theta_hat, theta0, info, rate)
    return FitResult(method=method, theta_hat=theta_hat, loglik=res.value,
                     converged=res.converged, iterations=res.iterations,
                     grad_norm=res.grad_norm, observed_info=info, min_eigenvalue=min_eig,
                     stderr=stderr, studentized=stud,
                     runtime_s=time.perf_counter() - t0,
                     diagnostics={"termination": res.termination, **est.diagnostics})


def fit(path: ObservedPath, method, **kwargs) -> FitResult:
    """Dispatch on method in {"moment", "qmle", "mle"}."""
    if method == "moment":
        kwargs.pop("theta0", None)
        kwargs.pop("want_info", None)
        return fit_moment(path, **kwargs)
    return fit_likelihood(path, method, **kwargs)


# ---------------------------------------------------------------------------
# Model time scale as a statistical parameter (sigma fixed to 1, tau free)
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TimescaleResult:
    theta_tilde: ModelParams
    tau_hat: float
    theta_back: ModelParams
    step1: tuple
    converged: bool
    iterations: int
    loglik: float
    runtime_s: float
    diagnostics: dict


def timescale_transform(theta: ModelParams, tau) -> ModelParams:
    """Parameters of the unit-interval model after the time change t -> t*tau.

    The original model must have sigma = 1 (the scale is absorbed by tau).
    """
    lam, mu, a, sg, b = theta.lam, theta.mu, theta.alpha, theta.sigma, theta.beta
    if abs(sg - 1.0) > 1e-12:
        raise ValueError("time-scale reparametrization assumes sigma = 1")
    return ModelParams(lam * tau, mu * tau + b * (tau ** (1.0 / a) - tau) * tan_half(a),
                       a, tau ** (1.0 / a), b)


def timescale_back(theta_tilde: ModelParams):
    """Invert the time-scale map; returns (theta with sigma=1, tau)."""
    lt, mt, a, st, b = (theta_tilde.lam, theta_tilde.mu, theta_tilde.alpha,
                        theta_tilde.sigma, theta_tilde.beta)
    tau = st ** a
    lam = lt / tau
    mu = (mt - b * (st - tau) * tan_half(a)) / tau
    return ModelParams(lam, mu, a, 1.0, b), tau


def fit_timescale(path: ObservedPath, joint=True, moment_config: MomentConfig = MomentConfig(),
                  opt_config: OptimizerConfig = OptimizerConfig()) -> TimescaleResult:
    """Stepwise estimation of the unit-time model with unknown time scale tau.

    Step 1: moment estimates of (alpha, sigma-tilde, beta) on the [0,1] grid
    give tau = sigma-tilde^alpha.  Step 2: Euler quasi-likelihood over the
    drift pair (lambda, mu) with the tau-adjusted drift and scale.  With
    joint=True a full 5-parameter quasi-likelihood refinement of the
    unit-time model follows, warm-started from the stepwise solution.
    """
    t0 = time.perf_counter()
    if abs(path.scheme.T - 1.0) > 1e-12:
        path = ObservedPath(values=path.values, scheme=SamplingScheme(T=1.0, n=path.scheme.n))
    est = estimate_noise_params(path, moment_config)
    a_h, st_h, b_h = est.alpha_hat, est.sigma_hat, est.beta_hat
    lo, hi = opt_config.bounds
    a_h = float(np.clip(a_h, lo[2], hi[2]))
    st_h = float(np.clip(st_h, lo[3], hi[3]))
    b_h = float(np.clip(b_h, lo[4], hi[4]))
    tau_h = st_h ** a_h
    drift_adj = b_h * (st_h - tau_h) * tan_half(a_h)

    def tilde_theta(lam, mu):
        return ModelParams(lam * tau_h, mu * tau_h + drift_adj, a_h, st_h, b_h)

    def objective2(x):
        ev = quasi_loglik(tilde_theta(x[0], x[1]), path, want_derivs=True)
        if not ev.ok:
            return math.nan, None, False
        # chain rule: both tilde drift coordinates are tau * original
        return ev.value, tau_h * ev.gradient[:2], True

    cfg2 = OptimizerConfig(bounds=(np.asarray(lo[:2]), np.asarray(hi[:2])),
                           grad_tol=opt_config.grad_tol, step_tol=opt_config.step_tol,
                           max_iters=opt_config.max_iters, init_drift=opt_config.init_drift)
    res2 = maximize(objective2, np.asarray(opt_config.init_drift, dtype=float), cfg2)
    lam_h, mu_h = res2.theta_star
    theta_tilde = tilde_theta(lam_h, mu_h)
    converged, iters, value = res2.converged, res2.iterations, res2.value
    termination = res2.termination

    if joint:
        def objective5(x):
            ev = quasi_loglik(ModelParams.from_array(x), path, want_derivs=True)
            return ev.value, ev.gradient, ev.ok

        def normalizer(x):
            return rate_matrix(ModelParams.from_array(x), path.scheme).matrix

        cfg5 = opt_config
        if cfg5.max_step is None:
            cfg5 = replace(cfg5, max_step=(10.0, 10.0, 0.2, 5.0, 0.4))
        phi0 = normalizer(theta_tilde.as_array())
        res5 = maximize(objective5, theta_tilde.as_array(), cfg5,
                        normalizer=normalizer, init_scale=phi0 @ phi0.T)
        theta_tilde = ModelParams.from_array(res5.theta_star)
        converged, iters, value = res5.converged, iters + res5.iterations, res5.value
        termination = res5.termination

    back, tau = timescale_back(theta_tilde)
    report = ModelParams(back.lam, back.mu, back.alpha, theta_tilde.sigma, back.beta)
    return TimescaleResult(theta_tilde=theta_tilde, tau_hat=tau, theta_back=report,
                           step1=(est.alpha_hat, est.sigma_hat, est.beta_hat),
                           converged=converged, iterations=iters, loglik=value,
                           runtime_s=time.perf_counter() - t0,
                           diagnostics={"termination": termination, **est.diagnostics})
