"""Exact simulation and residual machinery for dY = (mu - lambda*Y)dt + sigma*dJ."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from . import stable
from .stable import StableParams, tan_half

__all__ = [
    "ModelParams",
    "SamplingScheme",
    "ObservedPath",
    "TransitionLaw",
    "eta",
    "eta_prime",
    "xi_h",
    "xi_h_dalpha",
    "xi_h_ddalpha",
    "transition",
    "simulate_path",
    "euler_residuals",
    "exact_residuals",
    "write_path_csv",
    "read_path_csv",
]


@dataclass(frozen=True)
class ModelParams:
    """OU parameter vector theta = (lambda, mu, alpha, sigma, beta)."""

    lam: float
    mu: float
    alpha: float
    sigma: float
    beta: float

    def __post_init__(self):
        if not (math.isfinite(self.lam) and math.isfinite(self.mu)):
            raise ValueError("lambda and mu must be finite")
        if not (0.0 < self.alpha < 2.0):
            raise ValueError(f"alpha must be in (0, 2), got {self.alpha}")
        if not (self.sigma > 0.0 and math.isfinite(self.sigma)):
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not (-1.0 < self.beta < 1.0):
            raise ValueError(f"beta must be in (-1, 1), got {self.beta}")

    def as_array(self):
        return np.array([self.lam, self.mu, self.alpha, self.sigma, self.beta])

    @staticmethod
    def from_array(v):
        return ModelParams(float(v[0]), float(v[1]), float(v[2]), float(v[3]), float(v[4]))

    def in_estimation_range(self):
        """Inside the closure condition (1,2)x(0,inf)x(-1,1) for (alpha, sigma, beta)."""
        return 1.0 < self.alpha < 2.0


@dataclass(frozen=True)
class SamplingScheme:
    """Equidistant design: n steps of size h = T/n on [0, T]."""

    T: float
    n: int

    def __post_init__(self):
        if not (self.T > 0.0 and math.isfinite(self.T)):
            raise ValueError(f"T must be positive, got {self.T}")
        if not (isinstance(self.n, int) and self.n >= 2):
            raise ValueError(f"n must be an integer >= 2, got {self.n}")

    @property
    def h(self):
        return self.T / self.n

    @property
    def lbar(self):
        return math.log(1.0 / self.h)

    @property
    def times(self):
        return self.h * np.arange(self.n + 1)


@dataclass(frozen=True, eq=False)
class ObservedPath:
    """Discrete sample (Y_{t_j})_{j=0..n} on an equidistant grid."""

    values: np.ndarray
    scheme: SamplingScheme

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.ndim != 1 or v.size != self.scheme.n + 1:
            raise ValueError(f"need n+1 = {self.scheme.n + 1} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("path values must be finite")

    @property
    def y0(self):
        return float(self.values[0])


@dataclass(frozen=True)
class TransitionLaw:
    """One-step conditional law: Y_h | Y_0=y ~ S0_alpha(beta, sigma_h, decay*y + drift_term + mu_h)."""

    decay: float
    drift_term: float
    sigma_h: float
    mu_h: float


def eta(x):
    """(1 - exp(-x))/x, with the Taylor series sum_k (-1)^k x^k/(k+1)! below 1e-4."""
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape)
    small = np.abs(x) < 1e-4
    xs = x[small]
    out[small] = 1.0 + xs * (-1.0 / 2.0 + xs * (1.0 / 6.0 + xs * (-1.0 / 24.0)))
    xl = x[~small]
    out[~small] = -np.expm1(-xl) / xl
    return out if out.ndim else float(out)


def eta_prime(x):
    """Derivative of eta: (e^{-x}(1+x) - 1)/x^2, series below 1e-4."""
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape)
    small = np.abs(x) < 1e-4
    xs = x[small]
    out[small] = -1.0 / 2.0 + xs * (1.0 / 3.0 + xs * (-1.0 / 8.0 + xs / 30.0))
    xl = x[~small]
    out[~small] = (np.exp(-xl) * (1.0 + xl) - 1.0) / (xl * xl)
    return out if out.ndim else float(out)


def xi_h(alpha, h):
    """(1 - h^{1-1/alpha}) * tan(alpha*pi/2): the Euler residual centering."""
    return (1.0 - h ** (1.0 - 1.0 / alpha)) * tan_half(alpha)


def xi_h_dalpha(alpha, h):
    lbar = math.log(1.0 / h)
    t = tan_half(alpha)
    tp = 0.5 * math.pi * (1.0 + t * t)
    hp = h ** (1.0 - 1.0 / alpha)
    return lbar * hp * t / alpha ** 2 + (1.0 - hp) * tp


def xi_h_ddalpha(alpha, h):
    lbar = math.log(1.0 / h)
    t = tan_half(alpha)
    tp = 0.5 * math.pi * (1.0 + t * t)
    tpp = math.pi * math.pi * 0.5 * t * (1.0 + t * t)
    hp = h ** (1.0 - 1.0 / alpha)
    return ((1.0 - hp) * tpp + 2.0 * lbar * hp * tp / alpha ** 2
            - (2.0 / alpha ** 3 + lbar / alpha ** 4) * lbar * hp * t)


def transition(theta: ModelParams, h) -> TransitionLaw:
    """Exact conditional law of one step of size h.

    All drift expressions route through eta so lambda = 0 is regular.
    """
    if not h > 0.0:
        raise ValueError(f"h must be positive, got {h}")
    lam, mu, a, sg, b = theta.lam, theta.mu, theta.alpha, theta.sigma, theta.beta
    e_a = eta(lam * a * h)
    e_1 = eta(lam * h)
    sigma_h = h ** (1.0 / a) * e_a ** (1.0 / a) * sg
    if abs(a - 1.0) < stable.ALPHA_ONE_EPS:
        # limit of ((h*eta(lam*a*h))^{1/a} - h*eta(lam*h)) * tan(a*pi/2) as a -> 1
        he = h * e_1
        mu_h = (2.0 * b * sg / math.pi) * he * (math.log(he) - lam * h * eta_prime(lam * h) / e_1)
    else:
        mu_h = b * sg * ((h * e_a) ** (1.0 / a) - h * e_1) * tan_half(a)
    return TransitionLaw(decay=math.exp(-lam * h), drift_term=mu * h * e_1,
                         sigma_h=sigma_h, mu_h=mu_h)


def simulate_path(theta: ModelParams, y0, scheme: SamplingScheme, rng) -> ObservedPath:
    """Exact-in-law path: Y_j = decay*Y_{j-1} + drift_term + xi_j with stable one-step noise."""
    law = transition(theta, scheme.h)
    noise = stable.sample(
        StableParams(theta.alpha, theta.beta, law.sigma_h, law.mu_h), scheme.n, rng
    )
    drive = noise + law.drift_term
    # AR(1) recursion Y_j = decay*Y_{j-1} + drive_j
    y = lfilter([1.0], [1.0, -law.decay], drive, zi=np.array([law.decay * y0]))[0]
    values = np.concatenate(([float(y0)], y))
    return ObservedPath(values=values, scheme=scheme)


def euler_residuals(theta: ModelParams, path: ObservedPath):
    """eps_j = (dY_j - (mu - lambda*Y_{j-1})*h)/(sigma*h^{1/alpha}) - beta*xi_h(alpha)."""
    h = path.scheme.h
    y = path.values
    dy = np.diff(y)
    drift = (theta.mu - theta.lam * y[:-1]) * h
    return (dy - drift) / (theta.sigma * h ** (1.0 / theta.alpha)) - theta.beta * xi_h(theta.alpha, h)


def exact_residuals(theta: ModelParams, path: ObservedPath):
    """eps'_j = (Y_j - decay*Y_{j-1} - drift_term - mu_h)/sigma_h; i.i.d. S0(beta,1,0) at the true theta."""
    law = transition(theta, path.scheme.h)
    y = path.values
    return (y[1:] - law.decay * y[:-1] - law.drift_term - law.mu_h) / law.sigma_h


def write_path_csv(path: ObservedPath, fname):
    """CSV format shared with the CLI: header "t,y", then n+1 full-precision rows."""
    t = path.scheme.times
    with open(fname, "w") as fh:
        fh.write("t,y\n")
        for ti, yi in zip(t, path.values):
            fh.write(f"{float(ti)!r},{float(yi)!r}\n")


def read_path_csv(fname, T=None) -> ObservedPath:
    """Read a "t,y" CSV back into an ObservedPath.

    The grid must be equidistant from 0; T defaults to the last time stamp.
    """
    t, y = [], []
    with open(fname) as fh:
        header = fh.readline().strip()
        if header.replace(" ", "") != "t,y":
            raise ValueError(f"expected header 't,y', got {header!r}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            a, b = line.split(",")
            t.append(float(a))
            y.append(float(b))
    t, y = np.asarray(t), np.asarray(y)
    if t.size < 3:
        raise ValueError("path needs at least 3 rows")
    n = t.size - 1
    total = float(T) if T is not None else float(t[-1])
    if total <= 0.0:
        raise ValueError("terminal time must be positive")
    scheme = SamplingScheme(T=total, n=n)
    if not np.allclose(t, scheme.times, rtol=0.0, atol=1e-9 * max(total, 1.0)):
        raise ValueError("time stamps are not an equidistant grid from 0")
    return ObservedPath(values=y, scheme=scheme)
