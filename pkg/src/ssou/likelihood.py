"""Exact log-likelihood, Euler quasi-likelihood, analytic gradients and Hessians."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import stable
from .ou import ModelParams, ObservedPath, transition, euler_residuals, exact_residuals, xi_h, xi_h_dalpha, xi_h_ddalpha

__all__ = ["ScoreKernels", "ObjectiveEval", "score_kernels", "quasi_loglik", "exact_loglik"]

GRAD_FD_STEP = 1e-5
HESS_FD_STEP = 1e-4


@dataclass(frozen=True, eq=False)
class ScoreKernels:
    """Log-density derivative ratios at given points.

    psi = d_x log(phi), f = d_alpha log(phi), g = d_beta log(phi), and the
    x-derivative of each.
    """

    psi: np.ndarray
    f: np.ndarray
    g: np.ndarray
    psi_prime: np.ndarray
    f_prime: np.ndarray
    g_prime: np.ndarray


@dataclass(frozen=True, eq=False)
class ObjectiveEval:
    """Objective value with optional derivatives; ok=False flags an invalid evaluation."""

    value: float
    gradient: np.ndarray | None = None
    hessian: np.ndarray | None = None
    ok: bool = True


_INVALID = ObjectiveEval(value=math.nan, ok=False)


def _in_engine_range(theta: ModelParams):
    return (stable.ALPHA_MIN < theta.alpha < stable.ALPHA_MAX
            and -1.0 < theta.beta < 1.0 and theta.sigma > 0.0
            and math.isfinite(theta.lam) and math.isfinite(theta.mu))


def score_kernels(alpha, beta, x) -> ScoreKernels:
    """psi, f, g and their x-derivatives at points x (vectorized)."""
    d = stable.density(alpha, beta, np.asarray(x, dtype=float),
                       cols=("v", "x", "a", "b", "xx", "xa", "xb"))
    v = d["v"]
    if np.any(v <= 0.0):
        raise ValueError("density vanished; score kernels undefined")
    psi, f, g = d["x"] / v, d["a"] / v, d["b"] / v
    return ScoreKernels(
        psi=psi, f=f, g=g,
        psi_prime=d["xx"] / v - psi * psi,
        f_prime=d["xa"] / v - f * psi,
        g_prime=d["xb"] / v - g * psi,
    )


def _eps_first_derivs(theta, path, eps):
    """Closed-form first partials of the Euler residuals w.r.t. theta."""
    h = path.scheme.h
    lbar = path.scheme.lbar
    a, sg, b = theta.alpha, theta.sigma, theta.beta
    xi = xi_h(a, h)
    xi_a = xi_h_dalpha(a, h)
    hp = h ** (1.0 - 1.0 / a)
    yprev = path.values[:-1]
    shifted = eps + b * xi
    return {
        "lam": hp / sg * yprev,
        "mu": np.full(eps.shape, -hp / sg),
        "alpha": -(lbar / a ** 2) * shifted - b * xi_a,
        "sigma": -shifted / sg,
        "beta": np.full(eps.shape, -xi),
    }


def quasi_loglik(theta: ModelParams, path: ObservedPath, want_derivs=False, hessian=None) -> ObjectiveEval:
    """Euler-type quasi log-likelihood H_n(theta) with analytic gradient.

    hessian: None, "fd" (central differences of the analytic gradient) or
    "analytic" (the closed-form second-derivative catalog).
    """
    if not _in_engine_range(theta):
        return _INVALID
    n = path.scheme.n
    lbar = path.scheme.lbar
    eps = euler_residuals(theta, path)
    if not np.all(np.isfinite(eps)):
        return _INVALID
    cols = ("v",)
    if want_derivs or hessian == "fd":
        cols = ("v", "x", "a", "b")
    if hessian == "analytic":
        cols = ("v", "x", "a", "b", "xx", "xa", "xb", "aa", "ab", "bb")
    d = stable.density(theta.alpha, theta.beta, eps, cols=cols)
    v = d["v"]
    if np.any(v <= 0.0) or not np.all(np.isfinite(v)):
        return _INVALID
    value = float(n * (-math.log(theta.sigma) + lbar / theta.alpha) + np.sum(np.log(v)))
    if not (want_derivs or hessian):
        return ObjectiveEval(value=value)

    grad = None
    if want_derivs or hessian == "fd" or hessian == "analytic":
        psi, f, g = d["x"] / v, d["a"] / v, d["b"] / v
        de = _eps_first_derivs(theta, path, eps)
        a, sg = theta.alpha, theta.sigma
        grad = np.array([
            np.sum(psi * de["lam"]),
            np.sum(psi * de["mu"]),
            np.sum(-lbar / a ** 2 + f + psi * de["alpha"]),
            np.sum(-1.0 / sg + psi * de["sigma"]),
            np.sum(g + psi * de["beta"]),
        ])
        if not np.all(np.isfinite(grad)):
            return _INVALID

    hess = None
    if hessian == "analytic":
        hess = _quasi_hessian_analytic(theta, path, eps, d)
    elif hessian == "fd":
        hess = _quasi_hessian_fd(theta, path)
    if hess is not None and not np.all(np.isfinite(hess)):
        return _INVALID
    return ObjectiveEval(value=value, gradient=grad, hessian=hess)


def _quasi_hessian_analytic(theta, path, eps, d):
    """Closed-form Hessian of H_n from the second-derivative catalog."""
    h = path.scheme.h
    lbar = path.scheme.lbar
    a, sg, b = theta.alpha, theta.sigma, theta.beta
    v = d["v"]
    psi, f, g = d["x"] / v, d["a"] / v, d["b"] / v
    psi_p = d["xx"] / v - psi * psi
    f_p = d["xa"] / v - f * psi          # equals the alpha-partial of psi
    g_p = d["xb"] / v - g * psi          # equals the beta-partial of psi
    f_a = d["aa"] / v - f * f
    g_a = d["ab"] / v - f * g
    g_b = d["bb"] / v - g * g

    xi = xi_h(a, h)
    xi_a = xi_h_dalpha(a, h)
    xi_aa = xi_h_ddalpha(a, h)
    de = _eps_first_derivs(theta, path, eps)
    el, em, ea, es, eb = de["lam"], de["mu"], de["alpha"], de["sigma"], de["beta"]
    shifted = eps + b * xi
    la2 = lbar / a ** 2
    e_la = -la2 * el
    e_ls = -el / sg
    e_ma = -la2 * em
    e_ms = -em / sg
    e_aa = (2.0 * lbar / a ** 3 + lbar ** 2 / a ** 4) * shifted - b * xi_aa
    e_as = la2 * shifted / sg
    e_ab = -xi_a
    e_ss = 2.0 * shifted / sg ** 2

    n = path.scheme.n
    H = np.empty((5, 5))
    H[0, 0] = np.sum(psi_p * el * el)
    H[1, 1] = np.sum(psi_p * em * em)
    H[2, 2] = np.sum(2.0 * lbar / a ** 3 + f_a + 2.0 * f_p * ea + psi_p * ea * ea + psi * e_aa)
    H[3, 3] = n / sg ** 2 + np.sum(psi_p * es * es + psi * e_ss)
    H[4, 4] = np.sum(g_b + 2.0 * g_p * eb + psi_p * eb * eb)
    H[0, 1] = np.sum(psi_p * el * em)
    H[0, 2] = np.sum((f_p + psi_p * ea) * el + psi * e_la)
    H[0, 3] = np.sum(psi_p * el * es + psi * e_ls)
    H[0, 4] = np.sum(el * (g_p + psi_p * eb))
    H[1, 2] = np.sum((f_p + psi_p * ea) * em + psi * e_ma)
    H[1, 3] = np.sum(psi_p * em * es + psi * e_ms)
    H[1, 4] = np.sum(em * (g_p + psi_p * eb))
    H[2, 3] = np.sum(f_p * es + psi_p * ea * es + psi * e_as)
    H[2, 4] = np.sum((g_p + psi_p * eb) * ea + g_a + f_p * eb + psi * e_ab)
    H[3, 4] = np.sum(g_p * es + psi_p * es * eb)
    iu = np.triu_indices(5, 1)
    H[(iu[1], iu[0])] = H[iu]
    return H


def _grad_many(thetas, path):
    """Analytic H_n gradients at several thetas, batching density calls by (alpha, beta)."""
    groups = {}
    for i, th in enumerate(thetas):
        groups.setdefault((th.alpha, th.beta), []).append(i)
    grads = [None] * len(thetas)
    lbar = path.scheme.lbar
    for (a, b), idxs in groups.items():
        eps_list = [euler_residuals(thetas[i], path) for i in idxs]
        stacked = np.concatenate(eps_list)
        if not np.all(np.isfinite(stacked)):
            return None
        d = stable.density(a, b, stacked, cols=("v", "x", "a", "b"))
        v = d["v"]
        if np.any(v <= 0.0):
            return None
        psi, f, g = d["x"] / v, d["a"] / v, d["b"] / v
        pos = 0
        for eps, i in zip(eps_list, idxs):
            th = thetas[i]
            sl = slice(pos, pos + eps.size)
            pos += eps.size
            de = _eps_first_derivs(th, path, eps)
            grads[i] = np.array([
                np.sum(psi[sl] * de["lam"]),
                np.sum(psi[sl] * de["mu"]),
                np.sum(-lbar / th.alpha ** 2 + f[sl] + psi[sl] * de["alpha"]),
                np.sum(-1.0 / th.sigma + psi[sl] * de["sigma"]),
                np.sum(g[sl] + psi[sl] * de["beta"]),
            ])
    return grads


def _fd_steps(theta, rel):
    return rel * np.maximum(1.0, np.abs(theta.as_array()))


def _shift(theta, delta):
    return ModelParams.from_array(theta.as_array() + delta)


def _quasi_hessian_fd(theta, path):
    """Central finite differences of the analytic gradient."""
    s = _fd_steps(theta, HESS_FD_STEP)
    thetas = []
    for k in range(5):
        for sign in (1.0, -1.0):
            d = np.zeros(5)
            d[k] = sign * s[k]
            thetas.append(_shift(theta, d))
    grads = _grad_many(thetas, path)
    if grads is None or any(gr is None or not np.all(np.isfinite(gr)) for gr in grads):
        return np.full((5, 5), np.nan)
    H = np.empty((5, 5))
    for k in range(5):
        H[k] = (grads[2 * k] - grads[2 * k + 1]) / (2.0 * s[k])
    return 0.5 * (H + H.T)


def _exact_value_many(thetas, path):
    """Exact log-likelihood values at several thetas, batching by (alpha, beta)."""
    n = path.scheme.n
    groups = {}
    for i, th in enumerate(thetas):
        groups.setdefault((th.alpha, th.beta), []).append(i)
    values = [None] * len(thetas)
    for (a, b), idxs in groups.items():
        res_list = []
        sig_h = []
        for i in idxs:
            law = transition(thetas[i], path.scheme.h)
            y = path.values
            res_list.append((y[1:] - law.decay * y[:-1] - law.drift_term - law.mu_h) / law.sigma_h)
            sig_h.append(law.sigma_h)
        stacked = np.concatenate(res_list)
        if not np.all(np.isfinite(stacked)):
            return None
        v = stable.density(a, b, stacked, cols=("v",))["v"]
        if np.any(v <= 0.0) or not np.all(np.isfinite(v)):
            return None
        pos = 0
        for r, sh, i in zip(res_list, sig_h, idxs):
            sl = slice(pos, pos + r.size)
            pos += r.size
            values[i] = float(-n * math.log(sh) + np.sum(np.log(v[sl])))
    return values


def exact_loglik(theta: ModelParams, path: ObservedPath, want_derivs=False, hessian=None) -> ObjectiveEval:
    """Exact log-likelihood l_n(theta) built on the one-step transition law.

    Derivatives are by central finite differences of the value (there is no
    analytic catalog for the exact likelihood); hessian: None or "fd".
    """
    if not _in_engine_range(theta):
        return _INVALID
    if hessian not in (None, "fd"):
        raise ValueError("exact_loglik supports hessian=None or 'fd'")
    if want_derivs:
        s = _fd_steps(theta, GRAD_FD_STEP)
        thetas = [theta]
        for k in range(5):
            for sign in (1.0, -1.0):
                d = np.zeros(5)
                d[k] = sign * s[k]
                thetas.append(_shift(theta, d))
        v = _exact_value_many(thetas, path)
        if v is None:
            return _INVALID
        value = v[0]
        grad = np.array([(v[1 + 2 * k] - v[2 + 2 * k]) / (2.0 * s[k]) for k in range(5)])
    else:
        vals = _exact_value_many([theta], path)
        if vals is None:
            return _INVALID
        value = vals[0]
        grad = None

    hess = None
    if hessian == "fd":
        s = _fd_steps(theta, HESS_FD_STEP)
        thetas = [theta]
        for k in range(5):
            for sign in (1.0, -1.0):
                d = np.zeros(5)
                d[k] = sign * s[k]
                thetas.append(_shift(theta, d))
        pairs = [(k, j) for k in range(5) for j in range(k + 1, 5)]
        for k, j in pairs:
            for sk, sj in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                d = np.zeros(5)
                d[k], d[j] = sk * s[k], sj * s[j]
                thetas.append(_shift(theta, d))
        v = _exact_value_many(thetas, path)
        if v is None:
            return _INVALID
        hess = np.empty((5, 5))
        f0 = v[0]
        for k in range(5):
            hess[k, k] = (v[1 + 2 * k] - 2.0 * f0 + v[2 + 2 * k]) / s[k] ** 2
        off = 11
        for (k, j) in pairs:
            fpp, fpm, fmp, fmm = v[off:off + 4]
            off += 4
            hess[k, j] = hess[j, k] = (fpp - fpm - fmp + fmm) / (4.0 * s[k] * s[j])
    return ObjectiveEval(value=value, gradient=grad, hessian=hess)
