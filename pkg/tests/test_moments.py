"""Moment-based preliminary estimators of (alpha, sigma, beta)."""

import math

import numpy as np
import pytest

from ssou.errors import InsufficientDataError
from ssou.moments import (
    MomentConfig,
    centralized_diffs,
    estimate_alpha_sigma,
    estimate_beta,
    estimate_noise_params,
    second_diffs,
)
from ssou.moments_util import bisect_monotone
from ssou.ou import ModelParams, ObservedPath, SamplingScheme, simulate_path
from ssou.stable import StableParams, char_fn, sample, tan_half

THETA = ModelParams(1.0, 2.0, 1.5, 5.0, 0.5)


def _path(values, T=1.0):
    v = np.asarray(values, dtype=float)
    return ObservedPath(values=v, scheme=SamplingScheme(T=T, n=v.size - 1))


class TestDiffs:
    def test_second_diffs_constant(self):
        assert np.all(second_diffs(_path(np.full(10, 3.0))) == 0.0)

    def test_second_diffs_linear(self):
        assert np.all(second_diffs(_path(2.0 * np.arange(10.0))) == 0.0)

    def test_second_diffs_hand(self):
        assert np.array_equal(second_diffs(_path([0.0, 1.0, 3.0, 6.0])), [1.0, 1.0])

    def test_centralized_quadratic(self):
        j = np.arange(12.0)
        assert np.allclose(centralized_diffs(_path(j * j)), 0.0)

    def test_centralized_hand(self):
        assert np.array_equal(centralized_diffs(_path([0.0, 1.0, 3.0, 6.0, 10.0])), [0.0, 0.0])

    def test_centralized_iid_increment_cf(self):
        # Delta^C / ((2+2^a)^{1/a} h^{1/a} sigma) follows the F law
        a, b, sg = 1.5, 0.5, 2.0
        n = 200_000
        sch = SamplingScheme(T=1.0, n=n)
        h = sch.h
        th = ModelParams(0.0, 0.0, a, sg, b)
        p = simulate_path(th, 0.0, sch, np.random.default_rng(12))
        w = centralized_diffs(p) / ((2.0 + 2.0 ** a) ** (1.0 / a) * h ** (1.0 / a) * sg)
        c = (2.0 - 2.0 ** a) / (2.0 + 2.0 ** a)
        law = StableParams(c * b, 1.0, c * b * tan_half(a))
        us = np.array([-1.0, -0.5, 0.5, 1.0])
        # Delta^C overlaps across j; thin to every 3rd for near-independence
        w3 = w[::3]
        emp = np.array([np.mean(np.exp(1j * u * w3)) for u in us])
        assert np.max(np.abs(emp - char_fn(law, us))) < 5.0 / math.sqrt(w3.size)

    def test_insufficient_data(self):
        with pytest.raises(InsufficientDataError):
            second_diffs(_path([0.0, 1.0]))


class TestConfig:
    def test_q_guard(self):
        MomentConfig(q=0.2)
        with pytest.raises(ValueError):
            MomentConfig(q=0.6)
        with pytest.raises(ValueError):
            MomentConfig(q=0.51)
        with pytest.raises(ValueError):
            MomentConfig(q=0.4, alpha_bracket=(1.2, 1.4), beta_bracket=(0.5, -0.5))


class TestAlphaSigma:
    def test_synthetic_root_recovery(self):
        # feed the exact theoretical ratio: bisection must return the plugged alpha
        from ssou.moments import _m1_ratio
        cfg = MomentConfig()
        target = _m1_ratio(1.5, cfg.q)
        root, hit = bisect_monotone(lambda a: _m1_ratio(a, cfg.q) - target,
                                    cfg.alpha_bracket, cfg.root_tol)
        assert hit is None
        assert root == pytest.approx(1.5, abs=1e-9)

    def test_design_consistency(self):
        ests = []
        for r in range(60):
            p = simulate_path(THETA, 0.0, SamplingScheme(T=1.0, n=2000),
                              np.random.default_rng((100, r)))
            a, s, _ = estimate_alpha_sigma(p)
            ests.append((a, s))
        ests = np.array(ests)
        assert abs(ests[:, 0].mean() - 1.5) < 0.1
        assert abs(ests[:, 1].mean() - 5.0) < 1.0

    def test_rate_alpha_sd_shrinks(self):
        # pure noise path (lambda = 0): alpha_hat dispersion falls with n
        th0 = ModelParams(0.0, 0.0, 1.5, 1.0, 0.5)
        sds = []
        for n in (500, 8000):
            vals = [estimate_alpha_sigma(
                simulate_path(th0, 0.0, SamplingScheme(T=1.0, n=n),
                              np.random.default_rng((n, r))))[0] for r in range(60)]
            sds.append(np.std(vals))
        assert sds[1] < sds[0]

    def test_clamp_and_flag(self):
        # a nearly Gaussian-looking path pushes the ratio out of range -> clamp
        rng = np.random.default_rng(0)
        v = np.cumsum(rng.standard_normal(300)) * 0.01
        a, s, diag = estimate_alpha_sigma(_path(v))
        assert 1.001 <= a <= 1.999
        if diag["alpha_bracket_hit"]:
            assert a in (1.001, 1.999)

    def test_insufficient(self):
        with pytest.raises(InsufficientDataError):
            estimate_alpha_sigma(_path([0.0, 1.0, 2.0][:3][:2] + [3.0]))


class TestBeta:
    def test_synthetic_root_recovery(self):
        from ssou.stable import moment_m2
        cfg = MomentConfig()
        q, a = cfg.q, 1.5

        def ratio(b):
            m_abs, m_sgn = moment_m2(q, a, b)
            return m_sgn / m_abs

        target = ratio(0.3)
        root, hit = bisect_monotone(lambda b: ratio(b) - target, cfg.beta_bracket, cfg.root_tol)
        assert hit is None
        assert root == pytest.approx(0.3, abs=1e-9)

    def test_symmetric_generator_centers_at_zero(self):
        th0 = ModelParams(1.0, 2.0, 1.5, 5.0, 0.0)
        L = 60
        vals = []
        for r in range(L):
            p = simulate_path(th0, 0.0, SamplingScheme(T=1.0, n=2000),
                              np.random.default_rng((200, r)))
            b, _ = estimate_beta(p, 1.5)
            vals.append(b)
        vals = np.array(vals)
        assert abs(vals.mean()) < 3.0 * vals.std() / math.sqrt(L)

    def test_design_consistency(self):
        vals = []
        for r in range(60):
            p = simulate_path(THETA, 0.0, SamplingScheme(T=1.0, n=2000),
                              np.random.default_rng((300, r)))
            e = estimate_noise_params(p)
            vals.append(e.beta_hat)
        assert abs(np.mean(vals) - 0.5) < 0.15


class TestInvariances:
    @pytest.fixture(scope="class")
    def base(self):
        return simulate_path(THETA, 0.0, SamplingScheme(T=1.0, n=1024),
                             np.random.default_rng(5))

    def test_scale_equivariance(self, base):
        e0 = estimate_noise_params(base)
        scaled = ObservedPath(values=4.0 * base.values, scheme=base.scheme)
        e1 = estimate_noise_params(scaled)
        assert e1.alpha_hat == pytest.approx(e0.alpha_hat, abs=1e-9)
        assert e1.sigma_hat == pytest.approx(4.0 * e0.sigma_hat, rel=1e-9)
        assert e1.beta_hat == pytest.approx(e0.beta_hat, abs=1e-9)

    def test_drift_insensitivity_bitwise(self, base):
        # on a dyadic grid with values snapped to 2^-20, adding c*t_j is exact
        snapped = np.round(base.values * 2.0 ** 20) / 2.0 ** 20
        p0 = ObservedPath(values=snapped, scheme=base.scheme)
        trend = np.arange(base.scheme.n + 1) * 2.0 ** -10   # c*t_j with c*h = 2^-10
        p1 = ObservedPath(values=snapped + trend, scheme=base.scheme)
        e0, e1 = estimate_noise_params(p0), estimate_noise_params(p1)
        assert e0.alpha_hat == e1.alpha_hat
        assert e0.sigma_hat == e1.sigma_hat
        assert e0.beta_hat == e1.beta_hat

    def test_sign_equivariance(self, base):
        e0 = estimate_noise_params(base)
        neg = ObservedPath(values=-base.values, scheme=base.scheme)
        e1 = estimate_noise_params(neg)
        assert e1.alpha_hat == e0.alpha_hat
        assert e1.sigma_hat == e0.sigma_hat
        assert e1.beta_hat == pytest.approx(-e0.beta_hat, abs=1e-9)
