"""OU process: transition law, exact simulation, residuals, CSV format."""

import math
import os

import numpy as np
import pytest
from scipy import stats

from ssou import stable
from ssou.ou import (
    ModelParams,
    ObservedPath,
    SamplingScheme,
    eta,
    eta_prime,
    euler_residuals,
    exact_residuals,
    read_path_csv,
    simulate_path,
    transition,
    write_path_csv,
    xi_h,
    xi_h_dalpha,
    xi_h_ddalpha,
)
from ssou.stable import StableParams, char_fn, tan_half

THETA = ModelParams(1.0, 2.0, 1.5, 5.0, 0.5)


class TestEta:
    def test_at_zero(self):
        assert eta(0.0) == 1.0

    def test_at_one(self):
        assert eta(1.0) == pytest.approx(1.0 - math.exp(-1.0), rel=1e-14)

    def test_series_matches_direct_branch(self):
        # cross-evaluate the two branches just around the switch point
        for x in (1e-6, -1e-6, 9e-5, 1.1e-4):
            series = 1.0 + x * (-0.5 + x * (1.0 / 6.0 - x / 24.0))
            direct = -math.expm1(-x) / x
            assert eta(x) == pytest.approx(series, abs=1e-12)
            assert eta(x) == pytest.approx(direct, abs=1e-12)

    def test_eta_prime_fd(self):
        for x in (0.0, 0.5, -0.3, 2.0):
            fd = (eta(x + 1e-6) - eta(x - 1e-6)) / 2e-6
            assert eta_prime(x) == pytest.approx(fd, abs=1e-8)


class TestXi:
    def test_small_h_limit(self):
        assert xi_h(1.5, 1e-12) == pytest.approx(tan_half(1.5), abs=1e-3)

    def test_h_one(self):
        assert xi_h(1.7, 1.0) == 0.0

    def test_asymptotic_expansions(self):
        # xi -> t_a + O(h^{1-1/a}); d_alpha xi -> t'_a + O(h^{1-1/a} lbar)
        a, h = 1.5, 1e-3
        t = tan_half(a)
        tp = 0.5 * math.pi * (1.0 + t * t)
        hp = h ** (1.0 - 1.0 / a)
        lbar = math.log(1.0 / h)
        assert abs(xi_h(a, h) - t) < 2.0 * hp
        assert abs(xi_h_dalpha(a, h) - tp) < 2.0 * hp * lbar * abs(t)

    def test_derivatives_match_fd(self):
        a, h, s = 1.5, 1e-3, 1e-6
        fd1 = (xi_h(a + s, h) - xi_h(a - s, h)) / (2 * s)
        assert xi_h_dalpha(a, h) == pytest.approx(fd1, rel=1e-7)
        fd2 = (xi_h_dalpha(a + s, h) - xi_h_dalpha(a - s, h)) / (2 * s)
        assert xi_h_ddalpha(a, h) == pytest.approx(fd2, rel=1e-6)


class TestTransition:
    def test_lambda_zero_is_levy_increment(self):
        h = 0.01
        law = transition(ModelParams(0.0, 2.0, 1.5, 5.0, 0.5), h)
        assert law.sigma_h == pytest.approx(5.0 * h ** (2.0 / 3.0), rel=1e-14)
        assert law.mu_h == pytest.approx(
            0.5 * 5.0 * (h ** (2.0 / 3.0) - h) * tan_half(1.5), rel=1e-14)
        assert law.decay == 1.0
        assert law.drift_term == pytest.approx(2.0 * h, rel=1e-14)

    def test_symmetric_case_no_shift(self):
        law = transition(ModelParams(2.0, 1.0, 1.5, 5.0, 0.0), 0.01)
        assert law.mu_h == 0.0

    def test_levy_integral_cf_oracle(self):
        # log CF of sigma * int exp(-lam(h-s)) dJ via numeric quadrature in s
        theta, h = ModelParams(2.0, 0.0, 1.5, 5.0, 0.5), 0.01
        law = transition(theta, h)
        t = tan_half(theta.alpha)
        p = StableParams(theta.alpha, theta.beta, law.sigma_h, law.mu_h)
        for u in (0.3, 1.0, -2.0, 5.0):
            s = np.linspace(0.0, h, 20_001)
            v = theta.sigma * np.exp(-theta.lam * (h - s)) * u
            av = np.abs(v)
            integrand = -av ** theta.alpha * (
                1.0 + 1j * theta.beta * np.sign(v) * t * (av ** (1.0 - theta.alpha) - 1.0))
            lhs = np.trapezoid(integrand, s)
            rhs = np.log(char_fn(p, u))
            assert abs(lhs - rhs) < 1e-10

    def test_alpha_one_branch_continuous(self):
        l1 = transition(ModelParams(2.0, 0.0, 1.0, 5.0, 0.5), 0.01)
        l1e = transition(ModelParams(2.0, 0.0, 1.0 + 1e-7, 5.0, 0.5), 0.01)
        assert l1.mu_h == pytest.approx(l1e.mu_h, rel=1e-5)
        assert l1.sigma_h == pytest.approx(l1e.sigma_h, rel=1e-6)

    @pytest.mark.parametrize("theta", [
        THETA, ModelParams(-0.7, 1.0, 1.2, 2.0, -0.4), ModelParams(3.0, 0.0, 1.8, 1.0, 0.9),
    ])
    def test_chapman_kolmogorov_cf_identity(self, theta):
        # one 2h-step equals two composed h-steps, as characteristic functions
        h = 0.05
        law1 = transition(theta, h)
        law2 = transition(theta, 2.0 * h)
        # scale identity
        assert law2.sigma_h ** theta.alpha == pytest.approx(
            law1.sigma_h ** theta.alpha * (1.0 + math.exp(-theta.lam * theta.alpha * h)),
            rel=1e-12)
        a = law1.decay
        noise1 = StableParams(theta.alpha, theta.beta, law1.sigma_h, law1.mu_h)
        scaled = StableParams(theta.alpha, theta.beta, a * law1.sigma_h, a * law1.mu_h)
        noise2 = StableParams(theta.alpha, theta.beta, law2.sigma_h, law2.mu_h)
        u = np.array([-3.0, -1.0, -0.2, 0.4, 1.7, 4.0])
        # two-step location: a*(b + xi1) + b + xi2 with b the one-step drift term
        loc_two = (1.0 + a) * law1.drift_term
        cf_two = char_fn(scaled, u) * char_fn(noise1, u) * np.exp(1j * loc_two * u)
        cf_one = char_fn(noise2, u) * np.exp(1j * law2.drift_term * u)
        assert np.max(np.abs(cf_two - cf_one)) < 1e-10

    def test_h_positive_required(self):
        with pytest.raises(ValueError):
            transition(THETA, 0.0)


class TestSimulate:
    def test_noiseless_matches_ode(self):
        sch = SamplingScheme(T=1.0, n=1000)
        th = ModelParams(1.0, 2.0, 1.5, 1e-12, 0.5)
        p = simulate_path(th, 3.0, sch, np.random.default_rng(5))
        t = sch.times
        ode = np.exp(-t) * 3.0 + 2.0 * (1.0 - np.exp(-t))
        assert np.max(np.abs(p.values - ode)) < 1e-6

    def test_deterministic_given_seed(self):
        sch = SamplingScheme(T=1.0, n=500)
        p1 = simulate_path(THETA, 0.0, sch, np.random.default_rng(77))
        p2 = simulate_path(THETA, 0.0, sch, np.random.default_rng(77))
        assert np.array_equal(p1.values, p2.values)

    def test_one_step_increments_match_transition_cf(self):
        # regenerate many one-step transitions from a fixed state
        th, h = THETA, 0.0005
        law = transition(th, h)
        rng = np.random.default_rng(123)
        y0 = 1.7
        noise = stable.sample(StableParams(th.alpha, th.beta, law.sigma_h, law.mu_h), 10 ** 5, rng)
        y1 = law.decay * y0 + law.drift_term + noise
        center = law.decay * y0 + law.drift_term
        us = np.array([-2.0, -0.5, 0.5, 2.0]) / law.sigma_h
        emp = np.array([np.mean(np.exp(1j * u * y1)) for u in us])
        thr = char_fn(StableParams(th.alpha, th.beta, law.sigma_h, center + law.mu_h), us)
        assert np.max(np.abs(emp - thr)) < 0.02

    def test_stationary_law_moment(self):
        # at t = 20/lambda the marginal is near the stationary law
        th = ModelParams(1.0, 2.0, 1.5, 5.0, 0.5)
        a, sg, b, lam = th.alpha, th.sigma, th.beta, th.lam
        sig_inf = sg * (1.0 / (lam * a)) ** (1.0 / a)
        mu_inf = b * sg * ((1.0 / (lam * a)) ** (1.0 / a) - 1.0 / lam) * tan_half(a)
        target = StableParams(a, b, sig_inf, th.mu / lam + mu_inf)
        rng = np.random.default_rng(2024)
        finals = np.empty(4000)
        sch = SamplingScheme(T=20.0, n=400)
        for k in range(finals.size):
            finals[k] = simulate_path(th, 0.0, sch, rng).values[-1]
        q = 0.2
        emp = np.mean(np.abs(finals) ** q)
        ref = stable.sample(target, 10 ** 6, np.random.default_rng(5))
        ref_m = np.mean(np.abs(ref) ** q)
        se = np.std(np.abs(finals) ** q) / math.sqrt(finals.size)
        assert abs(emp - ref_m) < 4.0 * se


class TestResiduals:
    def test_exact_residuals_are_standard_iid(self):
        sch = SamplingScheme(T=1.0, n=2000)
        p = simulate_path(THETA, 0.0, sch, np.random.default_rng(8))
        eps = exact_residuals(THETA, p)
        us = np.array([-1.0, -0.5, 0.5, 1.0])
        emp = np.array([np.mean(np.exp(1j * u * eps)) for u in us])
        thr = char_fn(StableParams(THETA.alpha, THETA.beta, 1.0, 0.0), us)
        assert np.max(np.abs(emp - thr)) < 3.0 / math.sqrt(sch.n)

    def test_ks_against_stable_cdf(self):
        # KS at the 0.1% level on n=5000 exact residuals
        sch = SamplingScheme(T=1.0, n=5000)
        p = simulate_path(THETA, 0.0, sch, np.random.default_rng(15))
        eps = exact_residuals(THETA, p)
        res = stats.kstest(eps, lambda x: stable.cdf(THETA.alpha, THETA.beta, x))
        assert res.pvalue > 0.001

    def test_lambda_zero_euler_equals_exact(self):
        th0 = ModelParams(0.0, 2.0, 1.5, 5.0, 0.5)
        p = simulate_path(th0, 0.0, SamplingScheme(T=1.0, n=500), np.random.default_rng(3))
        assert np.allclose(euler_residuals(th0, p), exact_residuals(th0, p),
                           rtol=1e-12, atol=1e-12)

    def test_beta_zero_lambda_zero_collapse(self):
        th0 = ModelParams(0.0, 2.0, 1.5, 5.0, 0.0)
        sch = SamplingScheme(T=1.0, n=300)
        p = simulate_path(th0, 0.0, sch, np.random.default_rng(4))
        h = sch.h
        dj = (np.diff(p.values) - 2.0 * h) / 5.0  # recover Delta_j J
        eps = euler_residuals(th0, p)
        assert np.allclose(eps, dj * h ** (-1.0 / 1.5), rtol=1e-12)

    def test_mu_shift_linearity(self):
        p = simulate_path(THETA, 0.0, SamplingScheme(T=1.0, n=200), np.random.default_rng(5))
        delta = 0.7
        th2 = ModelParams(THETA.lam, THETA.mu + delta, THETA.alpha, THETA.sigma, THETA.beta)
        h = p.scheme.h
        shift = delta * h ** (1.0 - 1.0 / THETA.alpha) / THETA.sigma
        assert np.allclose(euler_residuals(th2, p), euler_residuals(THETA, p) - shift,
                           rtol=1e-10, atol=1e-12)

    def test_single_step_zero_residual(self):
        th, h = THETA, 0.01
        law = transition(th, h)
        y0 = 1.0
        y1 = law.decay * y0 + law.drift_term + law.mu_h
        # n=2 path with the second step irrelevant for the first residual
        y2 = y1
        path = ObservedPath(values=np.array([y0, y1, y2]), scheme=SamplingScheme(T=0.02, n=2))
        assert exact_residuals(th, path)[0] == pytest.approx(0.0, abs=1e-14)

    def test_euler_exact_gap_order_h(self):
        gaps = []
        for n in (500, 1000, 2000, 4000):
            p = simulate_path(THETA, 0.0, SamplingScheme(T=1.0, n=n), np.random.default_rng(6))
            gaps.append(np.mean(np.abs(euler_residuals(THETA, p) - exact_residuals(THETA, p))))
        gaps = np.array(gaps)
        assert np.all(np.diff(gaps) < 0.0)
        # O(h): halving h roughly halves the gap
        ratios = gaps[:-1] / gaps[1:]
        assert np.all(ratios > 1.5)


class TestCsv:
    def test_roundtrip_bitwise(self, tmp_path):
        p = simulate_path(THETA, 0.0, SamplingScheme(T=1.0, n=100), np.random.default_rng(7))
        fn = tmp_path / "path.csv"
        write_path_csv(p, fn)
        back = read_path_csv(fn)
        assert np.array_equal(back.values, p.values)
        assert back.scheme == p.scheme

    def test_header_enforced(self, tmp_path):
        fn = tmp_path / "bad.csv"
        fn.write_text("a,b\n0.0,1.0\n")
        with pytest.raises(ValueError):
            read_path_csv(fn)

    def test_grid_enforced(self, tmp_path):
        fn = tmp_path / "bad.csv"
        fn.write_text("t,y\n0.0,1.0\n0.5,1.0\n0.7,1.0\n")
        with pytest.raises(ValueError):
            read_path_csv(fn)


class TestTypes:
    def test_scheme_invariants(self):
        sch = SamplingScheme(T=2.0, n=4)
        assert sch.h == 0.5
        assert sch.lbar == math.log(2.0)
        with pytest.raises(ValueError):
            SamplingScheme(T=0.0, n=10)
        with pytest.raises(ValueError):
            SamplingScheme(T=1.0, n=1)

    def test_path_invariants(self):
        with pytest.raises(ValueError):
            ObservedPath(values=np.ones(5), scheme=SamplingScheme(T=1.0, n=5))
        with pytest.raises(ValueError):
            ObservedPath(values=np.array([0.0, np.inf, 1.0]), scheme=SamplingScheme(T=1.0, n=2))

    def test_model_params_estimation_range(self):
        with pytest.raises(ValueError):
            ModelParams(0.0, 0.0, 2.3, 1.0, 0.0)
        with pytest.raises(ValueError):
            ModelParams(0.0, 0.0, 1.5, 1.0, 1.0)
        assert ModelParams(0.0, 0.0, 0.9, 1.0, 0.5).in_estimation_range() is False
