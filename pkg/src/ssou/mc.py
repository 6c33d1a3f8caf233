"""Parallel Monte Carlo study harness with deterministic per-replication seeding."""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .inference import normalize_estimates, rate_matrix, studentize
from .moments import MomentConfig
from .optim import OptimizerConfig
from .ou import ModelParams, SamplingScheme, simulate_path
from .pipeline import fit, fit_timescale

__all__ = ["MCConfig", "MCReport", "replication_rng", "run_mc"]

PARAM_NAMES = ("lambda", "mu", "alpha", "sigma", "beta")


@dataclass(frozen=True)
class MCConfig:
    theta: ModelParams
    T: float
    n_list: tuple
    L: int
    q: float = 0.2
    seed: int = 0
    methods: tuple = ("moment", "qmle", "mle")
    threads: int = 1
    timescale: bool = False
    y0: float = 0.0

    def __post_init__(self):
        if self.L < 1:
            raise ValueError("L must be >= 1")
        if not self.n_list or any(int(n) < 50 for n in self.n_list):
            raise ValueError("every n must be >= 50")
        methods = ("timescale",) if self.timescale else tuple(self.methods)
        if not methods:
            raise ValueError("methods must be nonempty")
        bad = [m for m in methods if m not in ("moment", "qmle", "mle", "timescale")]
        if bad:
            raise ValueError(f"unknown methods {bad}")
        object.__setattr__(self, "methods", methods)
        object.__setattr__(self, "n_list", tuple(int(n) for n in self.n_list))


@dataclass(frozen=True)
class MCReport:
    summary: list          # dicts: method, param, n, mean, sd, time_s
    replications: list     # dicts: rep, n, method, converged, runtime_s, estimates...
    normalized: list       # dicts: rep, n, param, method, value (rate-normalized errors)
    failures: int
    total: int


def replication_rng(seed, n, rep):
    """The documented stream derivation: SeedSequence([seed, n, rep]).

    Each replication draws from an independent stream, so results do not
    depend on scheduling or thread count.
    """
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(n), int(rep)]))


def _run_one(cfg: MCConfig, n, rep):
    rng = replication_rng(cfg.seed, n, rep)
    scheme = SamplingScheme(T=cfg.T, n=int(n))
    path = simulate_path(cfg.theta, cfg.y0, scheme, rng)
    mom_cfg = MomentConfig(q=cfg.q)
    opt_cfg = OptimizerConfig()
    rows = []
    for method in cfg.methods:
        t0 = time.perf_counter()
        try:
            if method == "timescale":
                res = fit_timescale(path, joint=True, moment_config=mom_cfg, opt_config=opt_cfg)
                theta_hat, converged = res.theta_back, res.converged
                stud = None
            else:
                res = fit(path, method, moment_config=mom_cfg, opt_config=opt_cfg,
                          **({} if method == "moment" else {"theta0": cfg.theta}))
                theta_hat, converged = res.theta_hat, res.converged
                stud = res.studentized
        except Exception as exc:  # failure isolation: a broken replication yields no rows
            rows.append({"rep": rep, "n": n, "method": method, "failed": True,
                         "error": f"{type(exc).__name__}: {exc}"})
            continue
        dt = time.perf_counter() - t0
        row = {"rep": rep, "n": n, "method": method, "failed": False,
               "converged": bool(converged), "runtime_s": dt}
        est = theta_hat.as_array()
        norm = normalize_estimates(theta_hat, cfg.theta, scheme)
        for k, name in enumerate(PARAM_NAMES):
            row[name] = float(est[k])
            row[f"norm_{name}"] = float(norm[k])
            row[f"stud_{name}"] = float(stud[k]) if stud is not None else math.nan
        rows.append(row)
    return rows


def _run_one_star(args):
    return _run_one(*args)


def run_mc(cfg: MCConfig, progress=None) -> MCReport:
    """Run the full study: L replications per n, parallel over replications."""
    tasks = [(cfg, n, rep) for n in cfg.n_list for rep in range(cfg.L)]
    results = []
    if cfg.threads > 1:
        with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
            for i, rows in enumerate(pool.map(_run_one_star, tasks, chunksize=1)):
                results.extend(rows)
                if progress:
                    progress(i + 1, len(tasks))
    else:
        for i, t in enumerate(tasks):
            results.extend(_run_one(*t))
            if progress:
                progress(i + 1, len(tasks))

    results.sort(key=lambda r: (r["n"], r["rep"], cfg.methods.index(r["method"])))
    ok_rows = [r for r in results if not r["failed"]]
    failures = len(results) - len(ok_rows)

    summary = []
    for n in cfg.n_list:
        for method in cfg.methods:
            sel = [r for r in ok_rows if r["n"] == n and r["method"] == method]
            if not sel:
                continue
            times = np.array([r["runtime_s"] for r in sel])
            for name in PARAM_NAMES:
                vals = np.array([r[name] for r in sel])
                summary.append({"method": method, "param": name, "n": n,
                                "mean": float(np.mean(vals)),
                                "sd": float(np.std(vals, ddof=1)) if vals.size > 1 else 0.0,
                                "time_s": float(np.mean(times))})
    normalized = []
    for r in ok_rows:
        for name in PARAM_NAMES:
            normalized.append({"rep": r["rep"], "n": r["n"], "param": name,
                               "method": r["method"], "value": r[f"norm_{name}"]})
    return MCReport(summary=summary, replications=results, normalized=normalized,
                    failures=failures, total=len(tasks) * len(cfg.methods))
