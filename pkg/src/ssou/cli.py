"""Command-line interface: simulate, estimate, mc, timescale.

Exit codes: 0 ok, 2 bad input, 3 I/O failure, 4 optimizer failure,
5 excessive Monte Carlo failures.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from .errors import NoAscentError
from .mc import MCConfig, PARAM_NAMES, run_mc
from .moments import MomentConfig
from .optim import OptimizerConfig
from .ou import ModelParams, SamplingScheme, read_path_csv, simulate_path, write_path_csv
from .pipeline import fit, fit_timescale

EXIT_OK = 0
EXIT_BAD_INPUT = 2
EXIT_IO = 3
EXIT_OPTIMIZER = 4
EXIT_MC_FAILURES = 5


def _fmt(x):
    """JSON-ready value; floats carry 17 significant digits."""
    if isinstance(x, float):
        if math.isnan(x):
            return None
        return float(f"{x:.17g}")
    if isinstance(x, np.floating):
        return _fmt(float(x))
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.ndarray):
        return [_fmt(v) for v in x.tolist()]
    if isinstance(x, dict):
        return {k: _fmt(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_fmt(v) for v in x]
    return x


def _theta_dict(theta: ModelParams):
    return {"lambda": theta.lam, "mu": theta.mu, "alpha": theta.alpha,
            "sigma": theta.sigma, "beta": theta.beta}


def _emit_json(obj, out):
    text = json.dumps(_fmt(obj), indent=2)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def parse_kv_file(fname):
    """Flat config grammar: `key = value` lines, # comments, blank lines."""
    out = {}
    with open(fname) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{fname}:{lineno}: expected 'key = value'")
            key, val = (s.strip() for s in line.split("=", 1))
            out[key] = val
    return out


def _build_parser():
    p = argparse.ArgumentParser(prog="ssou",
                                description="Skewed stable Ornstein-Uhlenbeck: simulation and inference")
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="simulate a path and write a t,y CSV")
    sim.add_argument("--lambda", dest="lam", type=float, required=True)
    sim.add_argument("--mu", type=float, required=True)
    sim.add_argument("--alpha", type=float, required=True)
    sim.add_argument("--sigma", type=float, required=True)
    sim.add_argument("--beta", type=float, required=True)
    sim.add_argument("--y0", type=float, default=0.0)
    sim.add_argument("--T", type=float, required=True)
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True)

    est = sub.add_parser("estimate", help="estimate parameters from a path CSV")
    est.add_argument("--method", choices=("moment", "qmle", "mle"), required=True)
    est.add_argument("--input", required=True)
    est.add_argument("--T", type=float, default=None,
                     help="terminal time (defaults to the last time stamp)")
    est.add_argument("--q", type=float, default=0.2)
    est.add_argument("--config", default=None, help="key=value optimizer overrides")
    est.add_argument("--out", default=None, help="write the JSON report here instead of stdout")

    mc = sub.add_parser("mc", help="run a Monte Carlo study from a config file")
    mc.add_argument("--config", required=True)
    mc.add_argument("--out", required=True, help="output directory")
    mc.add_argument("--threads", type=int, default=None)

    ts = sub.add_parser("timescale", help="time-scale reparametrized estimation (unit interval)")
    ts.add_argument("--input", required=True)
    ts.add_argument("--q", type=float, default=0.2)
    ts.add_argument("--joint", action=argparse.BooleanOptionalAction, default=True,
                    help="joint 5-parameter refinement after the stepwise fit")
    ts.add_argument("--out", default=None)
    return p


def _cmd_simulate(args):
    try:
        theta = ModelParams(args.lam, args.mu, args.alpha, args.sigma, args.beta)
        scheme = SamplingScheme(T=args.T, n=args.n)
    except (ValueError, TypeError) as exc:
        print(f"ssou simulate: invalid parameters: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    rng = np.random.default_rng(np.random.SeedSequence([args.seed]))
    path = simulate_path(theta, args.y0, scheme, rng)
    try:
        write_path_csv(path, args.out)
    except OSError as exc:
        print(f"ssou simulate: cannot write {args.out}: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def _opt_config_from(overrides):
    kw = {}
    if "grad_tol" in overrides:
        kw["grad_tol"] = float(overrides["grad_tol"])
    if "step_tol" in overrides:
        kw["step_tol"] = float(overrides["step_tol"])
    if "max_iters" in overrides:
        kw["max_iters"] = int(overrides["max_iters"])
    if "init_lambda" in overrides or "init_mu" in overrides:
        kw["init_drift"] = (float(overrides.get("init_lambda", 2.0)),
                            float(overrides.get("init_mu", 3.0)))
    return OptimizerConfig(**kw)


def _cmd_estimate(args):
    overrides = {}
    if args.config:
        try:
            overrides = parse_kv_file(args.config)
        except OSError as exc:
            print(f"ssou estimate: cannot read config: {exc}", file=sys.stderr)
            return EXIT_IO
        except ValueError as exc:
            print(f"ssou estimate: {exc}", file=sys.stderr)
            return EXIT_BAD_INPUT
    try:
        path = read_path_csv(args.input, T=args.T)
    except OSError as exc:
        print(f"ssou estimate: cannot read {args.input}: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"ssou estimate: malformed CSV: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    try:
        mom_cfg = MomentConfig(q=float(overrides.get("q", args.q)))
        opt_cfg = _opt_config_from(overrides)
    except ValueError as exc:
        print(f"ssou estimate: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT

    code = EXIT_OK
    try:
        res = fit(path, args.method, moment_config=mom_cfg,
                  **({} if args.method == "moment" else {"opt_config": opt_cfg}))
        report = {
            "method": res.method,
            "theta_hat": _theta_dict(res.theta_hat),
            "loglik": res.loglik,
            "converged": res.converged,
            "iters": res.iterations,
            "stderr": dict(zip(PARAM_NAMES, res.stderr)) if res.stderr is not None else None,
            "info_min_eig": res.min_eigenvalue,
            "seed": None,
            "runtime_s": res.runtime_s,
            "config": {"method": args.method, "input": os.path.abspath(args.input),
                       "T": path.scheme.T, "n": path.scheme.n, "q": mom_cfg.q,
                       **overrides},
        }
        if not res.converged:
            code = EXIT_OPTIMIZER
    except NoAscentError as exc:
        report = {"method": args.method, "theta_hat": None, "loglik": None,
                  "converged": False, "error": str(exc),
                  "config": {"method": args.method, "input": os.path.abspath(args.input)}}
        code = EXIT_OPTIMIZER
    try:
        _emit_json(report, args.out)
    except OSError as exc:
        print(f"ssou estimate: cannot write {args.out}: {exc}", file=sys.stderr)
        return EXIT_IO
    return code


def _parse_mc_config(raw):
    theta = ModelParams(float(raw["lambda"]), float(raw["mu"]), float(raw["alpha"]),
                        float(raw["sigma"]), float(raw["beta"]))
    n_list = tuple(int(s) for s in raw["n"].replace(",", " ").split())
    methods = tuple(s for s in raw.get("methods", "moment qmle mle").replace(",", " ").split())
    return MCConfig(
        theta=theta, T=float(raw["T"]), n_list=n_list, L=int(raw["L"]),
        q=float(raw.get("q", 0.2)), seed=int(raw.get("seed", 0)), methods=methods,
        threads=int(raw.get("threads", 1)),
        timescale=raw.get("timescale", "false").lower() in ("1", "true", "yes"),
        y0=float(raw.get("y0", 0.0)),
    )


def _write_csv(fname, rows, columns):
    with open(fname, "w") as fh:
        fh.write(",".join(columns) + "\n")
        for r in rows:
            out = []
            for c in columns:
                v = r.get(c)
                if isinstance(v, float):
                    out.append(repr(v))
                else:
                    out.append("" if v is None else str(v))
            fh.write(",".join(out) + "\n")


def _cmd_mc(args):
    try:
        raw = parse_kv_file(args.config)
        cfg = _parse_mc_config(raw)
    except OSError as exc:
        print(f"ssou mc: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    except (KeyError, ValueError) as exc:
        print(f"ssou mc: bad config: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    if args.threads is not None:
        cfg = MCConfig(theta=cfg.theta, T=cfg.T, n_list=cfg.n_list, L=cfg.L, q=cfg.q,
                       seed=cfg.seed, methods=cfg.methods, threads=max(1, args.threads),
                       timescale=cfg.timescale, y0=cfg.y0)

    def progress(done, total):
        if done % 10 == 0 or done == total:
            print(f"ssou mc: {done}/{total} replications", file=sys.stderr)

    report = run_mc(cfg, progress=progress)
    try:
        os.makedirs(args.out, exist_ok=True)
        _write_csv(os.path.join(args.out, "summary.csv"), report.summary,
                   ("method", "param", "n", "mean", "sd", "time_s"))
        rep_cols = (["rep", "n", "method", "failed", "converged", "runtime_s"]
                    + list(PARAM_NAMES) + [f"stud_{p}" for p in PARAM_NAMES]
                    + ["error"])
        _write_csv(os.path.join(args.out, "replications.csv"), report.replications, rep_cols)
        _write_csv(os.path.join(args.out, "normalized.csv"), report.normalized,
                   ("rep", "param", "method", "n", "value"))
    except OSError as exc:
        print(f"ssou mc: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_IO
    frac = report.failures / max(1, report.total)
    print(f"ssou mc: {report.failures}/{report.total} replication fits failed", file=sys.stderr)
    return EXIT_MC_FAILURES if frac > 0.2 else EXIT_OK


def _cmd_timescale(args):
    try:
        path = read_path_csv(args.input, T=1.0)
    except OSError as exc:
        print(f"ssou timescale: cannot read {args.input}: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"ssou timescale: malformed CSV: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    try:
        mom_cfg = MomentConfig(q=args.q)
    except ValueError as exc:
        print(f"ssou timescale: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    code = EXIT_OK
    try:
        res = fit_timescale(path, joint=args.joint, moment_config=mom_cfg)
        report = {
            "method": "timescale",
            "theta_tilde": _theta_dict(res.theta_tilde),
            "tau_hat": res.tau_hat,
            "theta_hat": _theta_dict(res.theta_back),
            "step1": {"alpha": res.step1[0], "sigma": res.step1[1], "beta": res.step1[2]},
            "loglik": res.loglik,
            "converged": res.converged,
            "iters": res.iterations,
            "runtime_s": res.runtime_s,
            "config": {"input": os.path.abspath(args.input), "q": args.q, "joint": args.joint},
        }
        if not res.converged:
            code = EXIT_OPTIMIZER
    except NoAscentError as exc:
        report = {"method": "timescale", "converged": False, "error": str(exc)}
        code = EXIT_OPTIMIZER
    try:
        _emit_json(report, args.out)
    except OSError as exc:
        print(f"ssou timescale: cannot write {args.out}: {exc}", file=sys.stderr)
        return EXIT_IO
    return code


def main(argv=None):
    args = _build_parser().parse_args(argv)
    handlers = {"simulate": _cmd_simulate, "estimate": _cmd_estimate,
                "mc": _cmd_mc, "timescale": _cmd_timescale}
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
