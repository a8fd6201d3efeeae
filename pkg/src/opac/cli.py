"""Command-line front end: run / sweep / report / certify.

Exit codes: 0 on success, 1 for configuration problems (bad flags, bad config
file, unreadable inputs), 2 when a run or certification aborts at runtime.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .harness import (
    build_mdp,
    load_config,
    run_experiment,
    stationarity_report,
    sweep,
)
from .oracle import contraction_certificate, mixing_estimate, state_transition_matrix
from .policy import PolicyParams, mu_table


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def _print_run_summary(summary) -> None:
    print(f"wrote {summary.output_path}")
    for msg in summary.schedule_warnings:
        print(f"schedule warning: {msg}")
    for seed, value in summary.final_returns:
        if value is None:
            reason = dict(summary.aborts).get(seed, "no final evaluation")
            print(f"seed {seed}: ABORTED ({reason})")
        else:
            print(f"seed {seed}: final_return={_fmt(value)}")
    print(f"mean_final={_fmt(summary.mean_final)}")
    print(f"stderr_final={_fmt(summary.stderr_final)}")


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    summary = run_experiment(cfg, workers=args.workers)
    _print_run_summary(summary)
    return 2 if summary.aborts else 0


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    values = [float(v) for v in args.eps_lambda.split(",") if v.strip()]
    result = sweep(cfg, values, workers=args.workers)
    aborted = False
    for row, summary in zip(result.rows, result.summaries):
        print(
            f"eps_lambda={row.eps_lambda:g} mean_final={_fmt(row.mean_final)} "
            f"stderr_final={_fmt(row.stderr_final)} output={summary.output_path}"
        )
        aborted = aborted or bool(summary.aborts)
    print(f"spread={_fmt(result.spread)}")
    return 2 if aborted else 0


def _cmd_report(args) -> int:
    report = stationarity_report(args.metrics, window=args.window)
    for t, value in report.checkpoints:
        print(f"t={t} window_avg_grad_sq={_fmt(value)}")
    print(f"slope={_fmt(report.slope)}")
    return 0


def _cmd_certify(args) -> int:
    cfg = load_config(args.config)
    mdp = build_mdp(cfg)
    theta0 = np.full((mdp.num_states, mdp.num_actions), float(cfg.theta_init))
    params = PolicyParams(theta0)
    cert = contraction_certificate(
        mdp, params, cfg.behavior, probes=args.probes, rng=np.random.default_rng(0)
    )
    print(f"theta_init.p_norm={cert.p_norm}")
    print(f"theta_init.kappa0={_fmt(cert.kappa0)}")
    print(f"theta_init.kappa={_fmt(cert.kappa)}")
    print(f"theta_init.d_mu_min={_fmt(cert.d_mu_min)}")
    print(f"theta_init.empirical_ratio_max={_fmt(cert.empirical_ratio_max)}")
    chain = state_transition_matrix(
        mdp, mu_table(params, cfg.behavior), reset_absorbing=True
    )
    mix = mixing_estimate(chain)
    print(f"mixing.tau={_fmt(mix.tau)}")
    print(f"mixing.c0={_fmt(mix.c0)}")
    print(f"mixing.tau_alpha_1e-2={mix.tau_alpha(1e-2)}")
    rng = np.random.default_rng(args.cert_seed)
    for i in range(args.theta_samples):
        sample = PolicyParams(theta0 + rng.standard_normal(theta0.shape))
        c = contraction_certificate(
            mdp, sample, cfg.behavior, probes=args.probes, rng=np.random.default_rng(0)
        )
        print(
            f"sample_{i}.kappa={_fmt(c.kappa)} "
            f"sample_{i}.empirical_ratio_max={_fmt(c.empirical_ratio_max)}"
        )
    print(f"samples_certified={args.theta_samples}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="opac",
        description="Tabular off-policy actor-critic experiments with exact diagnostics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="train every seed in a config and write the metrics CSV")
    p_run.add_argument("--config", required=True, help="key=value config file")
    p_run.add_argument("--workers", type=int, default=1, help="processes across seeds")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="repeat a run over several eps_lambda values")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument(
        "--eps-lambda", required=True, help="comma-separated decay exponents, e.g. 0.5,2"
    )
    p_sweep.add_argument("--workers", type=int, default=1)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_report = sub.add_parser("report", help="stationarity statistics from a metrics CSV")
    p_report.add_argument("--metrics", required=True)
    p_report.add_argument("--window", default="second_half")
    p_report.set_defaults(func=_cmd_report)

    p_cert = sub.add_parser(
        "certify", help="contraction and mixing certificates for a config's chain"
    )
    p_cert.add_argument("--config", required=True)
    p_cert.add_argument("--theta-samples", type=int, default=0, dest="theta_samples")
    p_cert.add_argument("--cert-seed", type=int, default=0, dest="cert_seed")
    p_cert.add_argument("--probes", type=int, default=32)
    p_cert.set_defaults(func=_cmd_certify)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 1
        return 0 if code == 0 else 1
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except RuntimeError as exc:
        print(f"abort: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
