"""Experiment harness: configs, seed sweeps, periodic evaluation, metrics CSV.

A run trains one algorithm on the chain benchmark for each seed, evaluating
the target policy every eval_every steps (sampled rollouts, rng derived from
(seed, t) so evaluation never disturbs the training stream) and computing
exact-oracle diagnostics every diag_every steps. Rows land in a fixed-schema
CSV; empty fields mean "not computed here", never NaN.

Determinism contract: a (config, seed) pair produces byte-identical CSV bytes
across invocations, and parallel execution across seeds writes exactly the
bytes serial execution writes.
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
import math
import os

import numpy as np

from .actor_critic import (
    TrainingAborted,
    default_projection,
    evaluate_policy,
    init_agent,
    run_steps,
)
from .mdp import ChainSpec, TabularMdp, chain_domain
from .oracle import (
    contraction_certificate,
    exact_objective_and_gradients,
    exact_q,
    exact_soft_q,
    lp_norm,
    optimal_return,
)
from .policy import BehaviorPolicyConfig, PolicyParams, pi_table
from .schedule import ScheduleSet, default_schedule, rates, validate_assumptions

CSV_HEADER = (
    "seed,t,eval_return,exact_J,tracking_error_p,tracking_error_inf,"
    "grad_norm_reg,suboptimality,lambda_t"
)


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """Everything one experiment needs; every field is a config-file key."""

    algorithm: str
    chain_n: int = 6
    gamma: float = 0.99
    schedule: ScheduleSet = dataclasses.field(default_factory=default_schedule)
    behavior: BehaviorPolicyConfig = dataclasses.field(default_factory=BehaviorPolicyConfig)
    total_steps: int = 2_000_000
    eval_every: int = 2_000
    eval_episodes: int = 10
    seeds: tuple = tuple(range(30))
    diag_every: int = 20_000
    output_path: str = "metrics.csv"
    theta_init: float = 0.0
    q_init: float = 0.0
    diag_p0: str = "uniform"  # start distribution for the gradient diagnostic

    def __post_init__(self):
        if self.algorithm not in ("alg1", "alg2"):
            raise ValueError(f"algorithm must be 'alg1' or 'alg2', got {self.algorithm!r}")
        if self.total_steps < 0:
            raise ValueError(f"total_steps must be nonnegative, got {self.total_steps}")
        if self.eval_every < 1 or self.diag_every < 1:
            raise ValueError("eval_every and diag_every must be at least 1")
        if self.total_steps and self.eval_every > self.total_steps:
            raise ValueError(
                f"eval_every = {self.eval_every} exceeds total_steps = {self.total_steps}"
            )
        if self.eval_episodes < 1:
            raise ValueError(f"eval_episodes must be positive, got {self.eval_episodes}")
        if not self.seeds:
            raise ValueError("seeds must be nonempty")
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if self.diag_p0 not in ("uniform", "initial"):
            raise ValueError(f"diag_p0 must be 'uniform' or 'initial', got {self.diag_p0!r}")


@dataclasses.dataclass(frozen=True)
class MetricsRow:
    """One CSV row; None fields render as empty."""

    seed: int
    t: int
    eval_return: float | None
    exact_j: float | None
    tracking_error_p: float | None
    tracking_error_inf: float | None
    grad_norm_reg: float | None
    suboptimality: float | None
    lambda_t: float

    def to_line(self) -> str:
        def fmt(x):
            return "" if x is None else repr(float(x))

        return ",".join(
            [
                str(self.seed),
                str(self.t),
                fmt(self.eval_return),
                fmt(self.exact_j),
                fmt(self.tracking_error_p),
                fmt(self.tracking_error_inf),
                fmt(self.grad_norm_reg),
                fmt(self.suboptimality),
                fmt(self.lambda_t),
            ]
        )


@dataclasses.dataclass(frozen=True)
class RunSummary:
    """Aggregate of one run_experiment call."""

    algorithm: str
    eps_lambda: float
    output_path: str
    final_returns: tuple  # ((seed, return-or-None), ...)
    mean_final: float | None
    stderr_final: float | None
    aborts: tuple  # ((seed, reason), ...)
    schedule_warnings: tuple


@dataclasses.dataclass(frozen=True)
class SweepRow:
    eps_lambda: float
    mean_final: float | None
    stderr_final: float | None


@dataclasses.dataclass(frozen=True)
class SweepSummary:
    """Per-eps_lambda comparison table plus the cross-value spread statistic."""

    rows: tuple  # SweepRow, sorted by eps_lambda ascending
    spread: float | None  # max - min of the mean final returns
    summaries: tuple  # RunSummary per value, same order


@dataclasses.dataclass(frozen=True)
class StationarityReport:
    """Window averages of the squared gradient norm and their log-log decay slope."""

    checkpoints: tuple  # ((t, mean of grad_norm_reg^2 over [ceil(t/2), t]), ...)
    slope: float  # nan when fewer than two positive checkpoints exist


def build_mdp(cfg: RunConfig) -> TabularMdp:
    return chain_domain(ChainSpec(n=cfg.chain_n, gamma=cfg.gamma))


def _checkpoints(cfg: RunConfig) -> list[int]:
    marks = {0}
    for period in (cfg.eval_every, cfg.diag_every):
        marks.update(range(0, cfg.total_steps + 1, period))
    return sorted(marks)


def _metrics_at(cfg, mdp, agent, seed, p_norm, j_opt) -> MetricsRow:
    t = agent.t
    lam_t = rates(cfg.schedule, t)[2]
    eval_return = None
    if t % cfg.eval_every == 0:
        eval_rng = np.random.default_rng([seed, t])
        eval_return = evaluate_policy(
            mdp, agent.params, cfg.eval_episodes, eval_rng, mode="sampled"
        )
    exact_j = tracking_p = tracking_inf = grad_norm = subopt = None
    if t % cfg.diag_every == 0:
        pol = pi_table(agent.params)
        values = exact_q(mdp, pol)
        exact_j = float(mdp.initial_dist @ values.v)
        subopt = j_opt - exact_j
        target = values.q
        reg_kind = "kl_uniform"
        if cfg.algorithm == "alg2":
            reg_kind = "entropy"
            try:
                target = exact_soft_q(mdp, pol, lam_t).q_soft
            except ValueError:
                # Saturated softmax produced a zero probability; the soft
                # fixed point is undefined there, so skip these fields.
                target = None
        if target is not None:
            diff = agent.critic - target
            tracking_inf = float(np.max(np.abs(diff)))
            if p_norm is not None:
                tracking_p = lp_norm(diff, p_norm)
        start = (
            np.full(mdp.num_states, 1.0 / mdp.num_states)
            if cfg.diag_p0 == "uniform"
            else mdp.initial_dist
        )
        try:
            _, _, grad = exact_objective_and_gradients(
                mdp, agent.params, lam_t, reg_kind, start
            )
            grad_norm = float(np.sqrt(np.sum(grad * grad)))
        except ValueError:
            grad_norm = None
    return MetricsRow(
        seed=seed,
        t=t,
        eval_return=eval_return,
        exact_j=exact_j,
        tracking_error_p=tracking_p,
        tracking_error_inf=tracking_inf,
        grad_norm_reg=grad_norm,
        suboptimality=subopt,
        lambda_t=lam_t,
    )


def _seed_job(cfg: RunConfig, seed: int, p_norm: float | None):
    """Train one seed; returns (rows, final_return_or_None, abort_reason_or_None)."""
    mdp = build_mdp(cfg)
    proj = default_projection(mdp, cfg.algorithm, cfg.schedule)
    j_opt = optimal_return(mdp, mdp.initial_dist)
    rng = np.random.default_rng(seed)
    agent = init_agent(mdp, rng, cfg.theta_init, cfg.q_init)
    rows: list[MetricsRow] = []
    abort = None
    prev = 0
    for mark in _checkpoints(cfg):
        try:
            run_steps(
                agent,
                mdp,
                cfg.behavior,
                cfg.schedule,
                proj,
                rng,
                mark - prev,
                cfg.algorithm,
            )
        except TrainingAborted as exc:
            abort = str(exc)
            break
        prev = mark
        rows.append(_metrics_at(cfg, mdp, agent, seed, p_norm, j_opt))
    final = None
    if abort is None and rows and rows[-1].t == cfg.total_steps:
        final = rows[-1].eval_return
    return rows, final, abort


def tracking_norm_index(cfg: RunConfig) -> float | None:
    """The certificate's l_p index at the run's initial theta.

    Computed once per config so the tracking_error_p column means one fixed
    norm for the whole run. None when no certificate exists (non-ergodic
    behavior chain), in which case the column stays empty.
    """
    mdp = build_mdp(cfg)
    params = PolicyParams(
        np.full((mdp.num_states, mdp.num_actions), float(cfg.theta_init))
    )
    try:
        cert = contraction_certificate(
            mdp, params, cfg.behavior, probes=8, rng=np.random.default_rng(0)
        )
    except RuntimeError:
        return None
    return cert.p_norm


def run_experiment(cfg: RunConfig, workers: int = 1) -> RunSummary:
    """Train every seed, write the metrics CSV, and aggregate final returns.

    With workers > 1 the seeds run in separate processes; the rows written are
    identical to a serial run because each seed's generators are derived only
    from (seed, t) and results are committed in config order.
    """
    sched_warnings = tuple(validate_assumptions(cfg.schedule, strict=False))
    p_norm = tracking_norm_index(cfg)

    results = {}
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {
                seed: pool.submit(_seed_job, cfg, seed, p_norm) for seed in cfg.seeds
            }
            for seed, fut in futures.items():
                results[seed] = fut.result()
    else:
        for seed in cfg.seeds:
            results[seed] = _seed_job(cfg, seed, p_norm)

    out_dir = os.path.dirname(cfg.output_path)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    with open(cfg.output_path, "w", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for seed in cfg.seeds:
            for row in results[seed][0]:
                fh.write(row.to_line() + "\n")

    finals = tuple((seed, results[seed][1]) for seed in cfg.seeds)
    aborts = tuple(
        (seed, results[seed][2]) for seed in cfg.seeds if results[seed][2] is not None
    )
    values = [v for _, v in finals if v is not None]
    mean = float(np.mean(values)) if values else None
    if len(values) > 1:
        stderr = float(np.std(values, ddof=1) / math.sqrt(len(values)))
    elif values:
        stderr = 0.0
    else:
        stderr = None
    return RunSummary(
        algorithm=cfg.algorithm,
        eps_lambda=cfg.schedule.eps_lambda,
        output_path=cfg.output_path,
        final_returns=finals,
        mean_final=mean,
        stderr_final=stderr,
        aborts=aborts,
        schedule_warnings=sched_warnings,
    )


def _tagged_path(path: str, eps_lambda: float) -> str:
    root, ext = os.path.splitext(path)
    return f"{root}_eps{eps_lambda:g}{ext or '.csv'}"


def sweep(base: RunConfig, eps_lambda_values, workers: int = 1) -> SweepSummary:
    """run_experiment once per eps_lambda; table sorted ascending, plus the spread.

    The spread (max - min of mean final returns) is the sensitivity statistic:
    a flat profile means the algorithm barely cares how fast the
    regularization weight decays.
    """
    values = sorted(float(v) for v in eps_lambda_values)
    if not values:
        raise ValueError("eps_lambda_values must be nonempty")
    summaries = []
    for v in values:
        cfg = dataclasses.replace(
            base,
            schedule=dataclasses.replace(base.schedule, eps_lambda=v),
            output_path=_tagged_path(base.output_path, v),
        )
        summaries.append(run_experiment(cfg, workers=workers))
    rows = tuple(
        SweepRow(eps_lambda=v, mean_final=s.mean_final, stderr_final=s.stderr_final)
        for v, s in zip(values, summaries)
    )
    means = [r.mean_final for r in rows if r.mean_final is not None]
    spread = (max(means) - min(means)) if len(means) == len(rows) else None
    return SweepSummary(rows=rows, spread=spread, summaries=tuple(summaries))


def _read_grad_rows(path: str) -> list[tuple[int, float]]:
    out = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ValueError(f"unexpected metrics header: {header!r}")
        for line in fh:
            parts = line.rstrip("\n").split(",")
            if parts[6]:
                out.append((int(parts[1]), float(parts[6])))
    return out


def stationarity_report(metrics_path: str, window: str = "second_half") -> StationarityReport:
    """Average the squared gradient-norm diagnostic over trailing windows.

    For each time t that has gradient data, the checkpoint value is the mean
    of grad_norm_reg^2 over every row (all seeds) with ceil(t/2) <= row_t <= t
    — the window an iterate drawn uniformly from the second half of training
    would land in. The slope is a log-log least-squares fit over positive
    checkpoints; synthetic 1/t data comes out at -1.
    """
    if window != "second_half":
        raise ValueError(f"unsupported window {window!r}")
    data = _read_grad_rows(metrics_path)
    if not data:
        raise ValueError(f"no grad_norm_reg rows in {metrics_path}")
    times = sorted({t for t, _ in data})
    checkpoints = []
    for t in times:
        lo = math.ceil(t / 2)
        vals = [g * g for rt, g in data if lo <= rt <= t]
        checkpoints.append((t, float(np.mean(vals))))
    fit = [(t, v) for t, v in checkpoints if t > 0 and v > 0.0]
    if len(fit) >= 2:
        slope = float(
            np.polyfit(np.log([t for t, _ in fit]), np.log([v for _, v in fit]), 1)[0]
        )
    else:
        slope = float("nan")
    return StationarityReport(checkpoints=tuple(checkpoints), slope=slope)


# ---------------------------------------------------------------------------
# Config files: flat key=value lines, dotted keys for the nested sections.

_TOP_INT = {"chain_n", "total_steps", "eval_every", "eval_episodes", "diag_every"}
_TOP_FLOAT = {"gamma", "theta_init", "q_init"}
_TOP_STR = {"algorithm", "output_path", "diag_p0"}
_SCHED_FIELDS = {f.name for f in dataclasses.fields(ScheduleSet)}
_BEHAVIOR_FIELDS = {f.name for f in dataclasses.fields(BehaviorPolicyConfig)}


def parse_seed_spec(spec) -> tuple:
    """Seed lists: comma-separated integers and inclusive a..b ranges."""
    if isinstance(spec, (list, tuple)):
        return tuple(int(s) for s in spec)
    seeds = []
    for token in str(spec).split(","):
        token = token.strip()
        if not token:
            continue
        if ".." in token:
            lo, _, hi = token.partition("..")
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise ValueError(f"empty seed range {token!r}")
            seeds.extend(range(lo, hi + 1))
        else:
            seeds.append(int(token))
    if not seeds:
        raise ValueError(f"no seeds in spec {spec!r}")
    return tuple(seeds)


def parse_config_text(text: str) -> RunConfig:
    """Build a RunConfig from key=value lines; unknown keys are errors."""
    top: dict = {}
    sched: dict = {}
    behavior: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key.startswith("schedule."):
            name = key[len("schedule."):]
            if name not in _SCHED_FIELDS:
                raise ValueError(f"line {lineno}: unknown schedule key {name!r}")
            sched[name] = float(value)
        elif key.startswith("behavior."):
            name = key[len("behavior."):]
            if name not in _BEHAVIOR_FIELDS:
                raise ValueError(f"line {lineno}: unknown behavior key {name!r}")
            behavior[name] = float(value)
        elif key in _TOP_INT:
            top[key] = int(value)
        elif key in _TOP_FLOAT:
            top[key] = float(value)
        elif key in _TOP_STR:
            top[key] = value
        elif key == "seeds":
            top[key] = parse_seed_spec(value)
        else:
            raise ValueError(f"line {lineno}: unknown config key {key!r}")
    if "algorithm" not in top:
        raise ValueError("config must set 'algorithm' (alg1 or alg2)")
    if sched:
        top["schedule"] = dataclasses.replace(default_schedule(), **sched)
    if behavior:
        top["behavior"] = dataclasses.replace(BehaviorPolicyConfig(), **behavior)
    return RunConfig(**top)


def load_config(path: str) -> RunConfig:
    with open(path) as fh:
        return parse_config_text(fh.read())
