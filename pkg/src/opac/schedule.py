"""Three power-law step-size sequences and their exponent constraints.

alpha_t (critic) must dominate beta_t (actor), which must dominate the decay
of lambda_t (regularization weight): each sequence is coef / (t + t0)^eps.
The constructor only guards constructibility; the inequality system lives in
validate_assumptions so that out-of-window settings can still be built, run,
and reported on.
"""

from __future__ import annotations

import dataclasses
import warnings


@dataclasses.dataclass(frozen=True)
class ScheduleSet:
    """alpha_t = alpha_coef/(t+t0)^eps_alpha, and likewise beta_t, lambda_t."""

    alpha_coef: float
    beta_coef: float
    lambda_coef: float
    eps_alpha: float
    eps_beta: float
    eps_lambda: float
    t0: float

    def __post_init__(self):
        for name in ("alpha_coef", "beta_coef", "lambda_coef", "t0"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("eps_alpha", "eps_beta", "eps_lambda"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be nonnegative, got {getattr(self, name)}")


def default_schedule(eps_lambda: float = 0.5) -> ScheduleSet:
    """The chain-study constants: 101/(t+1e5)^0.501, 100/(t+1e5)^0.751, 0.025/(t+1e5)^eps_lambda."""
    return ScheduleSet(
        alpha_coef=101.0,
        beta_coef=100.0,
        lambda_coef=0.025,
        eps_alpha=0.501,
        eps_beta=0.751,
        eps_lambda=eps_lambda,
        t0=1e5,
    )


def rates(sched: ScheduleSet, t: int) -> tuple[float, float, float]:
    """(alpha_t, beta_t, lambda_t) at step t; strictly decreasing in t."""
    base = t + sched.t0
    return (
        sched.alpha_coef / base**sched.eps_alpha,
        sched.beta_coef / base**sched.eps_beta,
        sched.lambda_coef / base**sched.eps_lambda,
    )


def validate_assumptions(sched: ScheduleSet, strict: bool = True) -> list[str]:
    """Report every violated step-size inequality.

    The constraint system: 0.5 < eps_alpha < eps_beta <= 1 with beta_coef <
    alpha_coef (timescale separation), plus the window
    2(1 - eps_beta) < min{2(eps_beta - eps_alpha), eps_alpha} and
    0 <= eps_lambda < (1 - eps_beta)/2 under which the convergence guarantees
    hold. Strict callers should refuse to proceed on a nonempty report;
    lenient mode (strict=False) downgrades each violation to a RuntimeWarning
    so deliberately out-of-window settings — e.g. fast lambda decays with
    eps_lambda up to 2, which work well empirically — remain runnable.
    """
    report = []
    if not sched.eps_alpha > 0.5:
        report.append(f"eps_alpha = {sched.eps_alpha} must exceed 0.5")
    if not sched.eps_alpha < sched.eps_beta:
        report.append(
            f"eps_alpha = {sched.eps_alpha} must be below eps_beta = {sched.eps_beta}"
        )
    if not sched.eps_beta <= 1.0:
        report.append(f"eps_beta = {sched.eps_beta} must be at most 1")
    if not sched.beta_coef < sched.alpha_coef:
        report.append(
            f"beta_coef = {sched.beta_coef} must be below alpha_coef = {sched.alpha_coef}"
        )
    window = min(2.0 * (sched.eps_beta - sched.eps_alpha), sched.eps_alpha)
    if not 2.0 * (1.0 - sched.eps_beta) < window:
        report.append(
            f"2(1 - eps_beta) = {2.0 * (1.0 - sched.eps_beta)} must be below "
            f"min(2(eps_beta - eps_alpha), eps_alpha) = {window}"
        )
    if not sched.eps_lambda < (1.0 - sched.eps_beta) / 2.0:
        report.append(
            f"eps_lambda = {sched.eps_lambda} must be below "
            f"(1 - eps_beta)/2 = {(1.0 - sched.eps_beta) / 2.0}"
        )
    if not strict:
        for msg in report:
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return report
