"""Softmax target policy, mixture behavior policy, and their closed-form gradients.

All gradients with respect to theta are sparse: only the theta row of the
queried state is nonzero, so they are returned as a StateGradient (state index
plus that row). Densify with StateGradient.dense() when a full array is needed.
"""

from __future__ import annotations

import dataclasses
from typing import NamedTuple

import numpy as np


@dataclasses.dataclass(frozen=True)
class PolicyParams:
    """Softmax parameters theta, shape (num_states, num_actions).

    pi(a|s) = exp(theta[s,a]) / sum_a' exp(theta[s,a']). Entries must be
    finite; the array is never mutated by this module.
    """

    theta: np.ndarray

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        if theta.ndim != 2:
            raise ValueError(f"theta must be 2-D (states, actions), got shape {theta.shape}")
        if not np.all(np.isfinite(theta)):
            raise ValueError("theta contains non-finite entries")
        object.__setattr__(self, "theta", theta)

    @property
    def num_states(self) -> int:
        return self.theta.shape[0]

    @property
    def num_actions(self) -> int:
        return self.theta.shape[1]


@dataclasses.dataclass(frozen=True)
class BehaviorPolicyConfig:
    """Mixture behavior policy: (1 - epsilon) uniform + epsilon softmax(temperature * theta).

    epsilon in (0, 1) is the weight on the softmax component; the uniform
    component floors every action probability at (1 - epsilon) / num_actions,
    which keeps importance ratios bounded by num_actions / (1 - epsilon).
    """

    epsilon: float = 0.9
    temperature: float = 0.1

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must be in (0, 1), got {self.epsilon}")
        if not self.temperature > 0.0:
            raise ValueError(f"temperature must be positive, got {self.temperature}")


class StateGradient(NamedTuple):
    """A gradient that is nonzero only on one state's theta row."""

    state: int
    row: np.ndarray

    def dense(self, num_states: int) -> np.ndarray:
        out = np.zeros((num_states, len(self.row)))
        out[self.state] = self.row
        return out


def _softmax(row: np.ndarray) -> np.ndarray:
    shifted = row - np.max(row)
    e = np.exp(shifted)
    return e / e.sum()


def log_pi(params: PolicyParams, s: int) -> np.ndarray:
    """log pi(.|s), computed as a log-softmax so extreme theta cannot produce -inf - (-inf)."""
    row = params.theta[s]
    shifted = row - np.max(row)
    return shifted - np.log(np.exp(shifted).sum())


def pi(params: PolicyParams, s: int) -> np.ndarray:
    """Target-policy action distribution at s (max-subtracted softmax)."""
    return _softmax(params.theta[s])


def pi_table(params: PolicyParams) -> np.ndarray:
    """All rows of pi at once, shape (num_states, num_actions)."""
    shifted = params.theta - params.theta.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def log_pi_table(params: PolicyParams) -> np.ndarray:
    """All rows of log pi at once (log-softmax; entries finite or -inf-free)."""
    shifted = params.theta - params.theta.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def mu(params: PolicyParams, cfg: BehaviorPolicyConfig, s: int) -> np.ndarray:
    """Behavior-policy action distribution at s."""
    a_count = params.num_actions
    return (1.0 - cfg.epsilon) / a_count + cfg.epsilon * _softmax(
        cfg.temperature * params.theta[s]
    )


def mu_table(params: PolicyParams, cfg: BehaviorPolicyConfig) -> np.ndarray:
    """All rows of mu at once."""
    scaled = cfg.temperature * params.theta
    shifted = scaled - scaled.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return (1.0 - cfg.epsilon) / params.num_actions + cfg.epsilon * e / e.sum(
        axis=1, keepdims=True
    )


def grad_log_pi(params: PolicyParams, s: int, a: int) -> StateGradient:
    """d log pi(a|s) / d theta: row e_a - pi(.|s) at state s, zero elsewhere."""
    row = -pi(params, s)
    row[a] += 1.0
    return StateGradient(s, row)


def grad_kl_uniform(params: PolicyParams, s: int) -> StateGradient:
    """Gradient of KL(uniform || pi(.|s)) w.r.t. theta: row pi(.|s) - 1/|A|."""
    return StateGradient(s, pi(params, s) - 1.0 / params.num_actions)


def kl_uniform(params: PolicyParams, s: int) -> float:
    """KL(uniform || pi(.|s)) = -log|A| - mean_a log pi(a|s)."""
    a_count = params.num_actions
    return float(-np.log(a_count) - log_pi(params, s).sum() / a_count)


def entropy(params: PolicyParams, s: int) -> float:
    """Entropy of pi(.|s), in [0, log|A|]."""
    logp = log_pi(params, s)
    p = np.exp(logp)
    # p underflows to 0 before logp loses finiteness, so p * logp is safe.
    return float(-(p * logp).sum())


def grad_entropy(params: PolicyParams, s: int) -> StateGradient:
    """Gradient of the entropy of pi(.|s): row -(pi * H + pi * log pi).

    Its Euclidean norm is at most log|A| + 1/e.
    """
    logp = log_pi(params, s)
    p = np.exp(logp)
    h = -(p * logp).sum()
    return StateGradient(s, -(p * h + p * logp))


def importance_ratio(
    params: PolicyParams, cfg: BehaviorPolicyConfig, s: int, a: int
) -> float:
    """pi(a|s) / mu(a|s); finite because mu is floored by the uniform mixture."""
    return float(pi(params, s)[a] / mu(params, cfg, s)[a])


def save_theta(params: PolicyParams, path) -> None:
    """Snapshot theta as text: a (num_states, num_actions) header line, then
    one repr() per entry, row-major — exact decimal round-trip."""
    with open(path, "w", newline="\n") as fh:
        fh.write(f"{params.num_states} {params.num_actions}\n")
        fh.write(" ".join(repr(float(x)) for x in params.theta.ravel()) + "\n")


def load_theta(path) -> PolicyParams:
    """Inverse of save_theta."""
    with open(path) as fh:
        s_count, a_count = (int(x) for x in fh.readline().split())
        values = [float(x) for x in fh.readline().split()]
    return PolicyParams(np.array(values).reshape(s_count, a_count))
