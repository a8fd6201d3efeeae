"""Finite tabular MDPs, validation, and the chain benchmark.

States and actions are dense 0-based integers. State-action pairs flatten
row-major as ``s * num_actions + a``; every module in the package uses this
layout.
"""

from __future__ import annotations

import dataclasses

import numpy as np

# Tolerance for probability normalization (row sums, initial distribution).
PROB_TOL = 1e-12

SOLID = 0
DOTTED = 1


@dataclasses.dataclass(frozen=True)
class TabularMdp:
    """A finite MDP (S, A, p, r, gamma, p0).

    transition[s, a, s'] is the probability of moving to s' after taking a
    in s; reward[s, a] is the (deterministic) immediate reward, bounded by
    r_max in absolute value. Immutable after construction; safe to share.
    """

    num_states: int
    num_actions: int
    transition: np.ndarray  # (S, A, S)
    reward: np.ndarray  # (S, A)
    gamma: float
    initial_dist: np.ndarray  # (S,)
    r_max: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "transition", np.asarray(self.transition, dtype=float))
        object.__setattr__(self, "reward", np.asarray(self.reward, dtype=float))
        object.__setattr__(self, "initial_dist", np.asarray(self.initial_dist, dtype=float))

    @property
    def num_pairs(self) -> int:
        return self.num_states * self.num_actions

    def pair_index(self, s: int, a: int) -> int:
        """Row-major flattening of (s, a); fixed across all modules."""
        return s * self.num_actions + a

    def absorbing_states(self) -> list[int]:
        """States s with transition[s, a, s] == 1 for every action."""
        return [
            s
            for s in range(self.num_states)
            if all(self.transition[s, a, s] == 1.0 for a in range(self.num_actions))
        ]


@dataclasses.dataclass(frozen=True)
class ChainSpec:
    """Parameters of the chain benchmark: n non-terminal states, discount gamma."""

    n: int
    gamma: float = 0.99

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"chain needs n >= 2 non-terminal states, got {self.n}")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must be in [0, 1), got {self.gamma}")


def validate(mdp: TabularMdp) -> list[str]:
    """Check every structural invariant; return one message per violation.

    An empty list means the MDP is valid. Messages name the offending index
    and the magnitude of the violation, so callers can report precisely.
    """
    report = []
    if mdp.num_states < 1:
        report.append(f"num_states must be positive, got {mdp.num_states}")
    if mdp.num_actions < 1:
        report.append(f"num_actions must be positive, got {mdp.num_actions}")
    if report:
        return report

    s_count, a_count = mdp.num_states, mdp.num_actions
    if mdp.transition.shape != (s_count, a_count, s_count):
        report.append(
            f"transition shape {mdp.transition.shape} != {(s_count, a_count, s_count)}"
        )
    if mdp.reward.shape != (s_count, a_count):
        report.append(f"reward shape {mdp.reward.shape} != {(s_count, a_count)}")
    if mdp.initial_dist.shape != (s_count,):
        report.append(f"initial_dist shape {mdp.initial_dist.shape} != {(s_count,)}")
    if report:
        return report

    if not 0.0 <= mdp.gamma < 1.0:
        report.append(f"gamma must be in [0, 1), got {mdp.gamma}")
    if not mdp.r_max > 0:
        report.append(f"r_max must be positive, got {mdp.r_max}")

    for s in range(s_count):
        for a in range(a_count):
            row = mdp.transition[s, a]
            bad = np.where((row < 0.0) | (row > 1.0))[0]
            for sp in bad:
                report.append(
                    f"transition[{s},{a},{sp}] = {float(row[sp])!r} outside [0, 1]"
                )
            gap = abs(float(row.sum()) - 1.0)
            if gap > PROB_TOL:
                report.append(
                    f"transition[{s},{a},:] row sums to {float(row.sum())!r} (off by {gap:.3e})"
                )
            r = float(mdp.reward[s, a])
            if not np.isfinite(r) or abs(r) > mdp.r_max:
                report.append(f"reward[{s},{a}] = {r!r} exceeds r_max = {mdp.r_max}")

    bad = np.where((mdp.initial_dist < 0.0) | (mdp.initial_dist > 1.0))[0]
    for s in bad:
        report.append(f"initial_dist[{s}] = {float(mdp.initial_dist[s])!r} outside [0, 1]")
    gap = abs(float(mdp.initial_dist.sum()) - 1.0)
    if gap > PROB_TOL:
        report.append(
            f"initial_dist sums to {float(mdp.initial_dist.sum())!r} (off by {gap:.3e})"
        )
    return report


def chain_domain(spec: ChainSpec) -> TabularMdp:
    """Build the n-state chain with an absorbing terminal state.

    Two actions per state. The solid action (0) walks s_i -> s_{i+1} with
    reward 0 and, from the last state, enters the terminal state with reward 1.
    The dotted action (1) jumps straight to the terminal state with reward
    0.8 * gamma^(n-1) — an immediate payoff calibrated to tempt the agent away
    from the delayed unit reward, whose discounted value from s_1 is
    gamma^(n-1). Episodes start at s_1; the terminal state self-loops with
    reward 0, so the episodic task is a standard absorbing-state encoding of
    the finite-horizon one (callers reset to the initial distribution on
    absorption).
    """
    n, gamma = spec.n, spec.gamma
    num_states = n + 1  # terminal is index n
    terminal = n
    transition = np.zeros((num_states, 2, num_states))
    reward = np.zeros((num_states, 2))
    for i in range(n):
        if i < n - 1:
            transition[i, SOLID, i + 1] = 1.0
        else:
            transition[i, SOLID, terminal] = 1.0
            reward[i, SOLID] = 1.0
        transition[i, DOTTED, terminal] = 1.0
        reward[i, DOTTED] = 0.8 * gamma ** (n - 1)
    transition[terminal, SOLID, terminal] = 1.0
    transition[terminal, DOTTED, terminal] = 1.0
    initial = np.zeros(num_states)
    initial[0] = 1.0
    return TabularMdp(
        num_states=num_states,
        num_actions=2,
        transition=transition,
        reward=reward,
        gamma=gamma,
        initial_dist=initial,
        r_max=1.0,
    )


def sample_index(cdf, u: float) -> int:
    """Index of the first cdf entry strictly above u (clamped to the last).

    The single shared sampling rule: one uniform per categorical draw, so a
    given rng stream always maps to the same index sequence.
    """
    idx = int(np.searchsorted(cdf, u, side="right"))
    return min(idx, len(cdf) - 1)


def step(mdp: TabularMdp, s: int, a: int, rng) -> tuple[float, int]:
    """Sample one transition: returns (reward[s, a], s' ~ transition[s, a, .]).

    Consumes exactly one uniform from rng. Raises IndexError on out-of-range
    indices.
    """
    if not 0 <= s < mdp.num_states:
        raise IndexError(f"state index {s} out of range [0, {mdp.num_states})")
    if not 0 <= a < mdp.num_actions:
        raise IndexError(f"action index {a} out of range [0, {mdp.num_actions})")
    cdf = np.cumsum(mdp.transition[s, a])
    s_next = sample_index(cdf, rng.random())
    return float(mdp.reward[s, a]), s_next


def save_mdp(mdp: TabularMdp, path) -> None:
    """Write the MDP as key=value text with exact decimal round-trip.

    Arrays are flattened row-major and rendered with repr(), which emits the
    shortest decimal string that parses back to the identical float.
    """
    lines = [
        f"num_states={mdp.num_states}",
        f"num_actions={mdp.num_actions}",
        f"gamma={mdp.gamma!r}",
        f"r_max={mdp.r_max!r}",
        "transition=" + " ".join(repr(float(x)) for x in mdp.transition.ravel()),
        "reward=" + " ".join(repr(float(x)) for x in mdp.reward.ravel()),
        "initial_dist=" + " ".join(repr(float(x)) for x in mdp.initial_dist.ravel()),
    ]
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_mdp(path) -> TabularMdp:
    """Inverse of save_mdp."""
    fields = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            key, _, value = line.partition("=")
            fields[key] = value
    s_count = int(fields["num_states"])
    a_count = int(fields["num_actions"])
    return TabularMdp(
        num_states=s_count,
        num_actions=a_count,
        transition=np.array([float(x) for x in fields["transition"].split()]).reshape(
            s_count, a_count, s_count
        ),
        reward=np.array([float(x) for x in fields["reward"].split()]).reshape(
            s_count, a_count
        ),
        gamma=float(fields["gamma"]),
        initial_dist=np.array([float(x) for x in fields["initial_dist"].split()]),
        r_max=float(fields["r_max"]),
    )
