"""The two training algorithms, step-exact.

alg1: off-policy actor-critic — expected-SARSA critic, importance-weighted
policy-gradient actor with a decaying KL-toward-uniform penalty.

alg2: expected soft actor-critic — soft expected-SARSA critic (entropy-bonus
bootstrap at weight lambda_t) and an expected-over-actions actor update at the
current state, without importance weighting.

Both share one scalar training engine (run_steps). The per-step arithmetic is
plain Python floats so that a single step (alg1_step / alg2_step) and a batched
run consume the rng stream identically and produce bit-identical trajectories.
Per step: exactly two uniform draws (action, successor) plus one more when an
episode resets.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .mdp import TabularMdp, sample_index
from .oracle import exact_q
from .policy import BehaviorPolicyConfig, PolicyParams, pi_table
from .schedule import ScheduleSet, rates

# Abort threshold on |theta|: beyond this, softmax is saturated and the run is
# diverging; stop with diagnostics instead of silently flattening gradients.
THETA_LIMIT = 1e8


@dataclasses.dataclass
class AgentState:
    """Everything a run carries: policy parameters, critic table, clock, position."""

    params: PolicyParams
    critic: np.ndarray  # (num_states, num_actions)
    t: int = 0
    current_state: int = 0


@dataclasses.dataclass(frozen=True)
class ProjectionConfig:
    """Clipping radius C for the critic value inside the actor update."""

    c_pi: float

    def __post_init__(self):
        if not self.c_pi > 0.0:
            raise ValueError(f"c_pi must be positive, got {self.c_pi}")


@dataclasses.dataclass(frozen=True)
class StepRecord:
    """One training step's observables."""

    t: int
    s: int
    a: int
    reward: float
    s_next: int
    rho: float
    delta: float
    alpha_t: float
    beta_t: float
    lambda_t: float


class TrainingAborted(RuntimeError):
    """Raised when a step produces a non-finite delta or an out-of-range theta."""

    def __init__(self, reason: str, t: int):
        super().__init__(f"aborted at t={t}: {reason}")
        self.reason = reason
        self.t = t


def project(x: float, proj: ProjectionConfig) -> float:
    """Clip x to [-c_pi, c_pi]."""
    if x > proj.c_pi:
        return proj.c_pi
    if x < -proj.c_pi:
        return -proj.c_pi
    return x


def default_projection(
    mdp: TabularMdp, algorithm: str, sched: ScheduleSet | None = None
) -> ProjectionConfig:
    """The clipping radius each algorithm assumes.

    alg1: r_max / (1 - gamma). alg2 additionally covers the entropy bonus at
    its largest weight, lambda at t = 0: (r_max + lambda_0 log|A|) / (1 - gamma).
    """
    if algorithm == "alg1":
        return ProjectionConfig(mdp.r_max / (1.0 - mdp.gamma))
    if algorithm == "alg2":
        if sched is None:
            raise ValueError("alg2 projection needs the schedule (for lambda_0)")
        lam0 = rates(sched, 0)[2]
        return ProjectionConfig(
            (mdp.r_max + lam0 * math.log(mdp.num_actions)) / (1.0 - mdp.gamma)
        )
    raise ValueError(f"unknown algorithm {algorithm!r}")


def init_agent(
    mdp: TabularMdp, rng, theta_init: float = 0.0, q_init: float = 0.0
) -> AgentState:
    """Fresh agent: constant-fill theta and q, S_0 drawn from the initial distribution."""
    shape = (mdp.num_states, mdp.num_actions)
    s0 = sample_index(np.cumsum(mdp.initial_dist), rng.random())
    return AgentState(
        params=PolicyParams(np.full(shape, float(theta_init))),
        critic=np.full(shape, float(q_init)),
        t=0,
        current_state=s0,
    )


def run_steps(
    agent: AgentState,
    mdp: TabularMdp,
    bcfg: BehaviorPolicyConfig,
    sched: ScheduleSet,
    proj: ProjectionConfig,
    rng,
    num_steps: int,
    algorithm: str,
    record: list | None = None,
) -> float:
    """Advance the agent by num_steps training steps, mutating it in place.

    Per-step order (both algorithms): sample A_t from the behavior mixture at
    S_t; sample (R, S'); compute the TD error delta_t from the pre-update
    critic; update only critic[S_t, A_t] by alpha_t * delta_t; update the
    theta row of S_t (the actor reads the pre-update critic value, clipped to
    +-c_pi); advance the state, resetting to the initial distribution when S'
    is absorbing; increment t. Exactly one critic entry and one theta row
    change per step.

    Appends a StepRecord per step to `record` when given. Returns the largest
    |q| value written during the batch (0.0 when num_steps == 0). Raises
    TrainingAborted — with the agent left in its last consistent state — if
    delta turns non-finite or any updated theta entry leaves
    (-THETA_LIMIT, THETA_LIMIT).
    """
    if algorithm not in ("alg1", "alg2"):
        raise ValueError(f"unknown algorithm {algorithm!r}")
    soft = algorithm == "alg2"
    exp = math.exp
    log = math.log
    inf = math.inf

    s_count = mdp.num_states
    a_count = mdp.num_actions
    gamma = mdp.gamma
    actions = range(a_count)
    states = range(s_count)

    reward_tab = [[float(mdp.reward[s, a]) for a in actions] for s in states]
    trans_cdf = [
        [np.cumsum(mdp.transition[s, a]).tolist() for a in actions] for s in states
    ]
    init_cdf = np.cumsum(mdp.initial_dist).tolist()
    absorbing = frozenset(mdp.absorbing_states())

    unif = (1.0 - bcfg.epsilon) / a_count
    eps_mix = bcfg.epsilon
    temp = bcfg.temperature
    a_coef, b_coef, l_coef = sched.alpha_coef, sched.beta_coef, sched.lambda_coef
    eps_a, eps_b, eps_l = sched.eps_alpha, sched.eps_beta, sched.eps_lambda
    t0 = sched.t0
    c_pi = proj.c_pi
    inv_a = 1.0 / a_count
    rand = rng.random

    theta = [list(map(float, row)) for row in agent.params.theta]
    q = [list(map(float, row)) for row in agent.critic]
    t = agent.t
    s_cur = agent.current_state
    max_abs_q = 0.0

    try:
        for _ in range(num_steps):
            base = t + t0
            alpha = a_coef / base**eps_a
            beta = b_coef / base**eps_b
            lam = l_coef / base**eps_l

            s = s_cur
            th_s = theta[s]

            # Target softmax at s (max-subtracted), plus log-probs for alg2.
            m = max(th_s)
            exp_s = [exp(v - m) for v in th_s]
            z = 0.0
            for v in exp_s:
                z += v
            pi_s = [v / z for v in exp_s]
            if soft:
                log_z = log(z)
                logp_s = [v - m - log_z for v in th_s]

            # Behavior mixture at s.
            m2 = m * temp
            mu_z = 0.0
            exp_m = []
            for v in th_s:
                e = exp(temp * v - m2)
                exp_m.append(e)
                mu_z += e
            mu_s = [unif + eps_mix * e / mu_z for e in exp_m]

            # A_t ~ mu(.|S_t): first index whose cdf exceeds the uniform.
            u = rand()
            a = a_count - 1
            acc = 0.0
            for i in actions:
                acc += mu_s[i]
                if u < acc:
                    a = i
                    break

            # (R, S') from the model.
            row_cdf = trans_cdf[s][a]
            u = rand()
            s1 = s_count - 1
            for i in states:
                if u < row_cdf[i]:
                    s1 = i
                    break
            r = reward_tab[s][a]

            # TD error from the pre-update critic.
            th_1 = theta[s1]
            m1 = max(th_1)
            exp_1 = [exp(v - m1) for v in th_1]
            z1 = 0.0
            for v in exp_1:
                z1 += v
            q_s1 = q[s1]
            if soft:
                log_z1 = log(z1)
                boot = 0.0
                for i in actions:
                    p1 = exp_1[i] / z1
                    boot += p1 * (q_s1[i] - lam * (th_1[i] - m1 - log_z1))
            else:
                boot = 0.0
                for i in actions:
                    boot += (exp_1[i] / z1) * q_s1[i]
            q_s = q[s]
            q_sa = q_s[a]
            delta = r + gamma * boot - q_sa
            if not (-inf < delta < inf):
                raise TrainingAborted(
                    f"non-finite delta at (s={s}, a={a}, s'={s1}): {delta!r}", t
                )

            if soft:
                # Actor reads the whole pre-update critic row.
                g_bar = 0.0
                g_row = []
                for i in actions:
                    qv = q_s[i]
                    if qv > c_pi:
                        qv = c_pi
                    elif qv < -c_pi:
                        qv = -c_pi
                    g = qv - lam * logp_s[i]
                    g_row.append(g)
                    g_bar += pi_s[i] * g
                new_row = th_s[:]
                for i in actions:
                    v = new_row[i] + beta * pi_s[i] * (g_row[i] - g_bar)
                    if not (-THETA_LIMIT < v < THETA_LIMIT):
                        raise TrainingAborted(
                            f"theta[{s}][{i}] left (-1e8, 1e8): {v!r}", t
                        )
                    new_row[i] = v
            else:
                clipped = q_sa
                if clipped > c_pi:
                    clipped = c_pi
                elif clipped < -c_pi:
                    clipped = -c_pi
                scale = beta * (pi_s[a] / mu_s[a]) * clipped
                kl_scale = beta * lam
                new_row = th_s[:]
                for i in actions:
                    v = (
                        new_row[i]
                        + scale * ((1.0 if i == a else 0.0) - pi_s[i])
                        - kl_scale * (pi_s[i] - inv_a)
                    )
                    if not (-THETA_LIMIT < v < THETA_LIMIT):
                        raise TrainingAborted(
                            f"theta[{s}][{i}] left (-1e8, 1e8): {v!r}", t
                        )
                    new_row[i] = v

            # Commit: one critic entry, one theta row.
            q_new = q_sa + alpha * delta
            if not (-inf < q_new < inf):
                raise TrainingAborted(f"non-finite critic value at ({s},{a})", t)
            q_s[a] = q_new
            theta[s] = new_row
            abs_q = q_new if q_new >= 0.0 else -q_new
            if abs_q > max_abs_q:
                max_abs_q = abs_q

            if record is not None:
                record.append(
                    StepRecord(
                        t=t,
                        s=s,
                        a=a,
                        reward=r,
                        s_next=s1,
                        rho=pi_s[a] / mu_s[a],
                        delta=delta,
                        alpha_t=alpha,
                        beta_t=beta,
                        lambda_t=lam,
                    )
                )

            # Advance; absorption ends the episode and resamples the start.
            if s1 in absorbing:
                u = rand()
                nxt = s_count - 1
                for i in states:
                    if u < init_cdf[i]:
                        nxt = i
                        break
                s_cur = nxt
            else:
                s_cur = s1
            t += 1
    finally:
        agent.params = PolicyParams(np.array(theta, dtype=float))
        agent.critic = np.array(q, dtype=float)
        agent.t = t
        agent.current_state = s_cur
    return max_abs_q


def alg1_step(
    agent: AgentState,
    mdp: TabularMdp,
    bcfg: BehaviorPolicyConfig,
    sched: ScheduleSet,
    proj: ProjectionConfig,
    rng,
) -> tuple[AgentState, StepRecord]:
    """One off-policy actor-critic step; returns the (mutated) agent and its record."""
    record: list[StepRecord] = []
    run_steps(agent, mdp, bcfg, sched, proj, rng, 1, "alg1", record=record)
    return agent, record[0]


def alg2_step(
    agent: AgentState,
    mdp: TabularMdp,
    bcfg: BehaviorPolicyConfig,
    sched: ScheduleSet,
    proj: ProjectionConfig,
    rng,
) -> tuple[AgentState, StepRecord]:
    """One expected soft actor-critic step; returns the (mutated) agent and its record."""
    record: list[StepRecord] = []
    run_steps(agent, mdp, bcfg, sched, proj, rng, 1, "alg2", record=record)
    return agent, record[0]


def evaluate_policy(
    mdp: TabularMdp,
    params: PolicyParams,
    episodes: int,
    rng,
    mode: str = "sampled",
) -> float:
    """Mean episodic discounted return of the target policy from the initial distribution.

    sampled mode rolls out `episodes` episodes under pi (episodes are capped at
    10 * num_states steps in case the policy never reaches an absorbing
    state); exact mode returns sum_s p0(s) v_pi(s) from the value oracle and
    ignores episodes/rng.
    """
    if mode == "exact":
        return float(mdp.initial_dist @ exact_q(mdp, pi_table(params)).v)
    if mode != "sampled":
        raise ValueError(f"mode must be 'sampled' or 'exact', got {mode!r}")

    pol_cdf = np.cumsum(pi_table(params), axis=1)
    trans_cdf = np.cumsum(mdp.transition, axis=2)
    init_cdf = np.cumsum(mdp.initial_dist)
    absorbing = frozenset(mdp.absorbing_states())
    cap = 10 * mdp.num_states

    total = 0.0
    for _ in range(episodes):
        s = sample_index(init_cdf, rng.random())
        ret = 0.0
        disc = 1.0
        for _ in range(cap):
            if s in absorbing:
                break
            a = sample_index(pol_cdf[s], rng.random())
            ret += disc * float(mdp.reward[s, a])
            disc *= mdp.gamma
            s = sample_index(trans_cdf[s, a], rng.random())
        total += ret
    return total / episodes
