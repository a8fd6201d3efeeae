"""Exact linear-algebra oracles and numerical certificates.

Everything here is a pure function of immutable inputs: true (soft) value
tables via dense solves, stationary distributions, discounted occupancies,
exact regularized policy gradients, an l_p contraction certificate for the
expected critic-update operator, and a geometric mixing estimate for finite
chains. State spaces are small by design; exactness beats scalability.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .mdp import TabularMdp
from .policy import PolicyParams, log_pi_table, mu_table, pi_table

# Raise if a dense solve leaves a residual above this (singularities cannot
# occur for gamma < 1, so anything worse indicates a caller bug).
SOLVE_RESIDUAL_TOL = 1e-8


@dataclasses.dataclass(frozen=True)
class ValueTables:
    """Exact values of a fixed policy: q (s,a), v (s), adv = q - v."""

    q: np.ndarray
    v: np.ndarray
    adv: np.ndarray


@dataclasses.dataclass(frozen=True)
class SoftValueTables:
    """Entropy-augmented values at bonus weight eta.

    q_soft satisfies q_soft = r + gamma P_pi (q_soft - eta log pi);
    v_soft(s) = sum_a pi (q_soft - eta log pi);
    adv_soft = q_soft - eta log pi - v_soft.
    """

    q_soft: np.ndarray
    v_soft: np.ndarray
    adv_soft: np.ndarray
    eta: float


@dataclasses.dataclass(frozen=True)
class ContractionCertificate:
    """Witness that A = I - D_mu (I - gamma P_pi) contracts in one l_p norm.

    kappa0 = 1 - (1 - gamma) d_mu_min bounds the row sums; p_norm is the
    smallest even p >= 2 with 2 kappa0^(p-1) < 1; kappa = (2 kappa0^(p-1))^(1/p)
    is the certified contraction modulus; empirical_ratio_max is the largest
    ||A x||_p / ||x||_p seen over random probes.
    """

    p_norm: float
    kappa0: float
    kappa: float
    d_mu_min: float
    empirical_ratio_max: float


@dataclasses.dataclass(frozen=True)
class MixingEstimate:
    """Geometric envelope tv(n) <= c0 tau^n for distance to stationarity.

    tv_curve[i] is the worst-row L1 distance between the (i+1)-step transition
    kernel and the stationary distribution. Recording stops early if the curve
    reaches the 1e-12 noise floor. tau_alpha(alpha) inverts the envelope.
    """

    tv_curve: np.ndarray
    tau: float
    c0: float

    def tau_alpha(self, alpha: float) -> int:
        """Smallest n >= 0 with c0 * tau^n <= alpha."""
        if alpha <= 0.0:
            raise ValueError(f"alpha must be positive, got {alpha}")
        if self.c0 <= alpha:
            return 0
        n = max(0, math.ceil(math.log(alpha / self.c0) / math.log(self.tau)))
        while self.c0 * self.tau**n > alpha:  # guard the ceil against roundoff
            n += 1
        return n


def lp_norm(x: np.ndarray, p: float) -> float:
    """l_p norm, max-rescaled so huge p (the certificate regime) cannot overflow."""
    ax = np.abs(np.asarray(x, dtype=float))
    m = float(ax.max()) if ax.size else 0.0
    if m == 0.0 or math.isinf(p):
        return m
    return m * float(np.sum((ax / m) ** p)) ** (1.0 / p)


def state_transition_matrix(
    mdp: TabularMdp, policy_table: np.ndarray, reset_absorbing: bool = False
) -> np.ndarray:
    """State chain P[s, s'] = sum_a policy(a|s) p(s'|s, a).

    With reset_absorbing, absorbing states instead jump to the initial
    distribution — the episode-boundary chain the trainer actually follows.
    """
    trans = _kernel(mdp, reset_absorbing)
    return np.einsum("saj,sa->sj", trans, policy_table)


def pair_transition_matrix(
    mdp: TabularMdp, policy_table: np.ndarray, reset_absorbing: bool = False
) -> np.ndarray:
    """State-action chain P[(s,a), (s',a')] = p(s'|s,a) policy(a'|s'), flattened row-major."""
    trans = _kernel(mdp, reset_absorbing)
    m = trans[:, :, :, None] * policy_table[None, None, :, :]
    return m.reshape(mdp.num_pairs, mdp.num_pairs)


def _kernel(mdp: TabularMdp, reset_absorbing: bool) -> np.ndarray:
    if not reset_absorbing:
        return mdp.transition
    trans = mdp.transition.copy()
    for s in mdp.absorbing_states():
        trans[s, :, :] = mdp.initial_dist
    return trans


def exact_q(mdp: TabularMdp, policy_table: np.ndarray) -> ValueTables:
    """Solve (I - gamma P_pi) q = r exactly; derive v and the advantage."""
    k = mdp.num_pairs
    p_sa = pair_transition_matrix(mdp, policy_table)
    r_flat = mdp.reward.reshape(k)
    q_flat = np.linalg.solve(np.eye(k) - mdp.gamma * p_sa, r_flat)
    residual = float(
        np.max(np.abs((np.eye(k) - mdp.gamma * p_sa) @ q_flat - r_flat))
    )
    if residual > SOLVE_RESIDUAL_TOL:
        raise RuntimeError(f"value solve residual {residual:.3e} exceeds {SOLVE_RESIDUAL_TOL}")
    q = q_flat.reshape(mdp.num_states, mdp.num_actions)
    v = np.sum(policy_table * q, axis=1)
    return ValueTables(q=q, v=v, adv=q - v[:, None])


def exact_soft_q(mdp: TabularMdp, policy_table: np.ndarray, eta: float) -> SoftValueTables:
    """Values under reward augmented with eta * entropy of the policy.

    At eta = 0 this takes the exact_q code path, so the outputs bit-match.
    Rejects eta > 0 when any action probability is zero (log pi undefined).
    """
    if eta < 0.0:
        raise ValueError(f"eta must be nonnegative, got {eta}")
    if eta == 0.0:
        plain = exact_q(mdp, policy_table)
        return SoftValueTables(q_soft=plain.q, v_soft=plain.v, adv_soft=plain.adv, eta=0.0)
    if np.any(policy_table <= 0.0):
        raise ValueError("eta > 0 requires strictly positive action probabilities")

    k = mdp.num_pairs
    p_sa = pair_transition_matrix(mdp, policy_table)
    log_p = np.log(policy_table)
    r_flat = mdp.reward.reshape(k)
    rhs = r_flat + mdp.gamma * (p_sa @ (-eta * log_p.reshape(k)))
    q_flat = np.linalg.solve(np.eye(k) - mdp.gamma * p_sa, rhs)
    # Residual of the defining recursion q = r + gamma P_pi (q - eta log pi).
    residual = float(
        np.max(np.abs(q_flat - (r_flat + mdp.gamma * (p_sa @ (q_flat - eta * log_p.reshape(k))))))
    )
    if residual > SOLVE_RESIDUAL_TOL:
        raise RuntimeError(f"soft value solve residual {residual:.3e} exceeds {SOLVE_RESIDUAL_TOL}")
    q_soft = q_flat.reshape(mdp.num_states, mdp.num_actions)
    v_soft = np.sum(policy_table * (q_soft - eta * log_p), axis=1)
    return SoftValueTables(
        q_soft=q_soft,
        v_soft=v_soft,
        adv_soft=q_soft - eta * log_p - v_soft[:, None],
        eta=float(eta),
    )


def stationary_distribution(
    chain: np.ndarray, tol: float = 1e-12, max_iters: int = 10**6
) -> np.ndarray:
    """Stationary d of a row-stochastic matrix: d^T P = d^T, sum d = 1.

    Power iteration from uniform doubles as the ergodicity check (periodic
    chains never settle and hit the iteration cap); an augmented least-squares
    solve then polishes the converged estimate to full precision.
    """
    chain = np.asarray(chain, dtype=float)
    n = chain.shape[0]
    if chain.shape != (n, n):
        raise ValueError(f"chain must be square, got shape {chain.shape}")
    if np.any(chain < 0.0) or np.max(np.abs(chain.sum(axis=1) - 1.0)) > 1e-10:
        raise ValueError("chain rows must be probability distributions")

    d = np.full(n, 1.0 / n)
    for _ in range(max_iters):
        d_next = d @ chain
        if float(np.abs(d_next - d).sum()) < tol:
            d = d_next
            break
        d = d_next
    else:
        raise RuntimeError(
            f"power iteration did not converge in {max_iters} steps; chain appears non-ergodic"
        )

    # Precision backstop: solve d^T (P - I) = 0 with the normalization row.
    a = np.vstack([chain.T - np.eye(n), np.ones(n)])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    d_exact = np.linalg.lstsq(a, b, rcond=None)[0]
    d_exact = np.clip(d_exact, 0.0, None)
    d_exact /= d_exact.sum()
    residual = float(np.abs(d_exact @ chain - d_exact).sum())
    if residual > 1e-10:
        raise RuntimeError(f"stationary solve residual {residual:.3e} exceeds 1e-10")
    return d_exact


def discounted_occupancy(
    mdp: TabularMdp, policy_table: np.ndarray, start: np.ndarray
) -> np.ndarray:
    """Normalized discounted state occupancy d = (1-gamma)(I - gamma P_pi^T)^(-1) start."""
    p_state = state_transition_matrix(mdp, policy_table)
    start = np.asarray(start, dtype=float)
    d = (1.0 - mdp.gamma) * np.linalg.solve(
        np.eye(mdp.num_states) - mdp.gamma * p_state.T, start
    )
    residual = float(
        np.max(np.abs(d - (1.0 - mdp.gamma) * start - mdp.gamma * (p_state.T @ d)))
    )
    if residual > SOLVE_RESIDUAL_TOL:
        raise RuntimeError(f"occupancy solve residual {residual:.3e} exceeds {SOLVE_RESIDUAL_TOL}")
    return d


def exact_objective_and_gradients(
    mdp: TabularMdp,
    params: PolicyParams,
    eta: float,
    reg_kind: str,
    start: np.ndarray,
) -> tuple[float, float, np.ndarray]:
    """Exact objective, regularized objective, and the regularized gradient.

    J = sum_s start(s) v_pi(s) in both cases. reg_kind selects the penalty:

    - "kl_uniform": J_reg = J - eta * mean_s KL(uniform || pi(.|s)) and the
      gradient is the exact policy gradient minus eta times the KL gradient
      averaged over states.
    - "entropy": J_reg = sum_s start(s) v_soft(s), the discounted return with
      an eta-weighted entropy bonus, and the gradient weights the soft
      advantage by the occupancy measure.

    The gradient is returned as a (num_states, num_actions) array aligned
    with theta.
    """
    if reg_kind not in ("kl_uniform", "entropy"):
        raise ValueError(f"reg_kind must be 'kl_uniform' or 'entropy', got {reg_kind!r}")
    if eta < 0.0:
        raise ValueError(f"eta must be nonnegative, got {eta}")
    start = np.asarray(start, dtype=float)
    pol = pi_table(params)
    values = exact_q(mdp, pol)
    j = float(start @ values.v)
    d_occ = discounted_occupancy(mdp, pol, start)
    pg = d_occ[:, None] * pol * values.adv / (1.0 - mdp.gamma)

    if reg_kind == "kl_uniform":
        s_count, a_count = pol.shape
        log_p = log_pi_table(params)
        kl_per_state = -math.log(a_count) - log_p.sum(axis=1) / a_count
        j_reg = j - eta * float(kl_per_state.mean())
        grad = pg - eta * (pol - 1.0 / a_count) / s_count
        return j, j_reg, grad

    soft = exact_soft_q(mdp, pol, eta)
    j_reg = float(start @ soft.v_soft)
    grad = d_occ[:, None] * pol * soft.adv_soft / (1.0 - mdp.gamma)
    return j, j_reg, grad


def contraction_certificate(
    mdp: TabularMdp,
    params: PolicyParams,
    cfg,
    probes: int = 32,
    rng=None,
) -> ContractionCertificate:
    """Certify the expected critic-update matrix A = I - D_mu (I - gamma P_pi).

    D_mu is built from the stationary state-action distribution of the
    behavior chain; on MDPs with absorbing states that chain follows the
    episode-boundary dynamics (absorption jumps to the initial distribution,
    matching the trainer's reset), since the raw absorbing chain parks all
    stationary mass on the terminal state. P_pi keeps the raw kernel — it is
    what the critic bootstraps through.

    Verifies the three structural facts behind the contraction (nonnegative
    entries, row sums equal to 1 - (1-gamma) d_sa, column sums below 2), picks
    the smallest even p with 2 kappa0^(p-1) < 1, and probes ||A x||_p /
    ||x||_p on random vectors. Raises RuntimeError if any structural property
    or probe falsifies the certificate.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    pol = pi_table(params)
    beh = mu_table(params, cfg)
    d_state = stationary_distribution(state_transition_matrix(mdp, beh, reset_absorbing=True))
    d_sa = (d_state[:, None] * beh).reshape(mdp.num_pairs)
    d_mu_min = float(d_sa.min())
    if d_mu_min <= 0.0:
        raise RuntimeError("behavior chain leaves some state-action pair unvisited")
    kappa0 = 1.0 - (1.0 - mdp.gamma) * d_mu_min

    k = mdp.num_pairs
    p_pi = pair_transition_matrix(mdp, pol)
    a_mat = np.eye(k) - d_sa[:, None] * (np.eye(k) - mdp.gamma * p_pi)

    if float(a_mat.min()) < -1e-10:
        raise RuntimeError(f"A has a negative entry: {float(a_mat.min()):.3e}")
    col_max = float(a_mat.sum(axis=0).max())
    if col_max >= 2.0 + 1e-10:
        raise RuntimeError(f"A has column sum {col_max!r} >= 2")
    row_sums = a_mat.sum(axis=1)
    expected_rows = 1.0 - (1.0 - mdp.gamma) * d_sa
    row_gap = float(np.max(np.abs(row_sums - expected_rows)))
    if row_gap > 1e-12:
        raise RuntimeError(f"row-sum identity violated by {row_gap:.3e}")
    if float(row_sums.min()) <= 0.0 or float(row_sums.max()) > kappa0 + 1e-10:
        raise RuntimeError("row sums escape (0, kappa0]")

    p = max(2, math.ceil(1.0 + math.log(2.0) / -math.log(kappa0)))
    if p % 2:
        p += 1
    while 2.0 * kappa0 ** (p - 1) >= 1.0:
        p += 2
    kappa = (2.0 * kappa0 ** (p - 1)) ** (1.0 / p)

    ratio_max = 0.0
    for _ in range(probes):
        x = rng.standard_normal(k)
        ratio = lp_norm(a_mat @ x, p) / lp_norm(x, p)
        ratio_max = max(ratio_max, ratio)
    if ratio_max > kappa + 1e-9:
        raise RuntimeError(
            f"probe ratio {ratio_max!r} exceeds certified kappa {kappa!r}"
        )
    return ContractionCertificate(
        p_norm=float(p),
        kappa0=kappa0,
        kappa=kappa,
        d_mu_min=d_mu_min,
        empirical_ratio_max=ratio_max,
    )


def mixing_estimate(chain: np.ndarray, horizon: int = 200) -> MixingEstimate:
    """Fit a geometric envelope on the worst-row distance to stationarity.

    tv_curve[n-1] = max_s sum_j |P^n(s, j) - d(j)| for n = 1..horizon,
    truncated once the curve falls below 1e-12 (beyond that it is roundoff,
    not mixing). (c0, tau) come from least squares on log tv over the tail
    n >= 5 — early points carry transient curvature — and c0 is then inflated
    so tv[n] <= c0 tau^n holds at every recorded point.
    """
    chain = np.asarray(chain, dtype=float)
    d = stationary_distribution(chain)
    curve = []
    p_n = np.eye(chain.shape[0])
    for _ in range(horizon):
        p_n = p_n @ chain
        tv = float(np.abs(p_n - d[None, :]).sum(axis=1).max())
        curve.append(tv)
        if tv < 1e-12:
            break
    curve = np.array(curve)

    steps = np.arange(1, len(curve) + 1)
    usable = curve > 1e-12
    fit_mask = usable & (steps >= 5)
    if fit_mask.sum() < 2:
        fit_mask = usable
    if fit_mask.sum() < 2:
        # One-step mixing (rank-one chains): nothing to fit; any tau works.
        tau = 0.5
        c0 = 1e-15
    else:
        slope, intercept = np.polyfit(steps[fit_mask], np.log(curve[fit_mask]), 1)
        tau = float(np.exp(slope))
        tau = min(max(tau, 1e-15), 1.0 - 1e-12)
        c0 = float(np.exp(intercept))
    if usable.any():
        c0 = max(c0, float(np.max(curve[usable] / tau ** steps[usable])))
    return MixingEstimate(tv_curve=curve, tau=tau, c0=c0)


def optimal_return(mdp: TabularMdp, start: np.ndarray, tol: float = 1e-12) -> float:
    """J at the optimal policy, via value iteration to sup-change tol * (1 - gamma)."""
    start = np.asarray(start, dtype=float)
    v = np.zeros(mdp.num_states)
    threshold = tol * (1.0 - mdp.gamma)
    for _ in range(10**6):
        q = mdp.reward + mdp.gamma * (mdp.transition @ v)
        v_next = q.max(axis=1)
        if float(np.max(np.abs(v_next - v))) <= threshold:
            v = v_next
            break
        v = v_next
    else:
        raise RuntimeError("value iteration did not converge")
    return float(start @ v)
