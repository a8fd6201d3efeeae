"""Generic stochastic-approximation iterate with pluggable operator families.

The iterate is w <- w + alpha_t (F_control(w, y) - w + noise), where y is an
observation the engine treats opaquely (the critic instances use transition
triples (s0, a0, s1)). Operator families bundle the update target F with an
optional exact fixed-point oracle so tracking error against the moving truth
can be measured.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .mdp import TabularMdp
from .oracle import exact_q, exact_soft_q, lp_norm
from .policy import PolicyParams, pi_table


@dataclasses.dataclass
class SaState:
    """The iterate w, its step counter, and an optional (t, error) log."""

    w: np.ndarray
    t: int = 0
    tracking_log: list | None = None


class OperatorFamily:
    """Interface: a parameterized update target F_control(w, y).

    apply must be deterministic given (control, w, y). fixed_point_oracle
    returns the exact fixed point w*_control when one is computable, else None.
    """

    def apply(self, control, w: np.ndarray, y) -> np.ndarray:
        raise NotImplementedError

    def fixed_point_oracle(self, control) -> np.ndarray | None:
        return None


def sa_step(
    state: SaState,
    family: OperatorFamily,
    control,
    y,
    alpha_t: float,
    noise: np.ndarray | None = None,
) -> SaState:
    """One iterate: w <- w + alpha_t (F(w, y) - w + noise); t <- t + 1.

    noise defaults to zero (the critic instances never inject any). Returns a
    fresh SaState; the input state is not mutated.
    """
    target = family.apply(control, state.w, y)
    if target.shape != state.w.shape:
        raise ValueError(f"operator output shape {target.shape} != iterate shape {state.w.shape}")
    increment = target - state.w
    if noise is not None:
        noise = np.asarray(noise, dtype=float)
        if noise.shape != state.w.shape:
            raise ValueError(f"noise shape {noise.shape} != iterate shape {state.w.shape}")
        increment = increment + noise
    return SaState(
        w=state.w + alpha_t * increment,
        t=state.t + 1,
        tracking_log=state.tracking_log,
    )


class _ExpectedSarsaFamily(OperatorFamily):
    """F(q, (s0,a0,s1)) = q + indicator(s0,a0) * delta, with delta the
    expected-bootstrap TD error, optionally with an entropy bonus of weight eta."""

    def __init__(self, mdp: TabularMdp, params: PolicyParams, eta: float = 0.0):
        self.mdp = mdp
        self.params = params
        self.eta = float(eta)
        # The bound control is the hot path (fixed-policy tracking runs);
        # cache its policy table once.
        self._pi_default = pi_table(params)
        if self.eta > 0.0:
            self._log_pi_default = np.log(self._pi_default)

    def _policy_rows(self, control):
        if control is None or control is self.params:
            pol = self._pi_default
            log_pol = self._log_pi_default if self.eta > 0.0 else None
        else:
            pol = pi_table(control)
            log_pol = np.log(pol) if self.eta > 0.0 else None
        return pol, log_pol

    def apply(self, control, w: np.ndarray, y) -> np.ndarray:
        s0, a0, s1 = y
        mdp = self.mdp
        pol, log_pol = self._policy_rows(control)
        q = w.reshape(mdp.num_states, mdp.num_actions)
        bootstrap_row = q[s1] if self.eta == 0.0 else q[s1] - self.eta * log_pol[s1]
        delta = (
            float(mdp.reward[s0, a0])
            + mdp.gamma * float(pol[s1] @ bootstrap_row)
            - float(q[s0, a0])
        )
        target = w.copy()
        target[mdp.pair_index(s0, a0)] += delta
        return target

    def fixed_point_oracle(self, control) -> np.ndarray:
        pol, _ = self._policy_rows(control)
        if self.eta == 0.0:
            return exact_q(self.mdp, pol).q.reshape(self.mdp.num_pairs)
        return exact_soft_q(self.mdp, pol, self.eta).q_soft.reshape(self.mdp.num_pairs)


def expected_sarsa_operator(mdp: TabularMdp, params: PolicyParams) -> OperatorFamily:
    """Critic update family whose fixed point is the exact q of the control policy."""
    return _ExpectedSarsaFamily(mdp, params, eta=0.0)


def soft_expected_sarsa_operator(
    mdp: TabularMdp, params: PolicyParams, eta: float
) -> OperatorFamily:
    """Entropy-bonus variant; fixed point is the exact soft q at weight eta."""
    if eta < 0.0:
        raise ValueError(f"eta must be nonnegative, got {eta}")
    return _ExpectedSarsaFamily(mdp, params, eta=eta)


def tracking_error(
    state: SaState, family: OperatorFamily, control, norm_p: float = np.inf
) -> float:
    """||w - w*_control||_p against the family's exact fixed point.

    Appends (t, error) to the state's tracking_log when one is attached.
    """
    w_star = family.fixed_point_oracle(control)
    if w_star is None:
        raise ValueError("operator family has no fixed-point oracle")
    err = lp_norm(state.w - w_star, norm_p)
    if state.tracking_log is not None:
        state.tracking_log.append((state.t, err))
    return err
