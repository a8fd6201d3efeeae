"""Shared test utilities: finite differences, error norms, random MDPs."""

import numpy as np

from opac import TabularMdp


def central_difference(f, theta, h=1e-5):
    """Elementwise central finite-difference gradient of scalar f at theta."""
    theta = np.asarray(theta, dtype=float)
    grad = np.zeros_like(theta)
    it = np.nditer(theta, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        up = theta.copy()
        up[idx] += h
        dn = theta.copy()
        dn[idx] -= h
        grad[idx] = (f(up) - f(dn)) / (2.0 * h)
    return grad


def rel_error(approx, exact):
    """Sup-norm difference scaled by max(sup-norm of exact, 1)."""
    approx = np.asarray(approx, dtype=float)
    exact = np.asarray(exact, dtype=float)
    denom = max(float(np.max(np.abs(exact))), 1.0)
    return float(np.max(np.abs(approx - exact)) / denom)


def random_mdp(rng, num_states, num_actions, gamma):
    """Dense random MDP: Dirichlet transition rows, uniform rewards in [0, 1]."""
    transition = rng.dirichlet(np.ones(num_states), size=(num_states, num_actions))
    reward = rng.uniform(0.0, 1.0, size=(num_states, num_actions))
    initial = rng.dirichlet(np.ones(num_states))
    return TabularMdp(
        num_states=num_states,
        num_actions=num_actions,
        transition=transition,
        reward=reward,
        gamma=gamma,
        initial_dist=initial,
        r_max=1.0,
    )
