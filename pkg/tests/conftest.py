"""Shared fixtures and independent oracles.

The oracles here never call the package's solvers: plans are enumerated
exhaustively and evaluated with a plain per-state recursion, and Monte-Carlo
rollouts sample transitions directly from the tables.
"""
import itertools

import numpy as np
import pytest

from mmbi.mdp import FiniteMdp
from mmbi.planner import WeightedMdpSet


def random_mdp(rng, n_states, n_actions, r_max=1.0):
    P = rng.dirichlet(np.ones(n_states), size=(n_states, n_actions))
    R = rng.uniform(0, r_max, size=(n_states, n_actions))
    return FiniteMdp(P, R, r_max)


def random_set(rng, n_mdps, n_states, n_actions, r_max=1.0, weights=None):
    mdps = [random_mdp(rng, n_states, n_actions, r_max) for _ in range(n_mdps)]
    if weights is None:
        weights = rng.dirichlet(np.ones(n_mdps))
    return WeightedMdpSet.from_mdps(mdps, weights)


def plan_value_loop(P, R, actions, gamma):
    """Value of a fixed (T, S) plan by explicit loops over states."""
    S = len(P)
    v = [0.0] * S
    for t in range(len(actions) - 1, -1, -1):
        v = [
            R[s][actions[t][s]] + gamma * sum(P[s][actions[t][s]][s2] * v[s2] for s2 in range(S))
            for s in range(S)
        ]
    return np.array(v)


def all_plans(n_states, n_actions, T):
    for flat in itertools.product(range(n_actions), repeat=n_states * T):
        yield np.array(flat).reshape(T, n_states)


def brute_force_mixture(mdp_set, gamma, T):
    """Every deterministic memoryless plan with its mixture value per state."""
    Ps = mdp_set.transitions.tolist()
    Rs = mdp_set.mean_rewards.tolist()
    w = mdp_set.weights
    out = []
    for plan in all_plans(mdp_set.n_states, mdp_set.n_actions, T):
        acts = plan.tolist()
        vals = np.stack([plan_value_loop(P, R, acts, gamma) for P, R in zip(Ps, Rs)])
        out.append((plan, w @ vals))
    return out


def mc_plan_value(mdp_set, plan, gamma, start, n_rollouts, rng):
    """Monte-Carlo estimate (mean, standard error) of a plan's mixture value."""
    T = plan.shape[0]
    which = rng.choice(len(mdp_set), size=n_rollouts, p=mdp_set.weights)
    cum = np.cumsum(mdp_set.transitions, axis=3)
    s = np.full(n_rollouts, start)
    ret = np.zeros(n_rollouts)
    disc = 1.0
    for t in range(T):
        a = plan[t, s]
        ret += disc * mdp_set.mean_rewards[which, s, a]
        u = rng.random(n_rollouts)
        s = np.minimum((cum[which, s, a] < u[:, None]).sum(axis=1), mdp_set.n_states - 1)
        disc *= gamma
    return ret.mean(), ret.std(ddof=1) / np.sqrt(n_rollouts)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
