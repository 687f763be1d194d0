"""The Chain benchmark and a seeded episode simulator."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mmbi.agents import AgentConfig, make_agent, optimal_total_reward_plan
from mmbi.belief import DirichletBetaBelief
from mmbi.mdp import FiniteMdp

# RETURN is action 0, so the lowest-index tie-break under a flat prior resets
RETURN, FORWARD = 0, 1
CHAIN_START = 0


def chain_task(n_states: int = 5, slip: float = 0.2, small: float = 2.0, large: float = 10.0) -> FiniteMdp:
    """Chain with slip noise; states are 0-indexed and the start state is 0.

    FORWARD moves one step right (staying put at the end, where it pays
    ``large``); RETURN jumps back to state 0 and pays ``small``. With
    probability ``slip`` the effect of the other action occurs instead.
    """
    S, A = n_states, 2
    P = np.zeros((S, A, S))
    O = np.zeros((S, A, S))
    R = np.zeros((S, A))

    def effect(s, a):
        if a == FORWARD:
            return min(s + 1, S - 1), (large if s == S - 1 else 0.0)
        return 0, small

    for s in range(S):
        for a in (FORWARD, RETURN):
            other = RETURN if a == FORWARD else FORWARD
            for eff, p in ((a, 1.0 - slip), (other, slip)):
                s2, r = effect(s, eff)
                P[s, a, s2] += p
                R[s, a] += p * r
                O[s, a, s2] = r
    return FiniteMdp(P, R, max(small, large), outcome_rewards=O)


@dataclass
class RunRecord:
    run: int
    seed: int
    total_reward: float
    discounted_utility: float
    states: np.ndarray | None = None
    actions: np.ndarray | None = None
    rewards: np.ndarray | None = None


def run_streams(seed: int, run: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent (environment, agent) generators for one run.

    The environment stream depends only on (seed, run), so every agent
    compared under the same seed sees the same environment randomness.
    """
    env_seq, agent_seq = np.random.SeedSequence([seed, run]).spawn(2)
    return np.random.default_rng(env_seq), np.random.default_rng(agent_seq)


def run_episode(
    true_mdp: FiniteMdp,
    config: AgentConfig,
    prior: DirichletBetaBelief,
    T: int,
    seed: int,
    run: int = 0,
    start_state: int = CHAIN_START,
    keep_trajectory: bool = True,
) -> RunRecord:
    """Simulate ``T`` steps of an agent in ``true_mdp``.

    Step ``t`` consumes the ``t``-th uniform of the environment stream, so
    the environment's draws never depend on the agent.
    """
    env_rng, agent_rng = run_streams(seed, run)
    uniforms = env_rng.random(T)
    agent = make_agent(config, prior, agent_rng, true_mdp=true_mdp, horizon=T)
    cum = np.cumsum(true_mdp.transitions, axis=2)
    last = true_mdp.n_states - 1
    outcome = true_mdp.outcome_rewards
    means = true_mdp.mean_rewards
    gamma = config.gamma
    states = np.empty(T, dtype=np.int64)
    actions = np.empty(T, dtype=np.int64)
    rewards = np.empty(T)
    s = start_state
    total = utility = 0.0
    weight = 1.0
    for t in range(T):
        a = agent.act(s)
        s2 = min(int(np.searchsorted(cum[s, a], uniforms[t], side="right")), last)
        r = float(outcome[s, a, s2]) if outcome is not None else float(means[s, a])
        agent.observe(s, a, r, s2)
        states[t], actions[t], rewards[t] = s, a, r
        total += r
        utility += weight * r
        weight *= gamma
        s = s2
    rec = RunRecord(run, seed, total, utility)
    if keep_trajectory:
        rec.states, rec.actions, rec.rewards = states, actions, rewards
    return rec


def oracle_total_reward(mdp: FiniteMdp, T: int, start_state: int = CHAIN_START) -> float:
    """Optimal expected undiscounted total reward over ``T`` steps."""
    v, _ = optimal_total_reward_plan(mdp, T)
    return float(v[start_state])
