"""Online agents acting on a Dirichlet-Beta posterior.

``MCBRLAgent`` replans with MSBI every ``replan_interval`` steps and follows
the first step of the returned plan as a stationary policy in between.
``ExploitAgent`` acts greedily for the expected MDP of the current
posterior, re-solving it after every observation. ``OracleAgent`` knows the
true MDP and follows its undiscounted finite-horizon optimal plan; it is the
reference for regret.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import numpy as np

from mmbi._kernels import value_iteration_kernel
from mmbi.belief import DirichletBetaBelief, expected_arrays, update
from mmbi.mdp import FiniteMdp, horizon_for_epsilon
from mmbi.planner import msbi

AGENT_KINDS = ("mcbrl", "exploit", "oracle")


@dataclass(frozen=True)
class AgentConfig:
    kind: str
    n_samples: int = 1
    replan_interval: int = 20
    gamma: float = 0.95
    plan_horizon: int | None = None  # None: derived from plan_epsilon
    plan_epsilon: float = 0.01
    vi_tolerance: float = 1e-6

    def __post_init__(self):
        if self.kind not in AGENT_KINDS:
            raise ValueError(f"unknown agent kind {self.kind!r}; expected one of {AGENT_KINDS}")
        if self.n_samples < 1:
            raise ValueError("n_samples must be at least 1")
        if self.replan_interval < 1:
            raise ValueError("replan_interval must be at least 1")
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")
        if self.plan_horizon is not None and self.plan_horizon < 1:
            raise ValueError("plan_horizon must be at least 1")
        if self.plan_epsilon <= 0 or self.vi_tolerance <= 0:
            raise ValueError("tolerances must be positive")

    @classmethod
    def from_dict(cls, d: dict) -> "AgentConfig":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown agent config keys: {sorted(extra)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)


class MCBRLAgent:
    def __init__(self, config: AgentConfig, belief: DirichletBetaBelief, rng: np.random.Generator):
        self.config = config
        self.belief = belief
        self.rng = rng
        self.horizon = config.plan_horizon or horizon_for_epsilon(config.plan_epsilon, config.gamma, belief.r_max)
        self.policy = None
        self.steps_since_replan = 0
        self.replans = 0

    def act(self, s: int) -> int:
        if self.policy is None or self.steps_since_replan >= self.config.replan_interval:
            plan, _ = msbi(
                self.belief, self.config.gamma, self.config.plan_epsilon, self.rng,
                n_override=self.config.n_samples, horizon=self.horizon,
            )
            self.policy = plan.actions[0]
            self.steps_since_replan = 0
            self.replans += 1
        return int(self.policy[s])

    def observe(self, s: int, a: int, r: float, s_next: int) -> None:
        self.belief = update(self.belief, s, a, r, s_next)
        self.steps_since_replan += 1


class ExploitAgent:
    def __init__(self, config: AgentConfig, belief: DirichletBetaBelief, rng: np.random.Generator | None = None):
        self.config = config
        self.belief = belief
        self.sweeps = horizon_for_epsilon(config.vi_tolerance, config.gamma, belief.r_max)
        self.policy = None

    def act(self, s: int) -> int:
        if self.policy is None:
            P, R = expected_arrays(self.belief)
            _, self.policy, _ = value_iteration_kernel(P, R, self.config.gamma, self.sweeps)
        return int(self.policy[s])

    def observe(self, s: int, a: int, r: float, s_next: int) -> None:
        self.belief = update(self.belief, s, a, r, s_next)
        self.policy = None


class OracleAgent:
    def __init__(self, true_mdp: FiniteMdp, horizon: int):
        self.plan = optimal_total_reward_plan(true_mdp, horizon)[1]
        self.t = 0

    def act(self, s: int) -> int:
        return int(self.plan[self.t, s])

    def observe(self, s: int, a: int, r: float, s_next: int) -> None:
        self.t += 1


def optimal_total_reward_plan(mdp: FiniteMdp, T: int) -> tuple[np.ndarray, np.ndarray]:
    """Undiscounted ``T``-step backward induction; returns (V_0, plan (T, S))."""
    P, R = mdp.transitions, mdp.mean_rewards
    v = np.zeros(mdp.n_states)
    plan = np.empty((T, mdp.n_states), dtype=np.int64)
    for t in range(T - 1, -1, -1):
        q = R + P @ v
        plan[t] = q.argmax(axis=1)
        v = q.max(axis=1)
    return v, plan


def make_agent(
    config: AgentConfig,
    prior: DirichletBetaBelief,
    rng: np.random.Generator,
    true_mdp: FiniteMdp | None = None,
    horizon: int | None = None,
):
    if config.kind == "mcbrl":
        return MCBRLAgent(config, prior, rng)
    if config.kind == "exploit":
        return ExploitAgent(config, prior, rng)
    if true_mdp is None or horizon is None:
        raise ValueError("the oracle agent needs the true MDP and the run horizon")
    return OracleAgent(true_mdp, horizon)
