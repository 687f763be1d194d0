"""Finite MDPs, single-MDP dynamic programming and exact plan evaluation.

Values use the usual ``gamma ** (k - t)`` weighting of future rewards and a
zero terminal value. Greedy choices break ties towards the lowest action
index everywhere in the package.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from mmbi._kernels import value_iteration_kernel

ROW_SUM_TOL = 1e-9


def _frozen(x, dtype=float) -> np.ndarray:
    arr = np.array(x, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class FiniteMdp:
    """Tabular MDP with rewards represented by their means.

    ``outcome_rewards`` is optional: when present it gives the realised
    reward of each transition ``(s, a, s')`` and is used only by the
    simulator. Its transition-weighted average must equal ``mean_rewards``.
    """

    transitions: np.ndarray  # (S, A, S)
    mean_rewards: np.ndarray  # (S, A)
    r_max: float
    outcome_rewards: np.ndarray | None = None

    def __post_init__(self):
        P = _frozen(self.transitions)
        R = _frozen(self.mean_rewards)
        if P.ndim != 3 or P.shape[0] != P.shape[2]:
            raise ValueError(f"transitions must have shape (S, A, S), got {P.shape}")
        if R.shape != P.shape[:2]:
            raise ValueError(f"mean_rewards must have shape {P.shape[:2]}, got {R.shape}")
        if not self.r_max > 0:
            raise ValueError("r_max must be positive")
        object.__setattr__(self, "transitions", P)
        object.__setattr__(self, "mean_rewards", R)
        object.__setattr__(self, "r_max", float(self.r_max))
        if self.outcome_rewards is not None:
            O = _frozen(self.outcome_rewards)
            if O.shape != P.shape:
                raise ValueError(f"outcome_rewards must have shape {P.shape}, got {O.shape}")
            object.__setattr__(self, "outcome_rewards", O)

    @property
    def n_states(self) -> int:
        return self.transitions.shape[0]

    @property
    def n_actions(self) -> int:
        return self.transitions.shape[1]

    def to_dict(self) -> dict:
        d = {
            "n_states": self.n_states,
            "n_actions": self.n_actions,
            "r_max": self.r_max,
            "transitions": self.transitions.tolist(),
            "mean_rewards": self.mean_rewards.tolist(),
        }
        if self.outcome_rewards is not None:
            d["outcome_rewards"] = self.outcome_rewards.tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FiniteMdp":
        mdp = cls(
            transitions=d["transitions"],
            mean_rewards=d["mean_rewards"],
            r_max=d["r_max"],
            outcome_rewards=d.get("outcome_rewards"),
        )
        if (mdp.n_states, mdp.n_actions) != (d["n_states"], d["n_actions"]):
            raise ValueError("declared dimensions do not match the tables")
        problems = validate_mdp(mdp)
        if problems:
            raise ValueError("invalid MDP: " + "; ".join(problems))
        return mdp

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "FiniteMdp":
        return cls.from_dict(json.loads(text))


def load_mdp(path: str | Path) -> FiniteMdp:
    return FiniteMdp.from_json(Path(path).read_text())


def validate_mdp(mdp: FiniteMdp) -> list[str]:
    """Return a list of human-readable invariant violations (empty if valid)."""
    problems = []
    P, R = mdp.transitions, mdp.mean_rewards
    for s, a in zip(*np.nonzero((P < 0).any(axis=2))):
        problems.append(f"negative transition probability at (s={s}, a={a})")
    sums = P.sum(axis=2)
    for s, a in zip(*np.nonzero(np.abs(sums - 1.0) > ROW_SUM_TOL)):
        problems.append(f"transition row (s={s}, a={a}) sums to {sums[s, a]:.12g}, not 1")
    for s, a in zip(*np.nonzero((R < 0) | (R > mdp.r_max))):
        problems.append(f"mean reward {R[s, a]:.12g} at (s={s}, a={a}) outside [0, {mdp.r_max:g}]")
    if mdp.outcome_rewards is not None:
        O = mdp.outcome_rewards
        if ((O < 0) | (O > mdp.r_max)).any():
            problems.append(f"outcome rewards outside [0, {mdp.r_max:g}]")
        implied = (P * O).sum(axis=2)
        if not np.allclose(implied, R, atol=1e-9, rtol=0):
            problems.append("outcome rewards inconsistent with mean rewards")
    return problems


@dataclass(frozen=True, eq=False)
class MemorylessPlan:
    """Deterministic non-stationary policy: ``actions[t, s]`` for t < horizon."""

    actions: np.ndarray  # (T, S) ints

    def __post_init__(self):
        acts = _frozen(self.actions, dtype=np.int64)
        if acts.ndim != 2 or acts.shape[0] < 1:
            raise ValueError("plan must be a (T, S) array with T >= 1")
        object.__setattr__(self, "actions", acts)

    @property
    def horizon(self) -> int:
        return self.actions.shape[0]

    def first_step(self) -> "StationaryPolicy":
        return StationaryPolicy(self.actions[0])

    def check(self, n_actions: int) -> None:
        if (self.actions < 0).any() or (self.actions >= n_actions).any():
            raise ValueError("plan contains invalid action indices")


@dataclass(frozen=True, eq=False)
class StationaryPolicy:
    actions: np.ndarray  # (S,) ints

    def __post_init__(self):
        object.__setattr__(self, "actions", _frozen(self.actions, dtype=np.int64))

    def __getitem__(self, s: int) -> int:
        return int(self.actions[s])


def _check_discount(gamma: float, allow_zero: bool = True) -> None:
    lo_ok = gamma >= 0 if allow_zero else gamma > 0
    if not (lo_ok and gamma < 1):
        raise ValueError(f"discount must lie in {'[0' if allow_zero else '(0'}, 1), got {gamma}")


def _backup(P: np.ndarray, R: np.ndarray, gamma: float, v_next: np.ndarray) -> np.ndarray:
    return R + gamma * (P @ v_next)


def solve_finite_horizon(mdp: FiniteMdp, gamma: float, T: int):
    """Backward induction over ``T`` stages with zero terminal value.

    Returns ``(Q, plan)`` with ``Q`` of shape (T, S, A).
    """
    _check_discount(gamma)
    if T < 1:
        raise ValueError("horizon must be at least 1")
    P, R = mdp.transitions, mdp.mean_rewards
    Q = np.empty((T,) + R.shape)
    v = np.zeros(mdp.n_states)
    for t in range(T - 1, -1, -1):
        Q[t] = _backup(P, R, gamma, v)
        v = Q[t].max(axis=1)
    # np.argmax returns the first maximiser, i.e. the lowest action index
    return Q, MemorylessPlan(Q.argmax(axis=2))


def horizon_for_epsilon(epsilon: float, gamma: float, r_max: float) -> int:
    """Truncation horizon bounding the discounted tail by ``epsilon``."""
    if not (epsilon > 0 and 0 < gamma < 1 and r_max > 0):
        raise ValueError("need epsilon > 0, 0 < gamma < 1 and r_max > 0")
    ratio = epsilon * (1 - gamma) / r_max
    if ratio >= 1:
        return 1
    return max(1, math.ceil(math.log(ratio) / math.log(gamma)))


def solve_discounted(mdp: FiniteMdp, gamma: float, epsilon: float):
    """Infinite-horizon value iteration truncated to ``horizon_for_epsilon`` sweeps.

    Returns ``(Q, policy)``; ``Q`` is within ``epsilon`` of the optimal
    Q-function in sup norm.
    """
    _check_discount(gamma, allow_zero=False)
    sweeps = horizon_for_epsilon(epsilon, gamma, mdp.r_max)
    q, policy, _ = value_iteration_kernel(mdp.transitions, mdp.mean_rewards, gamma, sweeps)
    return q, StationaryPolicy(policy)


def evaluate_plan_exact(mdp: FiniteMdp, plan: MemorylessPlan, gamma: float, T: int | None = None) -> np.ndarray:
    """Value ``V_0`` of a fixed plan: no maximisation, zero terminal value."""
    if T is not None and T != plan.horizon:
        raise ValueError(f"plan horizon {plan.horizon} does not match requested horizon {T}")
    plan.check(mdp.n_actions)
    P, R = mdp.transitions, mdp.mean_rewards
    states = np.arange(mdp.n_states)
    v = np.zeros(mdp.n_states)
    for t in range(plan.horizon - 1, -1, -1):
        a = plan.actions[t]
        v = R[states, a] + gamma * (P[states, a] @ v)
    return v


def evaluate_stationary(mdp: FiniteMdp, policy: StationaryPolicy, gamma: float) -> np.ndarray:
    """Infinite-horizon discounted value of a stationary policy by a linear solve."""
    _check_discount(gamma)
    states = np.arange(mdp.n_states)
    P_pi = mdp.transitions[states, policy.actions]
    r_pi = mdp.mean_rewards[states, policy.actions]
    return np.linalg.solve(np.eye(mdp.n_states) - gamma * P_pi, r_pi)
