"""Planning over weighted MDP sets: MMBI, MSBI and a Bayes-optimal oracle.

MMBI runs backwards induction while holding the belief over the set fixed at
its initial weights. At each stage the action maximising the weight-averaged
Q-value is chosen per state, and every member MDP then propagates its own
value of that action. The resulting plan is memoryless and the returned
stage-0 values are its exact expected utility under the weights.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from mmbi._kernels import mmbi_kernel
from mmbi.belief import DirichletBetaBelief, sample_arrays, weight_l1_distance
from mmbi.mdp import FiniteMdp, MemorylessPlan, _check_discount, evaluate_plan_exact, horizon_for_epsilon

WEIGHT_SUM_TOL = 1e-12
MAX_TREE_NODES = 10**6


@dataclass(frozen=True, eq=False)
class WeightedMdpSet:
    """Finite MDP set with probability weights, stored as stacked arrays."""

    transitions: np.ndarray  # (n, S, A, S)
    mean_rewards: np.ndarray  # (n, S, A)
    weights: np.ndarray  # (n,)
    r_max: float

    def __post_init__(self):
        P = np.ascontiguousarray(self.transitions, dtype=float)
        R = np.ascontiguousarray(self.mean_rewards, dtype=float)
        w = np.ascontiguousarray(self.weights, dtype=float)
        if P.ndim != 4 or R.shape != P.shape[:3] or w.shape != P.shape[:1]:
            raise ValueError(
                f"dimension mismatch: transitions {P.shape}, rewards {R.shape}, weights {w.shape}"
            )
        if (w < 0).any() or abs(w.sum() - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError("weights must be nonnegative and sum to 1")
        for name, arr in (("transitions", P), ("mean_rewards", R), ("weights", w)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "r_max", float(self.r_max))

    @classmethod
    def from_mdps(cls, mdps, weights=None) -> "WeightedMdpSet":
        mdps = list(mdps)
        if not mdps:
            raise ValueError("empty MDP set")
        first = mdps[0]
        for m in mdps[1:]:
            if m.transitions.shape != first.transitions.shape:
                raise ValueError("member MDPs have different state/action dimensions")
            if m.r_max != first.r_max:
                raise ValueError("member MDPs have different r_max")
        if weights is None:
            weights = np.full(len(mdps), 1.0 / len(mdps))
        return cls(
            np.stack([m.transitions for m in mdps]),
            np.stack([m.mean_rewards for m in mdps]),
            weights,
            first.r_max,
        )

    def __len__(self) -> int:
        return self.transitions.shape[0]

    @property
    def n_states(self) -> int:
        return self.transitions.shape[1]

    @property
    def n_actions(self) -> int:
        return self.transitions.shape[2]

    @property
    def mdps(self) -> list[FiniteMdp]:
        return [FiniteMdp(P, R, self.r_max) for P, R in zip(self.transitions, self.mean_rewards)]

    def with_weights(self, weights) -> "WeightedMdpSet":
        return WeightedMdpSet(self.transitions, self.mean_rewards, weights, self.r_max)

    def expected_mdp(self) -> FiniteMdp:
        w = self.weights
        P = np.tensordot(w, self.transitions, axes=1)
        R = np.tensordot(w, self.mean_rewards, axes=1)
        # renormalise away rounding so the result validates
        P = P / P.sum(axis=2, keepdims=True)
        return FiniteMdp(P, np.clip(R, 0.0, self.r_max), self.r_max)


@dataclass(frozen=True, eq=False)
class MmbiResult:
    plan: MemorylessPlan
    belief_q: np.ndarray  # (T, S, A)
    root_mdp_values: np.ndarray  # (n, S): each member's value of the plan at stage 0
    per_mdp_v: np.ndarray | None  # (T + 1, n, S) when diagnostics were requested
    weights: np.ndarray

    @property
    def root_values(self) -> np.ndarray:
        """Expected utility of the plan under the weights, per start state."""
        return self.weights @ self.root_mdp_values

    def to_dict(self) -> dict:
        return {
            "horizon": self.plan.horizon,
            "plan": self.plan.actions.tolist(),
            "root_values": self.root_values.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def mmbi(mdp_set: WeightedMdpSet, gamma: float, T: int, diagnostics: bool = True) -> MmbiResult:
    """Multi-MDP backwards induction over ``T`` stages."""
    _check_discount(gamma)
    if T < 1:
        raise ValueError("horizon must be at least 1")
    plan, belief_q, values = mmbi_kernel(
        mdp_set.transitions, mdp_set.mean_rewards, mdp_set.weights, float(gamma), int(T), diagnostics
    )
    return MmbiResult(
        plan=MemorylessPlan(plan),
        belief_q=belief_q,
        root_mdp_values=values[0].copy(),
        per_mdp_v=values if diagnostics else None,
        weights=mdp_set.weights,
    )


def mixture_plan_value(mdp_set: WeightedMdpSet, plan: MemorylessPlan, gamma: float) -> np.ndarray:
    """Weight-average of the plan's exact value in every member MDP."""
    if plan.actions.shape[1] != mdp_set.n_states:
        raise ValueError("plan does not match the set's state count")
    values = np.stack([evaluate_plan_exact(m, plan, gamma) for m in mdp_set.mdps])
    return mdp_set.weights @ values


def sample_count(epsilon: float, gamma: float, r_max: float) -> int:
    """Number of posterior samples giving expected loss at most ``epsilon``.

    Computed in exact rational arithmetic so integer cases do not round up.
    """
    if not (epsilon > 0 and 0 < gamma < 1):
        raise ValueError("need epsilon > 0 and 0 < gamma < 1")
    base = Fraction(3) * Fraction(r_max) / (Fraction(epsilon) * (1 - Fraction(gamma)))
    return max(1, math.ceil(base**3))


def msbi(
    belief: DirichletBetaBelief,
    gamma: float,
    epsilon: float,
    rng: np.random.Generator,
    n_override: int | None = None,
    horizon: int | None = None,
    diagnostics: bool = False,
) -> tuple[MemorylessPlan, MmbiResult]:
    """Run MMBI on MDPs sampled from the posterior with uniform weights.

    ``n_override`` replaces the sample count implied by ``epsilon`` (which is
    astronomically large for realistic tolerances); ``horizon`` likewise
    replaces the truncation horizon.
    """
    if n_override is not None:
        if n_override < 1:
            raise ValueError("n_override must be at least 1")
        n = n_override
    else:
        n = sample_count(epsilon, gamma, belief.r_max)
    T = horizon if horizon is not None else horizon_for_epsilon(epsilon, gamma, belief.r_max)
    P, R = sample_arrays(belief, rng, n)
    mdp_set = WeightedMdpSet(P, R, np.full(n, 1.0 / n), belief.r_max)
    result = mmbi(mdp_set, gamma, T, diagnostics=diagnostics)
    return result.plan, result


def theorem1_gap_bound(epsilon: float, gamma: float, r_max: float) -> float:
    """Gap to the Bayes-optimal value when the posterior drifts by at most ``epsilon`` in L1."""
    if epsilon < 0 or not 0 < gamma < 1:
        raise ValueError("need epsilon >= 0 and 0 < gamma < 1")
    return r_max * epsilon / (1 - gamma) ** 2


@dataclass
class BayesOptimalResult:
    values: np.ndarray  # (S,) Bayes-optimal expected utility per start state
    policy: dict  # (start_state, history) -> action; history is a tuple of (a, s')
    max_drift: float  # largest L1 distance between root and any reachable posterior


def bayes_optimal_tiny(mdp_set: WeightedMdpSet, gamma: float, T: int) -> BayesOptimalResult:
    """Exact Bayes-optimal planning by enumerating the belief tree.

    Posterior weights over the set are updated by Bayes' rule on observed
    transitions. Only feasible for tiny instances.
    """
    _check_discount(gamma)
    n, S, A = len(mdp_set), mdp_set.n_states, mdp_set.n_actions
    est_nodes = n * (S * A) ** T
    if est_nodes > MAX_TREE_NODES:
        raise ValueError(f"instance too large for exact belief-tree search (~{est_nodes} nodes)")
    P, R = mdp_set.transitions, mdp_set.mean_rewards
    root_w = mdp_set.weights
    policy = {}
    drift = [0.0]

    def value(t, s, w, key):
        if t == T:
            return 0.0
        drift[0] = max(drift[0], weight_l1_distance(root_w, w))
        best_q, best_a = -math.inf, 0
        for a in range(A):
            q = float(w @ R[:, s, a])
            joint = w[:, None] * P[:, s, a, :]  # (n, S')
            pred = joint.sum(axis=0)
            for s2 in range(S):
                if pred[s2] <= 0:
                    continue
                q += gamma * pred[s2] * value(t + 1, s2, joint[:, s2] / pred[s2], key + ((a, s2),))
            if q > best_q:
                best_q, best_a = q, a
        policy[key] = best_a
        return best_q

    values = np.array([value(0, s, root_w, (s,)) for s in range(S)])
    return BayesOptimalResult(values, policy, drift[0])
