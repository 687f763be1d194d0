"""Lower and upper bounds on the Bayes-optimal value over a weighted MDP set."""
from __future__ import annotations

import csv
import io

import numpy as np

from mmbi.mdp import FiniteMdp, solve_finite_horizon
from mmbi.planner import WeightedMdpSet, mixture_plan_value, mmbi

SWEEP_COLUMNS = ("lambda", "emdp_bound", "mmbi_bound", "upper_bound")


def lower_bound_emdp(mdp_set: WeightedMdpSet, gamma: float, T: int) -> np.ndarray:
    """Value, under the weights, of the plan that is optimal for the expected MDP."""
    _, plan = solve_finite_horizon(mdp_set.expected_mdp(), gamma, T)
    return mixture_plan_value(mdp_set, plan, gamma)


def lower_bound_mmbi(mdp_set: WeightedMdpSet, gamma: float, T: int) -> np.ndarray:
    plan = mmbi(mdp_set, gamma, T, diagnostics=False).plan
    return mixture_plan_value(mdp_set, plan, gamma)


def upper_bound_expected_max(mdp_set: WeightedMdpSet, gamma: float, T: int) -> np.ndarray:
    """Weight-average of each member's optimal value (full-information bound)."""
    optima = np.stack([solve_finite_horizon(m, gamma, T)[0][0].max(axis=1) for m in mdp_set.mdps])
    return mdp_set.weights @ optima


def interpolated_weights(n: int, lam: float, target: int = 0) -> np.ndarray:
    """Linear path from uniform weights (lam = 0) to a point mass on ``target`` (lam = 1)."""
    w = np.full(n, (1.0 - lam) / n)
    w[target] += lam
    # absorb rounding so the weights sum to one
    w[target] += 1.0 - w.sum()
    return w


def random_ensemble(
    rng: np.random.Generator, n_mdps: int = 8, n_states: int = 5, n_actions: int = 3, r_max: float = 1.0
) -> list[FiniteMdp]:
    """Random MDPs with Dirichlet(1, ..., 1) rows and uniform mean rewards."""
    mdps = []
    for _ in range(n_mdps):
        P = rng.dirichlet(np.ones(n_states), size=(n_states, n_actions))
        R = rng.uniform(0.0, r_max, size=(n_states, n_actions))
        mdps.append(FiniteMdp(P, R, r_max))
    return mdps


def bound_sweep(mdps: list[FiniteMdp], grid: int, gamma: float, T: int) -> list[tuple[float, float, float, float]]:
    """State-averaged bounds along the uniform-to-certain belief path.

    Returns rows ``(lambda, emdp, mmbi, upper)`` for ``grid`` evenly spaced
    values of lambda in [0, 1].
    """
    if len(mdps) != 8:
        raise ValueError(f"bound sweep expects 8 MDPs, got {len(mdps)}")
    if grid < 2:
        raise ValueError("grid must have at least 2 points")
    base = WeightedMdpSet.from_mdps(mdps)
    rows = []
    for lam in np.linspace(0.0, 1.0, grid):
        s = base.with_weights(interpolated_weights(len(mdps), float(lam)))
        rows.append((
            float(lam),
            float(lower_bound_emdp(s, gamma, T).mean()),
            float(lower_bound_mmbi(s, gamma, T).mean()),
            float(upper_bound_expected_max(s, gamma, T).mean()),
        ))
    return rows


def sweep_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for row in rows:
        writer.writerow([repr(x) for x in row])
    return buf.getvalue()
