"""Conjugate posterior over finite MDPs.

Transitions get an independent Dirichlet per (s, a) row. Mean rewards are
``r_max`` times a Beta variable per (s, a); an observed reward ``r`` enters
as a fractional Bernoulli pseudo-observation ``r / r_max``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from mmbi.mdp import FiniteMdp


@dataclass(frozen=True, eq=False)
class DirichletBetaBelief:
    dirichlet_counts: np.ndarray  # (S, A, S)
    beta_alpha: np.ndarray  # (S, A)
    beta_beta: np.ndarray  # (S, A)
    r_max: float

    def __post_init__(self):
        counts = np.array(self.dirichlet_counts, dtype=float)
        alpha = np.array(self.beta_alpha, dtype=float)
        beta = np.array(self.beta_beta, dtype=float)
        if counts.ndim != 3 or counts.shape[0] != counts.shape[2]:
            raise ValueError(f"dirichlet_counts must have shape (S, A, S), got {counts.shape}")
        if alpha.shape != counts.shape[:2] or beta.shape != counts.shape[:2]:
            raise ValueError("Beta parameter tables must have shape (S, A)")
        if (counts < 0).any() or not (counts.sum(axis=2) > 0).all():
            raise ValueError("Dirichlet counts must be nonnegative with positive row mass")
        if not ((alpha > 0).all() and (beta > 0).all()):
            raise ValueError("Beta parameters must be positive")
        if not self.r_max > 0:
            raise ValueError("r_max must be positive")
        for name, arr in (("dirichlet_counts", counts), ("beta_alpha", alpha), ("beta_beta", beta)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "r_max", float(self.r_max))

    @property
    def n_states(self) -> int:
        return self.dirichlet_counts.shape[0]

    @property
    def n_actions(self) -> int:
        return self.dirichlet_counts.shape[1]

    @classmethod
    def _trusted(cls, counts, alpha, beta, r_max) -> "DirichletBetaBelief":
        # skips validation; callers guarantee the invariants
        obj = object.__new__(cls)
        for name, arr in (("dirichlet_counts", counts), ("beta_alpha", alpha), ("beta_beta", beta)):
            arr.setflags(write=False)
            object.__setattr__(obj, name, arr)
        object.__setattr__(obj, "r_max", r_max)
        return obj

    def to_dict(self) -> dict:
        return {
            "n_states": self.n_states,
            "n_actions": self.n_actions,
            "r_max": self.r_max,
            "dirichlet_counts": self.dirichlet_counts.tolist(),
            "beta_params": np.stack([self.beta_alpha, self.beta_beta], axis=-1).tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DirichletBetaBelief":
        params = np.asarray(d["beta_params"], dtype=float)
        if params.ndim != 3 or params.shape[-1] != 2:
            raise ValueError("beta_params must be an (S, A, 2) nested list")
        belief = cls(d["dirichlet_counts"], params[..., 0], params[..., 1], d["r_max"])
        if (belief.n_states, belief.n_actions) != (d["n_states"], d["n_actions"]):
            raise ValueError("declared dimensions do not match the tables")
        return belief

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "DirichletBetaBelief":
        return cls.from_dict(json.loads(text))


def load_belief(path: str | Path) -> DirichletBetaBelief:
    return DirichletBetaBelief.from_json(Path(path).read_text())


def new_prior(
    n_states: int,
    n_actions: int,
    dirichlet_mass_per_entry: float | None = None,
    beta_alpha: float = 1.0,
    beta_beta: float = 1.0,
    r_max: float = 1.0,
) -> DirichletBetaBelief:
    """Uniform product prior; the Dirichlet mass defaults to ``1 / n_states``."""
    if n_states < 1 or n_actions < 1:
        raise ValueError("need at least one state and one action")
    if dirichlet_mass_per_entry is None:
        dirichlet_mass_per_entry = 1.0 / n_states
    if min(dirichlet_mass_per_entry, beta_alpha, beta_beta, r_max) <= 0:
        raise ValueError("prior parameters must be positive")
    shape = (n_states, n_actions)
    return DirichletBetaBelief(
        np.full(shape + (n_states,), float(dirichlet_mass_per_entry)),
        np.full(shape, float(beta_alpha)),
        np.full(shape, float(beta_beta)),
        r_max,
    )


def update(belief: DirichletBetaBelief, s: int, a: int, r: float, s_next: int) -> DirichletBetaBelief:
    """Posterior after observing one transition; the input belief is unchanged."""
    S, A = belief.n_states, belief.n_actions
    if not (0 <= s < S and 0 <= s_next < S and 0 <= a < A):
        raise IndexError(f"invalid transition ({s}, {a}, {s_next}) for {S} states, {A} actions")
    if not 0 <= r <= belief.r_max:
        raise ValueError(f"reward {r} outside [0, {belief.r_max}]")
    counts = belief.dirichlet_counts.copy()
    alpha = belief.beta_alpha.copy()
    beta = belief.beta_beta.copy()
    counts[s, a, s_next] += 1.0
    frac = r / belief.r_max
    alpha[s, a] += frac
    beta[s, a] += 1.0 - frac
    return DirichletBetaBelief._trusted(counts, alpha, beta, belief.r_max)


def expected_arrays(belief: DirichletBetaBelief) -> tuple[np.ndarray, np.ndarray]:
    counts = belief.dirichlet_counts
    P = counts / counts.sum(axis=2, keepdims=True)
    R = belief.r_max * belief.beta_alpha / (belief.beta_alpha + belief.beta_beta)
    return P, R


def expected_mdp(belief: DirichletBetaBelief) -> FiniteMdp:
    P, R = expected_arrays(belief)
    return FiniteMdp(P, R, belief.r_max)


def sample_arrays(belief: DirichletBetaBelief, rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``n`` MDPs as stacked (n, S, A, S) transitions and (n, S, A) mean rewards."""
    counts = belief.dirichlet_counts
    g = rng.standard_gamma(np.broadcast_to(counts, (n,) + counts.shape))
    totals = g.sum(axis=3, keepdims=True)
    empty = totals[..., 0] == 0
    if empty.any():
        # every gamma variate underflowed; fall back to the row mean
        mean = counts / counts.sum(axis=2, keepdims=True)
        g[empty] = np.broadcast_to(mean, g.shape)[empty]
        totals = g.sum(axis=3, keepdims=True)
    P = g / totals
    shape = (n,) + belief.beta_alpha.shape
    R = belief.r_max * rng.beta(
        np.broadcast_to(belief.beta_alpha, shape), np.broadcast_to(belief.beta_beta, shape)
    )
    return P, R


def sample_mdp(belief: DirichletBetaBelief, rng: np.random.Generator) -> FiniteMdp:
    P, R = sample_arrays(belief, rng, 1)
    return FiniteMdp(P[0], R[0], belief.r_max)


def weight_l1_distance(w, w_other) -> float:
    w = np.asarray(w, dtype=float)
    w_other = np.asarray(w_other, dtype=float)
    if w.shape != w_other.shape:
        raise ValueError(f"weight vectors differ in length: {w.shape} vs {w_other.shape}")
    return float(np.abs(w - w_other).sum())
