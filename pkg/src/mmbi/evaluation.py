"""Chain experiments: regret, utility, bootstrap intervals and histograms."""
from __future__ import annotations

import csv
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from mmbi.agents import AGENT_KINDS, AgentConfig
from mmbi.belief import new_prior
from mmbi.envs import chain_task, oracle_total_reward, run_episode

log = logging.getLogger(__name__)

WORKERS_ENV = "MMBI_WORKERS"
_BOOT_CHUNK = 4_000_000  # resample indices drawn per chunk


def bootstrap_ci(samples, resamples: int = 10_000, level: float = 0.95, seed=0) -> tuple[float, float]:
    """Percentile bootstrap interval for the mean."""
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise ValueError("bootstrap needs at least two samples")
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    if np.all(x == x[0]):
        # every resample mean is x[0]; skip the rounding of the summed means
        return float(x[0]), float(x[0])
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n = x.size
    means = np.empty(resamples)
    step = max(1, _BOOT_CHUNK // n)
    for lo in range(0, resamples, step):
        hi = min(resamples, lo + step)
        means[lo:hi] = x[rng.integers(0, n, size=(hi - lo, n))].mean(axis=1)
    tail = (1 - level) / 2
    low, high = np.quantile(means, [tail, 1 - tail])
    return float(low), float(high)


def percentile_interval(samples, coverage: float = 0.8) -> tuple[float, float]:
    """Interval with at most ``(1 - coverage) / 2`` of the samples strictly outside each end."""
    x = np.asarray(samples, dtype=float)
    tail = (1 - coverage) / 2
    low = np.quantile(x, tail, method="inverted_cdf")
    high = -np.quantile(-x, tail, method="inverted_cdf")
    return float(low), float(high)


def histogram(samples, edges) -> list[tuple[float, float, int]]:
    counts, edges = np.histogram(samples, bins=edges)
    return [(float(lo), float(hi), int(c)) for lo, hi, c in zip(edges[:-1], edges[1:], counts)]


def common_edges(all_samples, width: float = 100.0) -> np.ndarray:
    lo = np.floor(min(np.min(s) for s in all_samples) / width) * width
    hi = (np.floor(max(np.max(s) for s in all_samples) / width) + 1) * width
    return np.arange(lo, hi + width / 2, width)


@dataclass
class RegretReport:
    oracle_total: float
    mean_total: float
    regret: float
    ci_low: float
    ci_high: float

    @property
    def regret_ci(self) -> tuple[float, float]:
        return self.oracle_total - self.ci_high, self.oracle_total - self.ci_low


@dataclass
class ExperimentConfig:
    agents: list = field(default_factory=lambda: ["exploit", "mcbrl"])
    n_values: list = field(default_factory=lambda: [1, 8, 16])
    runs: int = 1000
    steps: int = 1000
    gamma: float = 0.95
    replan_interval: int = 20
    seed: int = 0
    plan_epsilon: float = 0.01
    vi_tolerance: float = 1e-6
    bootstrap_resamples: int = 10_000
    dirichlet_mass: float | None = None  # None: 1 / |S|
    beta_prior: tuple = (1.0, 1.0)
    workers: int | None = None  # None: $MMBI_WORKERS, else 1

    def __post_init__(self):
        for name in self.agents:
            if name not in AGENT_KINDS:
                raise ValueError(f"unknown agent {name!r}; expected one of {AGENT_KINDS}")
        if self.steps < 1 or self.replan_interval < 1:
            raise ValueError("steps and replan interval must be positive")
        if self.runs < 2:
            raise ValueError("need at least 2 runs for bootstrap intervals")
        if any(n < 1 for n in self.n_values):
            raise ValueError("sample counts must be positive")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown experiment config keys: {sorted(extra)}")
        return cls(**d)

    def cells(self) -> list[tuple[str, int, AgentConfig]]:
        """(label, n, agent config) per compared cell; n is 0 for non-sampling agents."""
        out = []
        common = dict(
            gamma=self.gamma, replan_interval=self.replan_interval,
            plan_epsilon=self.plan_epsilon, vi_tolerance=self.vi_tolerance,
        )
        for kind in self.agents:
            if kind == "mcbrl":
                for n in self.n_values:
                    out.append((f"mcbrl_n{n}", n, AgentConfig(kind, n_samples=n, **common)))
            else:
                out.append((kind, 0, AgentConfig(kind, **common)))
        return out


@dataclass
class CellResult:
    label: str
    agent: str
    n: int
    totals: np.ndarray
    utilities: np.ndarray
    report: RegretReport
    utility_ci: tuple[float, float]
    percentile_80: tuple[float, float]
    histogram: list = field(default_factory=list)

    @property
    def mean_utility(self) -> float:
        return float(self.utilities.mean())

    def summary(self) -> dict:
        return {
            "agent": self.agent,
            "n": self.n,
            "runs": int(self.totals.size),
            "mean_total": self.report.mean_total,
            "total_ci": [self.report.ci_low, self.report.ci_high],
            "mean_utility": self.mean_utility,
            "utility_ci": list(self.utility_ci),
            "percentile_80": list(self.percentile_80),
            "oracle_total": self.report.oracle_total,
            "regret": self.report.regret,
            "regret_ci": list(self.report.regret_ci),
        }


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    oracle_total: float
    cells: list[CellResult]

    def cell(self, label: str) -> CellResult:
        for c in self.cells:
            if c.label == label:
                return c
        raise KeyError(label)


def _run_batch(args):
    mdp, agent_config, prior, steps, seed, runs = args
    out = []
    for run in runs:
        rec = run_episode(mdp, agent_config, prior, steps, seed, run=run, keep_trajectory=False)
        out.append((rec.total_reward, rec.discounted_utility))
    return out


def _resolve_workers(config: ExperimentConfig) -> int:
    if config.workers is not None:
        return max(1, config.workers)
    return max(1, int(os.environ.get(WORKERS_ENV, "1")))


def experiment(config: ExperimentConfig, mdp=None) -> ExperimentResult:
    """Run every cell over the same run seeds and summarise it.

    All cells share run indices 0..runs-1 under ``config.seed``, so the
    environment randomness is common across cells. Results are reduced in
    run order and do not depend on the worker count.
    """
    mdp = mdp if mdp is not None else chain_task()
    prior = new_prior(mdp.n_states, mdp.n_actions, config.dirichlet_mass, *config.beta_prior, r_max=mdp.r_max)
    oracle = oracle_total_reward(mdp, config.steps)
    workers = _resolve_workers(config)
    chunks = [list(c) for c in np.array_split(np.arange(config.runs), min(config.runs, workers * 4))]
    raw = []
    for label, n, agent_config in config.cells():
        log.info("running %s (%d runs x %d steps)", label, config.runs, config.steps)
        jobs = [(mdp, agent_config, prior, config.steps, config.seed, [int(r) for r in c]) for c in chunks]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                batches = list(pool.map(_run_batch, jobs))
        else:
            batches = [_run_batch(j) for j in jobs]
        pairs = np.array([p for b in batches for p in b])
        raw.append((label, agent_config.kind, n, pairs[:, 0], pairs[:, 1]))

    edges = common_edges([r[3] for r in raw])
    cells = []
    for k, (label, kind, n, totals, utils) in enumerate(raw):
        boot_seed = np.random.SeedSequence([config.seed, 7919, k])
        rng = np.random.default_rng(boot_seed)
        lo, hi = bootstrap_ci(totals, config.bootstrap_resamples, 0.95, rng)
        ulo, uhi = bootstrap_ci(utils, config.bootstrap_resamples, 0.95, rng)
        mean = float(totals.mean())
        cells.append(CellResult(
            label=label, agent=kind, n=n, totals=totals, utilities=utils,
            report=RegretReport(oracle, mean, oracle - mean, lo, hi),
            utility_ci=(ulo, uhi),
            percentile_80=percentile_interval(totals, 0.8),
            histogram=histogram(totals, edges),
        ))
    return ExperimentResult(config, oracle, cells)


def write_results(result: ExperimentResult, out_dir: str | Path) -> list[Path]:
    """Write runs.csv, summary.json and one hist_<cell>.csv per cell."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = result.config
    written = []
    runs_path = out / "runs.csv"
    with runs_path.open("w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["agent", "n", "run", "seed", "total_reward", "utility"])
        for c in result.cells:
            for run, (tot, u) in enumerate(zip(c.totals, c.utilities)):
                w.writerow([c.agent, c.n, run, cfg.seed, repr(float(tot)), repr(float(u))])
    written.append(runs_path)
    config_dict = asdict(cfg)
    config_dict.pop("workers")
    summary = {
        "config": config_dict,
        "oracle_total": result.oracle_total,
        "cells": {c.label: c.summary() for c in result.cells},
    }
    summary_path = out / "summary.json"
    summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    written.append(summary_path)
    for c in result.cells:
        p = out / f"hist_{c.label}.csv"
        with p.open("w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["bin_low", "bin_high", "count"])
            w.writerows(c.histogram)
        written.append(p)
    return written
