"""Near-optimal memoryless policies for Bayesian reinforcement learning.

MMBI plans over a weighted set of finite MDPs; MSBI does the same over
posterior samples; MCBRL and Exploit are online agents built on them.
"""
from mmbi.agents import AgentConfig, ExploitAgent, MCBRLAgent, OracleAgent, make_agent
from mmbi.belief import (
    DirichletBetaBelief,
    expected_mdp,
    new_prior,
    sample_mdp,
    update,
    weight_l1_distance,
)
from mmbi.bounds import bound_sweep, lower_bound_emdp, lower_bound_mmbi, upper_bound_expected_max
from mmbi.envs import chain_task, oracle_total_reward, run_episode
from mmbi.evaluation import ExperimentConfig, bootstrap_ci, experiment
from mmbi.mdp import (
    FiniteMdp,
    MemorylessPlan,
    StationaryPolicy,
    evaluate_plan_exact,
    horizon_for_epsilon,
    solve_discounted,
    solve_finite_horizon,
    validate_mdp,
)
from mmbi.planner import (
    MmbiResult,
    WeightedMdpSet,
    bayes_optimal_tiny,
    mixture_plan_value,
    mmbi,
    msbi,
    sample_count,
    theorem1_gap_bound,
)

__version__ = "0.1.0"
