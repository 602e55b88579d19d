"""Gradient-free policy optimization: tree search over policy parameters
with safe mutation, a Deep GA baseline, sparse-reward control tasks, and a
reproducible benchmark harness."""

from .deepga import GAConfig, Individual, evolve_generation, run_ga
from .envs import (BudgetExhausted, CallBudget, EnvSpec, RolloutEnv,
                   SPARSE_ACROBOT, SPARSE_MOUNTAIN_CAR, TaskState, Trajectory,
                   reset, rollout, step)
from .genome import (Genome, MutationAction, apply_mutation,
                     direction_from_seed, load_genome, materialize,
                     save_genome)
from .harness import (ExperimentConfig, TrialResult, compare, load_config,
                      replay, run_experiment, run_single)
from .policy_net import (NetworkShape, ParameterVector, forward, forward_batch,
                         init_from_seed, jvp_batch, jvp_outputs)
from .safe_mutation import (CandidateGenerationFailed, DegenerateDirection,
                            DivergenceBudget, divergence, get_candidate_actions,
                            line_search_magnitude, quadratic_form,
                            solve_magnitude)
from .search import (ChildEdge, CurveRecorder, MctspoSearch, RunResult,
                     SearchConfig, TreeNode, may_widen, run_mctspo, select_ucb)

__version__ = "0.1.0"
