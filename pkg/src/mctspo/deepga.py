"""Deep GA baseline: truncation selection, elitism, safe mutation.

Population evolution over the same seed-chain genomes, sharing the policy
network, environments and the divergence-bounded magnitude solver with the
tree search, so curves from both are directly comparable per env call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .envs import BudgetExhausted, CallBudget, Trajectory
from .genome import Genome, MutationAction, materialize
from .policy_net import NetworkShape, ParameterVector
from .rng import MasterRng
from .safe_mutation import DivergenceBudget, get_candidate_actions
from .search import CurveRecorder, RunResult


@dataclass
class GAConfig:
    population_size: int = 100
    truncation_size: int = 20
    elite_count: int = 3
    generations: int = 10**9
    n_ca: int = 4  # unused by the GA itself; kept for config symmetry
    divergence: DivergenceBudget = field(default_factory=DivergenceBudget)

    def __post_init__(self):
        if not (0 <= self.elite_count <= self.truncation_size <= self.population_size):
            raise ValueError("need elite_count <= truncation_size <= population_size")
        if self.generations < 1:
            raise ValueError("generations must be positive")

    def to_dict(self) -> dict:
        return {
            "population_size": self.population_size,
            "truncation_size": self.truncation_size,
            "elite_count": self.elite_count,
            "generations": self.generations,
            "divergence": self.divergence.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GAConfig":
        kwargs = dict(d)
        kwargs.pop("n_ca", None)
        if "divergence" in kwargs:
            kwargs["divergence"] = DivergenceBudget.from_dict(kwargs["divergence"])
        return cls(**kwargs)


@dataclass(frozen=True, eq=False)
class Individual:
    """An evaluated population member; keeps the rollout so mutation
    magnitudes can be solved without resampling the environment."""

    genome: Genome
    params: ParameterVector
    trajectory: Trajectory

    @property
    def fitness(self) -> float:
        return self.trajectory.total_return


def evolve_generation(population: list[Individual], config: GAConfig,
                      rng: MasterRng) -> list[Genome]:
    """Next generation's genomes: elites verbatim, the rest one safe mutation
    away from a parent drawn uniformly from the truncation set."""
    if not population:
        raise ValueError("population must be non-empty")
    ranked = sorted(range(len(population)),
                    key=lambda i: (-population[i].fitness, i))
    parents = [population[i] for i in ranked[:config.truncation_size]]
    next_genomes = [population[i].genome for i in ranked[:config.elite_count]]
    while len(next_genomes) < config.population_size:
        parent = parents[rng.next_index(len(parents))]
        action = get_candidate_actions(parent.params, parent.trajectory, 1,
                                       config.divergence, rng)[0]
        next_genomes.append(parent.genome.extended(action))
    return next_genomes


def run_ga(env, shape: NetworkShape, config: GAConfig, master_seed: int,
           call_limit: int | None = None) -> RunResult:
    """Evaluate/evolve until the generation count or env-call budget runs
    out; exhaustion mid-generation stops gracefully with best-so-far."""
    rng = MasterRng(master_seed)
    budget = CallBudget(call_limit)
    recorder = CurveRecorder(call_limit)
    best_return = -math.inf
    best_genome: Genome | None = None
    first_goal: int | None = None

    genomes = [Genome(shape, (MutationAction.init(rng.next_uint64()),))
               for _ in range(config.population_size)]
    elite_cache: dict[Genome, Individual] = {}
    generations_done = 0
    stopped = False
    for gen in range(config.generations):
        population: list[Individual] = []
        for genome in genomes:
            cached = elite_cache.get(genome)
            if cached is not None:
                population.append(cached)
                continue
            params = materialize(genome)
            try:
                traj = env.rollout(params, budget)
            except BudgetExhausted:
                stopped = True
                break
            population.append(Individual(genome, params, traj))
            if traj.reached_goal and first_goal is None:
                first_goal = budget.used
            if traj.total_return > best_return:
                best_return = traj.total_return
                best_genome = genome
            recorder.update(budget.used, best_return)
        if stopped:
            break
        generations_done += 1
        if gen == config.generations - 1 or budget.exhausted:
            break
        genomes = evolve_generation(population, config, rng)
        keep = set(genomes)
        elite_cache = {ind.genome: ind for ind in population if ind.genome in keep}

    recorder.finish(budget.used, best_return)
    return RunResult(
        best_genome=best_genome,
        best_return=best_return,
        curve=recorder.points,
        env_calls=budget.used,
        first_goal_env_calls=first_goal,
        iterations=generations_done,
    )
