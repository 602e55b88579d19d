import numpy as np
import pytest

from helpers import StubEnv

from mctspo import (EnvSpec, GAConfig, Genome, MutationAction, RolloutEnv,
                    divergence, materialize, run_ga)
from mctspo.deepga import Individual, evolve_generation
from mctspo.rng import MasterRng

MC = EnvSpec(kind="sparse-mountain-car")


def evaluated_population(env, n, seed=0):
    rng = MasterRng(seed)
    population = []
    for _ in range(n):
        genome = Genome(env.shape, (MutationAction.init(rng.next_uint64()),))
        params = materialize(genome)
        population.append(Individual(genome, params, env.rollout(params)))
    return population


def test_evolve_generation_structure():
    env = StubEnv()
    population = evaluated_population(env, 10)
    config = GAConfig(population_size=10, truncation_size=3, elite_count=1,
                      generations=5)
    children = evolve_generation(population, config, MasterRng(1))
    assert len(children) == 10

    ranked = sorted(population, key=lambda ind: -ind.fitness)
    top3 = {ind.genome for ind in ranked[:3]}
    # elite passes through verbatim
    assert children[0] == ranked[0].genome
    # every other child is some truncation-set parent plus exactly one action
    for child in children[1:]:
        parent_genome = Genome(env.shape, child.actions[:-1])
        assert parent_genome in top3
        assert not child.actions[-1].is_init


def test_elites_survive_unmutated():
    env = StubEnv()
    population = evaluated_population(env, 8)
    config = GAConfig(population_size=8, truncation_size=4, elite_count=3,
                      generations=5)
    children = evolve_generation(population, config, MasterRng(2))
    ranked = sorted(population, key=lambda ind: -ind.fitness)
    assert children[:3] == [ind.genome for ind in ranked[:3]]


def test_evolution_is_deterministic():
    env = StubEnv()
    population = evaluated_population(env, 6)
    config = GAConfig(population_size=6, truncation_size=2, elite_count=1,
                      generations=5)
    a = evolve_generation(population, config, MasterRng(3))
    b = evolve_generation(population, config, MasterRng(3))
    assert a == b


def test_child_mutations_respect_divergence_budget():
    env = StubEnv()
    population = evaluated_population(env, 6)
    config = GAConfig(population_size=6, truncation_size=3, elite_count=1,
                      generations=5)
    children = evolve_generation(population, config, MasterRng(4))
    by_genome = {ind.genome: ind for ind in population}
    for child in children[1:]:
        parent = by_genome[Genome(env.shape, child.actions[:-1])]
        child_params = materialize(child)
        d = divergence(child_params, parent.params, parent.trajectory)
        assert d <= config.divergence.d_max


def test_single_generation_returns_best_initialization():
    env = StubEnv()
    config = GAConfig(population_size=12, truncation_size=4, elite_count=1,
                      generations=1)
    res = run_ga(env, env.shape, config, master_seed=9)
    # oracle: replay the same seed stream and evaluate the inits directly
    oracle = evaluated_population(env, 12, seed=9)
    want = max(ind.fitness for ind in oracle)
    assert res.best_return == want
    assert res.iterations == 1
    assert len(res.best_genome) == 1


def test_run_ga_deterministic_and_monotone():
    env = RolloutEnv(MC)
    shape = MC.network_shape((4,))
    config = GAConfig(population_size=10, truncation_size=3, elite_count=2,
                      generations=1000)
    a = run_ga(env, shape, config, master_seed=5, call_limit=8_000)
    b = run_ga(env, shape, config, master_seed=5, call_limit=8_000)
    assert a.curve == b.curve
    assert a.best_genome == b.best_genome
    ys = [y for _, y in a.curve]
    assert all(y2 >= y1 for y1, y2 in zip(ys, ys[1:]))
    assert a.env_calls <= 8_000


def test_elite_fitness_never_degrades():
    env = StubEnv()
    config = GAConfig(population_size=12, truncation_size=4, elite_count=2,
                      generations=1000)
    rng = MasterRng(6)
    genomes = [Genome(env.shape, (MutationAction.init(rng.next_uint64()),))
               for _ in range(12)]
    best_per_gen = []
    for _ in range(6):
        population = [Individual(g, materialize(g), env.rollout(materialize(g)))
                      for g in genomes]
        best_per_gen.append(max(ind.fitness for ind in population))
        genomes = evolve_generation(population, config, rng)
    assert all(b2 >= b1 for b1, b2 in zip(best_per_gen, best_per_gen[1:]))


def test_budget_stops_mid_generation():
    env = RolloutEnv(MC)
    shape = MC.network_shape((4,))
    config = GAConfig(population_size=50, truncation_size=10, elite_count=1,
                      generations=1000)
    # 12 full rollouts fit; the 13th exhausts the budget mid-generation
    res = run_ga(env, shape, config, master_seed=1, call_limit=1_250)
    assert res.env_calls <= 1_250
    assert np.isfinite(res.best_return)
    assert res.best_genome is not None


def test_ga_best_genome_replays_exactly():
    env = StubEnv()
    config = GAConfig(population_size=8, truncation_size=3, elite_count=1,
                      generations=4)
    res = run_ga(env, env.shape, config, master_seed=11)
    replayed = env.rollout(materialize(res.best_genome))
    assert replayed.total_return == res.best_return


def test_ga_config_validation():
    with pytest.raises(ValueError):
        GAConfig(population_size=5, truncation_size=6, elite_count=0)
    with pytest.raises(ValueError):
        GAConfig(population_size=5, truncation_size=3, elite_count=4)
    with pytest.raises(ValueError):
        GAConfig(generations=0)
    cfg = GAConfig(population_size=20, truncation_size=5, elite_count=2)
    assert GAConfig.from_dict(cfg.to_dict()) == cfg
