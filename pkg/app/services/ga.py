"""Inner genetic algorithm: tournament selection, uniform crossover, dual-rate
mutation and deterministic-crowding survivor selection."""

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from app.core.seeding import Stream, derive_seed, stream
from app.schemas.environment import EnvParams
from app.schemas.experiment import GAConfig, GenomeConfig
from app.services.evaluation import EvaluationJob, Evaluator
from app.services.genome import Genotype, crossover_uniform, init_random, mutate


@dataclass(frozen=True)
class AgentPopulation:
    """An evaluated population; every individual carries a fitness."""

    individuals: tuple[Genotype, ...]
    generation: int = 0

    def __post_init__(self) -> None:
        if not self.individuals:
            raise ValueError("Population is empty")
        if any(ind.fitness is None for ind in self.individuals):
            raise ValueError("Every individual in a population must be evaluated")

    def __len__(self) -> int:
        return len(self.individuals)

    def __getitem__(self, index: int) -> Genotype:
        return self.individuals[index]

    def fitness(self) -> np.ndarray:
        return np.array([ind.fitness for ind in self.individuals], dtype=np.float64)

    def morphologies(self) -> np.ndarray:
        return np.stack([ind.morphology for ind in self.individuals])


@dataclass(frozen=True)
class Brood:
    """Parents chosen for one generation and the unevaluated children they produced.

    Family ``k`` is parents ``2k, 2k+1`` and children ``2k, 2k+1``.
    """

    parent_indices: tuple[int, ...]
    children: tuple[Genotype, ...]
    child_seeds: tuple[int, ...]

    def jobs(self, env: EnvParams, key_prefix: tuple[int, ...] = ()) -> list[EvaluationJob]:
        return [
            EvaluationJob(key=(*key_prefix, i), genotype=child, env=env, base_seed=seed)
            for i, (child, seed) in enumerate(zip(self.children, self.child_seeds, strict=True))
        ]


# =============================================================================
# Selection and distance
# =============================================================================


def tournament_index(fitness: np.ndarray, rng: np.random.Generator, size: int = 5) -> int:
    """Index of the fittest of ``size`` uniformly drawn contestants; ties go to the lowest index."""
    contestants = rng.integers(0, len(fitness), size)
    scores = fitness[contestants]
    best = scores.max()
    return int(contestants[scores == best].min())


def tournament_select(pop: AgentPopulation, rng: np.random.Generator, size: int = 5) -> Genotype:
    return pop[tournament_index(pop.fitness(), rng, size)]


def l1_morphology_distance(a: Genotype, b: Genotype) -> float:
    """Sum of absolute differences over the eight morphology values."""
    return float(np.abs(a.morphology - b.morphology).sum())


def crowding_contest(
    p1: Genotype, p2: Genotype, c1: Genotype, c2: Genotype
) -> tuple[Genotype, Genotype]:
    """Pair each child with its nearer parent; a child survives when it is at least as fit."""
    d = l1_morphology_distance
    if d(p1, c1) + d(p2, c2) <= d(p1, c2) + d(p2, c1):
        contests = ((p1, c1), (p2, c2))
    else:
        contests = ((p1, c2), (p2, c1))
    survivors = tuple(
        child if child.fitness >= parent.fitness else parent  # type: ignore[operator]
        for parent, child in contests
    )
    return survivors[0], survivors[1]


def population_best(pop: AgentPopulation) -> Genotype:
    """Highest stored fitness; ties go to the lowest index."""
    return pop[int(np.argmax(pop.fitness()))]


# =============================================================================
# Generation
# =============================================================================


def breed(
    pop: AgentPopulation,
    seed: int,
    config: GAConfig | None = None,
    genome_config: GenomeConfig | None = None,
) -> Brood:
    """Select parents with replacement and produce one child per parent slot."""
    config = config or GAConfig()
    genome_config = genome_config or GenomeConfig()
    selection_rng = stream(seed, Stream.SELECTION)
    variation_rng = stream(seed, Stream.VARIATION)
    fitness = pop.fitness()
    slots = 2 * config.pairs_per_generation

    parent_indices = tuple(
        tournament_index(fitness, selection_rng, config.tournament_size) for _ in range(slots)
    )
    children: list[Genotype] = []
    for k in range(config.pairs_per_generation):
        p1 = pop[parent_indices[2 * k]]
        p2 = pop[parent_indices[2 * k + 1]]
        if genome_config.crossover_enabled:
            c1, c2 = crossover_uniform(p1, p2, variation_rng)
        else:
            c1, c2 = p1.unevaluated(), p2.unevaluated()
        children += [mutate(c1, variation_rng, genome_config), mutate(c2, variation_rng, genome_config)]

    child_seeds = tuple(derive_seed(seed, Stream.EVALUATION, i) for i in range(slots))
    return Brood(parent_indices, tuple(children), child_seeds)


def survive(pop: AgentPopulation, brood: Brood, fitness: Sequence[float]) -> AgentPopulation:
    """Resolve every family by crowding; family ``k`` fills slots ``2k`` and ``2k+1``."""
    children = [child.with_fitness(f) for child, f in zip(brood.children, fitness, strict=True)]
    survivors: list[Genotype] = []
    for k in range(len(children) // 2):
        p1 = pop[brood.parent_indices[2 * k]]
        p2 = pop[brood.parent_indices[2 * k + 1]]
        survivors.extend(crowding_contest(p1, p2, children[2 * k], children[2 * k + 1]))
    return AgentPopulation(tuple(survivors), pop.generation + 1)


@dataclass(frozen=True)
class GenerationResult:
    """A population after one generation, with the children evaluated on the way."""

    population: AgentPopulation
    brood: Brood
    child_fitness: tuple[float, ...]


def evolve_batch(
    tasks: Sequence[tuple[AgentPopulation, EnvParams, int]],
    evaluator: Evaluator,
    config: GAConfig | None = None,
    genome_config: GenomeConfig | None = None,
) -> list[GenerationResult]:
    """Advance several ``(population, env, seed)`` tasks with one evaluation round.

    Either every task is committed or, on ``BudgetExhaustedError``, none is.
    """
    broods = [breed(pop, seed, config, genome_config) for pop, _, seed in tasks]
    jobs = [
        job
        for t, (brood, (_, env, _)) in enumerate(zip(broods, tasks, strict=True))
        for job in brood.jobs(env, key_prefix=(t,))
    ]
    fitness = evaluator.run(jobs)

    results: list[GenerationResult] = []
    start = 0
    for brood, (pop, _, _) in zip(broods, tasks, strict=True):
        scores = tuple(fitness[start : start + len(brood.children)])
        start += len(brood.children)
        results.append(GenerationResult(survive(pop, brood, scores), brood, scores))
    return results


def ga_generation(
    pop: AgentPopulation,
    env: EnvParams,
    seed: int,
    evaluator: Evaluator,
    config: GAConfig | None = None,
    genome_config: GenomeConfig | None = None,
) -> AgentPopulation:
    """One full generation in ``env``.

    Raises ``BudgetExhaustedError`` before any evaluation when the budget cannot
    cover every child; ``pop`` is then left as it was.
    """
    return evolve_batch([(pop, env, seed)], evaluator, config, genome_config)[0].population


def init_population(
    env: EnvParams,
    seed: int,
    evaluator: Evaluator,
    config: GAConfig | None = None,
    genome_config: GenomeConfig | None = None,
) -> AgentPopulation:
    """Random, evaluated generation-0 population."""
    config = config or GAConfig()
    rng = stream(seed, Stream.INIT)
    individuals = [init_random(rng, genome_config) for _ in range(config.population_size)]
    jobs = [
        EvaluationJob(key=(i,), genotype=ind, env=env, base_seed=derive_seed(seed, Stream.EVALUATION, i))
        for i, ind in enumerate(individuals)
    ]
    fitness = evaluator.run(jobs)
    return AgentPopulation(
        tuple(ind.with_fitness(f) for ind, f in zip(individuals, fitness, strict=True)), 0
    )
