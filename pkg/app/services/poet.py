"""The outer open-ended loop: environment/population pairs, environment
reproduction under minimal criteria, and direct transfer between pairs."""

import dataclasses
from collections.abc import Iterator
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from app.core.exceptions import BudgetExhaustedError
from app.core.logging import get_logger
from app.core.seeding import Stream, derive_seed, stream
from app.schemas.environment import (
    ENV_VECTOR_MAX,
    ENV_VECTOR_MIN,
    FLAT_ENV,
    PIT_GAP_MUTATION,
    ROUGHNESS_MUTATION,
    STAIR_HEIGHT_MUTATION,
    STAIR_STEPS_MUTATION,
    STUMP_HEIGHT_MUTATION,
    EnvParams,
)
from app.schemas.experiment import GAConfig, GenomeConfig, PoetConfig
from app.schemas.run_log import (
    AdmissionEvent,
    CreationSkippedEvent,
    CrossTestRecord,
    EnvCreatedEvent,
    EvictionEvent,
    TransferEvent,
)
from app.services.evaluation import EvaluationJob, Evaluator
from app.services.ga import AgentPopulation, GenerationResult, evolve_batch, population_best
from app.services.genome import Genotype

logger = get_logger(__name__)

PoetEvent = (
    AdmissionEvent
    | CreationSkippedEvent
    | CrossTestRecord
    | EnvCreatedEvent
    | EvictionEvent
    | TransferEvent
)


@dataclass(frozen=True)
class Pair:
    """One environment and the agent-population evolving in it."""

    id: int
    env: EnvParams
    population: AgentPopulation
    created_at_generation: int = 0


@dataclass(frozen=True)
class PoetState:
    """Everything the loop carries from one generation to the next."""

    pairs: tuple[Pair, ...]
    archive: tuple[EnvParams, ...]
    generation: int = 0
    next_pair_id: int = 1
    config: PoetConfig = field(default_factory=PoetConfig)

    def pair(self, pair_id: int) -> Pair | None:
        return next((p for p in self.pairs if p.id == pair_id), None)


@dataclass
class PoetStep:
    """Outcome of one loop generation."""

    state: PoetState
    results: dict[int, GenerationResult]
    events: list[PoetEvent] = field(default_factory=list)
    exhausted: bool = False


def initial_state(population: AgentPopulation, config: PoetConfig | None = None) -> PoetState:
    """A single pair on flat ground; flat ground seeds the archive."""
    pair = Pair(id=0, env=FLAT_ENV, population=population, created_at_generation=0)
    return PoetState(pairs=(pair,), archive=(FLAT_ENV,), config=config or PoetConfig())


# =============================================================================
# Environment operators
# =============================================================================


def pair_fitness(pair: Pair) -> float:
    """Highest stored fitness in the pair's population."""
    return float(pair.population.fitness().max())


def representative(pair: Pair) -> Genotype:
    return population_best(pair.population)


def _signs(rng: np.random.Generator, count: int) -> np.ndarray:
    return rng.integers(0, 2, size=count) * 2 - 1


def mutate_env(env: EnvParams, rng: np.random.Generator) -> EnvParams:
    """Perturb every feature, clamp to the parameter table and repair range order."""
    vec = env.to_vector()
    vec[0] += rng.uniform(0.0, ROUGHNESS_MUTATION)
    magnitudes = np.array(
        [PIT_GAP_MUTATION, PIT_GAP_MUTATION, STUMP_HEIGHT_MUTATION, STUMP_HEIGHT_MUTATION,
         STAIR_HEIGHT_MUTATION, STAIR_HEIGHT_MUTATION, STAIR_STEPS_MUTATION],
    )
    vec[1:] += magnitudes * _signs(rng, 7)
    vec = np.clip(vec, ENV_VECTOR_MIN, ENV_VECTOR_MAX)
    for lo in (1, 3, 5):
        if vec[lo] > vec[lo + 1]:
            vec[lo], vec[lo + 1] = vec[lo + 1], vec[lo]
    return EnvParams.from_vector(vec)


def environment_novelty(env: EnvParams, archive: tuple[EnvParams, ...] | list[EnvParams], k: int = 5) -> float:
    """Mean Euclidean distance to the ``k`` nearest archive entries."""
    if not archive:
        raise ValueError("Novelty needs a non-empty archive")
    vectors = np.stack([a.to_vector() for a in archive])
    distances = np.sort(cdist(env.to_vector()[None, :], vectors)[0])
    return float(distances[: min(k, len(distances))].mean())


# =============================================================================
# Environment creation
# =============================================================================


def _evict_oldest(pairs: list[Pair], capacity: int, generation: int) -> list[EvictionEvent]:
    events: list[EvictionEvent] = []
    while len(pairs) > capacity:
        oldest = min(pairs, key=lambda p: (p.created_at_generation, p.id))
        pairs.remove(oldest)
        events.append(
            EvictionEvent(
                generation=generation,
                pair_id=oldest.id,
                created_at_generation=oldest.created_at_generation,
            )
        )
    return events


def create_environments(
    state: PoetState, master_seed: int, evaluator: Evaluator
) -> tuple[PoetState, list[PoetEvent]]:
    """Reproduce qualified environments and admit the most novel viable children.

    Every generated child is archived. Each child is scored by every pair's
    representative (all on the same course), takes a copy of the best scorer's
    population, and must land inside the difficulty band and differ from every
    environment archived before this step to be considered for admission.
    Raises ``BudgetExhaustedError`` without changing anything when the
    cross-tests cannot be paid for.
    """
    config = state.config
    generation = state.generation
    fitnesses = [pair_fitness(p) for p in state.pairs]
    eligible = [p for p, f in zip(state.pairs, fitnesses, strict=True) if f > config.reproduction_criterion]
    if not eligible:
        logger.info("poet.creation_skipped", generation=generation, best=max(fitnesses))
        return state, [CreationSkippedEvent(generation=generation, best_pair_fitness=max(fitnesses))]

    rng = stream(master_seed, Stream.ENV_CREATION, generation)
    parents = [eligible[int(rng.integers(len(eligible)))] for _ in range(config.children_created)]
    children = [mutate_env(p.env, rng) for p in parents]

    reps = [representative(p) for p in state.pairs]
    jobs = [
        EvaluationJob(
            key=(c, r),
            genotype=rep,
            env=child,
            base_seed=derive_seed(master_seed, Stream.CREATION_EVAL, generation, c),
        )
        for c, child in enumerate(children)
        for r, rep in enumerate(reps)
    ]
    scores = np.array(evaluator.run(jobs)).reshape(len(children), len(reps))

    prior_archive = state.archive
    prior_vectors = {tuple(a.to_vector()) for a in prior_archive}
    low, high = config.difficulty_criterion
    events: list[PoetEvent] = []
    candidates: list[tuple[float, int, EnvParams, Pair, float]] = []
    created: list[EnvCreatedEvent] = []

    for c, (child, parent) in enumerate(zip(children, parents, strict=True)):
        best = int(np.argmax(scores[c]))
        score = float(scores[c, best])
        source = state.pairs[best]
        record = EnvCreatedEvent(
            generation=generation,
            parent_pair_id=parent.id,
            env=child.to_vector().tolist(),
            assigned_pair_id=source.id,
            score=score,
            outcome="not_selected",
        )
        if score < low:
            record = record.model_copy(update={"outcome": "too_hard"})
        elif score > high:
            record = record.model_copy(update={"outcome": "too_easy"})
        elif tuple(child.to_vector()) in prior_vectors:
            record = record.model_copy(update={"outcome": "duplicate"})
        else:
            novelty = environment_novelty(child, prior_archive, config.novelty_k)
            record = record.model_copy(update={"novelty": novelty})
            candidates.append((novelty, c, child, source, score))
        created.append(record)

    candidates.sort(key=lambda cand: (-cand[0], cand[1]))
    admitted = candidates[: config.children_admitted]
    pairs = list(state.pairs)
    next_id = state.next_pair_id
    admissions: list[AdmissionEvent] = []
    for novelty, c, child, source, score in admitted:
        created[c] = created[c].model_copy(update={"outcome": "admitted"})
        pairs.append(
            Pair(id=next_id, env=child, population=source.population, created_at_generation=generation)
        )
        admissions.append(
            AdmissionEvent(
                generation=generation,
                pair_id=next_id,
                source_pair_id=source.id,
                env=child.to_vector().tolist(),
                score=score,
                novelty=novelty,
            )
        )
        logger.info("poet.admission", generation=generation, pair_id=next_id, source_pair=source.id, score=score)
        next_id += 1

    evictions = _evict_oldest(pairs, config.pair_capacity, generation)
    for eviction in evictions:
        logger.info("poet.eviction", generation=generation, pair_id=eviction.pair_id)

    events.extend(created)
    events.extend(admissions)
    events.extend(evictions)
    new_state = dataclasses.replace(
        state,
        pairs=tuple(pairs),
        archive=prior_archive + tuple(children),
        next_pair_id=next_id,
    )
    return new_state, events


# =============================================================================
# Transfer
# =============================================================================


def transfer(
    state: PoetState, master_seed: int, evaluator: Evaluator
) -> tuple[PoetState, list[PoetEvent]]:
    """Replace each pair's population with a foreign one that strictly beats it at home.

    Every representative, the incumbent's included, is scored on the same
    course in the target environment. Replacements are decided on the
    pre-transfer populations and applied together.
    """
    if len(state.pairs) < 2:
        return state, []
    generation = state.generation
    reps = [representative(p) for p in state.pairs]
    jobs = [
        EvaluationJob(
            key=(t, s),
            genotype=rep,
            env=target.env,
            base_seed=derive_seed(master_seed, Stream.TRANSFER_EVAL, generation, target.id),
        )
        for t, target in enumerate(state.pairs)
        for s, rep in enumerate(reps)
    ]
    n = len(state.pairs)
    scores = np.array(evaluator.run(jobs)).reshape(n, n)

    events: list[PoetEvent] = []
    replacements: dict[int, Pair] = {}
    for t, target in enumerate(state.pairs):
        events.append(
            CrossTestRecord(
                generation=generation,
                target_pair_id=target.id,
                scores={p.id: float(scores[t, s]) for s, p in enumerate(state.pairs)},
            )
        )
        incumbent = float(scores[t, t])
        foreign = [s for s in range(n) if s != t]
        best = max(foreign, key=lambda s: (scores[t, s], -s))
        if scores[t, best] > incumbent:
            replacements[t] = state.pairs[best]
            events.append(
                TransferEvent(
                    generation=generation,
                    target_pair_id=target.id,
                    source_pair_id=state.pairs[best].id,
                    incumbent_score=incumbent,
                    winning_score=float(scores[t, best]),
                )
            )
            logger.info(
                "poet.transfer",
                generation=generation,
                target_pair=target.id,
                source_pair=state.pairs[best].id,
                incumbent=incumbent,
                winner=float(scores[t, best]),
            )

    pairs = tuple(
        dataclasses.replace(p, population=replacements[t].population) if t in replacements else p
        for t, p in enumerate(state.pairs)
    )
    return dataclasses.replace(state, pairs=pairs), events


# =============================================================================
# Loop
# =============================================================================


def generation_seed(master_seed: int, pair_id: int, generation: int) -> int:
    """Seed of the GA generation that produces ``generation`` for ``pair_id``."""
    return derive_seed(master_seed, Stream.GENERATION, pair_id, generation)


def poet_step(
    state: PoetState,
    master_seed: int,
    evaluator: Evaluator,
    ga_config: GAConfig | None = None,
    genome_config: GenomeConfig | None = None,
) -> PoetStep:
    """One loop generation: a GA generation for every pair, then creation and
    transfer on their schedules.

    When the budget cannot pay for the GA round the returned step is marked
    exhausted and carries ``state`` unchanged. A scheduled creation or transfer
    the budget cannot pay for is skipped and the step is marked exhausted.
    """
    config = state.config
    generation = state.generation + 1
    tasks = [(p.population, p.env, generation_seed(master_seed, p.id, generation)) for p in state.pairs]
    try:
        results = evolve_batch(tasks, evaluator, ga_config, genome_config)
    except BudgetExhaustedError:
        return PoetStep(state=state, results={}, exhausted=True)

    pairs = tuple(
        dataclasses.replace(p, population=r.population)
        for p, r in zip(state.pairs, results, strict=True)
    )
    step = PoetStep(
        state=dataclasses.replace(state, pairs=pairs, generation=generation),
        results={p.id: r for p, r in zip(state.pairs, results, strict=True)},
    )

    try:
        if generation % config.create_env_every == 0:
            step.state, events = create_environments(step.state, master_seed, evaluator)
            step.events.extend(events)
        if generation % config.transfer_every == 0:
            step.state, events = transfer(step.state, master_seed, evaluator)
            step.events.extend(events)
    except BudgetExhaustedError as e:
        logger.info("poet.budget_exhausted", generation=generation, detail=e.detail)
        step.exhausted = True
    return step


def poet_run(
    state: PoetState,
    master_seed: int,
    evaluator: Evaluator,
    ga_config: GAConfig | None = None,
    genome_config: GenomeConfig | None = None,
) -> Iterator[PoetStep]:
    """Yield loop generations until the shared budget runs out.

    The final exhausted step is yielded too; its state is the one to keep.
    """
    while True:
        step = poet_step(state, master_seed, evaluator, ga_config, genome_config)
        yield step
        if step.exhausted:
            return
        state = step.state


def tracked_pair_id(state: PoetState, previous: int = 0) -> int:
    """Pair whose population stands for the flat-ground lineage.

    The previously tracked pair while it survives; otherwise the flattest
    surviving pair, oldest first.
    """
    if state.pair(previous) is not None:
        return previous
    chosen = min(
        state.pairs,
        key=lambda p: (float(np.linalg.norm(p.env.to_vector())), p.created_at_generation, p.id),
    )
    return chosen.id
