"""Run orchestration for the Static, RRI and POET conditions.

One coordinator owns every piece of evolutionary state and the evaluation
counter; evaluations go through an ``Evaluator``. The run directory holds the
manifest, the deterministic run log, the latest checkpoint and the best
genotype.
"""

import dataclasses
from datetime import UTC, datetime
from pathlib import Path

import numpy as np

from app.core.exceptions import ArtifactIOError, BudgetExhaustedError
from app.core.logging import get_logger
from app.schemas.artifacts import RunManifest, RunStatus
from app.schemas.environment import EnvParams
from app.schemas.experiment import Condition, ExperimentConfig
from app.schemas.run_log import (
    GenerationRecord,
    IndividualsRecord,
    PairSnapshot,
    RunEnd,
    RunHeader,
    RunLogRecord,
)
from app.services.analysis import population_diversity
from app.services.checkpoint import CHECKPOINT_NAME, RunState, load_checkpoint, save_checkpoint
from app.services.curricula import (
    rri_advance,
    rri_current_env,
    rri_initial_state,
    rri_maybe_escalate,
    static_env,
)
from app.services.evaluation import EvaluationCounter, Evaluator, FitnessFunction, walker_fitness
from app.services.ga import GenerationResult, evolve_batch, init_population
from app.services.genome import save_genotype
from app.services.poet import Pair, generation_seed, initial_state, poet_step, tracked_pair_id
from app.services.run_log import RUN_LOG_NAME, RunLogWriter

logger = get_logger(__name__)

MANIFEST_NAME = "manifest.json"
BEST_GENOTYPE_NAME = "best_genotype"

_LOG_NEUTRAL_FIELDS = {"worker_count", "output_dir"}


@dataclasses.dataclass(frozen=True)
class RunSummary:
    run_dir: Path
    status: RunStatus
    generation: int
    evaluations: int
    best_fitness: float | None


def _now() -> datetime:
    return datetime.now(UTC)


def _snapshot(pair: Pair) -> PairSnapshot:
    pop = pair.population
    fitness = pop.fitness()
    best = pop[int(np.argmax(fitness))]
    return PairSnapshot(
        pair_id=pair.id,
        env=pair.env.to_vector().tolist(),
        created_at_generation=pair.created_at_generation,
        best_fitness=float(fitness.max()),
        mean_fitness=float(fitness.mean()),
        diversity=population_diversity(pop) if len(pop) > 1 else 0.0,
        best_morphology=best.morphology.tolist(),
    )


def _individuals(generation: int, pair_id: int, result: GenerationResult) -> IndividualsRecord:
    return IndividualsRecord(
        generation=generation,
        pair_id=pair_id,
        morphologies=[child.morphology.tolist() for child in result.brood.children],
        fitness=list(result.child_fitness),
    )


class ExperimentRunner:
    """Drives one run to budget exhaustion, checkpointing along the way."""

    def __init__(
        self,
        config: ExperimentConfig,
        run_dir: Path | None = None,
        fitness_fn: FitnessFunction | None = None,
    ) -> None:
        self.config = config
        self.run_dir = Path(run_dir or config.output_dir)
        self.fitness_fn = fitness_fn or walker_fitness(
            config.walker, config.physics, config.ga.episodes_per_eval
        )
        self.counter = EvaluationCounter(config.evaluation_budget)
        self.log = RunLogWriter(self.run_dir / RUN_LOG_NAME)
        self._created_at = _now()
        self._since_checkpoint = 0

    @property
    def checkpoint_path(self) -> Path:
        return self.run_dir / CHECKPOINT_NAME

    # -------------------------------------------------------------------------
    # Entry points
    # -------------------------------------------------------------------------

    def run(self, stop_after: int | None = None) -> RunSummary:
        """Start a fresh run; ``stop_after`` interrupts it after that generation."""
        config = self.config
        self.log.open()
        self.log.append(
            RunHeader(
                condition=config.condition.value,
                master_seed=config.master_seed,
                config_hash=config.config_hash(),
                comparability_hash=config.comparability_hash(),
                config=config.model_dump(mode="json", exclude=_LOG_NEUTRAL_FIELDS),
            )
        )
        self._write_manifest(RunStatus.RUNNING, 0)
        logger.info(
            "run.started",
            condition=config.condition.value,
            seed=config.master_seed,
            budget=config.evaluation_budget,
            run_dir=str(self.run_dir),
        )
        with Evaluator(self.counter, self.fitness_fn, config.worker_count) as evaluator:
            state = self._initialise(evaluator)
            if state is None:
                return self._finish_empty()
            return self._loop(state, evaluator, stop_after)

    def resume(self, state: RunState, stop_after: int | None = None) -> RunSummary:
        """Continue from ``state``; the log is cut back to the checkpoint first."""
        if state.finished and self.config.evaluation_budget <= state.config.evaluation_budget:
            logger.info("run.already_finished", run_dir=str(self.run_dir))
            return RunSummary(self.run_dir, RunStatus.FINISHED, state.generation, state.evaluations, None)
        self.counter.value = state.evaluations
        self.log.open(truncate_to=state.record_count)
        logger.info("run.resumed", generation=state.generation, evaluations=state.evaluations)
        with Evaluator(self.counter, self.fitness_fn, self.config.worker_count) as evaluator:
            return self._loop(dataclasses.replace(state, config=self.config, finished=False), evaluator, stop_after)

    # -------------------------------------------------------------------------
    # Generations
    # -------------------------------------------------------------------------

    def _initialise(self, evaluator: Evaluator) -> RunState | None:
        config = self.config
        env = static_env()
        seed = generation_seed(config.master_seed, 0, 0)
        try:
            population = init_population(env, seed, evaluator, config.ga, config.genome)
        except BudgetExhaustedError:
            return None

        state = RunState(config=config, generation=0, evaluations=self.counter.value, record_count=0)
        if config.condition == Condition.POET:
            state.poet = initial_state(population, config.poet)
        else:
            state.population = population
            if config.condition == Condition.RRI:
                state.rri = rri_advance(rri_initial_state(config.curricula), config.curricula)

        records: list[RunLogRecord] = []
        if config.log_individuals:
            records.append(
                IndividualsRecord(
                    generation=0,
                    pair_id=0,
                    morphologies=[ind.morphology.tolist() for ind in population.individuals],
                    fitness=population.fitness().tolist(),
                )
            )
        records.append(
            self._generation_record(state, switched=False, env_index=0 if state.rri is not None else None, env=env)
        )
        self.log.extend(records)
        return state

    def _pairs(self, state: RunState) -> list[Pair]:
        if state.poet is not None:
            return list(state.poet.pairs)
        assert state.population is not None
        env = rri_current_env(state.rri) if state.rri is not None else static_env()
        return [Pair(id=0, env=env, population=state.population)]

    def _generation_record(
        self,
        state: RunState,
        switched: bool,
        env_index: int | None,
        env: EnvParams | None = None,
    ) -> GenerationRecord:
        pairs = self._pairs(state)
        if env is not None:
            pairs = [dataclasses.replace(pairs[0], env=env)]
        return GenerationRecord(
            generation=state.generation,
            evaluations=self.counter.value,
            pairs=[_snapshot(p) for p in pairs],
            env_index=env_index,
            tracked_pair_id=state.tracked_pair_id,
            lineage_switched=switched,
        )

    def _curriculum_generation(self, state: RunState, evaluator: Evaluator) -> RunState | None:
        config = self.config
        assert state.population is not None
        generation = state.generation + 1
        env: EnvParams = rri_current_env(state.rri) if state.rri is not None else static_env()
        env_index = state.rri.cursor if state.rri is not None else None
        seed = generation_seed(config.master_seed, 0, generation)
        try:
            (result,) = evolve_batch([(state.population, env, seed)], evaluator, config.ga, config.genome)
        except BudgetExhaustedError:
            return None

        new = dataclasses.replace(state, generation=generation, population=result.population)
        records: list[RunLogRecord] = []
        if config.log_individuals:
            records.append(_individuals(generation, 0, result))
        if new.rri is not None:
            new.rri, escalation = rri_maybe_escalate(
                new.rri, result.population, config.curricula, result.child_fitness
            )
            if escalation is not None:
                logger.info("rri.escalation", generation=generation, env_index=escalation.env_index)
                records.append(escalation)
        records.append(self._generation_record(new, switched=False, env_index=env_index, env=env))
        if new.rri is not None:
            new.rri = rri_advance(new.rri, config.curricula)
        self.log.extend(records)
        return new

    def _poet_generation(self, state: RunState, evaluator: Evaluator) -> tuple[RunState | None, bool]:
        config = self.config
        assert state.poet is not None
        step = poet_step(state.poet, config.master_seed, evaluator, config.ga, config.genome)
        if not step.results:
            return None, True

        generation = step.state.generation
        tracked = tracked_pair_id(step.state, state.tracked_pair_id)
        new = dataclasses.replace(state, generation=generation, poet=step.state, tracked_pair_id=tracked)
        records: list[RunLogRecord] = []
        if config.log_individuals:
            records.extend(_individuals(generation, pid, r) for pid, r in step.results.items())
        records.extend(step.events)
        records.append(self._generation_record(new, switched=tracked != 0, env_index=None))
        self.log.extend(records)
        return new, step.exhausted

    def _loop(self, state: RunState, evaluator: Evaluator, stop_after: int | None) -> RunSummary:
        config = self.config
        committed: RunState | None = None
        try:
            while True:
                if stop_after is not None and state.generation >= stop_after:
                    self._checkpoint(state)
                    self.log.close()
                    self._write_manifest(RunStatus.INTERRUPTED, state.generation)
                    logger.info("run.interrupted", generation=state.generation)
                    return self._summary(state, RunStatus.INTERRUPTED)

                exhausted = False
                mark = (self.log.record_count, self.counter.value)
                if config.condition == Condition.POET:
                    new, exhausted = self._poet_generation(state, evaluator)
                else:
                    new = self._curriculum_generation(state, evaluator)
                if new is None:
                    break
                if exhausted:
                    # a generation whose creation or transfer went unpaid is replayed on resume
                    committed = dataclasses.replace(state, record_count=mark[0], evaluations=mark[1])
                    state = new
                    break
                state = new
                self._since_checkpoint += 1
                if self._since_checkpoint >= config.checkpoint_every:
                    self._checkpoint(state)
        except ArtifactIOError:
            self._write_manifest(RunStatus.FAILED, state.generation)
            raise
        return self._finish(state, committed)

    # -------------------------------------------------------------------------
    # Artifacts
    # -------------------------------------------------------------------------

    def _checkpoint(self, state: RunState) -> None:
        state.evaluations = self.counter.value
        state.record_count = self.log.record_count
        save_checkpoint(state, self.checkpoint_path)
        self._since_checkpoint = 0

    def _finish(self, state: RunState, committed: RunState | None = None) -> RunSummary:
        """Close the run; ``committed`` is checkpointed instead of ``state`` when given.

        ``committed`` is the last complete generation with the log length and
        evaluation count it had, so a raised budget replays what was cut short.
        """
        if committed is None:
            state.finished = True
            self._checkpoint(state)
        else:
            committed.finished = True
            save_checkpoint(committed, self.checkpoint_path)
            self._since_checkpoint = 0
        self.log.append(RunEnd(generation=state.generation, evaluations=self.counter.value, reason="budget_exhausted"))
        self.log.close()
        self._save_best(state)
        self._write_manifest(RunStatus.FINISHED, state.generation)
        logger.info("run.finished", generation=state.generation, evaluations=self.counter.value)
        return self._summary(state, RunStatus.FINISHED)

    def _finish_empty(self) -> RunSummary:
        self.log.append(RunEnd(generation=0, evaluations=self.counter.value, reason="budget_exhausted"))
        self.log.close()
        self._write_manifest(RunStatus.FINISHED, 0)
        logger.info("run.finished", generation=0, evaluations=self.counter.value)
        return RunSummary(self.run_dir, RunStatus.FINISHED, 0, self.counter.value, None)

    def _best(self, state: RunState) -> tuple[Pair, int] | None:
        pairs = self._pairs(state)
        if not pairs:
            return None
        best_pair = max(pairs, key=lambda p: (p.population.fitness().max(), -p.id))
        return best_pair, int(np.argmax(best_pair.population.fitness()))

    def _save_best(self, state: RunState) -> None:
        found = self._best(state)
        if found is None:
            return
        pair, index = found
        save_genotype(
            pair.population[index],
            self.run_dir / BEST_GENOTYPE_NAME,
            provenance={
                "condition": self.config.condition.value,
                "master_seed": self.config.master_seed,
                "config_hash": self.config.config_hash(),
                "pair_id": pair.id,
                "env": pair.env.to_vector().tolist(),
                "generation": state.generation,
            },
        )

    def _summary(self, state: RunState, status: RunStatus) -> RunSummary:
        found = self._best(state)
        best = float(found[0].population.fitness().max()) if found else None
        return RunSummary(self.run_dir, status, state.generation, self.counter.value, best)

    def _write_manifest(self, status: RunStatus, generation: int) -> None:
        manifest = RunManifest(
            condition=self.config.condition.value,
            master_seed=self.config.master_seed,
            config_hash=self.config.config_hash(),
            comparability_hash=self.config.comparability_hash(),
            config=self.config.model_dump(mode="json"),
            status=status,
            generation=generation,
            evaluations=self.counter.value,
            created_at=self._created_at,
            updated_at=_now(),
        )
        path = self.run_dir / MANIFEST_NAME
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(manifest.model_dump_json(indent=2), encoding="utf-8")
        except OSError as e:
            raise ArtifactIOError(f"Failed to write manifest {path}: {e}") from e


# =============================================================================
# Module-level entry points
# =============================================================================


def run_experiment(
    config: ExperimentConfig,
    fitness_fn: FitnessFunction | None = None,
    stop_after: int | None = None,
) -> RunSummary:
    return ExperimentRunner(config, fitness_fn=fitness_fn).run(stop_after)


def resume(
    checkpoint: Path,
    budget: int | None = None,
    fitness_fn: FitnessFunction | None = None,
    stop_after: int | None = None,
    workers: int | None = None,
) -> RunSummary:
    """Continue a checkpointed run, optionally with a larger budget or worker count."""
    checkpoint = Path(checkpoint)
    state = load_checkpoint(checkpoint)
    updates: dict[str, int | str] = {"output_dir": str(checkpoint.parent)}
    if budget is not None:
        updates["evaluation_budget"] = budget
    if workers is not None:
        updates["worker_count"] = workers
    config = state.config.model_copy(update=updates)
    runner = ExperimentRunner(config, run_dir=checkpoint.parent, fitness_fn=fitness_fn)
    return runner.resume(state, stop_after)
