"""Budgeted evaluation of genotypes.

The coordinator owns one ``EvaluationCounter``; an ``Evaluator`` runs batches
of pure evaluation jobs either in-process or on a process pool and returns
results in job order, so parallelism never changes a result.
"""

from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from types import TracebackType

from app.core.exceptions import BudgetExhaustedError
from app.core.logging import get_logger
from app.schemas.environment import EnvParams
from app.schemas.experiment import PhysicsConfig, WalkerConfig
from app.services.genome import Genotype
from app.services.walker_env import mean_episode_reward

logger = get_logger(__name__)

FitnessFunction = Callable[[Genotype, EnvParams, int], float]


class EvaluationCounter:
    """Tally of budget units spent, one per individual evaluation."""

    def __init__(self, budget: int, value: int = 0) -> None:
        self.budget = budget
        self.value = value

    @property
    def remaining(self) -> int:
        return max(self.budget - self.value, 0)

    def can_afford(self, count: int) -> bool:
        return self.value + count <= self.budget

    def reserve(self, count: int) -> None:
        """Charge ``count`` evaluations or raise without charging anything."""
        if not self.can_afford(count):
            raise BudgetExhaustedError(count, self.value, self.budget)
        self.value += count

    def release(self, count: int) -> None:
        """Return units reserved for a batch that never completed."""
        if not 0 <= count <= self.value:
            raise ValueError(f"Cannot release {count} of {self.value} charged evaluations")
        self.value -= count


@dataclass(frozen=True)
class EvaluationJob:
    key: tuple[int, ...]
    genotype: Genotype
    env: EnvParams
    base_seed: int


def _run_job(fitness_fn: FitnessFunction, job: EvaluationJob) -> float:
    return float(fitness_fn(job.genotype, job.env, job.base_seed))


def walker_fitness(
    walker: WalkerConfig | None = None,
    physics: PhysicsConfig | None = None,
    episodes: int = 4,
) -> FitnessFunction:
    """The simulator-backed fitness function, bound to its configs."""
    return partial(
        mean_episode_reward, walker_config=walker, physics_config=physics, episodes=episodes
    )


class Evaluator:
    """Runs evaluation jobs against a shared budget."""

    def __init__(
        self,
        counter: EvaluationCounter,
        fitness_fn: FitnessFunction | None = None,
        workers: int = 1,
    ) -> None:
        self.counter = counter
        self.fitness_fn = fitness_fn or walker_fitness()
        self.workers = workers
        self._pool: ProcessPoolExecutor | None = None

    def run(self, jobs: Sequence[EvaluationJob]) -> list[float]:
        """Evaluate ``jobs``; results align with the input order.

        The whole batch is charged up front; a batch the budget cannot cover
        raises ``BudgetExhaustedError`` before anything is evaluated. A batch
        that fails part-way is refunded in full.
        """
        if not jobs:
            return []
        self.counter.reserve(len(jobs))
        try:
            return self._evaluate(jobs)
        except BaseException:
            self.counter.release(len(jobs))
            logger.warning("evaluator.batch_failed", jobs=len(jobs))
            raise

    def _evaluate(self, jobs: Sequence[EvaluationJob]) -> list[float]:
        task = partial(_run_job, self.fitness_fn)
        if self.workers <= 1 or len(jobs) == 1:
            return [task(job) for job in jobs]
        if self._pool is None:
            self._pool = ProcessPoolExecutor(max_workers=self.workers)
            logger.debug("evaluator.pool_started", workers=self.workers)
        chunksize = max(1, len(jobs) // (4 * self.workers))
        return list(self._pool.map(task, jobs, chunksize=chunksize))

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def __enter__(self) -> "Evaluator":
        return self

    def __exit__(
        self,
        exc_type: type[BaseException] | None,
        exc: BaseException | None,
        tb: TracebackType | None,
    ) -> None:
        self.close()
