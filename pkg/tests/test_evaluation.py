"""Tests for budgeted evaluation."""

import pytest

from app.core.exceptions import BudgetExhaustedError
from app.schemas.environment import FLAT_ENV, EnvParams
from app.services.evaluation import EvaluationCounter, EvaluationJob, Evaluator
from app.services.genome import init_random
from tests.scripted import failing_fitness, morphology_fitness


def _jobs(rng, count: int) -> list[EvaluationJob]:
    envs = (FLAT_ENV, EnvParams(roughness=2.0))
    return [
        EvaluationJob(key=(i,), genotype=init_random(rng), env=envs[i % 2], base_seed=1000 + i)
        for i in range(count)
    ]


class TestEvaluationCounter:
    """Tests for the budget tally."""

    def test_reserve_charges(self):
        counter = EvaluationCounter(10)
        counter.reserve(4)
        assert counter.value == 4
        assert counter.remaining == 6

    def test_reserve_is_all_or_nothing(self):
        counter = EvaluationCounter(10, value=8)
        with pytest.raises(BudgetExhaustedError) as excinfo:
            counter.reserve(3)
        assert counter.value == 8
        assert excinfo.value.requested == 3

    def test_exact_fit_allowed(self):
        counter = EvaluationCounter(10, value=7)
        assert counter.can_afford(3)
        counter.reserve(3)
        assert counter.remaining == 0

    def test_release_refunds(self):
        counter = EvaluationCounter(10, value=6)
        counter.release(4)
        assert counter.value == 2
        with pytest.raises(ValueError):
            counter.release(3)


class TestEvaluator:
    """Tests for batch evaluation."""

    def test_results_in_job_order(self, rng):
        jobs = _jobs(rng, 6)
        evaluator = Evaluator(EvaluationCounter(100), morphology_fitness)
        results = evaluator.run(jobs)
        assert results == [morphology_fitness(j.genotype, j.env, j.base_seed) for j in jobs]
        assert evaluator.counter.value == 6

    def test_empty_batch_is_free(self):
        evaluator = Evaluator(EvaluationCounter(0), morphology_fitness)
        assert evaluator.run([]) == []

    def test_shortfall_evaluates_nothing(self, rng):
        evaluator = Evaluator(EvaluationCounter(5), morphology_fitness)
        with pytest.raises(BudgetExhaustedError):
            evaluator.run(_jobs(rng, 6))
        assert evaluator.counter.value == 0

    def test_worker_count_does_not_change_results(self, rng):
        jobs = _jobs(rng, 12)
        sequential = Evaluator(EvaluationCounter(100), morphology_fitness).run(jobs)
        with Evaluator(EvaluationCounter(100), morphology_fitness, workers=2) as pooled:
            parallel = pooled.run(jobs)
        assert parallel == sequential

    @pytest.mark.parametrize("workers", [1, 2])
    def test_failed_batch_is_refunded(self, rng, workers):
        with Evaluator(EvaluationCounter(100, value=10), failing_fitness, workers=workers) as evaluator:
            with pytest.raises(RuntimeError):
                evaluator.run(_jobs(rng, 6))
            assert evaluator.counter.value == 10
            evaluator.run(_jobs(rng, 3))
            assert evaluator.counter.value == 13
