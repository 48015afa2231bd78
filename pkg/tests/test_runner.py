"""Tests for run orchestration, checkpoints and resume."""

import json
from pathlib import Path

import numpy as np
import pytest

from app.schemas.artifacts import RunStatus
from app.schemas.experiment import Condition, ExperimentConfig, GAConfig, WalkerConfig
from app.schemas.run_log import (
    AdmissionEvent,
    CrossTestRecord,
    EnvCreatedEvent,
    GenerationRecord,
    IndividualsRecord,
    RunEnd,
    RunHeader,
)
from app.services.checkpoint import CHECKPOINT_NAME, load_checkpoint
from app.services.experiment_runner import (
    BEST_GENOTYPE_NAME,
    MANIFEST_NAME,
    resume,
    run_experiment,
)
from app.services.genome import load_genotype
from app.services.run_log import RUN_LOG_NAME, read_run_log
from tests.scripted import morphology_fitness


def _log_bytes(summary) -> bytes:
    return (summary.run_dir / RUN_LOG_NAME).read_bytes()


def _generations(run_dir: Path) -> list[GenerationRecord]:
    return [r for r in read_run_log(run_dir / RUN_LOG_NAME) if isinstance(r, GenerationRecord)]


# =============================================================================
# Fresh runs
# =============================================================================


class TestStaticRun:
    """Tests for the static condition."""

    def test_budget_of_ten_generations(self, tmp_path):
        """A 1920-evaluation budget buys the initial population and nine more generations."""
        config = ExperimentConfig(
            condition=Condition.STATIC,
            evaluation_budget=1920,
            output_dir=str(tmp_path / "static"),
        )
        summary = run_experiment(config, fitness_fn=morphology_fitness)

        records = _generations(summary.run_dir)
        assert [r.generation for r in records] == list(range(10))
        assert records[-1].evaluations == 1920
        assert summary.status == RunStatus.FINISHED
        assert summary.evaluations == 1920

    def test_log_layout(self, small_experiment):
        summary = run_experiment(small_experiment(budget=40), fitness_fn=morphology_fitness)
        records = read_run_log(summary.run_dir / RUN_LOG_NAME)

        assert isinstance(records[0], RunHeader)
        assert isinstance(records[-1], RunEnd)
        assert [r.seq for r in records] == list(range(len(records)))
        individuals = [r for r in records if isinstance(r, IndividualsRecord)]
        assert len(individuals[0].fitness) == 8
        assert all(r.pairs[0].env == [0.0] * 8 for r in records if isinstance(r, GenerationRecord))

    def test_evaluations_never_decrease(self, small_experiment):
        summary = run_experiment(small_experiment(budget=100), fitness_fn=morphology_fitness)
        counts = [r.evaluations for r in _generations(summary.run_dir)]
        assert counts == sorted(counts)
        assert counts[-1] <= 100

    def test_budget_below_initial_population(self, small_experiment):
        summary = run_experiment(small_experiment(budget=5), fitness_fn=morphology_fitness)
        records = read_run_log(summary.run_dir / RUN_LOG_NAME)
        assert summary.status == RunStatus.FINISHED
        assert summary.evaluations == 0
        assert [type(r) for r in records] == [RunHeader, RunEnd]

    def test_artifacts_written(self, small_experiment):
        summary = run_experiment(small_experiment(budget=40), fitness_fn=morphology_fitness)

        manifest = json.loads((summary.run_dir / MANIFEST_NAME).read_text(encoding="utf-8"))
        assert manifest["status"] == "finished"
        assert manifest["evaluations"] == 40

        best = load_genotype(summary.run_dir / f"{BEST_GENOTYPE_NAME}.bin")
        assert best.fitness == summary.best_fitness
        provenance = json.loads((summary.run_dir / f"{BEST_GENOTYPE_NAME}.json").read_text(encoding="utf-8"))[
            "provenance"
        ]
        assert provenance["condition"] == "static"
        assert load_checkpoint(summary.run_dir / CHECKPOINT_NAME).finished


class TestDeterminism:
    """Same configuration, same bytes."""

    @pytest.mark.parametrize("condition", [Condition.STATIC, Condition.RRI, Condition.POET])
    def test_repeat_runs_identical(self, small_experiment, tmp_path, condition):
        first = run_experiment(
            small_experiment(condition, output_dir=str(tmp_path / "a")), fitness_fn=morphology_fitness
        )
        second = run_experiment(
            small_experiment(condition, output_dir=str(tmp_path / "b")), fitness_fn=morphology_fitness
        )
        assert _log_bytes(first) == _log_bytes(second)

    def test_worker_count_does_not_change_log(self, small_experiment, tmp_path):
        sequential = run_experiment(
            small_experiment(Condition.POET, output_dir=str(tmp_path / "one")), fitness_fn=morphology_fitness
        )
        pooled = run_experiment(
            small_experiment(Condition.POET, output_dir=str(tmp_path / "two"), worker_count=2),
            fitness_fn=morphology_fitness,
        )
        assert _log_bytes(sequential) == _log_bytes(pooled)

    def test_seed_changes_log(self, small_experiment, tmp_path):
        a = run_experiment(small_experiment(output_dir=str(tmp_path / "a")), fitness_fn=morphology_fitness)
        b = run_experiment(
            small_experiment(output_dir=str(tmp_path / "b"), master_seed=8), fitness_fn=morphology_fitness
        )
        assert _log_bytes(a) != _log_bytes(b)


class TestRoundRobinRun:
    """Tests for the RRI condition."""

    def test_switches_to_pits_at_generation_five(self, small_experiment):
        summary = run_experiment(small_experiment(Condition.RRI, budget=240), fitness_fn=morphology_fitness)
        records = {r.generation: r for r in _generations(summary.run_dir)}

        for generation in range(5):
            assert records[generation].env_index == 0
            assert records[generation].pairs[0].env == [0.0] * 8
        pits = records[5].pairs[0].env
        assert records[5].env_index == 1
        assert pits[1] > 0 and pits[2] > 0
        assert pits[0] == 0.0 and pits[3:] == [0.0] * 5
        assert records[10].env_index == 2
        assert records[25].env_index == 0

    def test_escalations_logged_in_feature_envs_only(self, small_experiment):
        summary = run_experiment(small_experiment(Condition.RRI, budget=200), fitness_fn=morphology_fitness)
        escalations = [r for r in read_run_log(summary.run_dir / RUN_LOG_NAME) if r.kind == "escalation"]
        assert escalations
        assert all(e.env_index != 0 for e in escalations)
        assert all(e.best_fitness >= 150.0 for e in escalations)


class TestPoetRun:
    """Log-level invariants of a small POET run."""

    def test_invariants(self, small_experiment):
        config = small_experiment(Condition.POET, budget=600, poet={
            "pair_capacity": 3,
            "transfer_every": 2,
            "create_env_every": 4,
            "children_created": 6,
            "children_admitted": 2,
            "reproduction_criterion": 150.0,
        })
        summary = run_experiment(config, fitness_fn=morphology_fitness)
        records = read_run_log(summary.run_dir / RUN_LOG_NAME)
        generations = [r for r in records if isinstance(r, GenerationRecord)]

        assert summary.evaluations <= 600
        assert all(len(r.pairs) <= 3 for r in generations)
        assert all(r.tracked_pair_id in {p.pair_id for p in r.pairs} for r in generations)
        assert {r.generation for r in records if isinstance(r, CrossTestRecord)} <= set(range(0, 100, 2))
        admissions = [r for r in records if isinstance(r, AdmissionEvent)]
        assert all(50.0 <= a.score <= 300.0 for a in admissions)
        assert all(a.generation % 4 == 0 for a in admissions)


# =============================================================================
# Resume
# =============================================================================


class TestResume:
    """Tests for interrupting and continuing runs."""

    @pytest.mark.parametrize("condition", [Condition.STATIC, Condition.RRI, Condition.POET])
    def test_resume_matches_uninterrupted(self, small_experiment, tmp_path, condition):
        whole = run_experiment(
            small_experiment(condition, output_dir=str(tmp_path / "whole")), fitness_fn=morphology_fitness
        )

        config = small_experiment(condition, output_dir=str(tmp_path / "split"))
        interrupted = run_experiment(config, fitness_fn=morphology_fitness, stop_after=5)
        assert interrupted.status == RunStatus.INTERRUPTED
        assert interrupted.generation == 5

        resumed = resume(tmp_path / "split" / CHECKPOINT_NAME, fitness_fn=morphology_fitness)

        assert resumed.status == RunStatus.FINISHED
        assert resumed.evaluations == whole.evaluations
        assert _log_bytes(resumed) == _log_bytes(whole)

    def test_resume_of_finished_run_is_noop(self, small_experiment):
        summary = run_experiment(small_experiment(budget=40), fitness_fn=morphology_fitness)
        before = _log_bytes(summary)

        again = resume(summary.run_dir / CHECKPOINT_NAME, fitness_fn=morphology_fitness)

        assert again.status == RunStatus.FINISHED
        assert again.generation == summary.generation
        assert _log_bytes(summary) == before

    def test_raised_budget_continues(self, small_experiment, tmp_path):
        short = run_experiment(
            small_experiment(budget=40, output_dir=str(tmp_path / "short")), fitness_fn=morphology_fitness
        )
        long = run_experiment(
            small_experiment(budget=80, output_dir=str(tmp_path / "long")), fitness_fn=morphology_fitness
        )

        continued = resume(short.run_dir / CHECKPOINT_NAME, budget=80, fitness_fn=morphology_fitness)

        assert continued.evaluations == 80
        assert continued.generation == long.generation
        short_lines = _log_bytes(continued).splitlines()
        long_lines = _log_bytes(long).splitlines()
        # the header keeps the original budget
        assert short_lines[1:] == long_lines[1:]

    def test_unpaid_creation_is_replayed(self, small_experiment, tmp_path):
        """Generation 4 pays for its GA round but not its environment creation at budget 40."""
        poet = {
            "pair_capacity": 3,
            "transfer_every": 2,
            "create_env_every": 4,
            "children_created": 6,
            "children_admitted": 2,
            "reproduction_criterion": 100.0,
        }
        long = run_experiment(
            small_experiment(Condition.POET, budget=120, poet=poet, output_dir=str(tmp_path / "long")),
            fitness_fn=morphology_fitness,
        )
        short = run_experiment(
            small_experiment(Condition.POET, budget=40, poet=poet, output_dir=str(tmp_path / "short")),
            fitness_fn=morphology_fitness,
        )
        assert short.evaluations == 40
        assert not any(isinstance(r, EnvCreatedEvent) for r in read_run_log(short.run_dir / RUN_LOG_NAME))
        assert load_checkpoint(short.run_dir / CHECKPOINT_NAME).generation == 3

        continued = resume(short.run_dir / CHECKPOINT_NAME, budget=120, fitness_fn=morphology_fitness)

        created = [r for r in read_run_log(continued.run_dir / RUN_LOG_NAME) if isinstance(r, EnvCreatedEvent)]
        assert {r.generation for r in created} >= {4}
        assert continued.evaluations == long.evaluations
        assert _log_bytes(continued).splitlines()[1:] == _log_bytes(long).splitlines()[1:]

    def test_interrupted_manifest(self, small_experiment):
        summary = run_experiment(small_experiment(), fitness_fn=morphology_fitness, stop_after=2)
        manifest = json.loads((summary.run_dir / MANIFEST_NAME).read_text(encoding="utf-8"))
        assert manifest["status"] == "interrupted"
        assert manifest["generation"] == 2


# =============================================================================
# Reduced-scale trends
# =============================================================================


def _final_tracked_diversity(run_dir: Path) -> float:
    last = _generations(run_dir)[-1]
    return next(p.diversity for p in last.pairs if p.pair_id == last.tracked_pair_id)


class TestTrends:
    """Directional outcomes at desk-friendly sizes."""

    @pytest.mark.slow
    def test_ga_learns_on_flat_ground(self, tmp_path):
        """Sixteen walkers with short episodes improve on their initial best within fifteen generations."""
        config = ExperimentConfig(
            condition=Condition.STATIC,
            master_seed=2,
            evaluation_budget=256,
            output_dir=str(tmp_path / "learn"),
            ga=GAConfig(population_size=16, tournament_size=3, pairs_per_generation=8, episodes_per_eval=1),
            walker=WalkerConfig(max_steps=300),
        )
        summary = run_experiment(config)

        records = _generations(summary.run_dir)
        initial_best = records[0].pairs[0].best_fitness
        assert records[-1].generation == 15
        assert max(r.pairs[0].best_fitness for r in records[1:]) > initial_best
        assert summary.status == RunStatus.FINISHED

    def test_poet_flat_lineage_keeps_more_diversity(self, small_experiment, tmp_path):
        """Median final diversity of the tracked POET lineage is at least the static one over five seeds."""
        finals: dict[Condition, list[float]] = {Condition.STATIC: [], Condition.POET: []}
        for condition in finals:
            for seed in range(5):
                config = small_experiment(
                    condition, budget=400, master_seed=seed, output_dir=str(tmp_path / f"{condition.value}-{seed}")
                )
                summary = run_experiment(config, fitness_fn=morphology_fitness)
                finals[condition].append(_final_tracked_diversity(summary.run_dir))

        assert np.median(finals[Condition.POET]) >= np.median(finals[Condition.STATIC])
