"""Test configuration and fixtures for the workbench."""

from pathlib import Path

import numpy as np
import pytest

from app.schemas.experiment import (
    Condition,
    ExperimentConfig,
    GAConfig,
    GenomeConfig,
    PoetConfig,
)
from app.schemas.morphology import BASELINE_MORPHOLOGY
from app.services.evaluation import EvaluationCounter, Evaluator
from app.services.ga import AgentPopulation
from app.services.genome import Genotype, init_random, zero_controller
from tests.scripted import morphology_fitness


@pytest.fixture
def rng() -> np.random.Generator:
    """Fixed-seed generator."""
    return np.random.default_rng(1234)


@pytest.fixture
def small_ga() -> GAConfig:
    """Eight individuals in four pairs."""
    return GAConfig(population_size=8, tournament_size=3, pairs_per_generation=4)


@pytest.fixture
def baseline_genotype() -> Genotype:
    """Zero controller with the reference leg sizes."""
    return zero_controller(BASELINE_MORPHOLOGY.copy())


@pytest.fixture
def make_population():
    """Factory for evaluated populations with given fitness values."""

    def _make(fitness: list[float], seed: int = 0, generation: int = 0) -> AgentPopulation:
        gen = np.random.default_rng(seed)
        individuals = tuple(init_random(gen).with_fitness(f) for f in fitness)
        return AgentPopulation(individuals, generation)

    return _make


@pytest.fixture
def scripted_evaluator() -> Evaluator:
    """Sequential evaluator on the scripted morphology fitness with a large budget."""
    return Evaluator(EvaluationCounter(10**9), morphology_fitness)


@pytest.fixture
def frozen_genome() -> GenomeConfig:
    """Variation switched off: children are clones of their parents."""
    return GenomeConfig(replacement_rate=0.0, modification_rate=0.0, crossover_enabled=False)


@pytest.fixture
def small_experiment(tmp_path: Path):
    """Factory for small scripted-fitness experiment configs."""

    def _make(condition: Condition = Condition.STATIC, budget: int = 200, **overrides) -> ExperimentConfig:
        data = {
            "condition": condition,
            "master_seed": 7,
            "evaluation_budget": budget,
            "output_dir": str(tmp_path / f"{condition.value}-run"),
            "checkpoint_every": 3,
            "ga": GAConfig(population_size=8, tournament_size=3, pairs_per_generation=4),
            "poet": PoetConfig(
                pair_capacity=3,
                transfer_every=2,
                create_env_every=4,
                children_created=6,
                children_admitted=2,
            ),
        }
        data.update(overrides)
        return ExperimentConfig(**data)

    return _make
