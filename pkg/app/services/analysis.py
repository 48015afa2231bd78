"""Measurements over populations and environments: morphological diversity,
feature maps, and the robustness and local-generalisation test suites."""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.spatial.distance import pdist

from app.core.exceptions import UndefinedDiversityError, UnsupportedEnvironmentError
from app.schemas.environment import (
    ENV_VECTOR_MAX,
    PIT_GAP_MAX,
    ROUGHNESS_MAX,
    STUMP_HEIGHT_MAX,
    EnvParams,
    TerrainFeature,
)
from app.schemas.morphology import (
    HEIGHT_INDICES,
    MORPHOLOGY_MAX,
    MORPHOLOGY_MIN,
    WIDTH_INDICES,
)
from app.services.ga import AgentPopulation

# Feature sizes above which an environment counts as hard in that feature
ROUGHNESS_THRESHOLD = 3.0
PIT_THRESHOLD = 2.5
STUMP_THRESHOLD = 1.5

# Offsets applied by one local-generalisation mutation
LOCAL_ROUGHNESS_OFFSET = 2.4
LOCAL_FEATURE_OFFSET = 0.8

_SUITE_FEATURES = (TerrainFeature.ROUGHNESS, TerrainFeature.PIT, TerrainFeature.STUMP)
_THRESHOLDS = {
    TerrainFeature.ROUGHNESS: (ROUGHNESS_THRESHOLD, ROUGHNESS_MAX),
    TerrainFeature.PIT: (PIT_THRESHOLD, PIT_GAP_MAX),
    TerrainFeature.STUMP: (STUMP_THRESHOLD, STUMP_HEIGHT_MAX),
}


class DifficultyCategory(str, Enum):
    FLAT = "flat"
    SIMPLE = "simple"
    ONE_FEATURE = "one_feature"
    TWO_FEATURES = "two_features"
    THREE_FEATURES = "three_features"


_BY_HARD_COUNT = (
    DifficultyCategory.SIMPLE,
    DifficultyCategory.ONE_FEATURE,
    DifficultyCategory.TWO_FEATURES,
    DifficultyCategory.THREE_FEATURES,
)


# =============================================================================
# Diversity and feature maps
# =============================================================================


def population_diversity(pop: AgentPopulation | np.ndarray) -> float:
    """Mean L1 morphology distance over all ordered pairs of distinct individuals."""
    morphologies = pop.morphologies() if isinstance(pop, AgentPopulation) else np.asarray(pop)
    if len(morphologies) < 2:
        raise UndefinedDiversityError("Diversity needs at least two individuals")
    return float(pdist(morphologies, metric="cityblock").mean())


def feature_projection(morphology: np.ndarray) -> tuple[float, float]:
    """(total leg length, total leg width)."""
    m = np.asarray(morphology, dtype=np.float64)
    return float(m[list(HEIGHT_INDICES)].sum()), float(m[list(WIDTH_INDICES)].sum())


def _reachable_box() -> tuple[tuple[float, float], tuple[float, float]]:
    heights, widths = list(HEIGHT_INDICES), list(WIDTH_INDICES)
    return (
        (float(MORPHOLOGY_MIN[heights].sum()), float(MORPHOLOGY_MAX[heights].sum())),
        (float(MORPHOLOGY_MIN[widths].sum()), float(MORPHOLOGY_MAX[widths].sum())),
    )


@dataclass
class QdGrid:
    """Best fitness seen per (total length, total width) cell."""

    resolution: tuple[int, int] = (30, 30)
    length_range: tuple[float, float] = field(default_factory=lambda: _reachable_box()[0])
    width_range: tuple[float, float] = field(default_factory=lambda: _reachable_box()[1])
    cells: dict[tuple[int, int], float] = field(default_factory=dict)

    def cell_of(self, length: float, width: float) -> tuple[int, int]:
        def index(value: float, bounds: tuple[float, float], count: int) -> int:
            lo, hi = bounds
            return int(np.clip(np.floor((value - lo) / (hi - lo) * count), 0, count - 1))

        return (
            index(length, self.length_range, self.resolution[0]),
            index(width, self.width_range, self.resolution[1]),
        )

    def update(self, morphology: np.ndarray, fitness: float) -> bool:
        """Record an individual; returns True when its cell improved."""
        cell = self.cell_of(*feature_projection(morphology))
        if cell in self.cells and self.cells[cell] >= fitness:
            return False
        self.cells[cell] = float(fitness)
        return True

    def best(self) -> float | None:
        return max(self.cells.values()) if self.cells else None

    def coverage(self) -> float:
        return len(self.cells) / (self.resolution[0] * self.resolution[1])

    def as_array(self) -> np.ndarray:
        grid = np.full(self.resolution, np.nan)
        for (i, j), value in self.cells.items():
            grid[i, j] = value
        return grid


# =============================================================================
# Test suites
# =============================================================================


def difficulty_category(env: EnvParams) -> DifficultyCategory:
    """Classify by how many of roughness, pits and stumps exceed their threshold.

    Range features are judged by their high endpoint.
    """
    if env.stair_steps != 0 or env.stair_height != (0.0, 0.0):
        raise UnsupportedEnvironmentError(f"Suite environments have no stairs: {env.label()}")
    if env.is_flat:
        return DifficultyCategory.FLAT
    hard = sum(
        (
            env.roughness > ROUGHNESS_THRESHOLD,
            env.pit_gap[1] > PIT_THRESHOLD,
            env.stump_height[1] > STUMP_THRESHOLD,
        )
    )
    return _BY_HARD_COUNT[hard]


def _suite_env(rng: np.random.Generator, hard: set[TerrainFeature]) -> EnvParams:
    values: dict[TerrainFeature, float] = {}
    for feature in _SUITE_FEATURES:
        threshold, maximum = _THRESHOLDS[feature]
        values[feature] = (
            float(rng.uniform(threshold, maximum)) if feature in hard else float(rng.uniform(0.0, threshold))
        )
    pit_high = values[TerrainFeature.PIT]
    stump_high = values[TerrainFeature.STUMP]
    return EnvParams(
        roughness=values[TerrainFeature.ROUGHNESS],
        pit_gap=(float(rng.uniform(0.0, pit_high)), pit_high),
        stump_height=(float(rng.uniform(0.0, stump_high)), stump_high),
    )


@dataclass(frozen=True)
class SuiteEnv:
    category: DifficultyCategory
    env: EnvParams


def generate_robustness_suite(rng: np.random.Generator, per_category: int = 10) -> list[SuiteEnv]:
    """``per_category`` environments for each difficulty category, in category order.

    Hard features are a uniformly chosen subset of the right size; every
    sample is re-classified and redrawn until it lands in its category.
    """
    suite: list[SuiteEnv] = []
    for category in DifficultyCategory:
        for _ in range(per_category):
            if category == DifficultyCategory.FLAT:
                suite.append(SuiteEnv(category, EnvParams()))
                continue
            hard_count = _BY_HARD_COUNT.index(category)
            while True:
                picks = rng.choice(len(_SUITE_FEATURES), size=hard_count, replace=False)
                env = _suite_env(rng, {_SUITE_FEATURES[int(i)] for i in picks})
                if difficulty_category(env) == category:
                    break
            suite.append(SuiteEnv(category, env))
    return suite


def local_mutation(env: EnvParams, rng: np.random.Generator) -> EnvParams:
    """Make one uniformly chosen feature harder, clamped to the parameter table."""
    vec = env.to_vector()
    choice = int(rng.integers(4))
    if choice == 0:
        vec[0] += LOCAL_ROUGHNESS_OFFSET
    elif choice == 1:
        vec[1:3] += LOCAL_FEATURE_OFFSET
    elif choice == 2:
        vec[3:5] += LOCAL_FEATURE_OFFSET
    else:
        vec[5:7] += LOCAL_FEATURE_OFFSET
        vec[7] += 1
    return EnvParams.from_vector(np.minimum(vec, ENV_VECTOR_MAX))


def local_generalisation_suite(env: EnvParams, rng: np.random.Generator, n_mutations: int) -> EnvParams:
    """``env`` made harder by ``n_mutations`` successive local mutations."""
    if n_mutations < 0:
        raise ValueError("n_mutations must be non-negative")
    for _ in range(n_mutations):
        env = local_mutation(env, rng)
    return env
