"""Handcrafted baseline curricula: Static and Round Robin Incremental."""

import dataclasses
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from app.schemas.environment import (
    ENV_VECTOR_MAX,
    ENV_VECTOR_MIN,
    FLAT_ENV,
    EnvParams,
    TerrainFeature,
)
from app.schemas.experiment import CurriculumConfig
from app.schemas.run_log import EscalationEvent
from app.services.ga import AgentPopulation

RRI_FEATURES: tuple[TerrainFeature | None, ...] = (
    None,
    TerrainFeature.PIT,
    TerrainFeature.ROUGHNESS,
    TerrainFeature.STUMP,
    TerrainFeature.STAIRS,
)


@dataclass(frozen=True)
class RriState:
    """Round robin position and the (escalating) environment of each slot."""

    envs: tuple[EnvParams, ...]
    cursor: int = 0
    generations_in_env: int = 0
    escalations: tuple[int, ...] = (0, 0, 0, 0, 0)

    def __post_init__(self) -> None:
        if len(self.envs) != len(RRI_FEATURES):
            raise ValueError(f"Round robin needs {len(RRI_FEATURES)} environments")
        if not 0 <= self.cursor < len(self.envs):
            raise ValueError(f"Cursor {self.cursor} out of range")


def static_env() -> EnvParams:
    """The single flat, featureless environment."""
    return FLAT_ENV


def rri_initial_state(config: CurriculumConfig | None = None) -> RriState:
    """Flat, pits, rough, stumps, stairs; each feature starts one step above zero."""
    config = config or CurriculumConfig()
    pit = config.initial_pit_gap
    stump = config.initial_stump_height
    stair = config.initial_stair_height
    envs = (
        FLAT_ENV,
        EnvParams(pit_gap=(pit, pit)),
        EnvParams(roughness=config.initial_roughness),
        EnvParams(stump_height=(stump, stump)),
        EnvParams(stair_height=(stair, stair), stair_steps=config.initial_stair_steps),
    )
    return RriState(envs=envs)


def rri_env_index(generation: int, config: CurriculumConfig | None = None) -> int:
    """Slot used to produce population ``generation`` (generation 0 is the initial one)."""
    config = config or CurriculumConfig()
    return (generation // config.generations_per_env) % len(RRI_FEATURES)


def rri_current_env(state: RriState) -> EnvParams:
    return state.envs[state.cursor]


def rri_advance(state: RriState, config: CurriculumConfig | None = None) -> RriState:
    """Count one generation in the current slot, moving on after a full stint."""
    config = config or CurriculumConfig()
    spent = state.generations_in_env + 1
    if spent < config.generations_per_env:
        return dataclasses.replace(state, generations_in_env=spent)
    return dataclasses.replace(
        state, cursor=(state.cursor + 1) % len(state.envs), generations_in_env=0
    )


def _escalated(env: EnvParams, feature: TerrainFeature, count: int, config: CurriculumConfig) -> EnvParams:
    vec = env.to_vector()
    if feature == TerrainFeature.ROUGHNESS:
        vec[0] += config.roughness_step
    elif feature == TerrainFeature.PIT:
        vec[1:3] += config.pit_gap_step
    elif feature == TerrainFeature.STUMP:
        vec[3:5] += config.stump_height_step
    else:
        vec[5:7] += config.stair_height_step
        if count % config.stair_steps_every == 0:
            vec[7] += 1
    return EnvParams.from_vector(np.clip(vec, ENV_VECTOR_MIN, ENV_VECTOR_MAX))


def rri_maybe_escalate(
    state: RriState,
    pop: AgentPopulation,
    config: CurriculumConfig | None = None,
    fitness: Sequence[float] | None = None,
) -> tuple[RriState, EscalationEvent | None]:
    """Raise the current slot's difficulty when an individual reaches the threshold.

    ``fitness`` holds the scores obtained in the current slot this generation;
    without it the population's stored fitness is used. The flat slot never
    escalates, and a slot already at its maxima is left alone.
    """
    config = config or CurriculumConfig()
    feature = RRI_FEATURES[state.cursor]
    if feature is None:
        return state, None
    best = float(np.max(fitness)) if fitness is not None and len(fitness) else float(pop.fitness().max())
    if best < config.escalation_threshold:
        return state, None

    count = state.escalations[state.cursor] + 1
    before = state.envs[state.cursor]
    after = _escalated(before, feature, count, config)
    if np.array_equal(after.to_vector(), before.to_vector()):
        return state, None

    envs = list(state.envs)
    envs[state.cursor] = after
    escalations = list(state.escalations)
    escalations[state.cursor] = count
    event = EscalationEvent(
        generation=pop.generation,
        env_index=state.cursor,
        before=before.to_vector().tolist(),
        after=after.to_vector().tolist(),
        best_fitness=best,
    )
    return dataclasses.replace(state, envs=tuple(envs), escalations=tuple(escalations)), event
