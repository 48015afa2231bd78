"""Experiment configuration schemas.

Every constant that influences a result lives in one of these records and is
serialised into each run artifact.
"""

import hashlib
import json
import math
from enum import Enum
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, model_validator

# =============================================================================
# Enums
# =============================================================================


class Condition(str, Enum):
    """Experimental conditions."""

    STATIC = "static"
    RRI = "rri"
    POET = "poet"


class Scale(str, Enum):
    """Preset experiment scales."""

    FULL = "full"
    DESK = "desk"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


# =============================================================================
# Module configs
# =============================================================================


class PhysicsConfig(_Section):
    """Rigid-body engine constants."""

    gravity: tuple[float, float] = (0.0, -10.0)
    dt: float = Field(default=1.0 / 50.0, gt=0)
    velocity_iterations: int = Field(default=8, ge=1)
    position_iterations: int = Field(default=3, ge=0)
    linear_slop: float = Field(default=0.005, ge=0)
    baumgarte: float = Field(default=0.2, gt=0, le=1)
    max_linear_correction: float = Field(default=0.2, gt=0)
    angular_slop: float = Field(default=2.0 / 180.0 * math.pi, ge=0)
    max_angular_correction: float = Field(default=8.0 / 180.0 * math.pi, gt=0)
    speculative_distance: float = Field(default=0.02, ge=0)
    max_translation: float = Field(default=2.0, gt=0)
    max_rotation: float = Field(default=0.5 * math.pi, gt=0)
    terrain_friction: float = Field(default=2.5, ge=0)


class WalkerConfig(_Section):
    """Bipedal walker task constants (lengths in engine units unless noted)."""

    scale: float = 30.0
    viewport_w: float = 600.0
    viewport_h: float = 400.0
    terrain_step_units: float = 14.0
    terrain_length: int = Field(default=200, ge=40)
    terrain_startpad: int = Field(default=20, ge=1)
    feature_interval: int = Field(default=10, ge=2)
    pit_depth_steps: float = 4.0
    stair_width_steps: int = 4
    stump_width_steps: float = 1.0
    motors_torque: float = 80.0
    speed_hip: float = 4.0
    speed_knee: float = 6.0
    lidar_rays: int = 10
    lidar_fan: float = 1.5
    lidar_range_units: float = 160.0
    max_steps: int = Field(default=1000, ge=1)
    forward_reward: float = 130.0
    angle_penalty: float = 5.0
    torque_cost: float = 0.00035
    fall_penalty: float = 100.0
    hull_density: float = 5.0
    leg_density: float = 1.0
    hull_friction: float = 0.1
    leg_friction: float = 0.2
    hip_limits: tuple[float, float] = (-0.8, 1.1)
    knee_limits: tuple[float, float] = (-1.6, -0.1)

    @property
    def terrain_step(self) -> float:
        return self.terrain_step_units / self.scale

    @property
    def terrain_height(self) -> float:
        return self.viewport_h / self.scale / 4.0

    @property
    def lidar_range(self) -> float:
        return self.lidar_range_units / self.scale

    @property
    def fps(self) -> float:
        return 50.0


class GenomeConfig(_Section):
    """Genotype operator constants."""

    init_weight_range: float = Field(default=1.0, gt=0)
    weight_bound: float = Field(default=30.0, gt=0)
    replacement_rate: float = Field(default=0.0075, ge=0, le=1)
    modification_rate: float = Field(default=0.075, ge=0, le=1)
    weight_step: float = Field(default=0.2, ge=0)
    morphology_step_fraction: float = Field(default=0.16, ge=0)
    crossover_enabled: bool = True


class GAConfig(_Section):
    """Inner genetic algorithm parameters."""

    population_size: int = Field(default=192, ge=2)
    tournament_size: int = Field(default=5, ge=1)
    pairs_per_generation: int = Field(default=96, ge=1)
    episodes_per_eval: int = Field(default=4, ge=1)

    @model_validator(mode="after")
    def check_pairing(self) -> "GAConfig":
        if self.population_size != 2 * self.pairs_per_generation:
            raise ValueError("population_size must equal 2 * pairs_per_generation")
        return self


class PoetConfig(_Section):
    """Outer open-ended loop parameters."""

    pair_capacity: int = Field(default=20, gt=0)
    transfer_every: int = Field(default=5, gt=0)
    create_env_every: int = Field(default=40, gt=0)
    reproduction_criterion: float = Field(default=200.0, gt=0)
    difficulty_criterion: tuple[float, float] = (50.0, 300.0)
    children_created: int = Field(default=20, gt=0)
    children_admitted: int = Field(default=2, gt=0)
    novelty_k: int = Field(default=5, gt=0)

    @model_validator(mode="after")
    def check_difficulty(self) -> "PoetConfig":
        low, high = self.difficulty_criterion
        if not 0 < low < high:
            raise ValueError("difficulty_criterion must satisfy 0 < low < high")
        return self


class CurriculumConfig(_Section):
    """Round Robin Incremental curriculum parameters."""

    generations_per_env: int = Field(default=5, gt=0)
    escalation_threshold: float = 150.0
    initial_roughness: float = Field(default=0.6, ge=0)
    initial_pit_gap: float = Field(default=0.4, ge=0)
    initial_stump_height: float = Field(default=0.2, ge=0)
    initial_stair_height: float = Field(default=0.2, ge=0)
    initial_stair_steps: int = Field(default=1, ge=0)
    roughness_step: float = Field(default=0.6, ge=0)
    pit_gap_step: float = Field(default=0.4, ge=0)
    stump_height_step: float = Field(default=0.2, ge=0)
    stair_height_step: float = Field(default=0.2, ge=0)
    stair_steps_every: int = Field(default=2, gt=0)


class AnalysisConfig(_Section):
    """Measurement parameters."""

    qd_resolution: tuple[int, int] = (30, 30)
    snapshot_every: int = Field(default=40, gt=0)
    suite_per_category: int = Field(default=10, gt=0)
    local_mutation_counts: tuple[int, ...] = (0, 1, 2, 4, 8)
    local_envs_per_class: int = Field(default=5, gt=0)
    suite_seed: int = 0


# =============================================================================
# Experiment
# =============================================================================

_RESULT_NEUTRAL_FIELDS = {"evaluation_budget", "worker_count", "output_dir"}
_COMPARABILITY_FIELDS = ("physics", "walker", "genome", "ga")


class ExperimentConfig(BaseModel):
    """Full description of one run."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    condition: Condition = Condition.POET
    master_seed: int = Field(default=0, ge=0, lt=2**64)
    evaluation_budget: int = Field(default=384000, gt=0)
    worker_count: int = Field(default=1, ge=1)
    output_dir: str = "runs/run"
    checkpoint_every: int = Field(default=10, gt=0)
    log_individuals: bool = True

    physics: PhysicsConfig = PhysicsConfig()
    walker: WalkerConfig = WalkerConfig()
    genome: GenomeConfig = GenomeConfig()
    ga: GAConfig = GAConfig()
    poet: PoetConfig = PoetConfig()
    curricula: CurriculumConfig = CurriculumConfig()
    analysis: AnalysisConfig = AnalysisConfig()

    @classmethod
    def for_scale(cls, scale: Scale, **overrides: Any) -> "ExperimentConfig":
        """Build a preset; ``overrides`` replace top-level fields."""
        data: dict[str, Any] = {}
        if scale == Scale.DESK:
            data["evaluation_budget"] = 48000
            data["poet"] = PoetConfig(pair_capacity=5, create_env_every=20)
        data.update(overrides)
        return cls(**data)

    def _digest(self, payload: dict[str, Any]) -> str:
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def config_hash(self) -> str:
        """Hash over every field that influences results."""
        payload = self.model_dump(mode="json", exclude=_RESULT_NEUTRAL_FIELDS)
        return self._digest(payload)

    def comparability_hash(self) -> str:
        """Hash over the sections that must match for runs to be pooled."""
        payload = self.model_dump(mode="json", include=set(_COMPARABILITY_FIELDS))
        return self._digest(payload)
