"""Pydantic schemas for configuration, environments and run artifacts."""

from app.schemas.environment import FLAT_ENV, EnvParams, TerrainFeature
from app.schemas.experiment import (
    AnalysisConfig,
    Condition,
    CurriculumConfig,
    ExperimentConfig,
    GAConfig,
    GenomeConfig,
    PhysicsConfig,
    PoetConfig,
    Scale,
    WalkerConfig,
)

__all__ = [
    "FLAT_ENV",
    "EnvParams",
    "TerrainFeature",
    "Condition",
    "Scale",
    "ExperimentConfig",
    "PhysicsConfig",
    "WalkerConfig",
    "GenomeConfig",
    "GAConfig",
    "PoetConfig",
    "CurriculumConfig",
    "AnalysisConfig",
]
