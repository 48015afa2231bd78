"""Environment descriptor schemas and the terrain parameter table."""

from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

# =============================================================================
# Parameter table: (minimum, mutation magnitude, maximum)
# =============================================================================

ROUGHNESS_MIN, ROUGHNESS_MAX = 0.0, 10.0
PIT_GAP_MIN, PIT_GAP_MAX = 0.0, 10.0
STUMP_HEIGHT_MIN, STUMP_HEIGHT_MAX = 0.0, 5.0
STAIR_HEIGHT_MIN, STAIR_HEIGHT_MAX = 0.0, 5.0
STAIR_STEPS_MIN, STAIR_STEPS_MAX = 0, 9

# Roughness mutates by uniform(0, ROUGHNESS_MUTATION); the rest by +/- magnitude
ROUGHNESS_MUTATION = 0.6
PIT_GAP_MUTATION = 0.4
STUMP_HEIGHT_MUTATION = 0.2
STAIR_HEIGHT_MUTATION = 0.2
STAIR_STEPS_MUTATION = 1

ENV_VECTOR_LENGTH = 8
ENV_VECTOR_MIN = np.array(
    [ROUGHNESS_MIN, PIT_GAP_MIN, PIT_GAP_MIN, STUMP_HEIGHT_MIN, STUMP_HEIGHT_MIN,
     STAIR_HEIGHT_MIN, STAIR_HEIGHT_MIN, STAIR_STEPS_MIN],
    dtype=np.float64,
)
ENV_VECTOR_MAX = np.array(
    [ROUGHNESS_MAX, PIT_GAP_MAX, PIT_GAP_MAX, STUMP_HEIGHT_MAX, STUMP_HEIGHT_MAX,
     STAIR_HEIGHT_MAX, STAIR_HEIGHT_MAX, STAIR_STEPS_MAX],
    dtype=np.float64,
)


class TerrainFeature(str, Enum):
    """Terrain features an environment can contain."""

    ROUGHNESS = "roughness"
    PIT = "pit"
    STUMP = "stump"
    STAIRS = "stairs"


Range = tuple[float, float]


class EnvParams(BaseModel):
    """Eight-value terrain descriptor; the unit of environment evolution."""

    model_config = ConfigDict(frozen=True)

    roughness: float = Field(default=0.0, ge=ROUGHNESS_MIN, le=ROUGHNESS_MAX)
    pit_gap: Range = (0.0, 0.0)
    stump_height: Range = (0.0, 0.0)
    stair_height: Range = (0.0, 0.0)
    stair_steps: int = Field(default=0, ge=STAIR_STEPS_MIN, le=STAIR_STEPS_MAX)

    @model_validator(mode="after")
    def check_ranges(self) -> "EnvParams":
        limits = {
            "pit_gap": (PIT_GAP_MIN, PIT_GAP_MAX),
            "stump_height": (STUMP_HEIGHT_MIN, STUMP_HEIGHT_MAX),
            "stair_height": (STAIR_HEIGHT_MIN, STAIR_HEIGHT_MAX),
        }
        for name, (lo, hi) in limits.items():
            low, high = getattr(self, name)
            if low > high:
                raise ValueError(f"{name}: low {low} exceeds high {high}")
            if low < lo or high > hi:
                raise ValueError(f"{name}: ({low}, {high}) outside [{lo}, {hi}]")
        return self

    # -------------------------------------------------------------------------
    # Vector form
    # -------------------------------------------------------------------------

    def to_vector(self) -> np.ndarray:
        """Encode as (roughness, pit lo/hi, stump lo/hi, stair lo/hi, stair_steps)."""
        return np.array(
            [
                self.roughness,
                *self.pit_gap,
                *self.stump_height,
                *self.stair_height,
                float(self.stair_steps),
            ],
            dtype=np.float64,
        )

    @classmethod
    def from_vector(cls, values: "np.ndarray | list[float] | tuple[float, ...]") -> "EnvParams":
        vec = [float(v) for v in values]
        if len(vec) != ENV_VECTOR_LENGTH:
            raise ValueError(f"Environment vector needs {ENV_VECTOR_LENGTH} values, got {len(vec)}")
        return cls(
            roughness=vec[0],
            pit_gap=(vec[1], vec[2]),
            stump_height=(vec[3], vec[4]),
            stair_height=(vec[5], vec[6]),
            stair_steps=int(round(vec[7])),
        )

    # -------------------------------------------------------------------------
    # Feature queries
    # -------------------------------------------------------------------------

    @property
    def is_flat(self) -> bool:
        return not np.any(self.to_vector())

    def site_features(self) -> list[TerrainFeature]:
        """Features that can occupy a terrain site (roughness is not one)."""
        active: list[TerrainFeature] = []
        if self.pit_gap[1] > 0:
            active.append(TerrainFeature.PIT)
        if self.stump_height[1] > 0:
            active.append(TerrainFeature.STUMP)
        if self.stair_height[1] > 0 and self.stair_steps > 0:
            active.append(TerrainFeature.STAIRS)
        return active

    def label(self) -> str:
        return ",".join(f"{v:g}" for v in self.to_vector())


FLAT_ENV = EnvParams()
