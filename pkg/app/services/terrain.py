"""Terrain generation from environment descriptors."""

import numpy as np
from pydantic import BaseModel, ConfigDict

from app.schemas.environment import EnvParams, TerrainFeature
from app.schemas.experiment import WalkerConfig

Point = tuple[float, float]


class FeaturePlacement(BaseModel):
    """One feature laid down on the course."""

    model_config = ConfigDict(frozen=True)

    feature: TerrainFeature
    x: float
    magnitude: float
    steps: int = 0
    direction: int = 0


class Terrain(BaseModel):
    """Ground polyline, static stump outlines and feature log for one course."""

    model_config = ConfigDict(frozen=True)

    points: list[Point]
    stumps: list[list[Point]]
    features: list[FeaturePlacement]
    start_x: float
    flag_x: float
    base_height: float

    def heights(self) -> np.ndarray:
        return np.array([p[1] for p in self.points], dtype=np.float64)

    def features_of(self, feature: TerrainFeature) -> list[FeaturePlacement]:
        return [f for f in self.features if f.feature == feature]


def generate_terrain(params: EnvParams, seed: int, config: WalkerConfig | None = None) -> Terrain:
    """Lay out a course for ``params``; deterministic in ``(params, seed)``.

    A flat start pad comes first. Feature sites then recur every
    ``feature_interval`` steps; each site takes a feature chosen uniformly among
    the active ones, with its magnitude drawn uniformly from its range. Grass
    between sites drifts with an amplitude scaled by roughness.
    """
    config = config or WalkerConfig()
    rng = np.random.default_rng(seed)
    step = config.terrain_step
    base = config.terrain_height
    max_x = config.terrain_length * step
    flag_x = (config.terrain_length - config.feature_interval) * step
    site_spacing = config.feature_interval * step
    active = params.site_features()

    x = config.terrain_startpad * step
    y = base
    points: list[Point] = [(0.0, base), (x, base)]
    stumps: list[list[Point]] = []
    features: list[FeaturePlacement] = []
    next_site = x + site_spacing
    velocity = 0.0
    stairs_up = True

    while x < max_x:
        if active and x >= next_site:
            feature = active[int(rng.integers(len(active)))]
            if feature == TerrainFeature.PIT:
                gap = float(rng.uniform(*params.pit_gap))
                width = gap * step
                if x + width < flag_x:
                    features.append(FeaturePlacement(feature=feature, x=x, magnitude=gap))
                    if width > 1e-9:
                        bottom = y - config.pit_depth_steps * step
                        points += [(x, bottom), (x + width, bottom), (x + width, y)]
                        x += width
            elif feature == TerrainFeature.STUMP:
                height = float(rng.uniform(*params.stump_height))
                width = config.stump_width_steps * step
                if x + width < flag_x:
                    features.append(FeaturePlacement(feature=feature, x=x, magnitude=height))
                    if height * step > 1e-9:
                        top = y + height * step
                        stumps.append([(x, y), (x + width, y), (x + width, top), (x, top)])
                    x += width
                    points.append((x, y))
            else:
                height = float(rng.uniform(*params.stair_height))
                count = params.stair_steps
                width = config.stair_width_steps * step
                if x + count * width < flag_x:
                    direction = 1 if stairs_up else -1
                    stairs_up = not stairs_up
                    features.append(
                        FeaturePlacement(
                            feature=feature, x=x, magnitude=height, steps=count, direction=direction
                        )
                    )
                    for _ in range(count):
                        y += direction * height * step
                        points += [(x, y), (x + width, y)]
                        x += width
            next_site = x + site_spacing
            continue

        velocity = 0.8 * velocity + 0.01 * float(np.sign(base - y))
        velocity += float(rng.uniform(-params.roughness, params.roughness)) / config.scale
        y += velocity
        x += step
        points.append((x, y))

    return Terrain(
        points=_dedupe(points),
        stumps=stumps,
        features=features,
        start_x=config.terrain_startpad * step / 2.0,
        flag_x=flag_x,
        base_height=base,
    )


def _dedupe(points: list[Point]) -> list[Point]:
    out = [points[0]]
    for point in points[1:]:
        if point != out[-1]:
            out.append(point)
    return out
