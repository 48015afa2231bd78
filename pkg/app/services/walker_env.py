"""The bipedal walker task.

Builds a walker from a morphology, simulates episodes on generated terrain,
and turns episodes into fitness. Constants follow the reference walker
environment so that reward magnitudes line up with the POET thresholds.
"""

import math
from collections.abc import Sequence
from enum import Enum
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np
from pydantic import BaseModel, ConfigDict

from app.core.exceptions import ArtifactIOError, InvalidMorphologyError
from app.core.logging import get_logger
from app.schemas.environment import EnvParams
from app.schemas.experiment import PhysicsConfig, WalkerConfig
from app.schemas.morphology import (
    BASELINE_MORPHOLOGY,
    MORPHOLOGY_MAX,
    MORPHOLOGY_MIN,
    morphology_in_bounds,
)
from app.services.genome import Genotype, forward
from app.services.physics2d import Body, RevoluteJoint, World, raycast, step_world
from app.services.terrain import Terrain, generate_terrain

if TYPE_CHECKING:
    from app.services.evaluation import EvaluationCounter

logger = get_logger(__name__)

OBSERVATION_SIZE = 24
ACTION_SIZE = 4
WALKER_GROUP = 1

_HULL_OUTLINE = ((-30.0, 9.0), (6.0, 9.0), (34.0, 1.0), (34.0, -8.0), (-30.0, -8.0))
_LEG_DOWN_UNITS = -8.0
_SPAWN_CLEARANCE = 0.1

__all__ = [
    "BASELINE_MORPHOLOGY",
    "MORPHOLOGY_MAX",
    "MORPHOLOGY_MIN",
    "EpisodeResult",
    "Termination",
    "TrajectoryStep",
    "Walker",
    "build_walker",
    "evaluate",
    "generate_terrain",
    "mean_episode_reward",
    "observe",
    "run_episode",
    "write_trajectory",
]


class Termination(str, Enum):
    """Why an episode ended."""

    HEAD_CONTACT = "head_contact"
    REACHED_FLAG = "reached_flag"
    STEP_CAP = "step_cap"


class EpisodeResult(BaseModel):
    """Outcome of one simulated episode."""

    model_config = ConfigDict(frozen=True)

    total_reward: float
    steps: int
    termination: Termination
    hull_displacement: float


class TrajectoryStep(BaseModel):
    """One simulated step, as exported for replay."""

    step: int
    hull_x: float
    hull_y: float
    hull_angle: float
    joint_angles: list[float]
    action: list[float]
    reward: float


class Walker:
    """Hull, four leg segments and the hip/knee joints that connect them.

    Segments and joints follow action order: left hip, left knee, right hip,
    right knee.
    """

    def __init__(self, hull: Body, segments: list[Body], joints: list[RevoluteJoint]) -> None:
        self.hull = hull
        self.segments = segments
        self.joints = joints

    @property
    def bodies(self) -> list[Body]:
        return [self.hull, *self.segments]

    @property
    def feet(self) -> tuple[Body, Body]:
        return self.segments[1], self.segments[3]


# =============================================================================
# Construction
# =============================================================================


def _box(width: float, height: float) -> list[tuple[float, float]]:
    hw, hh = width / 2.0, height / 2.0
    return [(-hw, -hh), (hw, -hh), (hw, hh), (-hw, hh)]


def build_walker(
    world: World,
    morphology: np.ndarray | Sequence[float],
    config: WalkerConfig | None = None,
    position: tuple[float, float] | None = None,
) -> Walker:
    """Add a walker shaped by ``morphology`` to ``world``.

    ``position`` is the hull origin; by default the walker stands over the
    start pad with its longest leg just clear of flat ground.
    """
    config = config or WalkerConfig()
    morph = np.asarray(morphology, dtype=np.float64)
    if not morphology_in_bounds(morph):
        raise InvalidMorphologyError(f"Morphology outside segment bounds: {morph.tolist()}")

    scale = config.scale
    leg_down = _LEG_DOWN_UNITS / scale
    if position is None:
        longest = max(morph[1] + morph[3], morph[5] + morph[7])
        hip_y = config.terrain_height + _SPAWN_CLEARANCE + longest
        position = (config.terrain_startpad * config.terrain_step / 2.0, hip_y - leg_down)
    x0, y0 = position
    hip_y = y0 + leg_down

    hull = world.add_body(
        Body(
            [(x / scale, y / scale) for x, y in _HULL_OUTLINE],
            position=(x0, y0),
            density=config.hull_density,
            friction=config.hull_friction,
            collision_group=WALKER_GROUP,
            label="hull",
        )
    )

    segments: list[Body] = []
    joints: list[RevoluteJoint] = []
    for side in ("left", "right"):
        offset = 0 if side == "left" else 4
        upper_w, upper_h, lower_w, lower_h = morph[offset : offset + 4]
        upper = world.add_body(
            Body(
                _box(upper_w, upper_h),
                position=(x0, hip_y - upper_h / 2.0),
                density=config.leg_density,
                friction=config.leg_friction,
                collision_group=WALKER_GROUP,
                label=f"{side}_upper",
            )
        )
        lower = world.add_body(
            Body(
                _box(lower_w, lower_h),
                position=(x0, hip_y - upper_h - lower_h / 2.0),
                density=config.leg_density,
                friction=config.leg_friction,
                collision_group=WALKER_GROUP,
                label=f"{side}_lower",
            )
        )
        hip = world.add_joint(
            RevoluteJoint(
                hull,
                upper,
                (x0, hip_y),
                motor_enabled=True,
                max_motor_torque=config.motors_torque,
                limits_enabled=True,
                lower_limit=config.hip_limits[0],
                upper_limit=config.hip_limits[1],
            )
        )
        knee = world.add_joint(
            RevoluteJoint(
                upper,
                lower,
                (x0, hip_y - upper_h),
                motor_enabled=True,
                max_motor_torque=config.motors_torque,
                limits_enabled=True,
                lower_limit=config.knee_limits[0],
                upper_limit=config.knee_limits[1],
            )
        )
        segments += [upper, lower]
        joints += [hip, knee]

    return Walker(hull, segments, joints)


def build_world(
    terrain: Terrain, physics: PhysicsConfig | None = None
) -> World:
    """World holding the terrain polyline and its static stumps."""
    world = World(physics)
    world.set_terrain(terrain.points)
    for outline in terrain.stumps:
        world.add_body(
            Body(outline, is_static=True, friction=world.config.terrain_friction, label="stump")
        )
    return world


# =============================================================================
# Sensing and actuation
# =============================================================================


def observe(world: World, walker: Walker, config: WalkerConfig | None = None) -> np.ndarray:
    """24-value observation: hull state, per-leg joint state and contact, lidar."""
    config = config or WalkerConfig()
    hull = walker.hull
    fps = config.fps
    state = [
        hull.angle,
        2.0 * hull.omega / fps,
        0.3 * hull.vx * (config.viewport_w / config.scale) / fps,
        0.3 * hull.vy * (config.viewport_h / config.scale) / fps,
    ]
    for leg in (0, 1):
        hip, knee = walker.joints[2 * leg], walker.joints[2 * leg + 1]
        foot = walker.segments[2 * leg + 1]
        state += [
            hip.joint_angle,
            hip.joint_speed / config.speed_hip,
            knee.joint_angle + 1.0,
            knee.joint_speed / config.speed_knee,
            1.0 if world.in_contact(foot) else 0.0,
        ]
    for i in range(config.lidar_rays):
        angle = config.lidar_fan * i / config.lidar_rays
        state.append(
            raycast(
                world,
                hull.position,
                (math.sin(angle), -math.cos(angle)),
                config.lidar_range,
                collision_group=WALKER_GROUP,
            )
        )
    return np.array(state, dtype=np.float64)


def apply_action(walker: Walker, action: np.ndarray, config: WalkerConfig | None = None) -> None:
    """Drive each joint motor toward the signed speed with torque scaled by |action|."""
    config = config or WalkerConfig()
    for i, joint in enumerate(walker.joints):
        speed = config.speed_hip if i % 2 == 0 else config.speed_knee
        joint.motor_speed = float(speed * np.sign(action[i]))
        joint.max_motor_torque = float(config.motors_torque * np.clip(abs(action[i]), 0.0, 1.0))


def _shaping(walker: Walker, config: WalkerConfig) -> float:
    hull = walker.hull
    return config.forward_reward * hull.x / config.scale - config.angle_penalty * abs(hull.angle)


# =============================================================================
# Episodes and fitness
# =============================================================================


def run_episode(
    genotype: Genotype,
    params: EnvParams,
    seed: int,
    walker_config: WalkerConfig | None = None,
    physics_config: PhysicsConfig | None = None,
    trace: list[TrajectoryStep] | None = None,
) -> EpisodeResult:
    """Simulate one episode; deterministic in ``(genotype, params, seed)``.

    Steps are appended to ``trace`` when one is given.
    """
    config = walker_config or WalkerConfig()
    terrain = generate_terrain(params, seed, config)
    world = build_world(terrain, physics_config)
    walker = build_walker(world, genotype.morphology, config)
    hull = walker.hull
    start_x = hull.x

    obs = observe(world, walker, config)
    prev_shaping = _shaping(walker, config)
    total = 0.0
    termination = Termination.STEP_CAP
    steps = 0

    for step in range(1, config.max_steps + 1):
        action = forward(genotype, obs)
        apply_action(walker, action, config)
        step_world(world)
        obs = observe(world, walker, config)
        steps = step

        shaping = _shaping(walker, config)
        reward = shaping - prev_shaping
        prev_shaping = shaping
        reward -= config.torque_cost * config.motors_torque * float(np.clip(np.abs(action), 0.0, 1.0).sum())

        done = False
        if world.in_contact(hull) or hull.x < 0.0:
            reward -= config.fall_penalty
            termination = Termination.HEAD_CONTACT
            done = True
        elif hull.x > terrain.flag_x:
            termination = Termination.REACHED_FLAG
            done = True
        total += reward

        if trace is not None:
            trace.append(
                TrajectoryStep(
                    step=step,
                    hull_x=hull.x,
                    hull_y=hull.y,
                    hull_angle=hull.angle,
                    joint_angles=[j.joint_angle for j in walker.joints],
                    action=[float(a) for a in action],
                    reward=reward,
                )
            )
        if done:
            break

    return EpisodeResult(
        total_reward=total,
        steps=steps,
        termination=termination,
        hull_displacement=hull.x - start_x,
    )


def episode_seeds(base_seed: int, episodes: int) -> list[int]:
    return [(base_seed + k) % 2**64 for k in range(episodes)]


def mean_episode_reward(
    genotype: Genotype,
    params: EnvParams,
    base_seed: int,
    walker_config: WalkerConfig | None = None,
    physics_config: PhysicsConfig | None = None,
    episodes: int = 4,
) -> float:
    """Mean total reward over ``episodes`` episodes seeded base_seed + 0, 1, ..."""
    rewards = [
        run_episode(genotype, params, seed, walker_config, physics_config).total_reward
        for seed in episode_seeds(base_seed, episodes)
    ]
    return float(np.mean(rewards))


def evaluate(
    genotype: Genotype,
    params: EnvParams,
    base_seed: int,
    counter: "EvaluationCounter",
    walker_config: WalkerConfig | None = None,
    physics_config: PhysicsConfig | None = None,
    episodes: int = 4,
) -> float:
    """One budgeted evaluation: the mean reward of four episodes."""
    counter.reserve(1)
    return mean_episode_reward(genotype, params, base_seed, walker_config, physics_config, episodes)


def write_trajectory(steps: Sequence[TrajectoryStep], path: Path) -> None:
    """Export a trace as JSON lines."""
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as handle:
            for record in steps:
                handle.write(record.model_dump_json() + "\n")
    except OSError as e:
        raise ArtifactIOError(f"Failed to write trajectory {path}: {e}") from e
    logger.debug("walker.trajectory_written", path=str(path), steps=len(steps))
