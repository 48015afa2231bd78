"""Tests for terrain generation and walker episodes."""

import json

import numpy as np
import pytest

from app.core.exceptions import BudgetExhaustedError, InvalidMorphologyError
from app.schemas.environment import FLAT_ENV, EnvParams, TerrainFeature
from app.schemas.experiment import WalkerConfig
from app.schemas.morphology import BASELINE_MORPHOLOGY, MORPHOLOGY_MAX, MORPHOLOGY_MIN
from app.services.evaluation import EvaluationCounter
from app.services.genome import zero_controller
from app.services.physics2d import World, step_world
from app.services.terrain import generate_terrain
from app.services.walker_env import (
    OBSERVATION_SIZE,
    Termination,
    TrajectoryStep,
    apply_action,
    build_walker,
    build_world,
    episode_seeds,
    evaluate,
    mean_episode_reward,
    observe,
    run_episode,
    write_trajectory,
)

# =============================================================================
# Terrain
# =============================================================================


class TestGenerateTerrain:
    """Tests for course layout."""

    def test_flat_params_give_flat_course(self):
        terrain = generate_terrain(FLAT_ENV, seed=5)
        assert np.ptp(terrain.heights()) == 0.0
        assert terrain.features == []
        assert terrain.stumps == []

    def test_deterministic_in_seed(self):
        params = EnvParams(roughness=2.0, pit_gap=(0.5, 3.0), stump_height=(0.2, 1.0))
        assert generate_terrain(params, 9) == generate_terrain(params, 9)
        assert generate_terrain(params, 9) != generate_terrain(params, 10)

    def test_degenerate_pit_range(self):
        """A (2, 2) pit range makes every pit exactly two steps wide."""
        config = WalkerConfig()
        terrain = generate_terrain(EnvParams(pit_gap=(2.0, 2.0)), seed=1, config=config)
        pits = terrain.features_of(TerrainFeature.PIT)

        assert pits
        assert all(p.magnitude == 2.0 for p in pits)
        for pit in pits:
            edges = [x for x, _ in terrain.points if pit.x - 1e-9 <= x <= pit.x + 2.0 * config.terrain_step + 1e-9]
            assert max(edges) - min(edges) == pytest.approx(2.0 * config.terrain_step)

    def test_magnitudes_within_range(self):
        params = EnvParams(stump_height=(0.4, 1.2), stair_height=(0.2, 0.6), stair_steps=2)
        terrain = generate_terrain(params, seed=4)
        for feature in terrain.features:
            low, high = params.stump_height if feature.feature == TerrainFeature.STUMP else params.stair_height
            assert low <= feature.magnitude <= high
        assert len(terrain.stumps) == len(terrain.features_of(TerrainFeature.STUMP))

    def test_stairs_alternate_direction(self):
        terrain = generate_terrain(EnvParams(stair_height=(0.5, 0.5), stair_steps=2), seed=2)
        directions = [f.direction for f in terrain.features_of(TerrainFeature.STAIRS)]
        assert len(directions) >= 2
        assert all(a == -b for a, b in zip(directions, directions[1:], strict=False))

    def test_start_pad_is_flat(self):
        config = WalkerConfig()
        terrain = generate_terrain(EnvParams(roughness=8.0), seed=3, config=config)
        pad_end = config.terrain_startpad * config.terrain_step
        assert all(y == terrain.base_height for x, y in terrain.points if x <= pad_end)

    def test_x_never_decreases(self):
        params = EnvParams(roughness=5.0, pit_gap=(1.0, 4.0), stump_height=(0.5, 2.0))
        xs = [x for x, _ in generate_terrain(params, seed=12).points]
        assert all(b >= a for a, b in zip(xs, xs[1:], strict=False))


# =============================================================================
# Walker
# =============================================================================


class TestWalker:
    """Tests for walker construction and sensing."""

    def _world(self) -> World:
        return build_world(generate_terrain(FLAT_ENV, 0))

    def test_observation_shape(self):
        world = self._world()
        walker = build_walker(world, BASELINE_MORPHOLOGY)
        obs = observe(world, walker)
        assert obs.shape == (OBSERVATION_SIZE,)
        assert np.all((obs[-10:] >= 0.0) & (obs[-10:] <= 1.0))

    def test_segment_sizes_follow_morphology(self):
        world = self._world()
        walker = build_walker(world, MORPHOLOGY_MAX)
        x0, y0, x1, y1 = walker.segments[0].bounds()
        assert x1 - x0 == pytest.approx(MORPHOLOGY_MAX[0])
        assert y1 - y0 == pytest.approx(MORPHOLOGY_MAX[1])

    def test_rejects_out_of_bounds_morphology(self):
        with pytest.raises(InvalidMorphologyError):
            build_walker(self._world(), MORPHOLOGY_MAX * 1.5)

    def test_minimal_morphology_runs_without_nan(self):
        world = self._world()
        walker = build_walker(world, MORPHOLOGY_MIN)
        action = np.array([1.0, -1.0, -1.0, 1.0])
        for step in range(1000):
            apply_action(walker, action if step % 40 < 20 else -action)
            step_world(world)
        assert np.all(np.isfinite(observe(world, walker)))


# =============================================================================
# Episodes
# =============================================================================


class TestRunEpisode:
    """Tests for simulated episodes."""

    def test_zero_controller_falls(self, baseline_genotype):
        """A controller that never acts lets the hull touch the ground."""
        result = run_episode(baseline_genotype, FLAT_ENV, seed=0)
        assert result.termination == Termination.HEAD_CONTACT
        assert result.total_reward < 0
        assert result.steps < 1000

    def test_zero_controller_mean_fitness_negative(self, baseline_genotype):
        assert mean_episode_reward(baseline_genotype, FLAT_ENV, base_seed=0) < 0

    def test_deterministic(self, baseline_genotype):
        params = EnvParams(roughness=1.0)
        assert run_episode(baseline_genotype, params, 4) == run_episode(baseline_genotype, params, 4)

    def test_step_cap(self, baseline_genotype):
        config = WalkerConfig(max_steps=5)
        result = run_episode(baseline_genotype, FLAT_ENV, 0, walker_config=config)
        assert result.steps == 5
        assert result.termination == Termination.STEP_CAP

    def test_trace_records_every_step(self, tmp_path):
        trace: list[TrajectoryStep] = []
        result = run_episode(zero_controller(BASELINE_MORPHOLOGY), FLAT_ENV, 0, trace=trace)
        assert len(trace) == result.steps
        assert sum(s.reward for s in trace) == pytest.approx(result.total_reward)

        path = tmp_path / "trajectory.jsonl"
        write_trajectory(trace, path)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert len(lines) == result.steps
        assert json.loads(lines[0])["step"] == 1

    def test_towed_traversal_reward_scale(self, monkeypatch, baseline_genotype):
        """A baseline walker carried over the flat course at 5 m/s on half torque earns a completion-scale reward."""

        def tow(world):
            for body in world.bodies:
                if not body.is_static:
                    body.x += 0.1
            world.step_count += 1
            return world

        monkeypatch.setattr("app.services.walker_env.step_world", tow)
        monkeypatch.setattr("app.services.walker_env.forward", lambda genotype, obs: np.full(4, 0.5))
        config = WalkerConfig()

        result = run_episode(baseline_genotype, FLAT_ENV, seed=0)

        assert result.termination == Termination.REACHED_FLAG
        torque = config.torque_cost * config.motors_torque * 2.0 * result.steps
        expected = config.forward_reward * result.hull_displacement / config.scale - torque
        assert result.total_reward == pytest.approx(expected)
        assert 200.0 < result.total_reward < 350.0

    def test_episode_seeds(self):
        assert episode_seeds(10, 4) == [10, 11, 12, 13]
        assert episode_seeds(2**64 - 1, 2) == [2**64 - 1, 0]

    def test_evaluate_charges_one_unit(self, baseline_genotype):
        config = WalkerConfig(max_steps=20)
        counter = EvaluationCounter(1)
        value = evaluate(baseline_genotype, FLAT_ENV, 3, counter, walker_config=config)

        assert counter.value == 1
        assert value == mean_episode_reward(baseline_genotype, FLAT_ENV, 3, walker_config=config)
        with pytest.raises(BudgetExhaustedError):
            evaluate(baseline_genotype, FLAT_ENV, 3, counter, walker_config=config)
        assert counter.value == 1
