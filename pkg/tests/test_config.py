"""Tests for experiment configuration and loading."""

import pytest
from pydantic import ValidationError

from app.core.exceptions import ConfigError
from app.schemas.experiment import (
    Condition,
    ExperimentConfig,
    GAConfig,
    PoetConfig,
    Scale,
)
from app.services.config_loader import load_config


class TestHashes:
    """Tests for config and comparability hashes."""

    def test_ignores_result_neutral_fields(self):
        base = ExperimentConfig()
        other = ExperimentConfig(evaluation_budget=10, worker_count=4, output_dir="elsewhere")
        assert base.config_hash() == other.config_hash()

    def test_changes_with_seed(self):
        assert ExperimentConfig().config_hash() != ExperimentConfig(master_seed=1).config_hash()

    def test_comparability_ignores_condition_and_seed(self):
        a = ExperimentConfig(condition=Condition.STATIC, master_seed=1)
        b = ExperimentConfig(condition=Condition.POET, master_seed=2)
        assert a.comparability_hash() == b.comparability_hash()
        assert a.config_hash() != b.config_hash()

    def test_comparability_tracks_ga(self):
        a = ExperimentConfig()
        b = ExperimentConfig(ga=GAConfig(tournament_size=3))
        assert a.comparability_hash() != b.comparability_hash()

    def test_hash_is_hex_digest(self):
        digest = ExperimentConfig().config_hash()
        assert len(digest) == 64
        int(digest, 16)


class TestSections:
    """Validation of the config sections."""

    def test_defaults(self):
        config = ExperimentConfig()
        assert config.ga.population_size == 192
        assert config.ga.tournament_size == 5
        assert config.poet.pair_capacity == 20
        assert config.poet.difficulty_criterion == (50.0, 300.0)
        assert config.evaluation_budget == 384000

    def test_pairing_enforced(self):
        with pytest.raises(ValidationError):
            GAConfig(population_size=10, pairs_per_generation=4)

    def test_difficulty_band_ordered(self):
        with pytest.raises(ValidationError):
            PoetConfig(difficulty_criterion=(300.0, 50.0))

    def test_unknown_fields_rejected(self):
        with pytest.raises(ValidationError):
            ExperimentConfig(populaton_size=3)

    def test_frozen(self):
        config = ExperimentConfig()
        with pytest.raises(ValidationError):
            config.master_seed = 5

    def test_desk_preset(self):
        config = ExperimentConfig.for_scale(Scale.DESK)
        assert config.evaluation_budget == 48000
        assert config.poet.pair_capacity == 5
        assert config.poet.create_env_every == 20
        assert config.ga == GAConfig()


class TestLoadConfig:
    """Tests for preset, file and override merging."""

    def test_no_file_gives_defaults(self):
        assert load_config() == ExperimentConfig()

    def test_file_merges_into_preset(self, tmp_path):
        path = tmp_path / "desk.toml"
        path.write_text(
            'scale = "desk"\nmaster_seed = 3\n\n[poet]\nnovelty_k = 3\n', encoding="utf-8"
        )
        config = load_config(path)
        assert config.master_seed == 3
        assert config.poet.novelty_k == 3
        assert config.poet.pair_capacity == 5
        assert config.evaluation_budget == 48000

    def test_scale_argument_wins(self, tmp_path):
        path = tmp_path / "c.toml"
        path.write_text('scale = "desk"\n', encoding="utf-8")
        assert load_config(path, scale=Scale.FULL).poet.pair_capacity == 20

    def test_overrides_apply_last(self, tmp_path):
        path = tmp_path / "c.toml"
        path.write_text("master_seed = 3\nevaluation_budget = 500\n", encoding="utf-8")
        config = load_config(path, overrides={"master_seed": 9, "evaluation_budget": None})
        assert config.master_seed == 9
        assert config.evaluation_budget == 500

    def test_override_condition_string(self):
        assert load_config(overrides={"condition": "rri"}).condition == Condition.RRI

    def test_malformed_toml(self, tmp_path):
        path = tmp_path / "bad.toml"
        path.write_text("master_seed = = 3\n", encoding="utf-8")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "absent.toml")

    @pytest.mark.parametrize(
        "text",
        [
            "evaluation_budget = 0\n",
            "[ga]\npopulation_size = 10\n",
            "[walker]\nunknown = 1\n",
            'scale = "huge"\n',
        ],
    )
    def test_invalid_values(self, tmp_path, text):
        path = tmp_path / "bad.toml"
        path.write_text(text, encoding="utf-8")
        with pytest.raises(ConfigError) as exc:
            load_config(path)
        assert exc.value.exit_code == 2

    def test_defaults_sit_below_the_file(self, tmp_path):
        path = tmp_path / "c.toml"
        path.write_text("worker_count = 3\n", encoding="utf-8")
        assert load_config(path, defaults={"worker_count": 5}).worker_count == 3
        assert load_config(defaults={"worker_count": 5}).worker_count == 5
        assert load_config(path, overrides={"worker_count": 2}, defaults={"worker_count": 5}).worker_count == 2
