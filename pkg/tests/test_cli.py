"""Tests for the command-line entry point."""

import io
import json
import sys
from functools import partial

import pytest
import structlog

from app.core.config import settings
from app.core.logging import configure_logging, get_logger
from app.main import main
from app.schemas.artifacts import RunStatus
from app.schemas.morphology import BASELINE_MORPHOLOGY
from app.services import experiment_runner
from app.services.checkpoint import CHECKPOINT_NAME
from app.services.genome import save_genotype, zero_controller
from app.services.run_log import RUN_LOG_NAME, read_run_log
from tests.scripted import morphology_fitness

SMALL_CONFIG = """\
checkpoint_every = 2

[ga]
population_size = 8
tournament_size = 3
pairs_per_generation = 4
"""


@pytest.fixture(autouse=True)
def restore_logging():
    """``main()`` reconfigures logging; put the defaults back afterwards."""
    yield
    structlog.reset_defaults()
    configure_logging()


@pytest.fixture
def scripted_cli(monkeypatch):
    """Route ``run`` and ``resume`` through the scripted fitness."""
    monkeypatch.setattr(
        "app.cli.run.run_experiment", partial(experiment_runner.run_experiment, fitness_fn=morphology_fitness)
    )
    monkeypatch.setattr("app.cli.run.resume", partial(experiment_runner.resume, fitness_fn=morphology_fitness))


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "small.toml"
    path.write_text(SMALL_CONFIG, encoding="utf-8")
    return path


def _stdout_json(capsys):
    return json.loads(capsys.readouterr().out)


class TestRun:
    """Tests for ``run`` and ``resume``."""

    def test_run_writes_log(self, scripted_cli, small_config, tmp_path, capsys):
        out = tmp_path / "static-run"
        code = main([
            "run", "--condition", "static", "--config", str(small_config),
            "--seed", "4", "--budget", "40", "--out", str(out),
        ])

        assert code == 0
        summary = _stdout_json(capsys)
        assert summary["status"] == "finished"
        assert summary["evaluations"] == 40
        header = read_run_log(out / RUN_LOG_NAME)[0]
        assert header.condition == "static"
        assert header.master_seed == 4

    def test_stop_then_resume(self, scripted_cli, small_config, tmp_path, capsys):
        out = tmp_path / "poet-run"
        main([
            "run", "--condition", "poet", "--config", str(small_config),
            "--budget", "120", "--out", str(out), "--stop-after", "3",
        ])
        assert _stdout_json(capsys)["status"] == "interrupted"

        code = main(["resume", "--checkpoint", str(out / CHECKPOINT_NAME)])

        assert code == 0
        assert _stdout_json(capsys)["status"] == "finished"

    @pytest.mark.parametrize(
        ("file_text", "flag", "expected"),
        [
            ("worker_count = 3\n", [], 3),
            ("worker_count = 3\n", ["--workers", "2"], 2),
            ("", [], None),
        ],
    )
    def test_worker_count_precedence(self, monkeypatch, tmp_path, file_text, flag, expected):
        seen = []

        def fake_run(config, stop_after=None):
            seen.append(config)
            return experiment_runner.RunSummary(tmp_path, RunStatus.FINISHED, 0, 0, None)

        monkeypatch.setattr("app.cli.run.run_experiment", fake_run)
        path = tmp_path / "workers.toml"
        path.write_text(file_text, encoding="utf-8")

        main(["run", "--condition", "static", "--config", str(path), "--out", str(tmp_path / "w"), *flag])

        assert seen[0].worker_count == (settings.default_workers if expected is None else expected)

    def test_bad_config_exits_2(self, tmp_path, capsys):
        path = tmp_path / "bad.toml"
        path.write_text("[ga]\npopulation_size = 9\n", encoding="utf-8")
        code = main(["run", "--condition", "static", "--config", str(path), "--out", str(tmp_path / "x")])
        assert code == 2
        assert "error:" in capsys.readouterr().err

    def test_missing_checkpoint_exits_3(self, tmp_path):
        assert main(["resume", "--checkpoint", str(tmp_path / CHECKPOINT_NAME)]) == 3

    def test_unknown_condition_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["run", "--condition", "sideways"])
        assert exc.value.code == 2


class TestReplay:
    """Tests for ``replay``."""

    @pytest.fixture
    def genotype_path(self, tmp_path):
        return save_genotype(zero_controller(BASELINE_MORPHOLOGY.copy()), tmp_path / "walker.bin")

    def test_writes_trace_and_summary(self, genotype_path, tmp_path, capsys):
        out = tmp_path / "replay"
        code = main([
            "replay", "--genotype", str(genotype_path), "--env", "0,0,0,0,0,0,0,0",
            "--seed", "3", "--out", str(out),
        ])

        assert code == 0
        printed = _stdout_json(capsys)
        summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
        lines = (out / "trajectory.jsonl").read_text(encoding="utf-8").splitlines()
        assert summary["steps"] == len(lines)
        assert printed["total_reward"] == pytest.approx(summary["total_reward"])

    def test_replay_is_reproducible(self, genotype_path, tmp_path, capsys):
        args = ["replay", "--genotype", str(genotype_path), "--env", "0,0.8,0.8,0,0,0,0,0", "--seed", "9"]
        main([*args, "--out", str(tmp_path / "a")])
        first = _stdout_json(capsys)["trace_sha256"]
        main([*args, "--out", str(tmp_path / "b")])
        assert _stdout_json(capsys)["trace_sha256"] == first

    def test_bad_env_vector_exits_2(self, genotype_path, tmp_path):
        code = main(["replay", "--genotype", str(genotype_path), "--env", "1,2", "--seed", "0", "--out", str(tmp_path)])
        assert code == 2

    def test_missing_genotype_exits_3(self, tmp_path):
        code = main([
            "replay", "--genotype", str(tmp_path / "none.bin"), "--env", "0,0,0,0,0,0,0,0",
            "--seed", "0", "--out", str(tmp_path),
        ])
        assert code == 3


class TestAnalyze:
    """Tests for ``analyze``."""

    def test_diversity_tables(self, scripted_cli, small_config, tmp_path, capsys):
        runs = []
        for condition in ("static", "rri"):
            out = tmp_path / condition
            main([
                "run", "--condition", condition, "--config", str(small_config),
                "--budget", "40", "--out", str(out),
            ])
            runs.append(str(out))
        capsys.readouterr()

        code = main(["analyze", "--runs", *runs, "--suite", "diversity", "--out", str(tmp_path / "report")])

        assert code == 0
        written = _stdout_json(capsys)
        assert str(tmp_path / "report" / "diversity.csv") in written


class TestLogging:
    """Tests for where log records go."""

    def test_follows_replaced_stderr(self, monkeypatch):
        configure_logging(json_logs=True)
        first, second = io.StringIO(), io.StringIO()

        monkeypatch.setattr(sys, "stderr", first)
        get_logger("tests.cli").info("cli.first")
        monkeypatch.setattr(sys, "stderr", second)
        first.close()
        get_logger("tests.cli").info("cli.second")

        assert json.loads(second.getvalue())["event"] == "cli.second"

