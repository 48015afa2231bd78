"""The ``analyze`` command: CSV tables (and optional SVG renderings) from run
directories."""

import csv
import itertools
from collections import defaultdict
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np

from app.core.exceptions import ArtifactIOError, SchemaMismatchError
from app.core.logging import get_logger
from app.core.seeding import Stream, derive_seed, stream
from app.schemas.environment import FLAT_ENV, EnvParams
from app.schemas.experiment import AnalysisConfig, ExperimentConfig
from app.schemas.run_log import (
    GenerationRecord,
    IndividualsRecord,
    RunHeader,
    RunLogRecord,
    TransferEvent,
)
from app.services import plots
from app.services.analysis import QdGrid, feature_projection, generate_robustness_suite, local_generalisation_suite
from app.services.checkpoint import CHECKPOINT_NAME, RunState, load_checkpoint
from app.services.evaluation import EvaluationCounter, EvaluationJob, Evaluator, FitnessFunction, walker_fitness
from app.services.ga import AgentPopulation, population_best
from app.services.run_log import RUN_LOG_NAME, read_run_log
from app.services.statistics import bonferroni, mann_whitney_u

logger = get_logger(__name__)


class SuiteKind(str, Enum):
    ROBUSTNESS = "robustness"
    LOCAL = "local"
    DIVERSITY = "diversity"
    MAPS = "maps"


@dataclass
class LoadedRun:
    """A run directory's log, split by record type."""

    run_id: str
    run_dir: Path
    header: RunHeader
    generations: list[GenerationRecord] = field(default_factory=list)
    individuals: list[IndividualsRecord] = field(default_factory=list)
    transfers: list[TransferEvent] = field(default_factory=list)

    @property
    def condition(self) -> str:
        return self.header.condition

    @property
    def config(self) -> ExperimentConfig:
        return ExperimentConfig.model_validate(self.header.config)


def load_run(run_dir: Path) -> LoadedRun:
    records: list[RunLogRecord] = read_run_log(run_dir / RUN_LOG_NAME)
    header = records[0]
    assert isinstance(header, RunHeader)
    run = LoadedRun(run_id=run_dir.name, run_dir=run_dir, header=header)
    for record in records[1:]:
        if isinstance(record, GenerationRecord):
            run.generations.append(record)
        elif isinstance(record, IndividualsRecord):
            run.individuals.append(record)
        elif isinstance(record, TransferEvent):
            run.transfers.append(record)
    return run


def load_runs(run_dirs: Sequence[Path]) -> list[LoadedRun]:
    """Load runs and refuse to pool ones with different physics or operators."""
    runs = [load_run(Path(d)) for d in run_dirs]
    hashes = {r.header.comparability_hash for r in runs}
    if len(hashes) > 1:
        raise SchemaMismatchError(
            f"Runs differ in physics, walker, genome or GA settings: {sorted(hashes)}"
        )
    return runs


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as e:
        raise ArtifactIOError(f"Failed to write {path}: {e}") from e
    return path


def _tracked(record: GenerationRecord) -> Any:
    return next(p for p in record.pairs if p.pair_id == record.tracked_pair_id)


def compare_conditions(
    samples: dict[str, dict[str, list[float]]]
) -> list[tuple[str, str, str, float, float, float]]:
    """Mann-Whitney U for every condition pair within every category, Bonferroni-adjusted.

    ``samples`` maps category -> condition -> per-run values.
    """
    rows: list[tuple[str, str, str, float, float, float]] = []
    for category, per_condition in samples.items():
        pairs = list(itertools.combinations(sorted(per_condition), 2))
        results = [mann_whitney_u(per_condition[a], per_condition[b]) for a, b in pairs]
        adjusted = bonferroni([r.p_value for r in results], max(len(pairs), 1))
        for (a, b), result, p_adj in zip(pairs, results, adjusted, strict=True):
            rows.append((category, a, b, result.u, result.p_value, p_adj))
    return rows


_STATS_HEADER = ("category", "condition_a", "condition_b", "u", "p", "p_adjusted")


# =============================================================================
# Diversity and maps
# =============================================================================


def analyze_diversity(runs: list[LoadedRun], out_dir: Path, svg: bool = False) -> list[Path]:
    rows = []
    curves: dict[str, list[tuple[int, float]]] = {}
    finals: dict[str, list[float]] = defaultdict(list)
    for run in runs:
        points = []
        for record in run.generations:
            tracked = _tracked(record)
            rows.append(
                (run.run_id, run.condition, run.header.master_seed, record.generation,
                 record.tracked_pair_id, record.lineage_switched, tracked.diversity,
                 tracked.best_fitness, tracked.mean_fitness)
            )
            points.append((record.generation, tracked.diversity))
        curves[f"{run.condition}/{run.run_id}"] = points
        if points:
            finals[run.condition].append(points[-1][1])

    outputs = [
        write_csv(
            out_dir / "diversity.csv",
            ("run", "condition", "seed", "generation", "tracked_pair_id", "lineage_switched",
             "diversity", "best_fitness", "mean_fitness"),
            rows,
        ),
        write_csv(out_dir / "diversity_stats.csv", _STATS_HEADER, compare_conditions({"final": dict(finals)})),
    ]
    if svg:
        outputs.append(plots.diversity_curves(curves, out_dir / "diversity.svg"))
    return outputs


def analyze_maps(runs: list[LoadedRun], out_dir: Path, analysis: AnalysisConfig, svg: bool = False) -> list[Path]:
    cloud = []
    grids: dict[str, QdGrid] = {}
    points_by_condition: dict[str, list[tuple[float, float, float]]] = defaultdict(list)
    for run in runs:
        grid = grids.setdefault(run.condition, QdGrid(resolution=analysis.qd_resolution))
        for record in run.individuals:
            for morphology, fitness in zip(record.morphologies, record.fitness, strict=True):
                length, width = feature_projection(np.asarray(morphology))
                cloud.append((run.run_id, run.condition, record.pair_id, record.generation, length, width, fitness))
                points_by_condition[run.condition].append((length, width, fitness))
                grid.update(np.asarray(morphology), fitness)

    qd_rows = [
        (condition, i, j, value)
        for condition, grid in sorted(grids.items())
        for (i, j), value in sorted(grid.cells.items())
    ]
    snapshot_rows = [
        (run.run_id, run.condition, record.generation, record.tracked_pair_id, _tracked(record).best_fitness,
         *_tracked(record).best_morphology)
        for run in runs
        for record in run.generations
        if record.generation % analysis.snapshot_every == 0
    ]
    transfer_counts: dict[tuple[str, int, int], int] = defaultdict(int)
    for run in runs:
        for event in run.transfers:
            transfer_counts[(run.run_id, event.source_pair_id, event.target_pair_id)] += 1

    outputs = [
        write_csv(
            out_dir / "feature_points.csv",
            ("run", "condition", "pair_id", "first_seen_generation", "total_length", "total_width", "fitness"),
            cloud,
        ),
        write_csv(out_dir / "qd_grid.csv", ("condition", "cell_length", "cell_width", "best_fitness"), qd_rows),
        write_csv(
            out_dir / "morphology_snapshots.csv",
            ("run", "condition", "generation", "pair_id", "best_fitness",
             *(f"m{i}" for i in range(8))),
            snapshot_rows,
        ),
        write_csv(
            out_dir / "transfers.csv",
            ("run", "source_pair_id", "target_pair_id", "count"),
            [(*key, count) for key, count in sorted(transfer_counts.items())],
        ),
    ]
    if svg:
        for condition, grid in sorted(grids.items()):
            outputs.append(
                plots.feature_map(points_by_condition[condition], out_dir / f"feature_map_{condition}.svg", condition)
            )
            outputs.append(
                plots.qd_heatmap(
                    grid.as_array(), grid.length_range, grid.width_range, out_dir / f"qd_grid_{condition}.svg", condition
                )
            )
    return outputs


# =============================================================================
# Suites
# =============================================================================


def _final_state(run: LoadedRun) -> RunState:
    return load_checkpoint(run.run_dir / CHECKPOINT_NAME)


def tested_population(state: RunState) -> AgentPopulation:
    """The flat-lineage POET population, or the curriculum's only population."""
    if state.poet is not None:
        pair = state.poet.pair(state.tracked_pair_id) or state.poet.pairs[0]
        return pair.population
    assert state.population is not None
    return state.population


def training_envs(state: RunState) -> list[EnvParams]:
    if state.poet is not None:
        return [p.env for p in state.poet.pairs]
    if state.rri is not None:
        return list(state.rri.envs)
    return [FLAT_ENV]


def _score_runs(
    runs: list[LoadedRun],
    envs_per_run: list[list[tuple[str, EnvParams, int]]],
    fitness_fn: FitnessFunction,
    workers: int,
    representatives: list[AgentPopulation],
) -> list[tuple[str, str, str, float]]:
    """Evaluate each run's representative in its environments; mean per category."""
    jobs = [
        EvaluationJob(key=(r, e), genotype=population_best(representatives[r]), env=env, base_seed=seed)
        for r, envs in enumerate(envs_per_run)
        for e, (_, env, seed) in enumerate(envs)
    ]
    with Evaluator(EvaluationCounter(len(jobs)), fitness_fn, workers) as evaluator:
        scores = evaluator.run(jobs)

    rows = []
    start = 0
    for run, envs in zip(runs, envs_per_run, strict=True):
        by_category: dict[str, list[float]] = defaultdict(list)
        for (category, _, _), score in zip(envs, scores[start : start + len(envs)], strict=True):
            by_category[category].append(score)
        start += len(envs)
        for category, values in by_category.items():
            rows.append((run.run_id, run.condition, category, float(np.mean(values))))
    return rows


def _write_scores(
    rows: list[tuple[str, str, str, float]], out_dir: Path, name: str, svg: bool
) -> list[Path]:
    samples: dict[str, dict[str, list[float]]] = defaultdict(lambda: defaultdict(list))
    for _, condition, category, score in rows:
        samples[category][condition].append(score)
    outputs = [
        write_csv(out_dir / f"{name}.csv", ("run", "condition", "category", "score"), rows),
        write_csv(
            out_dir / f"{name}_stats.csv",
            _STATS_HEADER,
            compare_conditions({c: dict(v) for c, v in samples.items()}),
        ),
    ]
    if svg:
        outputs.append(plots.score_boxplot(samples, out_dir / f"{name}.svg"))
    return outputs


def analyze_robustness(
    runs: list[LoadedRun],
    out_dir: Path,
    analysis: AnalysisConfig,
    fitness_fn: FitnessFunction,
    workers: int = 1,
    svg: bool = False,
) -> list[Path]:
    suite = generate_robustness_suite(stream(analysis.suite_seed, Stream.SUITE, 0), analysis.suite_per_category)
    envs = [
        (s.category.value, s.env, derive_seed(analysis.suite_seed, Stream.SUITE_EVAL, 0, i))
        for i, s in enumerate(suite)
    ]
    write_csv(
        out_dir / "robustness_suite.csv",
        ("index", "category", "env"),
        [(i, s.category.value, s.env.label()) for i, s in enumerate(suite)],
    )
    states = [_final_state(run) for run in runs]
    rows = _score_runs(runs, [envs] * len(runs), fitness_fn, workers, [tested_population(s) for s in states])
    return _write_scores(rows, out_dir, "robustness", svg)


def analyze_local(
    runs: list[LoadedRun],
    out_dir: Path,
    analysis: AnalysisConfig,
    fitness_fn: FitnessFunction,
    workers: int = 1,
    svg: bool = False,
) -> list[Path]:
    states = [_final_state(run) for run in runs]
    envs_per_run = []
    for r, state in enumerate(states):
        bases = training_envs(state)
        envs = []
        for n in analysis.local_mutation_counts:
            for i in range(analysis.local_envs_per_class):
                rng = stream(analysis.suite_seed, Stream.SUITE, 1, r, n, i)
                env = local_generalisation_suite(bases[i % len(bases)], rng, n)
                envs.append((f"mutations_{n}", env, derive_seed(analysis.suite_seed, Stream.SUITE_EVAL, 1, r, n, i)))
        envs_per_run.append(envs)
    rows = _score_runs(runs, envs_per_run, fitness_fn, workers, [tested_population(s) for s in states])
    return _write_scores(rows, out_dir, "local_generalisation", svg)


def analyze(
    run_dirs: Sequence[Path],
    suite: SuiteKind,
    out_dir: Path,
    fitness_fn: FitnessFunction | None = None,
    workers: int = 1,
    svg: bool = False,
) -> list[Path]:
    """Produce the tables for ``suite`` from ``run_dirs`` into ``out_dir``."""
    runs = load_runs(run_dirs)
    if not runs:
        raise ArtifactIOError("No runs given")
    config = runs[0].config
    logger.info("analyze.started", suite=suite.value, runs=len(runs), out=str(out_dir))
    if suite == SuiteKind.DIVERSITY:
        return analyze_diversity(runs, out_dir, svg)
    if suite == SuiteKind.MAPS:
        return analyze_maps(runs, out_dir, config.analysis, svg)

    fitness_fn = fitness_fn or walker_fitness(config.walker, config.physics, config.ga.episodes_per_eval)
    if suite == SuiteKind.ROBUSTNESS:
        return analyze_robustness(runs, out_dir, config.analysis, fitness_fn, workers, svg)
    return analyze_local(runs, out_dir, config.analysis, fitness_fn, workers, svg)
