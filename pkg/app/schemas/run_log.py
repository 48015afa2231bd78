"""Run log record schemas.

The run log is an append-only JSON-lines file. Records carry no wall-clock
fields, so two runs with the same configuration produce identical files.
"""

from typing import Annotated, Any, Literal

from pydantic import BaseModel, Field, TypeAdapter

RUN_LOG_SCHEMA_VERSION = 1

EnvVector = list[float]


class _Record(BaseModel):
    seq: int = 0


class RunHeader(_Record):
    """First record of every run log."""

    kind: Literal["header"] = "header"
    schema_version: int = RUN_LOG_SCHEMA_VERSION
    condition: str
    master_seed: int
    config_hash: str
    comparability_hash: str
    config: dict[str, Any]


class PairSnapshot(BaseModel):
    """Per-pair metrics at the end of a generation."""

    pair_id: int
    env: EnvVector
    created_at_generation: int
    best_fitness: float
    mean_fitness: float
    diversity: float
    best_morphology: list[float]


class GenerationRecord(_Record):
    """Metrics after one generation of every population."""

    kind: Literal["generation"] = "generation"
    generation: int
    evaluations: int
    pairs: list[PairSnapshot]
    env_index: int | None = None
    tracked_pair_id: int
    lineage_switched: bool = False


class IndividualsRecord(_Record):
    """Every child evaluated for one population in one generation."""

    kind: Literal["individuals"] = "individuals"
    generation: int
    pair_id: int
    morphologies: list[list[float]]
    fitness: list[float]


class TransferEvent(_Record):
    kind: Literal["transfer"] = "transfer"
    generation: int
    target_pair_id: int
    source_pair_id: int
    incumbent_score: float
    winning_score: float


class CrossTestRecord(_Record):
    """Representative scores in one target environment during a transfer step."""

    kind: Literal["cross_test"] = "cross_test"
    generation: int
    target_pair_id: int
    scores: dict[int, float]


class CreationSkippedEvent(_Record):
    kind: Literal["creation_skipped"] = "creation_skipped"
    generation: int
    best_pair_fitness: float


class EnvCreatedEvent(_Record):
    kind: Literal["env_created"] = "env_created"
    generation: int
    parent_pair_id: int
    env: EnvVector
    assigned_pair_id: int
    score: float
    novelty: float | None = None
    outcome: Literal["admitted", "too_easy", "too_hard", "duplicate", "not_selected"]


class AdmissionEvent(_Record):
    kind: Literal["admission"] = "admission"
    generation: int
    pair_id: int
    source_pair_id: int
    env: EnvVector
    score: float
    novelty: float


class EvictionEvent(_Record):
    kind: Literal["eviction"] = "eviction"
    generation: int
    pair_id: int
    created_at_generation: int


class EscalationEvent(_Record):
    kind: Literal["escalation"] = "escalation"
    generation: int
    env_index: int
    before: EnvVector
    after: EnvVector
    best_fitness: float


class RunEnd(_Record):
    kind: Literal["run_end"] = "run_end"
    generation: int
    evaluations: int
    reason: str


RunLogRecord = Annotated[
    RunHeader
    | GenerationRecord
    | IndividualsRecord
    | TransferEvent
    | CrossTestRecord
    | CreationSkippedEvent
    | EnvCreatedEvent
    | AdmissionEvent
    | EvictionEvent
    | EscalationEvent
    | RunEnd,
    Field(discriminator="kind"),
]

run_log_adapter: TypeAdapter[RunLogRecord] = TypeAdapter(RunLogRecord)
