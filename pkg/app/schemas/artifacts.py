"""Schemas for run directory manifests and checkpoint sidecars."""

from datetime import datetime
from enum import Enum
from typing import Any

from pydantic import BaseModel

CHECKPOINT_FORMAT = "morphopoet-checkpoint"
CHECKPOINT_FORMAT_VERSION = 1


class RunStatus(str, Enum):
    RUNNING = "running"
    INTERRUPTED = "interrupted"
    FINISHED = "finished"
    FAILED = "failed"


class RunManifest(BaseModel):
    """``manifest.json``: what a run directory holds and how far it got."""

    condition: str
    master_seed: int
    config_hash: str
    comparability_hash: str
    config: dict[str, Any]
    status: RunStatus = RunStatus.RUNNING
    generation: int = 0
    evaluations: int = 0
    created_at: datetime
    updated_at: datetime


class CheckpointManifest(BaseModel):
    """JSON sidecar written next to every checkpoint payload."""

    format: str = CHECKPOINT_FORMAT
    version: int = CHECKPOINT_FORMAT_VERSION
    sha256: str
    generation: int
    evaluations: int
    budget: int
    record_count: int
    finished: bool
    config_hash: str
