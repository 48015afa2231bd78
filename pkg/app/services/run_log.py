"""Append-only JSON-lines run log."""

from collections.abc import Iterator
from pathlib import Path
from types import TracebackType
from typing import IO

from pydantic import ValidationError

from app.core.exceptions import ArtifactIOError, SchemaMismatchError
from app.core.logging import get_logger
from app.schemas.run_log import (
    RUN_LOG_SCHEMA_VERSION,
    RunHeader,
    RunLogRecord,
    run_log_adapter,
)

logger = get_logger(__name__)

RUN_LOG_NAME = "run_log.jsonl"


class RunLogWriter:
    """Numbers records consecutively and appends them one per line."""

    def __init__(self, path: Path, record_count: int = 0) -> None:
        self.path = path
        self.record_count = record_count
        self._handle: IO[str] | None = None

    def open(self, truncate_to: int | None = None) -> "RunLogWriter":
        """Open for appending; ``truncate_to`` keeps only that many leading records."""
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            if truncate_to is not None:
                lines = self.path.read_text(encoding="utf-8").splitlines(keepends=True) if self.path.exists() else []
                if len(lines) < truncate_to:
                    raise ArtifactIOError(
                        f"{self.path} has {len(lines)} records, checkpoint expects {truncate_to}"
                    )
                self.path.write_text("".join(lines[:truncate_to]), encoding="utf-8")
                self.record_count = truncate_to
                mode = "a"
            else:
                mode = "w"
            self._handle = self.path.open(mode, encoding="utf-8")
        except OSError as e:
            raise ArtifactIOError(f"Cannot open run log {self.path}: {e}") from e
        return self

    def append(self, record: RunLogRecord) -> None:
        if self._handle is None:
            raise ArtifactIOError(f"Run log {self.path} is not open")
        numbered = record.model_copy(update={"seq": self.record_count})
        try:
            self._handle.write(numbered.model_dump_json() + "\n")
            self._handle.flush()
        except OSError as e:
            raise ArtifactIOError(f"Failed to append to {self.path}: {e}") from e
        self.record_count += 1

    def extend(self, records: list[RunLogRecord]) -> None:
        for record in records:
            self.append(record)

    def close(self) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None

    def __enter__(self) -> "RunLogWriter":
        return self

    def __exit__(
        self,
        exc_type: type[BaseException] | None,
        exc: BaseException | None,
        tb: TracebackType | None,
    ) -> None:
        self.close()


def iter_run_log(path: Path) -> Iterator[RunLogRecord]:
    try:
        with path.open(encoding="utf-8") as handle:
            for number, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                try:
                    yield run_log_adapter.validate_json(line)
                except ValidationError as e:
                    raise ArtifactIOError(f"{path}:{number}: malformed record: {e}") from e
    except OSError as e:
        raise ArtifactIOError(f"Cannot read run log {path}: {e}") from e


def read_run_log(path: Path) -> list[RunLogRecord]:
    """Load and validate a run log; the first record must be a current-version header."""
    records = list(iter_run_log(path))
    if not records or not isinstance(records[0], RunHeader):
        raise ArtifactIOError(f"{path} does not start with a run header")
    header = records[0]
    if header.schema_version != RUN_LOG_SCHEMA_VERSION:
        raise SchemaMismatchError(
            f"{path} uses run log schema {header.schema_version}, expected {RUN_LOG_SCHEMA_VERSION}"
        )
    logger.debug("run_log.read", path=str(path), records=len(records))
    return records
