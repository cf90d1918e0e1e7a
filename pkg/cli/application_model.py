"""Application model definitions."""

import logging
import os
import time
from dataclasses import dataclass, field
from datetime import datetime
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError, field_serializer

from service.detector import DEFAULT_SPLIT, DEFAULT_THRESHOLD, DEFAULT_TREES
from service.errors import ConfigError
from service.file.artifact_repo import ArtifactRepository
from service.util import config_hash

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
PACKAGE_NAME = "pi-sentry"


def tool_version() -> str:
    """Return the installed package version."""
    try:
        return version(PACKAGE_NAME)
    except PackageNotFoundError:
        return "0.1.0"


class AppSettings(BaseModel):
    """Defaults read from the environment; command-line flags override them."""

    log_level: str = "INFO"
    seed: int = 7
    threshold: float = Field(default=DEFAULT_THRESHOLD, ge=0.0, le=1.0)
    trees: int = Field(default=DEFAULT_TREES, ge=1)
    split: float = Field(default=DEFAULT_SPLIT, gt=0.0, lt=1.0)

    @classmethod
    def from_env(cls) -> "AppSettings":
        """Load .env, then read PI_SENTRY_* variables.

        Raises:
            ConfigError: If a variable does not parse.

        """
        load_dotenv()
        try:
            return cls(
                log_level=os.getenv("PI_SENTRY_LOG", "INFO").upper(),
                seed=int(os.getenv("PI_SENTRY_SEED", "7")),
                threshold=float(os.getenv("PI_SENTRY_THRESHOLD", str(DEFAULT_THRESHOLD))),
                trees=int(os.getenv("PI_SENTRY_TREES", str(DEFAULT_TREES))),
                split=float(os.getenv("PI_SENTRY_SPLIT", str(DEFAULT_SPLIT))),
            )
        except (ValueError, ValidationError) as e:
            raise ConfigError(f"Invalid PI_SENTRY_* environment setting: {e}") from e


class RunManifest(BaseModel):
    """Record of one subcommand run, written next to its outputs."""

    subcommand: str
    inputs: list[str]
    outputs: list[str]
    seed: int | None
    config_hash: str
    tool_version: str
    started_at: datetime
    finished_at: datetime
    duration_seconds: float
    timings: dict[str, float] = {}
    trained_at: datetime | None = None

    @field_serializer("started_at", "finished_at", "trained_at")
    def serialise_date(self, value: datetime | None) -> str | None:
        """Serialize datetime to ISO 8601 format."""
        return value.isoformat() if value else None


@dataclass
class RunContext:
    """State shared by a subcommand while it runs."""

    subcommand: str
    output_dir: Path
    options: dict
    seed: int | None = None
    inputs: list[Path] = field(default_factory=list)
    outputs: list[Path] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)
    trained_at: datetime | None = None
    started_at: datetime = field(default_factory=lambda: datetime.now().astimezone())

    def __post_init__(self) -> None:
        """Create the output repository."""
        self.repository = ArtifactRepository(self.output_dir)
        self.repository.create_container("")

    def output(self, name: str) -> Path:
        """Return the path of an output file and record it in the manifest."""
        path = self.output_dir / name
        if path not in self.outputs:
            self.outputs.append(path)
        return path

    def timed(self, stage: str) -> "StageTimer":
        """Return a context manager recording the duration of a stage."""
        return StageTimer(self.timings, stage)

    def write_manifest(self) -> RunManifest:
        """Write manifest.json into the output directory."""
        finished_at = datetime.now().astimezone()
        manifest = RunManifest(
            subcommand=self.subcommand,
            inputs=[str(path) for path in self.inputs],
            outputs=[str(path) for path in self.outputs],
            seed=self.seed,
            config_hash=config_hash(self.options),
            tool_version=tool_version(),
            started_at=self.started_at,
            finished_at=finished_at,
            duration_seconds=(finished_at - self.started_at).total_seconds(),
            timings=self.timings,
            trained_at=self.trained_at,
        )
        self.repository.upload_json(MANIFEST_NAME, manifest.model_dump(mode="json"))
        logger.info("✓ %s finished in %.2fs", self.subcommand, manifest.duration_seconds)
        return manifest


class StageTimer:
    """Context manager adding a stage duration to a timings map."""

    def __init__(self, timings: dict[str, float], stage: str) -> None:
        """Initialize the timer for a stage."""
        self.timings = timings
        self.stage = stage
        self.start = 0.0

    def __enter__(self) -> "StageTimer":
        """Start timing."""
        self.start = time.perf_counter()
        return self

    def __exit__(self, *_: object) -> None:
        """Record the elapsed time."""
        self.timings[self.stage] = round(time.perf_counter() - self.start, 6)
