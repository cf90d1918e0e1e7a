"""Local artifact repository for pipeline stage outputs."""

import json
import logging
from pathlib import Path

from pydantic import BaseModel, JsonValue

from service.errors import ArtifactError, MissingInputError
from service.util import canonical_json

logger = logging.getLogger(__name__)


class Artifact(BaseModel):
    """A stored file; an empty container is the repository root."""

    name: str
    container: str = ""
    data: bytes | None = None


class ArtifactRepository:
    """Repository of artifacts under a root directory.

    Containers are sub-directories and artifacts are files inside them.
    """

    def __init__(self, root: Path) -> None:
        """Initialize the repository rooted at a directory."""
        self.root = root

    def path_of(self, artifact: Artifact) -> Path:
        """Return the filesystem path of an artifact."""
        return self.root / artifact.container / artifact.name

    def create_container(self, container_name: str) -> None:
        """Create a container, including the root if needed."""
        (self.root / container_name).mkdir(parents=True, exist_ok=True)

    def upload_artifact(self, artifact: Artifact) -> Path:
        """Write an artifact to its container, replacing any previous version.

        Returns:
            Path: Where the artifact was written.

        """
        path = self.path_of(artifact)
        self.create_container(artifact.container)
        path.write_bytes(artifact.data or b"")
        logger.debug("Wrote %d bytes to %s", len(artifact.data or b""), path)
        return path

    def download_artifact(self, artifact: Artifact) -> Artifact:
        """Read an artifact with its data.

        Raises:
            MissingInputError: If the artifact does not exist.

        """
        path = self.path_of(artifact)
        if not path.is_file():
            raise MissingInputError(f"Artifact not found: {path}")
        return Artifact(name=artifact.name, container=artifact.container, data=path.read_bytes())

    def upload_json(self, name: str, data: JsonValue | BaseModel, container: str = "") -> Path:
        """Write data as canonical JSON and return its path."""
        return self.upload_artifact(
            Artifact(name=name, container=container, data=canonical_json(data).encode("utf-8")),
        )

    def download_json(self, name: str, container: str = "") -> JsonValue:
        """Read a JSON artifact.

        Raises:
            MissingInputError: If the artifact does not exist.
            ArtifactError: If it is not valid JSON.

        """
        artifact = self.download_artifact(Artifact(name=name, container=container))
        try:
            return json.loads(artifact.data.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise ArtifactError(f"Artifact {name} is not valid JSON: {e}") from e
