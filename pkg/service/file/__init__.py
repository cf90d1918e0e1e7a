"""Artifact storage."""

from service.file.artifact_repo import Artifact, ArtifactRepository

__all__ = ["Artifact", "ArtifactRepository"]
