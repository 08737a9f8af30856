"""
Manifests

JSON records written next to every artifact so a directory can be reproduced
and checked on its own: seeds, strides, noise, provenance and the SHA-256 of
every file.
"""

from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Type, TypeVar, Union
import hashlib
import logging

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from ...errors import DatasetFormatError


logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
M = TypeVar("M", bound=BaseModel)

DATASET_MANIFEST = "manifest.json"
RUN_MANIFEST = "run_manifest.json"


def sha256_file(path: PathLike) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


class FileEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str
    sha256: str
    size: int

    @classmethod
    def of(cls, path: PathLike) -> "FileEntry":
        path = Path(path)
        return cls(name=path.name, sha256=sha256_file(path), size=path.stat().st_size)


class MeasurementInfo(BaseModel):
    model_config = ConfigDict(extra="forbid")

    spatial_stride: Tuple[int, ...]
    temporal_stride: int
    noise_level: float
    noise_seed: Optional[int] = None


class DatasetManifest(BaseModel):
    """Describes one generated dataset directory"""
    model_config = ConfigDict(extra="forbid")

    version: int = 1
    kind: str
    provenance: Literal["published", "scaled", "toy"]
    system_params: Dict[str, float]
    domain: List[Tuple[float, float]]
    fine_shape: Tuple[int, ...]
    dt: float
    n_steps: int
    ic_seed: int
    measurement: MeasurementInfo
    files: Dict[str, FileEntry] = Field(default_factory=dict)


class RunManifest(BaseModel):
    """Describes the outputs of a train/predict/evaluate/interpret command"""
    model_config = ConfigDict(extra="forbid")

    version: int = 1
    command: str
    seed: int
    inputs: Dict[str, FileEntry] = Field(default_factory=dict)
    outputs: Dict[str, FileEntry] = Field(default_factory=dict)
    details: Dict[str, Any] = Field(default_factory=dict)


def write_manifest(path: PathLike, manifest: BaseModel):
    Path(path).write_text(manifest.model_dump_json(indent=2) + "\n")
    logger.debug(f"Manifest written to {path}")


def read_manifest(path: PathLike, model: Type[M]) -> M:
    try:
        return model.model_validate_json(Path(path).read_text())
    except ValidationError as e:
        raise DatasetFormatError(f"invalid manifest {path}: {e}") from e


def verify_files(root: PathLike, files: Dict[str, FileEntry]):
    """
    Raises:
        DatasetFormatError: a listed file is missing or its checksum differs
    """
    root = Path(root)
    for role, entry in files.items():
        path = root / entry.name
        if not path.exists():
            raise DatasetFormatError(f"{role} file {path} listed in the manifest is missing")
        if sha256_file(path) != entry.sha256:
            raise DatasetFormatError(f"{role} file {path} does not match its manifest checksum")
