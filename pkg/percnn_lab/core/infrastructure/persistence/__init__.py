"""
Persistence: PCNF datasets, PCCK checkpoints, JSON manifests and CSV exports.
"""

from .dataset_io import write_trajectory, read_trajectory, write_measurement, read_measurement, DatasetHeader
from .checkpoint_io import Checkpoint, save_checkpoint, load_checkpoint
from .manifest import (
    DatasetManifest,
    RunManifest,
    MeasurementInfo,
    FileEntry,
    write_manifest,
    read_manifest,
    verify_files,
    sha256_file,
    DATASET_MANIFEST,
    RUN_MANIFEST,
)
from .export import export_slices, write_grid_csv

__all__ = [
    'write_trajectory',
    'read_trajectory',
    'write_measurement',
    'read_measurement',
    'DatasetHeader',
    'Checkpoint',
    'save_checkpoint',
    'load_checkpoint',
    'DatasetManifest',
    'RunManifest',
    'MeasurementInfo',
    'FileEntry',
    'write_manifest',
    'read_manifest',
    'verify_files',
    'sha256_file',
    'DATASET_MANIFEST',
    'RUN_MANIFEST',
    'export_slices',
    'write_grid_csv',
]
