"""
Configuration: RunConfig, loading and presets.
"""

from .settings import RunConfig, load_config, dump_config, write_config, parse_override
from .presets import PRESETS, preset

__all__ = [
    'RunConfig',
    'load_config',
    'dump_config',
    'write_config',
    'parse_override',
    'PRESETS',
    'preset',
]
