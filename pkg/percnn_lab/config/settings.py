"""
Configuration Management

RunConfig gathers every setting of a percnn-lab command. Values come from a
named preset or a YAML file, then ``--set key.path=value`` overrides, then
PERCNN_* environment variables for anything still unset.
"""

from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple, Union
import logging

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from ..core.errors import ConfigError
from ..core.domain import PdeKind, PdeSystem
from ..core.model import ModelConfig
from ..core.application.services.training import TrainConfig


logger = logging.getLogger(__name__)


class SystemSettings(BaseModel):
    """Reference system, grid and integration window"""
    model_config = ConfigDict(extra="forbid")

    kind: PdeKind = PdeKind.BURGERS2D
    params: Dict[str, float] = Field(default_factory=lambda: {"nu": 0.005})
    domain: Optional[List[Tuple[float, float]]] = None
    grid: List[int] = Field(default_factory=lambda: [101, 101])
    dt: float = Field(default=2.5e-4, gt=0)
    n_steps: int = Field(default=1600, ge=0)
    ic_seed: Optional[int] = Field(default=None, description="defaults to the run seed")
    ic_options: Dict[str, float] = Field(default_factory=dict)
    provenance: Literal["published", "scaled", "toy"] = "published"

    def build(self) -> PdeSystem:
        domain = tuple(tuple(d) for d in self.domain) if self.domain else ()
        return PdeSystem(self.kind, dict(self.params), domain)


class MeasurementSettings(BaseModel):
    """How the training measurement is drawn from the clean trajectory"""
    model_config = ConfigDict(extra="forbid")

    spatial_stride: Union[int, List[int]] = 2
    temporal_stride: int = Field(default=40, ge=1)
    window_steps: int = Field(default=400, ge=1, description="fine steps covered by the measurement")
    noise_level: float = Field(default=0.1, ge=0)
    noise_seed: Optional[int] = Field(default=None, description="defaults to the run seed + 1")


class InterpretSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    threshold: float = Field(default=0.05, ge=0)
    n_samples: int = Field(default=100, ge=1)
    seed: int = 0


class EvaluateSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    train_end_index: Optional[int] = Field(default=None, description="defaults to model.steps_train")
    baselines: bool = True


class PredictSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    steps: Optional[int] = Field(default=None, description="defaults to steps_train + steps_extrapolate")
    slices: List[int] = Field(default_factory=list)


class RunConfig(BaseSettings):
    """All settings of one percnn-lab command"""
    model_config = SettingsConfigDict(
        env_prefix="PERCNN_",
        env_nested_delimiter="__",
        extra="forbid",
    )

    version: int = 1
    seed: int = 0
    out_dir: Path = Path("runs")
    system: SystemSettings = Field(default_factory=SystemSettings)
    measurement: MeasurementSettings = Field(default_factory=MeasurementSettings)
    model: ModelConfig = Field(default_factory=ModelConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    interpret: InterpretSettings = Field(default_factory=InterpretSettings)
    evaluate: EvaluateSettings = Field(default_factory=EvaluateSettings)
    predict: PredictSettings = Field(default_factory=PredictSettings)

    @model_validator(mode="after")
    def _consistent(self) -> "RunConfig":
        if self.version != 1:
            raise ValueError(f"unsupported config version {self.version}")
        if len(self.system.grid) != self.system.kind.rank:
            raise ValueError(f"grid {self.system.grid} does not match {self.system.kind.value}")
        if self.model.rank != self.system.kind.rank:
            raise ValueError(f"model.rank {self.model.rank} does not match {self.system.kind.value}")
        if self.measurement.window_steps > self.system.n_steps:
            raise ValueError("measurement.window_steps exceeds system.n_steps")
        return self

    @property
    def ic_seed(self) -> int:
        return self.seed if self.system.ic_seed is None else self.system.ic_seed

    @property
    def noise_seed(self) -> int:
        return self.seed + 1 if self.measurement.noise_seed is None else self.measurement.noise_seed

    def train_config(self) -> TrainConfig:
        """TrainConfig with the run seed unless train.seed was set explicitly"""
        if "seed" in self.train.model_fields_set:
            return self.train
        return self.train.model_copy(update={"seed": self.seed + 2})

    @property
    def train_end_index(self) -> int:
        if self.evaluate.train_end_index is not None:
            return self.evaluate.train_end_index
        return self.model.steps_train

    @property
    def predict_steps(self) -> int:
        if self.predict.steps is not None:
            return self.predict.steps
        return self.model.steps_train + self.model.steps_extrapolate


def _set_path(data: Dict[str, Any], dotted: str, value: Any):
    keys = dotted.split(".")
    node = data
    for key in keys[:-1]:
        child = node.get(key)
        if child is None:
            child = node[key] = {}
        elif not isinstance(child, dict):
            raise ConfigError(f"cannot set '{dotted}': '{key}' is not a section")
        node = child
    node[keys[-1]] = value


def parse_override(text: str) -> Tuple[str, Any]:
    """'model.dt=2.5e-4' -> ('model.dt', 0.00025); values are YAML scalars"""
    if "=" not in text:
        raise ConfigError(f"override '{text}' is not key=value")
    key, raw = text.split("=", 1)
    key = key.strip()
    if not key:
        raise ConfigError(f"override '{text}' has an empty key")
    try:
        value = yaml.safe_load(raw) if raw.strip() else ""
    except yaml.YAMLError as e:
        raise ConfigError(f"cannot parse value of '{key}': {e}") from e
    return key, value


def load_source(source: Optional[str]) -> Dict[str, Any]:
    """Preset name or YAML file path to a raw config dict"""
    from .presets import PRESETS, preset

    if source is None:
        return {}
    if source in PRESETS:
        return preset(source)
    path = Path(source)
    if not path.exists():
        raise ConfigError(f"'{source}' is neither a preset ({', '.join(sorted(PRESETS))}) nor a file")
    try:
        data = yaml.safe_load(path.read_text()) or {}
    except yaml.YAMLError as e:
        raise ConfigError(f"invalid YAML in {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must hold a mapping at top level")
    return data


def load_config(
    source: Optional[str] = None,
    overrides: Sequence[str] = (),
    seed: Optional[int] = None,
    out_dir: Optional[Path] = None,
) -> RunConfig:
    """
    Resolve a RunConfig.

    Raises:
        ConfigError: unknown keys, invalid values or an unreadable source
    """
    data = load_source(source)
    for text in overrides:
        key, value = parse_override(text)
        _set_path(data, key, value)
    if seed is not None:
        data["seed"] = seed
    if out_dir is not None:
        data["out_dir"] = str(out_dir)
    try:
        config = RunConfig(**data)
    except ValidationError as e:
        raise ConfigError(f"invalid configuration:\n{e}") from e
    except ValueError as e:
        raise ConfigError(f"invalid configuration: {e}") from e
    logger.debug(f"Resolved config from {source or 'defaults'} with {len(overrides)} overrides")
    return config


def dump_config(config: RunConfig) -> str:
    return yaml.safe_dump(config.model_dump(mode="json"), sort_keys=False)


def write_config(config: RunConfig, directory: Path) -> Path:
    """Echo the resolved config as config.yaml"""
    path = Path(directory) / "config.yaml"
    path.write_text(dump_config(config))
    return path
