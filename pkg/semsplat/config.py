"""
semsplat - Configuration Management

Validated configuration records for training and synthetic scene generation,
plus loaders for YAML / JSON files and environment overrides.
"""
import json
import os
from pathlib import Path
from typing import Any, Dict, Literal, Optional, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from semsplat.exceptions import ConfigError


# ============================ <<< Training Configuration >>> ================================================
class LearningRates(BaseModel):
    """Per-group Adam learning rates"""
    model_config = ConfigDict(extra="forbid")

    positions: float = Field(1.6e-4, ge=0.0)
    rotations: float = Field(1e-3, ge=0.0)
    log_scales: float = Field(5e-3, ge=0.0)
    opacity_logits: float = Field(5e-2, ge=0.0)
    sh_coeffs: float = Field(2.5e-3, ge=0.0)
    features: float = Field(2.5e-3, ge=0.0)
    decoder: float = Field(1e-3, ge=0.0)

    # positions decay exponentially to positions * position_lr_final_factor over the run
    position_lr_final_factor: float = Field(0.01, gt=0.0)

    @classmethod
    def frozen(cls) -> "LearningRates":
        """All rates zero: the trainer becomes a pure evaluation loop"""
        return cls(
            positions=0.0, rotations=0.0, log_scales=0.0, opacity_logits=0.0,
            sh_coeffs=0.0, features=0.0, decoder=0.0,
        )


class LossWeights(BaseModel):
    """Weights a (2D aggregation) and b (3D aggregation) of the total loss"""
    model_config = ConfigDict(extra="forbid")

    a: float = Field(0.5, ge=0.0)
    b: float = Field(0.1, ge=0.0)


class DensifyConfig(BaseModel):
    """Adaptive density control: clone / split / prune"""
    model_config = ConfigDict(extra="forbid")

    interval: int = Field(2000, gt=0)
    grad_threshold: float = Field(2e-4, gt=0.0)
    prune_opacity: float = Field(0.005, ge=0.0, lt=1.0)
    split_scale_divisor: float = Field(1.6, gt=1.0)
    percent_dense: float = Field(0.01, gt=0.0)
    until_step: Optional[int] = Field(None, ge=0)


class TrainConfig(BaseModel):
    """
    Every knob of the optimization loop.

    Defaults follow the published schedule: 30k steps, densify every 2000
    steps, at most 300k points, one ground-truth view per eight pseudo
    views, k = 5 neighbours, a = 0.5, b = 0.1.
    """
    model_config = ConfigDict(extra="forbid")

    total_steps: int = Field(30000, ge=0)
    max_points: int = Field(300000, gt=0)
    gt_to_pseudo_ratio: Tuple[int, int] = (1, 8)
    use_pseudo_labels: bool = True
    k: int = Field(5, gt=0)
    agg2d_samples: int = Field(4096, gt=0)
    agg3d_samples: int = Field(4096, gt=0)
    weights: LossWeights = Field(default_factory=LossWeights)
    lr: LearningRates = Field(default_factory=LearningRates)
    densify: DensifyConfig = Field(default_factory=DensifyConfig)

    feature_dim: int = Field(16, gt=0)
    sh_degree: int = Field(2, ge=0, le=3)
    decoder_hidden: int = Field(32, ge=0)
    dtype: Literal["float32", "float64"] = "float32"

    tile_size: int = Field(32, gt=0)
    threads: int = Field(1, gt=0)
    min_transmittance: float = Field(1e-4, ge=0.0, lt=1.0)

    seed: int = 0
    log_interval: int = Field(500, gt=0)

    @field_validator("gt_to_pseudo_ratio")
    @classmethod
    def validate_ratio(cls, v: Tuple[int, int]) -> Tuple[int, int]:
        if v[0] <= 0 or v[1] <= 0:
            raise ValueError(f"ratio entries must be positive, got {v[0]}:{v[1]}")
        return v

    @property
    def densify_until(self) -> int:
        return self.densify.until_step if self.densify.until_step is not None else self.total_steps

    def with_overrides(self, **overrides: Any) -> "TrainConfig":
        """Return a validated copy with top-level fields replaced (None values ignored)"""
        data = self.model_dump()
        data.update({k: v for k, v in overrides.items() if v is not None})
        return _validate(TrainConfig, data)

    def to_dict(self) -> Dict[str, Any]:
        data = self.model_dump()
        data["gt_to_pseudo_ratio"] = list(self.gt_to_pseudo_ratio)
        return data


# ============================ <<< Synthetic Scene Configuration >>> ==========================================
class SynthConfig(BaseModel):
    """Desk-scale synthetic scene of ellipsoidal blobs on a ground plane"""
    model_config = ConfigDict(extra="forbid")

    num_classes: int = Field(3, gt=0, description="blob classes; background is class 0 on top of these")
    num_blobs: int = Field(5, gt=0, le=254)
    num_views: int = Field(30, gt=0)
    labeled_views: int = Field(3, gt=0)
    image_size: int = Field(256, ge=16)
    focal_factor: float = Field(1.1, gt=0.0, description="focal length in units of image width")
    orbit_radius: float = Field(4.0, gt=0.0)
    orbit_height: float = Field(2.5, gt=0.0)
    ground_radius: float = Field(2.5, gt=0.0)
    sparse_points: int = Field(4000, gt=0)
    seed: int = 0

    @model_validator(mode="after")
    def check_counts(self) -> "SynthConfig":
        if self.labeled_views > self.num_views:
            raise ValueError("labeled_views cannot exceed num_views")
        return self


# ============================ <<< Loading >>> ===============================================================
def _validate(model: type, data: Dict[str, Any]):
    try:
        return model.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        field = ".".join(str(p) for p in first.get("loc", ()))
        raise ConfigError(f"Invalid configuration: {first.get('msg')}", field=field or None, cause=e)


def _load_mapping(path: Path) -> Dict[str, Any]:
    if not path.exists():
        raise ConfigError(f"Configuration file not found: {path}")
    content = path.read_text(encoding="utf-8")
    try:
        if path.suffix.lower() in (".yaml", ".yml"):
            data = yaml.safe_load(content)
        else:
            data = json.loads(content)
    except (yaml.YAMLError, json.JSONDecodeError) as e:
        raise ConfigError(f"Failed to parse configuration {path}: {e}", cause=e)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"Configuration {path} must be a mapping, got {type(data).__name__}")
    return data


def config_from_file(path: Union[str, Path]) -> TrainConfig:
    """
    Load a training configuration from a JSON or YAML file.

    Missing fields take their defaults; unknown fields are rejected.

    Raises:
        ConfigError: If the file cannot be read or fails validation
    """
    return _validate(TrainConfig, _load_mapping(Path(path)))


def synth_config_from_file(path: Union[str, Path]) -> SynthConfig:
    return _validate(SynthConfig, _load_mapping(Path(path)))


def config_to_file(config: BaseModel, path: Union[str, Path]) -> None:
    """Write a configuration as YAML (or JSON for a .json suffix)"""
    path = Path(path)
    data = config.to_dict() if hasattr(config, "to_dict") else config.model_dump()
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix.lower() == ".json":
        path.write_text(json.dumps(data, indent=2), encoding="utf-8")
    else:
        path.write_text(yaml.safe_dump(data, sort_keys=False), encoding="utf-8")


def config_from_env(prefix: str = "SEMSPLAT_") -> Dict[str, Any]:
    """
    Read runtime overrides from environment variables.

    Environment variables:
        SEMSPLAT_THREADS: worker threads for rendering
        SEMSPLAT_SEED: global seed
        SEMSPLAT_LOG_LEVEL: DEBUG / INFO / WARNING / ERROR

    Returns:
        Mapping with only the variables that are set.
    """
    def get_env(key: str) -> Optional[str]:
        return os.environ.get(f"{prefix}{key}")

    def get_int(key: str) -> Optional[int]:
        value = get_env(key)
        if value is None:
            return None
        try:
            return int(value)
        except ValueError:
            raise ConfigError(f"{prefix}{key} must be an integer, got '{value}'", field=key.lower())

    overrides: Dict[str, Any] = {}
    if (threads := get_int("THREADS")) is not None:
        overrides["threads"] = threads
    if (seed := get_int("SEED")) is not None:
        overrides["seed"] = seed
    if (level := get_env("LOG_LEVEL")) is not None:
        overrides["log_level"] = level.upper()
    return overrides
