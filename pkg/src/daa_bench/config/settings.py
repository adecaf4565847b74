"""Declarative configuration for every daa-bench component."""

from __future__ import annotations

import json
import math
from enum import Enum
from pathlib import Path
from typing import Any, Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, model_validator
from pydantic import ValidationError as PydanticValidationError

from ..core.errors import ConfigError, format_validation_errors
from ..core.models import AircraftType, CameraModel, FloatRange
from ..perception.profiles import DetectorProfile

STANDARD_GRAVITY = 9.80665


class PlacementConfig(BaseModel):
    """Shared rotation and shift applied to both trajectories of an encounter."""

    rotation: FloatRange = Field(
        FloatRange(low=0.0, high=360.0), description="Degrees about the vertical axis"
    )
    horizontal_bound: float = Field(
        5000.0, ge=0.0, description="East/north shift drawn from U(-b, b)"
    )
    altitude_bound: float = Field(
        1000.0, ge=0.0, description="Altitude shift drawn from U(-b, b)"
    )

    model_config = ConfigDict(frozen=True, extra="forbid")

    @classmethod
    def identity(cls) -> PlacementConfig:
        return cls(
            rotation=FloatRange(low=0.0, high=0.0),
            horizontal_bound=0.0,
            altitude_bound=0.0,
        )


class EncounterConfig(BaseModel):
    """Feature ranges and timing of straight-line encounters."""

    ownship_speed: FloatRange = Field(
        FloatRange(low=60.0, high=70.0), description="m/s"
    )
    intruder_speed: FloatRange = Field(
        FloatRange(low=60.0, high=70.0), description="m/s"
    )
    hmd: FloatRange = Field(
        FloatRange(low=0.0, high=100.0), description="Horizontal miss distance, m"
    )
    vmd: FloatRange = Field(
        FloatRange(low=-30.0, high=30.0), description="Vertical miss distance, m"
    )
    relative_heading: FloatRange = Field(
        FloatRange(low=100.0, high=260.0), description="Degrees"
    )
    duration: float = Field(50.0, gt=0.0, description="Seconds")
    cpa_time: float = Field(40.0, gt=0.0, description="Seconds")
    dt: float = Field(1.0, gt=0.0, description="Script sampling interval, s")
    intruder_vertical_rate: float = Field(
        0.0, description="Constant intruder vertical rate, m/s"
    )
    per_cell: int = Field(
        30, gt=0, description="Encounters per factorial condition cell"
    )
    placement: PlacementConfig = Field(default_factory=PlacementConfig)

    model_config = ConfigDict(frozen=True, extra="forbid")

    @model_validator(mode="after")
    def check_timing(self) -> EncounterConfig:
        if not 0.0 < self.cpa_time < self.duration:
            msg = (
                f"cpa_time {self.cpa_time} must lie strictly inside "
                f"(0, {self.duration})"
            )
            raise ValueError(msg)
        steps = self.duration / self.dt
        if not math.isclose(steps, round(steps)):
            msg = "duration must be a whole number of dt steps"
            raise ValueError(msg)
        return self


class GammaRange(BaseModel):
    """Gamma(shape, scale) range distribution with a rejection floor."""

    shape: float = Field(..., gt=0.0)
    scale: float = Field(..., gt=0.0)
    minimum: float = Field(
        ..., ge=0.0, description="Samples at or below this are redrawn"
    )

    model_config = ConfigDict(frozen=True, extra="forbid")


def _default_range_models() -> dict[AircraftType, GammaRange]:
    return {
        AircraftType.CESSNA_SKYHAWK: GammaRange(shape=2.0, scale=200.0, minimum=20.0),
        AircraftType.KING_AIR_C90: GammaRange(shape=2.0, scale=200.0, minimum=20.0),
        AircraftType.BOEING_737: GammaRange(shape=3.0, scale=200.0, minimum=50.0),
    }


class SceneConfig(BaseModel):
    """Sampling distributions for single-image scenes."""

    range_models: dict[AircraftType, GammaRange] = Field(
        default_factory=_default_range_models
    )
    pitch_sigma: float = Field(5.0, ge=0.0)
    pitch_limit: float = Field(30.0, ge=0.0)
    roll_sigma: float = Field(10.0, ge=0.0)
    roll_limit: float = Field(45.0, ge=0.0)
    horizontal_bound: float = Field(5000.0, ge=0.0)
    altitude_bound: float = Field(1000.0, ge=0.0)
    local_time: FloatRange = Field(FloatRange(low=8.0, high=17.0))
    max_rejections: int = Field(10_000, gt=0)

    model_config = ConfigDict(frozen=True, extra="forbid")


class MdpConfig(BaseModel):
    """Grid, reward and dynamics parameters of the vertical avoidance MDP.

    Defaults are reconstructions in the spirit of open vertical logic tables,
    not published constants.
    """

    h_bound: float = Field(
        914.4, gt=0.0, description="Relative altitude grid spans +/- this, m"
    )
    h_points: int = Field(33, ge=2)
    dh_own_bound: float = Field(15.24, gt=0.0, description="m/s")
    dh_own_points: int = Field(9, ge=2)
    dh_int_bound: float = Field(10.0, gt=0.0, description="m/s")
    dh_int_points: int = Field(5, ge=2)
    tau_max: float = Field(40.0, gt=0.0, description="s")
    tau_points: int = Field(41, ge=2)
    h_grid: list[float] | None = Field(
        None, description="Explicit grid overriding bound/points"
    )
    dh_own_grid: list[float] | None = None
    dh_int_grid: list[float] | None = None
    tau_grid: list[float] | None = None
    discount: float = Field(1.0, gt=0.0, le=1.0)
    nmac_penalty: float = Field(-1.0, lt=0.0)
    alert_cost: float = Field(-0.005, le=0.0)
    reversal_cost: float = Field(-0.01, le=0.0)
    strengthen_cost: float = Field(-0.008, le=0.0)
    compliance_accel: float = Field(STANDARD_GRAVITY / 4.0, gt=0.0, description="m/s^2")
    intruder_accel: float = Field(
        1.0, ge=0.0, description="Magnitude of intruder rate noise, m/s^2"
    )
    intruder_accel_probs: tuple[float, float, float] = Field((0.25, 0.5, 0.25))
    dt: float = Field(1.0, gt=0.0)
    tolerance: float = Field(1e-6, gt=0.0)
    max_iterations: int = Field(500, gt=0)

    model_config = ConfigDict(frozen=True, extra="forbid")

    @model_validator(mode="after")
    def check_probabilities(self) -> MdpConfig:
        if any(p < 0.0 for p in self.intruder_accel_probs) or not math.isclose(
            sum(self.intruder_accel_probs), 1.0
        ):
            msg = "intruder_accel_probs must be non-negative and sum to 1"
            raise ValueError(msg)
        return self


class NoiseConfig(BaseModel):
    """Gaussian noise applied to detected intruder geometry."""

    enabled: bool = False
    bearing_sigma: float = Field(0.5, ge=0.0, description="Degrees")
    elevation_sigma: float = Field(0.5, ge=0.0, description="Degrees")
    range_sigma_fraction: float = Field(
        0.05, ge=0.0, description="Fraction of true range"
    )

    model_config = ConfigDict(frozen=True, extra="forbid")


class ExternalDetectorConfig(BaseModel):
    """Connection settings for an out-of-process detector."""

    endpoint: str | None = Field(
        None,
        description=(
            "'tcp://host:port' or 'exec:<command line>'; DAA_BENCH_DETECTOR overrides"
        ),
    )
    timeout: float = Field(5.0, gt=0.0, description="Seconds to wait for each response")
    on_timeout: Literal["warn", "fail"] = "warn"
    image_template: str | None = Field(
        None,
        description=(
            "Format string for the request image path, "
            "e.g. 'frames/{encounter_id}_{step}.png'"
        ),
    )

    model_config = ConfigDict(frozen=True, extra="forbid")


class PerceptionBackendKind(str, Enum):
    """Selectable perception backends."""

    PERFECT = "perfect"
    BLIND = "blind"
    STOCHASTIC = "stochastic"
    BOX = "box"
    EXTERNAL = "external"


class PerceptionConfig(BaseModel):
    """Which perception backend runs in the loop and how it is parameterized."""

    backend: PerceptionBackendKind = PerceptionBackendKind.PERFECT
    profile: DetectorProfile = Field(default_factory=DetectorProfile.baseline)
    probability_scale: float = Field(
        1.0, ge=0.0, description="Multiplies every detection probability"
    )
    noise: NoiseConfig = Field(default_factory=NoiseConfig)
    external: ExternalDetectorConfig = Field(default_factory=ExternalDetectorConfig)

    model_config = ConfigDict(frozen=True, extra="forbid")


def _simulation_camera() -> CameraModel:
    return CameraModel(horizontal_fov=100.0, image_width=1280, image_height=720)


class SimConfig(BaseModel):
    """Closed-loop stepping parameters."""

    dt: float = Field(1.0, gt=0.0, description="Decision interval, s")
    vertical_accel_limit: float = Field(2.45, gt=0.0, description="m/s^2")
    tau_max: float = Field(40.0, gt=0.0, description="Tau reported when not closing, s")
    closing_epsilon: float = Field(
        1e-6, ge=0.0, description="Minimum closing speed treated as closing, m/s"
    )
    camera: CameraModel = Field(default_factory=_simulation_camera)
    interpolate_nmac: bool = Field(
        False, description="Also test for NMAC between decision steps"
    )
    fail_fast: bool = Field(
        False, description="Abort a batch on the first encounter failure"
    )

    model_config = ConfigDict(frozen=True, extra="forbid")


class MetricsConfig(BaseModel):
    """Detection metric settings."""

    iou_threshold: float = Field(0.5, gt=0.0, le=1.0)
    confidence_threshold: float = Field(0.25, ge=0.0, le=1.0)
    ap_method: Literal["all_point", "101_point"] = "all_point"
    iou_mode: Literal["single", "coco"] = Field(
        "single", description="'coco' averages IoU 0.50:0.05:0.95"
    )

    model_config = ConfigDict(frozen=True, extra="forbid")


class DatasetConfig(BaseModel):
    """Synthetic dataset and metadata layout settings."""

    camera: CameraModel = Field(default_factory=CameraModel)
    class_id: int = Field(0, ge=0)
    label_decimals: int = Field(6, ge=1, le=12)
    metadata_key_map: dict[str, str] = Field(
        default_factory=dict, description="External metadata key -> toolkit key"
    )

    model_config = ConfigDict(frozen=True, extra="forbid")


class ToolkitConfig(BaseModel):
    """Top-level configuration document."""

    seed: int = Field(0, ge=0)
    encounters: EncounterConfig = Field(default_factory=EncounterConfig)
    scene: SceneConfig = Field(default_factory=SceneConfig)
    mdp: MdpConfig = Field(default_factory=MdpConfig)
    perception: PerceptionConfig = Field(default_factory=PerceptionConfig)
    simulation: SimConfig = Field(default_factory=SimConfig)
    metrics: MetricsConfig = Field(default_factory=MetricsConfig)
    dataset: DatasetConfig = Field(default_factory=DatasetConfig)

    model_config = ConfigDict(frozen=True, extra="forbid")


def require_ordered(name: str, bounds: FloatRange) -> FloatRange:
    """Re-check a range that may have bypassed validation."""
    if bounds.low > bounds.high:
        msg = (
            f"Invalid range for {name}: "
            f"minimum {bounds.low} exceeds maximum {bounds.high}"
        )
        raise ConfigError(msg)
    return bounds


def parse_config(data: Any, original_data: str | None = None) -> ToolkitConfig:
    """Validate a decoded configuration document.

    Raises:
        ConfigError: If the document is not a mapping or fails validation
    """
    if data is None:
        data = {}
    if not isinstance(data, dict):
        msg = f"Expected mapping at top level, got {type(data).__name__}"
        raise ConfigError(msg, original_data=original_data)
    try:
        return ToolkitConfig.model_validate(data)
    except PydanticValidationError as e:
        msg = "Configuration validation failed"
        raise ConfigError(
            msg,
            validation_errors=format_validation_errors(e.errors()),
            original_data=original_data,
        ) from e


def load_config(path: str | Path | None) -> ToolkitConfig:
    """Load a YAML or JSON configuration file; ``None`` yields the defaults.

    Raises:
        ConfigError: If the file cannot be read, decoded or validated
    """
    if path is None:
        return ToolkitConfig()
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        msg = f"Cannot read config file {path}: {e}"
        raise ConfigError(msg) from e
    try:
        data = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        msg = f"Failed to parse config file {path}: {e}"
        raise ConfigError(msg, original_data=text) from e
    return parse_config(data, original_data=text)
