"""Perception backends: what the controller learns about the intruder each step."""

from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from collections.abc import Callable
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict

from ..config.settings import NoiseConfig, PerceptionBackendKind, PerceptionConfig
from ..core.geometry import (
    camera_relative_geometry,
    estimate_state_from_box,
    in_field_of_view,
    level_from_camera,
    project_to_image,
    relative_geometry,
)
from ..core.models import (
    AircraftClass,
    AircraftState,
    BoundingBox,
    CameraModel,
    Conditions,
    RelativeGeometry,
    aircraft_class,
    wrap_bearing,
)
from .profiles import DetectorProfile

logger = logging.getLogger(__name__)


class PerceptionSource(str, Enum):
    """Backend that produced an estimate."""

    PERFECT = "Perfect"
    STOCHASTIC = "Stochastic"
    BOX_GEOMETRY = "BoxGeometry"
    EXTERNAL = "External"


class IntruderEstimate(BaseModel):
    """What a detection hands to the controller."""

    rel: RelativeGeometry
    detected_box: BoundingBox | None = None
    source: PerceptionSource

    model_config = ConfigDict(frozen=True)


def apply_noise(
    rel: RelativeGeometry, noise: NoiseConfig, draws: np.ndarray
) -> RelativeGeometry:
    """Perturb bearing, elevation and slant range by standard-normal ``draws``."""
    scale = 1.0 + noise.range_sigma_fraction * float(draws[2])
    slant = max(rel.slant_range * scale, 0.0)
    elevation = math.radians(
        min(max(rel.elevation + noise.elevation_sigma * float(draws[1]), -90.0), 90.0)
    )
    return RelativeGeometry(
        horizontal_range=slant * math.cos(elevation),
        vertical_offset=slant * math.sin(elevation),
        bearing=wrap_bearing(rel.bearing + noise.bearing_sigma * float(draws[0])),
        elevation=math.degrees(elevation),
        horizontal_closing_speed=rel.horizontal_closing_speed,
    )


def assumed_aircraft(conditions: Conditions | None) -> AircraftClass:
    """Extents of the encounter's aircraft type, a Skyhawk when unknown."""
    if conditions is None:
        return aircraft_class("CessnaSkyhawk")
    return aircraft_class(conditions.aircraft)


def geometry_from_box(
    camera: CameraModel,
    box: BoundingBox,
    assumed: AircraftClass,
    ownship: AircraftState,
) -> RelativeGeometry:
    """Level-frame geometry recovered from a box and an assumed wingspan."""
    return level_from_camera(estimate_state_from_box(camera, box, assumed), ownship)


class PerceptionBackend(ABC):
    """Interface shared by every backend.

    Backends that draw random numbers take them only from the ``rng`` passed
    in, so a per-encounter generator makes them reproducible.
    """

    kind: PerceptionBackendKind

    def __init__(self, camera: CameraModel, noise: NoiseConfig | None = None) -> None:
        self.camera = camera
        self.noise = noise or NoiseConfig()

    @abstractmethod
    def perceive(
        self,
        ownship: AircraftState,
        intruder: AircraftState,
        conditions: Conditions | None,
        rng: np.random.Generator,
    ) -> IntruderEstimate | None:
        """Estimate for this step, or None when the intruder is not detected."""

    def in_view(self, ownship: AircraftState, intruder: AircraftState) -> bool:
        rel = camera_relative_geometry(ownship, intruder)
        return in_field_of_view(self.camera, rel)

    def _noisy(
        self, rel: RelativeGeometry, rng: np.random.Generator
    ) -> RelativeGeometry:
        if not self.noise.enabled:
            return rel
        return apply_noise(rel, self.noise, rng.standard_normal(3))

    def start_encounter(self, encounter_id: int) -> None:
        """Called before the first step of each encounter."""

    def close(self) -> None:
        """Release external resources; no-op for in-process backends."""

    def __enter__(self) -> PerceptionBackend:
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.close()


class PerfectPerception(PerceptionBackend):
    """Oracle: truth geometry whenever the intruder is in view."""

    kind = PerceptionBackendKind.PERFECT

    def perceive(self, ownship, intruder, conditions, rng):  # type: ignore[no-untyped-def]
        if not self.in_view(ownship, intruder):
            return None
        rel = self._noisy(relative_geometry(ownship, intruder), rng)
        return IntruderEstimate(rel=rel, source=PerceptionSource.PERFECT)


class BlindPerception(PerceptionBackend):
    """Never detects anything."""

    kind = PerceptionBackendKind.BLIND

    def perceive(self, ownship, intruder, conditions, rng):  # type: ignore[no-untyped-def]
        return None


class StochasticPerception(PerceptionBackend):
    """Bernoulli detection calibrated by a ``DetectorProfile``.

    One uniform is drawn every step, in view or not, and the intruder is
    detected when it is in view and the uniform falls below the detection
    probability. Raising probabilities can therefore only add detections.
    """

    kind = PerceptionBackendKind.STOCHASTIC

    def __init__(
        self,
        camera: CameraModel,
        profile: DetectorProfile | None = None,
        probability_scale: float = 1.0,
        noise: NoiseConfig | None = None,
    ) -> None:
        super().__init__(camera, noise)
        self.profile = profile or DetectorProfile.baseline()
        self.probability_scale = probability_scale

    def detection_probability(
        self, rel: RelativeGeometry, conditions: Conditions | None
    ) -> float:
        return self.profile.probability(
            rel.slant_range, conditions, self.probability_scale
        )

    def perceive(self, ownship, intruder, conditions, rng):  # type: ignore[no-untyped-def]
        draw = float(rng.uniform())
        rel = relative_geometry(ownship, intruder)
        noisy = self._noisy(rel, rng)
        if not self.in_view(ownship, intruder):
            return None
        if draw >= self.detection_probability(rel, conditions):
            return None
        return IntruderEstimate(rel=noisy, source=PerceptionSource.STOCHASTIC)


class BoxGeometryPerception(PerceptionBackend):
    """Project the truth to a box, then recover geometry from the box alone.

    The range comes from the box width and the wingspan of the encounter's
    aircraft type, so the estimate carries the projection round-trip error.
    """

    kind = PerceptionBackendKind.BOX

    def perceive(self, ownship, intruder, conditions, rng):  # type: ignore[no-untyped-def]
        assumed = assumed_aircraft(conditions)
        box = project_to_image(self.camera, ownship, intruder, assumed)
        if box is None:
            return None
        rel = geometry_from_box(self.camera, box, assumed, ownship)
        return IntruderEstimate(
            rel=self._noisy(rel, rng),
            detected_box=box,
            source=PerceptionSource.BOX_GEOMETRY,
        )


def _external(config: PerceptionConfig, camera: CameraModel) -> PerceptionBackend:
    from .external import ExternalDetector

    return ExternalDetector.from_config(config.external, camera)


BackendFactory = Callable[[PerceptionConfig, CameraModel], PerceptionBackend]

BACKEND_REGISTRY: dict[PerceptionBackendKind, BackendFactory] = {
    PerceptionBackendKind.PERFECT: lambda config, camera: PerfectPerception(
        camera, config.noise
    ),
    PerceptionBackendKind.BLIND: lambda config, camera: BlindPerception(camera),
    PerceptionBackendKind.STOCHASTIC: lambda config, camera: StochasticPerception(
        camera, config.profile, config.probability_scale, config.noise
    ),
    PerceptionBackendKind.BOX: lambda config, camera: BoxGeometryPerception(
        camera, config.noise
    ),
    PerceptionBackendKind.EXTERNAL: _external,
}


def create_backend(config: PerceptionConfig, camera: CameraModel) -> PerceptionBackend:
    """Instantiate the configured backend.

    The external backend connects to its endpoint here, so each worker
    process calls this once.
    """
    return BACKEND_REGISTRY[config.backend](config, camera)
