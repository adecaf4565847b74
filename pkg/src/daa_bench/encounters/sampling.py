"""Sampling of encounter features, environmental conditions and image scenes."""

from __future__ import annotations

import itertools

import numpy as np

from ..config.settings import EncounterConfig, SceneConfig, require_ordered
from ..core.errors import ConfigError
from ..core.geometry import state_from_image_point
from ..core.models import (
    TIME_WINDOW_BOUNDS,
    AircraftState,
    AircraftType,
    CameraModel,
    ConditionCell,
    Conditions,
    Region,
    TimeWindow,
    Weather,
)
from .models import EncounterFeatures, SceneSpec


def sample_features(
    rng: np.random.Generator, config: EncounterConfig
) -> EncounterFeatures:
    """Draw each encounter feature independently and uniformly from its range.

    Raises:
        ConfigError: If a configured range has minimum above maximum
    """
    names = ("ownship_speed", "intruder_speed", "hmd", "vmd", "relative_heading")
    ranges = {name: require_ordered(name, getattr(config, name)) for name in names}
    return EncounterFeatures(
        **{name: float(rng.uniform(r.low, r.high)) for name, r in ranges.items()}
    )


def condition_grid() -> list[ConditionCell]:
    """The full factorial grid: 6 weather x 4 regions x 4 time windows x 3 aircraft."""
    return [
        ConditionCell(weather=weather, region=region, window=window, aircraft=aircraft)
        for weather, region, window, aircraft in itertools.product(
            Weather, Region, TimeWindow, AircraftType
        )
    ]


def sample_conditions(
    rng: np.random.Generator,
    config: SceneConfig | None = None,
    cell: ConditionCell | None = None,
) -> Conditions:
    """Draw environmental conditions.

    With ``cell`` the categorical facets are fixed and only the local time is
    drawn, uniformly inside the cell's time window; otherwise every facet is
    drawn i.i.d. and the time uniformly over the configured day range.
    """
    config = config or SceneConfig()
    if cell is not None:
        start, end = TIME_WINDOW_BOUNDS[cell.window]
        return Conditions(
            weather=cell.weather,
            region=cell.region,
            aircraft=cell.aircraft,
            local_time=float(rng.uniform(start, end)),
        )
    day = require_ordered("local_time", config.local_time)
    weathers, regions, aircraft = list(Weather), list(Region), list(AircraftType)
    return Conditions(
        weather=weathers[int(rng.integers(len(weathers)))],
        region=regions[int(rng.integers(len(regions)))],
        aircraft=aircraft[int(rng.integers(len(aircraft)))],
        local_time=float(rng.uniform(day.low, day.high)),
    )


def sample_intruder_range(
    rng: np.random.Generator, aircraft: AircraftType, config: SceneConfig
) -> float:
    """Gamma-distributed slant range, redrawn until above the class minimum.

    Raises:
        ConfigError: If no acceptable draw appears within ``max_rejections``
    """
    model = config.range_models[aircraft]
    for _ in range(config.max_rejections):
        value = float(rng.gamma(model.shape, model.scale))
        if value > model.minimum:
            return value
    msg = f"Gamma({model.shape}, {model.scale}) never exceeded {model.minimum} m"
    raise ConfigError(msg)


def _clipped_normal(rng: np.random.Generator, sigma: float, limit: float) -> float:
    return float(np.clip(rng.normal(0.0, sigma), -limit, limit))


def sample_image_scene(
    rng: np.random.Generator,
    config: SceneConfig | None = None,
    conditions: Conditions | None = None,
) -> SceneSpec:
    """Sample one image scene: ownship pose, intruder range and in-view placement.

    Args:
        rng: Random generator owning every draw
        config: Scene distributions; defaults reproduce the dataset's table
        conditions: Fixed conditions (stratified generation); drawn when None

    Returns:
        Scene whose intruder sits uniformly inside the ownship field of view
    """
    config = config or SceneConfig()
    if conditions is None:
        conditions = sample_conditions(rng, config)
    ownship = AircraftState(
        east=float(rng.uniform(-config.horizontal_bound, config.horizontal_bound)),
        north=float(rng.uniform(-config.horizontal_bound, config.horizontal_bound)),
        up=float(rng.uniform(-config.altitude_bound, config.altitude_bound)),
        heading=float(rng.uniform(0.0, 360.0)),
        pitch=_clipped_normal(rng, config.pitch_sigma, config.pitch_limit),
        roll=_clipped_normal(rng, config.roll_sigma, config.roll_limit),
    )
    return SceneSpec(
        ownship=ownship,
        intruder_range=sample_intruder_range(rng, conditions.aircraft, config),
        intruder_bearing_frac=float(rng.uniform(0.0, 1.0)),
        intruder_elevation_frac=float(rng.uniform(0.0, 1.0)),
        intruder_heading=float(rng.uniform(0.0, 360.0)),
        conditions=conditions,
    )


def scene_intruder_state(scene: SceneSpec, cam: CameraModel) -> AircraftState:
    """Place the intruder of a scene in the local frame."""
    position = state_from_image_point(
        cam,
        scene.ownship,
        scene.intruder_bearing_frac,
        scene.intruder_elevation_frac,
        scene.intruder_range,
    )
    return AircraftState(
        east=float(position[0]),
        north=float(position[1]),
        up=float(position[2]),
        heading=scene.intruder_heading,
    )
