"""Straight-line trajectory construction, placement and batch generation."""

from __future__ import annotations

import logging
import math
from typing import Literal

import numpy as np

from ..config.settings import EncounterConfig, PlacementConfig, SceneConfig
from ..core.models import AircraftState, ConditionCell
from ..utils.rng import RngStream, encounter_seed, stream_rng
from .models import Encounter, EncounterFeatures
from .sampling import condition_grid, sample_conditions, sample_features

logger = logging.getLogger(__name__)


def build_trajectories(
    features: EncounterFeatures,
    duration: float = 50.0,
    cpa_time: float = 40.0,
    dt: float = 1.0,
    intruder_vertical_rate: float = 0.0,
    encounter_id: int = 0,
    seed: int = 0,
) -> Encounter:
    """Construct level straight-line scripts meeting the features exactly at CPA.

    The ownship flies north through the origin at ``cpa_time``. The intruder
    passes ``hmd`` meters to the side of the relative-motion line, so the
    horizontal separation is minimal at ``cpa_time`` and equal to ``hmd``; its
    altitude offset at that instant is ``vmd``.

    Raises:
        ValueError: If ``cpa_time`` is not strictly inside ``(0, duration)``
    """
    if not 0.0 < cpa_time < duration:
        msg = f"cpa_time {cpa_time} must lie strictly inside (0, {duration})"
        raise ValueError(msg)
    heading = math.radians(features.relative_heading)
    v_own = np.array([0.0, features.ownship_speed])
    v_int = features.intruder_speed * np.array([math.sin(heading), math.cos(heading)])
    v_rel = v_int - v_own
    speed_rel = float(np.hypot(*v_rel))
    if speed_rel > 0.0:
        side = np.array([v_rel[1], -v_rel[0]]) / speed_rel
    else:
        side = np.array([1.0, 0.0])
    intruder_at_cpa = features.hmd * side

    n_steps = round(duration / dt) + 1
    ownship_script = []
    intruder_script = []
    for k in range(n_steps):
        elapsed = k * dt - cpa_time
        own = v_own * elapsed
        intr = intruder_at_cpa + v_int * elapsed
        ownship_script.append(
            AircraftState(
                east=float(own[0]),
                north=float(own[1]),
                up=0.0,
                heading=0.0,
                ground_speed=features.ownship_speed,
            )
        )
        intruder_script.append(
            AircraftState(
                east=float(intr[0]),
                north=float(intr[1]),
                up=features.vmd + intruder_vertical_rate * elapsed,
                heading=features.relative_heading,
                ground_speed=features.intruder_speed,
                vertical_rate=intruder_vertical_rate,
            )
        )
    return Encounter(
        encounter_id=encounter_id,
        seed=seed,
        ownship_script=tuple(ownship_script),
        intruder_script=tuple(intruder_script),
        duration=duration,
        cpa_time=cpa_time,
        dt=dt,
        features=features,
    )


def _place_state(
    state: AircraftState, rotation: float, shift: np.ndarray
) -> AircraftState:
    c, s = math.cos(rotation), math.sin(rotation)
    east = state.east * c + state.north * s + shift[0]
    north = -state.east * s + state.north * c + shift[1]
    return state.model_copy(
        update={
            "east": float(east),
            "north": float(north),
            "up": float(state.up + shift[2]),
            "heading": AircraftState.normalize_heading(
                state.heading + math.degrees(rotation)
            ),
        }
    )


def place_in_region(
    encounter: Encounter,
    rng: np.random.Generator,
    config: PlacementConfig | None = None,
) -> Encounter:
    """Apply one shared rotation about the vertical axis and one shared shift.

    Relative geometry at every step is unchanged by construction.

    Raises:
        ValueError: If the encounter has already been placed
    """
    if encounter.placed:
        msg = f"Encounter {encounter.encounter_id} is already placed"
        raise ValueError(msg)
    config = config or PlacementConfig()
    rotation = math.radians(
        float(rng.uniform(config.rotation.low, config.rotation.high))
    )
    shift = np.array(
        [
            rng.uniform(-config.horizontal_bound, config.horizontal_bound),
            rng.uniform(-config.horizontal_bound, config.horizontal_bound),
            rng.uniform(-config.altitude_bound, config.altitude_bound),
        ],
        dtype=float,
    )
    return encounter.model_copy(
        update={
            "ownship_script": tuple(
                _place_state(s, rotation, shift) for s in encounter.ownship_script
            ),
            "intruder_script": tuple(
                _place_state(s, rotation, shift) for s in encounter.intruder_script
            ),
            "placed": True,
        }
    )


def sample_encounter(
    index: int,
    master_seed: int,
    config: EncounterConfig | None = None,
    scene_config: SceneConfig | None = None,
    cell: ConditionCell | None = None,
) -> Encounter:
    """Sample, build, place and condition encounter ``index`` of a batch."""
    config = config or EncounterConfig()
    seed = encounter_seed(master_seed, index)
    features = sample_features(stream_rng(seed, RngStream.GEOMETRY), config)
    encounter = build_trajectories(
        features,
        duration=config.duration,
        cpa_time=config.cpa_time,
        dt=config.dt,
        intruder_vertical_rate=config.intruder_vertical_rate,
        encounter_id=index,
        seed=seed,
    )
    placed = place_in_region(
        encounter, stream_rng(seed, RngStream.PLACEMENT), config.placement
    )
    conditions = sample_conditions(
        stream_rng(seed, RngStream.CONDITIONS), scene_config, cell
    )
    return placed.model_copy(update={"conditions": conditions})


def generate_encounters(
    master_seed: int,
    config: EncounterConfig | None = None,
    grid: Literal["factorial", "iid"] = "factorial",
    n: int | None = None,
    scene_config: SceneConfig | None = None,
) -> list[Encounter]:
    """Generate a batch of placed encounters with conditions attached.

    Args:
        master_seed: Seed from which every encounter seed is split
        config: Encounter feature ranges and timing
        grid: ``factorial`` gives ``per_cell`` encounters for each of the 288
            condition cells; ``iid`` draws conditions independently
        n: Number of encounters for ``iid``; for ``factorial`` it must equal
            288 x per_cell when given
        scene_config: Supplies the local-time range for i.i.d. conditions

    Returns:
        Encounters ordered by id
    """
    config = config or EncounterConfig()
    if grid == "factorial":
        cells = condition_grid()
        per_cell = config.per_cell
        if n is not None:
            if n % len(cells) != 0:
                msg = (
                    "Factorial generation needs a multiple of "
                    f"{len(cells)} encounters, got {n}"
                )
                raise ValueError(msg)
            per_cell = n // len(cells)
        encounters = [
            sample_encounter(i * per_cell + j, master_seed, config, scene_config, cell)
            for i, cell in enumerate(cells)
            for j in range(per_cell)
        ]
    else:
        if n is None or n < 0:
            msg = "i.i.d. generation needs a non-negative encounter count"
            raise ValueError(msg)
        encounters = [
            sample_encounter(i, master_seed, config, scene_config) for i in range(n)
        ]
    logger.info(
        "Generated %d encounters (%s grid, seed %d)", len(encounters), grid, master_seed
    )
    return encounters
