"""Closed-loop encounter simulation: perception, policy lookup and vertical dynamics."""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from multiprocessing.util import Finalize
from typing import Any

import numpy as np

from ..cas.advisories import (
    Advisory,
    VerticalCommand,
    advisory_command,
    next_vertical_rate,
)
from ..cas.mdp import CasState, compute_tau
from ..cas.table import PolicyTable, query_policy
from ..config.settings import PerceptionConfig, SimConfig
from ..core.errors import ConfigError, DaaBenchError, PerceptionError, SimulationError
from ..core.geometry import relative_geometry
from ..core.models import AircraftState
from ..encounters.models import Encounter
from ..metrics.safety import is_nmac, segment_has_nmac
from ..perception.backends import IntruderEstimate, PerceptionBackend, create_backend
from ..utils.rng import RngStream, stream_rng
from .models import BatchResult, EncounterFailure, EncounterResult, StepRecord

logger = logging.getLogger(__name__)


def step_ownship(
    state: AircraftState,
    command: VerticalCommand,
    dt: float,
    accel_limit: float,
    scripted_next: AircraftState | None = None,
) -> AircraftState:
    """Advance the ownship one step under a vertical command.

    The vertical rate moves toward the command by at most ``accel_limit * dt``
    and altitude integrates the old and new rates with the trapezoid rule. An
    unconstrained command steers back to the scripted rate. Horizontal motion
    comes from ``scripted_next`` when given, otherwise it continues along the
    current heading.
    """
    if dt <= 0.0:
        msg = f"dt must be positive, got {dt}"
        raise ValueError(msg)
    nominal = scripted_next.vertical_rate if scripted_next is not None else 0.0
    rate = next_vertical_rate(state.vertical_rate, command, accel_limit, dt, nominal)
    altitude = state.up + dt * (state.vertical_rate + rate) / 2.0
    if scripted_next is not None:
        return scripted_next.model_copy(update={"up": altitude, "vertical_rate": rate})
    heading = math.radians(state.heading)
    return state.model_copy(
        update={
            "east": state.east + dt * state.ground_speed * math.sin(heading),
            "north": state.north + dt * state.ground_speed * math.cos(heading),
            "up": altitude,
            "vertical_rate": rate,
        }
    )


class _Tracker:
    """Closing speed and intruder rate from consecutive detections."""

    def __init__(self) -> None:
        self.last: tuple[float, float, float, float] | None = None

    def update(
        self, time: float, estimate: IntruderEstimate, ownship_altitude: float
    ) -> tuple[float, float]:
        rel = estimate.rel
        closing, intruder_rate = 0.0, 0.0
        if self.last is not None:
            last_time, last_range, last_offset, last_altitude = self.last
            elapsed = time - last_time
            closing = (last_range - rel.horizontal_range) / elapsed
            climb = (rel.vertical_offset - last_offset) + (
                ownship_altitude - last_altitude
            )
            intruder_rate = climb / elapsed
        self.last = (time, rel.horizontal_range, rel.vertical_offset, ownship_altitude)
        return closing, intruder_rate


def run_encounter(
    encounter: Encounter,
    perception: PerceptionBackend,
    policy: PolicyTable | None,
    config: SimConfig | None = None,
    rng: np.random.Generator | None = None,
) -> EncounterResult:
    """Fly one encounter in closed loop.

    Args:
        encounter: Scripted trajectories; the ownship follows its script
            horizontally and the controller vertically
        perception: Backend deciding what the controller sees
        policy: Solved table, or None for an unequipped ownship (always COC)
        config: Step size, dynamics and NMAC checking
        rng: Perception randomness; defaults to the encounter's own stream

    Raises:
        SimulationError: If perception fails hard, tagged with the step index
    """
    config = config or SimConfig()
    if not math.isclose(config.dt, encounter.dt):
        msg = (
            f"Simulation dt {config.dt} does not match "
            f"the encounter script interval {encounter.dt}"
        )
        raise ConfigError(msg)
    rng = rng if rng is not None else stream_rng(encounter.seed, RngStream.PERCEPTION)
    perception.start_encounter(encounter.encounter_id)

    ownship = encounter.ownship_script[0]
    previous = Advisory.COC
    tracker = _Tracker()
    steps: list[StepRecord] = []
    nmac = False
    alert_steps = 0
    min_horizontal = math.inf
    vertical_at_min = math.inf
    last_offset: np.ndarray | None = None

    for k, intruder in enumerate(encounter.intruder_script):
        time = k * encounter.dt
        truth = relative_geometry(ownship, intruder)
        offset = intruder.position - ownship.position
        if is_nmac(truth) or (
            config.interpolate_nmac
            and last_offset is not None
            and segment_has_nmac(last_offset, offset)
        ):
            nmac = True
        last_offset = offset
        if truth.horizontal_range < min_horizontal:
            min_horizontal = truth.horizontal_range
            vertical_at_min = abs(truth.vertical_offset)

        try:
            estimate = perception.perceive(ownship, intruder, encounter.conditions, rng)
        except PerceptionError as e:
            raise SimulationError(str(e), encounter.encounter_id, k) from e

        advisory = Advisory.COC
        if estimate is not None:
            closing, intruder_rate = tracker.update(time, estimate, ownship.up)
            rel = estimate.rel.model_copy(update={"horizontal_closing_speed": closing})
            if policy is not None:
                state = CasState(
                    h=rel.vertical_offset,
                    dh_own=ownship.vertical_rate,
                    dh_int=intruder_rate,
                    tau=compute_tau(rel, config),
                    prev_advisory=previous,
                )
                advisory = query_policy(policy, state)
        command = advisory_command(advisory, ownship.vertical_rate)
        alert_steps += advisory.is_alert

        scripted_next = (
            encounter.ownship_script[k + 1] if k + 1 < encounter.n_steps else None
        )
        following = step_ownship(
            ownship, command, encounter.dt, config.vertical_accel_limit, scripted_next
        )
        nominal = scripted_next.vertical_rate if scripted_next is not None else 0.0
        steps.append(
            StepRecord(
                time=time,
                ownship=ownship,
                intruder=intruder,
                detected=estimate is not None,
                advisory=advisory,
                commanded_rate=command.desired_rate(ownship.vertical_rate, nominal),
                vertical_rate=following.vertical_rate,
                horizontal_separation=truth.horizontal_range,
                vertical_separation=truth.vertical_offset,
            )
        )
        ownship = following
        previous = advisory

    return EncounterResult(
        encounter_id=encounter.encounter_id,
        seed=encounter.seed,
        steps=tuple(steps),
        nmac=nmac,
        min_horizontal_sep=min_horizontal,
        min_vertical_sep_at_min_horizontal=vertical_at_min,
        alert_steps=alert_steps,
        total_steps=len(steps),
        conditions=encounter.conditions,
    )


def _failure(encounter: Encounter, error: DaaBenchError) -> EncounterFailure:
    return EncounterFailure(
        encounter_id=encounter.encounter_id,
        step_index=getattr(error, "step_index", None),
        error_type=type(error).__name__,
        message=str(error),
    )


def _run_guarded(
    encounter: Encounter,
    perception: PerceptionBackend,
    policy: PolicyTable | None,
    config: SimConfig,
) -> EncounterResult | EncounterFailure:
    try:
        return run_encounter(encounter, perception, policy, config)
    except DaaBenchError as e:
        if config.fail_fast:
            raise
        logger.warning("Encounter %d failed: %s", encounter.encounter_id, e)
        return _failure(encounter, e)


_worker_state: dict[str, Any] = {}


def _init_worker(
    perception_config: PerceptionConfig, policy: PolicyTable | None, config: SimConfig
) -> None:
    backend = create_backend(perception_config, config.camera)
    _worker_state["perception"] = backend
    _worker_state["policy"] = policy
    _worker_state["config"] = config
    # Pool workers leave through os._exit, which skips atexit; finalizers still run.
    _worker_state["finalizer"] = Finalize(backend, backend.close, exitpriority=10)


def _run_in_worker(encounter: Encounter) -> EncounterResult | EncounterFailure:
    return _run_guarded(
        encounter,
        _worker_state["perception"],
        _worker_state["policy"],
        _worker_state["config"],
    )


def run_batch(
    encounters: Sequence[Encounter],
    perception: PerceptionConfig,
    policy: PolicyTable | None,
    config: SimConfig | None = None,
    workers: int = 1,
    master_seed: int = 0,
    config_snapshot: dict[str, Any] | None = None,
) -> BatchResult:
    """Run encounters, optionally across worker processes.

    Every encounter draws perception randomness from its own seed, so results
    do not depend on ``workers`` or scheduling. Failures are collected in
    ``BatchResult.failures`` unless ``config.fail_fast`` is set.
    """
    config = config or SimConfig()
    if workers < 1:
        msg = f"workers must be at least 1, got {workers}"
        raise ConfigError(msg)
    ordered = sorted(encounters, key=lambda e: e.encounter_id)
    outcomes: list[EncounterResult | EncounterFailure] = []
    if ordered and workers == 1:
        with create_backend(perception, config.camera) as backend:
            outcomes = [_run_guarded(e, backend, policy, config) for e in ordered]
    elif ordered:
        chunksize = max(1, len(ordered) // (workers * 4))
        with ProcessPoolExecutor(
            max_workers=workers,
            initializer=_init_worker,
            initargs=(perception, policy, config),
        ) as pool:
            outcomes = list(pool.map(_run_in_worker, ordered, chunksize=chunksize))

    results = tuple(o for o in outcomes if isinstance(o, EncounterResult))
    failures = tuple(o for o in outcomes if isinstance(o, EncounterFailure))
    logger.info("Simulated %d encounters (%d failed)", len(results), len(failures))
    return BatchResult(
        results=results,
        failures=failures,
        master_seed=master_seed,
        config=config_snapshot or {},
    )
