"""Simulation records."""

from __future__ import annotations

from typing import Any

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..cas.advisories import Advisory
from ..core.models import AircraftState, Conditions


class StepRecord(BaseModel):
    """Truth and controller output at one decision step."""

    time: float = Field(..., ge=0.0)
    ownship: AircraftState
    intruder: AircraftState
    detected: bool
    advisory: Advisory
    commanded_rate: float | None = Field(
        None, description="Rate the ownship steers toward, m/s"
    )
    vertical_rate: float = Field(
        ..., description="Ownship rate after applying the command, m/s"
    )
    horizontal_separation: float = Field(..., ge=0.0)
    vertical_separation: float

    model_config = ConfigDict(frozen=True)


class EncounterResult(BaseModel):
    """Outcome of one closed-loop encounter."""

    encounter_id: int = Field(..., ge=0)
    seed: int = Field(..., ge=0)
    steps: tuple[StepRecord, ...] = ()
    nmac: bool
    min_horizontal_sep: float = Field(..., ge=0.0)
    min_vertical_sep_at_min_horizontal: float = Field(..., ge=0.0)
    alert_steps: int = Field(..., ge=0)
    total_steps: int = Field(..., ge=0)
    conditions: Conditions | None = None

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def check_counts(self) -> EncounterResult:
        if self.alert_steps > self.total_steps:
            msg = "alert_steps cannot exceed total_steps"
            raise ValueError(msg)
        return self


class EncounterFailure(BaseModel):
    """An encounter that raised instead of producing a result."""

    encounter_id: int
    step_index: int | None = None
    error_type: str
    message: str

    model_config = ConfigDict(frozen=True)


class BatchResult(BaseModel):
    """All results of a batch, ordered by encounter id."""

    results: tuple[EncounterResult, ...] = ()
    failures: tuple[EncounterFailure, ...] = ()
    master_seed: int = 0
    config: dict[str, Any] = Field(
        default_factory=dict, description="Snapshot of the configuration used"
    )

    model_config = ConfigDict(frozen=True)
