"""Encounter, feature and scene records."""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..core.models import AircraftState, Conditions


class EncounterFeatures(BaseModel):
    """Features that fully determine the relative trajectories of an encounter."""

    ownship_speed: float = Field(..., gt=0.0, description="m/s")
    intruder_speed: float = Field(..., gt=0.0, description="m/s")
    hmd: float = Field(..., ge=0.0, description="Horizontal miss distance at CPA, m")
    vmd: float = Field(..., description="Intruder minus ownship altitude at CPA, m")
    relative_heading: float = Field(
        ..., description="Intruder heading minus ownship heading, degrees"
    )

    model_config = ConfigDict(frozen=True)


class Encounter(BaseModel):
    """Paired scripted trajectories sampled at a fixed interval."""

    encounter_id: int = Field(0, ge=0)
    seed: int = Field(
        0, ge=0, description="Seed owning every random draw of this encounter"
    )
    ownship_script: tuple[AircraftState, ...] = Field(..., min_length=2)
    intruder_script: tuple[AircraftState, ...] = Field(..., min_length=2)
    duration: float = Field(50.0, gt=0.0, description="s")
    cpa_time: float = Field(40.0, gt=0.0, description="s")
    dt: float = Field(1.0, gt=0.0, description="s")
    features: EncounterFeatures
    conditions: Conditions | None = None
    placed: bool = False

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def check_scripts(self) -> Encounter:
        if len(self.ownship_script) != len(self.intruder_script):
            msg = "Ownship and intruder scripts must have the same length"
            raise ValueError(msg)
        if not 0.0 < self.cpa_time < self.duration:
            msg = "cpa_time must lie strictly inside the encounter"
            raise ValueError(msg)
        return self

    @property
    def n_steps(self) -> int:
        return len(self.ownship_script)

    @property
    def times(self) -> list[float]:
        return [k * self.dt for k in range(self.n_steps)]


class SceneSpec(BaseModel):
    """A single-image scene: ownship pose plus where the intruder sits in view."""

    ownship: AircraftState
    intruder_range: float = Field(..., gt=0.0, description="Slant range, m")
    intruder_bearing_frac: float = Field(
        ..., ge=0.0, le=1.0, description="Horizontal image fraction"
    )
    intruder_elevation_frac: float = Field(
        ..., ge=0.0, le=1.0, description="Vertical image fraction, top = 0"
    )
    intruder_heading: float = Field(0.0, description="Degrees")
    conditions: Conditions

    model_config = ConfigDict(frozen=True)
