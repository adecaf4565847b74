"""Per-image metadata documents (``<stem>.json`` beside each label file)."""

from __future__ import annotations

import json
from collections.abc import Mapping
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from pydantic import ValidationError as PydanticValidationError
from pydantic.alias_generators import to_camel

from ..config.settings import SceneConfig
from ..core.errors import SchemaError, format_validation_errors
from ..core.models import (
    AircraftState,
    AircraftType,
    BoundingBox,
    Conditions,
    Region,
    Weather,
)

_MINIMUM_RANGE = {
    aircraft: model.minimum for aircraft, model in SceneConfig().range_models.items()
}


class ImageMetadata(BaseModel):
    """Conditions and geometry behind one image.

    Keys are lowerCamelCase on disk. Unknown keys are kept and written back.
    """

    weather: Weather
    region: Region
    aircraft: AircraftType
    local_time: float = Field(..., ge=8.0, le=17.0, description="Hours")
    ownship_east: float = Field(..., description="m")
    ownship_north: float = Field(..., description="m")
    ownship_up: float = Field(..., description="m")
    heading: float = Field(..., description="Ownship heading, degrees")
    pitch: float = Field(0.0, description="Ownship pitch, degrees")
    roll: float = Field(0.0, description="Ownship roll, degrees")
    intruder_range: float = Field(..., gt=0.0, description="Slant range, m")
    intruder_vertical_offset: float = Field(
        ..., description="Intruder minus ownship altitude, m"
    )
    intruder_east: float | None = None
    intruder_north: float | None = None
    intruder_up: float | None = None
    intruder_heading: float = 0.0
    bbox: BoundingBox | None = None

    model_config = ConfigDict(
        frozen=True,
        extra="allow",
        alias_generator=to_camel,
        populate_by_name=True,
    )

    @field_validator("bbox", mode="before")
    @classmethod
    def accept_camel_box(cls, v: Any) -> Any:
        if isinstance(v, Mapping):
            renames = {
                "centerX": "center_x",
                "centerY": "center_y",
                "classId": "class_id",
            }
            return {renames.get(key, key): value for key, value in v.items()}
        return v

    @model_validator(mode="after")
    def check_range(self) -> ImageMetadata:
        minimum = _MINIMUM_RANGE[self.aircraft]
        if self.intruder_range <= minimum:
            msg = (
                f"intruder range {self.intruder_range} m must exceed "
                f"{minimum} m for {self.aircraft.value}"
            )
            raise ValueError(msg)
        return self

    @property
    def conditions(self) -> Conditions:
        return Conditions(
            weather=self.weather,
            region=self.region,
            aircraft=self.aircraft,
            local_time=self.local_time,
        )

    def ownship_state(self) -> AircraftState:
        return AircraftState(
            east=self.ownship_east,
            north=self.ownship_north,
            up=self.ownship_up,
            heading=self.heading,
            pitch=self.pitch,
            roll=self.roll,
        )

    def intruder_state(self) -> AircraftState | None:
        if (
            self.intruder_east is None
            or self.intruder_north is None
            or self.intruder_up is None
        ):
            return None
        return AircraftState(
            east=self.intruder_east,
            north=self.intruder_north,
            up=self.intruder_up,
            heading=self.intruder_heading,
        )


def apply_key_map(
    document: Mapping[str, Any], key_map: Mapping[str, str]
) -> dict[str, Any]:
    """Rename external keys to the toolkit's keys; unmapped keys pass through."""
    return {key_map.get(key, key): value for key, value in document.items()}


def parse_metadata(
    text: str, key_map: Mapping[str, str] | None = None
) -> ImageMetadata:
    """Parse and validate one metadata document.

    Raises:
        SchemaError: On invalid JSON, a missing field or a bad value; ``field``
            names the first offending key
    """
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        msg = f"Invalid metadata JSON: {e.msg}"
        raise SchemaError(msg, original_data=text) from e
    if not isinstance(document, dict):
        msg = f"Expected a JSON object, got {type(document).__name__}"
        raise SchemaError(msg, original_data=text)
    if key_map:
        document = apply_key_map(document, key_map)
    try:
        return ImageMetadata.model_validate(document)
    except PydanticValidationError as e:
        errors = e.errors()
        first = errors[0]
        field = ".".join(str(loc) for loc in first["loc"]) if first["loc"] else None
        if first["type"] == "missing":
            msg = f"Missing required field: {field}"
        elif field:
            msg = f"Invalid value for {field}: {first['msg']}"
        else:
            msg = str(first["msg"])
        raise SchemaError(
            msg,
            field=field,
            validation_errors=format_validation_errors(errors),
            original_data=text,
        ) from e


def write_metadata(metadata: ImageMetadata) -> str:
    """Serialize with lowerCamelCase keys, sorted, extras included."""
    document = metadata.model_dump(mode="json", by_alias=True)
    if document.get("bbox") is not None:
        document["bbox"] = {
            to_camel(key): value for key, value in document["bbox"].items()
        }
    return json.dumps(document, indent=2, sort_keys=True) + "\n"
