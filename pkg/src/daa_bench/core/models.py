"""Core value types and closed enumerations for daa-bench."""

from __future__ import annotations

import math
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

NMAC_HORIZONTAL_M = 152.4
NMAC_VERTICAL_M = 30.48
FEET_PER_MINUTE = 0.00508  # m/s


class Weather(str, Enum):
    """Cloud cover conditions rendered in the dataset."""

    CLEAR = "Clear"
    HIGH_CIRRUS = "HighCirrus"
    SCATTERED = "Scattered"
    BROKEN = "Broken"
    OVERCAST = "Overcast"
    STRATUS = "Stratus"


class Region(str, Enum):
    """Airport regions the encounters are placed around."""

    PAO = "PAO"
    BOS = "BOS"
    OSH = "OSH"
    RNO = "RNO"


class AircraftType(str, Enum):
    """Intruder aircraft types."""

    CESSNA_SKYHAWK = "CessnaSkyhawk"
    BOEING_737 = "Boeing737"
    KING_AIR_C90 = "KingAirC90"


class TimeWindow(str, Enum):
    """Local time-of-day windows used for slicing."""

    MORNING = "Morning"
    MIDDAY = "Midday"
    AFTERNOON = "Afternoon"
    LATE_AFTERNOON = "LateAfternoon"


class RangeBucket(str, Enum):
    """Intruder range buckets, half-open and ascending."""

    NEAR = "0-150m"
    MID = "150-500m"
    FAR = ">500m"


class RelativeAltitude(str, Enum):
    """Whether the intruder is below or above the ownship."""

    BELOW = "Below"
    ABOVE = "Above"


# (start, end) in local hours; the last window is closed on the right.
TIME_WINDOW_BOUNDS: dict[TimeWindow, tuple[float, float]] = {
    TimeWindow.MORNING: (8.0, 10.0),
    TimeWindow.MIDDAY: (10.0, 13.0),
    TimeWindow.AFTERNOON: (13.0, 15.0),
    TimeWindow.LATE_AFTERNOON: (15.0, 17.0),
}


def time_window(local_time: float) -> TimeWindow:
    """Map a local time in hours to its slicing window."""
    for window, (start, end) in TIME_WINDOW_BOUNDS.items():
        if start <= local_time < end:
            return window
    if local_time == TIME_WINDOW_BOUNDS[TimeWindow.LATE_AFTERNOON][1]:
        return TimeWindow.LATE_AFTERNOON
    msg = f"Local time {local_time} outside [8, 17]"
    raise ValueError(msg)


def range_bucket(range_m: float) -> RangeBucket:
    """Map an intruder range to its bucket ([0,150), [150,500), [500,inf))."""
    if range_m < 150.0:
        return RangeBucket.NEAR
    if range_m < 500.0:
        return RangeBucket.MID
    return RangeBucket.FAR


def relative_altitude(vertical_offset: float) -> RelativeAltitude:
    """Intruders at or above the ownship altitude count as Above."""
    return RelativeAltitude.BELOW if vertical_offset < 0.0 else RelativeAltitude.ABOVE


def wrap_bearing(degrees: float) -> float:
    """Wrap an angle to (-180, 180]."""
    wrapped = math.fmod(degrees + 180.0, 360.0)
    if wrapped <= 0.0:
        wrapped += 360.0
    return wrapped - 180.0


class AircraftState(BaseModel):
    """Kinematic state of one aircraft in a local east-north-up frame."""

    east: float = Field(0.0, description="East position in meters")
    north: float = Field(0.0, description="North position in meters")
    up: float = Field(0.0, description="Altitude in meters")
    heading: float = Field(
        0.0, description="Heading in degrees clockwise from north, [0, 360)"
    )
    pitch: float = Field(0.0, description="Pitch in degrees, nose up positive")
    roll: float = Field(0.0, description="Roll in degrees, right wing down positive")
    ground_speed: float = Field(0.0, ge=0.0, description="Horizontal speed in m/s")
    vertical_rate: float = Field(
        0.0, description="Vertical rate in m/s, climb positive"
    )

    model_config = ConfigDict(frozen=True)

    @field_validator("heading")
    @classmethod
    def normalize_heading(cls, v: float) -> float:
        heading = math.fmod(v, 360.0)
        if heading < 0.0:
            heading += 360.0
        return 0.0 if heading >= 360.0 else heading

    @property
    def position(self) -> np.ndarray:
        """Position as an ENU vector."""
        return np.array([self.east, self.north, self.up])

    @property
    def velocity(self) -> np.ndarray:
        """Velocity as an ENU vector."""
        heading = math.radians(self.heading)
        return np.array(
            [
                self.ground_speed * math.sin(heading),
                self.ground_speed * math.cos(heading),
                self.vertical_rate,
            ]
        )


class RelativeGeometry(BaseModel):
    """Intruder position relative to the ownship.

    Bearing and elevation are measured in whichever frame produced the
    geometry: the heading-aligned level frame for ``relative_geometry`` or the
    ownship body frame for ``camera_relative_geometry``.
    """

    horizontal_range: float = Field(
        ..., ge=0.0, description="Planar distance in meters"
    )
    vertical_offset: float = Field(
        ..., description="Intruder minus ownship altitude in meters"
    )
    bearing: float = Field(
        0.0, description="Degrees from the forward axis, right positive, (-180, 180]"
    )
    elevation: float = Field(
        0.0, description="Degrees above the horizontal plane of the frame"
    )
    horizontal_closing_speed: float | None = Field(
        None,
        description="Closing speed in m/s, positive when closing; None when unknown",
    )

    model_config = ConfigDict(frozen=True)

    @field_validator("bearing")
    @classmethod
    def validate_bearing(cls, v: float) -> float:
        if not -180.0 < v <= 180.0:
            msg = f"Bearing must lie in (-180, 180], got {v}"
            raise ValueError(msg)
        return v

    @property
    def slant_range(self) -> float:
        return math.hypot(self.horizontal_range, self.vertical_offset)


class CameraModel(BaseModel):
    """Forward-looking pinhole camera mounted along the ownship body x-axis."""

    horizontal_fov: float = Field(
        60.0, gt=0.0, lt=180.0, description="Horizontal FOV in degrees"
    )
    image_width: int = Field(1280, gt=0, description="Image width in pixels")
    image_height: int = Field(720, gt=0, description="Image height in pixels")

    model_config = ConfigDict(frozen=True)

    @property
    def tan_half_horizontal(self) -> float:
        return math.tan(math.radians(self.horizontal_fov) / 2.0)

    @property
    def tan_half_vertical(self) -> float:
        return self.tan_half_horizontal * self.image_height / self.image_width

    @property
    def vertical_fov(self) -> float:
        """Vertical FOV in degrees derived from the aspect ratio."""
        return math.degrees(2.0 * math.atan(self.tan_half_vertical))

    @property
    def focal_length_px(self) -> float:
        return (self.image_width / 2.0) / self.tan_half_horizontal


class BoundingBox(BaseModel):
    """Axis-aligned box in normalized image coordinates (YOLO convention)."""

    center_x: float = Field(..., ge=0.0, le=1.0)
    center_y: float = Field(..., ge=0.0, le=1.0)
    width: float = Field(..., gt=0.0, le=1.0)
    height: float = Field(..., gt=0.0, le=1.0)
    class_id: int = Field(0, ge=0)
    confidence: float = Field(1.0, ge=0.0, le=1.0, description="1.0 for ground truth")

    model_config = ConfigDict(frozen=True)

    @property
    def corners(self) -> tuple[float, float, float, float]:
        """(x_min, y_min, x_max, y_max)."""
        half_w = self.width / 2.0
        half_h = self.height / 2.0
        return (
            self.center_x - half_w,
            self.center_y - half_h,
            self.center_x + half_w,
            self.center_y + half_h,
        )

    @property
    def area(self) -> float:
        return self.width * self.height

    @classmethod
    def from_corners(
        cls,
        x_min: float,
        y_min: float,
        x_max: float,
        y_max: float,
        class_id: int = 0,
        confidence: float = 1.0,
    ) -> BoundingBox:
        return cls(
            center_x=(x_min + x_max) / 2.0,
            center_y=(y_min + y_max) / 2.0,
            width=x_max - x_min,
            height=y_max - y_min,
            class_id=class_id,
            confidence=confidence,
        )


class AircraftClass(BaseModel):
    """Physical extents of an intruder aircraft type."""

    name: AircraftType
    wingspan: float = Field(..., gt=0.0, description="Meters")
    length: float = Field(..., gt=0.0, description="Meters")
    height: float = Field(..., gt=0.0, description="Meters")

    model_config = ConfigDict(frozen=True)


# Real-world reference extents, not dataset ground truth.
AIRCRAFT_CLASSES: dict[AircraftType, AircraftClass] = {
    AircraftType.CESSNA_SKYHAWK: AircraftClass(
        name=AircraftType.CESSNA_SKYHAWK, wingspan=11.0, length=8.28, height=2.72
    ),
    AircraftType.BOEING_737: AircraftClass(
        name=AircraftType.BOEING_737, wingspan=35.8, length=39.5, height=12.5
    ),
    AircraftType.KING_AIR_C90: AircraftClass(
        name=AircraftType.KING_AIR_C90, wingspan=15.3, length=10.8, height=4.34
    ),
}


def aircraft_class(aircraft: AircraftType | str) -> AircraftClass:
    """Look up the reference extents for an aircraft type."""
    return AIRCRAFT_CLASSES[AircraftType(aircraft)]


class Conditions(BaseModel):
    """Environmental conditions attached to an encounter or image."""

    weather: Weather
    region: Region
    aircraft: AircraftType
    local_time: float = Field(..., ge=8.0, le=17.0, description="Local time in hours")

    model_config = ConfigDict(frozen=True)

    @property
    def time_window(self) -> TimeWindow:
        return time_window(self.local_time)


class ConditionCell(BaseModel):
    """One cell of the factorial condition grid (time given as a window)."""

    weather: Weather
    region: Region
    aircraft: AircraftType
    window: TimeWindow

    model_config = ConfigDict(frozen=True)


class FloatRange(BaseModel):
    """Closed interval [low, high]."""

    low: float
    high: float

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="before")
    @classmethod
    def accept_pairs(cls, data: object) -> object:
        if isinstance(data, (list, tuple)) and len(data) == 2:
            return {"low": data[0], "high": data[1]}
        return data

    @model_validator(mode="after")
    def check_order(self) -> FloatRange:
        if self.low > self.high:
            msg = f"Range minimum {self.low} exceeds maximum {self.high}"
            raise ValueError(msg)
        return self

    def contains(self, value: float) -> bool:
        return self.low <= value <= self.high
