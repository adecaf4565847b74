"""Sliced aggregation of safety and detection records by metadata facet."""

from __future__ import annotations

from collections.abc import Callable, Sequence
from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..config.settings import MetricsConfig
from ..core.errors import UnknownFacetError
from ..core.models import (
    AircraftType,
    Conditions,
    RangeBucket,
    Region,
    RelativeAltitude,
    TimeWindow,
    Weather,
    range_bucket,
    relative_altitude,
)
from ..sim.models import EncounterResult
from .detection import ImageEvaluation, evaluate_detections
from .safety import alert_frequency, nmac_frequency


class Facet(str, Enum):
    """Metadata dimensions results can be sliced along."""

    WEATHER = "Weather"
    REGION = "Region"
    AIRCRAFT = "AircraftType"
    TIME_OF_DAY = "TimeOfDay"
    RANGE = "RangeBucket"
    RELATIVE_ALTITUDE = "RelativeAltitude"
    ALL = "All"


FACET_ALIASES: dict[str, Facet] = {
    "weather": Facet.WEATHER,
    "region": Facet.REGION,
    "aircraft": Facet.AIRCRAFT,
    "timeofday": Facet.TIME_OF_DAY,
    "range": Facet.RANGE,
    "relalt": Facet.RELATIVE_ALTITUDE,
    "all": Facet.ALL,
}

ALL_VALUE = "All"

FACET_DOMAINS: dict[Facet, tuple[str, ...]] = {
    Facet.WEATHER: tuple(w.value for w in Weather),
    Facet.REGION: tuple(r.value for r in Region),
    Facet.AIRCRAFT: tuple(a.value for a in AircraftType),
    Facet.TIME_OF_DAY: tuple(t.value for t in TimeWindow),
    Facet.RANGE: tuple(b.value for b in RangeBucket),
    Facet.RELATIVE_ALTITUDE: tuple(r.value for r in RelativeAltitude),
    Facet.ALL: (ALL_VALUE,),
}


def parse_facet(name: str | Facet) -> Facet:
    """Accept a facet, its value or its command-line alias.

    Raises:
        UnknownFacetError: If the name matches nothing
    """
    if isinstance(name, Facet):
        return name
    if name.lower() in FACET_ALIASES:
        return FACET_ALIASES[name.lower()]
    try:
        return Facet(name)
    except ValueError:
        raise UnknownFacetError(name) from None


class SliceKey(BaseModel):
    """A facet and one value from its closed domain."""

    facet: Facet
    value: str

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def check_domain(self) -> SliceKey:
        if self.value not in FACET_DOMAINS[self.facet]:
            msg = f"{self.value!r} is not a {self.facet.value} value"
            raise ValueError(msg)
        return self


class SliceReport(BaseModel):
    """Metrics of one slice; metrics are None for empty slices."""

    key: SliceKey
    n: int = Field(..., ge=0)
    nmac_count: int | None = None
    nmac_freq: float | None = Field(None, ge=0.0, le=1.0)
    nmac_se: float | None = None
    alert_steps: int | None = None
    total_steps: int | None = None
    alert_freq: float | None = Field(None, ge=0.0, le=1.0)
    alert_se: float | None = None
    precision: float | None = None
    recall: float | None = None
    map: float | None = None

    model_config = ConfigDict(frozen=True)


def _condition_reader(facet: Facet) -> Callable[[Conditions], str] | None:
    readers: dict[Facet, Callable[[Conditions], str]] = {
        Facet.WEATHER: lambda c: c.weather.value,
        Facet.REGION: lambda c: c.region.value,
        Facet.AIRCRAFT: lambda c: c.aircraft.value,
        Facet.TIME_OF_DAY: lambda c: c.time_window.value,
    }
    return readers.get(facet)


def slice_value(record: EncounterResult | ImageEvaluation, facet: Facet) -> str:
    """Slice value of one record.

    Raises:
        UnknownFacetError: If the facet does not apply to this kind of record
    """
    if facet is Facet.ALL:
        return ALL_VALUE
    if isinstance(record, ImageEvaluation):
        if facet is Facet.RANGE:
            return range_bucket(record.intruder_range).value
        if facet is Facet.RELATIVE_ALTITUDE:
            return relative_altitude(record.vertical_offset).value
    elif facet in (Facet.RANGE, Facet.RELATIVE_ALTITUDE):
        raise UnknownFacetError(facet.value, "not defined for encounter results")
    if record.conditions is None:
        raise UnknownFacetError(facet.value, "record has no conditions")
    reader = _condition_reader(facet)
    assert reader is not None
    return reader(record.conditions)


def _safety_report(key: SliceKey, results: Sequence[EncounterResult]) -> SliceReport:
    if not results:
        return SliceReport(key=key, n=0)
    nmac = nmac_frequency(results)
    total_steps = sum(r.total_steps for r in results)
    alert = alert_frequency(results) if total_steps else None
    return SliceReport(
        key=key,
        n=len(results),
        nmac_count=nmac.count,
        nmac_freq=nmac.value,
        nmac_se=nmac.standard_error,
        alert_steps=sum(r.alert_steps for r in results),
        total_steps=total_steps,
        alert_freq=alert.value if alert else None,
        alert_se=alert.standard_error if alert else None,
    )


def _detection_report(
    key: SliceKey, images: Sequence[ImageEvaluation], config: MetricsConfig
) -> SliceReport:
    summary = evaluate_detections(images, config)
    return SliceReport(
        key=key,
        n=len(images),
        precision=summary.precision,
        recall=summary.recall,
        map=summary.map,
    )


def slice_aggregate(
    records: Sequence[EncounterResult] | Sequence[ImageEvaluation],
    facet: str | Facet,
    config: MetricsConfig | None = None,
) -> list[SliceReport]:
    """Partition records by facet value and compute metrics per slice.

    Every value of the facet's domain gets a report, in domain order, so
    counts always sum to ``len(records)``. Encounter results yield NMAC and
    alert frequencies; image evaluations yield precision, recall and mAP.
    """
    facet = parse_facet(facet)
    config = config or MetricsConfig()
    groups: dict[str, list] = {  # type: ignore[type-arg]
        value: [] for value in FACET_DOMAINS[facet]
    }
    for record in records:
        groups[slice_value(record, facet)].append(record)
    reports = []
    for value, members in groups.items():
        key = SliceKey(facet=facet, value=value)
        if members and isinstance(members[0], ImageEvaluation):
            reports.append(_detection_report(key, members, config))
        elif members:
            reports.append(_safety_report(key, members))
        else:
            reports.append(SliceReport(key=key, n=0))
    return reports
