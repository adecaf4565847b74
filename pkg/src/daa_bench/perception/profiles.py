"""Detection probability profiles calibrated from test-set recall."""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field, field_validator

from ..core.models import Conditions

# Overall recall of the baseline detector, used to turn per-facet recall into factors.
BASELINE_OVERALL_RECALL = 0.907


class RecallBucket(BaseModel):
    """Detection probability for ranges below ``range_upper_bound``."""

    range_upper_bound: float = Field(
        ..., gt=0.0, description="Exclusive upper bound in meters; inf allowed"
    )
    probability: float = Field(..., ge=0.0, le=1.0)

    model_config = ConfigDict(frozen=True, ser_json_inf_nan="constants")


class DetectorProfile(BaseModel):
    """Range-bucketed recall with optional multiplicative condition factors."""

    recall_by_range: tuple[RecallBucket, ...] = Field(..., min_length=1)
    condition_multipliers: dict[str, dict[str, float]] = Field(
        default_factory=dict,
        description="facet (weather, region, aircraft, time_window) -> value -> factor",
    )

    model_config = ConfigDict(frozen=True)

    @field_validator("recall_by_range")
    @classmethod
    def validate_buckets(cls, v: tuple[RecallBucket, ...]) -> tuple[RecallBucket, ...]:
        bounds = [bucket.range_upper_bound for bucket in v]
        if any(later <= earlier for earlier, later in zip(bounds, bounds[1:])):
            msg = "Range bounds must be strictly increasing"
            raise ValueError(msg)
        return v

    @field_validator("condition_multipliers")
    @classmethod
    def validate_multipliers(
        cls, v: dict[str, dict[str, float]]
    ) -> dict[str, dict[str, float]]:
        for facet, factors in v.items():
            if facet not in _FACET_READERS:
                msg = f"Unknown condition facet: {facet}"
                raise ValueError(msg)
            for value, factor in factors.items():
                if factor < 0.0:
                    msg = f"Negative multiplier for {facet}={value}"
                    raise ValueError(msg)
        return v

    def bucket_probability(self, range_m: float) -> float:
        for bucket in self.recall_by_range:
            if range_m < bucket.range_upper_bound:
                return bucket.probability
        return self.recall_by_range[-1].probability

    def probability(
        self, range_m: float, conditions: Conditions | None = None, scale: float = 1.0
    ) -> float:
        """Bucket recall times condition factors times ``scale``, clamped to [0, 1]."""
        p = self.bucket_probability(range_m) * scale
        if conditions is not None:
            for facet, factors in self.condition_multipliers.items():
                p *= factors.get(_FACET_READERS[facet](conditions), 1.0)
        return min(max(p, 0.0), 1.0)

    @classmethod
    def baseline(cls) -> DetectorProfile:
        """Baseline detector recall per range bucket (0-150 m, 150-500 m, >500 m)."""
        return cls(
            recall_by_range=(
                RecallBucket(range_upper_bound=150.0, probability=0.983),
                RecallBucket(range_upper_bound=500.0, probability=0.960),
                RecallBucket(range_upper_bound=float("inf"), probability=0.818),
            )
        )

    @classmethod
    def alternative(cls) -> DetectorProfile:
        """Recall of the alternative detector trained on a narrower dataset."""
        return cls(
            recall_by_range=(
                RecallBucket(range_upper_bound=150.0, probability=0.997),
                RecallBucket(range_upper_bound=500.0, probability=0.979),
                RecallBucket(range_upper_bound=float("inf"), probability=0.838),
            )
        )

    @classmethod
    def with_condition_factors(
        cls, base: DetectorProfile | None = None
    ) -> DetectorProfile:
        """Baseline buckets plus per-facet factors (facet recall / overall recall)."""
        base = base or cls.baseline()
        multipliers = {
            facet: {
                value: round(recall / BASELINE_OVERALL_RECALL, 6)
                for value, recall in table.items()
            }
            for facet, table in BASELINE_FACET_RECALL.items()
        }
        return cls(
            recall_by_range=base.recall_by_range, condition_multipliers=multipliers
        )


BASELINE_FACET_RECALL: dict[str, dict[str, float]] = {
    "weather": {
        "Clear": 0.905,
        "HighCirrus": 0.930,
        "Scattered": 0.923,
        "Broken": 0.921,
        "Overcast": 0.920,
        "Stratus": 0.846,
    },
    "region": {"PAO": 0.930, "BOS": 0.922, "OSH": 0.866, "RNO": 0.912},
    "aircraft": {"CessnaSkyhawk": 0.844, "Boeing737": 0.988, "KingAirC90": 0.897},
    "time_window": {
        "Morning": 0.911,
        "Midday": 0.907,
        "Afternoon": 0.914,
        "LateAfternoon": 0.897,
    },
}

_FACET_READERS = {
    "weather": lambda c: c.weather.value,
    "region": lambda c: c.region.value,
    "aircraft": lambda c: c.aircraft.value,
    "time_window": lambda c: c.time_window.value,
}
