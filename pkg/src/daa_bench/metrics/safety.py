"""Safety metrics: near mid-air collisions and alerting."""

from __future__ import annotations

import math
from collections.abc import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..core.errors import EmptyInputError
from ..core.models import NMAC_HORIZONTAL_M, NMAC_VERTICAL_M, RelativeGeometry
from ..sim.models import EncounterResult


class Rate(BaseModel):
    """A frequency with its normal-approximation standard error."""

    value: float = Field(..., ge=0.0, le=1.0)
    standard_error: float = Field(..., ge=0.0)
    n: int = Field(..., gt=0, description="Trials behind the standard error")
    count: int = Field(..., ge=0, description="Successes")

    model_config = ConfigDict(frozen=True)


def standard_error(p: float, n: int) -> float:
    return math.sqrt(p * (1.0 - p) / n) if n > 0 else 0.0


def rate(count: int, n: int) -> Rate:
    if n <= 0:
        msg = "Cannot compute a rate over zero trials"
        raise EmptyInputError(msg)
    p = count / n
    return Rate(value=p, standard_error=standard_error(p, n), n=n, count=count)


def is_nmac(rel: RelativeGeometry) -> bool:
    """Strict loss of both 500 ft horizontal and 100 ft vertical separation."""
    return (
        rel.horizontal_range < NMAC_HORIZONTAL_M
        and abs(rel.vertical_offset) < NMAC_VERTICAL_M
    )


def _interval_below(a: float, b: float, c: float) -> tuple[float, float] | None:
    """Open set of s in [0, 1] where a*s^2 + b*s + c < 0, as a closed hull, or None."""
    if a == 0.0:
        if b == 0.0:
            return (0.0, 1.0) if c < 0.0 else None
        root = -c / b
        low, high = (-math.inf, root) if b > 0.0 else (root, math.inf)
    else:
        disc = b * b - 4.0 * a * c
        if disc <= 0.0:
            return None
        sq = math.sqrt(disc)
        low, high = sorted(((-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)))
    low, high = max(low, 0.0), min(high, 1.0)
    return (low, high) if low < high else None


def segment_has_nmac(offset_start: np.ndarray, offset_end: np.ndarray) -> bool:
    """Whether linearly interpolated relative motion enters the NMAC cylinder.

    Offsets are intruder-minus-ownship ENU vectors at the two ends of a step.
    """
    start = np.asarray(offset_start, dtype=float)
    delta = np.asarray(offset_end, dtype=float) - start
    horizontal = _interval_below(
        float(delta[0] ** 2 + delta[1] ** 2),
        float(2.0 * (start[0] * delta[0] + start[1] * delta[1])),
        float(start[0] ** 2 + start[1] ** 2 - NMAC_HORIZONTAL_M**2),
    )
    if horizontal is None:
        return False
    vertical = _interval_below(
        float(delta[2] ** 2),
        float(2.0 * start[2] * delta[2]),
        float(start[2] ** 2 - NMAC_VERTICAL_M**2),
    )
    if vertical is None:
        return False
    return max(horizontal[0], vertical[0]) < min(horizontal[1], vertical[1])


def _require(results: Sequence[EncounterResult]) -> None:
    if not results:
        msg = "No encounter results to aggregate"
        raise EmptyInputError(msg)


def nmac_frequency(results: Sequence[EncounterResult]) -> Rate:
    """Fraction of encounters with an NMAC."""
    _require(results)
    return rate(sum(r.nmac for r in results), len(results))


def alert_frequency(results: Sequence[EncounterResult]) -> Rate:
    """Alerting steps over all steps in the batch.

    The standard error uses the step count.
    """
    _require(results)
    return rate(
        sum(r.alert_steps for r in results), sum(r.total_steps for r in results)
    )
