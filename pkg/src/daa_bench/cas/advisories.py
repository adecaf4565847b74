"""Vertical advisories and the commands they place on the ownship."""

from __future__ import annotations

from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

RATE_1500_FPM = 7.62  # m/s
RATE_2500_FPM = 12.7  # m/s


class Advisory(str, Enum):
    """Resolution advisories in tie-breaking order; COC is the only non-alert."""

    COC = "COC"
    DNC = "DNC"
    DND = "DND"
    DES1500 = "DES1500"
    CL1500 = "CL1500"
    SDES1500 = "SDES1500"
    SCL1500 = "SCL1500"
    SDES2500 = "SDES2500"
    SCL2500 = "SCL2500"

    @property
    def index(self) -> int:
        return ADVISORIES.index(self)

    @property
    def is_alert(self) -> bool:
        return self is not Advisory.COC

    @property
    def sense(self) -> int:
        """+1 for upward advisories, -1 for downward, 0 for COC."""
        return _SENSE[self]

    @property
    def strength(self) -> int:
        """0 for COC, 1 for the rate limits, 2 at 1500 ft/min, 3 at 2500 ft/min."""
        return _STRENGTH[self]


ADVISORIES: tuple[Advisory, ...] = tuple(Advisory)

_SENSE = {
    Advisory.COC: 0,
    Advisory.DNC: -1,
    Advisory.DND: 1,
    Advisory.DES1500: -1,
    Advisory.CL1500: 1,
    Advisory.SDES1500: -1,
    Advisory.SCL1500: 1,
    Advisory.SDES2500: -1,
    Advisory.SCL2500: 1,
}

_STRENGTH = {
    Advisory.COC: 0,
    Advisory.DNC: 1,
    Advisory.DND: 1,
    Advisory.DES1500: 2,
    Advisory.CL1500: 2,
    Advisory.SDES1500: 2,
    Advisory.SCL1500: 2,
    Advisory.SDES2500: 3,
    Advisory.SCL2500: 3,
}


def is_reversal(previous: Advisory, advisory: Advisory) -> bool:
    return previous.sense * advisory.sense < 0


def is_strengthening(previous: Advisory, advisory: Advisory) -> bool:
    return (
        previous.sense != 0
        and previous.sense == advisory.sense
        and advisory.strength > previous.strength
    )


class CommandKind(str, Enum):
    """How a vertical command constrains the ownship rate."""

    NONE = "none"
    TARGET = "target"
    AT_MOST = "at_most"
    AT_LEAST = "at_least"


class VerticalCommand(BaseModel):
    """A target vertical rate or a one-sided bound on it."""

    kind: CommandKind = CommandKind.NONE
    rate: float = Field(0.0, description="Target or bound in m/s; unused for NONE")

    model_config = ConfigDict(frozen=True)

    def desired_rate(self, current: float, nominal: float = 0.0) -> float:
        """Rate the ownship steers toward; unconstrained commands return ``nominal``."""
        return float(self.desired_rates(np.asarray(current, dtype=float), nominal))

    def desired_rates(self, current: np.ndarray, nominal: float = 0.0) -> np.ndarray:
        if self.kind is CommandKind.TARGET:
            return np.full_like(current, self.rate)
        if self.kind is CommandKind.AT_MOST:
            return np.minimum(current, self.rate)
        if self.kind is CommandKind.AT_LEAST:
            return np.maximum(current, self.rate)
        return np.full_like(current, nominal)


_COMMANDS = {
    Advisory.COC: VerticalCommand(),
    Advisory.DNC: VerticalCommand(kind=CommandKind.AT_MOST, rate=0.0),
    Advisory.DND: VerticalCommand(kind=CommandKind.AT_LEAST, rate=0.0),
    Advisory.DES1500: VerticalCommand(kind=CommandKind.TARGET, rate=-RATE_1500_FPM),
    Advisory.CL1500: VerticalCommand(kind=CommandKind.TARGET, rate=RATE_1500_FPM),
    Advisory.SDES1500: VerticalCommand(kind=CommandKind.TARGET, rate=-RATE_1500_FPM),
    Advisory.SCL1500: VerticalCommand(kind=CommandKind.TARGET, rate=RATE_1500_FPM),
    Advisory.SDES2500: VerticalCommand(kind=CommandKind.TARGET, rate=-RATE_2500_FPM),
    Advisory.SCL2500: VerticalCommand(kind=CommandKind.TARGET, rate=RATE_2500_FPM),
}


def advisory_command(advisory: Advisory, current_rate: float = 0.0) -> VerticalCommand:
    """Vertical command issued by an advisory.

    ``current_rate`` does not change the command itself; bounds are applied
    against it by ``VerticalCommand.desired_rate``, so a compliant rate is left
    alone.
    """
    del current_rate
    return _COMMANDS[advisory]


def next_vertical_rates(
    current: np.ndarray,
    command: VerticalCommand,
    accel_limit: float,
    dt: float,
    nominal: float = 0.0,
) -> np.ndarray:
    """Move rates toward the command with ``|change| <= accel_limit * dt``."""
    current = np.asarray(current, dtype=float)
    step = accel_limit * dt
    change = command.desired_rates(current, nominal) - current
    return current + np.clip(change, -step, step)


def next_vertical_rate(
    current: float,
    command: VerticalCommand,
    accel_limit: float,
    dt: float,
    nominal: float = 0.0,
) -> float:
    rates = next_vertical_rates(
        np.asarray(current, dtype=float), command, accel_limit, dt, nominal
    )
    return float(rates)
