"""The vertical collision avoidance MDP: state, parameters and rewards."""

from __future__ import annotations

import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from pydantic import ValidationError as PydanticValidationError

from ..config.settings import MdpConfig, SimConfig
from ..core.errors import ConfigError, format_validation_errors
from ..core.models import NMAC_HORIZONTAL_M, NMAC_VERTICAL_M, RelativeGeometry
from .advisories import ADVISORIES, Advisory, is_reversal, is_strengthening


class CasState(BaseModel):
    """Controller state looked up in the policy table."""

    h: float = Field(..., description="Intruder minus ownship altitude, m")
    dh_own: float = Field(0.0, description="Ownship vertical rate, m/s")
    dh_int: float = Field(0.0, description="Intruder vertical rate, m/s")
    tau: float = Field(..., ge=0.0, description="Time to horizontal conflict, s")
    prev_advisory: Advisory = Advisory.COC

    model_config = ConfigDict(frozen=True)

    @field_validator("h", "dh_own", "dh_int", "tau")
    @classmethod
    def require_finite(cls, v: float) -> float:
        if not math.isfinite(v):
            msg = "State components must be finite"
            raise ValueError(msg)
        return v


class MdpSpec(BaseModel):
    """Fully resolved MDP: grids, actions, rewards and dynamics."""

    h_grid: tuple[float, ...] = Field(..., min_length=2)
    dh_own_grid: tuple[float, ...] = Field(..., min_length=2)
    dh_int_grid: tuple[float, ...] = Field(..., min_length=2)
    tau_grid: tuple[float, ...] = Field(..., min_length=2)
    actions: tuple[Advisory, ...] = ADVISORIES
    discount: float = Field(1.0, gt=0.0, le=1.0)
    nmac_penalty: float = Field(-1.0, lt=0.0)
    alert_cost: float = Field(-0.005, le=0.0)
    reversal_cost: float = Field(-0.01, le=0.0)
    strengthen_cost: float = Field(-0.008, le=0.0)
    nmac_vertical: float = Field(NMAC_VERTICAL_M, gt=0.0)
    compliance_accel: float = Field(..., gt=0.0)
    intruder_accel: float = Field(1.0, ge=0.0)
    intruder_accel_probs: tuple[float, float, float] = (0.25, 0.5, 0.25)
    dt: float = Field(1.0, gt=0.0)
    tolerance: float = Field(1e-6, gt=0.0)
    max_iterations: int = Field(500, gt=0)

    model_config = ConfigDict(frozen=True)

    @field_validator("h_grid", "dh_own_grid", "dh_int_grid", "tau_grid")
    @classmethod
    def strictly_increasing(cls, v: tuple[float, ...]) -> tuple[float, ...]:
        if any(later <= earlier for earlier, later in zip(v, v[1:])):
            msg = "Grid coordinates must be strictly increasing"
            raise ValueError(msg)
        return v

    @field_validator("tau_grid")
    @classmethod
    def tau_starts_at_zero(cls, v: tuple[float, ...]) -> tuple[float, ...]:
        if v[0] != 0.0:
            msg = "tau grid must start at 0"
            raise ValueError(msg)
        return v

    @model_validator(mode="after")
    def check_actions(self) -> MdpSpec:
        if self.actions != ADVISORIES:
            msg = "The action set must be the full advisory list in enum order"
            raise ValueError(msg)
        return self

    @property
    def grids(self) -> tuple[tuple[float, ...], ...]:
        return (self.h_grid, self.dh_own_grid, self.dh_int_grid, self.tau_grid)

    @property
    def grid_shape(self) -> tuple[int, int, int, int]:
        return tuple(len(g) for g in self.grids)  # type: ignore[return-value]

    @property
    def n_nodes(self) -> int:
        return math.prod(self.grid_shape)

    @property
    def q_shape(self) -> tuple[int, int, int]:
        """(grid nodes, previous advisory, action)."""
        return (self.n_nodes, len(self.actions), len(self.actions))

    def node_coordinates(self) -> np.ndarray:
        """(n_nodes, 4) coordinates in storage order; tau varies fastest."""
        mesh = np.meshgrid(*[np.asarray(g) for g in self.grids], indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)


def _grid(
    explicit: list[float] | None,
    bound: float | None,
    points: int,
    low: float | None = None,
) -> tuple[float, ...]:
    if explicit is not None:
        return tuple(float(x) for x in explicit)
    start = -bound if low is None else low  # type: ignore[operator]
    return tuple(float(x) for x in np.linspace(start, bound, points))


def build_mdp(config: MdpConfig | None = None) -> MdpSpec:
    """Resolve an ``MdpConfig`` into an ``MdpSpec``.

    Raises:
        ConfigError: If a grid is not strictly increasing or the tau grid
            does not start at 0
    """
    config = config or MdpConfig()
    try:
        return MdpSpec(
            h_grid=_grid(config.h_grid, config.h_bound, config.h_points),
            dh_own_grid=_grid(
                config.dh_own_grid, config.dh_own_bound, config.dh_own_points
            ),
            dh_int_grid=_grid(
                config.dh_int_grid, config.dh_int_bound, config.dh_int_points
            ),
            tau_grid=_grid(config.tau_grid, config.tau_max, config.tau_points, low=0.0),
            discount=config.discount,
            nmac_penalty=config.nmac_penalty,
            alert_cost=config.alert_cost,
            reversal_cost=config.reversal_cost,
            strengthen_cost=config.strengthen_cost,
            compliance_accel=config.compliance_accel,
            intruder_accel=config.intruder_accel,
            intruder_accel_probs=config.intruder_accel_probs,
            dt=config.dt,
            tolerance=config.tolerance,
            max_iterations=config.max_iterations,
        )
    except PydanticValidationError as e:
        msg = "Invalid MDP configuration"
        raise ConfigError(
            msg,
            validation_errors=format_validation_errors(e.errors()),
        ) from e


def action_costs(spec: MdpSpec) -> np.ndarray:
    """(previous advisory, action) cost of issuing ``action`` after ``previous``."""
    n = len(spec.actions)
    costs = np.zeros((n, n))
    for p, previous in enumerate(spec.actions):
        for a, advisory in enumerate(spec.actions):
            if advisory.is_alert:
                costs[p, a] += spec.alert_cost
            if is_reversal(previous, advisory):
                costs[p, a] += spec.reversal_cost
            if is_strengthening(previous, advisory):
                costs[p, a] += spec.strengthen_cost
    return costs


def action_rewards(spec: MdpSpec) -> np.ndarray:
    """Immediate reward array shaped like the Q-values.

    Every node pays the advisory costs; nodes at tau = 0 with
    ``|h| < nmac_vertical`` also pay the NMAC penalty.
    """
    coords = spec.node_coordinates()
    nmac = (coords[:, 3] == 0.0) & (np.abs(coords[:, 0]) < spec.nmac_vertical)
    rewards = np.broadcast_to(action_costs(spec), spec.q_shape).copy()
    rewards[nmac] += spec.nmac_penalty
    return rewards


def compute_tau(rel: RelativeGeometry, config: SimConfig | None = None) -> float:
    """Seconds until the intruder enters the horizontal NMAC radius.

    0 inside the radius, ``tau_max`` when not closing; never above ``tau_max``.
    """
    config = config or SimConfig()
    if rel.horizontal_range <= NMAC_HORIZONTAL_M:
        return 0.0
    closing = rel.horizontal_closing_speed
    if closing is None or closing <= config.closing_epsilon:
        return config.tau_max
    return min((rel.horizontal_range - NMAC_HORIZONTAL_M) / closing, config.tau_max)
