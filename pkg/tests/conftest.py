"""Shared fixtures: small and default policy tables, sample encounters."""

import pytest

from daa_bench.cas.mdp import build_mdp
from daa_bench.cas.solver import value_iteration
from daa_bench.config.settings import MdpConfig
from daa_bench.core.models import (
    AircraftState,
    AircraftType,
    Conditions,
    Region,
    Weather,
)
from daa_bench.encounters.models import EncounterFeatures
from daa_bench.encounters.trajectories import build_trajectories, generate_encounters

SMALL_MDP = {
    "h_bound": 300.0,
    "h_points": 9,
    "dh_own_bound": 12.7,
    "dh_own_points": 5,
    "dh_int_bound": 5.0,
    "dh_int_points": 3,
    "tau_max": 20.0,
    "tau_points": 21,
}


@pytest.fixture(scope="session")
def small_mdp_config():
    """A coarse grid that solves in well under a second."""
    return MdpConfig(**SMALL_MDP)


@pytest.fixture(scope="session")
def small_policy(small_mdp_config):
    """Policy table solved on the coarse grid."""
    return value_iteration(build_mdp(small_mdp_config))


@pytest.fixture(scope="session")
def default_policy():
    """Policy table solved with the default configuration."""
    return value_iteration(build_mdp())


@pytest.fixture
def conditions():
    """Midday clear-sky conditions with a Cessna intruder."""
    return Conditions(
        weather=Weather.CLEAR,
        region=Region.PAO,
        aircraft=AircraftType.CESSNA_SKYHAWK,
        local_time=11.0,
    )


@pytest.fixture
def head_on_features():
    """Head-on geometry with zero miss distances."""
    return EncounterFeatures(
        ownship_speed=60.0,
        intruder_speed=60.0,
        hmd=0.0,
        vmd=0.0,
        relative_heading=180.0,
    )


@pytest.fixture
def head_on_encounter(head_on_features):
    """Unplaced head-on encounter, 51 steps, CPA at 40 s."""
    return build_trajectories(head_on_features)


@pytest.fixture(scope="session")
def sampled_encounters():
    """Placed encounters with i.i.d. conditions."""
    return generate_encounters(7, grid="iid", n=6)


@pytest.fixture
def level_ownship():
    """Wings-level ownship at the origin heading north."""
    return AircraftState(east=0.0, north=0.0, up=0.0, heading=0.0, ground_speed=60.0)
