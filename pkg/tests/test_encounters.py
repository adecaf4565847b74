"""Tests for encounter sampling, trajectory construction and placement."""

import numpy as np
import pytest

from daa_bench.config.settings import EncounterConfig, PlacementConfig, SceneConfig
from daa_bench.core.errors import ConfigError
from daa_bench.core.geometry import relative_geometry
from daa_bench.core.models import AircraftType, FloatRange
from daa_bench.encounters.models import EncounterFeatures
from daa_bench.encounters.sampling import (
    condition_grid,
    sample_conditions,
    sample_features,
    sample_image_scene,
    sample_intruder_range,
)
from daa_bench.encounters.trajectories import (
    build_trajectories,
    generate_encounters,
    place_in_region,
    sample_encounter,
)
from daa_bench.metrics.safety import is_nmac


FEATURE_NAMES = ("ownship_speed", "intruder_speed", "hmd", "vmd", "relative_heading")


def _geometry_series(encounter):
    pairs = zip(encounter.ownship_script, encounter.intruder_script)
    return [relative_geometry(own, intr) for own, intr in pairs]


class TestSampleFeatures:
    """Test sample_features."""

    def test_features_within_ranges(self):
        """Test every feature stays inside its configured range."""
        config = EncounterConfig()
        rng = np.random.default_rng(0)
        for _ in range(10_000):
            features = sample_features(rng, config)
            for name in FEATURE_NAMES:
                assert getattr(config, name).contains(getattr(features, name))

    def test_same_seed_same_features(self):
        """Test sampling is determined by the seed."""
        first = sample_features(np.random.default_rng(42), EncounterConfig())
        second = sample_features(np.random.default_rng(42), EncounterConfig())
        assert first == second

    def test_relative_heading_mean(self):
        """Test the Monte Carlo mean of U(100, 260)."""
        rng = np.random.default_rng(1)
        config = EncounterConfig()
        headings = [
            sample_features(rng, config).relative_heading for _ in range(10_000)
        ]
        assert np.mean(headings) == pytest.approx(180.0, abs=2.0)

    def test_inverted_range_rejected(self):
        """Test a range that bypassed validation is caught at sampling time."""
        bad = FloatRange.model_construct(low=10.0, high=0.0)
        config = EncounterConfig().model_copy(update={"hmd": bad})
        with pytest.raises(ConfigError, match="hmd"):
            sample_features(np.random.default_rng(0), config)

    def test_invalid_config_rejected(self):
        """Test validation rejects an inverted range up front."""
        with pytest.raises(ValueError):
            EncounterConfig(hmd=(100.0, 0.0))


class TestBuildTrajectories:
    """Test build_trajectories."""

    def test_head_on_kinematics(self, head_on_encounter):
        """Test head-on separation at start and at CPA."""
        series = _geometry_series(head_on_encounter)
        assert head_on_encounter.n_steps == 51
        assert series[0].horizontal_range == pytest.approx(4800.0)
        assert series[40].horizontal_range == pytest.approx(0.0, abs=1e-9)

    def test_minimum_separation_at_cpa(self):
        """Test the closest horizontal approach falls at 40 s for random features."""
        rng = np.random.default_rng(5)
        for _ in range(100):
            encounter = build_trajectories(sample_features(rng, EncounterConfig()))
            ranges = [g.horizontal_range for g in _geometry_series(encounter)]
            assert int(np.argmin(ranges)) == 40
            assert ranges[40] == pytest.approx(encounter.features.hmd, abs=1e-9)

    def test_vertical_miss_distance_is_constant(self, head_on_features):
        """Test level flight keeps the vertical separation at vmd."""
        features = head_on_features.model_copy(update={"vmd": 30.0})
        for rel in _geometry_series(build_trajectories(features)):
            assert rel.vertical_offset == pytest.approx(30.0)

    def test_relative_track_angle(self, head_on_features):
        """Test the intruder heading differs from the ownship's by the feature."""
        features = head_on_features.model_copy(update={"relative_heading": 135.0})
        encounter = build_trajectories(features)
        difference = (
            encounter.intruder_script[0].heading - encounter.ownship_script[0].heading
        )
        assert difference == pytest.approx(135.0)

    def test_cpa_outside_encounter_rejected(self, head_on_features):
        """Test a CPA time beyond the duration."""
        with pytest.raises(ValueError):
            build_trajectories(head_on_features, duration=50.0, cpa_time=60.0)

    def test_unplaced_encounter_has_conflict(self):
        """Test every sampled geometry is an NMAC at CPA without avoidance."""
        rng = np.random.default_rng(11)
        for _ in range(200):
            encounter = build_trajectories(sample_features(rng, EncounterConfig()))
            assert is_nmac(_geometry_series(encounter)[40])


class TestPlaceInRegion:
    """Test place_in_region."""

    def test_relative_geometry_unchanged(self):
        """Test placement is a rigid motion of both aircraft."""
        features = EncounterFeatures(
            ownship_speed=62.0,
            intruder_speed=68.0,
            hmd=40.0,
            vmd=-12.0,
            relative_heading=150.0,
        )
        encounter = build_trajectories(features)
        placed = place_in_region(encounter, np.random.default_rng(9))
        assert placed.placed
        for before, after in zip(_geometry_series(encounter), _geometry_series(placed)):
            assert after.horizontal_range == pytest.approx(
                before.horizontal_range, abs=1e-9
            )
            assert after.vertical_offset == pytest.approx(
                before.vertical_offset, abs=1e-9
            )
            assert after.bearing == pytest.approx(before.bearing, abs=1e-9)

    def test_offsets_within_bounds(self, head_on_encounter):
        """Test the shared shift respects the configured bounds."""
        rng = np.random.default_rng(2)
        config = PlacementConfig()
        for _ in range(1000):
            at_cpa = place_in_region(head_on_encounter, rng, config).ownship_script[40]
            assert abs(at_cpa.east) <= config.horizontal_bound
            assert abs(at_cpa.north) <= config.horizontal_bound
            assert abs(at_cpa.up) <= config.altitude_bound

    def test_identity_placement(self, head_on_encounter):
        """Test zero rotation and zero shift leave the scripts unchanged."""
        placed = place_in_region(
            head_on_encounter, np.random.default_rng(0), PlacementConfig.identity()
        )
        for name in ("ownship_script", "intruder_script"):
            assert [s.model_dump() for s in getattr(placed, name)] == [
                s.model_dump() for s in getattr(head_on_encounter, name)
            ]

    def test_double_placement_rejected(self, head_on_encounter):
        """Test an encounter can only be placed once."""
        placed = place_in_region(head_on_encounter, np.random.default_rng(0))
        with pytest.raises(ValueError, match="already placed"):
            place_in_region(placed, np.random.default_rng(0))


class TestConditions:
    """Test the condition grid and condition sampling."""

    def test_grid_has_288_distinct_cells(self):
        """Test the factorial enumeration."""
        cells = condition_grid()
        assert len(cells) == 288
        assert len(set(cells)) == 288

    def test_local_time_within_day(self):
        """Test sampled local times stay between 8:00 and 17:00."""
        rng = np.random.default_rng(4)
        for _ in range(2000):
            assert 8.0 <= sample_conditions(rng).local_time <= 17.0

    def test_cell_fixes_categorical_facets(self):
        """Test a cell pins weather, region, aircraft and time window."""
        rng = np.random.default_rng(4)
        for cell in condition_grid()[:20]:
            conditions = sample_conditions(rng, cell=cell)
            assert conditions.weather is cell.weather
            assert conditions.region is cell.region
            assert conditions.aircraft is cell.aircraft
            assert conditions.time_window is cell.window


class TestIntruderRange:
    """Test the gamma range models."""

    def test_cessna_mean(self):
        """Test Gamma(2, 200) has mean near 400 m."""
        rng = np.random.default_rng(0)
        config = SceneConfig()
        samples = [
            sample_intruder_range(rng, AircraftType.CESSNA_SKYHAWK, config)
            for _ in range(100_000)
        ]
        assert np.mean(samples) == pytest.approx(400.0, abs=5.0)

    def test_boeing_mean_and_floor(self):
        """Test Gamma(3, 200) has mean near 600 m and never goes below 50 m."""
        rng = np.random.default_rng(0)
        config = SceneConfig()
        samples = np.array(
            [
                sample_intruder_range(rng, AircraftType.BOEING_737, config)
                for _ in range(100_000)
            ]
        )
        assert samples.mean() == pytest.approx(600.0, abs=5.0)
        assert samples.min() > 50.0

    def test_scene_attitude_limits(self):
        """Test scene pitch and roll respect their clipping limits."""
        rng = np.random.default_rng(8)
        config = SceneConfig()
        for _ in range(1000):
            scene = sample_image_scene(rng, config)
            assert abs(scene.ownship.pitch) <= config.pitch_limit
            assert abs(scene.ownship.roll) <= config.roll_limit


class TestGenerateEncounters:
    """Test batch generation."""

    def test_factorial_one_per_cell(self):
        """Test 288 cells with one encounter each."""
        encounters = generate_encounters(7, grid="factorial", n=288)
        assert [e.encounter_id for e in encounters] == list(range(288))
        cells = {
            (c.weather, c.region, c.time_window, c.aircraft)
            for c in (e.conditions for e in encounters)
        }
        assert len(cells) == 288

    def test_factorial_requires_multiple_of_cells(self):
        """Test a factorial count that does not fill every cell equally."""
        with pytest.raises(ValueError, match="288"):
            generate_encounters(7, grid="factorial", n=100)

    def test_iid_requires_count(self):
        """Test i.i.d. generation without a count."""
        with pytest.raises(ValueError):
            generate_encounters(7, grid="iid")

    def test_generation_is_deterministic(self):
        """Test the same seed gives identical encounters."""
        first = generate_encounters(3, grid="iid", n=4)
        assert first == generate_encounters(3, grid="iid", n=4)

    def test_encounter_independent_of_batch(self):
        """Test encounter i does not depend on the batch it was generated in."""
        batch = generate_encounters(3, grid="iid", n=5)
        assert sample_encounter(4, 3) == batch[4]

    def test_different_seeds_differ(self):
        """Test distinct master seeds give distinct features."""
        first = generate_encounters(1, grid="iid", n=1)[0]
        second = generate_encounters(2, grid="iid", n=1)[0]
        assert first.features != second.features
