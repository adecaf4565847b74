"""Tests for relative geometry and the camera model."""

import math

import numpy as np
import pytest

from daa_bench.core.errors import GeometryError
from daa_bench.core.geometry import (
    camera_relative_geometry,
    estimate_state_from_box,
    in_field_of_view,
    level_from_camera,
    project_to_image,
    relative_geometry,
    state_from_image_point,
)
from daa_bench.core.models import (
    AircraftState,
    BoundingBox,
    CameraModel,
    RangeBucket,
    RelativeAltitude,
    RelativeGeometry,
    TimeWindow,
    aircraft_class,
    range_bucket,
    relative_altitude,
    time_window,
    wrap_bearing,
)

CESSNA = aircraft_class("CessnaSkyhawk")
CAMERA = CameraModel(horizontal_fov=60.0)


class TestRelativeGeometry:
    """Test relative_geometry."""

    def test_intruder_ahead_and_above(self, level_ownship):
        """Test an axis-aligned intruder straight ahead."""
        intruder = AircraftState(north=1000.0, up=100.0)
        rel = relative_geometry(level_ownship, intruder)
        assert rel.horizontal_range == pytest.approx(1000.0)
        assert rel.vertical_offset == pytest.approx(100.0)
        assert rel.bearing == pytest.approx(0.0)

    def test_intruder_to_the_east(self, level_ownship):
        """Test that an intruder due east sits at bearing +90."""
        rel = relative_geometry(level_ownship, AircraftState(east=1000.0))
        assert rel.bearing == pytest.approx(90.0)

    def test_head_on_closing_speed(self):
        """Test closing speed of two aircraft flying at each other."""
        ownship = AircraftState(heading=0.0, ground_speed=60.0)
        intruder = AircraftState(north=4800.0, heading=180.0, ground_speed=60.0)
        rel = relative_geometry(ownship, intruder)
        assert rel.horizontal_closing_speed == pytest.approx(120.0)

    def test_bearing_relative_to_heading(self):
        """Test that bearing is measured from the ownship heading."""
        ownship = AircraftState(heading=90.0)
        rel = relative_geometry(ownship, AircraftState(east=500.0))
        assert rel.bearing == pytest.approx(0.0, abs=1e-9)

    def test_swapping_aircraft_preserves_range(self):
        """Test range is symmetric and the vertical offset flips sign."""
        rng = np.random.default_rng(11)
        for _ in range(100):
            first = AircraftState(
                east=float(rng.uniform(-3000.0, 3000.0)),
                north=float(rng.uniform(-3000.0, 3000.0)),
                up=float(rng.uniform(0.0, 3000.0)),
                heading=float(rng.uniform(0.0, 360.0)),
            )
            second = AircraftState(
                east=float(rng.uniform(-3000.0, 3000.0)),
                north=float(rng.uniform(-3000.0, 3000.0)),
                up=float(rng.uniform(0.0, 3000.0)),
                heading=float(rng.uniform(0.0, 360.0)),
            )
            forward = relative_geometry(first, second)
            backward = relative_geometry(second, first)
            assert forward.horizontal_range == pytest.approx(backward.horizontal_range)
            assert forward.vertical_offset == pytest.approx(-backward.vertical_offset)

    def test_rotation_about_ownship_is_invisible(self):
        """Test rotating the scene and the ownship heading together."""
        rng = np.random.default_rng(12)
        for _ in range(100):
            ownship = AircraftState(
                east=float(rng.uniform(-1000.0, 1000.0)),
                north=float(rng.uniform(-1000.0, 1000.0)),
                heading=float(rng.uniform(0.0, 360.0)),
                ground_speed=60.0,
            )
            intruder = AircraftState(
                east=float(rng.uniform(-3000.0, 3000.0)),
                north=float(rng.uniform(-3000.0, 3000.0)),
                up=float(rng.uniform(-300.0, 300.0)),
                heading=float(rng.uniform(0.0, 360.0)),
                ground_speed=80.0,
            )
            angle = float(rng.uniform(0.0, 360.0))
            theta = math.radians(angle)
            cos_t, sin_t = math.cos(theta), math.sin(theta)
            d_east = intruder.east - ownship.east
            d_north = intruder.north - ownship.north
            rotated_intruder = intruder.model_copy(
                update={
                    "east": ownship.east + d_east * cos_t + d_north * sin_t,
                    "north": ownship.north - d_east * sin_t + d_north * cos_t,
                    "heading": (intruder.heading + angle) % 360.0,
                }
            )
            rotated_ownship = ownship.model_copy(
                update={"heading": (ownship.heading + angle) % 360.0}
            )
            before = relative_geometry(ownship, intruder)
            after = relative_geometry(rotated_ownship, rotated_intruder)
            assert after.horizontal_range == pytest.approx(before.horizontal_range)
            assert after.vertical_offset == pytest.approx(before.vertical_offset)
            turned = wrap_bearing(after.bearing - before.bearing)
            assert turned == pytest.approx(0.0, abs=1e-6)
            assert after.horizontal_closing_speed == pytest.approx(
                before.horizontal_closing_speed, abs=1e-6
            )

    def test_bearing_wraps(self):
        """Test bearings wrap into (-180, 180]."""
        assert wrap_bearing(180.0) == 180.0
        assert wrap_bearing(-180.0) == 180.0
        assert wrap_bearing(270.0) == pytest.approx(-90.0)


class TestFieldOfView:
    """Test in_field_of_view."""

    def test_boresight_is_in_view(self):
        """Test the camera axis is inside the frustum."""
        rel = RelativeGeometry(horizontal_range=100.0, vertical_offset=0.0)
        assert in_field_of_view(CAMERA, rel)

    def test_just_outside_horizontal_edge(self):
        """Test a bearing one degree beyond half the field of view."""
        rel = RelativeGeometry(
            horizontal_range=100.0, vertical_offset=0.0, bearing=31.0
        )
        assert not in_field_of_view(CAMERA, rel)

    def test_behind_is_out_of_view(self):
        """Test an intruder directly behind."""
        rel = RelativeGeometry(
            horizontal_range=100.0, vertical_offset=0.0, bearing=180.0
        )
        assert not in_field_of_view(CAMERA, rel)

    def test_attitude_changes_visibility(self):
        """Test that pitching up moves a level intruder below the frame."""
        pitched = AircraftState(pitch=40.0)
        rel = camera_relative_geometry(pitched, AircraftState(north=1000.0))
        assert rel.elevation == pytest.approx(-40.0)
        assert not in_field_of_view(CAMERA, rel)


class TestProjection:
    """Test project_to_image and its inverse."""

    def test_dead_ahead_projects_to_center(self, level_ownship):
        """Test symmetry of a level intruder straight ahead."""
        intruder = AircraftState(north=400.0)
        box = project_to_image(CAMERA, level_ownship, intruder, CESSNA)
        assert box is not None
        assert box.center_x == pytest.approx(0.5)
        assert box.center_y == pytest.approx(0.5)

    def test_horizontal_edge_projects_to_border(self, level_ownship):
        """Test an intruder at bearing +hfov/2 lands on the right edge."""
        angle = math.radians(30.0)
        intruder = AircraftState(
            east=1000.0 * math.sin(angle), north=1000.0 * math.cos(angle)
        )
        box = project_to_image(CAMERA, level_ownship, intruder, CESSNA)
        assert box is not None
        assert box.center_x == pytest.approx(1.0)
        assert box.center_y == pytest.approx(0.5)

    def test_edge_box_keeps_full_extent(self, level_ownship):
        """Test a box overhanging the right edge still measures the full wingspan."""
        angle = math.radians(29.5)
        intruder = AircraftState(
            east=100.0 * math.sin(angle), north=100.0 * math.cos(angle)
        )
        box = project_to_image(CAMERA, level_ownship, intruder, CESSNA)
        expected = 2.0 * math.atan(5.5 / 100.0) / math.radians(60.0)
        assert box.width == pytest.approx(expected)
        estimate = estimate_state_from_box(CAMERA, box, CESSNA)
        assert estimate.slant_range == pytest.approx(100.0, rel=1e-6)
        assert estimate.bearing == pytest.approx(29.5, abs=1e-6)

    def test_cessna_width_at_400_m(self, level_ownship):
        """Test the angular width of an 11 m wingspan at 400 m."""
        intruder = AircraftState(north=400.0)
        box = project_to_image(CAMERA, level_ownship, intruder, CESSNA)
        expected = 2.0 * math.atan(5.5 / 400.0) / math.radians(60.0)
        assert box.width == pytest.approx(expected)
        assert box.width == pytest.approx(0.0263, abs=1e-4)

    def test_out_of_view_gives_no_box(self, level_ownship):
        """Test an intruder behind the ownship."""
        intruder = AircraftState(north=-400.0)
        assert project_to_image(CAMERA, level_ownship, intruder, CESSNA) is None

    def test_center_box_estimates_boresight(self):
        """Test a centered box maps to bearing and elevation zero."""
        box = BoundingBox(center_x=0.5, center_y=0.5, width=0.02, height=0.01)
        rel = estimate_state_from_box(CAMERA, box, CESSNA)
        assert rel.bearing == pytest.approx(0.0)
        assert rel.elevation == pytest.approx(0.0)

    def test_full_width_box_range(self):
        """Test the closed-form range of a box spanning the whole image."""
        box = BoundingBox(center_x=0.5, center_y=0.5, width=1.0, height=0.1)
        rel = estimate_state_from_box(CAMERA, box, CESSNA)
        expected = 11.0 / (2.0 * math.tan(math.radians(30.0)))
        assert rel.slant_range == pytest.approx(expected)
        assert rel.slant_range == pytest.approx(9.53, abs=0.01)

    def test_degenerate_box_rejected(self):
        """Test that a zero-width box cannot be inverted."""
        box = BoundingBox.model_construct(
            center_x=0.5,
            center_y=0.5,
            width=0.0,
            height=0.1,
            class_id=0,
            confidence=1.0,
        )
        with pytest.raises(GeometryError):
            estimate_state_from_box(CAMERA, box, CESSNA)

    def test_round_trip_recovers_geometry(self):
        """Test estimate(project(state)) over the whole frame from 100 m to 2 km."""
        rng = np.random.default_rng(3)
        names = ("CessnaSkyhawk", "KingAirC90", "Boeing737")
        classes = [aircraft_class(name) for name in names]
        for i in range(1000):
            extents = classes[i % len(classes)]
            ownship = AircraftState(
                east=float(rng.uniform(-5000.0, 5000.0)),
                north=float(rng.uniform(-5000.0, 5000.0)),
                up=float(rng.uniform(500.0, 3000.0)),
                heading=float(rng.uniform(0.0, 360.0)),
                pitch=float(np.clip(rng.normal(0.0, 5.0), -30.0, 30.0)),
                roll=float(np.clip(rng.normal(0.0, 10.0), -45.0, 45.0)),
            )
            slant = float(rng.uniform(100.0, 2000.0))
            u, v = (float(x) for x in rng.uniform(0.0, 1.0, size=2))
            position = state_from_image_point(CAMERA, ownship, u, v, slant)
            intruder = AircraftState(
                east=float(position[0]),
                north=float(position[1]),
                up=float(position[2]),
            )
            box = project_to_image(CAMERA, ownship, intruder, extents)
            assert box is not None
            truth = camera_relative_geometry(ownship, intruder)
            estimate = estimate_state_from_box(CAMERA, box, extents)
            assert estimate.slant_range == pytest.approx(truth.slant_range, rel=0.01)
            assert estimate.bearing == pytest.approx(truth.bearing, abs=0.1)
            assert estimate.elevation == pytest.approx(truth.elevation, abs=0.1)
            level = level_from_camera(estimate, ownship)
            expected = relative_geometry(ownship, intruder).slant_range
            assert level.slant_range == pytest.approx(expected, rel=0.01)


class TestSlicingHelpers:
    """Test the enumerations used for slicing."""

    def test_time_windows(self):
        """Test window boundaries are half-open with 17:00 inclusive."""
        assert time_window(9.5) is TimeWindow.MORNING
        assert time_window(10.0) is TimeWindow.MIDDAY
        assert time_window(17.0) is TimeWindow.LATE_AFTERNOON
        with pytest.raises(ValueError):
            time_window(7.9)

    def test_range_buckets(self):
        """Test range buckets are half-open."""
        assert range_bucket(149.9) is RangeBucket.NEAR
        assert range_bucket(150.0) is RangeBucket.MID
        assert range_bucket(500.0) is RangeBucket.FAR

    def test_relative_altitude(self):
        """Test zero offset counts as above."""
        assert relative_altitude(-0.1) is RelativeAltitude.BELOW
        assert relative_altitude(0.0) is RelativeAltitude.ABOVE
