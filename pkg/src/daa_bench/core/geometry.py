"""Relative geometry, attitude rotations and the pinhole camera model."""

from __future__ import annotations

import math

import numpy as np

from .errors import GeometryError
from .models import (
    AircraftClass,
    AircraftState,
    BoundingBox,
    CameraModel,
    RelativeGeometry,
    wrap_bearing,
)

# Frustum edges are inclusive; allow for rounding in the trig round trip.
_EDGE_TOLERANCE = 1e-9


def body_from_ned(state: AircraftState) -> np.ndarray:
    """Direction cosine matrix taking NED vectors into the body frame (3-2-1)."""
    psi = math.radians(state.heading)
    theta = math.radians(state.pitch)
    phi = math.radians(state.roll)
    cpsi, spsi = math.cos(psi), math.sin(psi)
    cth, sth = math.cos(theta), math.sin(theta)
    cphi, sphi = math.cos(phi), math.sin(phi)
    yaw = np.array([[cpsi, spsi, 0.0], [-spsi, cpsi, 0.0], [0.0, 0.0, 1.0]])
    pitch = np.array([[cth, 0.0, -sth], [0.0, 1.0, 0.0], [sth, 0.0, cth]])
    roll = np.array([[1.0, 0.0, 0.0], [0.0, cphi, sphi], [0.0, -sphi, cphi]])
    return roll @ pitch @ yaw


def enu_to_ned(vector: np.ndarray) -> np.ndarray:
    return np.array([vector[1], vector[0], -vector[2]])


def ned_to_enu(vector: np.ndarray) -> np.ndarray:
    return np.array([vector[1], vector[0], -vector[2]])


def _closing_speed(offset: np.ndarray, relative_velocity: np.ndarray) -> float:
    horizontal_range = math.hypot(offset[0], offset[1])
    if horizontal_range == 0.0:
        return 0.0
    range_rate = (
        offset[0] * relative_velocity[0] + offset[1] * relative_velocity[1]
    ) / horizontal_range
    return -range_rate


def _geometry_from_level_offset(
    offset_enu: np.ndarray, heading: float, closing_speed: float | None
) -> RelativeGeometry:
    horizontal_range = math.hypot(offset_enu[0], offset_enu[1])
    if horizontal_range == 0.0:
        bearing = 0.0
    else:
        azimuth = math.degrees(math.atan2(offset_enu[0], offset_enu[1]))
        bearing = wrap_bearing(azimuth - heading)
    elevation = math.degrees(math.atan2(offset_enu[2], horizontal_range))
    return RelativeGeometry(
        horizontal_range=horizontal_range,
        vertical_offset=float(offset_enu[2]),
        bearing=bearing,
        elevation=elevation,
        horizontal_closing_speed=closing_speed,
    )


def relative_geometry(
    ownship: AircraftState, intruder: AircraftState
) -> RelativeGeometry:
    """Intruder geometry in the ownship's heading-aligned level frame.

    Args:
        ownship: State of the sensing aircraft
        intruder: State of the other aircraft

    Returns:
        Range, vertical offset, bearing from the ownship heading (right
        positive), elevation above the horizon and horizontal closing speed
    """
    offset = intruder.position - ownship.position
    closing = _closing_speed(offset, intruder.velocity - ownship.velocity)
    return _geometry_from_level_offset(offset, ownship.heading, closing)


def _geometry_from_body_vector(
    vector: np.ndarray, closing_speed: float | None
) -> RelativeGeometry:
    horizontal = math.hypot(vector[0], vector[1])
    if horizontal == 0.0:
        bearing = 0.0
    else:
        bearing = wrap_bearing(math.degrees(math.atan2(vector[1], vector[0])))
    return RelativeGeometry(
        horizontal_range=horizontal,
        vertical_offset=float(-vector[2]),
        bearing=bearing,
        elevation=math.degrees(math.atan2(-vector[2], horizontal)),
        horizontal_closing_speed=closing_speed,
    )


def camera_relative_geometry(
    ownship: AircraftState, intruder: AircraftState
) -> RelativeGeometry:
    """Attitude-corrected geometry: bearing and elevation in the ownship body frame.

    The closing speed is the level-frame horizontal closing speed.
    """
    offset = intruder.position - ownship.position
    body = body_from_ned(ownship) @ enu_to_ned(offset)
    closing = _closing_speed(offset, intruder.velocity - ownship.velocity)
    return _geometry_from_body_vector(body, closing)


def level_from_camera(
    rel: RelativeGeometry, ownship: AircraftState
) -> RelativeGeometry:
    """Rotate a body-frame geometry back into the ownship's level frame."""
    body = rel.slant_range * line_of_sight(rel)
    offset = ned_to_enu(body_from_ned(ownship).T @ body)
    return _geometry_from_level_offset(
        offset, ownship.heading, rel.horizontal_closing_speed
    )


def line_of_sight(rel: RelativeGeometry) -> np.ndarray:
    """Unit vector (forward, right, down) toward the intruder."""
    bearing = math.radians(rel.bearing)
    elevation = math.radians(rel.elevation)
    return np.array(
        [
            math.cos(elevation) * math.cos(bearing),
            math.cos(elevation) * math.sin(bearing),
            -math.sin(elevation),
        ]
    )


def _image_plane(cam: CameraModel, rel: RelativeGeometry) -> tuple[float, float] | None:
    """Normalized image-plane tangents (right, down), or None behind the camera."""
    forward, right, down = line_of_sight(rel)
    if forward <= 0.0:
        return None
    return right / forward, down / forward


def in_field_of_view(cam: CameraModel, rel: RelativeGeometry) -> bool:
    """Whether the intruder center lies inside the camera frustum.

    ``rel`` should be attitude-corrected (see ``camera_relative_geometry``).
    Along the boresight row and column this is exactly
    ``|bearing| <= hfov/2 and |elevation| <= vfov/2``.
    """
    tangents = _image_plane(cam, rel)
    if tangents is None:
        return False
    tan_x, tan_y = tangents
    return abs(tan_x) <= cam.tan_half_horizontal * (1.0 + _EDGE_TOLERANCE) and abs(
        tan_y
    ) <= cam.tan_half_vertical * (1.0 + _EDGE_TOLERANCE)


def image_point(cam: CameraModel, rel: RelativeGeometry) -> tuple[float, float] | None:
    """Pinhole projection of the intruder center in normalized image coordinates."""
    if not in_field_of_view(cam, rel):
        return None
    tan_x, tan_y = _image_plane(cam, rel)  # type: ignore[misc]
    center_x = 0.5 + 0.5 * tan_x / cam.tan_half_horizontal
    center_y = 0.5 + 0.5 * tan_y / cam.tan_half_vertical
    return min(max(center_x, 0.0), 1.0), min(max(center_y, 0.0), 1.0)


def angular_extent(size_m: float, range_m: float, fov_deg: float) -> float:
    """Fraction of the field of view subtended by an object of ``size_m``."""
    if range_m <= 0.0:
        return 1.0
    return 2.0 * math.atan(size_m / 2.0 / range_m) / math.radians(fov_deg)


def project_to_image(
    cam: CameraModel,
    ownship: AircraftState,
    intruder: AircraftState,
    aircraft: AircraftClass,
    class_id: int = 0,
) -> BoundingBox | None:
    """Ground-truth box for an intruder, or None when its center is out of view.

    The center is the exact pinhole projection, so a box near the frame edge
    may overhang it. Width and height are the angular extents of the wingspan
    and height at the slant range, each capped at the full frame.
    """
    rel = camera_relative_geometry(ownship, intruder)
    point = image_point(cam, rel)
    if point is None:
        return None
    center_x, center_y = point
    slant = rel.slant_range
    return BoundingBox(
        center_x=center_x,
        center_y=center_y,
        width=min(angular_extent(aircraft.wingspan, slant, cam.horizontal_fov), 1.0),
        height=min(angular_extent(aircraft.height, slant, cam.vertical_fov), 1.0),
        class_id=class_id,
        confidence=1.0,
    )


def estimate_state_from_box(
    cam: CameraModel, box: BoundingBox, assumed_class: AircraftClass
) -> RelativeGeometry:
    """Invert ``project_to_image``: body-frame geometry from a box alone.

    The range follows from the assumed wingspan and the box width; the closing
    speed is left unset.

    Raises:
        GeometryError: If the box width is not positive
    """
    if box.width <= 0.0:
        msg = f"Degenerate box width {box.width}"
        raise GeometryError(msg)
    tan_x = (box.center_x - 0.5) * 2.0 * cam.tan_half_horizontal
    tan_y = (box.center_y - 0.5) * 2.0 * cam.tan_half_vertical
    forward_plane = math.hypot(1.0, tan_x)
    bearing = math.degrees(math.atan2(tan_x, 1.0))
    elevation = math.atan2(-tan_y, forward_plane)
    half_angle = box.width * math.radians(cam.horizontal_fov) / 2.0
    slant = assumed_class.wingspan / (2.0 * math.tan(half_angle))
    return RelativeGeometry(
        horizontal_range=slant * math.cos(elevation),
        vertical_offset=slant * math.sin(elevation),
        bearing=wrap_bearing(bearing),
        elevation=math.degrees(elevation),
        horizontal_closing_speed=None,
    )


def state_from_image_point(
    cam: CameraModel,
    ownship: AircraftState,
    center_x: float,
    center_y: float,
    slant_range: float,
) -> np.ndarray:
    """ENU position of a point seen at an image location and slant range."""
    direction = np.array(
        [
            1.0,
            (center_x - 0.5) * 2.0 * cam.tan_half_horizontal,
            (center_y - 0.5) * 2.0 * cam.tan_half_vertical,
        ]
    )
    body = slant_range * direction / np.linalg.norm(direction)
    return ownship.position + ned_to_enu(body_from_ned(ownship).T @ body)
