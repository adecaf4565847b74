"""YOLO label files and their six-column prediction variant.

Labels hold one ``class cx cy w h`` line per object; prediction files append
a confidence column: ``class cx cy w h conf``.
"""

from __future__ import annotations

import math
from collections.abc import Iterable

from pydantic import BaseModel, ConfigDict, Field

from ..core.errors import LabelParseError
from ..core.models import BoundingBox


class LabelRecord(BaseModel):
    """One labelled object."""

    class_id: int = Field(0, ge=0)
    center_x: float = Field(..., ge=0.0, le=1.0)
    center_y: float = Field(..., ge=0.0, le=1.0)
    width: float = Field(..., gt=0.0, le=1.0)
    height: float = Field(..., gt=0.0, le=1.0)

    model_config = ConfigDict(frozen=True)

    def to_box(self, confidence: float = 1.0) -> BoundingBox:
        return BoundingBox(
            center_x=self.center_x,
            center_y=self.center_y,
            width=self.width,
            height=self.height,
            class_id=self.class_id,
            confidence=confidence,
        )

    @classmethod
    def from_box(cls, box: BoundingBox) -> LabelRecord:
        return cls(
            class_id=box.class_id,
            center_x=box.center_x,
            center_y=box.center_y,
            width=box.width,
            height=box.height,
        )


_FIELD_NAMES = ("center_x", "center_y", "width", "height", "confidence")


def _parse_lines(text: str, n_fields: int) -> list[tuple[int, list[float]]]:
    rows = []
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != n_fields:
            msg = f"expected {n_fields} fields, found {len(parts)}"
            raise LabelParseError(msg, line_number, original_data=raw)
        try:
            class_id = int(parts[0])
        except ValueError:
            msg = f"class id {parts[0]!r} is not an integer"
            raise LabelParseError(msg, line_number, original_data=raw) from None
        if class_id < 0:
            msg = f"class id {class_id} is negative"
            raise LabelParseError(msg, line_number, original_data=raw)
        values = []
        for name, token in zip(_FIELD_NAMES, parts[1:]):
            try:
                value = float(token)
            except ValueError:
                msg = f"{name} {token!r} is not a number"
                raise LabelParseError(msg, line_number, original_data=raw) from None
            if not math.isfinite(value) or not 0.0 <= value <= 1.0:
                msg = f"{name} {token} outside [0, 1]"
                raise LabelParseError(msg, line_number, original_data=raw)
            values.append(value)
        if values[2] == 0.0 or values[3] == 0.0:
            msg = "box width and height must be positive"
            raise LabelParseError(msg, line_number, original_data=raw)
        rows.append((class_id, values))
    return rows


def parse_yolo_label(text: str) -> list[LabelRecord]:
    """Parse label text; blank lines are skipped.

    Raises:
        LabelParseError: On a wrong field count, a non-numeric field or a
            coordinate outside [0, 1], naming the line
    """
    return [
        LabelRecord(
            class_id=class_id, center_x=v[0], center_y=v[1], width=v[2], height=v[3]
        )
        for class_id, v in _parse_lines(text, 5)
    ]


def write_yolo_label(records: Iterable[LabelRecord], decimals: int = 6) -> str:
    lines = []
    for r in records:
        values = (r.center_x, r.center_y, r.width, r.height)
        fields = [str(r.class_id), *(f"{v:.{decimals}f}" for v in values)]
        lines.append(" ".join(fields))
    return "".join(line + "\n" for line in lines)


def parse_yolo_predictions(text: str) -> list[BoundingBox]:
    """Parse six-column prediction text into scored boxes.

    Raises:
        LabelParseError: As for labels; the confidence must also lie in [0, 1]
    """
    return [
        BoundingBox(
            center_x=v[0],
            center_y=v[1],
            width=v[2],
            height=v[3],
            class_id=class_id,
            confidence=v[4],
        )
        for class_id, v in _parse_lines(text, 6)
    ]


def write_yolo_predictions(boxes: Iterable[BoundingBox], decimals: int = 6) -> str:
    lines = [
        f"{b.class_id} {b.center_x:.{decimals}f} {b.center_y:.{decimals}f} "
        f"{b.width:.{decimals}f} {b.height:.{decimals}f} {b.confidence:.{decimals}f}"
        for b in boxes
    ]
    return "".join(line + "\n" for line in lines)
