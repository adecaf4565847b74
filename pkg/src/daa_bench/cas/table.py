"""Solved policy tables: advisory queries and the AVDP file format.

File layout (little-endian)::

    "AVDP"                      magic
    u32                         format version
    u32                         dimension count d
    u32 x d                     grid sizes
    f64 x sum(sizes)            grid coordinates, dimension by dimension
    u32                         advisory count
    f32 x nodes*advisories**2   Q-values (node, previous advisory, action)
    u32 + bytes                 length-prefixed UTF-8 JSON (MDP parameters,
                                advisory names, solver metadata)
    u32                         CRC32 of everything above
"""

from __future__ import annotations

import csv
import json
import logging
import struct
import zlib
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..core.errors import (
    TableChecksumError,
    TableFormatError,
    TableTruncatedError,
    TableVersionError,
)
from .advisories import ADVISORIES, Advisory
from .interpolation import interpolation_stencil
from .mdp import CasState, MdpSpec

logger = logging.getLogger(__name__)

MAGIC = b"AVDP"
FORMAT_VERSION = 1
_GRID_FIELDS = ("h_grid", "dh_own_grid", "dh_int_grid", "tau_grid")


class PolicyTable(BaseModel):
    """Immutable solved Q-table over the MDP grid."""

    spec: MdpSpec
    q_values: np.ndarray = Field(
        ..., description="float32, shaped (nodes, previous advisory, action)"
    )
    iterations: int = Field(0, ge=0)
    residual: float = Field(0.0, ge=0.0)

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @model_validator(mode="after")
    def check_shape(self) -> PolicyTable:
        if self.q_values.shape != self.spec.q_shape:
            msg = f"Q-values shaped {self.q_values.shape}, expected {self.spec.q_shape}"
            raise ValueError(msg)
        self.q_values.setflags(write=False)
        return self

    def node_index(self, h: int, dh_own: int, dh_int: int, tau: int) -> int:
        """Flat node index of grid indices."""
        _, n_own, n_int, n_tau = self.spec.grid_shape
        return ((h * n_own + dh_own) * n_int + dh_int) * n_tau + tau


def interpolate_q(table: PolicyTable, state: CasState) -> np.ndarray:
    """Per-action Q-values at a state, multilinear in the continuous dimensions.

    Continuous components are clamped to the grid; the previous advisory is
    indexed exactly.
    """
    point = np.array([[state.h, state.dh_own, state.dh_int, state.tau]])
    indices, weights = interpolation_stencil(table.spec.grids, point)
    rows = table.q_values[indices[0], state.prev_advisory.index, :].astype(float)
    return weights[0] @ rows


def query_policy(table: PolicyTable, state: CasState) -> Advisory:
    """Greedy advisory at a state; ties go to the earliest advisory, COC first."""
    return ADVISORIES[int(np.argmax(interpolate_q(table, state)))]


def _metadata(table: PolicyTable) -> bytes:
    spec = table.spec.model_dump(mode="json", exclude=set(_GRID_FIELDS))
    document = {
        "spec": spec,
        "advisories": [advisory.value for advisory in table.spec.actions],
        "iterations": table.iterations,
        "residual": table.residual,
    }
    return json.dumps(document, sort_keys=True).encode("utf-8")


def encode_table(table: PolicyTable) -> bytes:
    parts = [MAGIC, struct.pack("<II", FORMAT_VERSION, len(_GRID_FIELDS))]
    parts.append(struct.pack(f"<{len(_GRID_FIELDS)}I", *table.spec.grid_shape))
    for grid in table.spec.grids:
        parts.append(np.asarray(grid, dtype="<f8").tobytes())
    parts.append(struct.pack("<I", len(table.spec.actions)))
    parts.append(np.ascontiguousarray(table.q_values, dtype="<f4").tobytes())
    metadata = _metadata(table)
    parts.append(struct.pack("<I", len(metadata)))
    parts.append(metadata)
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body))


class _Reader:
    def __init__(self, data: bytes) -> None:
        self.data = data
        self.offset = 0

    def take(self, size: int, what: str) -> bytes:
        if self.offset + size > len(self.data):
            msg = (
                f"File ends inside {what} "
                f"(needs {size} bytes at offset {self.offset})"
            )
            raise TableTruncatedError(msg)
        chunk = self.data[self.offset : self.offset + size]
        self.offset += size
        return chunk

    def u32(self, what: str) -> int:
        return int(struct.unpack("<I", self.take(4, what))[0])


def decode_table(data: bytes) -> PolicyTable:
    """Parse AVDP bytes.

    Raises:
        TableFormatError: Wrong magic, inconsistent layout or trailing bytes
        TableVersionError: Unsupported format version
        TableTruncatedError: The data ends before the layout is complete
        TableChecksumError: CRC32 mismatch
    """
    reader = _Reader(data)
    if reader.take(len(MAGIC), "magic") != MAGIC:
        msg = "Not a policy table (bad magic)"
        raise TableFormatError(msg)
    version = reader.u32("version")
    if version != FORMAT_VERSION:
        raise TableVersionError(version, FORMAT_VERSION)
    ndim = reader.u32("dimension count")
    if ndim != len(_GRID_FIELDS):
        msg = f"Expected {len(_GRID_FIELDS)} dimensions, found {ndim}"
        raise TableFormatError(msg)
    sizes = struct.unpack(f"<{ndim}I", reader.take(4 * ndim, "grid sizes"))
    grids = [
        tuple(
            float(x)
            for x in np.frombuffer(reader.take(8 * size, "grid coordinates"), "<f8")
        )
        for size in sizes
    ]
    n_advisories = reader.u32("advisory count")
    if n_advisories != len(ADVISORIES):
        msg = f"Expected {len(ADVISORIES)} advisories, found {n_advisories}"
        raise TableFormatError(msg)
    n_nodes = int(np.prod(sizes, dtype=np.int64))
    q_bytes = reader.take(4 * n_nodes * n_advisories * n_advisories, "Q-values")
    metadata_bytes = reader.take(reader.u32("metadata length"), "metadata")
    body_end = reader.offset
    checksum = reader.u32("checksum")
    if reader.offset != len(data):
        msg = f"{len(data) - reader.offset} unexpected trailing bytes"
        raise TableFormatError(msg)
    if zlib.crc32(data[:body_end]) != checksum:
        msg = "Policy table checksum mismatch"
        raise TableChecksumError(msg)

    try:
        metadata: dict[str, Any] = json.loads(metadata_bytes.decode("utf-8"))
        spec = MdpSpec.model_validate(
            {**metadata["spec"], **dict(zip(_GRID_FIELDS, grids))}
        )
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, ValueError) as e:
        msg = f"Invalid policy table metadata: {e}"
        raise TableFormatError(msg) from e
    q_values = (
        np.frombuffer(q_bytes, dtype="<f4")
        .astype(np.float32)
        .reshape(n_nodes, n_advisories, n_advisories)
    )
    return PolicyTable(
        spec=spec,
        q_values=q_values,
        iterations=int(metadata.get("iterations", 0)),
        residual=float(metadata.get("residual", 0.0)),
    )


def save_table(table: PolicyTable, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_table(table))
    logger.info("Wrote policy table %s", path)


def load_table(path: str | Path) -> PolicyTable:
    """Read a policy table written by ``save_table``."""
    return decode_table(Path(path).read_bytes())


def export_table_csv(table: PolicyTable, path: str | Path) -> None:
    """One row per (node, previous advisory) with a Q column per action."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    coords = table.spec.node_coordinates()
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        actions = [a.value for a in table.spec.actions]
        writer.writerow(["h", "dh_own", "dh_int", "tau", "prev_advisory", *actions])
        for node, coordinates in enumerate(coords):
            cells = [repr(float(x)) for x in coordinates]
            for p, previous in enumerate(table.spec.actions):
                q_row = table.q_values[node, p]
                writer.writerow(
                    [*cells, previous.value, *(repr(float(q)) for q in q_row)]
                )
