"""Client for out-of-process detectors speaking newline-delimited JSON.

Each step sends one request line::

    {"id": 7, "image": "frames/3_7.png", "scene": {...},
     "camera": {"hfov": 100.0, "width": 1280, "height": 720}}

and reads one response line with the same id::

    {"id": 7, "boxes": [{"cx": 0.5, "cy": 0.5, "w": 0.01, "h": 0.004, "conf": 0.9}]}

The endpoint is either a child process (``exec:<command line>``) talking over
its standard streams or a TCP socket (``tcp://host:port``).
"""

from __future__ import annotations

import json
import logging
import os
import queue
import shlex
import socket
import subprocess
import threading
from typing import IO, Any
from urllib.parse import urlparse

import jsonschema

from ..config.settings import ExternalDetectorConfig, PerceptionBackendKind
from ..core.errors import (
    ConfigError,
    DetectorProtocolError,
    DetectorTimeoutError,
    PerceptionError,
)
from ..core.models import AircraftState, BoundingBox, CameraModel, Conditions
from .backends import (
    IntruderEstimate,
    PerceptionBackend,
    PerceptionSource,
    assumed_aircraft,
    geometry_from_box,
)

logger = logging.getLogger(__name__)

ENDPOINT_ENV_VAR = "DAA_BENCH_DETECTOR"

RESPONSE_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["id", "boxes"],
    "properties": {
        "id": {"type": "integer"},
        "boxes": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["cx", "cy", "w", "h"],
                "properties": {
                    "cx": {"type": "number", "minimum": 0, "maximum": 1},
                    "cy": {"type": "number", "minimum": 0, "maximum": 1},
                    "w": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                    "h": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                    "conf": {"type": "number", "minimum": 0, "maximum": 1},
                },
            },
        },
    },
}

_EOF = object()


class _LineChannel:
    """Bidirectional line transport with a reader thread feeding a queue."""

    def __init__(self, reader: IO[str], writer: IO[str], closer: Any) -> None:
        self._writer = writer
        self._closer = closer
        self._lines: queue.Queue[object] = queue.Queue()
        self._thread = threading.Thread(target=self._pump, args=(reader,), daemon=True)
        self._thread.start()

    def _pump(self, reader: IO[str]) -> None:
        try:
            for line in reader:
                self._lines.put(line)
        except (OSError, ValueError):
            pass
        self._lines.put(_EOF)

    def send(self, line: str) -> None:
        try:
            self._writer.write(line + "\n")
            self._writer.flush()
        except (OSError, ValueError) as e:
            msg = f"Detector endpoint closed: {e}"
            raise PerceptionError(msg) from e

    def receive(self, timeout: float) -> str | None:
        """Next line, or None on timeout; raises when the endpoint has closed."""
        try:
            item = self._lines.get(timeout=timeout)
        except queue.Empty:
            return None
        if item is _EOF:
            self._lines.put(_EOF)
            msg = "Detector endpoint closed its output"
            raise PerceptionError(msg)
        return str(item)

    def close(self) -> None:
        self._closer()


def _open_exec(command: str) -> _LineChannel:
    process = subprocess.Popen(  # noqa: S603
        shlex.split(command),
        stdin=subprocess.PIPE,
        stdout=subprocess.PIPE,
        text=True,
        bufsize=1,
    )

    def close() -> None:
        if process.stdin is not None:
            process.stdin.close()
        try:
            process.wait(timeout=2.0)
        except subprocess.TimeoutExpired:
            process.kill()
            process.wait()
        if process.stdout is not None:
            process.stdout.close()

    return _LineChannel(process.stdout, process.stdin, close)  # type: ignore[arg-type]


def _open_tcp(host: str, port: int) -> _LineChannel:
    connection = socket.create_connection((host, port))
    stream = connection.makefile("rw", encoding="utf-8", newline="\n")

    def close() -> None:
        stream.close()
        connection.close()

    return _LineChannel(stream, stream, close)


def open_channel(endpoint: str) -> _LineChannel:
    """Connect to ``exec:<command>`` or ``tcp://host:port``.

    Raises:
        ConfigError: If the endpoint string is not understood
        PerceptionError: If the endpoint cannot be reached
    """
    try:
        if endpoint.startswith("exec:"):
            return _open_exec(endpoint[len("exec:") :].strip())
        if endpoint.startswith("tcp://"):
            parsed = urlparse(endpoint)
            if parsed.hostname is None or parsed.port is None:
                msg = f"TCP endpoint needs host and port: {endpoint}"
                raise ConfigError(msg)
            return _open_tcp(parsed.hostname, parsed.port)
    except OSError as e:
        msg = f"Cannot reach detector endpoint {endpoint}: {e}"
        raise PerceptionError(msg) from e
    msg = (
        f"Unsupported detector endpoint {endpoint!r} "
        "(expected 'exec:<command>' or 'tcp://host:port')"
    )
    raise ConfigError(msg)


def parse_response(line: str) -> tuple[int, list[BoundingBox]]:
    """Validate one response line.

    Raises:
        DetectorProtocolError: On invalid JSON or a schema violation; the
            offending line is attached
    """
    try:
        document = json.loads(line)
    except json.JSONDecodeError as e:
        msg = f"Invalid JSON from detector: {e.msg}"
        raise DetectorProtocolError(msg, line=line) from e
    try:
        jsonschema.validate(document, RESPONSE_SCHEMA)
    except jsonschema.ValidationError as e:
        msg = f"Detector response violates protocol: {e.message}"
        raise DetectorProtocolError(msg, line=line) from e
    boxes = [
        BoundingBox(
            center_x=box["cx"],
            center_y=box["cy"],
            width=box["w"],
            height=box["h"],
            confidence=box.get("conf", 1.0),
        )
        for box in document["boxes"]
    ]
    return int(document["id"]), boxes


class ExternalDetector(PerceptionBackend):
    """Backend that delegates detection to another process."""

    kind = PerceptionBackendKind.EXTERNAL

    def __init__(
        self,
        camera: CameraModel,
        channel: _LineChannel,
        timeout: float = 5.0,
        on_timeout: str = "warn",
        image_template: str | None = None,
    ) -> None:
        super().__init__(camera)
        self.channel = channel
        self.timeout = timeout
        self.on_timeout = on_timeout
        self.image_template = image_template
        self.encounter_id = 0
        self.step = 0
        self._next_id = 0

    @classmethod
    def from_config(
        cls, config: ExternalDetectorConfig, camera: CameraModel
    ) -> ExternalDetector:
        """Connect using ``DAA_BENCH_DETECTOR``, else the configured endpoint."""
        endpoint = os.environ.get(ENDPOINT_ENV_VAR) or config.endpoint
        if not endpoint:
            msg = (
                f"External perception needs an endpoint (config or {ENDPOINT_ENV_VAR})"
            )
            raise ConfigError(msg)
        logger.info("Connecting to detector %s", endpoint)
        return cls(
            camera,
            open_channel(endpoint),
            config.timeout,
            config.on_timeout,
            config.image_template,
        )

    def start_encounter(self, encounter_id: int) -> None:
        self.encounter_id = encounter_id
        self.step = 0

    def request(
        self, ownship: AircraftState, conditions: Conditions | None
    ) -> dict[str, Any]:
        request_id = self._next_id
        self._next_id += 1
        scene: dict[str, Any] = {"ownship": ownship.model_dump(mode="json")}
        if conditions is not None:
            scene["conditions"] = conditions.model_dump(mode="json")
        image = None
        if self.image_template is not None:
            image = self.image_template.format(
                encounter_id=self.encounter_id, step=self.step, id=request_id
            )
        return {
            "id": request_id,
            "image": image,
            "scene": scene,
            "camera": {
                "hfov": self.camera.horizontal_fov,
                "width": self.camera.image_width,
                "height": self.camera.image_height,
            },
        }

    def detect(
        self, ownship: AircraftState, conditions: Conditions | None
    ) -> list[BoundingBox] | None:
        """Boxes for one request, or None after a timeout in warn mode.

        Raises:
            DetectorTimeoutError: On timeout when ``on_timeout`` is ``fail``
            DetectorProtocolError: On malformed or out-of-order responses
        """
        request = self.request(ownship, conditions)
        self.step += 1
        self.channel.send(json.dumps(request, sort_keys=True))
        while True:
            line = self.channel.receive(self.timeout)
            if line is None:
                msg = (
                    f"Detector did not answer request {request['id']} "
                    f"within {self.timeout} s"
                )
                if self.on_timeout == "fail":
                    raise DetectorTimeoutError(msg, timeout=self.timeout)
                logger.warning("%s; treating as undetected", msg)
                return None
            response_id, boxes = parse_response(line)
            if response_id < request["id"]:
                logger.debug("Discarding late response %d", response_id)
                continue
            if response_id != request["id"]:
                msg = (
                    f"Response id {response_id} does not match "
                    f"request id {request['id']}"
                )
                raise DetectorProtocolError(msg, line=line)
            return boxes

    def perceive(self, ownship, intruder, conditions, rng):  # type: ignore[no-untyped-def]
        boxes = self.detect(ownship, conditions)
        if not boxes:
            return None
        box = max(boxes, key=lambda b: b.confidence)
        rel = geometry_from_box(self.camera, box, assumed_aircraft(conditions), ownship)
        return IntruderEstimate(
            rel=rel, detected_box=box, source=PerceptionSource.EXTERNAL
        )

    def close(self) -> None:
        self.channel.close()
