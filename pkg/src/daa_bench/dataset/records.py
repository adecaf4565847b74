"""Versioned JSON files: encounters, results, summaries and run manifests."""

from __future__ import annotations

import json
from collections.abc import Iterable
from datetime import datetime
from pathlib import Path
from typing import Any, TypeVar

from pydantic import BaseModel, ConfigDict, Field
from pydantic import ValidationError as PydanticValidationError

from ..core.errors import SchemaError, SchemaVersionError, format_validation_errors
from ..encounters.models import Encounter
from ..metrics.reports import SimulationSummary
from ..sim.models import EncounterResult

SCHEMA_VERSION = 1

ModelT = TypeVar("ModelT", bound=BaseModel)


def _dump(model: BaseModel, **kwargs: Any) -> dict[str, Any]:
    return {"schema_version": SCHEMA_VERSION, **model.model_dump(mode="json", **kwargs)}


def _load(text: str, model: type[ModelT]) -> ModelT:
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        msg = f"Invalid JSON: {e.msg}"
        raise SchemaError(msg, original_data=text) from e
    if not isinstance(document, dict):
        msg = f"Expected a JSON object, got {type(document).__name__}"
        raise SchemaError(msg, original_data=text)
    version = document.pop("schema_version", None)
    if version != SCHEMA_VERSION:
        raise SchemaVersionError(version, SCHEMA_VERSION, original_data=text)
    try:
        return model.model_validate(document)
    except PydanticValidationError as e:
        errors = e.errors()
        field = ".".join(str(loc) for loc in errors[0]["loc"]) or None
        msg = f"Invalid {model.__name__} document"
        raise SchemaError(
            msg,
            field=field,
            validation_errors=format_validation_errors(errors),
            original_data=text,
        ) from e


def encounter_to_json(encounter: Encounter) -> str:
    return json.dumps(_dump(encounter), indent=2, sort_keys=True) + "\n"


def encounter_from_json(text: str) -> Encounter:
    """Parse an encounter document.

    Raises:
        SchemaVersionError: If ``schema_version`` is missing or unsupported
        SchemaError: If the document is not a valid encounter
    """
    return _load(text, Encounter)


def write_encounters(
    encounters: Iterable[Encounter], directory: str | Path
) -> list[Path]:
    """One ``encounter_<id>.json`` per encounter."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for encounter in encounters:
        path = directory / f"encounter_{encounter.encounter_id:06d}.json"
        path.write_text(encounter_to_json(encounter), encoding="utf-8")
        paths.append(path)
    return paths


def read_encounters(directory: str | Path) -> list[Encounter]:
    """Every encounter file in a directory, ordered by id."""
    paths = sorted(Path(directory).glob("encounter_*.json"))
    encounters = [
        encounter_from_json(path.read_text(encoding="utf-8")) for path in paths
    ]
    return sorted(encounters, key=lambda e: e.encounter_id)


def result_to_line(result: EncounterResult, include_steps: bool = True) -> str:
    exclude = None if include_steps else {"steps"}
    return json.dumps(
        _dump(result, exclude=exclude), sort_keys=True, separators=(",", ":")
    )


def result_from_line(line: str) -> EncounterResult:
    return _load(line, EncounterResult)


def write_results(
    results: Iterable[EncounterResult], path: str | Path, include_steps: bool = True
) -> None:
    """JSON-lines, one result per line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        for result in results:
            handle.write(result_to_line(result, include_steps) + "\n")


def read_results(path: str | Path) -> list[EncounterResult]:
    with Path(path).open(encoding="utf-8") as handle:
        return [result_from_line(line) for line in handle if line.strip()]


def summary_to_json(summary: SimulationSummary) -> str:
    return json.dumps(_dump(summary), indent=2, sort_keys=True) + "\n"


def summary_from_json(text: str) -> SimulationSummary:
    return _load(text, SimulationSummary)


class RunManifest(BaseModel):
    """What a command ran with and what it wrote."""

    command: str
    tool_version: str
    master_seed: int
    config: dict[str, Any]
    arguments: dict[str, Any] = Field(default_factory=dict)
    inputs: list[str] = Field(default_factory=list)
    outputs: list[str] = Field(default_factory=list)
    started_at: datetime
    finished_at: datetime

    model_config = ConfigDict(frozen=True)


def write_manifest(manifest: RunManifest, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(_dump(manifest), indent=2, sort_keys=True)
    path.write_text(text + "\n", encoding="utf-8")


def read_manifest(path: str | Path) -> RunManifest:
    return _load(Path(path).read_text(encoding="utf-8"), RunManifest)
