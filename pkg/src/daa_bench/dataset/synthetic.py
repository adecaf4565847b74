"""Renderer-free synthetic datasets: labels and metadata without pixels."""

from __future__ import annotations

import itertools
import logging
from pathlib import Path

from pydantic import BaseModel, ConfigDict

from ..config.settings import DatasetConfig, SceneConfig
from ..core.errors import GeometryError
from ..core.geometry import project_to_image
from ..core.models import AircraftType, Conditions, Region, Weather, aircraft_class
from ..encounters.sampling import sample_image_scene, scene_intruder_state
from ..utils.rng import RngStream, encounter_seed, stream_rng
from .metadata import ImageMetadata, parse_metadata, write_metadata
from .yolo import LabelRecord, parse_yolo_label, write_yolo_label

logger = logging.getLogger(__name__)

_MAX_PLACEMENT_ATTEMPTS = 100


class SyntheticSample(BaseModel):
    """One dataset entry: the label and the metadata it was derived from."""

    stem: str
    label: LabelRecord
    metadata: ImageMetadata

    model_config = ConfigDict(frozen=True)


def strata() -> list[tuple[Weather, Region, AircraftType]]:
    """The 72 (weather, region, aircraft) strata in enumeration order."""
    return list(itertools.product(Weather, Region, AircraftType))


def stratum_counts(n: int) -> list[int]:
    """Equal split; the remainder goes one each to the first strata."""
    base, remainder = divmod(n, len(strata()))
    return [base + (1 if i < remainder else 0) for i in range(len(strata()))]


def sample_dataset_entry(
    index: int,
    seed: int,
    stratum: tuple[Weather, Region, AircraftType],
    scene_config: SceneConfig,
    dataset_config: DatasetConfig,
) -> SyntheticSample:
    """Sample one scene of a stratum and project its intruder to a label."""
    weather, region, aircraft = stratum
    rng = stream_rng(seed, RngStream.SCENE)
    day = scene_config.local_time
    conditions = Conditions(
        weather=weather,
        region=region,
        aircraft=aircraft,
        local_time=float(rng.uniform(day.low, day.high)),
    )
    camera = dataset_config.camera
    extents = aircraft_class(aircraft)
    for _ in range(_MAX_PLACEMENT_ATTEMPTS):
        scene = sample_image_scene(rng, scene_config, conditions)
        intruder = scene_intruder_state(scene, camera)
        box = project_to_image(
            camera, scene.ownship, intruder, extents, dataset_config.class_id
        )
        if box is not None:
            break
    else:
        msg = f"Could not place an in-view intruder for sample {index}"
        raise GeometryError(msg)
    ownship = scene.ownship
    metadata = ImageMetadata(
        weather=weather,
        region=region,
        aircraft=aircraft,
        local_time=conditions.local_time,
        ownship_east=ownship.east,
        ownship_north=ownship.north,
        ownship_up=ownship.up,
        heading=ownship.heading,
        pitch=ownship.pitch,
        roll=ownship.roll,
        intruder_range=scene.intruder_range,
        intruder_vertical_offset=intruder.up - ownship.up,
        intruder_east=intruder.east,
        intruder_north=intruder.north,
        intruder_up=intruder.up,
        intruder_heading=intruder.heading,
        bbox=box,
    )
    return SyntheticSample(
        stem=f"{index:06d}", label=LabelRecord.from_box(box), metadata=metadata
    )


def generate_synthetic_dataset(
    n: int,
    master_seed: int,
    scene_config: SceneConfig | None = None,
    dataset_config: DatasetConfig | None = None,
) -> list[SyntheticSample]:
    """Generate ``n`` samples stratified over weather x region x aircraft.

    Sample ``i`` draws only from its own seed, split from ``master_seed``.

    Raises:
        ValueError: If ``n`` is not positive
    """
    if n <= 0:
        msg = f"Dataset size must be positive, got {n}"
        raise ValueError(msg)
    scene_config = scene_config or SceneConfig()
    dataset_config = dataset_config or DatasetConfig()
    samples = []
    index = 0
    for stratum, count in zip(strata(), stratum_counts(n)):
        for _ in range(count):
            seed = encounter_seed(master_seed, index)
            samples.append(
                sample_dataset_entry(
                    index, seed, stratum, scene_config, dataset_config
                )
            )
            index += 1
    logger.info("Generated %d synthetic samples (seed %d)", len(samples), master_seed)
    return samples


def write_dataset(
    samples: list[SyntheticSample], directory: str | Path, decimals: int = 6
) -> list[Path]:
    """Write ``labels/<stem>.txt`` and ``labels/<stem>.json`` per sample."""
    labels_dir = Path(directory) / "labels"
    labels_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for sample in samples:
        label_path = labels_dir / f"{sample.stem}.txt"
        label_text = write_yolo_label([sample.label], decimals)
        label_path.write_text(label_text, encoding="utf-8")
        metadata_path = labels_dir / f"{sample.stem}.json"
        metadata_path.write_text(write_metadata(sample.metadata), encoding="utf-8")
        written.extend([label_path, metadata_path])
    return written


def read_labelled_directory(
    directory: str | Path, key_map: dict[str, str] | None = None
) -> dict[str, tuple[list[LabelRecord], ImageMetadata | None]]:
    """Labels and metadata per stem from a directory of ``.txt``/``.json`` pairs.

    Stems with a label but no metadata map to None metadata.
    """
    directory = Path(directory)
    entries: dict[str, tuple[list[LabelRecord], ImageMetadata | None]] = {}
    for label_path in sorted(directory.glob("*.txt")):
        labels = parse_yolo_label(label_path.read_text(encoding="utf-8"))
        metadata_path = label_path.with_suffix(".json")
        metadata = None
        if metadata_path.exists():
            text = metadata_path.read_text(encoding="utf-8")
            metadata = parse_metadata(text, key_map)
        entries[label_path.stem] = (labels, metadata)
    return entries
