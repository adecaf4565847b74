"""Master-seed splitting rule for reproducible, order-independent sampling.

Every random draw in the toolkit comes from a ``numpy.random.Generator`` built
from ``SeedSequence(seed, spawn_key=key)``. Encounter ``i`` of a batch with
master seed ``m`` owns the integer seed ``encounter_seed(m, i)``; inside an
encounter, independent concerns (geometry, conditions, perception) draw from
separate streams of that seed. No stream depends on how many draws another
stream made, so batches parallelize without changing results.
"""

from __future__ import annotations

from enum import IntEnum

import numpy as np


class RngStream(IntEnum):
    """Independent random streams derived from one seed."""

    GEOMETRY = 0
    PLACEMENT = 1
    CONDITIONS = 2
    PERCEPTION = 3
    SCENE = 4


def encounter_seed(master_seed: int, index: int) -> int:
    """Seed owned by item ``index`` of a batch."""
    sequence = np.random.SeedSequence(master_seed, spawn_key=(index,))
    return int(sequence.generate_state(1, dtype=np.uint32)[0])


def stream_rng(seed: int, stream: RngStream) -> np.random.Generator:
    """Generator for one concern of the item owning ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(int(stream),)))
