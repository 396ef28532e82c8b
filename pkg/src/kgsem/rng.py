"""Named, reproducible random substreams.

Every run takes a single integer seed; each consumer (parameter init,
negative sampling, view augmentation, validation negatives) gets its own
stream derived from that seed and a fixed stream index, so adding draws in
one place never perturbs another.
"""

import numpy as np

_STREAMS = {
    "init": 0,
    "sampling": 1,
    "augmentation": 2,
    "validation": 3,
    "data": 4,
}


def substream(seed: int, name: str) -> np.random.Generator:
    """Return the named generator for this seed. Deterministic across runs
    and platforms: the stream is keyed on (seed, fixed index)."""
    try:
        key = _STREAMS[name]
    except KeyError:
        raise ValueError(f"unknown rng stream {name!r}") from None
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(key,)))
