"""Deterministic RNG substream derivation.

Every random draw in the package comes from a Philox (counter-based)
bit generator keyed by ``SeedSequence(master_seed, spawn_key=path)``,
where ``path`` is a tuple of small non-negative integers naming the
consumer.  Streams for distinct paths are statistically independent and
may be consumed in any order or in parallel without changing results.
"""

from __future__ import annotations

import numpy as np

# First path component: which subsystem owns the stream.
STREAM_TREE_WEIGHTS = 0  # per-tree observation weights, path (0, tree_index)
STREAM_TREE_FEATURES = 1  # per-tree feature sampling, path (1, tree_index)
STREAM_SIM = 2  # simulator innovation streams
STREAM_BENCH_DATA = 3  # benchmark data paths, shared by all methods
STREAM_BENCH_MODEL = 4  # benchmark per-method model seeds


def substream(master_seed: int, *path: int) -> np.random.Generator:
    """Generator for the stream named by ``path`` under ``master_seed``."""
    if master_seed < 0:
        raise ValueError("master_seed must be a non-negative integer")
    seq = np.random.SeedSequence(master_seed, spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(seq))


def substream_id(master_seed: int, *path: int) -> str:
    """Stable human-readable identifier for the stream named by ``path``."""
    return f"{master_seed}:" + "/".join(str(int(p)) for p in path)
