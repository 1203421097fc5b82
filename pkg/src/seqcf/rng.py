"""Deterministic counter-based random streams.

Every random draw in the package comes from a Philox counter-based bit
generator keyed by ``(seed, salt)`` with the counter set from a stream tag
plus up to two substream indices (typically a feature index or a sample
index). Draws therefore depend only on the logical address of the draw,
never on evaluation order, which keeps generated artifacts bit-stable
under refactoring and safe to parallelize.
"""

from __future__ import annotations

import numpy as np

# Stream tags. Never renumber: changing a tag changes every artifact.
STREAM_HISTORY = 1
STREAM_ASSIGN = 2
STREAM_PERSIST_SHARED = 3
STREAM_PERSIST_NOISE = 4
STREAM_ONSET = 5
STREAM_ONSET_SPLIT = 6
STREAM_PAST = 7
STREAM_LAST = 8
STREAM_OUTCOME = 9
STREAM_SPLIT = 10
STREAM_PROPAGATE = 11

_SALT = 0x9E3779B97F4A7C15
_MASK = (1 << 64) - 1


def _generator(seed: int, stream: int, a: int = 0, b: int = 0) -> np.random.Generator:
    bitgen = np.random.Philox(
        key=(int(seed) & _MASK, _SALT),
        counter=(int(stream) & _MASK, int(a) & _MASK, int(b) & _MASK, 0),
    )
    return np.random.Generator(bitgen)


def uniforms(seed: int, n: int, stream: int, a: int = 0, b: int = 0) -> np.ndarray:
    """n iid U[0,1) draws at counter address (stream, a, b)."""
    return _generator(seed, stream, a, b).random(n)


def normals(seed: int, n: int, stream: int, a: int = 0, b: int = 0) -> np.ndarray:
    """n iid standard-normal draws at counter address (stream, a, b)."""
    return _generator(seed, stream, a, b).standard_normal(n)


def permutation(seed: int, n: int, stream: int, a: int = 0) -> np.ndarray:
    """Deterministic permutation of range(n)."""
    return _generator(seed, stream, a).permutation(n)
