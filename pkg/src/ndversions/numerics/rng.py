"""Counter-based random streams.

Every stream is a Philox-4x64 generator keyed by ``(seed, stream_index)``, so
the output is fixed by ``(seed, stream_index, counter)`` alone and does not
depend on how work is split across threads.
"""

import numpy as np

_MASK64 = (1 << 64) - 1


def rng_stream(seed: int, stream_index: int = 0) -> np.random.Generator:
    """Return the generator for ``(seed, stream_index)``.

    Both integers must be non-negative and fit in 64 bits.
    """
    seed = int(seed)
    stream_index = int(stream_index)
    if not (0 <= seed <= _MASK64 and 0 <= stream_index <= _MASK64):
        raise ValueError("seed and stream_index must be in [0, 2**64)")
    key = seed | (stream_index << 64)
    return np.random.Generator(np.random.Philox(key=key))
