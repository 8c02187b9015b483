"""Counter-based random streams.

Every random draw in the package flows from a single integer seed through
`substream(seed, *path)`.  The path words land in the high counter words of a
Philox generator, so streams for distinct (seed, path) tuples never overlap
and the values drawn do not depend on evaluation order.

Path words 1 and 2 are reserved as leading tags for the per-iteration streams
(Hessian-probe vectors and sparsification masks); every other consumer uses a
single distinct word, so no two consumers share a stream.
"""

import numpy as np

_MASK = (1 << 64) - 1

TAG_PROBE = 1
TAG_SPARSIFY = 2


def substream(seed, *path):
    """Return a Generator for the (seed, *path) stream.

    At most three path words are supported; they index iteration counters,
    probe numbers and similar loop variables.
    """
    if len(path) > 3:
        raise ValueError("at most three path words supported")
    counter = [0, 0, 0, 0]
    for i, word in enumerate(path):
        counter[i + 1] = int(word) & _MASK
    key = [int(seed) & _MASK, 0xA5A5A5A5]
    return np.random.Generator(np.random.Philox(counter=counter, key=key))


def rademacher(seed, n, iteration, probe):
    """Deterministic +/-1 vector keyed by (seed, iteration, probe)."""
    gen = substream(seed, TAG_PROBE, iteration, probe)
    return 2.0 * gen.integers(0, 2, size=n).astype(float) - 1.0
