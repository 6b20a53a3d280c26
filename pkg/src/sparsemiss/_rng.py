"""Named random substreams derived from a single user seed."""
import zlib

import numpy as np


def substream(seed, name):
    """Return a Generator for stream ``name`` of ``seed``.

    Streams with different names are statistically independent, and the
    mapping is stable across processes and Python versions.
    """
    key = zlib.crc32(name.encode("ascii"))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, key])))
