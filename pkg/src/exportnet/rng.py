"""Counter-based random draws.

Each draw is a pure function of ``(seed, stream, *counters)``: a SplitMix64
finaliser is folded over the key words and the result mapped to a double in
(0, 1).  Because nothing is stateful, a firm's shocks do not depend on how
many other firms exist or on the order in which work is scheduled.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)

# Stream identifiers; fixed so files written today stay reproducible.
STREAMS = {
    "cost": 1,
    "shock": 2,
    "seed_market": 3,
    "world_imports": 4,
    "region": 5,
    "test": 99,
}


def _mix(z):
    with np.errstate(over="ignore"):
        z = z + _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
        return z ^ (z >> np.uint64(31))


def hash_u64(seed, stream, *counters):
    """Fold the key words through the mixer; broadcasts over array counters."""
    sid = STREAMS[stream] if isinstance(stream, str) else int(stream)
    h = _mix(np.asarray(int(seed) & 0xFFFFFFFFFFFFFFFF, dtype=np.uint64))
    h = _mix(h ^ np.uint64(sid))
    for c in counters:
        c = np.asarray(c)
        if np.any(c < 0):
            raise ValueError("counters must be non-negative")
        h = _mix(h ^ c.astype(np.uint64))
    return h


def uniform(seed, stream, *counters):
    h = hash_u64(seed, stream, *counters)
    # 53 high bits, shifted half a step off zero
    return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * (1.0 / 9007199254740992.0)


def normal(seed, stream, *counters):
    return ndtri(uniform(seed, stream, *counters))
