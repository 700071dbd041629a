"""Counter-based random streams.

Every random draw in a run comes from a Philox generator keyed by
``(seed, member, step, purpose)``. A stream never depends on which other
streams were consumed before it, so members can be stepped in any order or
concurrently, and a run resumed from a checkpoint replays exactly.
"""

import numpy as np

# member ids reserved for streams that do not belong to an ensemble member
TRUTH = 2**31 - 1
OBSERVER = 2**31 - 2

TRANSPORT = 1
NOISE = 2
INIT = 3


def stream(seed, member, step, purpose):
    key = np.random.SeedSequence([int(seed) & (2**64 - 1), int(member), int(step), int(purpose)])
    return np.random.Generator(np.random.Philox(key))
