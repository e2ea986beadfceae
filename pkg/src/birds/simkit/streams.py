"""Seeded random streams.

Every subsystem draws from its own PCG64 generator keyed by
``(seed, subsystem, index)`` through numpy's SeedSequence, so adding a UAV
or a job never perturbs the draws of any other entity.
"""

import numpy as np

SUBSYSTEMS = {
    "waypoints": 1,
    "uav": 2,
    "user": 3,
    "job": 4,
    "consensus": 5,
}


def stream(seed: int, subsystem: str, index: int = 0) -> np.random.Generator:
    key = [int(seed), SUBSYSTEMS[subsystem], int(index)]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(key)))


def consensus_seed(seed: int) -> int:
    return int(stream(seed, "consensus").integers(0, 2**63 - 1))
