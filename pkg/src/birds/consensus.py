"""Per-round block-proposer selection and miner reward accounting.

Four engines are available.  Proof-of-Competence ranks UAVs by a weighted
credibility score; the baselines are a simulated hash race (PoW),
round-robin over registered identities (PoID) and round-robin over a fixed
authority set (PoA).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from birds.errors import (DegenerateEnergyState, DivisionDegenerate, InvalidParameter,
                          NoEligibleCandidate)


class ConsensusKind(str, enum.Enum):
    POC = "poc"
    POW = "pow"
    POID = "poid"
    POA = "poa"


@dataclass(frozen=True)
class CompetenceInputs:
    uav_id: int
    timestamp_freshness: float
    poi_valid: bool
    resource_score: float
    delivery_score: float

    def __post_init__(self):
        for name in ("timestamp_freshness", "resource_score", "delivery_score"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InvalidParameter(f"{name}={value} outside [0, 1]")


@dataclass(frozen=True)
class ConsensusEngine:
    """Engine kind plus every tunable the four engines use.

    ``validation_energy`` is the flat per-round cost of a PoC round;
    ``verify_energy`` is what each participating node spends checking a
    PoID or PoA block.  PoW spends ``hash_energy`` per attempt.
    """

    kind: ConsensusKind = ConsensusKind.POC
    weights: tuple[float, float, float, float] = (0.25, 0.25, 0.25, 0.25)
    validation_energy: float = 1.0
    difficulty: int = 16
    hash_energy: float = 5e-3
    hash_rate: float = 5e3
    authority_count: int = 3
    verify_energy: float = 0.25
    validation_latency: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "kind", ConsensusKind(self.kind))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if len(self.weights) != 4 or any(w < 0 for w in self.weights):
            raise InvalidParameter("PoC needs four nonnegative weights")
        if not math.isclose(sum(self.weights), 1.0, rel_tol=0, abs_tol=1e-9):
            raise InvalidParameter("PoC weights must sum to 1")
        if self.difficulty < 0:
            raise InvalidParameter("difficulty must be nonnegative")
        if self.authority_count < 1:
            raise InvalidParameter("authority set needs at least one member")
        if min(self.validation_energy, self.hash_energy, self.verify_energy) < 0:
            raise InvalidParameter("energy constants must be nonnegative")
        if self.hash_rate <= 0:
            raise InvalidParameter("hash_rate must be positive")


@dataclass(frozen=True)
class RewardParams:
    success_reward: float
    cost_weight: float
    system_cost: float
    users_served: int
    penalty_index: float
    time_limit: float
    round_duration: float
    fleet_avg_energy: float
    remaining_energy: float
    hover_unit_energy: float

    def __post_init__(self):
        if self.time_limit <= 0:
            raise InvalidParameter("time limit must be positive")


@dataclass
class RoundOutcome:
    round: int
    proposer: int
    consensus_energy: float
    latency: float
    attempts: int = 0
    reward: float | None = None
    within_limit: bool = True

    def __post_init__(self):
        if self.consensus_energy < 0:
            raise InvalidParameter("consensus energy must be nonnegative")


def competence_score(inputs: CompetenceInputs,
                     weights: Sequence[float] = (0.25, 0.25, 0.25, 0.25)) -> float | None:
    """Weighted credibility of one UAV, or None when its identity is unproven."""
    if not inputs.poi_valid:
        return None
    w_ts, w_poi, w_por, w_edt = weights
    return (w_ts * inputs.timestamp_freshness + w_poi * 1.0
            + w_por * inputs.resource_score + w_edt * inputs.delivery_score)


def round_seed(seed: int, round_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, round_index])))


def pow_race(n_miners: int, difficulty: int, rng: np.random.Generator) -> tuple[int, int]:
    """Simulated hash race among ``n_miners`` equal-rate miners.

    Miners try in interleaved order; every attempt succeeds independently
    with probability 2**-difficulty.  Returns ``(winner_index, attempts)``,
    where ``attempts`` counts tries across all miners up to and including the
    winning one.
    """
    if n_miners < 1:
        raise NoEligibleCandidate("no miners")
    attempts = int(rng.geometric(2.0 ** -difficulty))
    return (attempts - 1) % n_miners, attempts


def _rotation(ids: Sequence[int], round_index: int) -> int:
    return ids[round_index % len(ids)]


def authority_set(candidates: Sequence[CompetenceInputs], size: int) -> list[int]:
    return sorted(c.uav_id for c in candidates if c.poi_valid)[:size]


def select_proposer(engine: ConsensusEngine, candidates: Sequence[CompetenceInputs],
                    round_index: int, rng_seed: int,
                    authorities: Sequence[int] | None = None) -> RoundOutcome:
    """Pick the block proposer for ``round_index``.

    Only candidates with a valid identity take part.  ``authorities``
    overrides the PoA authority set (default: the lowest registered ids).

    Raises:
        NoEligibleCandidate: nobody can propose this round.
    """
    eligible = sorted((c for c in candidates if c.poi_valid), key=lambda c: c.uav_id)
    if not eligible:
        raise NoEligibleCandidate(f"round {round_index}: no eligible candidate")
    n = len(eligible)
    kind = engine.kind

    if kind is ConsensusKind.POC:
        # max score, ties to the lowest id (eligible is sorted by id)
        best = max(eligible, key=lambda c: competence_score(c, engine.weights))
        return RoundOutcome(round_index, best.uav_id, engine.validation_energy,
                            engine.validation_latency)

    if kind is ConsensusKind.POW:
        winner, attempts = pow_race(n, engine.difficulty, round_seed(rng_seed, round_index))
        return RoundOutcome(round_index, eligible[winner].uav_id, attempts * engine.hash_energy,
                            attempts / (n * engine.hash_rate), attempts=attempts)

    verify = n * engine.verify_energy
    if kind is ConsensusKind.POID:
        return RoundOutcome(round_index, _rotation([c.uav_id for c in eligible], round_index),
                            verify, engine.validation_latency)

    if authorities is None:
        authorities = authority_set(eligible, engine.authority_count)
    present = {c.uav_id for c in eligible}
    order = list(authorities)
    start = round_index % len(order)
    for k in range(len(order)):
        uid = order[(start + k) % len(order)]
        if uid in present:
            return RoundOutcome(round_index, uid, verify, engine.validation_latency)
    raise NoEligibleCandidate(f"round {round_index}: no authority available")


def miner_energy_draw(total_power: float, max_energy: float, tx_power: float) -> float:
    """Terminal draw e_T = P_T / (E_max - p_t), evaluated as written."""
    denom = max_energy - tx_power
    if denom <= 0:
        raise DegenerateEnergyState(f"max energy {max_energy} does not exceed tx power {tx_power}")
    return total_power / denom


def miner_energy_total(consumed: float, max_energy: float, used: float) -> float:
    """E_T = e_T / (E_max - E_u)."""
    denom = max_energy - used
    if denom <= 0:
        raise DegenerateEnergyState(f"E_max={max_energy} does not exceed E_u={used}")
    return consumed / denom


def miner_energy_ratio(used: float, total: float) -> float:
    """Per-miner efficiency E_u / E_T."""
    if total <= 0:
        raise DegenerateEnergyState("E_T must be positive")
    return used / total


def penalty(index: float, avg_energy: float, remaining: float, hover_unit_energy: float) -> float:
    """Energy-deviation penalty; negative when the miner holds more than average."""
    if hover_unit_energy <= 0:
        raise InvalidParameter("per-second hover energy must be positive")
    return index * (avg_energy - remaining) / hover_unit_energy


def instant_reward(params: RewardParams) -> float:
    if params.users_served == 0:
        raise DivisionDegenerate("instant reward needs at least one served user")
    rho = penalty(params.penalty_index, params.fleet_avg_energy, params.remaining_energy,
                  params.hover_unit_energy)
    cost = params.cost_weight * params.system_cost / params.users_served
    if params.round_duration <= params.time_limit:
        return params.success_reward - cost - rho
    return -cost - rho


@dataclass
class RewardLedger:
    """Running reward totals per UAV."""

    totals: dict = field(default_factory=dict)

    def credit(self, uav_id: int, amount: float) -> None:
        self.totals[uav_id] = self.totals.get(uav_id, 0.0) + amount
