"""Delivery workflow: jobs, delivery-time estimates, competence-ranked
dispatch, reputation scoring and certificates."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

from birds.airframe import EnergyState, KinematicState, UavSpec, can_return, payload_speed
from birds.channel import DataPacket
from birds.consensus import (CompetenceInputs, ConsensusEngine, ConsensusKind,
                             competence_score)
from birds.errors import InvalidParameter, Overload
from birds.ledger import DeliveryRecord, Transaction

DEFAULT_CERTIFICATE_THRESHOLD = 2.0


class Mission(str, enum.Enum):
    ECOMMERCE = "e-commerce"
    EMERGENCY = "emergency-communication"
    DELIVERY = "delivery-services"
    HEALTHCARE = "healthcare"


class Status(str, enum.Enum):
    QUEUED = "queued"
    ENROUTE = "enroute"
    TRANSMITTING = "transmitting"
    DELIVERED = "delivered"
    FAILED = "failed"


@dataclass(frozen=True)
class Job:
    job_id: int
    origin: tuple[float, float]
    destination: tuple[float, float]
    payload: float
    data_packet: DataPacket
    deadline: float
    cost: float
    owner: int = 0
    arrival: float = 0.0
    mission: Mission = Mission.DELIVERY

    def __post_init__(self):
        if self.payload <= 0:
            raise InvalidParameter("payload must be positive")
        if tuple(self.origin) == tuple(self.destination):
            raise InvalidParameter("origin and destination coincide")
        if self.deadline <= 0:
            raise InvalidParameter("deadline must be positive")

    @property
    def route_length(self) -> float:
        return math.dist(self.origin, self.destination)


@dataclass(frozen=True)
class Assignment:
    job_id: int
    uav_id: int | None
    edt: float
    start_time: float
    status: Status = Status.QUEUED
    adt: float | None = None
    finish_time: float | None = None

    def __post_init__(self):
        if not self.edt > 0:
            raise InvalidParameter("EDT must be positive")
        if (self.adt is not None) != (self.status is Status.DELIVERED):
            raise InvalidParameter("ADT is present exactly when the job is delivered")


@dataclass(frozen=True)
class Certificate:
    uav_id: int
    score: float
    issued_at: float


@dataclass
class ReputationRecord:
    uav_id: int
    capacity: float
    score: float = 0.0
    certificate_value: int = 0
    history: list = field(default_factory=list)

    @property
    def mean_adt(self) -> float:
        return sum(h[1] for h in self.history) / len(self.history)

    @property
    def mean_cost(self) -> float:
        return sum(h[2] for h in self.history) / len(self.history)


@dataclass(frozen=True)
class FleetStats:
    """Min/max bounds used to normalize reputation terms."""

    adt_min: float
    adt_max: float
    cost_min: float
    cost_max: float
    capacity_min: float
    capacity_max: float

    @classmethod
    def from_records(cls, records: Sequence[ReputationRecord]) -> "FleetStats":
        caps = [r.capacity for r in records]
        scored = [r for r in records if r.history]
        adts = [r.mean_adt for r in scored] or [0.0]
        costs = [r.mean_cost for r in scored] or [0.0]
        return cls(min(adts), max(adts), min(costs), max(costs), min(caps), max(caps))


def _normalize(value: float, lo: float, hi: float) -> float:
    if hi <= lo:
        return 0.5
    return min(1.0, max(0.0, (value - lo) / (hi - lo)))


def reputation_score(record: ReputationRecord, stats: FleetStats) -> float:
    """Reputation in [0, 4] from delivery time, certificate, cost and capacity.

    Delivery time and cost are inverted so that faster, cheaper service
    scores higher.  A UAV with no delivery history scores 0.
    """
    if not record.history:
        return 0.0
    adt_term = 1.0 - _normalize(record.mean_adt, stats.adt_min, stats.adt_max)
    cost_term = 1.0 - _normalize(record.mean_cost, stats.cost_min, stats.cost_max)
    cap_term = _normalize(record.capacity, stats.capacity_min, stats.capacity_max)
    return adt_term + record.certificate_value + cost_term + cap_term


def issue_certificate(record: ReputationRecord, threshold: float = DEFAULT_CERTIFICATE_THRESHOLD,
                      now: float = 0.0) -> Certificate | None:
    if record.certificate_value or record.score < threshold:
        return None
    record.certificate_value = 1
    return Certificate(record.uav_id, record.score, now)


def trip_length(position: Sequence[float], job: Job) -> float:
    return math.dist(position[:2], job.origin) + job.route_length


def estimate_delivery_time(job: Job, spec: UavSpec, kinematics: KinematicState,
                           queue_wait: float = 0.0, tx_delay: float = 0.0) -> float:
    """Estimated delivery time of ``job`` by this UAV.

    Flight from the UAV's position via the origin to the destination at the
    payload-dependent speed, plus queue wait and transmission delay.

    Raises:
        Overload: the payload exceeds the UAV's capacity.
    """
    speed = payload_speed(spec, job.payload)
    return trip_length(kinematics.position, job) / speed + queue_wait + tx_delay


@dataclass
class FleetMember:
    spec: UavSpec
    kinematics: KinematicState
    energy: EnergyState
    reputation: float = 0.0
    available: bool = True
    poi_valid: bool = True
    freshness: float = 1.0
    bandwidth_share: float = 1.0

    @property
    def uav_id(self) -> int:
        return self.spec.node_id

    @property
    def resource_score(self) -> float:
        return 0.5 * (self.energy.fraction + self.bandwidth_share)


def sortie_budget(member: FleetMember, job: Job, tx_delay: float) -> float:
    e = member.energy
    return trip_length(member.kinematics.position, job) * e.flight_cost_per_meter \
        + e.hover_power * tx_delay


def _can_serve(member: FleetMember, job: Job, tx_delay: float) -> bool:
    if not (member.available and member.poi_valid):
        return False
    if job.payload > member.spec.payload_capacity:
        return False
    left = member.energy.remaining - sortie_budget(member, job, tx_delay)
    if left < 0:
        return False
    return can_return(replace(member.energy, remaining=left, debits=[]))


def delivery_scores(edts: dict[int, float]) -> dict[int, float]:
    """1 - min-max normalized EDT; every UAV gets 1 when all EDTs are equal."""
    lo, hi = min(edts.values()), max(edts.values())
    if hi <= lo:
        return {uid: 1.0 for uid in edts}
    return {uid: 1.0 - (t - lo) / (hi - lo) for uid, t in edts.items()}


def _competence_ranked(job: Job, pool: list[FleetMember], engine: ConsensusEngine,
                       tx_delay: float) -> tuple[FleetMember, float]:
    edts = {m.uav_id: estimate_delivery_time(job, m.spec, m.kinematics, tx_delay=tx_delay)
            for m in pool}
    f_edt = delivery_scores(edts)

    def key(m: FleetMember):
        inputs = CompetenceInputs(m.uav_id, m.freshness, m.poi_valid, m.resource_score,
                                  f_edt[m.uav_id])
        return (competence_score(inputs, engine.weights), m.reputation, -m.uav_id)

    best = max(pool, key=key)
    return best, edts[best.uav_id]


def assign_jobs(jobs: Sequence[Job], fleet: Sequence[FleetMember], engine: ConsensusEngine,
                proposer: int | None = None, now: float = 0.0,
                tx_estimate: Callable[[Job], float] | float = 0.0) -> list[Assignment]:
    """Greedy dispatch of ``jobs`` in arrival order, one job per available UAV.

    Under PoC each job goes to the feasible UAV with the highest
    (competence, reputation) rank, ties to the lower id.  The baseline
    engines carry no competence information, so they dispatch round-robin
    over node ids starting at the round's ``proposer``.  A UAV is feasible
    when it is available, has a valid identity, can lift the payload and
    keeps its return reserve after the sortie.  Jobs nobody can take stay
    queued.
    """
    jobs = sorted(jobs, key=lambda j: (j.arrival, j.job_id))
    members = sorted(fleet, key=lambda m: m.uav_id)
    free = {m.uav_id: m for m in members}
    ids = [m.uav_id for m in members]
    cursor = 0
    if proposer is not None and ids:
        cursor = next((k for k, uid in enumerate(ids) if uid >= proposer), 0)

    out = []
    for job in jobs:
        tx = tx_estimate(job) if callable(tx_estimate) else float(tx_estimate)
        pool = [m for m in free.values() if _can_serve(m, job, tx)]
        if not pool:
            out.append(Assignment(job.job_id, None, _fallback_edt(job, members, tx), job.arrival))
            continue
        if engine.kind is ConsensusKind.POC:
            chosen, edt = _competence_ranked(job, pool, engine, tx)
        else:
            feasible = {m.uav_id for m in pool}
            for step in range(len(ids)):
                uid = ids[(cursor + step) % len(ids)]
                if uid in feasible:
                    cursor = (cursor + step + 1) % len(ids)
                    break
            chosen = free[uid]
            edt = estimate_delivery_time(job, chosen.spec, chosen.kinematics, tx_delay=tx)
        del free[chosen.uav_id]
        out.append(Assignment(job.job_id, chosen.uav_id, max(edt, 1e-9), job.arrival,
                              Status.ENROUTE))
    return out


def _fallback_edt(job: Job, members: Sequence[FleetMember], tx: float) -> float:
    best = math.inf
    for m in members:
        try:
            best = min(best, estimate_delivery_time(job, m.spec, m.kinematics, tx_delay=tx))
        except Overload:
            continue
    return best if best > 0 else math.inf


def complete_delivery(assignment: Assignment, now: float, job: Job, tx_id: int,
                      record: ReputationRecord | None = None
                      ) -> tuple[Assignment, Transaction | None]:
    """Close a transmitting assignment at time ``now``.

    Within the job deadline the assignment becomes delivered, gains its ADT
    and yields a DeliveryRecord transaction; ``record`` (if given) receives
    the history entry.  Past the deadline it fails with no credit.
    """
    if assignment.status is not Status.TRANSMITTING:
        raise InvalidParameter(f"job {assignment.job_id} is {assignment.status.value}, not transmitting")
    elapsed = now - assignment.start_time
    if elapsed > job.deadline:
        return replace(assignment, status=Status.FAILED, finish_time=now), None
    done = replace(assignment, status=Status.DELIVERED, adt=elapsed, finish_time=now)
    if record is not None:
        record.history.append((job.job_id, elapsed, job.cost))
    tx = Transaction.of(tx_id, DeliveryRecord(job.job_id, assignment.uav_id, assignment.edt,
                                              elapsed, job.cost))
    return done, tx
