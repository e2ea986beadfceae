"""Round-based discrete-event simulation of a UAV delivery fleet.

Time advances in consensus rounds of ``round_duration`` seconds.  At each
round boundary the fleet heartbeats, a proposer is selected, pending
transactions are sealed into a block and queued jobs are dispatched.
Between boundaries a priority queue replays job arrivals, arrivals at
destinations and transmission completions in time order.
"""

from __future__ import annotations

import enum
import heapq
import itertools
import math
from dataclasses import dataclass, field, replace

from birds import airframe, channel as chan
from birds.airframe import EnergyState, KinematicState, SizeClass, UavSpec
from birds.channel import DataPacket, Link
from birds.consensus import (CompetenceInputs, ConsensusKind, RewardParams, RoundOutcome,
                             instant_reward, miner_energy_draw, miner_energy_ratio,
                             miner_energy_total, select_proposer)
from birds.delivery import (Assignment, FleetMember, FleetStats, Job, Mission, ReputationRecord,
                            Status, assign_jobs, complete_delivery, delivery_scores,
                            estimate_delivery_time, issue_certificate, reputation_score,
                            trip_length)
from birds.errors import InfeasibleLink, NoEligibleCandidate, Overload
from birds.ledger import (TA_PROPOSER, Chain, Heartbeat, ReputationUpdate, Transaction, TxKind,
                          append_block, mine_nonce, register_uav)
from birds.simkit.config import Scenario
from birds.simkit.metrics import MetricsRow
from birds.simkit.streams import consensus_seed, stream


class UavState(str, enum.Enum):
    REGISTERING = "registering"
    READY = "ready"
    TRANSMITTING = "transmitting"
    QUEUED = "queued"


LEGAL_TRANSITIONS = frozenset({
    (UavState.REGISTERING, UavState.READY),
    (UavState.READY, UavState.TRANSMITTING),
    (UavState.READY, UavState.QUEUED),
    (UavState.TRANSMITTING, UavState.READY),
    (UavState.QUEUED, UavState.READY),
})


class IllegalTransition(RuntimeError):
    pass


@dataclass
class UavRuntimeState:
    spec: UavSpec
    kinematics: KinematicState
    energy: EnergyState
    reputation: ReputationRecord
    state: UavState = UavState.REGISTERING
    last_heartbeat: float | None = None
    job_id: int | None = None
    transitions: list = field(default_factory=list, repr=False)

    @property
    def uav_id(self) -> int:
        return self.spec.node_id

    def move_to(self, new: UavState, now: float) -> None:
        if (self.state, new) not in LEGAL_TRANSITIONS:
            raise IllegalTransition(f"UAV {self.uav_id}: {self.state.value} -> {new.value}")
        self.transitions.append((now, self.state, new))
        self.state = new


@dataclass
class JobRuntime:
    job: Job
    edt: float | None = None
    assignment: Assignment | None = None
    trip: float = 0.0
    tx_delay: float = 0.0
    dispatched_at: float = 0.0


@dataclass
class RunResult:
    scenario: Scenario
    rows: list
    chain: Chain
    jobs: dict
    fleet: dict
    rewards: dict
    skipped_rounds: list

    def __iter__(self):
        # unpacks as (rows, chain)
        return iter((self.rows, self.chain))

    @property
    def final(self) -> MetricsRow:
        return self.rows[-1]

    def completed(self) -> list[Assignment]:
        return [jr.assignment for jr in self.jobs.values()
                if jr.assignment is not None and jr.assignment.finish_time is not None]

    def summary(self) -> dict:
        final = self.final
        return {
            "consensus": self.scenario.consensus.value,
            "seed": self.scenario.seed,
            "rounds": len(self.rows),
            "chain_height": len(self.chain),
            "chain_digest": self.chain.digest(),
            "delivered": final.delivered,
            "failed": final.failed,
            "missed": final.missed,
            "success_rate": final.success_rate,
            "mean_edt": final.mean_edt,
            "mean_adt": final.mean_adt,
            "energy": {
                "consensus": final.cumulative_consensus_energy,
                "flight": final.cumulative_flight_energy,
                "total": final.cumulative_energy,
            },
            "reputation": {str(uid): u.reputation.score for uid, u in sorted(self.fleet.items())},
            "certificates": sorted(uid for uid, u in self.fleet.items()
                                   if u.reputation.certificate_value),
            "rewards": {str(uid): r for uid, r in sorted(self.rewards.items())},
            "skipped_rounds": list(self.skipped_rounds),
        }


# event priorities at equal timestamps: completions, then arrivals
_ARRIVE, _TX_DONE, _JOB = 0, 1, 2


def size_class_for(capacity: float) -> SizeClass:
    if capacity < 5.0:
        return SizeClass.SMALL
    if capacity < 10.0:
        return SizeClass.MEDIUM
    return SizeClass.LARGE


def build_fleet(sc: Scenario, waypoints: list) -> dict[int, UavRuntimeState]:
    fleet = {}
    for i in range(sc.uav_count):
        g = stream(sc.seed, "uav", i)
        capacity = float(g.uniform(sc.capacity_min, sc.capacity_max))
        home = waypoints[int(g.integers(len(waypoints)))] if waypoints else (0.0, 0.0)
        power = sc.base_power + sc.power_per_kg * capacity
        spec = UavSpec(
            node_id=i + 1,
            size_class=size_class_for(capacity),
            empty_weight=1.0 + 0.5 * capacity,
            payload_capacity=capacity,
            battery_capacity=power * airframe.RATED_ENDURANCE_S,
            rated_flight_duration=airframe.RATED_ENDURANCE_S,
            rated_travel_distance=airframe.RATED_ENDURANCE_S * airframe.payload_speed(
                UavSpec(i + 1, SizeClass.SMALL, 1.0, capacity, 1.0, 1.0, 1.0), capacity),
        )
        energy = EnergyState.full(spec, sc.hover_power, sc.hover_unit_energy, sc.threshold_fraction)
        kin = KinematicState(position=(home[0], home[1], 0.0))
        fleet[spec.node_id] = UavRuntimeState(spec, kin, energy,
                                              ReputationRecord(spec.node_id, capacity))
    return fleet


def build_waypoints(sc: Scenario) -> list[tuple[float, float]]:
    g = stream(sc.seed, "waypoints")
    pts = g.uniform(0.0, sc.region_side, size=(sc.waypoint_count, 2))
    return [(float(x), float(y)) for x, y in pts]


def build_users(sc: Scenario) -> list[tuple[float, float]]:
    users = []
    for i in range(sc.user_count):
        x, y = stream(sc.seed, "user", i).uniform(0.0, sc.region_side, size=2)
        users.append((float(x), float(y)))
    return users


def build_jobs(sc: Scenario, waypoints: list, users: list) -> list[Job]:
    missions = list(Mission)
    jobs = []
    for j in range(sc.job_count):
        g = stream(sc.seed, "job", j)
        arrival = float(g.uniform(0.0, sc.arrival_window)) if sc.arrival_window > 0 else 0.0
        origin = waypoints[int(g.integers(len(waypoints)))]
        owner = int(g.integers(len(users)))
        payload = float(g.uniform(sc.payload_min, sc.payload_max))
        size = float(g.uniform(sc.packet_size_min, sc.packet_size_max))
        cost = float(g.uniform(sc.job_price_min, sc.job_price_max))
        mission = missions[int(g.integers(len(missions)))]
        packet = DataPacket(packet_id=j, owner=owner, size=size, deadline=sc.packet_deadline)
        jobs.append(Job(job_id=j, origin=origin, destination=users[owner], payload=payload,
                        data_packet=packet, deadline=sc.deadline, cost=cost, owner=owner,
                        arrival=arrival, mission=mission))
    return jobs


class Simulation:
    """One seeded run of a scenario.  Call :meth:`run` once."""

    def __init__(self, scenario: Scenario, stop_when_idle: bool = False):
        self.sc = scenario
        self.stop_when_idle = stop_when_idle
        self.waypoints = build_waypoints(scenario)
        self.users = build_users(scenario)
        self.fleet = build_fleet(scenario, self.waypoints)
        self.jobs = {job.job_id: JobRuntime(job) for job in build_jobs(scenario, self.waypoints,
                                                                        self.users)}
        self.channel_of = chan.assign_channels(list(range(len(self.users))),
                                               scenario.channel.channel_count)
        self.chain = Chain.genesis()
        self.tx_ids = itertools.count(1)
        self.pool: list[Transaction] = []
        self.registered: set[int] = set()
        self.pending: list[int] = []
        self.active_tx: dict[int, list[tuple[int, int]]] = {}
        self.events: list = []
        self.seq = itertools.count()
        self.rewards: dict[int, float] = {}
        self.skipped: list[int] = []
        self.race_seed = consensus_seed(scenario.seed)
        self.cum_consensus = 0.0
        self.cum_flight = 0.0
        self.interval_flight = 0.0
        self.interval_served = 0
        self.delivered = 0
        self.failed = 0
        self.rows: list[MetricsRow] = []
        for jr in self.jobs.values():
            self._push(jr.job.arrival, _JOB, jr.job.job_id)

    # -- event queue -----------------------------------------------------
    def _push(self, time: float, kind: int, payload) -> None:
        heapq.heappush(self.events, (time, kind, next(self.seq), payload))

    def _advance(self, until: float) -> None:
        while self.events and self.events[0][0] < until:
            time, kind, _, payload = heapq.heappop(self.events)
            if kind == _JOB:
                self._on_job_arrival(time, payload)
            elif kind == _ARRIVE:
                self._on_arrive(time, payload)
            else:
                self._on_tx_done(time, *payload)

    # -- helpers ---------------------------------------------------------
    def _uav_position(self, user: int) -> tuple[float, float, float]:
        x, y = self.users[user]
        return (x, y, self.sc.channel.hover_altitude)

    def _clear_delay(self, job: Job) -> float:
        """Interference-free transmission delay of the job's packet."""
        ch = self.sc.channel
        gain = chan.path_gain(ch.hover_altitude, ch.reference_distance)
        link = Link(job.owner, 0, self.channel_of[job.owner], ch.tx_power, gain)
        rate = chan.achievable_rate(ch.bandwidth, chan.snr(link, (), ch.noise_power))
        try:
            return chan.transmission_delay(job.data_packet, rate)
        except InfeasibleLink:
            return math.inf

    def _busy_remaining(self, uav: UavRuntimeState, now: float) -> float:
        if uav.job_id is None:
            return 0.0
        jr = self.jobs[uav.job_id]
        speed = airframe.payload_speed(uav.spec, jr.job.payload)
        return max(0.0, jr.dispatched_at + jr.trip / speed + jr.tx_delay - now)

    def _estimate(self, job: Job, uav: UavRuntimeState, now: float, tx: float) -> float:
        return estimate_delivery_time(job, uav.spec, uav.kinematics,
                                      queue_wait=self._busy_remaining(uav, now), tx_delay=tx)

    def _active_uavs(self) -> list[UavRuntimeState]:
        return [u for u in self.fleet.values()
                if u.uav_id in self.registered and u.state is not UavState.QUEUED]

    # -- event handlers --------------------------------------------------
    def _on_job_arrival(self, now: float, job_id: int) -> None:
        jr = self.jobs[job_id]
        tx = self._clear_delay(jr.job)
        best = math.inf
        for uav in self._active_uavs():
            try:
                best = min(best, self._estimate(jr.job, uav, now, tx))
            except Overload:
                continue
        jr.edt = best
        self.pending.append(job_id)

    def _on_arrive(self, now: float, job_id: int) -> None:
        jr = self.jobs[job_id]
        job = jr.job
        uav = self.fleet[jr.assignment.uav_id]
        uav.kinematics.position = self._uav_position(job.owner)
        uav.kinematics.velocity = (0.0, 0.0, 0.0)
        self._debit(uav, jr.trip * uav.energy.flight_cost_per_meter)

        ch = self.sc.channel
        q = self.channel_of[job.owner]
        own = Link(job.owner, uav.uav_id, q, ch.tx_power,
                   chan.path_gain(ch.hover_altitude, ch.reference_distance))
        interferers = [
            Link(other_user, uav.uav_id, q, ch.tx_power,
                 chan.path_gain(math.dist(self.users[other_user] + (0.0,),
                                          uav.kinematics.position), ch.reference_distance))
            for other_user, _ in self.active_tx.get(q, [])
        ]
        rate = chan.achievable_rate(ch.bandwidth, chan.snr(own, interferers, ch.noise_power))
        try:
            delay = chan.transmission_delay(job.data_packet, rate)
        except InfeasibleLink:
            delay = math.inf
        if not chan.delivery_feasible(delay, job.data_packet.deadline):
            jr.assignment = replace(jr.assignment, status=Status.FAILED, finish_time=now)
            self.failed += 1
            self._release(uav, now)
            return
        jr.tx_delay = delay
        jr.assignment = replace(jr.assignment, status=Status.TRANSMITTING)
        self.active_tx.setdefault(q, []).append((job.owner, job_id))
        self._push(now + delay, _TX_DONE, (job_id, delay))

    def _on_tx_done(self, now: float, job_id: int, delay: float) -> None:
        jr = self.jobs[job_id]
        job = jr.job
        uav = self.fleet[jr.assignment.uav_id]
        self._debit(uav, airframe.sortie_energy(0.0, uav.energy.hover_power, delay))
        self.active_tx[self.channel_of[job.owner]].remove((job.owner, job_id))
        done, tx = complete_delivery(jr.assignment, now, job, next(self.tx_ids), uav.reputation)
        jr.assignment = done
        if tx is None:
            self.failed += 1
        else:
            self.delivered += 1
            self.interval_served += 1
            self.pool.append(tx)
            self._refresh_reputation(now)
        self._release(uav, now)

    def _release(self, uav: UavRuntimeState, now: float) -> None:
        uav.job_id = None
        uav.move_to(UavState.READY, now)
        if not airframe.can_return(uav.energy):
            uav.move_to(UavState.QUEUED, now)

    def _debit(self, uav: UavRuntimeState, joules: float) -> None:
        uav.energy.debit(joules)
        self.interval_flight += joules

    def _refresh_reputation(self, now: float) -> None:
        records = [u.reputation for u in self.fleet.values()]
        stats = FleetStats.from_records(records)
        for rec in records:
            old = rec.score
            rec.score = reputation_score(rec, stats)
            if issue_certificate(rec, self.sc.certificate_threshold, now) is not None:
                rec.score = reputation_score(rec, stats)
            if rec.score != old:
                self.pool.append(Transaction.of(next(self.tx_ids),
                                                ReputationUpdate(rec.uav_id, rec.score)))

    # -- rounds ----------------------------------------------------------
    def _register_all(self, t: int) -> None:
        for uav in self.fleet.values():
            self.pool.append(register_uav(self.chain, uav.spec, t, next(self.tx_ids), self.pool))
        if self.pool:
            self.chain = append_block(self.chain, self.pool, TA_PROPOSER, t)
            self.pool = []
        for uav in self.fleet.values():
            self.registered.add(uav.uav_id)
            uav.move_to(UavState.READY, t)
            uav.last_heartbeat = t

    def _candidates(self, t: int) -> list[CompetenceInputs]:
        active = self._active_uavs()
        head = self.jobs[self.pending[0]].job if self.pending else None
        edts = {}
        for uav in active:
            if head is None:
                edts[uav.uav_id] = self._busy_remaining(uav, t)
                continue
            try:
                edts[uav.uav_id] = self._estimate(head, uav, t, 0.0)
            except Overload:
                edts[uav.uav_id] = math.inf
        finite = {k: v for k, v in edts.items() if math.isfinite(v)}
        scores = delivery_scores(finite) if finite else {}
        out = []
        for uav in active:
            age = t - uav.last_heartbeat
            freshness = max(0.0, 1.0 - age / self.sc.staleness_window)
            share = 0.0 if uav.state is UavState.TRANSMITTING else 1.0
            out.append(CompetenceInputs(
                uav_id=uav.uav_id,
                timestamp_freshness=freshness,
                poi_valid=uav.uav_id in self.registered,
                resource_score=0.5 * (uav.energy.fraction + share),
                delivery_score=scores.get(uav.uav_id, 0.0),
            ))
        return out

    def _consensus_round(self, r: int, t: int) -> RoundOutcome | None:
        for uav in self._active_uavs():
            self.pool.append(Transaction.of(next(self.tx_ids), Heartbeat(uav.uav_id, t)))
            uav.last_heartbeat = t
        try:
            outcome = select_proposer(self.sc.engine, self._candidates(t), r, self.race_seed)
        except NoEligibleCandidate:
            self.skipped.append(r)
            return None
        difficulty = nonce = 0
        if self.sc.mine_blocks and self.sc.engine.kind is ConsensusKind.POW:
            difficulty = self.sc.engine.difficulty
            nonce, attempts = mine_nonce(self.chain, self.pool, outcome.proposer, t, difficulty)
            outcome.attempts = attempts
            outcome.consensus_energy = attempts * self.sc.engine.hash_energy
        self.chain = append_block(self.chain, self.pool, outcome.proposer, t, difficulty, nonce)
        self.pool = []
        outcome.within_limit = outcome.latency <= self.sc.reward.time_limit
        return outcome

    def _dispatch(self, t: float, outcome: RoundOutcome) -> None:
        if not self.pending:
            return
        now = t + outcome.latency
        members = [
            FleetMember(spec=u.spec, kinematics=u.kinematics, energy=u.energy,
                        reputation=u.reputation.score, available=u.state is UavState.READY,
                        poi_valid=True, freshness=1.0, bandwidth_share=1.0)
            for u in self._active_uavs() if u.state is UavState.READY
        ]
        if not members:
            return
        jobs = [self.jobs[j].job for j in self.pending]
        delays = {j.job_id: self._clear_delay(j) for j in jobs}
        results = assign_jobs(jobs, members, self.sc.engine, proposer=outcome.proposer, now=now,
                              tx_estimate=lambda job: delays[job.job_id])
        still = []
        for a in results:
            jr = self.jobs[a.job_id]
            if a.uav_id is None:
                still.append(a.job_id)
                continue
            uav = self.fleet[a.uav_id]
            job = jr.job
            jr.trip = trip_length(uav.kinematics.position, job)
            jr.tx_delay = delays[job.job_id]
            jr.dispatched_at = now
            edt = jr.edt if jr.edt is not None and math.isfinite(jr.edt) else a.edt
            jr.assignment = replace(a, edt=edt)
            speed = airframe.payload_speed(uav.spec, job.payload)
            flight_time = jr.trip / speed
            dx = job.destination[0] - uav.kinematics.position[0]
            dy = job.destination[1] - uav.kinematics.position[1]
            norm = math.hypot(dx, dy) or 1.0
            uav.kinematics.velocity = (speed * dx / norm, speed * dy / norm, 0.0)
            uav.kinematics.flight_elapsed += flight_time
            uav.job_id = job.job_id
            uav.move_to(UavState.TRANSMITTING, now)
            self._push(now + flight_time, _ARRIVE, job.job_id)
        self.pending = still

    def _reward(self, outcome: RoundOutcome, consensus_energy: float) -> tuple[float | None, float | None]:
        uav = self.fleet.get(outcome.proposer)
        if uav is None:
            return None, None
        rc = self.sc.reward
        used = uav.energy.total_consumed
        draw = miner_energy_draw(rc.miner_power, rc.miner_power_max, self.sc.channel.tx_power)
        efficiency = miner_energy_ratio(
            used, miner_energy_total(draw, uav.energy.capacity, used))
        if self.interval_served == 0:
            return None, efficiency
        active = self._active_uavs() or list(self.fleet.values())
        avg = sum(u.energy.remaining for u in active) / len(active)
        params = RewardParams(
            success_reward=rc.success_reward, cost_weight=rc.cost_weight,
            system_cost=self.interval_flight + consensus_energy,
            users_served=self.interval_served, penalty_index=rc.penalty_index,
            time_limit=rc.time_limit, round_duration=outcome.latency,
            fleet_avg_energy=avg, remaining_energy=uav.energy.remaining,
            hover_unit_energy=uav.energy.hover_unit_energy)
        reward = instant_reward(params)
        outcome.reward = reward
        self.rewards[uav.uav_id] = self.rewards.get(uav.uav_id, 0.0) + reward
        return reward, efficiency

    def _row(self, r: int, t: int, outcome: RoundOutcome | None, final: bool) -> MetricsRow:
        consensus_energy = outcome.consensus_energy if outcome else 0.0
        reward = efficiency = None
        if outcome is not None:
            reward, efficiency = self._reward(outcome, consensus_energy)
        self.cum_consensus += consensus_energy
        self.cum_flight += self.interval_flight

        completed = [jr for jr in self.jobs.values()
                     if jr.assignment is not None and jr.assignment.finish_time is not None]
        end = t + (0 if final else self.sc.round_duration)
        unfinished = [jr for jr in self.jobs.values()
                      if jr.job.arrival < end and
                      (jr.assignment is None or jr.assignment.finish_time is None)]
        if final:
            missed = len(unfinished)
        else:
            missed = sum(1 for jr in unfinished if end - jr.job.arrival > jr.job.deadline)
        in_progress = sum(1 for jr in unfinished if jr.assignment is not None
                          and jr.assignment.uav_id is not None)
        edts = [jr.edt for jr in completed if jr.edt is not None and math.isfinite(jr.edt)]
        adts = [jr.assignment.finish_time - jr.assignment.start_time for jr in completed]
        denom = self.delivered + self.failed + missed
        reps = [u.reputation.score for u in self.fleet.values()]
        row = MetricsRow(
            round=r, sim_time=t, consensus=self.sc.consensus.value,
            proposer=outcome.proposer if outcome else -1,
            consensus_energy=consensus_energy,
            flight_energy=self.interval_flight,
            round_energy=consensus_energy + self.interval_flight,
            cumulative_consensus_energy=self.cum_consensus,
            cumulative_flight_energy=self.cum_flight,
            cumulative_energy=self.cum_consensus + self.cum_flight,
            delivered=self.delivered, failed=self.failed, missed=missed,
            queued=len(self.pending), in_progress=in_progress,
            mean_edt=sum(edts) / len(edts) if edts else None,
            mean_adt=sum(adts) / len(adts) if adts else None,
            success_rate=self.delivered / denom if denom else None,
            active_uavs=len(self._active_uavs()),
            reward=reward, miner_efficiency=efficiency,
            mean_reputation=sum(reps) / len(reps) if reps else 0.0,
            chain_height=len(self.chain),
        )
        self.interval_flight = 0.0
        self.interval_served = 0
        return row

    def _idle(self) -> bool:
        return not self.events and not self.pending and all(
            u.state is not UavState.TRANSMITTING for u in self.fleet.values())

    def run(self) -> RunResult:
        sc = self.sc
        last = sc.rounds
        r = 0
        while True:
            t = r * sc.round_duration
            final = r == last
            if r == 0:
                self._register_all(t)
                outcome = None
            else:
                outcome = self._consensus_round(r, t)
                if outcome is not None and not final:
                    self._dispatch(t, outcome)
            if not final:
                self._advance(t + sc.round_duration)
            self.rows.append(self._row(r, t, outcome, final))
            for uav in self.fleet.values():
                if uav.state is UavState.QUEUED and airframe.can_return(uav.energy):
                    uav.move_to(UavState.READY, t)
            if final:
                break
            r += 1
            if self.stop_when_idle and self._idle() and r < last:
                last = r
        return RunResult(sc, self.rows, self.chain, self.jobs, self.fleet, self.rewards,
                         self.skipped)


def run_scenario(scenario: Scenario, stop_when_idle: bool = False) -> RunResult:
    """Run ``scenario`` to its horizon; the result unpacks as ``(rows, chain)``.

    ``stop_when_idle`` ends the run at the first round boundary after every
    job has finished, which sweeps use to skip idle heartbeat rounds.
    """
    return Simulation(scenario, stop_when_idle).run()


def delivery_records(chain: Chain) -> list:
    return [tx.payload for tx in chain.transactions(TxKind.DELIVERY_RECORD)]
