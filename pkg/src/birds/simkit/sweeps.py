"""Experiment sweeps over fleet size, workload, user load and time.

Each sweep returns a list of plain dict rows ready for :func:`emit_csv`.
Cells are independent (scenario, seed) runs; with ``workers > 1`` they are
spread over a process pool and merged back in key order, so results do not
depend on the worker count.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from statistics import fmean
from typing import Iterable, Sequence

from birds.consensus import ConsensusKind
from birds.simkit.config import Scenario
from birds.simkit.engine import run_scenario

ALL_ENGINES = (ConsensusKind.POC, ConsensusKind.POW, ConsensusKind.POID, ConsensusKind.POA)


def _cell(scenario: Scenario) -> dict:
    res = run_scenario(scenario, stop_when_idle=True)
    done = [jr for jr in res.jobs.values()
            if jr.assignment is not None and jr.assignment.finish_time is not None]
    delays = [jr.assignment.finish_time - jr.assignment.start_time for jr in done]
    edts = [jr.edt for jr in done if jr.edt is not None]
    final = res.final
    total = scenario.job_count
    return {
        "success_rate": final.success_rate,
        "on_time": final.delivered,
        "jobs": total,
        "mean_delay": fmean(delays) if delays else None,
        "mean_edt": fmean(edts) if edts else None,
    }


def _run_cells(cells: Sequence[Scenario], workers: int) -> list[dict]:
    if workers <= 1 or len(cells) < 2:
        return [_cell(c) for c in cells]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_cell, cells))


def _seeds(base: Scenario, n: int) -> list[int]:
    return [base.seed + k for k in range(n)]


def _mean(values: Iterable) -> float | None:
    values = [v for v in values if v is not None]
    return fmean(values) if values else None


def sweep_uav_count(base: Scenario, counts: Sequence[int] | None = None, seeds: int | None = None,
                    workers: int = 1) -> list[dict]:
    """Mean end-to-end delay and success rate against fleet size."""
    counts = list(counts if counts is not None else base.sweep.uav_counts)
    if not counts:
        raise ValueError("counts must be nonempty")
    seed_list = _seeds(base, seeds or base.sweep.seeds)
    cells = [replace(base, uav_count=n, seed=s) for n in counts for s in seed_list]
    results = _run_cells(cells, workers)
    rows = []
    for k, n in enumerate(counts):
        chunk = results[k * len(seed_list):(k + 1) * len(seed_list)]
        rows.append({
            "uav_count": n,
            "seeds": len(seed_list),
            "mean_delay": _mean(c["mean_delay"] for c in chunk),
            "success_rate": _mean(c["success_rate"] for c in chunk),
        })
    return rows


def sweep_jobs(base: Scenario, job_counts: Sequence[int] | None = None, seeds: int | None = None,
               uav_count: int | None = None, workers: int = 1) -> list[dict]:
    """Mean estimated and realized delivery time against workload."""
    job_counts = list(job_counts if job_counts is not None else base.sweep.job_counts)
    if not job_counts:
        raise ValueError("job_counts must be nonempty")
    uavs = uav_count if uav_count is not None else base.sweep.job_sweep_uavs
    seed_list = _seeds(base, seeds or base.sweep.seeds)
    cells = [replace(base, uav_count=uavs, job_count=m, seed=s)
             for m in job_counts for s in seed_list]
    results = _run_cells(cells, workers)
    rows = []
    for k, m in enumerate(job_counts):
        chunk = results[k * len(seed_list):(k + 1) * len(seed_list)]
        rows.append({
            "job_count": m,
            "uav_count": uavs,
            "mean_edt": _mean(c["mean_edt"] for c in chunk),
            "mean_adt": _mean(c["mean_delay"] for c in chunk),
        })
    return rows


def _service_level(base: Scenario, users: int, uavs: int, seed_list: list[int],
                   workers: int) -> float:
    cells = [replace(base, user_count=users, job_count=users, uav_count=uavs, seed=s)
             for s in seed_list]
    results = _run_cells(cells, workers)
    return sum(c["on_time"] for c in results) / sum(c["jobs"] for c in results)


def users_scenario(base: Scenario) -> Scenario:
    """Base scenario re-timed for the user-load experiment.

    Requests trickle in over ``sweep.user_arrival_window`` and are judged
    against ``sweep.user_deadline``.
    """
    sw = base.sweep
    return replace(base, arrival_window=sw.user_arrival_window, deadline=sw.user_deadline)


def uavs_required(base: Scenario, users: int, seed_list: list[int], start: int = 1,
                  workers: int = 1) -> tuple[int, bool]:
    """Smallest fleet meeting the service level, searched upward from ``start``.

    Returns ``(count, saturated)``; a saturated search reports the cap.
    """
    if users == 0:
        return 0, False
    target = base.sweep.service_level
    for n in range(max(1, start), base.sweep.uav_cap + 1):
        if _service_level(base, users, n, seed_list, workers) >= target:
            return n, False
    return base.sweep.uav_cap, True


def sweep_users_consensus(base: Scenario, user_counts: Sequence[int] | None = None,
                          engines: Sequence[ConsensusKind | str] = ALL_ENGINES,
                          seeds: int | None = None, workers: int = 1) -> list[dict]:
    """UAVs needed for the service level at each user load, per engine.

    Each user files one request.  The search for a larger user count starts
    at the answer for the previous (smaller) count, since demand only grows.
    """
    user_counts = list(user_counts if user_counts is not None else base.sweep.user_counts)
    engines = [ConsensusKind(e) for e in engines]
    if not user_counts or not engines:
        raise ValueError("user_counts and engines must be nonempty")
    seed_list = _seeds(base, seeds or base.sweep.user_seeds)
    scenario = users_scenario(base)
    found: dict[tuple[int, ConsensusKind], tuple[int, bool]] = {}
    for engine in engines:
        sc = scenario.with_consensus(engine)
        start = 1
        for users in sorted(user_counts):
            count, saturated = uavs_required(sc, users, seed_list, start, workers)
            found[users, engine] = (count, saturated)
            if users > 0:
                start = count
    return [
        {"user_count": users, "consensus": engine.value, "uavs_required": found[users, engine][0],
         "saturated": found[users, engine][1], "service_level": base.sweep.service_level}
        for users in user_counts for engine in engines
    ]


def energy_timeline(base: Scenario, engines: Sequence[ConsensusKind | str] = ALL_ENGINES
                    ) -> list[dict]:
    """Cumulative consensus and flight energy per round, one full run per engine."""
    rows = []
    for engine in engines:
        res = run_scenario(base.with_consensus(engine))
        for row in res.rows:
            rows.append({
                "consensus": row.consensus,
                "round": row.round,
                "sim_time": row.sim_time,
                "consensus_energy": row.consensus_energy,
                "cumulative_consensus_energy": row.cumulative_consensus_energy,
                "cumulative_flight_energy": row.cumulative_flight_energy,
                "cumulative_energy": row.cumulative_energy,
            })
    return rows
