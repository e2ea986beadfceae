from collections import Counter

import numpy as np
import pytest
from hypothesis import given, strategies as st

from birds.consensus import (CompetenceInputs, ConsensusEngine, ConsensusKind, RewardParams,
                             authority_set, competence_score, instant_reward, miner_energy_draw,
                             miner_energy_ratio, miner_energy_total, penalty, pow_race,
                             round_seed, select_proposer)
from birds.errors import (DegenerateEnergyState, DivisionDegenerate, InvalidParameter,
                          NoEligibleCandidate)

unit = st.floats(0, 1)


def cand(uid, ts=1.0, poi=True, por=1.0, edt=1.0):
    return CompetenceInputs(uid, ts, poi, por, edt)


def with_score(uid, target):
    # PoI contributes 0.25; spread the rest evenly over the other three inputs
    x = (target - 0.25) / 0.75
    return cand(uid, x, True, x, x)


@pytest.mark.parametrize("inputs, expected", [
    (cand(1), 1.0),
    (cand(1, 0.0, True, 0.0, 0.0), 0.25),
])
def test_competence_examples(inputs, expected):
    assert competence_score(inputs) == pytest.approx(expected)


def test_invalid_identity_is_ineligible():
    assert competence_score(cand(1, poi=False)) is None
    with pytest.raises(NoEligibleCandidate):
        select_proposer(ConsensusEngine(), [cand(1, poi=False)], 1, 0)


def test_poc_argmax_and_tie_break():
    e = ConsensusEngine()
    out = select_proposer(e, [with_score(2, 0.6), with_score(1, 0.8)], 1, 0)
    assert out.proposer == 1 and out.consensus_energy == 1.0
    tied = select_proposer(e, [with_score(5, 0.7), with_score(3, 0.7)], 1, 0)
    assert tied.proposer == 3


def test_empty_candidates():
    for kind in ConsensusKind:
        with pytest.raises(NoEligibleCandidate):
            select_proposer(ConsensusEngine(kind=kind), [], 0, 0)


scored = st.lists(st.tuples(unit, unit, unit), min_size=1, max_size=8)


@given(scored, st.floats(0.01, 10), st.floats(-5, 5))
def test_poc_argmax_invariant_under_affine_rescaling(rows, a, b):
    cands = [cand(k + 1, ts, True, por, edt) for k, (ts, por, edt) in enumerate(rows)]
    chosen = select_proposer(ConsensusEngine(), cands, 1, 0).proposer
    rescaled = {c.uav_id: a * competence_score(c) + b for c in cands}
    best = max(rescaled.values())
    oracle = min(uid for uid, s in rescaled.items() if s >= best - 1e-12 * max(1, abs(best)))
    base = {c.uav_id: competence_score(c) for c in cands}
    assert base[chosen] == max(base.values())
    assert rescaled[chosen] == pytest.approx(rescaled[oracle], rel=1e-9, abs=1e-12)


@given(scored, st.sampled_from(list(ConsensusKind)), st.integers(0, 1000), st.integers(0, 2**32))
def test_select_proposer_deterministic(rows, kind, r, seed):
    cands = [cand(k + 1, ts, True, por, edt) for k, (ts, por, edt) in enumerate(rows)]
    e = ConsensusEngine(kind=kind, difficulty=6)
    assert select_proposer(e, cands, r, seed) == select_proposer(e, cands, r, seed)


def test_pow_energy_and_attempt_mean():
    e = ConsensusEngine(kind=ConsensusKind.POW, difficulty=10)
    cands = [cand(k) for k in range(1, 6)]
    outs = [select_proposer(e, cands, r, 7) for r in range(1000)]
    mean = np.mean([o.attempts for o in outs])
    assert abs(mean - 1024) <= 0.1 * 1024
    for o in outs:
        assert o.consensus_energy == pytest.approx(o.attempts * e.hash_energy)


def test_pow_race_winner_rule():
    rng = round_seed(3, 4)
    winner, attempts = pow_race(4, 2, rng)
    assert winner == (attempts - 1) % 4
    with pytest.raises(NoEligibleCandidate):
        pow_race(0, 1, rng)


@pytest.mark.parametrize("n", [1, 3, 7, 20])
def test_round_robin_fairness(n):
    cands = [cand(k * 3 + 1) for k in range(n)]
    for kind, members in ((ConsensusKind.POID, n), (ConsensusKind.POA, min(3, n))):
        e = ConsensusEngine(kind=kind)
        counts = Counter(select_proposer(e, cands, r, 0).proposer for r in range(1000))
        assert len(counts) == members
        assert max(counts.values()) - min(counts.values()) <= 1
        assert set(counts.values()) <= {1000 // members, -(-1000 // members)}


def test_poa_authorities_are_lowest_ids():
    cands = [cand(u) for u in (9, 4, 2, 7, 5)]
    assert authority_set(cands, 3) == [2, 4, 5]
    e = ConsensusEngine(kind=ConsensusKind.POA)
    assert {select_proposer(e, cands, r, 0).proposer for r in range(9)} == {2, 4, 5}


def test_poc_energy_constant_and_below_pow():
    poc = ConsensusEngine()
    pow_ = ConsensusEngine(kind=ConsensusKind.POW, difficulty=8)
    for n in (1, 5, 20):
        cands = [cand(k) for k in range(1, n + 1)]
        e_poc = sum(select_proposer(poc, cands, r, 1).consensus_energy for r in range(200))
        e_pow = sum(select_proposer(pow_, cands, r, 1).consensus_energy for r in range(200))
        assert e_poc == pytest.approx(200 * poc.validation_energy)
        assert e_pow > e_poc


def test_engine_validation():
    with pytest.raises(InvalidParameter):
        ConsensusEngine(weights=(0.5, 0.5, 0.5, 0.5))
    with pytest.raises(InvalidParameter):
        ConsensusEngine(difficulty=-1)
    with pytest.raises(InvalidParameter):
        ConsensusEngine(authority_count=0)
    with pytest.raises(InvalidParameter):
        CompetenceInputs(1, 1.5, True, 0.0, 0.0)


# --- miner energy and rewards ------------------------------------------------

def test_miner_energy_examples():
    assert miner_energy_ratio(50.0, 2.0) == 25.0
    assert miner_energy_total(100.0, 200.0, 50.0) == pytest.approx(2 / 3)
    assert miner_energy_draw(10.0, 6.0, 1.0) == pytest.approx(2.0)
    with pytest.raises(DegenerateEnergyState):
        miner_energy_total(100.0, 50.0, 50.0)
    with pytest.raises(DegenerateEnergyState):
        miner_energy_draw(1.0, 1.0, 1.0)


def params(**kw):
    base = dict(success_reward=10.0, cost_weight=1.0, system_cost=2.0, users_served=4,
                penalty_index=1.0, time_limit=5.0, round_duration=3.0, fleet_avg_energy=104.0,
                remaining_energy=100.0, hover_unit_energy=4.0)
    base.update(kw)
    return RewardParams(**base)


def test_instant_reward_examples():
    # penalty = 1 * (104 - 100) / 4 = 1
    assert instant_reward(params()) == pytest.approx(8.5)
    assert instant_reward(params(round_duration=6.0)) == pytest.approx(-1.5)
    with pytest.raises(DivisionDegenerate):
        instant_reward(params(users_served=0))


def test_penalty_examples():
    assert penalty(2.0, 100.0, 80.0, 4.0) == pytest.approx(10.0)
    assert penalty(2.0, 100.0, 100.0, 4.0) == 0.0
    assert penalty(1.0, 100.0, 120.0, 4.0) == pytest.approx(-5.0)
    with pytest.raises(InvalidParameter):
        penalty(1.0, 1.0, 1.0, 0.0)
