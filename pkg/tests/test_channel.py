import math

import pytest
from hypothesis import assume, given, strategies as st

from birds.channel import (DataPacket, Link, achievable_rate, assign_channels, coverage_load,
                           delivery_feasible, path_gain, snr, transmission_delay)
from birds.errors import InfeasibleLink, InvalidParameter

pos = st.floats(1e-3, 1e3, allow_nan=False)
nonneg = st.floats(0, 1e3, allow_nan=False)


def link(p, h, user=0):
    return Link(user, 1, 0, p, h)


@pytest.mark.parametrize("own, others, noise, expected", [
    ((1.0, 1.0), [], 1.0, 1.0),
    ((2.0, 0.5), [(1.0, 0.5)], 0.5, 1.0),
    ((0.0, 0.7), [], 1.0, 0.0),
])
def test_snr_examples(own, others, noise, expected):
    interferers = [link(p, h, user=k + 1) for k, (p, h) in enumerate(others)]
    assert snr(link(*own), interferers, noise) == pytest.approx(expected, rel=1e-12)


def test_snr_rejects_self_interference():
    l = link(1.0, 1.0)
    with pytest.raises(InvalidParameter):
        snr(l, [l], 1.0)


@given(pos, pos, st.lists(st.tuples(pos, pos), max_size=5), pos, st.floats(1.01, 10))
def test_snr_monotonicity(p, h, others, noise, factor):
    interferers = [link(a, b, user=k + 1) for k, (a, b) in enumerate(others)]
    base = snr(link(p, h), interferers, noise)
    assert snr(link(p * factor, h), interferers, noise) > base
    assert snr(link(p, h * factor), interferers, noise) > base
    assert snr(link(p, h), interferers, noise * factor) < base
    if interferers:
        louder = [link(a * factor, b, user=k + 1) for k, (a, b) in enumerate(others)]
        assert snr(link(p, h), louder, noise) < base


@pytest.mark.parametrize("bandwidth, ratio, expected", [
    (1e6, 0.0, 0.0), (1e6, 1.0, 1e6), (1e6, 3.0, 2e6)])
def test_rate_examples(bandwidth, ratio, expected):
    assert achievable_rate(bandwidth, ratio) == pytest.approx(expected, rel=1e-12)


@given(pos, nonneg, nonneg, st.floats(0.1, 100))
def test_rate_increasing_in_snr_and_linear_in_bandwidth(b, z1, z2, c):
    lo, hi = sorted((z1, z2))
    assume(hi - lo > 1e-9 * max(1.0, hi))
    assert achievable_rate(b, lo) < achievable_rate(b, hi)
    assert achievable_rate(c * b, z1) == pytest.approx(c * achievable_rate(b, z1), rel=1e-9)


@given(pos, st.floats(1e-3, 1e3), st.floats(1, 1e9))
def test_doubling_bandwidth_halves_delay(b, z, size):
    d1 = transmission_delay(size, achievable_rate(b, z))
    d2 = transmission_delay(size, achievable_rate(2 * b, z))
    assert d2 == pytest.approx(d1 / 2, rel=1e-9)


def test_transmission_delay_examples():
    assert transmission_delay(DataPacket(1, 0, 1e6, 5.0), 1e6) == 1.0
    assert transmission_delay(DataPacket(1, 0, 0.0, 5.0), 1e6) == 0.0
    assert transmission_delay(0.0, 0.0) == 0.0
    with pytest.raises(InfeasibleLink):
        transmission_delay(DataPacket(1, 0, 1e6, 5.0), 0.0)


@pytest.mark.parametrize("delay, deadline, expected", [
    (1.0, 2.0, True), (3.0, 2.0, False), (2.0, 2.0, True)])
def test_delivery_feasible(delay, deadline, expected):
    assert delivery_feasible(delay, deadline) is expected


def packets(sizes, start=0):
    return [DataPacket(start + k, 0, s, 1.0) for k, s in enumerate(sizes)]


def test_coverage_load_examples():
    assert coverage_load(packets([1, 2, 3])) == 6
    assert coverage_load([]) == 0
    assert coverage_load(packets([7])) == 7


@given(st.lists(nonneg, max_size=20), st.lists(nonneg, max_size=20))
def test_coverage_load_additive(a, b):
    pa, pb = packets(a), packets(b, start=len(a))
    assert coverage_load(pa + pb) == pytest.approx(coverage_load(pa) + coverage_load(pb))


def test_path_gain_and_channel_assignment():
    assert path_gain(100.0) == pytest.approx(1e-4)
    assert path_gain(0.5) == 1.0
    assert assign_channels([5, 1, 3], 2) == {1: 0, 3: 1, 5: 0}
    with pytest.raises(InvalidParameter):
        assign_channels([1], 0)


def test_domain_invariants():
    with pytest.raises(InvalidParameter):
        DataPacket(1, 0, -1.0, 1.0)
    with pytest.raises(InvalidParameter):
        DataPacket(1, 0, 1.0, 0.0)
    with pytest.raises(InvalidParameter):
        Link(0, 1, 0, -1.0, 1.0)
    assert math.isfinite(snr(link(1, 1), [], 1e-9))
