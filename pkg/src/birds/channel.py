"""Air-to-ground link model: co-channel SNR, Shannon rate, transmission
delay, deadline feasibility and coverage-area load."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from birds.errors import InfeasibleLink, InvalidParameter


@dataclass(frozen=True)
class Channel:
    channel_id: int
    bandwidth: float
    noise_power: float

    def __post_init__(self):
        if self.bandwidth <= 0:
            raise InvalidParameter("bandwidth must be positive")
        if self.noise_power <= 0:
            raise InvalidParameter("noise power must be positive")


@dataclass(frozen=True)
class Link:
    user_id: int
    uav_id: int
    channel_id: int
    tx_power: float
    channel_gain: float

    def __post_init__(self):
        if self.tx_power < 0 or self.channel_gain < 0:
            raise InvalidParameter("tx_power and channel_gain must be nonnegative")

    @property
    def received_power(self) -> float:
        return self.tx_power * self.channel_gain


@dataclass(frozen=True)
class DataPacket:
    packet_id: int
    owner: int
    size: float  # bits
    deadline: float  # seconds

    def __post_init__(self):
        if self.size < 0:
            raise InvalidParameter("packet size must be nonnegative")
        if self.deadline <= 0:
            raise InvalidParameter("packet deadline must be positive")


def snr(link: Link, interferers: Iterable[Link], noise_power: float) -> float:
    """Signal power of ``link`` over co-channel interference plus noise.

    ``interferers`` are the other users' links on the same channel, with
    gains measured toward this link's receiver; the link itself must not be
    among them.
    """
    if noise_power <= 0:
        raise InvalidParameter("noise power must be positive")
    interference = 0.0
    for other in interferers:
        if other is link:
            raise InvalidParameter("link may not interfere with itself")
        interference += other.tx_power * other.channel_gain
    return link.tx_power * link.channel_gain / (interference + noise_power)


def achievable_rate(bandwidth: float, snr_ratio: float) -> float:
    """Shannon rate B*log2(1 + snr) in bits per second."""
    if bandwidth <= 0:
        raise InvalidParameter("bandwidth must be positive")
    if snr_ratio < 0:
        raise InvalidParameter("snr must be nonnegative")
    # log1p keeps precision for tiny SNR
    return bandwidth * math.log1p(snr_ratio) / math.log(2.0)


def transmission_delay(packet: DataPacket | float, rate: float) -> float:
    size = packet.size if isinstance(packet, DataPacket) else float(packet)
    if rate < 0:
        raise InvalidParameter("rate must be nonnegative")
    if size == 0:
        return 0.0
    if rate == 0:
        raise InfeasibleLink(f"cannot send {size} bits over a zero-rate link")
    return size / rate


def delivery_feasible(delay: float, deadline: float) -> bool:
    # boundary inclusive: only a delay that exceeds the deadline fails
    return delay <= deadline


def coverage_load(packets: Iterable[DataPacket]) -> float:
    return sum(p.size for p in packets)


def path_gain(distance: float, reference_distance: float = 1.0) -> float:
    """Inverse-square gain normalized to 1 at ``reference_distance``.

    Distances inside the reference sphere are clamped so the gain never
    exceeds 1.
    """
    if reference_distance <= 0:
        raise InvalidParameter("reference distance must be positive")
    d = max(distance, reference_distance)
    return (reference_distance / d) ** 2


def assign_channels(user_ids: Sequence[int], channel_count: int) -> dict[int, int]:
    """Round-robin channel allocation in ascending user-id order."""
    if channel_count < 1:
        raise InvalidParameter("need at least one channel")
    return {uid: k % channel_count for k, uid in enumerate(sorted(user_ids))}
