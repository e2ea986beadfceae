"""UAV physical model: registration attributes, payload-dependent speed,
3-D kinematics, flight/hover energy and the return-to-recharge check.

All quantities are SI (meters, seconds, joules, watts, kilograms).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

from birds.errors import EnergyExhausted, InvalidParameter, Overload

# 400 mph and 100 mph, rounded to 0.1 m/s
SPEED_LIGHT_PAYLOAD = 178.8
SPEED_HEAVY_PAYLOAD = 44.7
LIGHT_PAYLOAD_KG = 1.0
HEAVY_PAYLOAD_KG = 15.0

MPH_TO_MS = 0.44704
RATED_ENDURANCE_S = 3600.0
DEFAULT_THRESHOLD_FRACTION = 0.1


class SizeClass(str, enum.Enum):
    SMALL = "small"
    MEDIUM = "medium"
    LARGE = "large"


@dataclass(frozen=True)
class UavSpec:
    """Registration attributes of one airframe.

    ``payload_capacity`` is the carrying capacity K and ``battery_capacity``
    the maximum stored energy E_max.
    """

    node_id: int
    size_class: SizeClass
    empty_weight: float
    payload_capacity: float
    battery_capacity: float
    rated_flight_duration: float
    rated_travel_distance: float

    def __post_init__(self):
        if not isinstance(self.size_class, SizeClass):
            object.__setattr__(self, "size_class", SizeClass(self.size_class))
        if self.payload_capacity <= 0:
            raise InvalidParameter("payload_capacity must be positive")
        if self.battery_capacity <= 0:
            raise InvalidParameter("battery_capacity must be positive")
        if self.rated_flight_duration <= 0:
            raise InvalidParameter("rated_flight_duration must be positive")


@dataclass
class KinematicState:
    position: tuple[float, float, float] = (0.0, 0.0, 0.0)
    velocity: tuple[float, float, float] = (0.0, 0.0, 0.0)
    flight_elapsed: float = 0.0

    @property
    def speed(self) -> float:
        return math.hypot(*self.velocity)


@dataclass
class EnergyState:
    """Battery bookkeeping for one UAV.

    ``total_consumed`` is derived from capacity and remaining charge so the
    conservation law cannot drift.
    """

    capacity: float
    remaining: float
    threshold: float
    hover_power: float = 0.0
    hover_unit_energy: float = 0.0
    flight_cost_per_meter: float = 0.0
    debits: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        if self.capacity <= 0:
            raise InvalidParameter("capacity must be positive")
        if not 0.0 <= self.remaining <= self.capacity:
            raise InvalidParameter("remaining energy outside [0, capacity]")
        if self.hover_power < 0 or self.hover_unit_energy < 0:
            raise InvalidParameter("hover constants must be nonnegative")

    @classmethod
    def full(cls, spec: UavSpec, hover_power: float, hover_unit_energy: float | None = None,
             threshold_fraction: float = DEFAULT_THRESHOLD_FRACTION) -> "EnergyState":
        if hover_unit_energy is None:
            hover_unit_energy = hover_power
        return cls(
            capacity=spec.battery_capacity,
            remaining=spec.battery_capacity,
            threshold=threshold_fraction * spec.battery_capacity,
            hover_power=hover_power,
            hover_unit_energy=hover_unit_energy,
            flight_cost_per_meter=flight_cost_per_meter(spec),
        )

    @property
    def total_consumed(self) -> float:
        return self.capacity - self.remaining

    @property
    def fraction(self) -> float:
        return self.remaining / self.capacity

    def debit(self, joules: float) -> float:
        if joules < 0:
            raise InvalidParameter("cannot debit negative energy")
        if joules > self.remaining:
            raise EnergyExhausted(
                f"debit of {joules:.3f} J exceeds remaining {self.remaining:.3f} J")
        self.remaining -= joules
        self.debits.append(joules)
        return joules


def flying_distance(state: KinematicState) -> float:
    """Distance covered over the elapsed flight time at the current velocity."""
    if state.flight_elapsed < 0:
        raise InvalidParameter("flight_elapsed must be nonnegative")
    return state.flight_elapsed * math.hypot(*state.velocity)


def sortie_energy(flight_power: float, hover_power: float, hover_time: float) -> float:
    """Energy of one sortie: the flight term plus hover power times hover time."""
    if flight_power < 0 or hover_power < 0 or hover_time < 0:
        raise InvalidParameter("sortie energy inputs must be nonnegative")
    return flight_power + hover_power * hover_time


def can_return(energy: EnergyState) -> bool:
    return energy.remaining > energy.threshold


def payload_speed(spec: UavSpec, payload: float) -> float:
    """Cruise speed in m/s for ``payload`` kg.

    Linear between the light-load and heavy-load endpoints, clamped outside
    [1, 15] kg.

    Raises:
        Overload: payload exceeds the airframe's capacity.
    """
    if payload < 0:
        raise InvalidParameter("payload must be nonnegative")
    if payload > spec.payload_capacity:
        raise Overload(
            f"payload {payload} kg exceeds capacity {spec.payload_capacity} kg of UAV {spec.node_id}")
    return _interpolated_speed(payload)


def _interpolated_speed(payload: float) -> float:
    if payload <= LIGHT_PAYLOAD_KG:
        return SPEED_LIGHT_PAYLOAD
    if payload >= HEAVY_PAYLOAD_KG:
        return SPEED_HEAVY_PAYLOAD
    frac = (payload - LIGHT_PAYLOAD_KG) / (HEAVY_PAYLOAD_KG - LIGHT_PAYLOAD_KG)
    return SPEED_LIGHT_PAYLOAD + frac * (SPEED_HEAVY_PAYLOAD - SPEED_LIGHT_PAYLOAD)


def flight_cost_per_meter(spec: UavSpec, endurance: float = RATED_ENDURANCE_S) -> float:
    # full battery lasts `endurance` seconds at max-payload cruise speed
    top_speed = _interpolated_speed(spec.payload_capacity)
    return spec.battery_capacity / (endurance * top_speed)


def path_length(points: Sequence[Sequence[float]]) -> float:
    return sum(math.dist(a, b) for a, b in zip(points, points[1:]))
