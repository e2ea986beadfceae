"""Scenario configuration and its ``key = value`` text format.

A scenario file holds one ``key = value`` pair per line.  ``#`` starts a
comment.  Keys belong to one of the sections ``[consensus]``, ``[reward]``,
``[channel]`` and ``[sweep]`` or to the unnamed top-level section; a key
may be written under its own section header or at top level, but never
under a different section.  Lists are comma-separated.

Example::

    uav_count = 12
    consensus = pow

    [consensus]
    difficulty = 12
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields, replace
from typing import Any

from birds.consensus import ConsensusEngine, ConsensusKind
from birds.errors import ConfigError, InvalidParameter


@dataclass(frozen=True)
class RewardConfig:
    success_reward: float = 10.0
    cost_weight: float = 1e-5
    penalty_index: float = 1e-3
    time_limit: float = 1.0
    miner_power: float = 5.0
    miner_power_max: float = 10.0

    def __post_init__(self):
        if self.time_limit <= 0:
            raise InvalidParameter("time_limit must be positive")


@dataclass(frozen=True)
class ChannelConfig:
    channel_count: int = 4
    bandwidth: float = 1e6
    noise_power: float = 1e-9
    tx_power: float = 0.1
    hover_altitude: float = 100.0
    reference_distance: float = 1.0

    def __post_init__(self):
        if self.channel_count < 1:
            raise InvalidParameter("channel_count must be at least 1")
        if self.bandwidth <= 0 or self.noise_power <= 0:
            raise InvalidParameter("bandwidth and noise_power must be positive")
        if self.tx_power < 0 or self.hover_altitude <= 0 or self.reference_distance <= 0:
            raise InvalidParameter("tx_power >= 0, hover_altitude > 0, reference_distance > 0")


@dataclass(frozen=True)
class SweepConfig:
    seeds: int = 10
    uav_counts: tuple[int, ...] = (2, 4, 6, 8, 10, 12, 14, 16, 18, 20)
    job_counts: tuple[int, ...] = (5, 10, 15, 20, 25)
    job_sweep_uavs: int = 10
    user_counts: tuple[int, ...] = (20, 40, 60, 80, 100)
    user_seeds: int = 4
    user_arrival_window: float = 3000.0
    user_deadline: float = 120.0
    service_level: float = 0.95
    uav_cap: int = 64

    def __post_init__(self):
        if self.seeds < 1 or self.user_seeds < 1:
            raise InvalidParameter("seed counts must be at least 1")
        if not 0 < self.service_level <= 1:
            raise InvalidParameter("service_level must be in (0, 1]")
        if self.user_arrival_window < 0 or self.user_deadline <= 0:
            raise InvalidParameter("user_arrival_window >= 0 and user_deadline > 0 required")
        if self.uav_cap < 1:
            raise InvalidParameter("uav_cap must be at least 1")
        for name in ("uav_counts", "job_counts", "user_counts"):
            if any(v < 0 for v in getattr(self, name)):
                raise InvalidParameter(f"{name} entries must be nonnegative")


@dataclass(frozen=True)
class Scenario:
    uav_count: int = 20
    user_count: int = 20
    job_count: int = 20
    region_side: float = 10_000.0
    waypoint_count: int = 80
    deadline: float = 52.0
    arrival_window: float = 120.0
    duration: int = 3600
    round_duration: int = 10
    seed: int = 0
    payload_min: float = 0.5
    payload_max: float = 5.0
    capacity_min: float = 1.0
    capacity_max: float = 15.0
    base_power: float = 200.0
    power_per_kg: float = 50.0
    hover_power: float = 150.0
    hover_unit_energy: float = 150.0
    threshold_fraction: float = 0.1
    packet_size_min: float = 1e6
    packet_size_max: float = 2e7
    packet_deadline: float = 30.0
    job_price_min: float = 5.0
    job_price_max: float = 20.0
    staleness_window: float = 30.0
    certificate_threshold: float = 2.0
    mine_blocks: bool = False
    engine: ConsensusEngine = field(default_factory=ConsensusEngine)
    reward: RewardConfig = field(default_factory=RewardConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)

    def __post_init__(self):
        for name in ("uav_count", "user_count", "job_count", "waypoint_count"):
            if getattr(self, name) < 0:
                raise InvalidParameter(f"{name} must be nonnegative")
        if self.job_count > 0 and (self.user_count < 1 or self.waypoint_count < 1):
            raise InvalidParameter("jobs need at least one user and one waypoint")
        if self.region_side <= 0:
            raise InvalidParameter("region_side must be positive")
        if self.deadline <= 0 or self.packet_deadline <= 0:
            raise InvalidParameter("deadlines must be positive")
        if self.arrival_window < 0:
            raise InvalidParameter("arrival_window must be nonnegative")
        if self.round_duration <= 0 or self.duration < self.round_duration:
            raise InvalidParameter("need 0 < round_duration <= duration")
        if not 0 < self.payload_min <= self.payload_max:
            raise InvalidParameter("need 0 < payload_min <= payload_max")
        if not 0 < self.capacity_min <= self.capacity_max:
            raise InvalidParameter("need 0 < capacity_min <= capacity_max")
        if not 0 <= self.threshold_fraction < 1:
            raise InvalidParameter("threshold_fraction must be in [0, 1)")
        if self.hover_power < 0 or self.hover_unit_energy <= 0:
            raise InvalidParameter("hover_power >= 0 and hover_unit_energy > 0 required")
        if not 0 <= self.packet_size_min <= self.packet_size_max:
            raise InvalidParameter("bad packet size range")
        if self.job_price_min > self.job_price_max:
            raise InvalidParameter("bad job price range")
        if self.staleness_window <= 0:
            raise InvalidParameter("staleness_window must be positive")

    @property
    def consensus(self) -> ConsensusKind:
        return self.engine.kind

    @property
    def rounds(self) -> int:
        return self.duration // self.round_duration

    def with_consensus(self, kind: ConsensusKind | str) -> "Scenario":
        return replace(self, engine=replace(self.engine, kind=ConsensusKind(kind)))

    def evolve(self, **changes) -> "Scenario":
        return replace(self, **changes)


# key -> (section, field) ; section None means a Scenario field
_SECTIONS = {"consensus": ConsensusEngine, "reward": RewardConfig,
             "channel": ChannelConfig, "sweep": SweepConfig}
_NESTED = {"consensus": "engine", "reward": "reward", "channel": "channel", "sweep": "sweep"}


def _key_table() -> dict[str, tuple[str | None, dataclasses.Field]]:
    table = {}
    for f in fields(Scenario):
        if f.name not in _NESTED.values():
            table[f.name] = (None, f)
    for section, cls in _SECTIONS.items():
        for f in fields(cls):
            if f.name == "kind":
                continue
            table[f.name] = (section, f)
    return table


_KEYS = _key_table()


def _convert(raw: str, default: Any, name: str) -> Any:
    if isinstance(default, bool):
        low = raw.lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ValueError(f"{name} expects a boolean")
    if isinstance(default, tuple):
        elem = type(default[0]) if default else float
        items = [s.strip() for s in raw.split(",") if s.strip()]
        return tuple(elem(float(s)) if elem is int and float(s).is_integer() else elem(s)
                     for s in items)
    if isinstance(default, int):
        value = float(raw)
        if not value.is_integer():
            raise ValueError(f"{name} expects an integer")
        return int(value)
    if isinstance(default, float):
        return float(raw)
    return raw


def _default_of(f: dataclasses.Field) -> Any:
    if f.default is not dataclasses.MISSING:
        return f.default
    return f.default_factory()


def parse_scenario(text: str) -> Scenario:
    """Parse scenario text into a validated Scenario; missing keys take defaults.

    Raises:
        ConfigError: malformed line, unknown or misplaced key, bad value or
            out-of-range setting; the message names the offending line.
    """
    section: str | None = None
    top: dict[str, Any] = {}
    nested: dict[str, dict[str, Any]] = {s: {} for s in _SECTIONS}
    lines: dict[str, int] = {}
    kind = None

    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {raw_line.strip()!r}", lineno)
            name = line[1:-1].strip().lower()
            if name not in _SECTIONS:
                raise ConfigError(f"unknown section [{name}]", lineno)
            section = name
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw_line.strip()!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ConfigError("empty key or value", lineno)
        if key == "consensus" and section is None:
            try:
                kind = ConsensusKind(value.lower())
            except ValueError:
                raise ConfigError(f"unknown consensus {value!r}", lineno) from None
            lines["kind"] = lineno
            continue
        if key not in _KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        home, f = _KEYS[key]
        if section is not None and home != section:
            raise ConfigError(f"key {key!r} does not belong in [{section}]", lineno)
        if key in lines:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        try:
            converted = _convert(value, _default_of(f), key)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}", lineno) from None
        lines[key] = lineno
        (top if home is None else nested[home])[key] = converted

    try:
        parts = {}
        for name, cls in _SECTIONS.items():
            values = nested[name]
            if name == "consensus" and kind is not None:
                values = {**values, "kind": kind}
            parts[_NESTED[name]] = cls(**values)
        return Scenario(**top, **parts)
    except (InvalidParameter, ValueError, TypeError) as exc:
        lineno = _blame(str(exc), lines)
        raise ConfigError(f"out of range: {exc}", lineno) from None


def _blame(message: str, lines: dict[str, int]) -> int | None:
    hits = [n for key, n in lines.items() if key in message]
    return min(hits) if hits else None


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())
