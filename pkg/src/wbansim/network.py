"""Star-topology network configuration and non-coordinated TDMA timing.

Each body area network is a hub, two relays and up to three sensors in a
star. Several such networks share one channel by slotted time division,
but without any cross-network coordination: every superframe each network
places its active period at an offset drawn uniformly over the whole
cycle, so transmissions of different networks collide at random and only
partially. Collisions are quantified by circular interval overlap.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .channel import BodyLocation

COORDINATOR_LOCATIONS = frozenset(
    {BodyLocation.CHEST, BodyLocation.LEFT_HIP, BodyLocation.RIGHT_HIP})


class Role(enum.Enum):
    HUB = "hub"
    RELAY = "relay"
    SENSOR = "sensor"


@dataclass(frozen=True)
class NodeSpec:
    """One body-worn device: role, placement and transmit power.

    tx_power_dbm may be -inf to mute a transmitter (a muted interferer is
    indistinguishable from an absent one); NaN and +inf are rejected.
    """

    role: Role
    location: BodyLocation
    tx_power_dbm: float = 0.0

    def __post_init__(self):
        p = self.tx_power_dbm
        if math.isnan(p) or p == math.inf:
            raise ValueError(f"tx_power_dbm must be a real power or -inf, got {p}")


@dataclass(frozen=True)
class WbanConfig:
    """Star network on one subject: hub, two relays, one to three sensors.

    The hub and the relays occupy three distinct torso locations drawn
    from chest, left hip and right hip; sensors sit at other, mutually
    distinct body locations.
    """

    subject: int
    hub: NodeSpec
    relays: tuple[NodeSpec, NodeSpec]
    sensors: tuple[NodeSpec, ...]

    def __post_init__(self):
        if self.hub.role != Role.HUB:
            raise ValueError("hub node must have role HUB")
        if len(self.relays) != 2 or any(r.role != Role.RELAY for r in self.relays):
            raise ValueError("exactly two relay nodes with role RELAY are required")
        if not 1 <= len(self.sensors) <= 3 or any(s.role != Role.SENSOR for s in self.sensors):
            raise ValueError("one to three sensor nodes with role SENSOR are required")
        coord_locs = {self.hub.location, self.relays[0].location, self.relays[1].location}
        if len(coord_locs) != 3 or not coord_locs <= COORDINATOR_LOCATIONS:
            raise ValueError("hub and relays must occupy three distinct locations "
                             "among chest, left hip and right hip")
        sensor_locs = [s.location for s in self.sensors]
        if len(set(sensor_locs)) != len(sensor_locs):
            raise ValueError("sensor locations must be distinct")
        if set(sensor_locs) & coord_locs:
            raise ValueError("sensor locations must differ from hub and relay locations")

    def nodes(self) -> tuple[NodeSpec, ...]:
        return (self.hub, *self.relays, *self.sensors)


@dataclass(frozen=True)
class MacConfig:
    """Slotted medium access shared by all coexisting networks.

    Each network transmits for one slot of slot_len_ms per cycle and is
    idle for the remaining (n_coexisting - 1) slots.
    """

    n_coexisting: int = 2
    slot_len_ms: float = 60.0
    beacon_frac: float = 0.1

    def __post_init__(self):
        if not (isinstance(self.n_coexisting, int) and self.n_coexisting >= 1):
            raise ValueError(f"n_coexisting must be an integer >= 1, got {self.n_coexisting}")
        if not (math.isfinite(self.slot_len_ms) and self.slot_len_ms > 0):
            raise ValueError(f"slot_len_ms must be positive, got {self.slot_len_ms}")
        if not 0 <= self.beacon_frac < 1:
            raise ValueError(f"beacon_frac must lie in [0, 1), got {self.beacon_frac}")

    @property
    def t_idle_ms(self) -> float:
        return (self.n_coexisting - 1) * self.slot_len_ms

    @property
    def cycle_ms(self) -> float:
        return self.n_coexisting * self.slot_len_ms


@dataclass(frozen=True)
class Interval:
    """Circular interval [start, start + dur) on the cycle."""

    start_ms: float
    dur_ms: float


@dataclass(frozen=True)
class ScheduledTx:
    """One transmission sub-interval of a superframe."""

    kind: str  # "beacon" | "broadcast" | "forward"
    node: NodeSpec
    interval: Interval
    sensor_index: int | None = None


@dataclass(frozen=True)
class SuperframeLayout:
    """Sub-interval layout of one superframe, relative to its offset."""

    beacon: tuple[float, float]
    broadcast: tuple[tuple[float, float], ...]  # per sensor: (rel start, dur)
    forward: tuple[tuple[float, float], ...]
    transmissions: tuple[tuple[float, float, NodeSpec], ...]


@dataclass(frozen=True)
class SlotSchedule:
    """Concrete superframe of one network at a drawn offset."""

    subject: int
    superframe: int
    offset_ms: float
    cycle_ms: float
    entries: tuple[ScheduledTx, ...]

    def _find(self, kind: str, sensor_index: int) -> Interval:
        for entry in self.entries:
            if entry.kind == kind and entry.sensor_index == sensor_index:
                return entry.interval
        raise ValueError(f"schedule has no {kind} interval for sensor {sensor_index}")

    def broadcast_interval(self, sensor_index: int) -> Interval:
        return self._find("broadcast", sensor_index)

    def forward_interval(self, sensor_index: int) -> Interval:
        return self._find("forward", sensor_index)


def superframe_layout(wban: WbanConfig, mac: MacConfig) -> SuperframeLayout:
    """Relative sub-interval layout: beacon first, then per-sensor slots.

    The beacon takes beacon_frac of the slot; the remainder is split
    evenly over the sensors, and each sensor slot splits 50/50 into the
    sensor's broadcast and the relay forward sub-interval. Forward
    sub-intervals alternate between the two relays for transmit power
    accounting (which relay actually forwards is decided per packet).
    """
    beacon_dur = mac.beacon_frac * mac.slot_len_ms
    sensor_span = mac.slot_len_ms - beacon_dur
    slot = sensor_span / len(wban.sensors)
    if slot <= 0:
        raise ValueError(f"sensors exceed the slot budget: {len(wban.sensors)} sensors "
                         f"in {sensor_span} ms of sensor time")
    half = slot / 2.0
    broadcast, forward, txs = [], [], [(0.0, beacon_dur, wban.hub)]
    for i, sensor in enumerate(wban.sensors):
        b_rel = beacon_dur + i * slot
        f_rel = b_rel + half
        broadcast.append((b_rel, half))
        forward.append((f_rel, half))
        txs.append((b_rel, half, sensor))
        txs.append((f_rel, half, wban.relays[i % len(wban.relays)]))
    return SuperframeLayout((0.0, beacon_dur), tuple(broadcast), tuple(forward), tuple(txs))


def draw_offset(rng: np.random.Generator, mac: MacConfig) -> float:
    """Draw one superframe start offset, uniform over the whole cycle."""
    return float(rng.uniform(0.0, mac.cycle_ms))


def build_schedule(wban: WbanConfig, mac: MacConfig, offset_ms: float,
                   superframe: int = 0) -> SlotSchedule:
    """Place a network's superframe at the given offset, wrapping modulo the cycle."""
    cycle = mac.cycle_ms
    if not 0 <= offset_ms < cycle:
        raise ValueError(f"offset {offset_ms} ms outside [0, {cycle}) ms")
    layout = superframe_layout(wban, mac)
    entries = [ScheduledTx("beacon", wban.hub,
                           Interval(offset_ms % cycle, layout.beacon[1]))]
    for i in range(len(wban.sensors)):
        b_rel, b_dur = layout.broadcast[i]
        f_rel, f_dur = layout.forward[i]
        entries.append(ScheduledTx("broadcast", wban.sensors[i],
                                   Interval((offset_ms + b_rel) % cycle, b_dur), i))
        entries.append(ScheduledTx("forward", wban.relays[i % len(wban.relays)],
                                   Interval((offset_ms + f_rel) % cycle, f_dur), i))
    return SlotSchedule(wban.subject, superframe, offset_ms, cycle, tuple(entries))


def overlap_lengths(delta, dur_a, dur_b, cycle_ms):
    """Circular overlap length of arcs [0, dur_a) and [delta, delta + dur_b).

    delta must already be reduced modulo the cycle; accepts scalars or
    numpy arrays for delta.
    """
    end_b = delta + dur_b
    direct = np.maximum(0.0, np.minimum(np.minimum(end_b, cycle_ms), dur_a) - delta)
    wrapped = np.maximum(0.0, np.minimum(dur_a, np.maximum(end_b - cycle_ms, 0.0)))
    return direct + wrapped


def overlap_fraction(a: Interval, b: Interval, cycle_ms: float) -> float:
    """Fraction of interval a covered by interval b on the circular cycle."""
    if a.dur_ms <= 0:
        return 0.0
    delta = (b.start_ms - a.start_ms) % cycle_ms
    return float(overlap_lengths(delta, a.dur_ms, b.dur_ms, cycle_ms)) / a.dur_ms


class Interferer(NamedTuple):
    subject: int
    node: NodeSpec
    fraction: float


def active_interferers(victim_interval: Interval, others: Iterable[SlotSchedule],
                       cycle_ms: float) -> list[Interferer]:
    """All foreign transmissions overlapping a receive interval.

    Returns one entry per overlapping foreign sub-interval with the
    fraction of the victim interval it covers; a transmitter active for
    several overlapping sub-intervals appears once per sub-interval.
    """
    hits = []
    for schedule in others:
        for entry in schedule.entries:
            fraction = overlap_fraction(victim_interval, entry.interval, cycle_ms)
            if fraction > 0:
                hits.append(Interferer(schedule.subject, entry.node, fraction))
    return hits
