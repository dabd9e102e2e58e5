"""Emulated on-node I2C-style bus.

The bus master polls sensor units and drives actuator units; units announce
themselves by broadcasting their ID when they are plugged in or pulled out.
Transfers are modelled as instantaneous.
"""

from __future__ import annotations

import enum
from collections import deque
from typing import NamedTuple, Sequence

from .errors import AlreadyPresent, NotAnActuator, NotASensor, NotPresent
from .registry import TransducerKind, kind_for_id, spec_for_kind


class BusEventKind(enum.Enum):
    ATTACHED = "attached"
    DETACHED = "detached"


class BusEvent(NamedTuple):
    kind: BusEventKind
    id: int
    time: int


class RawSample(NamedTuple):
    id: int
    time: int
    values: tuple[int, ...]


class Ack(NamedTuple):
    id: int
    active: bool
    until: int | None


class BusState:
    def __init__(self) -> None:
        self.present: set[int] = set()
        self.pending_events: deque[BusEvent] = deque()
        # actuator id -> time its current activation ends
        self.active_until: dict[int, int] = {}

    def drain(self) -> list[BusEvent]:
        """Hand pending broadcasts to the monitor.

        Broadcasts sharing a timestamp come out lowest ID first; events of one
        ID keep their arrival order.
        """
        events = sorted(self.pending_events, key=lambda ev: (ev.time, ev.id))
        self.pending_events.clear()
        return events


def attach(bus: BusState, tx_id: int, time: int) -> BusEvent:
    kind_for_id(tx_id)
    if tx_id in bus.present:
        raise AlreadyPresent(f"transducer {tx_id} is already on the bus")
    bus.present.add(tx_id)
    ev = BusEvent(BusEventKind.ATTACHED, tx_id, time)
    bus.pending_events.append(ev)
    return ev


def detach(bus: BusState, tx_id: int, time: int) -> BusEvent:
    if tx_id not in bus.present:
        raise NotPresent(f"transducer {tx_id} is not on the bus")
    bus.present.discard(tx_id)
    bus.active_until.pop(tx_id, None)
    ev = BusEvent(BusEventKind.DETACHED, tx_id, time)
    bus.pending_events.append(ev)
    return ev


def poll(bus: BusState, tx_id: int, time: int, env_value: Sequence[int]) -> RawSample:
    """Read one sample; the ADC saturates at the ends of the kind's value range."""
    if tx_id not in bus.present:
        raise NotPresent(f"transducer {tx_id} is not on the bus")
    spec = spec_for_kind(kind_for_id(tx_id))
    if spec.is_actuator:
        raise NotASensor(f"transducer {tx_id} is an actuator")
    if len(env_value) != spec.axes:
        raise ValueError(f"transducer {tx_id} expects {spec.axes} values, got {len(env_value)}")
    lo, hi = spec.value_range
    return RawSample(tx_id, time, tuple(lo if v < lo else hi if v > hi else v for v in env_value))


def command(bus: BusState, tx_id: int, activate: bool, duration_ms: int, time: int = 0) -> Ack:
    if tx_id not in bus.present:
        raise NotPresent(f"transducer {tx_id} is not on the bus")
    if kind_for_id(tx_id) is not TransducerKind.VIBRO_ACTUATOR:
        raise NotAnActuator(f"transducer {tx_id} is not an actuator")
    if activate:
        if duration_ms <= 0:
            raise ValueError("activation needs a positive duration")
        until = time + duration_ms
        bus.active_until[tx_id] = until
        return Ack(tx_id, True, until)
    bus.active_until.pop(tx_id, None)
    return Ack(tx_id, False, None)


def is_active(bus: BusState, tx_id: int, time: int) -> bool:
    until = bus.active_until.get(tx_id)
    return until is not None and time < until
