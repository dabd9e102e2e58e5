"""The wireless transducer node.

One node hosts the monitoring module (turns bus broadcasts into
connectivity changes), the data collection module (polls running sensors
into the current reporting window and forwards actuator commands) and the
interface module (hands encoded messages to the radio). The node itself
never schedules anything; the network driving it decides when ticks,
window ends and deliveries happen.
"""

from __future__ import annotations

import enum
from bisect import bisect_right
from collections import Counter
from operator import itemgetter
from typing import Callable, NamedTuple

import numpy as np

from . import bus as busmod
from .bus import BusEvent, BusEventKind, BusState, RawSample
from .energy import EnergyMeter, ScaledCosts
from .errors import WrongNode
from .protocol import (
    INTERFACE_ZIGBEE, RUNNING, STOPPED, ControlMessage, LayoutEntry, MeasurementMessage,
    encode_measurement,
)
from .registry import TransducerKind, kind_for_id, spec_for_kind

WINDOW_MS = 1000
READ_AHEAD_MS = 60_000

_first = itemgetter(0)


class Status(enum.Enum):
    RUNNING = RUNNING
    STOPPED = STOPPED


class ConnectivityEntry(NamedTuple):
    kind: TransducerKind
    status: Status


def sample_offsets(kind: TransducerKind) -> tuple[int, ...]:
    """Millisecond offsets within each second at which a sensor kind samples.

    An ``r`` Hz sensor samples at ``round(k * 1000 / r)`` for ``k < r``;
    30 Hz therefore lands on 0, 33, 67, 100, ...
    """
    spec = spec_for_kind(kind)
    if spec.is_actuator:
        return ()
    rate = spec.sampling_rate_hz
    if rate.denominator != 1 or not 0 < rate <= 1000:
        raise ValueError(f"unsupported sampling rate {rate} Hz")
    r = int(rate)
    return tuple(sorted({(2000 * k + r) // (2 * r) for k in range(r)}))


class ControlOutcome(NamedTuple):
    issued: tuple[busmod.Ack, ...]
    skipped: tuple[int, ...]


Sampler = Callable[[int], tuple]
Sender = Callable[["Node", bytes, int], None]


class Node:
    def __init__(self, node_id: int, costs: ScaledCosts, samplers: dict[int, Sampler] | None = None,
                 sender: Sender | None = None, reports: bool = True, group: int | None = None):
        self.node_id = node_id
        self.group = node_id if group is None else group
        self.costs = costs
        self.samplers = dict(samplers or {})
        self.sender = sender
        self.reports = reports
        self.interface_kind = INTERFACE_ZIGBEE
        self.bus = BusState()
        self.connectivity: dict[int, ConnectivityEntry] = {}
        self.staged: list[RawSample] = []
        self.meter = EnergyMeter()
        self.samples_collected = 0
        self.samples_by_tx: Counter[int] = Counter()
        self.bytes_received = 0
        self.frames_sent = 0
        self.wire_bytes_sent = 0
        self.wire_bytes_received = 0
        self.samples_emitted = 0
        # staged samples thrown away because their sensor was pulled mid-window
        self.samples_dropped = 0
        self.messages_sent = 0
        self.bytes_sent = 0
        self._baseline_ms = 0
        self._act_started: dict[int, int] = {}
        # offset in second -> [(tx id, sampler, lo, hi, sensing pJ)]
        self._plan: dict[int, list[tuple]] = {}
        self._batched: dict[int, tuple] = {}
        self._due: dict[int, tuple] = {}
        self._offsets: list[int] = []
        self._collected_to = 0
        self._drop_read_ahead()
        self._layout: tuple[LayoutEntry, ...] | None = None

    # -- monitoring module ----------------------------------------------------

    def handle_bus_event(self, ev: BusEvent) -> dict[int, ConnectivityEntry]:
        kind = kind_for_id(ev.id)
        status = Status.RUNNING if ev.kind is BusEventKind.ATTACHED else Status.STOPPED
        self.connectivity[ev.id] = ConnectivityEntry(kind, status)
        self._replan()
        return self.connectivity

    def monitor(self) -> list[BusEvent]:
        """Drain pending hot-plug broadcasts into the connectivity table."""
        events = self.bus.drain()
        for ev in events:
            self.handle_bus_event(ev)
        return events

    def plug(self, tx_id: int, time: int) -> BusEvent:
        self.collect_until(time - 1)
        ev = busmod.attach(self.bus, tx_id, time)
        self.monitor()
        return ev

    def unplug(self, tx_id: int, time: int) -> BusEvent:
        self.collect_until(time - 1)
        if tx_id in self._act_started:
            self._stop_actuator(tx_id, time)
        ev = busmod.detach(self.bus, tx_id, time)
        # only running sensors may have samples in the window being built
        kept = [s for s in self.staged if s.id != tx_id]
        self.samples_dropped += len(self.staged) - len(kept)
        self.staged = kept
        self.monitor()
        return ev

    def running(self) -> list[int]:
        return [i for i, e in self.connectivity.items() if e.status is Status.RUNNING]

    def _replan(self) -> None:
        plan: dict[int, list[tuple]] = {}
        batched: dict[int, tuple] = {}
        sense = self.costs.sense_pj
        for tx_id, entry in self.connectivity.items():
            if entry.status is not Status.RUNNING:
                continue
            spec = spec_for_kind(entry.kind)
            if spec.is_actuator:
                continue
            sampler = self.samplers.get(tx_id)
            if sampler is None:
                raise KeyError(f"node {self.node_id}: no environment channel for sensor {tx_id}")
            lo, hi = spec.value_range
            offsets = sample_offsets(entry.kind)
            batch = getattr(sampler, "batch", None)
            if batch is not None and len(offsets) > 1:
                # fast sensors are sampled a window at a time; None in the
                # plan says "take the next precomputed row"
                batched[tx_id] = (batch, np.array(offsets, dtype=np.int64), lo, hi)
                sampler = None
            for off in offsets:
                plan.setdefault(off, []).append((tx_id, sampler, lo, hi, sense[entry.kind]))
        self._batched = batched
        self._plan = plan
        # offset -> (sensor ids due, their summed sensing cost)
        self._due = {off: (tuple(e[0] for e in es), sum(e[4] for e in es)) for off, es in plan.items()}
        self._offsets = sorted(plan)
        self._layout = None
        self._drop_read_ahead()

    def tick_offsets(self) -> list[int]:
        return self._offsets

    # -- data collection module -----------------------------------------------

    def collect(self, tick: int) -> int:
        """Poll every running sensor due at ``tick``; returns samples staged."""
        due = self._plan.get(tick % WINDOW_MS)
        if not due:
            return 0
        staged = self.staged
        for tx_id, sampler, lo, hi, pj in due:
            values = sampler(tick) if sampler is not None else self._sample_row(tx_id, tick)
            if min(values) < lo or max(values) > hi:
                values = tuple(lo if v < lo else hi if v > hi else v for v in values)
            staged.append(RawSample(tx_id, tick, values))
        return self._account([tick % WINDOW_MS])

    def _account(self, hits: list[int]) -> int:
        """Charge sensing and processing for the polled offsets; returns samples taken."""
        due = self._due
        by_tx = self.samples_by_tx
        sense_pj = n = 0
        for off in hits:
            ids, pj = due[off]
            sense_pj += pj
            n += len(ids)
            for tx in ids:
                by_tx[tx] += 1
        meter = self.meter
        meter.sensing += sense_pj
        meter.processing += n * self.costs.sample_cpu_pj
        self.samples_collected += n
        return n

    def collect_until(self, t_end: int) -> int:
        """Run every scheduled poll in ``(last collected, t_end]``.

        Sampling depends only on the tick time, so a node can be driven one
        tick at a time or caught up in bulk; the staged samples are the same
        as long as the catch-up happens before any change to the plan.
        Samples are computed up to ``READ_AHEAD_MS`` early and released (and
        charged) only when their tick is reached; a replan drops them.
        """
        if t_end <= self._collected_to:
            return 0
        if t_end > self._ahead_to:
            self._read_ahead(t_end)
        self._collected_to = t_end
        i = self._hit_pos
        j = bisect_right(self._ahead_t, t_end, i)
        if j == i:
            return 0
        self._hit_pos = j
        cum_n, cum_pj = self._ahead_n, self._ahead_pj
        released = self._ahead[cum_n[i]:cum_n[j]]
        self.staged += released
        self.samples_by_tx.update(map(_first, released))
        n = len(released)
        meter = self.meter
        meter.sensing += cum_pj[j] - cum_pj[i]
        meter.processing += n * self.costs.sample_cpu_pj
        self.samples_collected += n
        return n

    def _drop_read_ahead(self) -> None:
        self._ahead: list[RawSample] = []
        self._ahead_t: list[int] = []
        self._ahead_n: list[int] = [0]
        self._ahead_pj: list[int] = [0]
        self._hit_pos = 0
        self._ahead_to = self._collected_to

    def _read_ahead(self, t_end: int) -> None:
        """Compute every poll in ``(ahead_to, max(t_end, ahead_to + READ_AHEAD_MS)]``."""
        i = self._hit_pos
        if i:
            # forget what has been released already
            s = self._ahead_n[i]
            self._ahead = self._ahead[s:]
            self._ahead_t = self._ahead_t[i:]
            self._ahead_n = [n - s for n in self._ahead_n[i:]]
            p = self._ahead_pj[i]
            self._ahead_pj = [x - p for x in self._ahead_pj[i:]]
            self._hit_pos = 0
        t0 = self._ahead_to
        t1 = max(t_end, t0 + READ_AHEAD_MS)
        self._ahead_to = t1
        offsets = self._offsets
        if not offsets:
            return
        plan, due = self._plan, self._due
        feeds = {tx: self._rows(tx, t0, t1).__next__ for tx in self._batched}
        buf = self._ahead
        append = buf.append
        hit_t, cum_n, cum_pj = self._ahead_t, self._ahead_n, self._ahead_pj
        pj = cum_pj[-1]
        new = tuple.__new__
        base = t0 - t0 % WINDOW_MS
        done = False
        while not done and base <= t1:
            for off in offsets:
                t = base + off
                if t <= t0:
                    continue
                if t > t1:
                    done = True
                    break
                for tx_id, sampler, lo, hi, _ in plan[off]:
                    if sampler is None:
                        values = feeds[tx_id]()
                    elif min(values := sampler(t)) < lo or max(values) > hi:
                        values = tuple(lo if v < lo else hi if v > hi else v for v in values)
                    append(new(RawSample, (tx_id, t, values)))
                pj += due[off][1]
                hit_t.append(t)
                cum_n.append(len(buf))
                cum_pj.append(pj)
            base += WINDOW_MS

    def _rows(self, tx_id: int, t0: int, t_end: int):
        """Clamped sample tuples for a batched sensor's polls in (t0, t_end]."""
        batch, offsets, lo, hi = self._batched[tx_id]
        seconds = np.arange(t0 - t0 % WINDOW_MS, t_end + 1, WINDOW_MS, dtype=np.int64)
        times = (seconds[:, None] + offsets[None, :]).ravel()
        times = times[(times > t0) & (times <= t_end)]
        return map(tuple, np.clip(batch(times), lo, hi).tolist())

    def _sample_row(self, tx_id: int, tick: int) -> tuple:
        return next(self._rows(tx_id, tick - 1, tick))

    def layout(self) -> tuple[LayoutEntry, ...]:
        if self._layout is None:
            self._layout = tuple(LayoutEntry(i, e.kind.value, e.status.value)
                                 for i, e in self.connectivity.items())
        return self._layout

    def advance_baseline(self, now: int) -> None:
        """Charge idle MCU power up to ``now``."""
        if now > self._baseline_ms:
            self.meter.processing += (now - self._baseline_ms) * self.costs.sleep_pj_per_ms
            self._baseline_ms = now

    # -- interface module -----------------------------------------------------

    def emit_measurement(self, window_end: int) -> MeasurementMessage:
        msg = MeasurementMessage(self.node_id, window_end, self.layout(), tuple(self.staged))
        payload = encode_measurement(msg, check=False)
        self.samples_emitted += len(self.staged)
        self.staged = []
        self.advance_baseline(window_end)
        self.meter.processing += len(payload) * self.costs.byte_cpu_pj
        self.messages_sent += 1
        self.bytes_sent += len(payload)
        if self.sender is not None:
            self.sender(self, payload, window_end)
        return msg

    def receive(self, payload: bytes, rx_pj: int) -> None:
        """Charge the radio and MCU for an incoming frame set."""
        self.meter.communicating += rx_pj
        self.meter.processing += len(payload) * self.costs.byte_cpu_pj
        self.bytes_received += len(payload)

    def handle_control(self, msg: ControlMessage, time: int = 0) -> ControlOutcome:
        if msg.node_id != self.node_id:
            raise WrongNode(f"control for node {msg.node_id} delivered to node {self.node_id}")
        issued, skipped = [], []
        for cmd in msg.commands:
            entry = self.connectivity.get(cmd.actuator_id)
            if (entry is None or entry.status is not Status.RUNNING
                    or entry.kind is not TransducerKind.VIBRO_ACTUATOR):
                skipped.append(cmd.actuator_id)
                continue
            if cmd.actuator_id in self._act_started:
                self._stop_actuator(cmd.actuator_id, time)
            ack = busmod.command(self.bus, cmd.actuator_id, cmd.activate, cmd.duration_ms, time)
            if ack.active:
                self._act_started[cmd.actuator_id] = time
            issued.append(ack)
        return ControlOutcome(tuple(issued), tuple(skipped))

    def actuator_expired(self, tx_id: int, time: int) -> bool:
        """Handle an activation running out; stale expiries are ignored."""
        if self.bus.active_until.get(tx_id) != time:
            return False
        self._stop_actuator(tx_id, time)
        del self.bus.active_until[tx_id]
        return True

    def _stop_actuator(self, tx_id: int, time: int) -> None:
        start = self._act_started.pop(tx_id, None)
        if start is None:
            return
        until = self.bus.active_until.get(tx_id, time)
        self.meter.actuation += (min(time, until) - start) * self.costs.actuator_pj_per_ms
