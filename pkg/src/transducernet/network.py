"""A simulated deployment: nodes, the shared radio channel and the server,
driven by the event kernel."""

from __future__ import annotations

from dataclasses import dataclass
from typing import IO

from .energy import EnergyParams, EnergyReport, NodeEnergy, NodeTraffic
from .node import WINDOW_MS, Node
from .protocol import ControlMessage, decode_control, encode_control
from .radio import SERVER, Radio
from .registry import kind_for_id, spec_for_id
from .scenario import Scenario, channel_samplers
from .server import Server, Store
from .simkernel import EventLog, Kernel, SimConfig, Streams, Tag


@dataclass
class RunResult:
    horizon_ms: int
    log: EventLog
    energy: EnergyReport
    store: Store
    samples_collected: int
    samples_emitted: int
    messages: int
    controls: int
    actuations: int
    # collected but discarded when the sensor was unplugged mid-window
    samples_dropped: int = 0


class Network:
    def __init__(self, scenario: Scenario, params: EnergyParams, *, seed: int | None = None,
                 horizon_ms: int | None = None, store: Store | None = None,
                 log: EventLog | None = None, tick_events: bool = False):
        self.scenario = scenario
        self.params = params
        self.seed = scenario.seed if seed is None else seed
        self.horizon_ms = scenario.horizon_ms if horizon_ms is None else horizon_ms
        self.streams = Streams(self.seed)
        self.kernel = Kernel(SimConfig(self.seed, self.horizon_ms), log)
        radio_params = scenario.radio or params.radio
        self.radio = Radio(radio_params, self.streams.rng("radio"))
        self.server = Server(store, scenario.sit_rules)
        self.costs = params.costs()
        # queue every sub-second poll as its own event instead of letting
        # nodes catch up at window ends; slower, same samples
        self.tick_events = tick_events
        self.controls_delivered = 0
        self.actuations = 0
        self._inflight: dict[int, tuple[bytes, int, int]] = {}
        self._pending_controls: dict[int, ControlMessage] = {}
        self._next_delivery = 0
        self._tick_times: dict[int, set[int]] = {}
        # reports still on the air at the horizon: (arrival, sender, delivery id)
        self._late: list[tuple[int, int, int]] = []

        samplers = channel_samplers(scenario, self.seed)
        self.nodes: dict[int, Node] = {}
        for cfg in scenario.nodes:
            node_samplers = {tx: samplers[ch] for tx, ch in cfg.bindings.items()}
            node = Node(cfg.node_id, self.costs, node_samplers, sender=self._send,
                        reports=cfg.reports, group=cfg.group)
            for tx in cfg.layout:
                node.plug(tx, 0)
            self.nodes[cfg.node_id] = node
        self._started = False

    # -- scheduling -------------------------------------------------------

    def start(self) -> None:
        if self._started:
            return
        self._started = True
        k = self.kernel
        for node in self.nodes.values():
            if node.reports:
                self._schedule_second(node, 0)
        for i, hp in enumerate(self.scenario.hotplug):
            if hp.time <= self.horizon_ms:
                k.schedule(hp.time, Tag.HOT_PLUG, (hp.node_id, hp.action, hp.tx_id))

    def _schedule_second(self, node: Node, start: int) -> None:
        """Queue sub-second sensor ticks in (start, start+1000) and the window end."""
        end = start + WINDOW_MS
        if end > self.horizon_ms:
            return
        k = self.kernel
        if self.tick_events:
            times = set()
            for off in node.tick_offsets():
                if off:
                    k.schedule(start + off, Tag.SENSOR_TICK, (node.node_id,))
                    times.add(start + off)
            self._tick_times[node.node_id] = times
        k.schedule(end, Tag.WINDOW_END, (node.node_id,))

    def _send(self, node: Node, payload: bytes, now: int) -> None:
        tx = self.radio.send(payload, now)
        node.meter.communicating += tx.tx_pj
        node.frames_sent += tx.frames
        node.wire_bytes_sent += tx.wire_bytes
        if tx.delivered:
            did = self._next_delivery
            self._next_delivery += 1
            self._inflight[did] = (payload, tx.rx_pj, tx.wire_bytes)
            if tx.delivery_time <= self.horizon_ms:
                self.kernel.schedule(tx.delivery_time, Tag.FRAME_DELIVERY, (node.node_id, SERVER, did))
            else:
                self._late.append((tx.delivery_time, node.node_id, did))

    # -- dispatch ---------------------------------------------------------

    @property
    def handlers(self):
        h = [None] * len(Tag)
        h[Tag.SENSOR_TICK] = self._on_tick
        h[Tag.WINDOW_END] = self._on_window_end
        h[Tag.HOT_PLUG] = lambda time, p: self._hotplug(time, *p)
        h[Tag.FRAME_DELIVERY] = lambda time, p: self._deliver(time, *p)
        h[Tag.ACTUATOR_EXPIRY] = lambda time, p: self.nodes[p[0]].actuator_expired(p[1], time)
        h[Tag.RULE_FIRE] = lambda time, p: self._fire_rule(time, *p)
        return h

    def dispatch(self, time: int, tag: Tag, payload: tuple) -> None:
        self.handlers[tag](time, payload)

    def _on_tick(self, time: int, payload: tuple) -> None:
        self.nodes[payload[0]].collect_until(time)

    def _on_window_end(self, time: int, payload: tuple) -> None:
        node = self.nodes[payload[0]]
        node.collect_until(time)
        node.emit_measurement(time)
        self._schedule_second(node, time)

    def _deliver(self, time: int, src: int, dst: int, did: int) -> None:
        payload, rx_pj, wire = self._inflight.pop(did)
        if dst == SERVER:
            for ctrl in self.server.receive(payload, time):
                cid = self._next_delivery
                self._next_delivery += 1
                self._pending_controls[cid] = ctrl
                self.kernel.schedule(time, Tag.RULE_FIRE, (ctrl.node_id, cid))
            return
        node = self.nodes[dst]
        node.receive(payload, rx_pj)
        node.wire_bytes_received += wire
        ctrl = decode_control(payload)
        outcome = node.handle_control(ctrl, time)
        self.controls_delivered += 1
        for ack in outcome.issued:
            if ack.active:
                self.actuations += 1
                if ack.until <= self.horizon_ms:
                    self.kernel.schedule(ack.until, Tag.ACTUATOR_EXPIRY, (dst, ack.id))

    def _fire_rule(self, time: int, node_id: int, cid: int) -> None:
        ctrl = self._pending_controls.pop(cid)
        payload = encode_control(ctrl)
        tx = self.radio.send(payload, time)
        if not tx.delivered:
            return
        did = self._next_delivery
        self._next_delivery += 1
        self._inflight[did] = (payload, tx.rx_pj, tx.wire_bytes)
        if tx.delivery_time <= self.horizon_ms:
            self.kernel.schedule(tx.delivery_time, Tag.FRAME_DELIVERY, (SERVER, node_id, did))

    def _hotplug(self, time: int, node_id: int, action: str, tx_id: int) -> None:
        node = self.nodes[node_id]
        if action == "attach":
            node.plug(tx_id, time)
            if self.tick_events and node.reports and not spec_for_id(tx_id).is_actuator:
                # polls the new sensor needs for the rest of this second, including now
                second = time - time % WINDOW_MS
                have = self._tick_times.setdefault(node_id, set())
                for off in node.tick_offsets():
                    t = second + off
                    if off and t >= time and t not in have and second + WINDOW_MS <= self.horizon_ms:
                        self.kernel.schedule(t, Tag.SENSOR_TICK, (node_id,))
                        have.add(t)
        else:
            node.unplug(tx_id, time)

    # -- running ----------------------------------------------------------

    def run(self, t_end: int | None = None) -> RunResult:
        self.start()
        t_end = self.horizon_ms if t_end is None else t_end
        self.kernel.run_until(self, t_end)
        if t_end >= self.horizon_ms:
            self._drain_late()
        for node in self.nodes.values():
            node.advance_baseline(t_end)
            for tx in list(node._act_started):
                node._stop_actuator(tx, t_end)
        self.server.store.flush()
        return RunResult(
            horizon_ms=t_end,
            log=self.kernel.log,
            energy=self.energy_report(t_end),
            store=self.server.store,
            samples_collected=sum(n.samples_collected for n in self.nodes.values()),
            samples_emitted=sum(n.samples_emitted for n in self.nodes.values()),
            samples_dropped=sum(n.samples_dropped for n in self.nodes.values()),
            messages=sum(n.messages_sent for n in self.nodes.values()),
            controls=self.controls_delivered,
            actuations=self.actuations,
        )

    def _drain_late(self) -> None:
        """Hand the server every report sent by the horizon that lands after it.

        The last window closes exactly at the horizon, so its reports are
        always in flight then. They are stored with their true arrival time;
        controls they would trigger fall past the horizon and are dropped.
        """
        late, self._late = sorted(self._late), []
        for arrival, _, did in late:
            payload, _, _ = self._inflight.pop(did)
            self.server.receive(payload, arrival)

    def energy_report(self, horizon_ms: int) -> EnergyReport:
        return EnergyReport(horizon_ms, [
            NodeEnergy(n.node_id, n.group, tuple(n.connectivity), n.meter.phases_pj(),
                       n.messages_sent, n.bytes_sent, _traffic(n))
            for n in self.nodes.values()
        ])


def _traffic(node: Node) -> NodeTraffic:
    by_kind: dict = {}
    for tx, count in node.samples_by_tx.items():
        kind = kind_for_id(tx)
        by_kind[kind] = by_kind.get(kind, 0) + count
    return NodeTraffic(by_kind, node.frames_sent, node.bytes_sent, node.wire_bytes_sent,
                       node.bytes_received, node.wire_bytes_received)


def simulate(scenario: Scenario, params: EnergyParams, *, seed: int | None = None,
             horizon_ms: int | None = None, store: Store | None = None,
             event_sink: IO[str] | None = None, keep_events: bool = False,
             tick_events: bool = False) -> RunResult:
    log = EventLog(keep=keep_events, sink=event_sink)
    return Network(scenario, params, seed=seed, horizon_ms=horizon_ms, store=store, log=log,
                   tick_events=tick_events).run()
