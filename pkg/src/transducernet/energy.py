"""Per-node energy metering and the clustered-vs-traditional comparison.

Every node carries an :class:`EnergyMeter` with four exact integer
accumulators (picojoules): sensing, processing, communicating and
actuation. Actuation is metered but left out of the comparison, because an
actuator firing a few seconds per half hour is the same cost in either
topology.
"""

from __future__ import annotations

import csv
import io
import json
from importlib import resources
from dataclasses import dataclass, field, fields, replace
from fractions import Fraction
from typing import Iterable, Mapping

from .errors import MismatchedHorizon, MismatchedTransducers, NegativeDebit
from .radio import PJ_PER_UJ, RadioParams, to_pj
from .registry import TransducerKind

PHASES = ("sensing", "processing", "communicating", "actuation")
COMPARED_PHASES = ("sensing", "processing", "communicating")


class EnergyMeter:
    __slots__ = ("sensing", "processing", "communicating", "actuation")

    def __init__(self) -> None:
        self.sensing = 0
        self.processing = 0
        self.communicating = 0
        self.actuation = 0

    def add_pj(self, phase: str, pj: int) -> None:
        if pj < 0:
            raise NegativeDebit(f"cannot debit {pj} pJ")
        setattr(self, phase, getattr(self, phase) + pj)

    @property
    def total_pj(self) -> int:
        return self.sensing + self.processing + self.communicating + self.actuation

    def phases_pj(self) -> dict[str, int]:
        return {p: getattr(self, p) for p in PHASES}


def debit(meter: EnergyMeter, phase: str, microjoules) -> None:
    """Add an exact amount of energy (µJ, int or Fraction) to one phase."""
    if phase not in PHASES:
        raise ValueError(f"unknown phase {phase!r}")
    if microjoules < 0:
        raise NegativeDebit(f"cannot debit {microjoules} µJ")
    meter.add_pj(phase, to_pj(microjoules))


def pj_to_uj(pj: int) -> Fraction:
    return Fraction(pj, PJ_PER_UJ)


@dataclass(frozen=True)
class EnergyParams:
    """Cost model for one node.

    ``active_us_per_sample`` and ``active_us_per_byte`` give how long the MCU
    runs at ``mcu_active_uw`` to handle a sample or to encode/decode one
    message byte; outside that it idles at ``mcu_sleep_uw``.
    """

    sense_uj_per_sample: Mapping[TransducerKind, Fraction]
    mcu_active_uw: Fraction
    mcu_sleep_uw: Fraction
    active_us_per_sample: Fraction
    active_us_per_byte: Fraction
    actuator_mw: Fraction
    radio: RadioParams

    def __post_init__(self):
        for f in fields(self):
            if f.name in ("sense_uj_per_sample", "radio"):
                continue
            v = Fraction(getattr(self, f.name))
            if v < 0:
                raise ValueError(f"{f.name} must be non-negative")
            object.__setattr__(self, f.name, v)
        sense = {TransducerKind(k) if not isinstance(k, TransducerKind) else k: Fraction(v)
                 for k, v in self.sense_uj_per_sample.items()}
        if any(v < 0 for v in sense.values()):
            raise ValueError("sensing costs must be non-negative")
        object.__setattr__(self, "sense_uj_per_sample", sense)
        self.costs()  # rejects parameters that are not picojoule-exact

    def costs(self) -> "ScaledCosts":
        return ScaledCosts.from_params(self)

    def with_(self, **changes) -> "EnergyParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "sense_uj_per_sample": {k.token: str(v) for k, v in self.sense_uj_per_sample.items()},
            "mcu_active_uw": str(self.mcu_active_uw),
            "mcu_sleep_uw": str(self.mcu_sleep_uw),
            "active_us_per_sample": str(self.active_us_per_sample),
            "active_us_per_byte": str(self.active_us_per_byte),
            "actuator_mw": str(self.actuator_mw),
            "radio": self.radio.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EnergyParams":
        d = dict(data)
        d["sense_uj_per_sample"] = {
            TransducerKind.from_token(k): Fraction(v) for k, v in d["sense_uj_per_sample"].items()
        }
        d["radio"] = RadioParams.from_dict(d["radio"])
        for k in ("mcu_active_uw", "mcu_sleep_uw", "active_us_per_sample",
                  "active_us_per_byte", "actuator_mw"):
            d[k] = Fraction(d[k])
        return cls(**d)


def _exact(value: Fraction, what: str) -> int:
    if value.denominator != 1:
        raise ValueError(f"{what} = {value} pJ is not an integer number of picojoules")
    return int(value)


@dataclass(frozen=True)
class ScaledCosts:
    """Integer picojoule costs derived once from :class:`EnergyParams`."""

    sense_pj: dict[TransducerKind, int]
    sample_cpu_pj: int      # MCU active time per handled sample
    byte_cpu_pj: int        # MCU active time per encoded/decoded byte
    sleep_pj_per_ms: int
    actuator_pj_per_ms: int

    @classmethod
    def from_params(cls, p: EnergyParams) -> "ScaledCosts":
        sense = {k: to_pj(v) for k, v in p.sense_uj_per_sample.items()}
        for k in TransducerKind:
            sense.setdefault(k, 0)
        return cls(
            sense_pj=sense,
            # µW x µs = pJ
            sample_cpu_pj=_exact(p.mcu_active_uw * p.active_us_per_sample, "sample processing"),
            byte_cpu_pj=_exact(p.mcu_active_uw * p.active_us_per_byte, "byte processing"),
            # µW x ms = nJ
            sleep_pj_per_ms=_exact(p.mcu_sleep_uw * 1000, "sleep power"),
            # mW x ms = µJ
            actuator_pj_per_ms=_exact(p.actuator_mw * PJ_PER_UJ, "actuator power"),
        )


# -- profiles -----------------------------------------------------------------

# 3 J per KiB at 100 m: a documentation value for long-range radios, far above
# what a 1 mW 802.15.4 transceiver spends.
POTTIE_UJ_PER_BYTE = Fraction(3_000_000, 1024)

_SENSE_DEFAULT = {
    TransducerKind.PRESSURE: Fraction(5),
    TransducerKind.LIGHT: Fraction(5),
    TransducerKind.TEMPERATURE: Fraction(5),
    TransducerKind.CO_GAS: Fraction(5),
    TransducerKind.ACCELEROMETER: Fraction(2),
    TransducerKind.FLEX: Fraction(5),
    TransducerKind.VIBRO_ACTUATOR: Fraction(0),
}


def pottie_reference() -> EnergyParams:
    return EnergyParams(
        sense_uj_per_sample=_SENSE_DEFAULT,
        mcu_active_uw=Fraction(10_000),
        mcu_sleep_uw=Fraction(20),
        active_us_per_sample=Fraction(200),
        active_us_per_byte=Fraction(10),
        actuator_mw=Fraction(200),
        radio=RadioParams(
            overhead_bytes=0,
            max_payload_bytes=1024,
            data_rate_bps=250_000,
            tx_energy_uj_per_byte=POTTIE_UJ_PER_BYTE,
            rx_energy_uj_per_byte=POTTIE_UJ_PER_BYTE,
            wake_energy_uj=Fraction(0),
        ),
    )


def zigbee_default() -> EnergyParams:
    """The profile fitted by :mod:`transducernet.calibration`."""
    doc = json.loads(resources.files(__package__).joinpath("data/zigbee-default.json").read_text())
    return EnergyParams.from_dict(doc["params"])


PROFILES = {
    "pottie-reference": pottie_reference,
    "zigbee-default": zigbee_default,
}


def get_profile(name: str) -> EnergyParams:
    try:
        return PROFILES[name]()
    except KeyError:
        raise ValueError(f"unknown energy profile {name!r}; known: {sorted(PROFILES)}") from None


# -- reports ------------------------------------------------------------------

@dataclass(frozen=True)
class NodeTraffic:
    """What a node did over a run, independent of what it cost."""

    samples_by_kind: Mapping[TransducerKind, int]
    frames_sent: int = 0
    bytes_sent: int = 0
    wire_bytes_sent: int = 0
    bytes_received: int = 0
    wire_bytes_received: int = 0

    @property
    def samples(self) -> int:
        return sum(self.samples_by_kind.values())


def closed_form_pj(traffic: NodeTraffic, params: EnergyParams, horizon_ms: int) -> dict[str, int]:
    """Compared-phase energy of a node straight from its traffic counters.

    Matches the simulated meter exactly, since every debit the simulator
    makes is one of these counters times a fixed unit cost.
    """
    c = params.costs()
    r = params.radio
    return {
        "sensing": sum(n * c.sense_pj[k] for k, n in traffic.samples_by_kind.items()),
        "processing": (traffic.samples * c.sample_cpu_pj
                       + (traffic.bytes_sent + traffic.bytes_received) * c.byte_cpu_pj
                       + horizon_ms * c.sleep_pj_per_ms),
        "communicating": (traffic.frames_sent * r.wake_pj
                          + traffic.wire_bytes_sent * r.tx_pj_per_byte
                          + traffic.wire_bytes_received * r.rx_pj_per_byte),
    }


@dataclass
class NodeEnergy:
    node_id: int
    group: int
    transducers: tuple[int, ...]
    phases_pj: dict[str, int]
    messages: int = 0
    bytes_sent: int = 0
    traffic: NodeTraffic | None = field(default=None, compare=False)

    @property
    def total_pj(self) -> int:
        return sum(self.phases_pj.values())

    @property
    def compared_pj(self) -> int:
        return sum(self.phases_pj[p] for p in COMPARED_PHASES)


@dataclass
class EnergyReport:
    horizon_ms: int
    nodes: list[NodeEnergy] = field(default_factory=list)

    @property
    def network_total_pj(self) -> int:
        return sum(n.total_pj for n in self.nodes)

    @property
    def messages(self) -> int:
        return sum(n.messages for n in self.nodes)

    @property
    def bytes_sent(self) -> int:
        return sum(n.bytes_sent for n in self.nodes)

    def transducer_set(self) -> set[tuple[int, int]]:
        return {(n.group, t) for n in self.nodes for t in n.transducers}

    def groups(self) -> dict[int, list[NodeEnergy]]:
        out: dict[int, list[NodeEnergy]] = {}
        for n in self.nodes:
            out.setdefault(n.group, []).append(n)
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["node_id", "group", "transducers", *[f"{p}_pj" for p in PHASES],
                    "total_pj", "messages", "bytes_sent"])
        for n in self.nodes:
            w.writerow([n.node_id, n.group, " ".join(map(str, n.transducers)),
                        *[n.phases_pj[p] for p in PHASES], n.total_pj, n.messages, n.bytes_sent])
        return buf.getvalue()


@dataclass(frozen=True)
class NodeComparison:
    node_id: int
    transducer_count: int
    proposed_pj: int
    traditional_pj: int
    traditional_nodes: int

    @property
    def ratio(self) -> Fraction:
        return Fraction(self.proposed_pj, self.traditional_pj)


@dataclass(frozen=True)
class ComparisonReport:
    horizon_ms: int
    nodes: tuple[NodeComparison, ...]

    @property
    def proposed_pj(self) -> int:
        return sum(n.proposed_pj for n in self.nodes)

    @property
    def traditional_pj(self) -> int:
        return sum(n.traditional_pj for n in self.nodes)

    @property
    def network_ratio(self) -> Fraction:
        return Fraction(self.proposed_pj, self.traditional_pj)

    def ratio_for(self, node_id: int) -> Fraction:
        for n in self.nodes:
            if n.node_id == node_id:
                return n.ratio
        raise KeyError(node_id)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["node_id", "transducers", "traditional_nodes",
                    "proposed_uj", "traditional_uj", "ratio"])
        for n in self.nodes:
            w.writerow([n.node_id, n.transducer_count, n.traditional_nodes,
                        _uj_text(n.proposed_pj), _uj_text(n.traditional_pj), f"{float(n.ratio):.6f}"])
        w.writerow(["network", sum(n.transducer_count for n in self.nodes),
                    sum(n.traditional_nodes for n in self.nodes),
                    _uj_text(self.proposed_pj), _uj_text(self.traditional_pj),
                    f"{float(self.network_ratio):.6f}"])
        return buf.getvalue()

    def summary(self) -> str:
        hours = self.horizon_ms / 3_600_000
        lines = [f"energy over {hours:g} h (actuation excluded)",
                 f"{'node':>6} {'tx':>3} {'proposed J':>12} {'traditional J':>14} {'ratio':>7}"]
        for n in sorted(self.nodes, key=lambda n: (-n.transducer_count, n.node_id)):
            lines.append(f"{n.node_id:>6} {n.transducer_count:>3} {n.proposed_pj / 1e12:>12.3f} "
                         f"{n.traditional_pj / 1e12:>14.3f} {float(n.ratio):>7.3f}")
        lines.append(f"network ratio proposed/traditional = {float(self.network_ratio):.3f}")
        return "\n".join(lines)


def _uj_text(pj: int) -> str:
    whole, frac = divmod(pj, PJ_PER_UJ)
    return f"{whole}.{frac:06d}"


def compare(proposed: EnergyReport, traditional: EnergyReport) -> ComparisonReport:
    """Per-node and network ratios of clustered to one-transducer-per-node energy.

    Each proposed node is compared against the group of traditional nodes
    that host its transducers. Actuation energy is excluded on both sides.
    """
    if proposed.horizon_ms != traditional.horizon_ms:
        raise MismatchedHorizon(f"{proposed.horizon_ms} ms vs {traditional.horizon_ms} ms")
    if proposed.transducer_set() != traditional.transducer_set():
        raise MismatchedTransducers("the two networks host different transducers")
    groups = traditional.groups()
    rows = []
    for n in sorted(proposed.nodes, key=lambda n: n.node_id):
        trad = groups.get(n.group, [])
        rows.append(NodeComparison(
            node_id=n.node_id,
            transducer_count=len(n.transducers),
            proposed_pj=n.compared_pj,
            traditional_pj=sum(t.compared_pj for t in trad),
            traditional_nodes=len(trad),
        ))
    return ComparisonReport(proposed.horizon_ms, tuple(rows))


# -- the traditional baseline -------------------------------------------------

def traditional_equivalent(scenario):
    """One node per transducer, each with its own MCU and radio.

    Node ``n``'s k-th transducer (initial layout first, then any hot-plugged
    later) becomes node ``100*n + k`` in group ``n``. Sensor nodes keep their
    channel and report every window; actuator-only nodes never transmit and
    only listen for control messages. Hot-plug steps and sit-rule bindings
    are rerouted to the new nodes.
    """
    from .scenario import HotPlug, NodeConfig, SitBinding, validate
    from .registry import spec_for_id

    ids: dict[tuple[int, int], int] = {}
    nodes = []
    for cfg in scenario.nodes:
        order = list(cfg.layout)
        for hp in scenario.hotplug:
            if hp.node_id == cfg.node_id and hp.tx_id not in order:
                order.append(hp.tx_id)
        if len(order) >= 100:
            raise ValueError(f"node {cfg.node_id} hosts too many transducers to split")
        for k, tx in enumerate(order, start=1):
            new_id = 100 * cfg.node_id + k
            ids[(cfg.node_id, tx)] = new_id
            sensor = not spec_for_id(tx).is_actuator
            nodes.append(NodeConfig(
                node_id=new_id,
                layout=(tx,) if tx in cfg.layout else (),
                bindings={tx: cfg.bindings[tx]} if sensor else {},
                name=f"{cfg.name or cfg.node_id}/{tx}",
                group=cfg.group_id,
                reports=sensor,
            ))
    hotplug = tuple(HotPlug(h.time, ids[(h.node_id, h.tx_id)], h.action, h.tx_id)
                    for h in scenario.hotplug)
    rules = tuple(SitBinding(ids[(r.sensor_node, r.sensor_id)], r.sensor_id,
                             ids[(r.actuator_node, r.actuator_id)], r.actuator_id)
                  for r in scenario.sit_rules)
    return validate(scenario.with_(nodes=tuple(nodes), hotplug=hotplug, sit_rules=rules,
                                   name=f"{scenario.name}-traditional"))
