"""Physical environment signals and node deployments.

A :class:`Scenario` lists the nodes (with the transducers plugged into each
and the environment channel every sensor reads), a hot-plug script, the
server's sit-detection bindings, and the run horizon and seed. Channel
generators are pure functions of ``(time, seed)``.

Scenario files are JSON documents with ``"version": 1``.
"""

from __future__ import annotations

import json
import math
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .errors import DuplicateId, ParseError, UnassignedId, UnknownChannel, ValidationError
from .radio import RadioParams
from .registry import TransducerKind, kind_for_id, spec_for_id
from .simkernel import DAY_MS, derive_seed

SCHEMA_VERSION = 1
HOUR_MS = 3_600_000
MASK64 = (1 << 64) - 1


# -- generators ---------------------------------------------------------------

@dataclass(frozen=True)
class Constant:
    value: int
    axes: int = 1


@dataclass(frozen=True)
class Diurnal:
    """Cosine day cycle peaking at ``peak_hour``."""

    base: int
    amplitude: int
    peak_hour: float


@dataclass(frozen=True)
class Windows:
    """``high`` inside any [start, end) hour-of-day interval, ``low`` elsewhere."""

    low: int
    high: int
    intervals: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class Occupancy:
    """Pressure while someone is present, exactly zero otherwise."""

    intervals: tuple[tuple[float, float], ...]
    pressure_level: int
    jitter: int = 0


@dataclass(frozen=True)
class Burst:
    """Resting vector per axis, displaced by ``magnitude`` for
    ``duration_ms`` after each event time (ms of day)."""

    event_times: tuple[int, ...]
    magnitude: int
    rest: tuple[int, ...]
    duration_ms: int = 2000

    @property
    def axes(self) -> int:
        return len(self.rest)


@dataclass(frozen=True)
class Noise:
    """Adds seeded uniform jitter in [-amplitude, amplitude] to ``base``."""

    amplitude: int
    base: "Generator"


Generator = Union[Constant, Diurnal, Windows, Occupancy, Burst, Noise]


def generator_axes(gen: Generator) -> int:
    if isinstance(gen, Noise):
        return generator_axes(gen.base)
    if isinstance(gen, (Constant, Burst)):
        return gen.axes
    return 1


def _splitmix(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def _hour_ms(h) -> int:
    return round(float(h) * HOUR_MS)


def _interval_test(intervals) -> Callable[[int], bool]:
    spans = tuple((_hour_ms(a), _hour_ms(b)) for a, b in intervals)

    def inside(t: int) -> bool:
        d = t % DAY_MS
        for a, b in spans:
            if a <= d < b:
                return True
        return False

    return inside


def _splitmix_np(x: np.ndarray) -> np.ndarray:
    # uint64 arithmetic wraps, which is exactly the mod 2**64 of the scalar version
    x = x + np.uint64(0x9E3779B97F4A7C15)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def _compile_batch(gen: Generator, key: int) -> Callable[[np.ndarray], np.ndarray] | None:
    """Vectorised twin of ``compile_generator`` for the kinds fast sensors use.

    Takes an int64 array of times and returns an ``(n, axes)`` int64 array
    equal row for row to the scalar function. None when no twin exists.
    """
    if isinstance(gen, Constant):
        row = np.array([gen.value] * gen.axes, dtype=np.int64)
        return lambda t: np.tile(row, (len(t), 1))
    if isinstance(gen, Burst):
        starts = np.array(sorted(gen.event_times), dtype=np.int64)
        rest = np.array(gen.rest, dtype=np.int64)
        dur, mag = gen.duration_ms, gen.magnitude

        if not len(starts):
            return lambda t: np.tile(rest, (len(t), 1))

        def burst(t: np.ndarray) -> np.ndarray:
            d = t % DAY_MS
            i = np.searchsorted(starts, d, side="right") - 1
            hit = (i >= 0) & (d < starts[np.maximum(i, 0)] + dur)
            return rest[None, :] + np.where(hit, mag, 0)[:, None]

        return burst
    if isinstance(gen, Noise):
        inner = _compile_batch(gen.base, _splitmix(key))
        if inner is None:
            return None
        amp = gen.amplitude
        span = np.uint64(2 * amp + 1)
        axes = generator_axes(gen.base)
        k = np.uint64(key)

        def noisy(t: np.ndarray) -> np.ndarray:
            h = _splitmix_np(t.astype(np.uint64) ^ k)
            out = inner(t).copy()
            for a in range(axes):
                out[:, a] += (h % span).astype(np.int64) - amp
                h = h // span
            return out

        return noisy
    return None


def compile_generator(gen: Generator, key: int) -> Callable[[int], tuple[int, ...]]:
    """Turn a generator description into a fast ``time -> values`` function.

    Functions for generators with a vectorised twin carry it as ``.batch``.
    """
    fn = _compile_scalar(gen, key)
    batch = _compile_batch(gen, key)
    if batch is not None:
        fn.batch = batch
    return fn


def _compile_scalar(gen: Generator, key: int) -> Callable[[int], tuple[int, ...]]:
    if isinstance(gen, Constant):
        out = (gen.value,) * gen.axes
        return lambda t: out
    if isinstance(gen, Diurnal):
        base, amp = gen.base, gen.amplitude
        peak = _hour_ms(gen.peak_hour)
        w = 2 * math.pi / DAY_MS
        cos = math.cos
        return lambda t: (round(base + amp * cos(w * ((t - peak) % DAY_MS))),)
    if isinstance(gen, Windows):
        inside = _interval_test(gen.intervals)
        hi, lo = (gen.high,), (gen.low,)
        return lambda t: hi if inside(t) else lo
    if isinstance(gen, Occupancy):
        inside = _interval_test(gen.intervals)
        level, jitter = gen.pressure_level, gen.jitter
        zero = (0,)
        if not jitter:
            on = (level,)
            return lambda t: on if inside(t) else zero
        span = 2 * jitter + 1

        def occupancy(t: int) -> tuple[int, ...]:
            if not inside(t):
                return zero
            return (max(1, level + _splitmix(key ^ t) % span - jitter),)

        return occupancy
    if isinstance(gen, Burst):
        starts = tuple(sorted(gen.event_times))
        dur, mag, rest = gen.duration_ms, gen.magnitude, gen.rest
        moved = tuple(v + mag for v in rest)

        def burst(t: int) -> tuple[int, ...]:
            i = bisect_right(starts, t % DAY_MS) - 1
            if i >= 0 and t % DAY_MS < starts[i] + dur:
                return moved
            return rest

        return burst
    if isinstance(gen, Noise):
        inner = _compile_scalar(gen.base, _splitmix(key))
        amp = gen.amplitude
        span = 2 * amp + 1
        axes = generator_axes(gen.base)
        if axes == 1:
            return lambda t: (inner(t)[0] + _splitmix(key ^ t) % span - amp,)

        if axes == 3:
            def noisy3(t: int) -> tuple[int, ...]:
                h = _splitmix(key ^ t)
                x, y, z = inner(t)
                h, a = divmod(h, span)
                h, b = divmod(h, span)
                return (x + a - amp, y + b - amp, z + h % span - amp)

            return noisy3

        def noisy(t: int) -> tuple[int, ...]:
            h = _splitmix(key ^ t)
            out = []
            for v in inner(t):
                out.append(v + h % span - amp)
                h //= span
            return tuple(out)

        return noisy
    raise TypeError(f"not a generator: {gen!r}")


# -- scenario -----------------------------------------------------------------

@dataclass(frozen=True)
class NodeConfig:
    node_id: int
    layout: tuple[int, ...]
    bindings: dict[int, str] = field(default_factory=dict)
    name: str = ""
    group: int | None = None
    reports: bool = True

    @property
    def group_id(self) -> int:
        return self.node_id if self.group is None else self.group


@dataclass(frozen=True)
class HotPlug:
    time: int
    node_id: int
    action: str  # "attach" | "detach"
    tx_id: int


@dataclass(frozen=True)
class SitBinding:
    """Server rule: continuous pressure on a sensor buzzes an actuator."""

    sensor_node: int
    sensor_id: int
    actuator_node: int
    actuator_id: int


@dataclass(frozen=True)
class Scenario:
    nodes: tuple[NodeConfig, ...]
    channels: dict[str, Generator]
    hotplug: tuple[HotPlug, ...] = ()
    sit_rules: tuple[SitBinding, ...] = ()
    horizon_ms: int = DAY_MS
    seed: int = 7
    name: str = ""
    radio: RadioParams | None = None

    def node(self, node_id: int) -> NodeConfig:
        for n in self.nodes:
            if n.node_id == node_id:
                return n
        raise KeyError(node_id)

    def transducer_count(self) -> int:
        return sum(len(n.layout) for n in self.nodes)

    def with_(self, **changes) -> "Scenario":
        from dataclasses import replace
        return replace(self, **changes)


def sample_channel(scenario: Scenario, channel_id: str, time: int, seed: int | None = None) -> list[int]:
    try:
        gen = scenario.channels[channel_id]
    except KeyError:
        raise UnknownChannel(channel_id) from None
    key = derive_seed(scenario.seed if seed is None else seed, f"channel:{channel_id}")
    return list(compile_generator(gen, key)(time))


def channel_samplers(scenario: Scenario, seed: int | None = None) -> dict[str, Callable[[int], tuple]]:
    s = scenario.seed if seed is None else seed
    return {cid: compile_generator(g, derive_seed(s, f"channel:{cid}"))
            for cid, g in scenario.channels.items()}


# -- validation ---------------------------------------------------------------

def validate(scenario: Scenario) -> Scenario:
    if scenario.horizon_ms < 0:
        raise ValidationError("horizon_ms", "must be non-negative")
    node_ids = set()
    ever: dict[int, set[int]] = {}
    for i, node in enumerate(scenario.nodes):
        where = f"nodes[{i}]"
        if type(node.node_id) is not int or node.node_id <= 0:
            raise ValidationError(f"{where}.node_id", "must be a positive integer")
        if node.node_id in node_ids:
            raise ValidationError(f"{where}.node_id", f"duplicate node id {node.node_id}")
        node_ids.add(node.node_id)
        for j, tx in enumerate(node.layout):
            try:
                kind_for_id(tx)
            except UnassignedId as exc:
                raise ValidationError(f"{where}.layout[{j}]", f"UnassignedId: {exc}") from None
        if len(set(node.layout)) != len(node.layout):
            raise ValidationError(f"{where}.layout", "DuplicateId: transducer listed twice")
        ever[node.node_id] = set(node.layout)
    # every transducer is plugged into at most one node at a time; keep it simple
    # and require globally unique ids across the deployment
    owner: dict[int, int] = {}
    present = {n.node_id: set(n.layout) for n in scenario.nodes}
    for n in scenario.nodes:
        for tx in n.layout:
            if tx in owner:
                raise ValidationError(f"nodes[node_id={n.node_id}].layout",
                                      f"DuplicateId: transducer {tx} also on node {owner[tx]}")
            owner[tx] = n.node_id
    last_t = -1
    for i, hp in enumerate(scenario.hotplug):
        where = f"hotplug[{i}]"
        if hp.node_id not in node_ids:
            raise ValidationError(f"{where}.node_id", f"no node {hp.node_id}")
        if hp.time < last_t:
            raise ValidationError(f"{where}.time", "script must be in time order")
        if not 0 <= hp.time <= scenario.horizon_ms:
            raise ValidationError(f"{where}.time", "outside the horizon")
        last_t = hp.time
        try:
            kind_for_id(hp.tx_id)
        except UnassignedId as exc:
            raise ValidationError(f"{where}.tx_id", f"UnassignedId: {exc}") from None
        if hp.action == "attach":
            if hp.tx_id in present[hp.node_id]:
                raise ValidationError(f"{where}", f"{hp.tx_id} already attached")
            if owner.get(hp.tx_id, hp.node_id) != hp.node_id:
                raise ValidationError(f"{where}.tx_id", f"{hp.tx_id} belongs to node {owner[hp.tx_id]}")
            owner[hp.tx_id] = hp.node_id
            present[hp.node_id].add(hp.tx_id)
            ever[hp.node_id].add(hp.tx_id)
        elif hp.action == "detach":
            if hp.tx_id not in present[hp.node_id]:
                raise ValidationError(f"{where}", f"{hp.tx_id} not attached")
            present[hp.node_id].discard(hp.tx_id)
        else:
            raise ValidationError(f"{where}.action", f"unknown action {hp.action!r}")
    for i, node in enumerate(scenario.nodes):
        for tx in sorted(ever[node.node_id]):
            spec = spec_for_id(tx)
            if spec.is_actuator:
                continue
            ch = node.bindings.get(tx)
            if ch is None:
                raise ValidationError(f"nodes[{i}].bindings.{tx}",
                                      f"sensor {tx} on node {node.node_id} has no channel")
            if ch not in scenario.channels:
                raise ValidationError(f"nodes[{i}].bindings.{tx}",
                                      f"sensor {tx} bound to missing channel {ch!r}")
            if generator_axes(scenario.channels[ch]) != spec.axes:
                raise ValidationError(f"nodes[{i}].bindings.{tx}",
                                      f"channel {ch!r} has the wrong number of axes")
        extra = set(node.bindings) - ever[node.node_id]
        if extra:
            raise ValidationError(f"nodes[{i}].bindings", f"bindings for absent ids {sorted(extra)}")
    for i, rule in enumerate(scenario.sit_rules):
        where = f"sit_rules[{i}]"
        if rule.sensor_id not in ever.get(rule.sensor_node, ()):
            raise ValidationError(f"{where}.sensor", f"node {rule.sensor_node} never hosts {rule.sensor_id}")
        if kind_for_id(rule.sensor_id) is not TransducerKind.PRESSURE:
            raise ValidationError(f"{where}.sensor", "sit rules watch pressure sensors")
        if rule.actuator_id not in ever.get(rule.actuator_node, ()):
            raise ValidationError(f"{where}.actuator",
                                  f"node {rule.actuator_node} never hosts {rule.actuator_id}")
        if kind_for_id(rule.actuator_id) is not TransducerKind.VIBRO_ACTUATOR:
            raise ValidationError(f"{where}.actuator", "target must be an actuator")
    return scenario


# -- serialization ------------------------------------------------------------

def _gen_to_json(gen: Generator) -> dict:
    if isinstance(gen, Constant):
        return {"type": "constant", "value": gen.value, "axes": gen.axes}
    if isinstance(gen, Diurnal):
        return {"type": "diurnal", "base": gen.base, "amplitude": gen.amplitude,
                "peak_hour": gen.peak_hour}
    if isinstance(gen, Windows):
        return {"type": "windows", "low": gen.low, "high": gen.high,
                "intervals": [list(iv) for iv in gen.intervals]}
    if isinstance(gen, Occupancy):
        return {"type": "occupancy", "intervals": [list(iv) for iv in gen.intervals],
                "pressure_level": gen.pressure_level, "jitter": gen.jitter}
    if isinstance(gen, Burst):
        return {"type": "burst", "event_times": list(gen.event_times), "magnitude": gen.magnitude,
                "rest": list(gen.rest), "duration_ms": gen.duration_ms}
    if isinstance(gen, Noise):
        return {"type": "noise", "amplitude": gen.amplitude, "base": _gen_to_json(gen.base)}
    raise TypeError(gen)


def _intervals(raw, path):
    if not isinstance(raw, list):
        raise ValidationError(path, "expected a list of [start_hour, end_hour]")
    out = []
    for k, iv in enumerate(raw):
        if not (isinstance(iv, list) and len(iv) == 2 and all(isinstance(x, (int, float)) for x in iv)):
            raise ValidationError(f"{path}[{k}]", "expected [start_hour, end_hour]")
        if not 0 <= iv[0] < iv[1] <= 24:
            raise ValidationError(f"{path}[{k}]", "hours must satisfy 0 <= start < end <= 24")
        out.append((iv[0], iv[1]))
    return tuple(out)


def _gen_from_json(d, path: str) -> Generator:
    if not isinstance(d, dict) or "type" not in d:
        raise ValidationError(path, "generator needs a 'type'")
    kind = d["type"]
    fields_by_type = {
        "constant": {"value", "axes"}, "diurnal": {"base", "amplitude", "peak_hour"},
        "windows": {"low", "high", "intervals"},
        "occupancy": {"intervals", "pressure_level", "jitter"},
        "burst": {"event_times", "magnitude", "rest", "duration_ms"},
        "noise": {"amplitude", "base"},
    }
    if kind not in fields_by_type:
        raise ValidationError(f"{path}.type", f"unknown generator {kind!r}")
    unknown = set(d) - fields_by_type[kind] - {"type"}
    if unknown:
        raise ValidationError(path, f"unknown fields {sorted(unknown)}")

    def need(name, types=int):
        if name not in d:
            raise ValidationError(f"{path}.{name}", "required")
        v = d[name]
        if not isinstance(v, types) or isinstance(v, bool):
            raise ValidationError(f"{path}.{name}", f"bad value {v!r}")
        return v

    if kind == "constant":
        return Constant(need("value"), d.get("axes", 1))
    if kind == "diurnal":
        return Diurnal(need("base"), need("amplitude"), need("peak_hour", (int, float)))
    if kind == "windows":
        return Windows(need("low"), need("high"), _intervals(d.get("intervals"), f"{path}.intervals"))
    if kind == "occupancy":
        return Occupancy(_intervals(d.get("intervals"), f"{path}.intervals"),
                         need("pressure_level"), d.get("jitter", 0))
    if kind == "burst":
        rest = need("rest", list)
        return Burst(tuple(need("event_times", list)), need("magnitude"), tuple(rest),
                     d.get("duration_ms", 2000))
    amp = need("amplitude")
    if amp < 0:
        raise ValidationError(f"{path}.amplitude", "must be non-negative")
    return Noise(amp, _gen_from_json(d.get("base"), f"{path}.base"))


def to_json_dict(scenario: Scenario) -> dict:
    out = {
        "version": SCHEMA_VERSION,
        "name": scenario.name,
        "horizon_ms": scenario.horizon_ms,
        "seed": scenario.seed,
        "channels": {cid: _gen_to_json(g) for cid, g in scenario.channels.items()},
        "nodes": [
            {
                "node_id": n.node_id,
                "name": n.name,
                "layout": list(n.layout),
                "bindings": {str(k): v for k, v in n.bindings.items()},
                **({"group": n.group} if n.group is not None else {}),
                **({"reports": False} if not n.reports else {}),
            }
            for n in scenario.nodes
        ],
        "hotplug": [
            {"time_ms": h.time, "node_id": h.node_id, "action": h.action, "tx_id": h.tx_id}
            for h in scenario.hotplug
        ],
        "sit_rules": [
            {"sensor": [r.sensor_node, r.sensor_id], "actuator": [r.actuator_node, r.actuator_id]}
            for r in scenario.sit_rules
        ],
    }
    if scenario.radio is not None:
        out["radio"] = scenario.radio.to_dict()
    return out


def serialize(scenario: Scenario) -> bytes:
    return (json.dumps(to_json_dict(scenario), indent=2, sort_keys=False) + "\n").encode()


def _int(v, path):
    if type(v) is not int:
        raise ValidationError(path, f"expected an integer, got {v!r}")
    return v


def from_json_dict(doc) -> Scenario:
    if not isinstance(doc, dict):
        raise ValidationError("$", "scenario must be a JSON object")
    if doc.get("version") != SCHEMA_VERSION:
        raise ValidationError("version", f"unsupported schema version {doc.get('version')!r}")
    allowed = {"version", "name", "horizon_ms", "seed", "channels", "nodes", "hotplug",
               "sit_rules", "radio"}
    unknown = set(doc) - allowed
    if unknown:
        raise ValidationError("$", f"unknown fields {sorted(unknown)}")
    channels_raw = doc.get("channels")
    if not isinstance(channels_raw, dict):
        raise ValidationError("channels", "expected an object")
    channels = {cid: _gen_from_json(g, f"channels.{cid}") for cid, g in channels_raw.items()}
    nodes = []
    nodes_raw = doc.get("nodes")
    if not isinstance(nodes_raw, list):
        raise ValidationError("nodes", "expected a list")
    for i, n in enumerate(nodes_raw):
        where = f"nodes[{i}]"
        if not isinstance(n, dict):
            raise ValidationError(where, "expected an object")
        unknown = set(n) - {"node_id", "name", "layout", "bindings", "group", "reports"}
        if unknown:
            raise ValidationError(where, f"unknown fields {sorted(unknown)}")
        layout = n.get("layout", [])
        if not isinstance(layout, list):
            raise ValidationError(f"{where}.layout", "expected a list")
        bindings = {}
        for k, v in (n.get("bindings") or {}).items():
            try:
                bindings[int(k)] = v
            except ValueError:
                raise ValidationError(f"{where}.bindings.{k}", "keys are transducer ids") from None
        nodes.append(NodeConfig(
            node_id=_int(n.get("node_id"), f"{where}.node_id"),
            layout=tuple(_int(x, f"{where}.layout[{j}]") for j, x in enumerate(layout)),
            bindings=bindings,
            name=n.get("name", ""),
            group=n.get("group"),
            reports=n.get("reports", True),
        ))
    hotplug = []
    for i, h in enumerate(doc.get("hotplug", [])):
        where = f"hotplug[{i}]"
        try:
            hotplug.append(HotPlug(_int(h["time_ms"], f"{where}.time_ms"),
                                   _int(h["node_id"], f"{where}.node_id"),
                                   h["action"], _int(h["tx_id"], f"{where}.tx_id")))
        except (KeyError, TypeError) as exc:
            raise ValidationError(where, f"missing field {exc}") from None
    rules = []
    for i, r in enumerate(doc.get("sit_rules", [])):
        where = f"sit_rules[{i}]"
        try:
            (sn, sid), (an, aid) = r["sensor"], r["actuator"]
        except (KeyError, TypeError, ValueError):
            raise ValidationError(where, "expected sensor and actuator [node, id] pairs") from None
        rules.append(SitBinding(sn, sid, an, aid))
    radio = None
    if "radio" in doc:
        try:
            radio = RadioParams.from_dict(doc["radio"])
        except (TypeError, ValueError) as exc:
            raise ValidationError("radio", str(exc)) from None
    scenario = Scenario(
        nodes=tuple(nodes), channels=channels, hotplug=tuple(hotplug), sit_rules=tuple(rules),
        horizon_ms=_int(doc.get("horizon_ms", DAY_MS), "horizon_ms"),
        seed=_int(doc.get("seed", 7), "seed"), name=doc.get("name", ""), radio=radio,
    )
    return validate(scenario)


def load_scenario(config: bytes | str) -> Scenario:
    try:
        doc = json.loads(config)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseError(f"scenario is not valid JSON: {exc}") from None
    return from_json_dict(doc)


# -- the built-in home --------------------------------------------------------

def _hm(h: int, m: int = 0, s: int = 0) -> int:
    return (h * 3600 + m * 60 + s) * 1000


def builtin_home(seed: int = 7, horizon_ms: int = DAY_MS) -> Scenario:
    """Six nodes spread over a kitchen, fridge, sofa, chair, bedroom and pillow."""
    channels: dict[str, Generator] = {
        "kitchen.temperature": Noise(4, Diurnal(base=420, amplitude=60, peak_hour=15)),
        "kitchen.light": Noise(6, Windows(low=60, high=720, intervals=((7, 22),))),
        "kitchen.co": Noise(8, Windows(low=40, high=880, intervals=((10, 12), (20, 21)))),
        "fridge.eggs": Noise(3, Constant(610)),
        "fridge.door": Noise(4, Burst(
            event_times=(_hm(7, 15), _hm(8, 2), _hm(12, 30), _hm(13, 5), _hm(18, 45),
                         _hm(19, 30), _hm(20, 10), _hm(22, 0)),
            magnitude=280, rest=(512, 512, 768), duration_ms=6000)),
        "sofa.left": Occupancy(((13, 13.5), (19, 20.75)), pressure_level=700, jitter=20),
        "sofa.middle": Occupancy(((19.25, 20.75),), pressure_level=680, jitter=20),
        "sofa.right": Occupancy(((16, 16.25), (19, 20.25)), pressure_level=720, jitter=20),
        "chair.seat": Occupancy(((9, 9.75), (14, 15.25)), pressure_level=650, jitter=15),
        "bedroom.temperature": Noise(3, Diurnal(base=390, amplitude=35, peak_hour=16)),
        "bedroom.light": Noise(5, Windows(low=20, high=560, intervals=((6.5, 8), (18, 23)))),
        "pillow.head": Occupancy(((0, 7), (23, 24)), pressure_level=520, jitter=25),
        "pillow.left": Occupancy(((0, 6.5), (23.5, 24)), pressure_level=430, jitter=25),
        "pillow.right": Occupancy(((0.5, 7),), pressure_level=450, jitter=25),
        "pillow.motion": Noise(3, Burst(
            event_times=(_hm(0, 40), _hm(1, 55), _hm(3, 10), _hm(4, 20), _hm(5, 35),
                         _hm(6, 40), _hm(23, 20)),
            magnitude=190, rest=(500, 520, 700), duration_ms=4000)),
    }
    nodes = (
        NodeConfig(1, (72, 41, 76), {72: "kitchen.temperature", 41: "kitchen.light",
                                     76: "kitchen.co"}, name="kitchen"),
        NodeConfig(2, (1, 83), {1: "fridge.eggs", 83: "fridge.door"}, name="fridge"),
        NodeConfig(3, (2, 3, 4, 21, 22, 23), {2: "sofa.left", 3: "sofa.middle",
                                              4: "sofa.right"}, name="sofa"),
        NodeConfig(4, (5, 24), {5: "chair.seat"}, name="chair"),
        NodeConfig(5, (73, 57), {73: "bedroom.temperature", 57: "bedroom.light"},
                   name="bedroom"),
        NodeConfig(6, (6, 7, 8, 84), {6: "pillow.head", 7: "pillow.left", 8: "pillow.right",
                                      84: "pillow.motion"}, name="pillow"),
    )
    # the bedroom light sensor is unplugged for half an hour and plugged back in
    hotplug = (
        HotPlug(_hm(14, 0), 5, "detach", 57),
        HotPlug(_hm(14, 30), 5, "attach", 57),
    )
    hotplug = tuple(h for h in hotplug if h.time <= horizon_ms)
    sit_rules = (
        SitBinding(4, 5, 4, 24),
        SitBinding(3, 2, 3, 21),
        SitBinding(3, 3, 3, 22),
        SitBinding(3, 4, 3, 23),
    )
    return validate(Scenario(nodes, channels, hotplug, sit_rules, horizon_ms, seed,
                             name="builtin-home"))
