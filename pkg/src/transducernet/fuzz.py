"""Randomised round-trip and mutation-rejection checks for the codec.

Two properties are exercised:

* round trip: ``decode(encode(m)) == m`` and re-encoding gives the same
  bytes, for random valid messages of both types;
* rejection: every single-field mutation of a canonical document raises a
  typed :class:`ProtocolError`.

Mutations only touch one element or attribute and are chosen so that the
result can never be a valid document (a renamed element, a dropped
attribute, a value that is not a canonical integer, an id that breaks an
invariant, ...). Any counterexample is written to a JSON repro file.
"""

from __future__ import annotations

import json
import random
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

from .bus import RawSample
from .errors import ProtocolError
from .protocol import (
    INTERFACE_ZIGBEE, STATUSES, Command, ControlMessage, LayoutEntry, MeasurementMessage, RUNNING,
    decode, decode_control, decode_measurement, encode_control, encode_measurement,
)
from .registry import KIND_BY_ID, TransducerKind, all_specs, kind_for_id, spec_for_id

_SENSOR_IDS = sorted(i for i, k in KIND_BY_ID.items() if k is not TransducerKind.VIBRO_ACTUATOR)
_ACTUATOR_IDS = sorted(i for i, k in KIND_BY_ID.items() if k is TransducerKind.VIBRO_ACTUATOR)


# -- generators ---------------------------------------------------------------

def random_measurement(rng: random.Random, max_entries: int = 8, max_samples: int = 12) -> MeasurementMessage:
    ids = rng.sample(sorted(KIND_BY_ID), rng.randint(0, max_entries))
    layout = tuple(LayoutEntry(i, kind_for_id(i).token, rng.choice(STATUSES)) for i in ids)
    running = [e.id for e in layout if e.status == RUNNING and e.id in _SENSOR_IDS]
    t = rng.choice([0, 1, 999, 1000, rng.randrange(1, 2**40)])
    lo_t = max(t - 999, 0) if t else None
    samples = []
    if running and lo_t is not None and lo_t <= t:
        for _ in range(rng.randint(0, max_samples)):
            i = rng.choice(running)
            spec = spec_for_id(i)
            vlo, vhi = spec.value_range
            values = tuple(rng.choice([vlo, vhi, rng.randint(vlo, vhi)]) for _ in range(spec.axes))
            samples.append(RawSample(i, rng.randint(max(lo_t, t - 999), t), values))
    return MeasurementMessage(rng.randrange(0, 2**32), t, layout, tuple(samples), INTERFACE_ZIGBEE)


def random_control(rng: random.Random, max_commands: int = 6) -> ControlMessage:
    cmds = []
    for _ in range(rng.randint(0, max_commands)):
        on = rng.random() < 0.7
        ms = rng.randint(1, 10**7) if on else rng.choice([0, rng.randint(0, 10**7)])
        cmds.append(Command(rng.choice(_ACTUATOR_IDS), on, ms))
    return ControlMessage(rng.randrange(0, 2**32), tuple(cmds))


# -- mutations ----------------------------------------------------------------

@dataclass(frozen=True)
class Mutation:
    name: str
    path: str
    document: bytes


def _serialize(el: ET.Element) -> bytes:
    """Canonical-style serialization of an arbitrary element tree."""
    attrs = "".join(f' {k}="{_esc(v)}"' for k, v in el.attrib.items())
    inner = _esc(el.text or "") + "".join(_serialize(c).decode() for c in el)
    if not inner:
        return f"<{el.tag}{attrs}/>".encode()
    return f"<{el.tag}{attrs}>{inner}</{el.tag}>".encode()


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")


def _walk(root: ET.Element):
    """(path, element) pairs in document order."""
    yield f"/{root.tag}", root
    counts: dict[str, int] = {}
    for child in root:
        n = counts.get(child.tag, 0)
        counts[child.tag] = n + 1
        yield from _walk_child(child, f"/{root.tag}", n)


def _walk_child(el: ET.Element, parent: str, index: int):
    here = f"{parent}/{el.tag}[{index}]"
    yield here, el
    counts: dict[str, int] = {}
    for child in el:
        n = counts.get(child.tag, 0)
        counts[child.tag] = n + 1
        yield from _walk_child(child, here, n)


_BAD_NUMBERS = ("", "x", "-1", "1.5", "01", "1e3", " 1")
_TOKEN_ATTRS = {("node", "if"), ("tx", "kind"), ("tx", "status"), ("act", "on")}


def mutations(doc: bytes) -> list[Mutation]:
    """Every single-field mutation of ``doc`` that the schema must reject."""
    out: list[Mutation] = []

    def emit(name: str, path: str, root: ET.Element) -> None:
        out.append(Mutation(name, path, _serialize(root)))

    base = ET.fromstring(doc)
    n_nodes = sum(1 for _ in _walk(base))
    for index in range(n_nodes):
        # fresh copy per mutation: element identity by walk order
        def fresh():
            root = ET.fromstring(doc)
            path, el = list(_walk(root))[index]
            return root, path, el

        root, path, el = fresh()
        el.tag = el.tag + "x"
        emit("rename-element", path, root)

        for attr in list(el.attrib):
            root, path, el = fresh()
            del el.attrib[attr]
            emit("drop-attribute", f"{path}@{attr}", root)

            root, path, el = fresh()
            el.attrib[attr + "x"] = el.attrib.pop(attr)
            emit("rename-attribute", f"{path}@{attr}", root)

            if (el.tag, attr) in _TOKEN_ATTRS:
                root, path, el = fresh()
                el.attrib[attr] = "bogus"
                emit("bad-token", f"{path}@{attr}", root)
            else:
                bad = _BAD_NUMBERS[(index + len(attr)) % len(_BAD_NUMBERS)]
                root, path, el = fresh()
                el.attrib[attr] = bad
                emit("bad-number", f"{path}@{attr}", root)

        root, path, el = fresh()
        el.attrib["extra"] = "1"
        emit("extra-attribute", f"{path}@extra", root)

        if el.tag == "s":
            root, path, el = fresh()
            el.text = (el.text or "") + " x"
            emit("bad-value", path, root)

            root, path, el = fresh()
            vals = (el.text or "").split()
            el.text = " ".join(vals + ["0"]) if vals else ""
            emit("wrong-arity", path, root)

            root, path, el = fresh()
            vals = (el.text or "0").split()
            vals[0] = str(spec_for_id(int(el.attrib["id"])).value_range[1] + 1)
            el.text = " ".join(vals)
            emit("out-of-range", path, root)

            root, path, el = fresh()
            el.attrib["t"] = str(int(root.attrib["t"]) + 1)
            emit("future-sample", f"{path}@t", root)

            root, path, el = fresh()
            listed = {int(tx.attrib["id"]) for tx in root.iter("tx") if tx.attrib.get("status") == RUNNING}
            orphan = next(i for i in _SENSOR_IDS if i not in listed)
            el.attrib["id"] = str(orphan)
            emit("orphan-sample", f"{path}@id", root)

        if el.tag == "tx":
            root, path, el = fresh()
            other = next(s for s in all_specs() if s.kind.token != el.attrib["kind"])
            el.attrib["kind"] = other.kind.token
            emit("kind-mismatch", f"{path}@kind", root)

            root, path, el = fresh()
            el.attrib["id"] = "0"
            emit("unassigned-id", f"{path}@id", root)

        if el.tag == "act":
            root, path, el = fresh()
            el.attrib["id"] = str(_SENSOR_IDS[index % len(_SENSOR_IDS)])
            emit("not-an-actuator", f"{path}@id", root)
            if el.attrib.get("on") == "1":
                root, path, el = fresh()
                el.attrib["ms"] = "0"
                emit("zero-duration", f"{path}@ms", root)

    out.append(Mutation("truncate", "/", doc[: len(doc) // 2]))
    out.append(Mutation("bom", "/", b"\xef\xbb\xbf" + doc))
    return out


# -- harness ------------------------------------------------------------------

@dataclass
class FuzzReport:
    seed: int
    iterations: int
    round_trips: dict[str, int] = field(default_factory=lambda: {"measurement": 0, "control": 0})
    mutations_checked: int = 0
    mutations_by_kind: dict[str, int] = field(default_factory=dict)
    failures: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def summary(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        return (f"{status}: {self.round_trips['measurement']} measurement and "
                f"{self.round_trips['control']} control round trips, "
                f"{self.mutations_checked} mutations rejected-checked, "
                f"{len(self.failures)} counterexample(s) (seed {self.seed})")


def _round_trip(kind: str, msg, encode: Callable, dec: Callable, report: FuzzReport) -> None:
    data = encode(msg)
    try:
        back = dec(data)
    except ProtocolError as exc:
        report.failures.append({"property": "round-trip", "type": kind, "message": repr(msg),
                                "document": data.decode(), "error": f"{type(exc).__name__}: {exc}"})
        return
    if back != msg or encode(back) != data:
        report.failures.append({"property": "round-trip", "type": kind, "message": repr(msg),
                                "document": data.decode(), "decoded": repr(back)})
        return
    report.round_trips[kind] += 1


def check_rejected(doc: bytes, name: str, path: str, report: FuzzReport) -> None:
    report.mutations_checked += 1
    report.mutations_by_kind[name] = report.mutations_by_kind.get(name, 0) + 1
    try:
        decode(doc)
    except ProtocolError:
        return
    except Exception as exc:  # untyped error is a failure too
        report.failures.append({"property": "typed-rejection", "mutation": name, "path": path,
                                "document": doc.decode("utf-8", "replace"),
                                "error": f"{type(exc).__name__}: {exc}"})
        return
    report.failures.append({"property": "rejection", "mutation": name, "path": path,
                            "document": doc.decode("utf-8", "replace")})


def run_fuzz(iterations: int, seed: int, golden: Iterable[bytes] = (),
             must_reject: Iterable[bytes] = (), mutate_every: int = 10) -> FuzzReport:
    """``iterations`` round trips of each message type, plus all mutations of
    the golden documents and of every ``mutate_every``-th random document."""
    if iterations <= 0:
        raise ValueError("iterations must be positive")
    rng = random.Random(seed)
    report = FuzzReport(seed, iterations)
    docs = list(golden)
    for i in range(iterations):
        m = random_measurement(rng)
        _round_trip("measurement", m, encode_measurement, decode_measurement, report)
        c = random_control(rng)
        _round_trip("control", c, encode_control, decode_control, report)
        if i % mutate_every == 0:
            docs += [encode_measurement(m), encode_control(c)]
    for doc in docs:
        for mut in mutations(doc):
            check_rejected(mut.document, mut.name, mut.path, report)
    for doc in must_reject:
        check_rejected(doc, "corpus", "/", report)
    return report


def write_repro(report: FuzzReport, path: Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps({"seed": report.seed, "iterations": report.iterations,
                                "failures": report.failures}, indent=2) + "\n")
    return path


def golden_documents() -> list[bytes]:
    """Canonical documents of every shape the system produces.

    The first reporting window of each built-in node, a window after the
    bedroom light is unplugged, an empty measurement and a sit-rule buzz.
    """
    from .energy import get_profile
    from .network import simulate
    from .scenario import builtin_home
    from .server import BUZZ_MS, Store

    home = builtin_home(horizon_ms=1_000)
    store = Store(keep_records=True)
    simulate(home, get_profile("zigbee-default"), store=store)
    docs = [encode_measurement(r.message) for r in store.records]
    unplugged = tuple(LayoutEntry(e.id, e.kind, "stopped" if e.id == 57 else e.status)
                      for e in store.records[4].message.layout)
    docs.append(encode_measurement(MeasurementMessage(5, 50_401_000, unplugged, (
        RawSample(73, 50_401_000, (433,)),))))
    docs.append(encode_measurement(MeasurementMessage(9, 1_000)))
    docs.append(encode_control(ControlMessage(4, (Command(24, True, BUZZ_MS),))))
    docs.append(encode_control(ControlMessage(3, (Command(21, True, BUZZ_MS), Command(22, False, 0)))))
    return docs
