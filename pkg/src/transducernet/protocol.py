"""Canonical XML codec for measurement and control messages.

Wire schema (UTF-8, no BOM, no whitespace between elements)::

    <node id=".." t=".." if="zigbee">
      <layout><tx id=".." kind=".." status="running|stopped"/>...</layout>
      <data><s id=".." t="..">v1 v2 ...</s>...</data>
    </node>

    <control node=".."><act id=".." on="0|1" ms=".."/>...</control>

Empty containers are written self-closed (``<layout/>``). All numbers are
unsigned decimal integers without leading zeros. Decoding accepts
whitespace between elements and around sample values, nothing else.
"""

from __future__ import annotations

import json
import re
import xml.etree.ElementTree as ET
from typing import NamedTuple, Union

from .bus import RawSample
from .errors import InvariantViolation, MalformedXml, SchemaViolation
from .registry import TransducerKind, KIND_BY_ID, spec_for_kind

INTERFACE_ZIGBEE = "zigbee"
RUNNING = "running"
STOPPED = "stopped"
STATUSES = (RUNNING, STOPPED)
WINDOW_MS = 1000

_UINT = re.compile(r"0|[1-9][0-9]*")
_KIND_TOKENS = {k.token: k for k in TransducerKind}


class LayoutEntry(NamedTuple):
    id: int
    kind: str
    status: str


class Command(NamedTuple):
    actuator_id: int
    activate: bool
    duration_ms: int


class MeasurementMessage(NamedTuple):
    node_id: int
    timestamp_ms: int
    layout: tuple[LayoutEntry, ...] = ()
    samples: tuple[RawSample, ...] = ()
    interface: str = INTERFACE_ZIGBEE


class ControlMessage(NamedTuple):
    node_id: int
    commands: tuple[Command, ...] = ()


Message = Union[MeasurementMessage, ControlMessage]


# -- invariants ---------------------------------------------------------------

def _check_uint(value, what: str) -> None:
    if type(value) is not int or value < 0:
        raise InvariantViolation(f"{what} must be a non-negative integer, got {value!r}")


# id -> (kind token, axes, lo, hi)
_ID_INFO = {
    tx: (kind.value, spec_for_kind(kind).axes, *spec_for_kind(kind).value_range)
    for tx, kind in KIND_BY_ID.items()
}


def _check_layout(msg: MeasurementMessage) -> dict[int, tuple]:
    """Validate header and layout; returns the running ids with their metadata."""
    _check_uint(msg.node_id, "node id")
    _check_uint(msg.timestamp_ms, "timestamp")
    if msg.interface != INTERFACE_ZIGBEE:
        raise InvariantViolation(f"unsupported interface {msg.interface!r}")
    info = _ID_INFO
    running = {}
    seen = set()
    for entry in msg.layout:
        meta = info.get(entry.id)
        if meta is None:
            raise InvariantViolation(f"layout id {entry.id!r} is unassigned")
        if entry.id in seen:
            raise InvariantViolation(f"layout id {entry.id} listed twice")
        seen.add(entry.id)
        if entry.kind != meta[0]:
            raise InvariantViolation(f"layout id {entry.id} is {meta[0]}, not {entry.kind!r}")
        if entry.status == RUNNING:
            running[entry.id] = meta
        elif entry.status != STOPPED:
            raise InvariantViolation(f"bad status {entry.status!r} for id {entry.id}")
    return running


def _check_sample(running: dict, t_lo: int, t_hi: int, tx_id, t, values) -> None:
    meta = running.get(tx_id)
    if meta is None:
        raise InvariantViolation(f"sample id {tx_id} has no running layout entry")
    if type(t) is not int or not t_lo < t <= t_hi:
        raise InvariantViolation(f"sample time {t!r} outside window ending {t_hi}")
    if len(values) != meta[1]:
        raise InvariantViolation(f"sample for id {tx_id} needs {meta[1]} values")
    lo, hi = meta[2], meta[3]
    for v in values:
        if type(v) is not int or not lo <= v <= hi:
            raise InvariantViolation(f"sample value {v!r} for id {tx_id} out of range")


def check_measurement(msg: MeasurementMessage) -> None:
    running = _check_layout(msg)
    t_hi = msg.timestamp_ms
    t_lo = t_hi - WINDOW_MS
    for s in msg.samples:
        _check_sample(running, t_lo, t_hi, s.id, s.time, s.values)


def check_control(msg: ControlMessage) -> None:
    _check_uint(msg.node_id, "node id")
    for c in msg.commands:
        if KIND_BY_ID.get(c.actuator_id) is not TransducerKind.VIBRO_ACTUATOR:
            raise InvariantViolation(f"{c.actuator_id!r} is not an actuator id")
        if type(c.activate) is not bool:
            raise InvariantViolation("activate flag must be a bool")
        _check_uint(c.duration_ms, "duration")
        if c.activate and c.duration_ms == 0:
            raise InvariantViolation(f"activation of {c.actuator_id} needs a positive duration")


# -- encoding -----------------------------------------------------------------

def _sample_tmpl(axes: int) -> str:
    return '<s id="%d" t="%d">' + " ".join(["%d"] * axes) + "</s>"


_SAMPLE_TMPL = tuple(_sample_tmpl(n) for n in range(4))
_layout_xml_cache: dict[tuple, str] = {}


def _layout_xml(layout: tuple) -> str:
    xml = _layout_xml_cache.get(layout)
    if xml is None:
        if layout:
            xml = "<layout>" + "".join(
                f'<tx id="{e.id}" kind="{e.kind}" status="{e.status}"/>' for e in layout
            ) + "</layout>"
        else:
            xml = "<layout/>"
        if len(_layout_xml_cache) >= 1024:
            _layout_xml_cache.clear()
        _layout_xml_cache[layout] = xml
    return xml


def encode_measurement(msg: MeasurementMessage, check: bool = True) -> bytes:
    """Canonical bytes for ``msg``.

    ``check=False`` skips invariant checks for callers that build messages
    from already-validated state (the node's own data collection).
    """
    if check:
        check_measurement(msg)
    parts = [f'<node id="{msg.node_id}" t="{msg.timestamp_ms}" if="{msg.interface}">',
             _layout_xml(msg.layout)]
    samples = msg.samples
    if samples:
        # one C-level format call for the whole body: a %d template per
        # sample, fed the flattened (id, time, values...) sequence
        tmpl = _SAMPLE_TMPL
        try:
            fmt = "".join([tmpl[len(s.values)] for s in samples])
        except IndexError:
            fmt = "".join([_sample_tmpl(len(s.values)) for s in samples])
        flat = [x for s in samples for x in (s.id, s.time, *s.values)]
        parts.append("<data>" + fmt % tuple(flat) + "</data>")
    else:
        parts.append("<data/>")
    parts.append("</node>")
    return "".join(parts).encode("utf-8")


def encode_control(msg: ControlMessage) -> bytes:
    check_control(msg)
    if not msg.commands:
        return f'<control node="{msg.node_id}"/>'.encode("utf-8")
    acts = "".join(
        f'<act id="{c.actuator_id}" on="{int(c.activate)}" ms="{c.duration_ms}"/>'
        for c in msg.commands
    )
    return f'<control node="{msg.node_id}">{acts}</control>'.encode("utf-8")


def payload_size(msg: Message) -> int:
    if isinstance(msg, MeasurementMessage):
        return len(encode_measurement(msg))
    return len(encode_control(msg))


# -- decoding -----------------------------------------------------------------

def _parse(data: bytes) -> ET.Element:
    if not isinstance(data, (bytes, bytearray)):
        raise MalformedXml("wire data must be bytes")
    if data.startswith(b"\xef\xbb\xbf"):
        raise SchemaViolation("byte order mark not allowed")
    if b"<!" in data:
        raise SchemaViolation("DTDs, comments and CDATA are not part of the schema")
    try:
        data.decode("utf-8")
        return ET.fromstring(data)
    except (ET.ParseError, UnicodeDecodeError) as exc:
        raise MalformedXml(str(exc)) from None


def _blank(text: str | None) -> bool:
    return text is None or not text.strip()


def _attrs(el: ET.Element, names: tuple[str, ...]) -> list[str]:
    attrib = el.attrib
    if len(attrib) != len(names) or any(n not in attrib for n in names):
        extra = sorted(set(attrib) - set(names))
        missing = [n for n in names if n not in attrib]
        raise SchemaViolation(
            f"<{el.tag}> attributes: unknown {extra}, missing {missing}"
        )
    return [attrib[n] for n in names]


def _uint(text: str, what: str) -> int:
    if not _UINT.fullmatch(text):
        raise SchemaViolation(f"{what}: {text!r} is not a canonical unsigned integer")
    return int(text)


def _children(el: ET.Element, tag: str) -> list[ET.Element]:
    if not _blank(el.text):
        raise SchemaViolation(f"unexpected text in <{el.tag}>")
    kids = list(el)
    for k in kids:
        if k.tag != tag:
            raise SchemaViolation(f"unexpected <{k.tag}> in <{el.tag}>")
        if not _blank(k.tail):
            raise SchemaViolation(f"unexpected text after <{k.tag}>")
    return kids


_N = rb"(0|[1-9][0-9]*)"
_CANON_DOC = re.compile(
    rb'<node id="' + _N + rb'" t="' + _N + rb'" if="zigbee">'
    rb'(?:<layout/>|<layout>((?:<tx id="[0-9]+" kind="[a-z]+" status="[a-z]+"/>)+)</layout>)'
    rb'(?:<data/>|<data>((?:<s id="[0-9]+" t="[0-9]+">[0-9 ]+</s>)+)</data>)</node>'
)
_CANON_TX = re.compile(rb'<tx id="' + _N + rb'" kind="([a-z]+)" status="(running|stopped)"/>')


_json_array = json.JSONDecoder().decode


def _samples_json(data_raw: bytes) -> list:
    """Rewrite a validated canonical <data> body as a JSON array and parse it.

    The document regex leaves only digits and spaces in each field, so the
    rewrite is a valid array exactly when every number is canonical (no
    leading zeros) and values are separated by single spaces. Returns None
    otherwise.
    """
    body = (data_raw.decode("ascii")
            .replace('<s id="', "[")
            .replace('" t="', ",")
            .replace('">', ",[")
            .replace(" ", ",")
            .replace("</s>", "]],"))
    try:
        return _json_array("[" + body[:-1] + "]")
    except ValueError:
        return None


# canonical layout bytes -> (entries, running ids); nodes resend the same
# layout every second, so this skips most of the per-message layout work
_layout_cache: dict[bytes | None, tuple] = {}


def _canonical_layout(layout_raw: bytes | None) -> tuple | None:
    if layout_raw is None:
        return ()
    entries = _CANON_TX.findall(layout_raw)
    if len(entries) != layout_raw.count(b"<tx "):
        return None
    layout = []
    for tx_id, kind, status in entries:
        kind = kind.decode()
        if kind not in _KIND_TOKENS:
            return None
        layout.append(LayoutEntry(int(tx_id), kind, status.decode()))
    return tuple(layout)


def _decode_canonical(data: bytes) -> MeasurementMessage | None:
    """Parse a byte-exact canonical document without building a tree.

    Returns None whenever the input is not in canonical form, in which case
    the general parser decides (and produces the precise error).
    """
    m = _CANON_DOC.fullmatch(data)
    if m is None:
        return None
    node_id, t, layout_raw, data_raw = m.groups()
    cached = _layout_cache.get(layout_raw)
    if cached is None:
        layout = _canonical_layout(layout_raw)
        if layout is None:
            return None
    else:
        layout, running = cached
    parsed = ()
    if data_raw is not None:
        parsed = _samples_json(data_raw)
        if parsed is None:
            return None
    # schema is settled; from here on failures are invariant violations
    msg = MeasurementMessage(int(node_id), int(t), layout, ())
    if cached is None:
        running = _check_layout(msg)
        if len(_layout_cache) >= 1024:
            _layout_cache.clear()
        _layout_cache[layout_raw] = (layout, running)
    if not parsed:
        return msg
    t_hi = msg.timestamp_ms
    t_lo = t_hi - WINDOW_MS
    samples = []
    append = samples.append
    get = running.get
    new = tuple.__new__
    for tx_id, st, values in parsed:
        values = tuple(values)
        meta = get(tx_id)
        if (meta is None or not t_lo < st <= t_hi or len(values) != meta[1]
                or min(values) < meta[2] or max(values) > meta[3]):
            _check_sample(running, t_lo, t_hi, tx_id, st, values)
        append(new(RawSample, (tx_id, st, values)))
    return MeasurementMessage(msg.node_id, t_hi, layout, tuple(samples))


def decode_measurement(data: bytes) -> MeasurementMessage:
    if type(data) is bytes:
        msg = _decode_canonical(data)
        if msg is not None:
            return msg
    return _decode_measurement_tree(data)


def _decode_measurement_tree(data: bytes) -> MeasurementMessage:
    root = _parse(data)
    if root.tag != "node":
        raise SchemaViolation(f"expected <node>, got <{root.tag}>")
    node_id, t, iface = _attrs(root, ("id", "t", "if"))
    node_id = _uint(node_id, "node id")
    t = _uint(t, "node t")
    if iface != INTERFACE_ZIGBEE:
        raise SchemaViolation(f"unknown interface {iface!r}")
    if not _blank(root.text):
        raise SchemaViolation("unexpected text in <node>")
    sections = list(root)
    if [s.tag for s in sections] != ["layout", "data"]:
        raise SchemaViolation(f"<node> must hold <layout> then <data>, got {[s.tag for s in sections]}")
    layout_el, data_el = sections
    for s in sections:
        if s.attrib:
            raise SchemaViolation(f"<{s.tag}> takes no attributes")
        if not _blank(s.tail):
            raise SchemaViolation(f"unexpected text after <{s.tag}>")

    layout = []
    for el in _children(layout_el, "tx"):
        tx_id, kind, status = _attrs(el, ("id", "kind", "status"))
        if kind not in _KIND_TOKENS:
            raise SchemaViolation(f"unknown transducer kind {kind!r}")
        if status not in STATUSES:
            raise SchemaViolation(f"unknown status {status!r}")
        if len(el) or not _blank(el.text):
            raise SchemaViolation("<tx> must be empty")
        layout.append(LayoutEntry(_uint(tx_id, "tx id"), kind, status))

    samples = []
    for el in _children(data_el, "s"):
        tx_id, st = _attrs(el, ("id", "t"))
        if len(el):
            raise SchemaViolation("<s> holds values only")
        values = tuple(_uint(v, "sample value") for v in (el.text or "").split())
        samples.append(RawSample(_uint(tx_id, "s id"), _uint(st, "s t"), values))

    msg = MeasurementMessage(node_id, t, tuple(layout), tuple(samples))
    check_measurement(msg)
    return msg


def decode_control(data: bytes) -> ControlMessage:
    root = _parse(data)
    if root.tag != "control":
        raise SchemaViolation(f"expected <control>, got <{root.tag}>")
    (node_id,) = _attrs(root, ("node",))
    commands = []
    for el in _children(root, "act"):
        tx_id, on, ms = _attrs(el, ("id", "on", "ms"))
        if on not in ("0", "1"):
            raise SchemaViolation(f"on must be 0 or 1, got {on!r}")
        if len(el) or not _blank(el.text):
            raise SchemaViolation("<act> must be empty")
        commands.append(Command(_uint(tx_id, "act id"), on == "1", _uint(ms, "act ms")))
    msg = ControlMessage(_uint(node_id, "control node"), tuple(commands))
    check_control(msg)
    return msg


def decode(data: bytes) -> Message:
    """Decode either message type, dispatching on the root element."""
    head = data.lstrip()[:9] if isinstance(data, (bytes, bytearray)) else b""
    if head.startswith(b"<control"):
        return decode_control(data)
    return decode_measurement(data)
