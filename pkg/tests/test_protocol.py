from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from transducernet.bus import RawSample
from transducernet.errors import InvariantViolation, MalformedXml, ProtocolError, SchemaViolation
from transducernet.protocol import (
    Command, ControlMessage, LayoutEntry, MeasurementMessage, decode, decode_control,
    decode_measurement, encode_control, encode_measurement, payload_size,
)
from transducernet.registry import KIND_BY_ID, TransducerKind, kind_for_id, spec_for_id

GOLDEN = Path(__file__).parent / "golden"
SENSORS = sorted(i for i, k in KIND_BY_ID.items() if k is not TransducerKind.VIBRO_ACTUATOR)
ACTUATORS = sorted(i for i, k in KIND_BY_ID.items() if k is TransducerKind.VIBRO_ACTUATOR)


def entry(tx, status="running"):
    return LayoutEntry(tx, kind_for_id(tx).token, status)


# -- strategies ---------------------------------------------------------------

@st.composite
def measurements(draw, max_samples=20):
    ids = draw(st.lists(st.sampled_from(sorted(KIND_BY_ID)), unique=True, max_size=8))
    layout = tuple(entry(i, draw(st.sampled_from(["running", "stopped"]))) for i in ids)
    t = draw(st.integers(0, 2**40))
    running = [e.id for e in layout if e.status == "running" and e.id in SENSORS]
    samples = []
    if running and t > 0:
        for _ in range(draw(st.integers(0, max_samples))):
            tx = draw(st.sampled_from(running))
            spec = spec_for_id(tx)
            values = tuple(draw(st.integers(*spec.value_range)) for _ in range(spec.axes))
            samples.append(RawSample(tx, draw(st.integers(max(1, t - 999), t)), values))
    return MeasurementMessage(draw(st.integers(0, 2**32)), t, layout, tuple(samples))


@st.composite
def controls(draw):
    cmds = []
    for _ in range(draw(st.integers(0, 6))):
        on = draw(st.booleans())
        ms = draw(st.integers(1 if on else 0, 10**8))
        cmds.append(Command(draw(st.sampled_from(ACTUATORS)), on, ms))
    return ControlMessage(draw(st.integers(0, 2**32)), tuple(cmds))


# -- conformance vectors ----------------------------------------------------------

def test_minimal_measurement_bytes():
    assert encode_measurement(MeasurementMessage(1, 0)) == \
        b'<node id="1" t="0" if="zigbee"><layout/><data/></node>'


def test_control_bytes():
    buzz = ControlMessage(4, (Command(21, True, 30_000),))
    assert encode_control(buzz) == b'<control node="4"><act id="21" on="1" ms="30000"/></control>'
    assert encode_control(ControlMessage(4)) == b'<control node="4"/>'


def test_node5_window_bytes():
    msg = MeasurementMessage(5, 1000, (entry(73), entry(57)),
                             (RawSample(73, 1000, (374,)), RawSample(57, 1000, (24,))))
    assert encode_measurement(msg) == (GOLDEN / "node5-bedroom.xml").read_bytes()


def test_accelerometer_sample_has_three_values():
    msg = MeasurementMessage(2, 1000, (entry(83),), (RawSample(83, 33, (1, 2, 1023)),))
    assert b'<s id="83" t="33">1 2 1023</s>' in encode_measurement(msg)


@pytest.mark.parametrize("path", sorted(GOLDEN.glob("*.xml")), ids=lambda p: p.stem)
def test_golden_documents_are_fixed_points(path):
    data = path.read_bytes()
    msg = decode(data)
    encode = encode_control if isinstance(msg, ControlMessage) else encode_measurement
    assert encode(msg) == data


def test_golden_shapes():
    node5 = decode_measurement((GOLDEN / "node5-bedroom.xml").read_bytes())
    assert [e.kind for e in node5.layout] == ["temperature", "light"] and len(node5.samples) == 2
    node6 = decode_measurement((GOLDEN / "node6-pillow.xml").read_bytes())
    assert len(node6.samples) == 33
    assert len((GOLDEN / "node6-pillow.xml").read_bytes()) > len((GOLDEN / "node5-bedroom.xml").read_bytes())
    unplugged = decode_measurement((GOLDEN / "node5-light-unplugged.xml").read_bytes())
    assert {s.id for s in unplugged.samples} == {73}


# -- laws -------------------------------------------------------------------------------

@given(measurements())
def test_measurement_round_trip(msg):
    data = encode_measurement(msg)
    assert decode_measurement(data) == msg
    assert encode_measurement(decode_measurement(data)) == data
    assert payload_size(msg) == len(data)


@given(controls())
def test_control_round_trip(msg):
    data = encode_control(msg)
    assert decode_control(data) == msg == decode(data)
    assert payload_size(msg) == len(data)


@given(st.lists(measurements(max_samples=4), min_size=2, max_size=30))
def test_encoding_is_injective(msgs):
    by_bytes = {}
    for m in msgs:
        by_bytes.setdefault(encode_measurement(m), set()).add(m)
    assert all(len(v) == 1 for v in by_bytes.values())


@given(measurements(max_samples=10), st.data())
def test_size_grows_with_samples(msg, data):
    if not msg.samples:
        return
    k = data.draw(st.integers(0, len(msg.samples)))
    assert payload_size(msg._replace(samples=msg.samples[:k])) <= payload_size(msg)


@given(measurements(max_samples=6))
def test_whitespace_is_insignificant(msg):
    data = encode_measurement(msg).decode()
    spaced = data.replace("><", ">\n  <")
    assert decode_measurement(spaced.encode()) == msg


def test_whitespace_between_values_tolerated():
    doc = (b'<node id="2" t="1000" if="zigbee"><layout><tx id="83" kind="accel" status="running"/>'
           b'</layout><data><s id="83" t="1000"> 1  2\n3 </s></data></node>')
    assert decode_measurement(doc).samples[0].values == (1, 2, 3)


# -- rejection ---------------------------------------------------------------------------

BASE = (GOLDEN / "node1-kitchen.xml").read_bytes()


@pytest.mark.parametrize("doc,error", [
    (BASE[:40], MalformedXml),
    (b"", MalformedXml),
    (b"\xff\xfe<node/>", MalformedXml),
    (b"\xef\xbb\xbf" + BASE, SchemaViolation),
    (BASE.replace(b"<layout>", b"<layouts>").replace(b"</layout>", b"</layouts>"), SchemaViolation),
    (BASE.replace(b' if="zigbee"', b""), SchemaViolation),
    (BASE.replace(b'if="zigbee"', b'if="wifi"'), SchemaViolation),
    (BASE.replace(b'kind="co"', b'kind="smoke"'), SchemaViolation),
    (BASE.replace(b'status="running"', b'status="on"', 1), SchemaViolation),
    (BASE.replace(b'<node id="1"', b'<node id="01"'), SchemaViolation),
    (BASE.replace(b'<node id="1"', b'<node id="-1"'), SchemaViolation),
    (BASE.replace(b'<node id="1"', b'<node id="1" x="2"'), SchemaViolation),
    (BASE.replace(b'<data>', b'<data>junk'), SchemaViolation),
    (BASE.replace(b'kind="co"', b'kind="light"'), InvariantViolation),
    (BASE.replace(b'<s id="76"', b'<s id="77"'), InvariantViolation),
    (BASE.replace(b'<s id="76" t="1000"', b'<s id="76" t="1001"'), InvariantViolation),
    (BASE.replace(b'<s id="76" t="1000"', b'<s id="76" t="0"'), InvariantViolation),
    (BASE.replace(b'<tx id="76"', b'<tx id="60"'), InvariantViolation),
])
def test_typed_rejections(doc, error):
    with pytest.raises(error):
        decode(doc)


def test_sample_without_running_entry():
    stopped = BASE.replace(b'<tx id="76" kind="co" status="running"/>', b'<tx id="76" kind="co" status="stopped"/>')
    with pytest.raises(InvariantViolation):
        decode_measurement(stopped)


def test_out_of_range_value():
    doc = (GOLDEN / "node5-bedroom.xml").read_bytes().replace(b">374<", b">1024<")
    with pytest.raises(InvariantViolation):
        decode_measurement(doc)


@pytest.mark.parametrize("doc,error", [
    (b'<control node="4"><act id="21" on="1" ms="0"/></control>', InvariantViolation),
    (b'<control node="4"><act id="5" on="1" ms="30000"/></control>', InvariantViolation),
    (b'<control node="4"><act id="21" on="yes" ms="30000"/></control>', SchemaViolation),
    (b'<control node="4"><act id="21" on="1"/></control>', SchemaViolation),
    (b'<control node="4"><buzz id="21" on="1" ms="1"/></control>', SchemaViolation),
    (b'<control node="4"><act id="21" on="1" ms="1"/>', MalformedXml),
    (b'<control/>', SchemaViolation),
])
def test_control_rejections(doc, error):
    with pytest.raises(error):
        decode(doc)


def test_encoder_refuses_invalid_messages():
    with pytest.raises(InvariantViolation):
        encode_control(ControlMessage(4, (Command(21, True, 0),)))
    with pytest.raises(InvariantViolation):
        encode_measurement(MeasurementMessage(1, 1000, (entry(72),), (RawSample(41, 1000, (1,)),)))
    with pytest.raises(InvariantViolation):
        encode_measurement(MeasurementMessage(1, 1000, (entry(72),), (RawSample(72, 0, (1,)),)))


def test_errors_are_protocol_errors():
    for cls in (MalformedXml, SchemaViolation, InvariantViolation):
        assert issubclass(cls, ProtocolError)
