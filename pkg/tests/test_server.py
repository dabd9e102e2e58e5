import pytest
from hypothesis import given, strategies as st

from conftest import home_run
from transducernet.bus import RawSample
from transducernet.errors import EmptyStore
from transducernet.protocol import Command, LayoutEntry, MeasurementMessage, encode_measurement
from transducernet.scenario import SitBinding
from transducernet.server import (
    BUZZ_MS, SIT_THRESHOLD_MS, Server, SitRuleState, Store, heatmap_export, sit_rule,
)

CHAIR = SitBinding(4, 5, 4, 24)


def readings(state, pairs):
    return [(t, c) for v, t in pairs if (c := sit_rule(state, v, t)) is not None]


def test_sit_rule_threshold():
    s = SitRuleState(CHAIR)
    assert readings(s, [(600, 0), (600, 1_799_000)]) == []
    fired = readings(s, [(600, 1_800_000)])
    assert [t for t, _ in fired] == [1_800_000]
    assert fired[0][1].commands == (Command(24, True, BUZZ_MS),)


def test_sit_rule_repeats_and_resets():
    s = SitRuleState(CHAIR)
    fired = readings(s, [(600, t) for t in range(0, 4_000_001, 1000)])
    assert [t for t, _ in fired] == [1_800_000, 3_600_000]
    assert readings(s, [(0, 4_001_000), (600, 4_002_000), (600, 5_801_000)]) == []


@given(st.lists(st.tuples(st.integers(0, 3), st.integers(1, 400)), min_size=1, max_size=200))
def test_sit_rule_oracle(steps):
    """Against a direct recount: buzz at every multiple of the threshold into a positive run."""
    s = SitRuleState(CHAIR)
    t = 0
    start = None
    expect, got = [], []
    for zero, gap in steps:
        t += gap * 10_000
        v = 0 if zero == 0 else 500
        if v == 0:
            start = None
        else:
            if start is None:
                start, last = t, t
            if t - last >= SIT_THRESHOLD_MS:
                expect.append(t)
                last = t
        if sit_rule(s, v, t) is not None:
            got.append(t)
    assert got == expect


def message(node, t, tx, value):
    layout = (LayoutEntry(tx, "pressure", "running"),)
    return MeasurementMessage(node, t, layout, (RawSample(tx, t, (value,)),))


def test_store_orders_within_a_window():
    store = Store(keep_records=True)
    server = Server(store)
    for node in (3, 1, 2):
        server.ingest(encode_measurement(message(node, 1000, node, 5)), 1010)
    server.ingest(encode_measurement(message(1, 2000, 1, 5)), 2010)
    store.flush()
    assert [(r.message.timestamp_ms, r.message.node_id) for r in store.records] == \
        [(1000, 1), (1000, 2), (1000, 3), (2000, 1)]
    assert [r.record_id for r in store.records] == [1, 2, 0, 3]
    assert store.index[(2, 2)] == [2]


def test_rejects_are_counted_not_stored():
    server = Server(Store(keep_records=True))
    assert server.ingest(b"<node", 5) is None
    assert server.receive(b'<node id="1" t="0" if="zigbee"><layout/><data/>', 6) == []
    assert server.store.reject_count == 2 and len(server.store) == 0
    assert server.store.rejects[0][1].startswith("MalformedXml")


def test_server_buzzes_through_receive():
    server = Server(Store(), [CHAIR])
    out = []
    for t in range(1000, SIT_THRESHOLD_MS + 1001, 1000):
        out += server.receive(encode_measurement(message(4, t, 5, 650)), t + 5)
    assert len(out) == 1 and server.controls_sent[0][0] == SIT_THRESHOLD_MS + 1000


def test_heatmap_properties():
    run = home_run(20, keep=False)
    hm = heatmap_export(run.store, 5, run.horizon_ms)
    assert len(hm.columns) == 4 and hm.columns[1] == "00:05"
    # one row per sensor axis: 17 sensor ids, two of them three-axis
    assert len(hm.rows) == 19
    assert all(0.0 <= v <= 1.0 for row in hm.values for v in row)
    assert all(min(row) == 0.0 for row in hm.values)
    assert all(max(row) == 1.0 for row in hm.values if any(row))
    assert "n2.accel83.z" in hm.rows
    pgm = hm.to_pgm(cell=2)
    assert pgm.startswith(b"P5\n8 38\n255\n") and len(pgm) == len(b"P5\n8 38\n255\n") + 8 * 38


def test_heatmap_errors():
    with pytest.raises(EmptyStore):
        heatmap_export(Store(), 60)
    run = home_run(20, keep=False)
    with pytest.raises(ValueError):
        heatmap_export(run.store, 7, run.horizon_ms)


def test_aggregates_reload(tmp_path):
    run = home_run(20, keep=False)
    run.store.save(tmp_path)
    again = Store.load_aggregates(tmp_path)
    assert again.aggregates_csv() == run.store.aggregates_csv()
    assert heatmap_export(again, 10, run.horizon_ms) == heatmap_export(run.store, 10, run.horizon_ms)
