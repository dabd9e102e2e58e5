from conftest import home_run
from transducernet.energy import get_profile, traditional_equivalent
from transducernet.network import simulate
from transducernet.scenario import builtin_home
from transducernet.server import Store


def test_sample_conservation():
    run = home_run(10)
    assert run.samples_collected == run.samples_emitted == run.store.sample_count
    # 3 + 31 + 3 + 1 + 2 + 33 samples per second
    assert run.samples_collected == 73 * 600
    assert run.messages == 6 * 600 == run.store.record_count


def test_traditional_network_sends_only_from_sensors():
    run = home_run(10, traditional=True)
    senders = [n for n in run.energy.nodes if n.messages]
    assert len(senders) == 15 and all(n.messages == 600 for n in senders)
    assert run.samples_collected == home_run(10).samples_collected


def test_event_stream_is_reproducible():
    sc = builtin_home(horizon_ms=60_000)
    p = get_profile("zigbee-default")
    a = simulate(sc, p)
    b = simulate(sc, p)
    assert a.log.digest() == b.log.digest() and a.log.count == b.log.count
    # the seed moves sensor values, not the schedule
    c = simulate(sc, p, seed=8)
    assert c.log.digest() == a.log.digest()
    assert c.store.aggregates_csv() != a.store.aggregates_csv()


def test_tick_mode_is_equivalent():
    sc = builtin_home(horizon_ms=120_000)
    p = get_profile("zigbee-default")
    for scen in (sc, traditional_equivalent(sc)):
        a = simulate(scen, p, store=Store(keep_records=True))
        b = simulate(scen, p, store=Store(keep_records=True), tick_events=True)
        assert a.energy.to_csv() == b.energy.to_csv()
        assert [r.message for r in a.store.records] == [r.message for r in b.store.records]


def test_event_counts_match_closed_form():
    from transducernet.node import sample_offsets
    from transducernet.registry import kind_for_id

    seconds = 600
    sc = builtin_home(horizon_ms=seconds * 1000)
    p = get_profile("zigbee-default")
    # window ends land on offset 0, so only the other poll times need their own events
    ticks = sum(len({o for tx in n.layout for o in sample_offsets(kind_for_id(tx))} - {0})
                for n in sc.nodes)
    nodes = len(sc.nodes)
    for tick_events, sensor_ticks in ((False, 0), (True, ticks * seconds)):
        run = simulate(sc, p, tick_events=tick_events)
        by_tag = run.log.summary()["by_tag"]
        assert by_tag["WINDOW_END"] == nodes * seconds
        assert by_tag["SENSOR_TICK"] == sensor_ticks
        # the last window's reports land after the horizon and are drained without events
        assert by_tag["FRAME_DELIVERY"] == nodes * (seconds - 1)
        assert run.log.count == sum(by_tag.values())
