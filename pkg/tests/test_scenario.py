import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from transducernet.errors import ParseError, UnknownChannel, ValidationError
from transducernet.scenario import (
    Burst, Constant, Diurnal, HotPlug, Noise, Occupancy, Windows, builtin_home, channel_samplers,
    compile_generator, from_json_dict, load_scenario, sample_channel, serialize, to_json_dict,
    validate,
)

HOME = builtin_home()


def hour(h):
    return int(h * 3_600_000)


def test_builtin_home_shape():
    assert [len(n.layout) for n in HOME.nodes] == [3, 2, 6, 2, 2, 4]
    assert HOME.transducer_count() == 19
    assert HOME.horizon_ms == 86_400_000


def test_co_is_high_only_in_cooking_windows():
    for h in (10.5, 11.9, 20.2):
        assert sample_channel(HOME, "kitchen.co", hour(h))[0] > 800
    for h in (3, 9.9, 12.1, 19.9, 21.1):
        assert sample_channel(HOME, "kitchen.co", hour(h))[0] < 100


def test_occupancy_is_exactly_zero_when_absent():
    assert sample_channel(HOME, "chair.seat", hour(8)) == [0]
    assert sample_channel(HOME, "chair.seat", hour(9.5))[0] > 600


def test_sampling_is_pure():
    a = sample_channel(HOME, "fridge.door", hour(7.25) + 100)
    assert a == sample_channel(HOME, "fridge.door", hour(7.25) + 100) and len(a) == 3
    seeds = {tuple(sample_channel(HOME, "kitchen.light", hour(9), seed=k)) for k in range(20)}
    assert len(seeds) > 1


def test_unknown_channel():
    with pytest.raises(UnknownChannel):
        sample_channel(HOME, "garage.door", 0)


GENS = [
    Constant(5), Constant(7, axes=3), Diurnal(400, 50, 15), Windows(1, 9, ((10, 12), (20, 21))),
    Occupancy(((9, 9.75),), 650, jitter=15), Burst((1000, 50_000), 280, (512, 512, 768), 6000),
    Noise(4, Diurnal(400, 50, 15)), Noise(3, Burst((10,), 100, (1, 2, 3))),
]


@pytest.mark.parametrize("gen", GENS, ids=lambda g: type(g).__name__)
@given(times=st.lists(st.integers(0, 3 * 86_400_000), min_size=1, max_size=50))
def test_batch_matches_scalar(gen, times):
    f = compile_generator(gen, 12345)
    batch = getattr(f, "batch", None)
    if batch is None:
        return
    got = batch(np.array(times, dtype=np.int64)).tolist()
    assert [list(r) for r in got] == [list(f(t)) for t in times]


def test_serialize_round_trip():
    data = serialize(HOME)
    again = load_scenario(data)
    assert again == HOME and serialize(again) == data
    assert channel_samplers(again)["pillow.motion"](123) == channel_samplers(HOME)["pillow.motion"](123)


def broken(mutate):
    doc = to_json_dict(HOME)
    mutate(doc)
    return doc


@pytest.mark.parametrize("mutate,field", [
    (lambda d: d["nodes"][0]["layout"].__setitem__(0, 60), "nodes[0].layout[0]"),
    (lambda d: d["nodes"][1]["layout"].append(72), "nodes[node_id=2].layout"),
    (lambda d: d["channels"].pop("chair.seat"), "nodes[3].bindings.5"),
    (lambda d: d["nodes"][2].__setitem__("node_id", 1), "nodes[2].node_id"),
])
def test_validation_names_the_field(mutate, field):
    with pytest.raises(ValidationError) as err:
        from_json_dict(broken(mutate))
    assert err.value.path == field


def test_hotplug_validation():
    with pytest.raises(ValidationError):
        validate(HOME.with_(hotplug=(HotPlug(10, 5, "attach", 57),)))
    with pytest.raises(ValidationError):
        validate(HOME.with_(hotplug=(HotPlug(10, 5, "unplug", 57),)))
    with pytest.raises(ValidationError):
        validate(HOME.with_(hotplug=(HotPlug(20, 5, "detach", 57), HotPlug(10, 5, "attach", 57))))


def test_parse_errors():
    with pytest.raises((ParseError, ValidationError)):
        load_scenario(b"{not json")
    with pytest.raises((ParseError, ValidationError)):
        load_scenario(json.dumps({"nodes": []}))
