import pytest
from hypothesis import given, strategies as st

from transducernet.errors import DuplicateId, UnassignedId
from transducernet.registry import (
    KIND_BY_ID, TransducerKind as K, all_specs, is_valid_id, kind_for_id, spec_for_id,
    spec_for_kind, validate_layout,
)

# reserved ranges from the catalog table
RANGES = {
    K.PRESSURE: set(range(1, 21)),
    K.VIBRO_ACTUATOR: set(range(21, 41)),
    K.LIGHT: {41, 57},
    K.TEMPERATURE: set(range(72, 76)),
    K.CO_GAS: set(range(76, 79)),
    K.ACCELEROMETER: {83, 84},
    K.FLEX: set(range(85, 91)),
}


def test_seven_kinds_with_disjoint_ranges():
    assert len(K) == 7
    seen = set()
    for spec in all_specs():
        ids = set(spec.ids)
        assert ids == RANGES[spec.kind]
        assert not ids & seen
        seen |= ids


@pytest.mark.parametrize("tx_id,kind", [(5, K.PRESSURE), (30, K.VIBRO_ACTUATOR),
                                        (84, K.ACCELEROMETER), (41, K.LIGHT), (57, K.LIGHT),
                                        (76, K.CO_GAS), (90, K.FLEX)])
def test_kind_for_id(tx_id, kind):
    assert kind_for_id(tx_id) is kind


@pytest.mark.parametrize("tx_id", [0, 42, 50, 56, 58, 60, 71, 79, 82, 91, 255, 256, -1])
def test_unassigned_ids(tx_id):
    with pytest.raises(UnassignedId):
        kind_for_id(tx_id)
    assert not is_valid_id(tx_id)


def test_exhaustive_id_space():
    for tx_id in range(1, 256):
        owners = [k for k, ids in RANGES.items() if tx_id in ids]
        if owners:
            assert kind_for_id(tx_id) is owners[0] and len(owners) == 1
        else:
            with pytest.raises(UnassignedId):
                kind_for_id(tx_id)


def test_every_id_round_trips_through_its_spec():
    for spec in all_specs():
        for tx_id in spec.ids:
            assert kind_for_id(tx_id) is spec.kind
            assert spec_for_id(tx_id) is spec


def test_sampling_rates_and_axes():
    for spec in all_specs():
        assert spec.is_actuator == (spec.kind is K.VIBRO_ACTUATOR)
        if spec.is_actuator:
            assert spec.sampling_rate_hz is None
        elif spec.kind is K.ACCELEROMETER:
            assert spec.sampling_rate_hz == 30 and spec.axes == 3
        else:
            assert spec.sampling_rate_hz == 1 and spec.axes == 1
        if not spec.is_actuator:
            assert spec.value_range == (0, 1023)


def test_spec_for_kind_examples():
    t = spec_for_kind(K.TEMPERATURE)
    assert (t.sampling_rate_hz, t.axes) == (1, 1)
    a = spec_for_kind(K.ACCELEROMETER)
    assert (a.sampling_rate_hz, a.axes) == (30, 3)
    assert spec_for_kind(K.VIBRO_ACTUATOR).is_actuator


def test_validate_layout():
    assert validate_layout([72, 41, 76]) == [(72, K.TEMPERATURE), (41, K.LIGHT), (76, K.CO_GAS)]
    assert validate_layout([]) == []
    with pytest.raises(DuplicateId):
        validate_layout([5, 5])
    with pytest.raises(UnassignedId):
        validate_layout([5, 60])


@given(st.lists(st.sampled_from(sorted(KIND_BY_ID)), unique=True))
def test_validate_layout_preserves_order(ids):
    assert [i for i, _ in validate_layout(ids)] == ids


def test_registry_is_read_only():
    with pytest.raises(TypeError):
        KIND_BY_ID[42] = K.LIGHT
