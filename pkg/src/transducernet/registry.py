"""Catalog of plug-and-play transducer kinds and their reserved ID ranges.

IDs are burned into each transducer at manufacture, so the catalog is fixed
for the lifetime of a network.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from types import MappingProxyType
from typing import Iterable

from .errors import DuplicateId, UnassignedId

MIN_ID = 1
MAX_ID = 255


class TransducerKind(enum.Enum):
    PRESSURE = "pressure"
    VIBRO_ACTUATOR = "vibro"
    LIGHT = "light"
    TEMPERATURE = "temperature"
    CO_GAS = "co"
    ACCELEROMETER = "accel"
    FLEX = "flex"

    @property
    def token(self) -> str:
        return self.value

    @classmethod
    def from_token(cls, token: str) -> "TransducerKind":
        return _BY_TOKEN[token]


_BY_TOKEN = {k.value: k for k in TransducerKind}


@dataclass(frozen=True)
class TransducerSpec:
    kind: TransducerKind
    ids: tuple[int, ...]
    sampling_rate_hz: Fraction | None
    axes: int
    value_range: tuple[int, int]
    is_actuator: bool

    def __contains__(self, tx_id: int) -> bool:
        return tx_id in self.ids

    @property
    def id_range(self) -> tuple[int, int]:
        return self.ids[0], self.ids[-1]


ADC_RANGE = (0, 1023)


def _span(lo: int, hi: int) -> tuple[int, ...]:
    return tuple(range(lo, hi + 1))


def _sensor(kind, ids, hz=1, axes=1):
    return TransducerSpec(kind, ids, Fraction(hz), axes, ADC_RANGE, False)


_SPECS = MappingProxyType({
    TransducerKind.PRESSURE: _sensor(TransducerKind.PRESSURE, _span(1, 20)),
    TransducerKind.VIBRO_ACTUATOR: TransducerSpec(
        TransducerKind.VIBRO_ACTUATOR, _span(21, 40), None, 1, (0, 1), True
    ),
    # the two light IDs are not contiguous
    TransducerKind.LIGHT: _sensor(TransducerKind.LIGHT, (41, 57)),
    TransducerKind.TEMPERATURE: _sensor(TransducerKind.TEMPERATURE, _span(72, 75)),
    TransducerKind.CO_GAS: _sensor(TransducerKind.CO_GAS, _span(76, 78)),
    TransducerKind.ACCELEROMETER: _sensor(
        TransducerKind.ACCELEROMETER, _span(83, 84), hz=30, axes=3
    ),
    TransducerKind.FLEX: _sensor(TransducerKind.FLEX, _span(85, 90)),
})

KIND_BY_ID = MappingProxyType(
    {tx_id: spec.kind for spec in _SPECS.values() for tx_id in spec.ids}
)


def kind_for_id(tx_id: int) -> TransducerKind:
    """Resolve a transducer ID to its kind.

    Raises UnassignedId for IDs that no kind reserves (e.g. 42-56).
    """
    try:
        return KIND_BY_ID[tx_id]
    except (KeyError, TypeError):
        raise UnassignedId(f"transducer id {tx_id!r} is not assigned to any kind") from None


def spec_for_kind(kind: TransducerKind) -> TransducerSpec:
    return _SPECS[kind]


def spec_for_id(tx_id: int) -> TransducerSpec:
    return _SPECS[kind_for_id(tx_id)]


def is_valid_id(tx_id: int) -> bool:
    return tx_id in KIND_BY_ID


def all_specs() -> tuple[TransducerSpec, ...]:
    return tuple(_SPECS.values())


def validate_layout(ids: Iterable[int]) -> list[tuple[int, TransducerKind]]:
    """Resolve every ID in order; reject unknown or repeated IDs."""
    seen = set()
    resolved = []
    for tx_id in ids:
        kind = kind_for_id(tx_id)
        if tx_id in seen:
            raise DuplicateId(f"transducer id {tx_id} appears more than once")
        seen.add(tx_id)
        resolved.append((tx_id, kind))
    return resolved
