"""Star-topology ZigBee-class link model.

Frames carry at most ``max_payload_bytes`` of payload plus a fixed
per-frame header/trailer. The sender pays a wake-up cost per frame plus a
per-byte transmit cost; the receiver pays a per-byte receive cost. There is
no MAC contention model. Energies are held as exact integer picojoules.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, fields, replace
from fractions import Fraction
from typing import NamedTuple

PJ_PER_UJ = 1_000_000
SERVER = 0  # node id used for the central server


def to_pj(microjoules) -> int:
    """Exact µJ -> pJ conversion; refuses values finer than a picojoule."""
    value = Fraction(microjoules) * PJ_PER_UJ
    if value.denominator != 1:
        raise ValueError(f"{microjoules} µJ is not a whole number of picojoules")
    return int(value)


@dataclass(frozen=True)
class RadioParams:
    overhead_bytes: int = 15
    max_payload_bytes: int = 100
    data_rate_bps: int = 250_000
    tx_energy_uj_per_byte: Fraction = Fraction(5)
    rx_energy_uj_per_byte: Fraction = Fraction(5)
    wake_energy_uj: Fraction = Fraction(0)
    loss_rate: Fraction = Fraction(0)

    def __post_init__(self):
        for f in ("tx_energy_uj_per_byte", "rx_energy_uj_per_byte", "wake_energy_uj", "loss_rate"):
            object.__setattr__(self, f, Fraction(getattr(self, f)))
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ValueError(f"radio parameter {f.name} must be non-negative")
        if self.max_payload_bytes <= 0:
            raise ValueError("max_payload_bytes must be positive")
        if self.data_rate_bps <= 0:
            raise ValueError("data_rate_bps must be positive")
        if self.loss_rate > 1:
            raise ValueError("loss_rate is a probability")
        # validates picojoule exactness up front
        self.tx_pj_per_byte, self.rx_pj_per_byte, self.wake_pj

    @property
    def tx_pj_per_byte(self) -> int:
        return to_pj(self.tx_energy_uj_per_byte)

    @property
    def rx_pj_per_byte(self) -> int:
        return to_pj(self.rx_energy_uj_per_byte)

    @property
    def wake_pj(self) -> int:
        return to_pj(self.wake_energy_uj)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = str(v) if isinstance(v, Fraction) else v
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "RadioParams":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown radio parameters: {sorted(unknown)}")
        kwargs = {}
        for k, v in data.items():
            kwargs[k] = Fraction(v) if isinstance(v, str) else v
        return cls(**kwargs)

    def with_(self, **changes) -> "RadioParams":
        return replace(self, **changes)


class Frame(NamedTuple):
    src: int
    dst: int
    payload: bytes
    time_sent: int


class Transmission(NamedTuple):
    frames: int
    wire_bytes: int
    delivery_time: int
    tx_pj: int
    rx_pj: int
    delivered: bool


def fragment(payload: bytes, params: RadioParams) -> list[bytes]:
    """Split a payload into frame-sized slices; an empty payload still takes one frame."""
    step = params.max_payload_bytes
    if not payload:
        return [b""]
    return [payload[i:i + step] for i in range(0, len(payload), step)]


def frame_count(n_bytes: int, params: RadioParams) -> int:
    return max(1, -(-n_bytes // params.max_payload_bytes))


def airtime_ms(wire_bytes: int, params: RadioParams) -> int:
    return -(-wire_bytes * 8 * 1000 // params.data_rate_bps)


def frames_energy_pj(slices: list[bytes], params: RadioParams) -> tuple[int, int]:
    """Per-frame (tx, rx) debits summed over a frame set."""
    tx = rx = 0
    for s in slices:
        n = len(s) + params.overhead_bytes
        tx += params.wake_pj + params.tx_pj_per_byte * n
        rx += params.rx_pj_per_byte * n
    return tx, rx


def transmit(frames: list[Frame], params: RadioParams, clock: int,
             rng: random.Random | None = None) -> Transmission:
    """Cost and delivery time for one burst of frames sent back to back.

    Delivery happens once the last frame has gone out. Loss is decided per
    burst: any lost frame loses the whole message, since there are no
    retransmissions.
    """
    slices = [f.payload for f in frames]
    tx, rx = frames_energy_pj(slices, params)
    wire = sum(len(s) for s in slices) + params.overhead_bytes * len(slices)
    delivered = True
    if params.loss_rate and rng is not None:
        delivered = all(rng.random() >= params.loss_rate for _ in slices)
    return Transmission(len(slices), wire, clock + airtime_ms(wire, params), tx, rx, delivered)


class Radio:
    """Shared channel with traffic counters; one per simulated network."""

    def __init__(self, params: RadioParams, rng: random.Random | None = None):
        self.params = params
        self.rng = rng
        self.frames_sent = 0
        self.bytes_sent = 0
        self.bytes_received = 0
        self.messages_sent = 0
        self.messages_lost = 0
        # cache: payload length -> (frames, wire bytes, airtime, tx pj, rx pj)
        self._cost_cache: dict[int, tuple[int, int, int, int, int]] = {}

    def _cost(self, n: int) -> tuple[int, int, int, int, int]:
        cost = self._cost_cache.get(n)
        if cost is None:
            p = self.params
            frames = frame_count(n, p)
            wire = n + p.overhead_bytes * frames
            tx = p.wake_pj * frames + p.tx_pj_per_byte * wire
            rx = p.rx_pj_per_byte * wire
            cost = self._cost_cache[n] = (frames, wire, airtime_ms(wire, p), tx, rx)
        return cost

    def send(self, payload: bytes, clock: int) -> Transmission:
        frames, wire, air, tx, rx = self._cost(len(payload))
        delivered = True
        if self.params.loss_rate and self.rng is not None:
            delivered = all(self.rng.random() >= self.params.loss_rate for _ in range(frames))
        self.messages_sent += 1
        self.frames_sent += frames
        self.bytes_sent += wire
        if delivered:
            self.bytes_received += wire
        else:
            self.messages_lost += 1
        return Transmission(frames, wire, clock + air, tx, rx, delivered)
