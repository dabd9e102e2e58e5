"""Central server: ingest, persistence, the sit rule and heatmap export."""

from __future__ import annotations

import csv
import io
import json
import logging
from operator import add
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, NamedTuple

from .errors import EmptyStore, ProtocolError
from .protocol import RUNNING, Command, ControlMessage, MeasurementMessage, decode_measurement
from .registry import TransducerKind, kind_for_id, spec_for_kind
from .scenario import SitBinding

log = logging.getLogger(__name__)

SIT_THRESHOLD_MS = 1_800_000
BUZZ_MS = 30_000
MINUTE_MS = 60_000
WINDOW_MS = 1_000
AXIS_NAMES = ("x", "y", "z")


class Record(NamedTuple):
    record_id: int
    receive_time: int
    message: MeasurementMessage


# -- sit rule -----------------------------------------------------------------

@dataclass
class SitRuleState:
    binding: SitBinding
    continuous_positive_since: int | None = None
    last_buzz_at: int | None = None


def sit_rule(state: SitRuleState, pressure_reading: int, time: int) -> ControlMessage | None:
    """Buzz once pressure has stayed above zero for 30 minutes, and again
    every 30 minutes while it stays there. Any zero reading resets."""
    if pressure_reading <= 0:
        state.continuous_positive_since = None
        state.last_buzz_at = None
        return None
    if state.continuous_positive_since is None:
        state.continuous_positive_since = time
    anchor = state.last_buzz_at if state.last_buzz_at is not None else state.continuous_positive_since
    if time - anchor < SIT_THRESHOLD_MS:
        return None
    state.last_buzz_at = time
    b = state.binding
    return ControlMessage(b.actuator_node, (Command(b.actuator_id, True, BUZZ_MS),))


# -- store --------------------------------------------------------------------

@dataclass
class ChannelAgg:
    """Per-minute sums for one sensor; minute m covers (m, m+1] minutes."""

    node_id: int
    tx_id: int
    axes: int
    counts: dict[int, int] = field(default_factory=dict)
    sums: dict[int, list[int]] = field(default_factory=dict)


class Store:
    """Append-only record log with a per-(node, transducer) index.

    Messages are committed in ``(timestamp, node_id)`` order: ingested
    messages wait in a small reorder buffer until a message from a later
    reporting window arrives (or :meth:`flush` is called).
    """

    def __init__(self, keep_records: bool = False, records_sink: IO[str] | None = None,
                 samples_sink: IO[str] | None = None):
        self.keep_records = keep_records
        self.records: list[Record] = []
        self.index: dict[tuple[int, int], list[int]] = {}
        self.records_sink = records_sink
        self.samples_sink = samples_sink
        if samples_sink is not None:
            samples_sink.write("node_id,tx_id,timestamp_ms,axis,value\n")
        self.record_count = 0
        self.sample_count = 0
        self.reject_count = 0
        self.rejects: list[tuple[int, str]] = []
        self.out_of_order = 0
        self.layout_changes: list[tuple[int, int, int, str | None, str | None]] = []
        self.channels: dict[tuple[int, int], ChannelAgg] = {}
        self.max_timestamp = 0
        self._layouts: dict[int, dict[int, str]] = {}
        self._layout_raw: dict[int, tuple] = {}
        self._pending: list[tuple[int, int, int, int, bytes, MeasurementMessage]] = []
        self._pending_t: int | None = None
        self._watermark = -1
        self._next_id = 0

    def __len__(self) -> int:
        return self.record_count

    def accept(self, raw: bytes, msg: MeasurementMessage, receive_time: int) -> int:
        rid = self._next_id
        self._next_id += 1
        t = msg.timestamp_ms
        if self._pending_t is not None and t > self._pending_t:
            self.flush()
        if t < self._watermark:
            self.out_of_order += 1
            self._commit(rid, receive_time, raw, msg)
            return rid
        self._pending.append((t, msg.node_id, rid, receive_time, raw, msg))
        self._pending_t = t if self._pending_t is None else max(self._pending_t, t)
        return rid

    def reject(self, receive_time: int, reason: str) -> None:
        self.reject_count += 1
        self.rejects.append((receive_time, reason))
        log.warning("rejected message at %d: %s", receive_time, reason)

    def flush(self) -> None:
        if not self._pending:
            return
        self._pending.sort(key=lambda p: (p[0], p[1], p[2]))
        for t, _, rid, rx, raw, msg in self._pending:
            self._commit(rid, rx, raw, msg)
        self._watermark = self._pending[-1][0]
        self._pending = []
        self._pending_t = None

    def _commit(self, rid: int, receive_time: int, raw: bytes, msg: MeasurementMessage) -> None:
        self.record_count += 1
        node = msg.node_id
        if msg.timestamp_ms > self.max_timestamp:
            self.max_timestamp = msg.timestamp_ms
        if self.records_sink is not None:
            self.records_sink.write(f"{rid}\t{receive_time}\t{raw.decode()}\n")
        if self.keep_records:
            self.records.append(Record(rid, receive_time, msg))
        if self._layout_raw.get(node) != msg.layout:
            self._layout_raw[node] = msg.layout
            self._note_layout(node, msg)
        samples = msg.samples
        if not samples:
            return
        self.sample_count += len(samples)
        channels = self.channels
        t_hi = msg.timestamp_ms
        if (t_hi - 1) // MINUTE_MS == (t_hi - WINDOW_MS) // MINUTE_MS:
            # the whole window lies in one minute bin: sum per channel at once
            m = (t_hi - 1) // MINUTE_MS
            groups: dict[int, list] = {}
            for s in samples:
                g = groups.get(s.id)
                if g is None:
                    groups[s.id] = [s.values]
                else:
                    g.append(s.values)
            for tx, g in groups.items():
                agg = channels[(node, tx)]
                sums = list(map(sum, zip(*g)))
                if m in agg.counts:
                    agg.counts[m] += len(g)
                    agg.sums[m] = list(map(add, agg.sums[m], sums))
                else:
                    agg.counts[m] = len(g)
                    agg.sums[m] = sums
        else:
            for s in samples:
                agg = channels[(node, s.id)]
                m = (s.time - 1) // MINUTE_MS
                if m in agg.counts:
                    agg.counts[m] += 1
                    agg.sums[m] = list(map(add, agg.sums[m], s.values))
                else:
                    agg.counts[m] = 1
                    agg.sums[m] = list(s.values)
        sink = self.samples_sink
        if sink is not None:
            sink.write("".join([
                f"{node},{s.id},{s.time},{axis},{v}\n"
                for s in samples for axis, v in enumerate(s.values)
            ]))
        if self.keep_records:
            index = self.index
            for s in samples:
                index.setdefault((node, s.id), []).append(rid)

    def _note_layout(self, node: int, msg: MeasurementMessage) -> None:
        prev = self._layouts.get(node) or {}
        current = {e.id: e.status for e in msg.layout}
        for tx in list(prev) + [k for k in current if k not in prev]:
            if prev.get(tx) != current.get(tx):
                self.layout_changes.append((msg.timestamp_ms, node, tx, prev.get(tx), current.get(tx)))
        self._layouts[node] = current
        for e in msg.layout:
            spec = spec_for_kind(kind_for_id(e.id))
            if not spec.is_actuator and (node, e.id) not in self.channels:
                self.channels[(node, e.id)] = ChannelAgg(node, e.id, spec.axes)

    # -- persistence ----------------------------------------------------------

    def aggregates_csv(self) -> str:
        buf = io.StringIO()
        buf.write("node_id,tx_id,axes,minute,count,sums\n")
        for (node, tx), agg in self.channels.items():
            for m in sorted(agg.counts):
                buf.write(f"{node},{tx},{agg.axes},{m},{agg.counts[m]},"
                          f"{' '.join(map(str, agg.sums[m]))}\n")
        return buf.getvalue()

    def meta(self) -> dict:
        return {
            "records": self.record_count,
            "samples": self.sample_count,
            "rejects": self.reject_count,
            "out_of_order": self.out_of_order,
            "max_timestamp_ms": self.max_timestamp,
            "channels": [[n, t] for (n, t) in self.channels],
            "layout_changes": [list(c) for c in self.layout_changes],
        }

    def save(self, directory: Path) -> dict[str, Path]:
        self.flush()
        directory = Path(directory)
        paths = {"aggregates": directory / "minutes.csv", "store": directory / "store.json"}
        paths["aggregates"].write_text(self.aggregates_csv())
        paths["store"].write_text(json.dumps(self.meta(), indent=2) + "\n")
        return paths

    @classmethod
    def load_aggregates(cls, directory: Path) -> "Store":
        """Rebuild an index-only store from a saved run (enough for heatmaps)."""
        directory = Path(directory)
        store = cls()
        meta = json.loads((directory / "store.json").read_text())
        store.record_count = meta["records"]
        store.sample_count = meta["samples"]
        store.max_timestamp = meta["max_timestamp_ms"]
        for node, tx in meta["channels"]:
            store.channels[(node, tx)] = ChannelAgg(node, tx, spec_for_kind(kind_for_id(tx)).axes)
        with open(directory / "minutes.csv", newline="") as fh:
            for row in csv.DictReader(fh):
                agg = store.channels[(int(row["node_id"]), int(row["tx_id"]))]
                m = int(row["minute"])
                agg.counts[m] = int(row["count"])
                agg.sums[m] = [int(v) for v in row["sums"].split()]
        return store


# -- server -------------------------------------------------------------------

class Server:
    def __init__(self, store: Store | None = None, sit_rules: Iterable[SitBinding] = ()):
        self.store = store if store is not None else Store()
        self.rules: dict[tuple[int, int], SitRuleState] = {
            (b.sensor_node, b.sensor_id): SitRuleState(b) for b in sit_rules
        }
        self._rule_nodes = {node for node, _ in self.rules}
        self.controls_sent: list[tuple[int, ControlMessage]] = []

    def ingest(self, data: bytes, receive_time: int) -> int | None:
        """Decode and store one message; returns the record id, or None if rejected."""
        try:
            msg = decode_measurement(data)
        except ProtocolError as exc:
            self.store.reject(receive_time, f"{type(exc).__name__}: {exc}")
            return None
        return self.store.accept(data, msg, receive_time)

    def receive(self, data: bytes, receive_time: int) -> list[ControlMessage]:
        """Ingest a message and run the sit rule over its pressure readings."""
        try:
            msg = decode_measurement(data)
        except ProtocolError as exc:
            self.store.reject(receive_time, f"{type(exc).__name__}: {exc}")
            return []
        self.store.accept(data, msg, receive_time)
        out = []
        if msg.node_id in self._rule_nodes:
            node = msg.node_id
            for s in msg.samples:
                state = self.rules.get((node, s.id))
                if state is not None:
                    ctrl = sit_rule(state, s.values[0], s.time)
                    if ctrl is not None:
                        out.append(ctrl)
                        self.controls_sent.append((s.time, ctrl))
        return out


# -- heatmap ------------------------------------------------------------------

@dataclass(frozen=True)
class Heatmap:
    rows: tuple[str, ...]
    columns: tuple[str, ...]
    values: tuple[tuple[float, ...], ...]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["channel", *self.columns])
        for label, row in zip(self.rows, self.values):
            w.writerow([label, *(f"{v:.6f}" for v in row)])
        return buf.getvalue()

    def to_pgm(self, cell: int = 8) -> bytes:
        """Binary greymap: white for a row's minimum, black for its maximum."""
        width, height = len(self.columns) * cell, len(self.rows) * cell
        out = bytearray(f"P5\n{width} {height}\n255\n".encode())
        for row in self.values:
            line = bytearray()
            for v in row:
                line += bytes([255 - round(255 * v)]) * cell
            out += bytes(line) * cell
        return bytes(out)


def _row_label(node: int, tx: int, axis: int | None) -> str:
    base = f"n{node}.{kind_for_id(tx).token}{tx}"
    return base if axis is None else f"{base}.{AXIS_NAMES[axis]}"


def heatmap_export(store: Store, bin_minutes: int, horizon_ms: int | None = None) -> Heatmap:
    """Time-binned, per-row min-max normalised means of every sensor channel.

    Rows are node-major, sensor-minor (in layout order), one row per axis.
    A bin covers ``(k*B, (k+1)*B]``. Rows whose bin means are all equal are
    all zero, and so are bins without samples.
    """
    store.flush()
    if not store.channels or store.sample_count == 0:
        raise EmptyStore("no samples to export")
    if bin_minutes <= 0:
        raise ValueError("bin_minutes must be positive")
    if horizon_ms is None:
        horizon_ms = -(-store.max_timestamp // MINUTE_MS) * MINUTE_MS
    bin_ms = bin_minutes * MINUTE_MS
    if horizon_ms % bin_ms:
        raise ValueError(f"{bin_minutes}-minute bins do not divide a {horizon_ms} ms horizon")
    n_bins = horizon_ms // bin_ms
    columns = tuple(f"{(k * bin_minutes) // 60:02d}:{(k * bin_minutes) % 60:02d}" for k in range(n_bins))
    labels, values = [], []
    for node, tx in sorted(store.channels, key=lambda k: k[0]):
        agg = store.channels[(node, tx)]
        counts = [0] * n_bins
        sums = [[0] * n_bins for _ in range(agg.axes)]
        for m, c in agg.counts.items():
            b = m // bin_minutes
            if 0 <= b < n_bins:
                counts[b] += c
                for a, v in enumerate(agg.sums[m]):
                    sums[a][b] += v
        for a in range(agg.axes):
            means = [sums[a][b] / counts[b] if counts[b] else None for b in range(n_bins)]
            present = [m for m in means if m is not None]
            lo, hi = (min(present), max(present)) if present else (0.0, 0.0)
            if hi > lo:
                row = tuple(0.0 if m is None else (m - lo) / (hi - lo) for m in means)
            else:
                row = (0.0,) * n_bins
            labels.append(_row_label(node, tx, a if agg.axes > 1 else None))
            values.append(row)
    return Heatmap(tuple(labels), columns, tuple(values))
