"""Event streams, binning schemes and history-embedded samples.

Times are real-valued seconds measured from the observation window origin.
A bin ``(b, a]`` is occupied when at least one event falls inside it; bins
are left-open and right-closed, so an event sitting exactly on the window
origin belongs to no bin.

Two code paths produce the joint history statistics of a (target, source)
pair.  :func:`history_samples` materializes one row per evaluation time and
is meant for inspection and cross-checking.  :func:`history_counts` computes
the same outcome counts from the occupancy intervals of each bit, which
costs ``O(events)`` instead of ``O(window / stride)`` and is what the
estimators use on long windows.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

logger = logging.getLogger(__name__)

MINUTE = 60.0
HOUR = 3600.0
DAY = 86400.0

# slack when counting evaluation times that fit in a window, to absorb
# representation error in quotients like 0.3 / 0.1
_GRID_EPS = 1e-12


class EventFormatError(ValueError):
    """Raised for malformed rows in an event file."""


class InsufficientWindowError(ValueError):
    """Raised when the observation window is shorter than the history span."""


@dataclass(frozen=True, eq=False)
class EventStream:
    """Ordered event times of one node.

    Parameters
    ----------
    node_id : str
        Node identifier.
    events : array_like
        Strictly increasing timestamps in seconds.
    item_ids : sequence of str, optional
        Per-event item identifiers used for cascade tracing.
    horizon : float, optional
        End ``T`` of the observation window ``[0, T]``. Defaults to the last
        event time (or 0 for an empty stream).
    """

    node_id: str
    events: np.ndarray
    item_ids: tuple[str, ...] | None = None
    horizon: float | None = None

    def __post_init__(self):
        ev = np.asarray(self.events, dtype=np.float64).reshape(-1)
        ev.setflags(write=False)
        object.__setattr__(self, "events", ev)
        if ev.size and not np.all(np.isfinite(ev)):
            raise ValueError(f"stream {self.node_id!r}: non-finite timestamp")
        if ev.size > 1 and not np.all(np.diff(ev) > 0):
            raise ValueError(f"stream {self.node_id!r}: timestamps must be strictly increasing")
        if ev.size and ev[0] < 0:
            raise ValueError(f"stream {self.node_id!r}: timestamp before window origin")
        if self.item_ids is not None:
            items = tuple(str(i) for i in self.item_ids)
            if len(items) != ev.size:
                raise ValueError(f"stream {self.node_id!r}: item_ids length mismatch")
            object.__setattr__(self, "item_ids", items)
        if self.horizon is None:
            object.__setattr__(self, "horizon", float(ev[-1]) if ev.size else 0.0)
        else:
            object.__setattr__(self, "horizon", float(self.horizon))
            if ev.size and ev[-1] > self.horizon:
                raise ValueError(f"stream {self.node_id!r}: timestamp beyond horizon {self.horizon}")

    def __len__(self):
        return int(self.events.size)

    def __repr__(self):
        return f"EventStream({self.node_id!r}, n={len(self)}, horizon={self.horizon})"

    def with_horizon(self, horizon: float) -> "EventStream":
        return replace(self, horizon=horizon)


@dataclass(frozen=True)
class BinningScheme:
    """Bin layout shared by target and source.

    The "now" bin ``(t - now_width, t]`` is followed backwards in time by
    history bins of widths ``history_widths[0], history_widths[1], ...``.
    The target uses the first ``k`` history bins, the source the first ``l``.
    Evaluation times start at ``origin + span`` and advance by ``stride``.
    """

    kind: str
    now_width: float
    history_widths: tuple[float, ...]
    k: int
    l: int
    stride: float
    origin: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "history_widths", tuple(float(w) for w in self.history_widths))
        if self.kind not in ("uniform", "variable"):
            raise ValueError(f"unknown scheme kind {self.kind!r}")
        if self.k < 1 or self.l < 1:
            raise ValueError("k and l must be >= 1")
        if len(self.history_widths) < max(self.k, self.l):
            raise ValueError("need one history width per lag")
        widths = (self.now_width,) + self.history_widths
        if not all(w > 0 and math.isfinite(w) for w in widths):
            raise ValueError("bin widths must be positive")
        if not (self.stride > 0 and math.isfinite(self.stride)):
            raise ValueError("stride must be positive")
        if self.kind == "uniform":
            if any(w != self.now_width for w in self.history_widths) or self.stride != self.now_width:
                raise ValueError("uniform scheme needs equal widths and stride equal to the bin width")

    @classmethod
    def uniform(cls, width: float, k: int, l: int | None = None, origin: float = 0.0) -> "BinningScheme":
        l = k if l is None else l
        return cls("uniform", width, (width,) * max(k, l), k, l, width, origin)

    @classmethod
    def variable(cls, now_width: float, history_widths: Sequence[float], l: int | None = None,
                 stride: float | None = None, origin: float = 0.0) -> "BinningScheme":
        k = len(history_widths)
        l = k if l is None else l
        return cls("variable", now_width, tuple(history_widths), k, l,
                   now_width if stride is None else stride, origin)

    @property
    def lags(self) -> int:
        return max(self.k, self.l)

    @property
    def span(self) -> float:
        """Total time covered by the now bin and all history bins."""
        return self.now_width + sum(self.history_widths[: self.lags])

    def edges(self, nbins: int) -> list[tuple[float, float]]:
        """(near, far) offsets before ``t`` of the first ``nbins`` history bins."""
        out = []
        near = self.now_width
        for w in self.history_widths[:nbins]:
            out.append((near, near + w))
            near += w
        return out

    def n_samples(self, horizon: float) -> int:
        """Number of evaluation times that fit in ``[origin, horizon]``."""
        room = horizon - self.origin - self.span
        if room < -_GRID_EPS * self.stride:
            raise InsufficientWindowError(
                f"insufficient window: {horizon - self.origin:g} s < history span {self.span:g} s")
        return int(math.floor(room / self.stride + _GRID_EPS)) + 1

    def evaluation_times(self, horizon: float) -> np.ndarray:
        m = self.n_samples(horizon)
        return self.origin + self.span + self.stride * np.arange(m, dtype=np.float64)

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "now_width": self.now_width,
            "history_widths": list(self.history_widths),
            "k": self.k,
            "l": self.l,
            "stride": self.stride,
            "origin": self.origin,
        }


PRESETS = {
    # 4 h uniform bins, seven lags each
    "digg": lambda stride=None: BinningScheme.uniform(4 * HOUR, 7),
    "twitter": lambda stride=None: BinningScheme.variable(1.0, (10 * MINUTE, 2 * HOUR, 24 * HOUR), stride=stride),
    "synthetic": lambda stride=None: BinningScheme.variable(1.0, (1 * HOUR, 2 * HOUR), stride=stride),
}


def preset(name: str, stride: float | None = None) -> BinningScheme:
    """Named scheme; ``stride`` applies to the variable-width presets only."""
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return factory(stride)


@dataclass(frozen=True, eq=False)
class BinnedSeries:
    node_id: str
    bits: np.ndarray
    origin: float
    width: float


@dataclass(frozen=True, eq=False)
class SampleSet:
    """One row per evaluation time: target now-bit and both histories."""

    y_now: np.ndarray
    y_hist: np.ndarray
    x_hist: np.ndarray

    @property
    def n(self) -> int:
        return int(self.y_now.shape[0])

    @property
    def k(self) -> int:
        return int(self.y_hist.shape[1])

    @property
    def l(self) -> int:
        return int(self.x_hist.shape[1])

    def rows(self) -> list[tuple[int, tuple[int, ...], tuple[int, ...]]]:
        return [(int(a), tuple(int(v) for v in b), tuple(int(v) for v in c))
                for a, b, c in zip(self.y_now, self.y_hist, self.x_hist)]

    def codes(self) -> np.ndarray:
        """Integer outcome codes: bit 0 is y_now, then y_hist, then x_hist."""
        code = self.y_now.astype(np.int64)
        for i in range(self.k):
            code |= self.y_hist[:, i].astype(np.int64) << (1 + i)
        for j in range(self.l):
            code |= self.x_hist[:, j].astype(np.int64) << (1 + self.k + j)
        return code


class EventCollection(dict):
    """``node_id -> EventStream`` mapping that remembers ingestion stats."""

    def __init__(self, *args, duplicates: int = 0, **kwargs):
        super().__init__(*args, **kwargs)
        self.duplicates = duplicates

    @property
    def horizon(self) -> float:
        return max((s.horizon for s in self.values()), default=0.0)


def _parse_rows(path: Path, fmt: str):
    with open(path, newline="") as fh:
        if fmt == "csv":
            for lineno, row in enumerate(csv.reader(fh), start=1):
                if not row or all(not c.strip() for c in row):
                    continue
                if lineno == 1 and row[1:2] == ["timestamp"]:
                    continue
                if len(row) not in (2, 3):
                    raise EventFormatError(f"line {lineno}: expected 2 or 3 fields, got {len(row)}")
                yield lineno, row[0].strip(), row[1].strip(), (row[2].strip() if len(row) == 3 else None)
        else:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                    node, ts = obj["node_id"], obj["timestamp"]
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    raise EventFormatError(f"line {lineno}: malformed record ({exc})") from None
                item = obj.get("item_id")
                yield lineno, str(node), ts, (None if item is None else str(item))


def load_events(path, fmt: str | None = None, origin: float = 0.0,
                horizon: float | None = None) -> EventCollection:
    """Read an event file into one :class:`EventStream` per node.

    ``origin`` is subtracted from every timestamp so that the window starts at
    zero. All streams share ``horizon``; by default it is the latest event.
    Repeated ``(node, timestamp)`` rows collapse to one event (first item id
    wins) and are tallied in ``.duplicates``.
    """
    path = Path(path)
    if fmt is None:
        fmt = "jsonl" if path.suffix in (".jsonl", ".json", ".ndjson") else "csv"
    if fmt not in ("csv", "jsonl"):
        raise ValueError(f"unknown event format {fmt!r}")

    per_node: dict[str, dict[float, str | None]] = {}
    has_items = False
    duplicates = 0
    for lineno, node, raw_ts, item in _parse_rows(path, fmt):
        try:
            ts = float(raw_ts)
        except (TypeError, ValueError):
            raise EventFormatError(f"line {lineno}: unparseable timestamp") from None
        if not math.isfinite(ts):
            raise EventFormatError(f"line {lineno}: unparseable timestamp")
        ts -= origin
        if ts < 0:
            raise EventFormatError(f"line {lineno}: timestamp before window origin")
        if horizon is not None and ts > horizon:
            raise EventFormatError(f"line {lineno}: timestamp beyond horizon")
        if not node:
            raise EventFormatError(f"line {lineno}: empty node_id")
        slot = per_node.setdefault(node, {})
        if ts in slot:
            duplicates += 1
            continue
        slot[ts] = item
        has_items = has_items or item is not None

    if duplicates:
        logger.warning("collapsed %d duplicate (node, timestamp) rows in %s", duplicates, path)
    if horizon is None:
        horizon = max((max(s) for s in per_node.values()), default=0.0)
    out = EventCollection(duplicates=duplicates)
    for node in sorted(per_node):
        times = sorted(per_node[node])
        items = tuple("" if per_node[node][t] is None else per_node[node][t] for t in times) if has_items else None
        out[node] = EventStream(node, np.array(times, dtype=np.float64), items, horizon)
    return out


def write_events(path, streams: Iterable[EventStream] | Mapping[str, EventStream]) -> None:
    """Write streams as ``node_id,timestamp[,item_id]`` CSV, sorted by node then time."""
    if isinstance(streams, Mapping):
        streams = streams.values()
    streams = sorted(streams, key=lambda s: s.node_id)
    with_items = any(s.item_ids is not None for s in streams)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node_id", "timestamp", "item_id"] if with_items else ["node_id", "timestamp"])
        for s in streams:
            for i, t in enumerate(s.events):
                row = [s.node_id, repr(float(t))]
                if with_items:
                    row.append(s.item_ids[i] if s.item_ids is not None else "")
                w.writerow(row)


def bin_uniform(stream: EventStream, origin: float, width: float, count: int) -> BinnedSeries:
    """Occupancy of ``count`` consecutive bins ``(origin + t*width, origin + (t+1)*width]``."""
    if not width > 0:
        raise ValueError("width must be positive")
    if count < 1:
        raise ValueError("count must be >= 1")
    bits = np.zeros(count, dtype=np.uint8)
    idx = np.ceil((stream.events - origin) / width).astype(np.int64) - 1
    idx = idx[(idx >= 0) & (idx < count)]
    bits[idx] = 1
    return BinnedSeries(stream.node_id, bits, origin, width)


def _occupancy(events: np.ndarray, times: np.ndarray, near: float, far: float) -> np.ndarray:
    # any event in (t - far, t - near]
    hi = np.searchsorted(events, times - near, side="right")
    lo = np.searchsorted(events, times - far, side="right")
    return (hi > lo).astype(np.uint8)


def _common_horizon(target: EventStream, source: EventStream, horizon: float | None) -> float:
    if horizon is not None:
        return float(horizon)
    return max(target.horizon, source.horizon)


def history_samples(target: EventStream, source: EventStream, scheme: BinningScheme,
                    horizon: float | None = None) -> SampleSet:
    """Materialize the (y_now, y_hist, x_hist) rows at every evaluation time."""
    times = scheme.evaluation_times(_common_horizon(target, source, horizon))
    y_now = _occupancy(target.events, times, 0.0, scheme.now_width)
    y_hist = np.empty((times.size, scheme.k), dtype=np.uint8)
    for i, (near, far) in enumerate(scheme.edges(scheme.k)):
        y_hist[:, i] = _occupancy(target.events, times, near, far)
    x_hist = np.empty((times.size, scheme.l), dtype=np.uint8)
    for j, (near, far) in enumerate(scheme.edges(scheme.l)):
        x_hist[:, j] = _occupancy(source.events, times, near, far)
    return SampleSet(y_now, y_hist, x_hist)


def _occupied_runs(events: np.ndarray, near: float, far: float, t0: float, stride: float,
                   m: int) -> tuple[np.ndarray, np.ndarray]:
    """Evaluation-index runs ``[start, stop)`` during which ``(t-far, t-near]`` is occupied.

    An event ``e`` occupies the bin for ``e + near <= t < e + far``.
    """
    if events.size == 0:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty
    start = np.ceil((events + near - t0) / stride).astype(np.int64)
    stop = np.ceil((events + far - t0) / stride).astype(np.int64)
    np.clip(start, 0, m, out=start)
    np.clip(stop, 0, m, out=stop)
    keep = stop > start
    start, stop = start[keep], stop[keep]
    if start.size == 0:
        return start, stop
    # starts and stops are both sorted; a new run begins where the gap opens
    opens = np.flatnonzero(start[1:] > stop[:-1]) + 1
    first = np.concatenate(([0], opens))
    last = np.concatenate((opens - 1, [start.size - 1]))
    return start[first], stop[last]


def history_counts(target: EventStream, source: EventStream, scheme: BinningScheme,
                   horizon: float | None = None) -> tuple[np.ndarray, np.ndarray, int]:
    """Outcome counts of :func:`history_samples` without materializing rows.

    Returns
    -------
    codes : ndarray of int64
        Sorted distinct outcome codes (same encoding as :meth:`SampleSet.codes`).
    counts : ndarray of int64
        Number of evaluation times with each outcome.
    n : int
        Total number of evaluation times.
    """
    m = scheme.n_samples(_common_horizon(target, source, horizon))
    t0 = scheme.origin + scheme.span
    bits = [(target.events, 0.0, scheme.now_width)]
    bits += [(target.events, near, far) for near, far in scheme.edges(scheme.k)]
    bits += [(source.events, near, far) for near, far in scheme.edges(scheme.l)]

    positions, deltas = [], []
    for b, (events, near, far) in enumerate(bits):
        start, stop = _occupied_runs(events, near, far, t0, scheme.stride, m)
        positions += [start, stop]
        deltas += [np.full(start.size, 1 << b, dtype=np.int64), np.full(stop.size, -(1 << b), dtype=np.int64)]
    pos = np.concatenate(positions)
    delta = np.concatenate(deltas)
    order = np.argsort(pos, kind="stable")
    pos, delta = pos[order], delta[order]

    # code is piecewise constant between consecutive change points
    seg_codes = np.concatenate(([0], np.cumsum(delta)))
    bounds = np.concatenate(([0], pos, [m]))
    lengths = np.diff(bounds)
    used = lengths > 0
    codes, inverse = np.unique(seg_codes[used], return_inverse=True)
    counts = np.bincount(inverse, weights=lengths[used]).astype(np.int64)
    return codes, counts, m


def subsample(stream: EventStream, f: float, seed: int) -> EventStream:
    """Keep each event independently with probability ``f``."""
    if not 0.0 <= f <= 1.0:
        raise ValueError("f must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    keep = rng.random(len(stream)) < f
    items = None
    if stream.item_ids is not None:
        items = tuple(i for i, k in zip(stream.item_ids, keep) if k)
    return EventStream(stream.node_id, stream.events[keep], items, stream.horizon)
