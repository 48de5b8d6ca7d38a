"""Contact traces: parsing proximity logs, synthetic generation, serialization.

A trace is a time-ordered stream of link-up/link-down events between
unordered node pairs.  Everything downstream (the simulator, the
reachability oracle) consumes :class:`CanonicalTrace`.
"""

from __future__ import annotations

import enum
import io
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

log = logging.getLogger(__name__)

DEFAULT_SIGHTING_GAP = 180.0


class TraceFormatError(ValueError):
    """Raised for a malformed trace line; carries the 1-based line number."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class Kind(enum.IntEnum):
    # DOWN sorts before UP at equal timestamps
    DOWN = 0
    UP = 1


@dataclass(frozen=True, order=True)
class ContactEvent:
    time: float
    kind: Kind
    a: int
    b: int

    def __post_init__(self):
        if self.a == self.b:
            raise ValueError(f"self-contact for node {self.a}")
        if self.a > self.b:
            # pairs are unordered; normalize to a < b
            a, b = self.b, self.a
            object.__setattr__(self, "a", a)
            object.__setattr__(self, "b", b)

    @property
    def pair(self) -> tuple[int, int]:
        return (self.a, self.b)


@dataclass
class CanonicalTrace:
    events: list[ContactEvent] = field(default_factory=list)
    node_count: int = 0
    duration: float = 0.0

    def __len__(self) -> int:
        return len(self.events)

    def contacts(self) -> list[tuple[float, float, int, int]]:
        """Return ``(start, end, a, b)`` intervals, ordered by start time."""
        open_at: dict[tuple[int, int], float] = {}
        out = []
        for ev in self.events:
            if ev.kind is Kind.UP:
                open_at[ev.pair] = ev.time
            else:
                out.append((open_at.pop(ev.pair), ev.time, ev.a, ev.b))
        out.sort()
        return out


def sort_events(events: Iterable[ContactEvent]) -> list[ContactEvent]:
    return sorted(events, key=lambda e: (e.time, e.kind, e.a, e.b))


def validate_trace(trace: CanonicalTrace) -> list[str]:
    """Check the canonical invariants; return human-readable problems (empty if valid)."""
    problems = []
    state: dict[tuple[int, int], Kind] = {}
    prev = None
    for i, ev in enumerate(trace.events):
        key = (ev.time, ev.kind, ev.a, ev.b)
        if prev is not None and key < prev:
            problems.append(f"event {i} out of order at t={ev.time}")
        prev = key
        if not (0 <= ev.a < trace.node_count and 0 <= ev.b < trace.node_count):
            problems.append(f"event {i}: node outside 0..{trace.node_count - 1}")
        last = state.get(ev.pair, Kind.DOWN)
        if last == ev.kind:
            problems.append(f"event {i}: pair {ev.pair} repeats {ev.kind.name}")
        state[ev.pair] = ev.kind
        if ev.time > trace.duration:
            problems.append(f"event {i}: t={ev.time} past duration {trace.duration}")
    for pair, kind in sorted(state.items()):
        if kind is Kind.UP:
            problems.append(f"pair {pair} left open at end of trace")
    return problems


def _split(line: str, line_no: int) -> list[str]:
    if ";" in line:
        parts = line.split(";")
    elif "," in line:
        parts = line.split(",")
    else:
        parts = line.split()
    return [p.strip() for p in parts]


def _records(raw_lines: Iterable[str]) -> Iterator[tuple[int, list[str]]]:
    for line_no, line in enumerate(raw_lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        yield line_no, _split(line, line_no)


def _window_sightings(times: Sequence[float], gap: float) -> list[tuple[float, float]]:
    """Collapse sorted sighting times into contact intervals.

    Sightings at most ``gap`` apart belong to one contact, which ends
    ``gap`` seconds after its last sighting.
    """
    intervals = []
    start = last = times[0]
    for t in times[1:]:
        if t - last <= gap:
            last = t
            continue
        intervals.append((start, last + gap))
        start = last = t
    intervals.append((start, last + gap))
    return intervals


def _from_intervals(
    intervals: dict[tuple[int, int], list[tuple[float, float]]],
    node_count: int,
    duration: float | None = None,
) -> CanonicalTrace:
    events = []
    end = 0.0
    for (a, b), spans in intervals.items():
        for up, down in spans:
            events.append(ContactEvent(up, Kind.UP, a, b))
            events.append(ContactEvent(down, Kind.DOWN, a, b))
            end = max(end, down)
    return CanonicalTrace(sort_events(events), node_count, end if duration is None else duration)


def rebase(trace: CanonicalTrace) -> CanonicalTrace:
    """Shift all timestamps so the first event happens at t = 0."""
    if not trace.events:
        return CanonicalTrace([], trace.node_count, 0.0)
    t0 = trace.events[0].time
    events = [ContactEvent(e.time - t0, e.kind, e.a, e.b) for e in trace.events]
    return CanonicalTrace(events, trace.node_count, trace.duration - t0)


def _parse_sightings(raw_lines: Iterable[str], gap: float) -> CanonicalTrace:
    sightings: dict[tuple[int, int], list[float]] = defaultdict(list)
    max_node = -1
    last_t = None
    unsorted = False
    for line_no, parts in _records(raw_lines):
        if len(parts) != 3:
            raise TraceFormatError(f"expected 3 fields, got {len(parts)}", line_no)
        try:
            t = float(parts[0])
            u, v = int(parts[1]), int(parts[2])
        except ValueError as exc:
            raise TraceFormatError(str(exc), line_no) from None
        if u < 0 or v < 0:
            raise TraceFormatError("negative node id", line_no)
        if u == v:
            # a device seeing itself carries no contact information
            continue
        if last_t is not None and t < last_t:
            unsorted = True
        last_t = t
        max_node = max(max_node, u, v)
        sightings[(min(u, v), max(u, v))].append(t)
    if unsorted:
        log.warning("proximity log timestamps are not monotonic; events re-sorted")
    intervals = {pair: _window_sightings(sorted(ts), gap) for pair, ts in sightings.items()}
    return _from_intervals(intervals, max_node + 1)


def _parse_canonical(raw_lines: Iterable[str], duration: float | None) -> CanonicalTrace:
    events = []
    max_node = -1
    header_ok = True
    for line_no, parts in _records(raw_lines):
        if header_ok and parts and parts[0] == "time":
            header_ok = False
            continue
        header_ok = False
        if len(parts) != 4:
            raise TraceFormatError(f"expected 4 fields, got {len(parts)}", line_no)
        try:
            t = float(parts[0])
            kind = Kind[parts[1].upper()]
            a, b = int(parts[2]), int(parts[3])
        except (ValueError, KeyError) as exc:
            raise TraceFormatError(f"bad field: {exc}", line_no) from None
        if a == b:
            raise TraceFormatError("self-contact", line_no)
        events.append(ContactEvent(t, kind, a, b))
        max_node = max(max_node, a, b)
    ordered = sort_events(events)
    if ordered != events:
        log.warning("trace events were not in canonical order; re-sorted")
    end = max((e.time for e in ordered), default=0.0)
    if duration is None:
        duration = end
    # close dangling links and drop repeated states
    state: dict[tuple[int, int], Kind] = {}
    balanced = []
    for ev in ordered:
        if state.get(ev.pair, Kind.DOWN) == ev.kind:
            log.warning("pair %s repeats %s at t=%s; ignored", ev.pair, ev.kind.name, ev.time)
            continue
        state[ev.pair] = ev.kind
        balanced.append(ev)
    for pair, kind in sorted(state.items()):
        if kind is Kind.UP:
            balanced.append(ContactEvent(duration, Kind.DOWN, *pair))
    return CanonicalTrace(sort_events(balanced), max_node + 1, duration)


TRACE_FORMATS = ("sightings", "canonical")


def parse_proximity_log(
    raw_lines: Iterable[str],
    format: str = "sightings",
    *,
    sighting_gap: float = DEFAULT_SIGHTING_GAP,
    duration: float | None = None,
    rebase_time: bool = False,
) -> CanonicalTrace:
    """Parse a proximity log into a canonical, link-balanced trace.

    ``format`` is ``"sightings"`` for discovery logs with lines
    ``timestamp;observer;observed`` (comma also accepted), or
    ``"canonical"`` for the ``time,kind,a,b`` serialization written by
    :func:`dump_trace`.  ``rebase_time`` shifts the stream to start at 0.
    """
    if format == "sightings":
        trace = _parse_sightings(raw_lines, sighting_gap)
    elif format == "canonical":
        trace = _parse_canonical(raw_lines, duration)
    else:
        raise ValueError(f"unknown trace format {format!r}; expected one of {TRACE_FORMATS}")
    return rebase(trace) if rebase_time else trace


def dump_trace(trace: CanonicalTrace, fh: io.TextIOBase | None = None) -> str:
    """Serialize as ``time,kind,a,b`` CSV; returns the text and writes it to ``fh`` if given."""
    lines = ["time,kind,a,b"]
    lines += [f"{e.time!r},{e.kind.name},{e.a},{e.b}" for e in trace.events]
    text = "\n".join(lines) + "\n"
    if fh is not None:
        fh.write(text)
    return text


def load_trace(path, format: str = "canonical", **kwargs) -> CanonicalTrace:
    with open(path) as fh:
        return parse_proximity_log(fh, format, **kwargs)


def generate_synthetic_trace(
    node_count: int,
    duration: float,
    contact_rate_matrix,
    mean_contact_len: float,
    seed: int,
) -> CanonicalTrace:
    """Draw an alternating renewal contact process for every node pair.

    ``contact_rate_matrix`` holds the mean inter-contact time (seconds) per
    pair, either as a scalar or an ``node_count x node_count`` array; only
    the upper triangle is read.  Gaps and contact lengths are exponential.
    """
    if node_count < 2:
        raise ValueError("a trace needs at least two nodes")
    if mean_contact_len <= 0:
        raise ValueError("mean contact length must be positive")
    means = np.broadcast_to(np.asarray(contact_rate_matrix, dtype=float), (node_count, node_count))
    rng = np.random.default_rng(seed)
    intervals: dict[tuple[int, int], list[tuple[float, float]]] = {}
    for a in range(node_count):
        for b in range(a + 1, node_count):
            mean_gap = means[a, b]
            if not mean_gap > 0:
                raise ValueError(f"mean inter-contact time for ({a}, {b}) must be positive")
            spans = []
            t = rng.exponential(mean_gap)
            while t < duration:
                end = min(t + rng.exponential(mean_contact_len), duration)
                if end > t:
                    spans.append((float(t), float(end)))
                t = end + rng.exponential(mean_gap)
            if spans:
                intervals[(a, b)] = spans
    return _from_intervals(intervals, node_count, float(duration))


def community_rate_matrix(
    communities: Sequence[int], within_mean: float, cross_factor: float = 5.0
) -> np.ndarray:
    """Mean inter-contact times where cross-community pairs meet ``cross_factor`` times less often."""
    labels = np.asarray(communities)
    same = labels[:, None] == labels[None, :]
    return np.where(same, within_mean, within_mean * cross_factor)
