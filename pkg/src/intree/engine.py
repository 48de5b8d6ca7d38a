"""Trace-driven discrete-event simulator and evaluation metrics."""

from __future__ import annotations

import heapq
import io
import itertools
import logging
import math
import os
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from typing import Iterable, Sequence

from .config import SimConfig
from .interest_tree import InterestTree
from .routing import Buffer, Message, Verdict, buffer_admit, make_router, schedule_transmissions
from .routing.buffer import schedule_key
from .routing.messages import ForwardDecision
from .trace import CanonicalTrace, Kind

log = logging.getLogger(__name__)

# same-timestamp processing order
_WINDOW, _DONE, _DOWN, _UP, _GEN = range(5)


@dataclass
class MetricsReport:
    created: int = 0
    delivered: int = 0
    relayed: int = 0
    delivery_ratio: float = 0.0
    overhead: float = math.nan
    avg_latency: float = math.nan
    avg_hop_count: float = math.nan
    # terminal-state accounting (each created message in exactly one bucket)
    expired: int = 0
    dropped: int = 0
    in_buffer: int = 0

    @classmethod
    def from_counts(cls, created, delivered, relayed, latencies, hops, expired=0, dropped=0, in_buffer=0):
        return cls(
            created=created,
            delivered=delivered,
            relayed=relayed,
            delivery_ratio=delivered / created if created else 0.0,
            overhead=relayed / delivered if delivered else math.nan,
            avg_latency=sum(latencies) / len(latencies) if latencies else math.nan,
            avg_hop_count=sum(hops) / len(hops) if hops else math.nan,
            expired=expired,
            dropped=dropped,
            in_buffer=in_buffer,
        )


def mean_report(reports: Sequence[MetricsReport]) -> MetricsReport:
    """Arithmetic mean of every field; undefined (nan) values are skipped."""
    out = MetricsReport()
    for f in fields(MetricsReport):
        vals = [getattr(r, f.name) for r in reports]
        defined = [v for v in vals if not (isinstance(v, float) and math.isnan(v))]
        setattr(out, f.name, sum(defined) / len(defined) if defined else math.nan)
    return out


@dataclass
class DecisionRow:
    time: float
    holder: int
    peer: int
    msg_id: int
    verdict: str
    rule: str


@dataclass
class RunResult:
    report: MetricsReport
    decisions: list[DecisionRow] | None = None
    delivered_ids: frozenset[int] = frozenset()
    created_ids: frozenset[int] = frozenset()
    messages: dict[int, Message] = field(default_factory=dict)


@dataclass
class _Link:
    a: int
    b: int
    transfer: "_Transfer | None" = None
    turn: int = 0
    # per-sender transmission heaps of (schedule key, msg id, decision)
    queues: dict = field(default_factory=dict)


@dataclass
class _Transfer:
    link: _Link
    sender: int
    receiver: int
    msg: Message
    verdict: Verdict


class Simulation:
    """One deterministic replay of a trace under one router."""

    def __init__(
        self,
        config: SimConfig,
        trace: CanonicalTrace,
        tree: InterestTree,
        *,
        messages: Iterable[Message] | None = None,
        record_decisions: bool = False,
        router=None,
    ):
        self.config = config
        self.trace = trace
        self.tree = tree
        majors = tree.major_interest
        used = {n for ev in trace.events for n in (ev.a, ev.b)}
        unknown = sorted(used - set(majors))
        if unknown:
            raise ValueError(f"trace nodes without a major interest: {unknown[:10]}")
        self.nodes = sorted(majors)
        self.node_count = max(self.nodes) + 1 if self.nodes else 0
        self.router = router or make_router(config.router, tree, self.node_count, config.social_params)
        # only routers with a delivery response purge copies of delivered messages
        self.purging = getattr(self.router, "purges_on_delivery", False) or config.baseline_purge
        self.purge_global = self.purging and config.purge == "global"
        shared: set[int] = set()
        self.buffers = [
            Buffer(config.buffer_capacity, delivered_ids_seen=shared if self.purge_global else set())
            for _ in range(self.node_count)
        ]
        self.links: dict[int, dict[int, _Link]] = {n: {} for n in range(self.node_count)}
        self.sending: list[dict[int, int]] = [{} for _ in range(self.node_count)]
        self.holders: dict[int, set[int]] = {}
        self.scripted = sorted(messages, key=lambda m: (m.created_at, m.id)) if messages is not None else None
        self.decisions: list[DecisionRow] | None = [] if record_decisions else None
        self.rng = random.Random(config.seed)
        self.rate = config.bytes_per_second
        self._heap: list = []
        self._seq = itertools.count()
        self.now = 0.0
        # bookkeeping
        self.created: dict[int, Message] = {}
        self.delivery: dict[int, tuple[float, int]] = {}
        self.relayed = 0
        self.ever_expired: set[int] = set()
        self.ever_dropped: set[int] = set()

    # -- event queue -------------------------------------------------------

    def _push(self, time: float, prio: int, payload) -> None:
        heapq.heappush(self._heap, (time, prio, next(self._seq), payload))

    def _measured(self, msg: Message) -> bool:
        return msg.created_at >= self.config.warmup

    # -- buffer bookkeeping ------------------------------------------------

    def _forget(self, node: int, msgs: Iterable[Message], expired: bool = False, dropped: bool = False) -> None:
        for m in msgs:
            hs = self.holders.get(m.id)
            if hs is not None:
                hs.discard(node)
            if expired:
                self.ever_expired.add(m.id)
            if dropped:
                self.ever_dropped.add(m.id)

    def _admit(self, node: int, msg: Message) -> bool:
        res = buffer_admit(self.buffers[node], msg, self.now, pinned=self.sending[node])
        self._forget(node, res.expired, expired=True)
        self._forget(node, res.purged)
        self._forget(node, res.evicted, dropped=True)
        if res.admitted:
            self.holders.setdefault(msg.id, set()).add(node)
        return res.admitted

    def _purge_stale(self, node: int) -> None:
        expired, delivered = self.buffers[node].purge_stale(self.now, self.sending[node])
        self._forget(node, expired, expired=True)
        self._forget(node, delivered)

    def _purge_delivered(self, msg_id: int) -> None:
        for node in sorted(self.holders.pop(msg_id, ())):
            self.buffers[node].remove(msg_id)

    # -- message generation ------------------------------------------------

    def _schedule_generation(self, after: float) -> None:
        lo, hi = self.config.msg_interval_range
        t = after + self.rng.uniform(lo, hi)
        if t < self.config.duration:
            self._push(t, _GEN, None)

    def _generate(self) -> Message:
        src, dst = self.rng.sample(self.nodes, 2)
        lo, hi = self.config.msg_size_range
        size = self.rng.randint(int(lo), int(hi))
        mid = len(self.created)
        return Message(mid, src, dst, self.tree.major_interest[dst], size, self.now, self.config.ttl, 0, self.now)

    def _create(self, msg: Message) -> None:
        self.created[msg.id] = msg
        if self._admit(msg.src, msg):
            self._offer(msg.src, msg)
        else:
            self.ever_dropped.add(msg.id)

    # -- transfers ---------------------------------------------------------

    def _evaluate(self, msg: Message, sender: int, receiver: int) -> ForwardDecision | None:
        peer_buf = self.buffers[receiver]
        if msg.id in peer_buf.messages or msg.id in peer_buf.delivered_ids_seen:
            return None
        d = self.router.decide(msg, sender, receiver, peer_buf.messages, self.now)
        if self.decisions is not None:
            self.decisions.append(DecisionRow(self.now, sender, receiver, msg.id, d.verdict.value, d.rule))
        return d if d.transmits else None

    def _plan(self, link: _Link, sender: int) -> None:
        """Evaluate the sender's whole buffer against the peer."""
        receiver = link.b if sender == link.a else link.a
        self._purge_stale(sender)
        decisions = []
        for msg in list(self.buffers[sender].messages.values()):
            d = self._evaluate(msg, sender, receiver)
            if d is not None:
                decisions.append((msg, d))
        plan = schedule_transmissions(self.buffers[sender], decisions, self.rate)
        link.queues[sender] = [(schedule_key(m, d), m.id, d) for m, d in plan]

    def _offer(self, node: int, msg: Message) -> None:
        """Queue a newly stored message on every open link of ``node``."""
        for peer in sorted(self.links[node]):
            link = self.links[node][peer]
            d = self._evaluate(msg, node, peer)
            if d is not None:
                heapq.heappush(link.queues[node], (schedule_key(msg, d), msg.id, d))
            self._try_start(link)

    def _head(self, link: _Link, sender: int, receiver: int):
        queue = link.queues[sender]
        buf = self.buffers[sender]
        peer_buf = self.buffers[receiver]
        while queue:
            _, mid, d = queue[0]
            msg = buf.messages.get(mid)
            if (
                msg is not None
                and not msg.expired(self.now)
                and mid not in buf.delivered_ids_seen
                and mid not in peer_buf.messages
                and mid not in peer_buf.delivered_ids_seen
            ):
                return msg, d
            heapq.heappop(queue)
        return None

    def _try_start(self, link: _Link) -> None:
        if link.transfer is not None:
            return
        ends = ((link.a, link.b), (link.b, link.a))
        heads = [self._head(link, s, r) for s, r in ends]
        if heads[0] is None and heads[1] is None:
            return
        if heads[0] is None or heads[1] is None:
            side = 0 if heads[0] is not None else 1
        else:
            deliver = [h[1].verdict is Verdict.DELIVER for h in heads]
            if deliver[0] != deliver[1]:
                side = 0 if deliver[0] else 1
            else:
                side = link.turn
                link.turn ^= 1
        sender, receiver = ends[side]
        heapq.heappop(link.queues[sender])
        msg, decision = heads[side]
        xfer = _Transfer(link, sender, receiver, msg, decision.verdict)
        link.transfer = xfer
        pins = self.sending[sender]
        pins[msg.id] = pins.get(msg.id, 0) + 1
        self._push(self.now + msg.size / self.rate, _DONE, xfer)

    def _unpin(self, xfer: _Transfer) -> None:
        pins = self.sending[xfer.sender]
        left = pins[xfer.msg.id] - 1
        if left:
            pins[xfer.msg.id] = left
        else:
            del pins[xfer.msg.id]

    def _complete(self, xfer: _Transfer) -> None:
        link = xfer.link
        if link.transfer is not xfer:
            return  # voided by link-down
        link.transfer = None
        self._unpin(xfer)
        msg = xfer.msg
        receiver = xfer.receiver
        sender_buf = self.buffers[xfer.sender]
        if msg.id in sender_buf.delivered_ids_seen or msg.expired(self.now):
            self._try_start(link)
            return
        copy = msg.relayed_copy(self.now)
        if receiver == msg.dst:
            if msg.id not in self.delivery:
                self.delivery[msg.id] = (self.now, copy.hop_count)
            self.buffers[receiver].delivered_ids_seen.add(msg.id)
            if self.purge_global:
                self._purge_delivered(msg.id)
            elif self.purging:
                sender_buf.delivered_ids_seen.add(msg.id)
                if sender_buf.remove(msg.id) is not None:
                    self._forget(xfer.sender, [msg])
            self._try_start(link)
        elif self._admit(receiver, copy):
            if self._measured(msg):
                self.relayed += 1
            self._try_start(link)
            self._offer(receiver, copy)
        else:
            self._try_start(link)

    # -- contacts ----------------------------------------------------------

    def _link_up(self, a: int, b: int) -> None:
        if b in self.links[a]:
            return
        link = _Link(a, b)
        self.links[a][b] = link
        self.links[b][a] = link
        self.router.on_link_up(a, b, self.now)
        if self.purging and not self.purge_global:
            ba, bb = self.buffers[a], self.buffers[b]
            union = ba.delivered_ids_seen | bb.delivered_ids_seen
            ba.delivered_ids_seen |= union
            bb.delivered_ids_seen |= union
        self._plan(link, a)
        self._plan(link, b)
        self._try_start(link)

    def _link_down(self, a: int, b: int) -> None:
        link = self.links[a].pop(b, None)
        if link is None:
            return
        del self.links[b][a]
        if link.transfer is not None:
            self._unpin(link.transfer)
            link.transfer = None

    # -- main loop ---------------------------------------------------------

    def run(self) -> RunResult:
        cfg = self.config
        for ev in self.trace.events:
            self._push(ev.time, _UP if ev.kind is Kind.UP else _DOWN, (ev.a, ev.b))
        if self.scripted is None:
            self._schedule_generation(0.0)
        else:
            for m in self.scripted:
                self._push(m.created_at, _GEN, m)
        uses_windows = hasattr(self.router, "states") and self.router.name == "int-tree"
        if uses_windows:
            self._push(cfg.window_T, _WINDOW, 1)
        heap = self._heap
        while heap:
            t, prio, _, payload = heapq.heappop(heap)
            if t > cfg.duration:
                break
            self.now = t
            if prio == _UP:
                self._link_up(*payload)
            elif prio == _DOWN:
                self._link_down(*payload)
            elif prio == _DONE:
                self._complete(payload)
            elif prio == _GEN:
                if payload is None:
                    self._create(self._generate())
                    self._schedule_generation(t)
                else:
                    self._create(payload)
            else:
                self.router.on_window(payload)
                nxt = (payload + 1) * cfg.window_T
                if nxt <= cfg.duration:
                    self._push(nxt, _WINDOW, payload + 1)
        self.now = cfg.duration
        return self._result()

    def _result(self) -> RunResult:
        end = self.config.duration
        measured = [m for m in self.created.values() if self._measured(m)]
        delivered = [m for m in measured if m.id in self.delivery]
        latencies = [self.delivery[m.id][0] - m.created_at for m in delivered]
        hops = [self.delivery[m.id][1] for m in delivered]
        expired = dropped = in_buffer = 0
        for m in measured:
            if m.id in self.delivery:
                continue
            alive = any(
                m.id in self.buffers[n].messages and not self.buffers[n].messages[m.id].expired(end)
                for n in self.holders.get(m.id, ())
            )
            if alive:
                in_buffer += 1
            elif m.id in self.ever_expired or m.expired(end):
                expired += 1
            else:
                dropped += 1
        report = MetricsReport.from_counts(
            len(measured), len(delivered), self.relayed, latencies, hops, expired, dropped, in_buffer
        )
        return RunResult(
            report,
            self.decisions,
            frozenset(m.id for m in delivered),
            frozenset(m.id for m in measured),
            dict(self.created),
        )


def run(
    config: SimConfig,
    trace: CanonicalTrace,
    tree: InterestTree,
    *,
    messages: Iterable[Message] | None = None,
    record_decisions: bool = False,
) -> RunResult:
    return Simulation(config, trace, tree, messages=messages, record_decisions=record_decisions).run()


@dataclass
class ManyResult:
    runs: list[MetricsReport]
    mean: MetricsReport


def worker_count() -> int:
    raw = os.environ.get("INTREE_SIM_THREADS", "0").strip() or "0"
    n = int(raw)
    return n if n > 0 else (os.cpu_count() or 1)


def _run_one(args) -> MetricsReport:
    config, trace, tree = args
    return run(config, trace, tree).report


def map_runs(jobs: Sequence[tuple[SimConfig, CanonicalTrace, InterestTree]], workers: int | None = None) -> list[MetricsReport]:
    """Run independent simulations, returning reports in job order."""
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(jobs) <= 1:
        return [_run_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(_run_one, jobs))


def run_many(config: SimConfig, trace: CanonicalTrace, tree: InterestTree, workers: int | None = None) -> ManyResult:
    """``config.runs`` replays with seeds ``seed, seed + 1, ...``."""
    jobs = [(config.replace(seed=config.seed + i), trace, tree) for i in range(config.runs)]
    reports = map_runs(jobs, workers)
    return ManyResult(reports, mean_report(reports))


def temporal_reachability_oracle(
    trace: CanonicalTrace, src: int, dst: int, t0: float, deadline: float
) -> bool:
    """Whether a time-respecting path links ``src`` to ``dst`` within ``[t0, deadline]``.

    Transfers are instantaneous and unconstrained; a node that holds the
    message passes it across every link it has open.
    """
    if src == dst:
        return True
    active: dict[int, set[int]] = {}
    reached = {src}

    def spread(start: int) -> None:
        stack = [start]
        while stack:
            n = stack.pop()
            for peer in active.get(n, ()):
                if peer not in reached:
                    reached.add(peer)
                    stack.append(peer)

    started = False
    for ev in trace.events:
        if ev.time > deadline:
            break
        if not started and ev.time >= t0:
            started = True
            spread(src)
        if ev.kind is Kind.UP:
            active.setdefault(ev.a, set()).add(ev.b)
            active.setdefault(ev.b, set()).add(ev.a)
            if started:
                if ev.a in reached and ev.b not in reached:
                    reached.add(ev.b)
                    spread(ev.b)
                elif ev.b in reached and ev.a not in reached:
                    reached.add(ev.a)
                    spread(ev.a)
        else:
            active[ev.a].discard(ev.b)
            active[ev.b].discard(ev.a)
        if dst in reached:
            return True
    if not started and t0 <= deadline:
        spread(src)
    return dst in reached


def format_report_csv(rows: Iterable[tuple[str, str, MetricsReport]]) -> str:
    out = io.StringIO()
    out.write("router,run,created,delivered,relayed,delivery_ratio,overhead,avg_latency_s,avg_hop_count\n")
    for router, run_label, r in rows:
        out.write(f"{router},{run_label},{report_fields(r)}\n")
    return out.getvalue()


def format_decisions_csv(rows: Iterable[DecisionRow]) -> str:
    out = io.StringIO()
    out.write("time,holder,peer,msg_id,verdict,rule\n")
    for d in rows:
        out.write(f"{d.time!r},{d.holder},{d.peer},{d.msg_id},{d.verdict},{d.rule}\n")
    return out.getvalue()


def _num(x: float) -> str:
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return f"{x:.6f}"
    return str(x)


def report_fields(r: MetricsReport) -> str:
    return ",".join(
        _num(v)
        for v in (r.created, r.delivered, r.relayed, r.delivery_ratio, r.overhead, r.avg_latency, r.avg_hop_count)
    )
