"""Discrete-event simulator of single-channel 802.11 DCF with slow fading.

Time is kept in integer nanoseconds.  Every transmission draws one
received power per listening node when it starts; a frame is decoded if
that power reaches the receiver sensitivity and, for its whole airtime,
exceeds the summed power of every other overlapping signal by the
capture ratio.  Physical carrier sense is per signal: a node defers while
any signal at it reaches the carrier-sense threshold, or while its NAV
is set by an overheard RTS/CTS/DATA.
"""

from __future__ import annotations

import hashlib
import heapq
import math
import random
import statistics
from collections import Counter, deque
from dataclasses import dataclass, field

from .analytic import BackoffParams, RetryLimits
from .propagation import PropagationParams

NS_PER_S = 1_000_000_000
NS_PER_US = 1_000

RTS, CTS, DATA, ACK, BROADCAST = "RTS", "CTS", "DATA", "ACK", "BROADCAST"

_IDLE, _CONTEND, _TX, _WAIT_CTS, _WAIT_ACK = range(5)


@dataclass(frozen=True)
class DcfConfig:
    retry: RetryLimits = RetryLimits()
    backoff: BackoffParams = BackoffParams()
    backoff_enabled: bool = True
    rts_cts_enabled: bool = False
    slot_us: float = 20.0
    sifs_us: float = 10.0
    difs_us: float = 50.0
    data_rate_bps: float = 2e6
    control_rate_bps: float = 1e6
    phy_header_bits: int = 192
    data_header_bits: int = 224
    rts_bits: int = 160
    cts_bits: int = 112
    ack_bits: int = 112
    # None: sensing radius is cs_range_factor * ideal range under mean path loss
    cs_threshold_dbm: float | None = None
    cs_range_factor: float = 2.2
    # None: no capture, any overlapping sensed signal destroys the frame
    capture_threshold_db: float | None = 10.0
    queue_capacity: int = 50
    reset_cw_on_drop: bool = True

    def __post_init__(self) -> None:
        if not self.sifs_us < self.difs_us:
            raise ValueError("sifs_us must be smaller than difs_us")
        if not (self.slot_us > 0 and self.sifs_us > 0):
            raise ValueError("slot_us and sifs_us must be > 0")
        if not (self.data_rate_bps > 0 and self.control_rate_bps > 0):
            raise ValueError("bit rates must be > 0")
        if self.cs_range_factor < 1:
            raise ValueError("cs_range_factor must be >= 1")
        if self.queue_capacity < 1:
            raise ValueError("queue_capacity must be >= 1")

    def resolved_cs_threshold_dbm(self, prop: PropagationParams) -> float:
        if self.cs_threshold_dbm is not None:
            th = self.cs_threshold_dbm
        else:
            th = prop.p_th_dbm - 10.0 * prop.beta * math.log10(self.cs_range_factor)
        if th > prop.p_th_dbm:
            raise ValueError(
                f"carrier-sense threshold {th} dBm exceeds receiver sensitivity "
                f"{prop.p_th_dbm} dBm"
            )
        return th

    def airtime_ns(self, kind: str, payload_bytes: int = 0) -> int:
        if kind in (DATA, BROADCAST):
            mac_bits = self.data_header_bits + 8 * payload_bytes
            rate = self.data_rate_bps
        else:
            mac_bits = {RTS: self.rts_bits, CTS: self.cts_bits, ACK: self.ack_bits}[kind]
            rate = self.control_rate_bps
        return _ns(self.phy_header_bits / self.control_rate_bps) + _ns(mac_bits / rate)


def _ns(seconds: float) -> int:
    return int(round(seconds * NS_PER_S))


@dataclass(frozen=True)
class Connection:
    source: int
    destination: int
    packet_bytes: int = 500
    # None: saturated source that always has a packet ready
    rate_pps: float | None = None
    # static forwarding chain including both endpoints; None means one hop
    path: tuple[int, ...] | None = None
    start_s: float = 0.0
    # stop generating after this many packets (None: unlimited)
    max_packets: int | None = None

    def hops(self) -> tuple[int, ...]:
        return self.path if self.path is not None else (self.source, self.destination)


@dataclass(frozen=True)
class FloodSource:
    node: int
    time_s: float = 0.0
    packet_bytes: int = 64


@dataclass(frozen=True)
class Scenario:
    nodes: tuple[tuple[int, float, float], ...]
    connections: tuple[Connection, ...] = ()
    floods: tuple[FloodSource, ...] = ()
    propagation: PropagationParams = PropagationParams()
    # set: ideal disc reception plus an independent drop per (frame, receiver)
    bernoulli_drop: float | None = None
    duration_s: float = 60.0
    warmup_fraction: float = 0.1
    flood_jitter_s: float = 0.01
    replications: int = 1
    base_seed: int = 0

    def validate(self) -> None:
        ids = [n[0] for n in self.nodes]
        if not ids:
            raise ValueError("scenario has no nodes")
        if len(set(ids)) != len(ids):
            dupes = sorted(i for i, c in Counter(ids).items() if c > 1)
            raise ValueError(f"duplicate node ids: {dupes}")
        if not self.duration_s > 0:
            raise ValueError("duration_s must be > 0")
        if not 0 <= self.warmup_fraction < 1:
            raise ValueError("warmup_fraction must lie in [0, 1)")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.bernoulli_drop is not None and not 0 <= self.bernoulli_drop <= 1:
            raise ValueError("bernoulli_drop must lie in [0, 1]")
        if self.flood_jitter_s < 0:
            raise ValueError("flood_jitter_s must be >= 0")
        known = set(ids)
        for c in self.connections:
            hops = c.hops()
            if len(hops) < 2 or hops[0] != c.source or hops[-1] != c.destination:
                raise ValueError(f"path {hops} does not join {c.source}->{c.destination}")
            if len(set(hops)) != len(hops):
                raise ValueError(f"path {hops} revisits a node")
            missing = [h for h in hops if h not in known]
            if missing:
                raise ValueError(f"connection references unknown nodes {missing}")
            if c.packet_bytes < 0:
                raise ValueError("packet_bytes must be >= 0")
            if c.rate_pps is not None and not c.rate_pps > 0:
                raise ValueError("rate_pps must be > 0 or None (saturated)")
            if c.max_packets is not None and c.max_packets < 1:
                raise ValueError("max_packets must be >= 1 or None")
        for f in self.floods:
            if f.node not in known:
                raise ValueError(f"flood source {f.node} is not a node")


@dataclass
class ConnectionMetrics:
    offered: int = 0
    delivered: int = 0
    dropped_retry: int = 0
    dropped_queue: int = 0
    queued: int = 0
    mac_acked: int = 0
    mac_failed: int = 0
    retry_histogram: dict = field(default_factory=dict)
    delays_s: list = field(default_factory=list)
    delivery_times_s: list = field(default_factory=list)
    payload_bytes: int = 0

    def delivered_after(self, t_s: float) -> int:
        return sum(1 for t in self.delivery_times_s if t >= t_s)


@dataclass
class NodeMetrics:
    node: int
    backoff_draws: int = 0
    backoff_slots_total: int = 0
    frames_sent: int = 0
    flood_reached: bool = False


@dataclass
class RunMetrics:
    seed: int
    duration_s: float
    warmup_s: float
    connections: list
    nodes: list
    busy_time_s: float = 0.0
    events: int = 0

    @property
    def coverage(self) -> float:
        return sum(n.flood_reached for n in self.nodes) / len(self.nodes)

    def mean_backoff_slots(self) -> float:
        draws = sum(n.backoff_draws for n in self.nodes)
        return sum(n.backoff_slots_total for n in self.nodes) / draws if draws else math.nan


class _Packet:
    __slots__ = ("conn", "path_pos", "hop", "created", "payload", "status")

    def __init__(self, conn, path_pos, created, payload):
        self.conn = conn
        self.path_pos = path_pos
        self.hop = 0
        self.created = created
        self.payload = payload
        self.status = 0  # 0 live, 1 delivered, 2 retry drop, 3 queue drop


class _Flood:
    __slots__ = ("flood_id", "payload")

    def __init__(self, flood_id, payload):
        self.flood_id = flood_id
        self.payload = payload


class _Tx:
    __slots__ = ("kind", "src", "dst", "end", "nav", "job", "dbm")

    def __init__(self, kind, src, dst, end, nav, job):
        self.kind = kind
        self.src = src
        self.dst = dst
        self.end = end
        self.nav = nav
        self.job = job
        self.dbm = None


class _Node:
    __slots__ = (
        "i", "node_id", "queue", "head", "sat", "sat_next", "state", "cw",
        "short", "long", "attempts", "backoff", "token", "countdown_start",
        "transmitting", "cs_count", "nav_until", "busy", "rx", "peer",
        "timeout_token", "metrics", "floods_seen", "last_sig_start",
    )

    def __init__(self, i, node_id, cw):
        self.i = i
        self.node_id = node_id
        self.queue = deque()
        self.head = None
        self.sat = []
        self.sat_next = 0
        self.state = _IDLE
        self.cw = cw
        self.short = 0
        self.long = 0
        self.attempts = 0
        self.backoff = None
        self.token = 0
        self.countdown_start = None
        self.transmitting = None
        self.cs_count = 0
        self.nav_until = 0
        self.busy = False
        self.rx = {}
        self.peer = None
        self.timeout_token = 0
        self.metrics = NodeMetrics(node_id)
        self.floods_seen = set()
        self.last_sig_start = -1


class Simulator:
    """One run of a scenario; call :meth:`run` once."""

    def __init__(self, scenario: Scenario, config: DcfConfig, seed: int, trace: bool = False):
        scenario.validate()
        self.sc = scenario
        self.cfg = config
        self.seed = seed
        self.rng = random.Random(seed)
        self.trace = [] if trace else None
        prop = scenario.propagation
        self.prop = prop
        self.p_th = prop.p_th_dbm
        self.cs_th = config.resolved_cs_threshold_dbm(prop)
        self.sigma = 0.0 if scenario.bernoulli_drop is not None else prop.sigma_db
        self.drop = scenario.bernoulli_drop
        cap = config.capture_threshold_db
        self.cap_lin = None if cap is None else 10.0 ** (cap / 10.0)

        self.slot = _ns(config.slot_us * 1e-6)
        self.sifs = _ns(config.sifs_us * 1e-6)
        self.difs = _ns(config.difs_us * 1e-6)
        self.cts_air = config.airtime_ns(CTS)
        self.ack_air = config.airtime_ns(ACK)
        self.cw_min = config.backoff.cw_min_slots
        self.cw_max = config.backoff.cw_max_slots
        self.srl = config.retry.srl
        self.lrl = config.retry.lrl
        self.rts = config.rts_cts_enabled

        self.nodes = [_Node(i, nid, self.cw_min) for i, (nid, _, _) in enumerate(scenario.nodes)]
        self.index = {n.node_id: n.i for n in self.nodes}
        pos = [(x, y) for _, x, y in scenario.nodes]
        n = len(pos)
        self.mean_dbm = [[0.0] * n for _ in range(n)]
        log_d0 = prop.d0_m
        for a in range(n):
            for b in range(n):
                if a != b:
                    d = max(math.dist(pos[a], pos[b]), log_d0)
                    self.mean_dbm[a][b] = prop.p_d0_dbm - 10.0 * prop.beta * math.log10(d / log_d0)

        self.conns = list(scenario.connections)
        self.cmetrics = [ConnectionMetrics(payload_bytes=c.packet_bytes) for c in self.conns]
        self.path_pos = [
            {nid: k for k, nid in enumerate(c.hops())} for c in self.conns
        ]
        self.packets = []

        self.now = 0
        self.end = _ns(scenario.duration_s)
        self._heap = []
        self._seq = 0
        self._active = 0
        self._busy_since = 0
        self.busy_ns = 0
        self.events = 0

    # -- event queue -------------------------------------------------------

    def _at(self, t, fn, *args):
        self._seq += 1
        heapq.heappush(self._heap, (t, self._seq, fn, args))

    def run(self) -> RunMetrics:
        for k, c in enumerate(self.conns):
            src = self.nodes[self.index[c.source]]
            t0 = _ns(c.start_s)
            if c.rate_pps is None:
                self._at(t0, self._add_saturated, src, k)
            else:
                self._at(t0, self._cbr_arrival, src, k, 0)
        for fid, f in enumerate(self.sc.floods):
            self._at(_ns(f.time_s), self._flood_origin, self.nodes[self.index[f.node]], fid, f.packet_bytes)

        heap = self._heap
        pop = heapq.heappop
        end = self.end
        events = 0
        while heap:
            t, _, fn, args = pop(heap)
            if t > end:
                break
            self.now = t
            fn(*args)
            events += 1
        self.events = events
        self.now = end
        if self._active:
            self.busy_ns += end - self._busy_since
        return self._collect()

    def _collect(self) -> RunMetrics:
        live = {}
        for node in self.nodes:
            for job in list(node.queue) + [node.head]:
                if isinstance(job, _Packet) and job.status == 0:
                    live[id(job)] = job
        for job in live.values():
            self.cmetrics[job.conn].queued += 1
        for cm in self.cmetrics:
            cm.retry_histogram = dict(sorted(cm.retry_histogram.items()))
        return RunMetrics(
            seed=self.seed,
            duration_s=self.sc.duration_s,
            warmup_s=self.sc.duration_s * self.sc.warmup_fraction,
            connections=self.cmetrics,
            nodes=[n.metrics for n in self.nodes],
            busy_time_s=self.busy_ns / NS_PER_S,
            events=self.events,
        )

    def _log(self, node, event, kind="", power=""):
        self.trace.append((self.now / NS_PER_S, node.node_id, event, kind, power))

    # -- traffic -----------------------------------------------------------

    def _new_packet(self, k):
        c = self.conns[k]
        pkt = _Packet(k, self.path_pos[k], self.now, c.packet_bytes)
        self.cmetrics[k].offered += 1
        return pkt

    def _add_saturated(self, node, k):
        node.sat.append(k)
        if node.head is None and node.state == _IDLE:
            self._next_job(node)

    def _cbr_arrival(self, node, k, count):
        limit = self.conns[k].max_packets
        if limit is not None and count >= limit:
            return
        self._enqueue(node, self._new_packet(k))
        interval = 1.0 / self.conns[k].rate_pps
        nxt = _ns(self.conns[k].start_s + (count + 1) * interval)
        self._at(nxt, self._cbr_arrival, node, k, count + 1)

    def _flood_origin(self, node, fid, payload):
        node.floods_seen.add(fid)
        node.metrics.flood_reached = True
        self._enqueue(node, _Flood(fid, payload))

    def _enqueue(self, node, job):
        if len(node.queue) >= self.cfg.queue_capacity:
            if isinstance(job, _Packet):
                job.status = 3
                self.cmetrics[job.conn].dropped_queue += 1
            if self.trace is not None:
                self._log(node, "drop_queue")
            return
        node.queue.append(job)
        if node.head is None and node.state == _IDLE:
            self._next_job(node)

    def _next_job(self, node):
        node.short = node.long = node.attempts = 0
        node.backoff = None
        if node.queue:
            node.head = node.queue.popleft()
        elif node.sat:
            k = node.sat[node.sat_next % len(node.sat)]
            node.sat_next += 1
            node.head = self._new_packet(k)
            limit = self.conns[k].max_packets
            if limit is not None and self.cmetrics[k].offered >= limit:
                node.sat.remove(k)
        else:
            node.head = None
            node.state = _IDLE
            return
        self._contend(node)

    # -- medium state ------------------------------------------------------

    def _update_medium(self, node):
        busy = node.transmitting is not None or node.cs_count > 0 or self.now < node.nav_until
        if busy == node.busy:
            return
        node.busy = busy
        if busy:
            node.token += 1
            if node.countdown_start is not None:
                elapsed = (self.now - node.countdown_start) // self.slot
                node.backoff = max(node.backoff - elapsed, 0)
                node.countdown_start = None
        elif node.state == _CONTEND:
            self._at(self.now + self.difs, self._difs_done, node, node.token)

    def _set_nav(self, node, until):
        if until > node.nav_until:
            node.nav_until = until
            self._at(until, self._update_medium, node)
            self._update_medium(node)

    # -- contention --------------------------------------------------------

    def _contend(self, node):
        node.state = _CONTEND
        if node.backoff is None:
            node.backoff = self.rng.randint(0, node.cw)
            node.metrics.backoff_draws += 1
            node.metrics.backoff_slots_total += node.backoff
        if not node.busy:
            node.token += 1
            self._at(self.now + self.difs, self._difs_done, node, node.token)

    def _difs_done(self, node, token):
        if token != node.token or node.state != _CONTEND:
            return
        if node.backoff == 0:
            self._transmit_head(node)
        else:
            node.countdown_start = self.now
            self._at(self.now + node.backoff * self.slot, self._backoff_done, node, token)

    def _backoff_done(self, node, token):
        if token != node.token or node.state != _CONTEND:
            return
        node.backoff = 0
        node.countdown_start = None
        self._transmit_head(node)

    def _transmit_head(self, node):
        node.backoff = None
        node.token += 1
        job = node.head
        node.state = _TX
        if isinstance(job, _Flood):
            self._start_tx(node, BROADCAST, None, job.payload, 0, job)
            return
        node.attempts += 1
        nxt = self._next_hop(node, job)
        node.peer = nxt
        data_air = self.cfg.airtime_ns(DATA, job.payload)
        if self.rts:
            nav = 3 * self.sifs + self.cts_air + data_air + self.ack_air
            self._start_tx(node, RTS, nxt, 0, nav, job)
        else:
            self._start_tx(node, DATA, nxt, job.payload, self.sifs + self.ack_air, job)

    def _next_hop(self, node, pkt):
        hops = self.conns[pkt.conn].hops()
        return self.nodes[self.index[hops[pkt.path_pos[node.node_id] + 1]]]

    # -- transmissions -----------------------------------------------------

    def _start_tx(self, node, kind, dst, payload, nav, job):
        air = self.cfg.airtime_ns(kind, payload)
        tx = _Tx(kind, node, dst, self.now + air, nav, job)
        node.transmitting = tx
        node.metrics.frames_sent += 1
        for entry in node.rx.values():
            entry[1] = False
        if self._active == 0:
            self._busy_since = self.now
        self._active += 1
        if self.trace is not None:
            self._log(node, "tx_start", kind)

        mean_row = self.mean_dbm[node.i]
        sigma = self.sigma
        gauss = self.rng.gauss
        dbm = [0.0] * len(self.nodes)
        for other in self.nodes:
            if other is node:
                continue
            p = mean_row[other.i]
            if sigma > 0:
                p += gauss(0.0, sigma)
            dbm[other.i] = p
            self._signal_start(other, tx, p)
        tx.dbm = dbm
        self._update_medium(node)
        for other in self.nodes:
            if other is not node:
                self._update_medium(other)
        self._at(tx.end, self._end_tx, tx)

    def _captures(self, node, entry, total_mw):
        if self.cap_lin is None:
            strong = node.cs_count - (1 if entry[2] >= self.cs_th else 0)
            return strong == 0
        return entry[0] >= self.cap_lin * (total_mw - entry[0])

    def _signal_start(self, node, tx, dbm):
        mw = 10.0 ** (dbm / 10.0)
        if dbm >= self.p_th:
            node.last_sig_start = self.now
        entry = [mw, node.transmitting is None and dbm >= self.p_th, dbm]
        node.rx[tx] = entry
        if dbm >= self.cs_th:
            node.cs_count += 1
        total = 0.0
        for e in node.rx.values():
            total += e[0]
        for e in node.rx.values():
            if e[1] and not self._captures(node, e, total):
                e[1] = False

    def _end_tx(self, tx):
        node = tx.src
        node.transmitting = None
        self._active -= 1
        if self._active == 0:
            self.busy_ns += self.now - self._busy_since
        if tx.kind == RTS:
            node.state = _WAIT_CTS
            node.timeout_token += 1
            self._at(self.now + self.sifs + self.cts_air + self.slot, self._timeout, node, node.timeout_token, False)
        elif tx.kind == DATA and node.state == _TX:
            node.state = _WAIT_ACK
            node.timeout_token += 1
            self._at(self.now + self.sifs + self.ack_air + self.slot, self._timeout, node, node.timeout_token, True)
        elif tx.kind == BROADCAST:
            self._finish_job(node)
        self._update_medium(node)
        for other in self.nodes:
            if other is not node:
                self._signal_end(other, tx)

    def _signal_end(self, node, tx):
        entry = node.rx.pop(tx)
        if entry[2] >= self.cs_th:
            node.cs_count -= 1
        addressed = tx.dst is node or tx.kind == BROADCAST
        ok = entry[1] and node.transmitting is None
        if ok and self.drop:
            ok = self._bernoulli_u(tx, node) >= self.drop
        if self.trace is not None and addressed:
            self._log(node, "rx_ok" if ok else "rx_fail", tx.kind, entry[2])
        if ok:
            self._receive(node, tx)
        self._update_medium(node)

    def _bernoulli_u(self, tx, node):
        if tx.kind != BROADCAST:
            return self.rng.random()
        # a node broadcasts each flood once, so (sender, receiver, flood) names
        # the reception; keying on it couples runs that differ only in drop_p
        key = f"{self.seed}/{tx.src.node_id}/{node.node_id}/{tx.job.flood_id}".encode()
        return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "big") / 2.0**64

    # -- frame handling ----------------------------------------------------

    def _receive(self, node, tx):
        kind = tx.kind
        if kind == BROADCAST:
            self._deliver_flood(node, tx.job)
            return
        if tx.dst is not node:
            if tx.nav:
                until = self.now + tx.nav
                self._set_nav(node, until)
                if kind == RTS and node.nav_until == until:
                    wait = 2 * self.sifs + self.cts_air + 2 * self.slot
                    self._at(self.now + wait, self._nav_reset, node, self.now, until)
            return
        if kind == RTS:
            if node.state not in (_WAIT_CTS, _WAIT_ACK, _TX) and self.now >= node.nav_until:
                nav = tx.nav - self.sifs - self.cts_air
                self._at(self.now + self.sifs, self._respond, node, CTS, tx.src, nav, tx.job)
        elif kind == CTS:
            if node.state == _WAIT_CTS and node.peer is tx.src:
                node.timeout_token += 1
                node.state = _TX
                self._at(self.now + self.sifs, self._send_data, node)
        elif kind == DATA:
            self._at(self.now + self.sifs, self._respond, node, ACK, tx.src, 0, tx.job)
            self._deliver_packet(node, tx.job)
        elif kind == ACK:
            if node.state == _WAIT_ACK and node.peer is tx.src:
                node.timeout_token += 1
                self._success(node)

    def _nav_reset(self, node, rts_end, until):
        # RTS-set NAV is dropped when no frame followed the RTS
        if node.nav_until == until and node.last_sig_start <= rts_end:
            node.nav_until = self.now
            self._update_medium(node)

    def _respond(self, node, kind, dst, nav, job):
        if node.transmitting is not None:
            return
        self._start_tx(node, kind, dst, 0, nav, job)

    def _send_data(self, node):
        if node.transmitting is not None or node.state != _TX:
            return
        job = node.head
        self._start_tx(node, DATA, node.peer, job.payload, self.sifs + self.ack_air, job)

    def _deliver_packet(self, node, pkt):
        pos = pkt.path_pos[node.node_id]
        if pkt.hop >= pos:
            return  # duplicate after a lost ACK
        pkt.hop = pos
        if pkt.status != 0:
            return
        cm = self.cmetrics[pkt.conn]
        if pos == len(pkt.path_pos) - 1:
            pkt.status = 1
            cm.delivered += 1
            cm.delivery_times_s.append(self.now / NS_PER_S)
        else:
            self._enqueue(node, pkt)

    def _deliver_flood(self, node, flood):
        if flood.flood_id in node.floods_seen:
            return
        node.floods_seen.add(flood.flood_id)
        node.metrics.flood_reached = True
        jitter = self.rng.uniform(0.0, self.sc.flood_jitter_s)
        self._at(self.now + _ns(jitter), self._enqueue, node, flood)

    # -- outcomes ----------------------------------------------------------

    def _success(self, node):
        pkt = node.head
        cm = self.cmetrics[pkt.conn]
        cm.mac_acked += 1
        cm.retry_histogram[node.attempts] = cm.retry_histogram.get(node.attempts, 0) + 1
        if pkt.path_pos[node.node_id] == len(pkt.path_pos) - 2:
            cm.delays_s.append((self.now - pkt.created) / NS_PER_S)
        node.cw = self.cw_min
        self._finish_job(node)

    def _timeout(self, node, token, long_failure):
        if token != node.timeout_token:
            return
        if self.rts:
            node.short += 1
            if long_failure:
                node.long += 1
        else:
            node.long += 1
        if node.short >= self.srl or node.long >= self.lrl:
            pkt = node.head
            cm = self.cmetrics[pkt.conn]
            cm.mac_failed += 1
            if pkt.status == 0 and pkt.hop <= pkt.path_pos[node.node_id]:
                pkt.status = 2
                cm.dropped_retry += 1
            if self.trace is not None:
                self._log(node, "drop_retry")
            if self.cfg.reset_cw_on_drop:
                node.cw = self.cw_min
            self._finish_job(node)
            return
        if self.cfg.backoff_enabled:
            node.cw = min(2 * node.cw + 1, self.cw_max)
        node.backoff = None
        self._contend(node)

    def _finish_job(self, node):
        node.head = None
        node.state = _IDLE
        node.peer = None
        self._next_job(node)


def run(scenario: Scenario, config: DcfConfig = DcfConfig(), seed: int = 0, trace: bool = False):
    """Simulate ``scenario`` once; deterministic for fixed arguments.

    Returns :class:`RunMetrics`, or ``(RunMetrics, trace_rows)`` when
    ``trace`` is set.
    """
    sim = Simulator(scenario, config, seed, trace=trace)
    metrics = sim.run()
    if trace:
        return metrics, sim.trace
    return metrics


@dataclass(frozen=True)
class DelayStats:
    n: int
    mean_s: float
    p50_s: float
    p90_s: float
    p99_s: float


EMPTY_DELAY = None


def one_hop_delay(metrics: RunMetrics, connection: int = 0) -> DelayStats | None:
    """Enqueue-to-ACK delay statistics; ``None`` if nothing was delivered."""
    delays = metrics.connections[connection].delays_s
    if not delays:
        return EMPTY_DELAY
    ordered = sorted(delays)

    def pct(q):
        return ordered[min(len(ordered) - 1, int(q * len(ordered)))]

    return DelayStats(
        n=len(ordered),
        mean_s=statistics.fmean(ordered),
        p50_s=pct(0.5),
        p90_s=pct(0.9),
        p99_s=pct(0.99),
    )


def single_link(distance_m: float, propagation: PropagationParams = PropagationParams(),
                packet_bytes: int = 500, rate_pps: float | None = None,
                duration_s: float = 60.0, **kw) -> Scenario:
    return Scenario(
        nodes=((0, 0.0, 0.0), (1, float(distance_m), 0.0)),
        connections=(Connection(0, 1, packet_bytes, rate_pps),),
        propagation=propagation,
        duration_s=duration_s,
        **kw,
    )


def saturation_capacity(
    distance_m: float,
    config: DcfConfig = DcfConfig(),
    *,
    propagation: PropagationParams = PropagationParams(),
    packet_bytes: int = 500,
    duration_s: float = 60.0,
    warmup_fraction: float = 0.1,
    seed: int = 0,
) -> float:
    """Delivered payload bit rate of one saturated link, warm-up discarded."""
    sc = single_link(distance_m, propagation, packet_bytes, None, duration_s,
                     warmup_fraction=warmup_fraction)
    m = run(sc, config, seed)
    warm = m.warmup_s
    delivered = m.connections[0].delivered_after(warm)
    return delivered * packet_bytes * 8 / (m.duration_s - warm)
