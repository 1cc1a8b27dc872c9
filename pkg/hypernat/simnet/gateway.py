"""
The emulated gateway: sender and access switch, NAT elements, coordinator,
receiver echo, driven by the event queue.

Topologies:
    hypernat:  N smartNICs behind an ECMP switch, rule messages through the host.
    onenic:    one smartNIC holding the whole external space.
    servernat: one server element holding the whole external space.

Every element is a FIFO single server. A job occupies it for its capacity
cost and its output leaves after its traversal latency (see
:class:`ElementCosts`). NAT state changes when a job is accepted.
"""

import csv
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterable, Iterator, List, NamedTuple, Optional, Sequence, Union

import numpy as np
from typing_extensions import TypedDict

from hypernat.addrspace import Endpoint, FiveTuple, partition
from hypernat.analytics import RunMetrics, rtt_percentiles, window_throughput
from hypernat.coordinator import CoordinatorState
from hypernat.descriptions import CALIBRATION_NOTE
from hypernat.errors import ConfigError
from hypernat.hashing import assign_nic
from hypernat.nic import MessageKind, NicState, RuleMessage, Translation
from hypernat.packet import Direction, Packet
from hypernat.simnet.engine import EventKind, EventQueue
from hypernat.simnet.fabric import FabricConfig, Topology, config_for
from hypernat.simnet.trace import TraceRecord, format_us, gen_trace, validate_trace
from hypernat.state import CoordinatorCounters, DropReason, NicCounters

logger = logging.getLogger(__name__)

EVENT_LOG_HEADER = ["pkt_seq", "flow_id", "event", "kind", "t_us"]

TIMELINE_EVENTS = [
    "sent",
    "nic_arrival",
    "out_rule_ready",
    "receiver_received",
    "receiver_echo",
    "ack_at_nic",
    "in_rule_ready",
    "returned",
]

MAX_AUDIT_EXAMPLES = 20


@dataclass(frozen=True)
class ElementCosts:
    """Per-job costs of one NAT element, in ns."""

    service_ns: int
    lookup_ns: int
    create_ns: int
    create_cost_ns: int
    msg_cost_ns: int

    @classmethod
    def for_topology(cls, cfg: FabricConfig, topology: Topology) -> "ElementCosts":
        if topology is Topology.SERVER_NAT:
            return cls(
                service_ns=cfg.ns("server_service_us"),
                lookup_ns=cfg.ns("server_lookup_us"),
                create_ns=cfg.ns("rule_create_us"),
                create_cost_ns=cfg.ns("server_rule_create_cost_us"),
                msg_cost_ns=cfg.ns("rule_msg_cost_us"),
            )
        return cls(
            service_ns=cfg.ns("nic_service_us"),
            lookup_ns=cfg.ns("nic_lookup_us"),
            create_ns=cfg.ns("rule_create_us"),
            create_cost_ns=cfg.ns("rule_create_cost_us"),
            msg_cost_ns=cfg.ns("rule_msg_cost_us"),
        )


class EventRow(NamedTuple):
    pkt_seq: int
    flow_id: int
    event: str
    kind: str
    t_ns: int


class AuditReport(TypedDict):
    passed: bool
    translations_checked: int
    connections: int
    violations: Dict[str, int]
    examples: List[str]


class ConsistencyAudit:
    """
    Checks every translation the gateway performs:

    - tdc: all packets of a connection see one external endpoint, outgoing
      as source and incoming as destination, and incoming packets get the
      connection's internal endpoint back.
    - uniqueness: no external endpoint serves two connections.
    - clone: a rule held by any NIC is identical to the owner's copy.

    Connections are identified by trace flow id, which the NAT itself never reads.
    """

    def __init__(self):
        self.external_of: Dict[int, Endpoint] = {}
        self.internal_of: Dict[int, Endpoint] = {}
        self.flow_of_external: Dict[Endpoint, int] = {}
        self.violations: Dict[str, int] = {"tdc": 0, "uniqueness": 0, "clone": 0}
        self.examples: List[str] = []
        self.checked = 0

    def _violate(self, kind: str, message: str) -> None:
        self.violations[kind] += 1
        if len(self.examples) < MAX_AUDIT_EXAMPLES:
            self.examples.append(f"{kind}: {message}")
        logger.warning("consistency violation (%s): %s", kind, message)

    def observe(self, tr: Translation) -> None:
        self.checked += 1
        flow = tr.before.flow_id
        if tr.before.direction is Direction.OUTGOING:
            external = tr.after.tuple.src
            known = self.external_of.setdefault(flow, external)
            self.internal_of.setdefault(flow, tr.before.tuple.src)
            if known != external:
                self._violate("tdc", f"flow {flow} left as {external}, earlier as {known}")
            holder = self.flow_of_external.setdefault(external, flow)
            if holder != flow:
                self._violate("uniqueness", f"{external} serves flows {holder} and {flow}")
            return

        expected = self.external_of.get(flow)
        if expected is None or tr.before.tuple.dst != expected:
            self._violate("tdc", f"flow {flow} returned to {tr.before.tuple.dst}, expected {expected}")
        elif tr.after.tuple.dst != self.internal_of[flow]:
            self._violate("tdc", f"flow {flow} delivered to {tr.after.tuple.dst}, expected {self.internal_of[flow]}")

    def check_tables(self, nics: Dict[int, NicState]) -> None:
        for nic in nics.values():
            for rule in nic.table.forward.values():
                owner = nics[rule.owner_nic]
                if owner.table.forward.get(rule.forward_key) != rule:
                    self._violate("clone", f"NIC {nic.id} holds {rule} which NIC {rule.owner_nic} does not")

    def report(self) -> AuditReport:
        return AuditReport(
            passed=not any(self.violations.values()),
            translations_checked=self.checked,
            connections=len(self.external_of),
            violations=dict(self.violations),
            examples=list(self.examples),
        )


@dataclass
class RunResult:
    topology: Topology
    config: FabricConfig
    metrics: RunMetrics
    nic_counters: Dict[str, NicCounters]
    coordinator_counters: CoordinatorCounters
    audit: AuditReport
    events: List[EventRow] = field(default_factory=list)
    timelines: Dict[int, Dict[str, int]] = field(default_factory=dict)
    gateway: Optional["Gateway"] = None

    def to_report(self) -> Dict[str, Any]:
        return {
            "topology": self.topology.value,
            "config": self.config.echo(),
            "calibration": CALIBRATION_NOTE,
            "subspaces": self.gateway.plan.to_dict() if self.gateway else None,
            "metrics": self.metrics.to_dict(),
            "nic_counters": self.nic_counters,
            "coordinator_counters": self.coordinator_counters,
            "consistency": self.audit,
        }


class Gateway:
    """One run's worth of fabric state. Build with :func:`create_gateway`."""

    def __init__(self, cfg: FabricConfig, topology: Topology, costs: ElementCosts):
        self.cfg = cfg
        self.topology = topology
        self.costs = costs
        self.plan = partition(cfg.external_space(), cfg.n_nics)
        self.hash_cfg = cfg.hash_config()
        self.nics: Dict[int, NicState] = {
            nic_id: NicState(nic_id, self.plan, self.hash_cfg, cfg.install_mode)
            for nic_id in range(1, cfg.n_nics + 1)
        }
        self.coordinator = CoordinatorState(self.nics, cfg.ns("coord_hop_us"), cfg.coord_capacity_mps)
        self.audit = ConsistencyAudit()
        self.queue = EventQueue()

        self.link_ns = cfg.ns("link_us")
        self.hop_ns = cfg.ns("coord_hop_us")
        self.fetch_lookup_ns = cfg.ns("fetch_lookup_us")
        self.receiver_ns = cfg.ns("receiver_us")
        self.dispatch_ns = cfg.ns("receiver_dispatch_us")
        self.sender_rx_ns = cfg.ns("sender_rx_us")

        # switch-side cache, one hash per distinct tuple
        self.flow_hash_cache: Dict[FiveTuple, int] = {}

        self.handlers: Dict[EventKind, Callable[..., None]] = {
            EventKind.ARRIVE_AT_SWITCH: self._on_arrive_at_switch,
            EventKind.ARRIVE_AT_NIC: self._on_arrive_at_nic,
            EventKind.NIC_SERVICE_DONE: self._on_service_done,
            EventKind.RULE_MSG_AT_COORDINATOR: self._on_msg_at_coordinator,
            EventKind.RULE_MSG_DELIVERY: self._on_msg_delivery,
            EventKind.ARRIVE_AT_RECEIVER: self._on_arrive_at_receiver,
            EventKind.RECEIVER_ECHO: self._on_receiver_echo,
            EventKind.RETURN_TO_SENDER: self._on_return_to_sender,
        }

        self.emit_events = False
        self.keep_timelines = False
        self.events: List[EventRow] = []
        self.timelines: Dict[int, Dict[str, int]] = {}
        self.rtt_ns: List[int] = []
        self.drops: Dict[str, int] = {}
        self.sent = 0
        self.window = (0, 0)
        self.translations_in_window = 0
        self._records: Iterator[TraceRecord] = iter(())
        self._started = False

    def element_name(self, nic_id: int) -> str:
        return "server" if self.topology is Topology.SERVER_NAT else f"nic{nic_id}"

    def dispatch(self, ft: FiveTuple) -> int:
        """NIC the switch (or the receiver's echo) sends ``ft`` to."""
        if self.cfg.n_nics == 1:
            return 1
        nic_id = self.flow_hash_cache.get(ft)
        if nic_id is None:
            nic_id = self.flow_hash_cache[ft] = assign_nic(ft, self.hash_cfg)
        return nic_id

    def _stamp(self, pkt: Packet, event: str, kind: EventKind, t_ns: int) -> None:
        pkt.timestamps[event] = t_ns
        if self.emit_events:
            self.events.append(EventRow(pkt.pkt_seq, pkt.flow_id, event, kind.value, t_ns))

    def _drop(self, pkt: Packet, reason: DropReason, now: int, kind: EventKind) -> None:
        self.drops[reason] = self.drops.get(reason, 0) + 1
        self._stamp(pkt, f"drop_{reason}", kind, now)

    def _forward(self, nic_id: int, tr: Translation, ready: int, depart: int, kind: EventKind) -> None:
        self.audit.observe(tr)
        ready_event = "out_rule_ready" if tr.before.direction is Direction.OUTGOING else "in_rule_ready"
        self._stamp(tr.after, ready_event, kind, ready)
        self.queue.schedule(depart, EventKind.NIC_SERVICE_DONE, nic_id, tr)

    def _send_messages(self, messages: Iterable[RuleMessage], leave: int) -> None:
        for msg in messages:
            self.queue.schedule(leave + self.hop_ns, EventKind.RULE_MSG_AT_COORDINATOR, msg)

    def _emit_next(self) -> None:
        rec = next(self._records, None)
        if rec is None:
            return
        self.sent += 1
        pkt = Packet(self.sent, rec.flow_id, rec.tuple, Direction.OUTGOING, rec.size_bytes)
        if self.keep_timelines:
            self.timelines[pkt.pkt_seq] = pkt.timestamps
        self.queue.schedule(rec.t_ns, EventKind.ARRIVE_AT_SWITCH, pkt)

    def _on_arrive_at_switch(self, now: int, pkt: Packet) -> None:
        self._stamp(pkt, "sent", EventKind.ARRIVE_AT_SWITCH, now)
        self.queue.schedule(now + self.link_ns, EventKind.ARRIVE_AT_NIC, self.dispatch(pkt.tuple), pkt)
        self._emit_next()

    def _on_arrive_at_nic(self, now: int, nic_id: int, pkt: Packet) -> None:
        nic = self.nics[nic_id]
        costs = self.costs
        kind = EventKind.ARRIVE_AT_NIC

        if pkt.direction is Direction.OUTGOING:
            self._stamp(pkt, "nic_arrival", kind, now)
            effects = nic.on_outgoing_packet(pkt)
            occupancy = costs.service_ns
            if effects.created is not None:
                occupancy += costs.create_cost_ns
            if effects.messages:
                occupancy += costs.msg_cost_ns
            start = nic.reserve(now, occupancy)
            for dropped, reason in effects.dropped:
                self._drop(dropped, reason, start, kind)
            if effects.created is not None:
                ready = depart = start + costs.create_ns
            else:
                ready, depart = start, start + costs.lookup_ns
            for tr in effects.forwarded:
                self._forward(nic_id, tr, ready, depart, kind)
            self._send_messages(effects.messages, depart)
            return

        self._stamp(pkt, "ack_at_nic", kind, now)
        effects = nic.on_incoming_packet(pkt)
        occupancy = costs.service_ns + (costs.msg_cost_ns if effects.messages else 0)
        start = nic.reserve(now, occupancy)
        for tr in effects.forwarded:
            self._forward(nic_id, tr, start, start + costs.lookup_ns, kind)
        for dropped, reason in effects.dropped:
            self._drop(dropped, reason, start, kind)
        self._send_messages(effects.messages, start)

    def _on_service_done(self, now: int, nic_id: int, tr: Translation) -> None:
        pkt = tr.after
        start, end = self.window
        if start <= now <= end:
            self.translations_in_window += 1
        if pkt.direction is Direction.OUTGOING:
            self._stamp(pkt, "translated_out", EventKind.NIC_SERVICE_DONE, now)
            self.queue.schedule(now + self.link_ns, EventKind.ARRIVE_AT_RECEIVER, pkt)
        else:
            self._stamp(pkt, "translated_in", EventKind.NIC_SERVICE_DONE, now)
            self.queue.schedule(now + self.link_ns + self.sender_rx_ns, EventKind.RETURN_TO_SENDER, pkt)

    def _on_msg_at_coordinator(self, now: int, msg: RuleMessage) -> None:
        delivery = self.coordinator.route(msg, now)
        if delivery is not None:
            self.queue.schedule(delivery, EventKind.RULE_MSG_DELIVERY, msg)

    def _on_msg_delivery(self, now: int, msg: RuleMessage) -> None:
        nic = self.nics[msg.target_nic_id]
        costs = self.costs
        kind = EventKind.RULE_MSG_DELIVERY
        effects = nic.on_rule_message(msg)

        if msg.kind in (MessageKind.INSTALL, MessageKind.FETCH_REPLY):
            start = nic.reserve(now, costs.msg_cost_ns + costs.service_ns * len(effects.forwarded))
            for tr in effects.forwarded:
                self._forward(nic.id, tr, start, start, kind)
        elif msg.kind is MessageKind.FETCH_REQUEST:
            start = nic.reserve(now, costs.msg_cost_ns)
            self._send_messages(effects.messages, start + self.fetch_lookup_ns)
        else:
            start = nic.reserve(now, costs.msg_cost_ns)
            for dropped, reason in effects.dropped:
                self._drop(dropped, reason, start, kind)

    def _on_arrive_at_receiver(self, now: int, pkt: Packet) -> None:
        self._stamp(pkt, "receiver_received", EventKind.ARRIVE_AT_RECEIVER, now)
        self.queue.schedule(now + self.receiver_ns, EventKind.RECEIVER_ECHO, pkt)

    def _on_receiver_echo(self, now: int, pkt: Packet) -> None:
        self._stamp(pkt, "receiver_echo", EventKind.RECEIVER_ECHO, now)
        echo = pkt.echo()
        self.queue.schedule(
            now + self.dispatch_ns + self.link_ns, EventKind.ARRIVE_AT_NIC, self.dispatch(echo.tuple), echo
        )

    def _on_return_to_sender(self, now: int, pkt: Packet) -> None:
        self._stamp(pkt, "returned", EventKind.RETURN_TO_SENDER, now)
        self.rtt_ns.append(now - pkt.timestamps["sent"])

    def _in_flight(self) -> int:
        on_wire = sum(1 for event in self.queue if event.payload and isinstance(event.payload[-1], (Packet, Translation)))
        return on_wire + sum(nic.pending_packets for nic in self.nics.values())

    def simulate(
        self,
        trace: Sequence[TraceRecord],
        emit_events: bool = False,
        keep_timelines: bool = False,
    ) -> RunResult:
        if self._started:
            raise RuntimeError("a Gateway runs one trace; build a new one")
        self._started = True
        self.emit_events = emit_events
        self.keep_timelines = keep_timelines

        if trace:
            t0, t_end = trace[0].t_ns, trace[-1].t_ns
        else:
            t0 = t_end = 0
        self.window = (t0 + math.floor(self.cfg.warmup_fraction * (t_end - t0)), t_end)
        horizon = t_end + self.cfg.ns("drain_us")

        logger.info(
            "running %d packets through %s (%d element(s), %s mode)",
            len(trace),
            self.topology.value,
            len(self.nics),
            self.cfg.install_mode.value,
        )
        self._records = iter(trace)
        self._emit_next()
        handled = 0
        while self.queue and self.queue.peek_time() <= horizon:
            event = self.queue.pop()
            self.handlers[event.kind](event.time, *event.payload)
            handled += 1

        in_flight = self._in_flight()
        if in_flight:
            logger.warning("%d packet(s) still in flight at the %s us horizon", in_flight, format_us(horizon))
        self.audit.check_tables(self.nics)
        audit = self.audit.report()
        if not audit["passed"]:
            logger.error("consistency check failed: %s", audit["violations"])

        elapsed = max(1, self.queue.now - t0)
        utilization = {self.element_name(i): min(1.0, nic.busy_ns / elapsed) for i, nic in self.nics.items()}
        if self.topology is Topology.HYPERNAT:
            utilization["host"] = min(1.0, self.coordinator.busy_ns / elapsed)

        samples = np.asarray(self.rtt_ns, dtype=float) / 1000
        metrics = RunMetrics(
            throughput_pps=window_throughput(self.translations_in_window, *self.window),
            window_start_ns=self.window[0],
            window_end_ns=self.window[1],
            translations_in_window=self.translations_in_window,
            rtt_samples_us=samples,
            percentiles=rtt_percentiles(samples),
            drops=dict(self.drops),
            utilization=utilization,
            packets_sent=self.sent,
            packets_returned=len(self.rtt_ns),
            packets_dropped=sum(self.drops.values()),
            packets_in_flight=in_flight,
            n_flows=len({rec.flow_id for rec in trace}),
            failed_flows=sum(len(nic.failed_flows) for nic in self.nics.values()),
        )
        logger.info(
            "%s finished after %d events: %.1f pps, %d returned, %d dropped, %d in flight",
            self.topology.value,
            handled,
            metrics.throughput_pps,
            metrics.packets_returned,
            metrics.packets_dropped,
            in_flight,
        )
        return RunResult(
            topology=self.topology,
            config=self.cfg,
            metrics=metrics,
            nic_counters={self.element_name(i): dict(nic.counters) for i, nic in self.nics.items()},
            coordinator_counters=dict(self.coordinator.counters),
            audit=audit,
            events=self.events,
            timelines=self.timelines,
            gateway=self,
        )


def create_gateway(cfg: FabricConfig, topology: Union[Topology, str] = Topology.HYPERNAT) -> Gateway:
    """
    Build the fabric for ``topology``.

    Raises:
        ConfigError: If a single-element baseline is asked for more than one NIC.
    """
    topology = Topology(topology)
    if topology is not Topology.HYPERNAT and cfg.n_nics != 1:
        raise ConfigError(f"{topology.value} has exactly one element, got n_nics={cfg.n_nics}")
    return Gateway(cfg, topology, ElementCosts.for_topology(cfg, topology))


def run(
    cfg: FabricConfig,
    trace: Sequence[TraceRecord],
    topology: Union[Topology, str] = Topology.HYPERNAT,
    emit_events: bool = False,
    keep_timelines: bool = False,
) -> RunResult:
    """
    Push ``trace`` through ``topology`` until the last packet plus the drain time.

    Args:
        cfg: Fabric configuration.
        trace: Records sorted by send time, internal sources, remote destinations.
        topology: hypernat, onenic or servernat.
        emit_events: Collect an event-log row for every named packet event.
        keep_timelines: Keep each packet's named-event timestamps by ``pkt_seq``.

    Raises:
        ConfigError: For a baseline with n_nics != 1.
        ValidationError: If the trace is unsorted or addresses are misplaced.
    """
    gateway = create_gateway(cfg, topology)
    validate_trace(list(trace), cfg.address_spaces())
    return gateway.simulate(trace, emit_events=emit_events, keep_timelines=keep_timelines)


def saturation_trace(
    cfg: FabricConfig, offered_pps: float, n_flows: int, total_packets: int, seed: int
) -> List[TraceRecord]:
    """Trace for a gateway load of ``offered_pps``; the echo supplies half, the sender the rest."""
    if offered_pps <= 0:
        raise ValueError(f"offered_pps must be positive, got {offered_pps}")
    return gen_trace(
        n_flows,
        max(1, math.ceil(total_packets / n_flows)),
        max(1, round(offered_pps / 2)),
        seed,
        cfg.address_spaces(),
        proto=cfg.proto,
        size_bytes=cfg.size_bytes,
    )


def saturate_run(
    cfg: FabricConfig,
    topology: Union[Topology, str],
    offered_pps: float,
    n_flows: int = 10_000,
    total_packets: int = 200_000,
    seed: int = 1,
) -> RunResult:
    topology = Topology(topology)
    cfg = config_for(cfg, topology)
    return run(cfg, saturation_trace(cfg, offered_pps, n_flows, total_packets, seed), topology)


def saturate(
    cfg: FabricConfig,
    topology: Union[Topology, str],
    offered_pps: float,
    n_flows: int = 10_000,
    total_packets: int = 200_000,
    seed: int = 1,
) -> float:
    """Translations per second the gateway completes under ``offered_pps`` of load, warmup excluded."""
    return saturate_run(cfg, topology, offered_pps, n_flows, total_packets, seed).metrics.throughput_pps


@dataclass
class TimelineReport:
    """Named-event times of one connection, relative to each packet's send time, in us."""

    tuple: FiveTuple
    owner_nic: int
    return_nic: int
    repeat: int
    mean: Dict[str, Dict[str, float]]
    std: Dict[str, Dict[str, float]]

    def rows(self) -> List[List[Any]]:
        return [
            [event, self.mean["first"].get(event), self.mean["steady"].get(event)]
            for event in TIMELINE_EVENTS
        ]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "tuple": str(self.tuple),
            "owner_nic": self.owner_nic,
            "return_nic": self.return_nic,
            "repeat": self.repeat,
            "mean_us": self.mean,
            "std_us": self.std,
        }


def timeline_tuple(cfg: FabricConfig) -> FiveTuple:
    """
    First internal -> remote tuple whose return traffic hashes to a NIC other
    than the one that creates its rule.

    Raises:
        ConfigError: With fewer than two NICs, where no such tuple exists.
    """
    if cfg.n_nics < 2:
        raise ConfigError("the timeline needs a connection crossing two NICs, set n_nics >= 2")
    spaces = cfg.address_spaces()
    hash_cfg = cfg.hash_config()
    plan = partition(cfg.external_space(), cfg.n_nics)
    src_ip = int(spaces.internal.network_address) + 1
    remote = Endpoint(int(spaces.remote.network_address) + 1, 80)
    for port in range(1024, 65536):
        ft = FiveTuple(Endpoint(src_ip, port), remote, cfg.proto)
        owner = assign_nic(ft, hash_cfg)
        sub = plan.subspace(owner)
        external = sub.space.endpoint_at(sub.start)
        if assign_nic(FiveTuple(remote, external, cfg.proto), hash_cfg) != owner:
            return ft
    raise ConfigError("no internal port yields a return path through another NIC")


def timeline(cfg: FabricConfig, repeat: int = 1, steady_gap_us: float = 10_000) -> TimelineReport:
    """
    Event timeline of a first packet and of a later steady-state packet of one
    connection, through the passive two-direction path. Repeated runs are
    summarized by mean and standard deviation.
    """
    if repeat < 1:
        raise ValueError(f"repeat must be >= 1, got {repeat}")
    ft = timeline_tuple(cfg)
    trace = [
        TraceRecord(0, ft, cfg.size_bytes, 1),
        TraceRecord(round(steady_gap_us * 1000), ft, cfg.size_bytes, 1),
    ]
    samples: Dict[str, Dict[str, List[float]]] = {"first": {}, "steady": {}}
    for _ in range(repeat):
        result = run(cfg, trace, Topology.HYPERNAT, keep_timelines=True)
        for label, seq in (("first", 1), ("steady", 2)):
            stamps = result.timelines[seq]
            sent = stamps["sent"]
            for event in TIMELINE_EVENTS:
                if event in stamps:
                    samples[label].setdefault(event, []).append((stamps[event] - sent) / 1000)

    hash_cfg = cfg.hash_config()
    owner = assign_nic(ft, hash_cfg)
    plan = partition(cfg.external_space(), cfg.n_nics)
    sub = plan.subspace(owner)
    return_nic = assign_nic(FiveTuple(ft.dst, sub.space.endpoint_at(sub.start), ft.proto), hash_cfg)
    return TimelineReport(
        tuple=ft,
        owner_nic=owner,
        return_nic=return_nic,
        repeat=repeat,
        mean={label: {e: float(np.mean(v)) for e, v in events.items()} for label, events in samples.items()},
        std={label: {e: float(np.std(v)) for e, v in events.items()} for label, events in samples.items()},
    )


def write_event_log(path: Union[str, os.PathLike], rows: Iterable[EventRow]) -> int:
    count = 0
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(EVENT_LOG_HEADER)
        for row in rows:
            writer.writerow([row.pkt_seq, row.flow_id, row.event, row.kind, format_us(row.t_ns)])
            count += 1
    return count
