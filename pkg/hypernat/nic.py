"""
Per-smartNIC protocol logic: NAT table, RuleBuilder and RuleAgent.

A NIC translates with whatever rules its table holds. The RuleBuilder creates
rules for new outgoing connections out of the NIC's own external subspace.
Incoming packets that miss the table are resolved through the coordinator.
In passive mode the NIC fetches the rule from the NIC that owns the packet's
external destination and parks packets until the reply arrives. In active
mode the rule creator pushes the rule to the NIC that return traffic hashes to.

Handlers are pure protocol: they mutate this NIC's state and describe what
leaves it as :class:`NicEffects`. Timing belongs to the simulation engine.
"""

import logging
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Deque, Dict, List, Optional, Set, Tuple

from hypernat.addrspace import Endpoint, FiveTuple, SubspaceAllocator, SubspacePlan
from hypernat.errors import KeyMismatch, NotInExternalSpace, SubspaceExhausted
from hypernat.hashing import HashConfig, assign_nic
from hypernat.packet import Direction, Packet
from hypernat.state import DropReason, NicCounters, new_nic_counters

logger = logging.getLogger(__name__)

# (internal, remote, proto) and (remote, external, proto)
ForwardKey = Tuple[Endpoint, Endpoint, int]
ReverseKey = Tuple[Endpoint, Endpoint, int]


class InstallMode(str, Enum):
    PASSIVE = "passive"
    ACTIVE = "active"


class MessageKind(str, Enum):
    INSTALL = "install"
    FETCH_REQUEST = "fetch_request"
    FETCH_REPLY = "fetch_reply"
    FETCH_MISS = "fetch_miss"


@dataclass(frozen=True, slots=True)
class NatRule:
    internal: Endpoint
    external: Endpoint
    remote: Endpoint
    proto: int
    owner_nic: int

    @property
    def forward_key(self) -> ForwardKey:
        return (self.internal, self.remote, self.proto)

    @property
    def reverse_key(self) -> ReverseKey:
        return (self.remote, self.external, self.proto)

    def to_dict(self) -> Dict[str, object]:
        return {
            "internal": str(self.internal),
            "external": str(self.external),
            "remote": str(self.remote),
            "proto": self.proto,
            "owner_nic": self.owner_nic,
        }


class NatTable:
    """Both lookup maps of one NIC. A rule is always entered into both."""

    def __init__(self):
        self.forward: Dict[ForwardKey, NatRule] = {}
        self.reverse: Dict[ReverseKey, NatRule] = {}

    def __len__(self) -> int:
        return len(self.forward)

    def install(self, rule: NatRule) -> bool:
        """Insert ``rule``. Returns False when the identical rule was already present."""
        present = self.forward.get(rule.forward_key)
        if present == rule:
            return False
        if present is not None or rule.reverse_key in self.reverse:
            raise ValueError(f"conflicting rule for {rule.forward_key}: {present} vs {rule}")
        self.forward[rule.forward_key] = rule
        self.reverse[rule.reverse_key] = rule
        return True


@dataclass(frozen=True, slots=True)
class RuleMessage:
    """``<target_NIC_ID, rule>`` plus the kind and key passive fetch needs."""

    target_nic_id: int
    kind: MessageKind
    source_nic_id: int = 0
    rule: Optional[NatRule] = None
    request_key: Optional[ReverseKey] = None

    def __post_init__(self):
        if self.kind in (MessageKind.INSTALL, MessageKind.FETCH_REPLY):
            if self.rule is None:
                raise ValueError(f"{self.kind.value} message needs a rule")
        elif self.request_key is None:
            raise ValueError(f"{self.kind.value} message needs a request key")

    @property
    def key(self) -> ReverseKey:
        return self.rule.reverse_key if self.rule is not None else self.request_key


@dataclass(slots=True)
class Translation:
    before: Packet
    after: Packet
    rule: NatRule


@dataclass
class NicEffects:
    """What one handler call produced."""

    forwarded: List[Translation] = field(default_factory=list)
    messages: List[RuleMessage] = field(default_factory=list)
    dropped: List[Tuple[Packet, DropReason]] = field(default_factory=list)
    created: Optional[NatRule] = None
    installed: Optional[NatRule] = None
    held: bool = False


def translate(rule: NatRule, pkt: Packet) -> Packet:
    """
    Rewrite ``pkt`` with ``rule``: outgoing packets get the external source,
    incoming packets get the internal destination. Everything else is kept.

    Raises:
        KeyMismatch: If the packet's key for its direction is not the rule's.
    """
    ft = pkt.tuple
    if pkt.direction is Direction.OUTGOING:
        if (ft.src, ft.dst, ft.proto) != rule.forward_key:
            raise KeyMismatch(f"outgoing {ft} does not match rule {rule.forward_key}")
        return pkt.with_tuple(FiveTuple(rule.external, ft.dst, ft.proto))
    if (ft.src, ft.dst, ft.proto) != rule.reverse_key:
        raise KeyMismatch(f"incoming {ft} does not match rule {rule.reverse_key}")
    return pkt.with_tuple(FiveTuple(ft.src, rule.internal, ft.proto))


class NicState:
    """One smartNIC: its table, its allocator over ``E_id`` and its pending fetches."""

    def __init__(
        self,
        nic_id: int,
        plan: SubspacePlan,
        hash_cfg: Optional[HashConfig] = None,
        mode: InstallMode = InstallMode.PASSIVE,
    ):
        self.id = nic_id
        self.plan = plan
        self.hash_cfg = hash_cfg or HashConfig(n_nics=plan.n_nics)
        self.mode = InstallMode(mode)
        self.table = NatTable()
        self.allocator = SubspaceAllocator(plan.subspace(nic_id))
        self.pending: Dict[ReverseKey, Deque[Packet]] = {}
        self.counters: NicCounters = new_nic_counters()
        self.failed_flows: Set[ForwardKey] = set()
        # service model, driven by the engine
        self.busy_until = 0
        self.busy_ns = 0

    def reserve(self, now: int, occupancy: int) -> int:
        """Queue a job of ``occupancy`` ns behind earlier work; returns its start time."""
        start = now if now > self.busy_until else self.busy_until
        self.busy_until = start + occupancy
        self.busy_ns += occupancy
        return start

    @property
    def pending_packets(self) -> int:
        return sum(len(queue) for queue in self.pending.values())

    def on_outgoing_packet(self, pkt: Packet) -> NicEffects:
        self.counters["packets_in"] += 1
        effects = NicEffects()
        ft = pkt.tuple
        key = (ft.src, ft.dst, ft.proto)
        rule = self.table.forward.get(key)
        if rule is None:
            try:
                external = self.allocator.allocate(key)
            except SubspaceExhausted:
                self.counters["drops_exhausted"] += 1
                if key not in self.failed_flows:
                    self.failed_flows.add(key)
                    logger.warning("NIC %d: subspace exhausted, cannot serve %s", self.id, ft)
                effects.dropped.append((pkt, "exhausted"))
                return effects
            rule = NatRule(ft.src, external, ft.dst, ft.proto, self.id)
            self.table.install(rule)
            self.counters["rule_creates"] += 1
            effects.created = rule
            if self.mode is InstallMode.ACTIVE:
                target = assign_nic(FiveTuple(rule.remote, rule.external, rule.proto), self.hash_cfg)
                if target != self.id:
                    effects.messages.append(
                        RuleMessage(target, MessageKind.INSTALL, source_nic_id=self.id, rule=rule)
                    )
                    self.counters["installs_sent"] += 1
        effects.forwarded.append(Translation(pkt, translate(rule, pkt), rule))
        self.counters["translated_out"] += 1
        return effects

    def on_incoming_packet(self, pkt: Packet) -> NicEffects:
        self.counters["packets_in"] += 1
        effects = NicEffects()
        ft = pkt.tuple
        key = (ft.src, ft.dst, ft.proto)
        rule = self.table.reverse.get(key)
        if rule is not None:
            effects.forwarded.append(Translation(pkt, translate(rule, pkt), rule))
            self.counters["translated_in"] += 1
            return effects

        if key in self.pending:
            self.pending[key].append(pkt)
            effects.held = True
            return effects

        try:
            owner = self.plan.owner_of(ft.dst)
        except NotInExternalSpace:
            owner = None
        if owner is None or owner == self.id:
            # the owner would have created the rule itself
            self.counters["drops_unknown"] += 1
            effects.dropped.append((pkt, "unknown_connection"))
            return effects

        if self.mode is InstallMode.ACTIVE:
            self.counters["drops_active_miss"] += 1
            logger.warning("NIC %d: no pushed rule for %s, dropping", self.id, ft)
            effects.dropped.append((pkt, "active_miss"))
            return effects

        self.pending[key] = deque([pkt])
        effects.held = True
        effects.messages.append(
            RuleMessage(owner, MessageKind.FETCH_REQUEST, source_nic_id=self.id, request_key=key)
        )
        self.counters["fetch_requests"] += 1
        logger.debug("NIC %d: fetching rule for %s from NIC %d", self.id, ft, owner)
        return effects

    def on_rule_message(self, msg: RuleMessage) -> NicEffects:
        if msg.target_nic_id != self.id:
            raise ValueError(f"message for NIC {msg.target_nic_id} delivered to NIC {self.id}")
        effects = NicEffects()

        if msg.kind in (MessageKind.INSTALL, MessageKind.FETCH_REPLY):
            rule = msg.rule
            if self.table.install(rule):
                effects.installed = rule
            if msg.kind is MessageKind.INSTALL:
                self.counters["installs_received"] += 1
            for held in self.pending.pop(rule.reverse_key, ()):
                effects.forwarded.append(Translation(held, translate(rule, held), rule))
                self.counters["translated_in"] += 1

        elif msg.kind is MessageKind.FETCH_REQUEST:
            rule = self.table.reverse.get(msg.request_key)
            if rule is not None:
                effects.messages.append(
                    RuleMessage(msg.source_nic_id, MessageKind.FETCH_REPLY, source_nic_id=self.id, rule=rule)
                )
                self.counters["fetch_replies"] += 1
            else:
                effects.messages.append(
                    RuleMessage(
                        msg.source_nic_id,
                        MessageKind.FETCH_MISS,
                        source_nic_id=self.id,
                        request_key=msg.request_key,
                    )
                )
                self.counters["fetch_misses"] += 1

        elif msg.kind is MessageKind.FETCH_MISS:
            for held in self.pending.pop(msg.request_key, ()):
                effects.dropped.append((held, "unknown_connection"))
                self.counters["drops_unknown"] += 1

        return effects
