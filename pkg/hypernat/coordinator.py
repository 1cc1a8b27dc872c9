"""Host-side router that carries rule messages between NIC RuleAgents."""

import logging
from typing import Dict, Iterable, Optional, Set, Tuple

from hypernat.nic import RuleMessage
from hypernat.state import CoordinatorCounters, new_coordinator_counters

logger = logging.getLogger(__name__)


class CoordinatorState:
    """
    Routes each message to ``target_nic_id`` after one hop of latency.

    Delivery is reliable and FIFO per directed NIC pair. With a capacity set,
    messages are also serialized through a single host worker.

    Args:
        nic_ids: NICs whose RuleAgents are connected.
        hop_ns: Latency of one NIC<->host hop.
        capacity_mps: Messages per second the host can route; 0 means unlimited.
    """

    def __init__(self, nic_ids: Iterable[int], hop_ns: int, capacity_mps: float = 0):
        self.registered_nics: Set[int] = set()
        for nic_id in nic_ids:
            self.register(nic_id)
        self.hop_ns = hop_ns
        self.service_ns = round(1e9 / capacity_mps) if capacity_mps else 0
        self.per_link_busy_until: Dict[Tuple[int, int], int] = {}
        self.busy_until = 0
        self.busy_ns = 0
        self.counters: CoordinatorCounters = new_coordinator_counters()

    def register(self, nic_id: int) -> None:
        self.registered_nics.add(nic_id)

    def route(self, msg: RuleMessage, now: int) -> Optional[int]:
        """
        Accept ``msg`` arriving at the host at ``now``.

        Returns:
            The time the message reaches the target NIC, or None when the
            target is not registered (the message is dropped and counted).
        """
        self.counters["messages_received"] += 1
        if msg.target_nic_id not in self.registered_nics:
            self.counters["unknown_target_drops"] += 1
            logger.warning(
                "dropping %s for unknown NIC %d (registered: %s)",
                msg.kind.value,
                msg.target_nic_id,
                sorted(self.registered_nics),
            )
            return None

        start = now
        if self.service_ns:
            start = max(now, self.busy_until)
            self.busy_until = start + self.service_ns
            self.busy_ns += self.service_ns
        link = (msg.source_nic_id, msg.target_nic_id)
        delivery = max(start + self.service_ns + self.hop_ns, self.per_link_busy_until.get(link, 0))
        self.per_link_busy_until[link] = delivery
        self.counters["messages_forwarded"] += 1
        logger.debug(
            "routing %s %d -> %d, delivery at %d ns",
            msg.kind.value,
            msg.source_nic_id,
            msg.target_nic_id,
            delivery,
        )
        return delivery
