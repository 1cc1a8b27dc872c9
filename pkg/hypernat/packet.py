from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict

from hypernat.addrspace import FiveTuple


class Direction(str, Enum):
    OUTGOING = "out"  # internal -> remote
    INCOMING = "in"  # remote -> external


@dataclass(slots=True)
class Packet:
    """
    A simulated packet.

    ``flow_id`` and ``pkt_seq`` are trace bookkeeping; NAT logic never reads
    them. ``timestamps`` maps named timeline events to engine time in ns and
    is shared between a packet, its translations and its echo, so one dict
    holds the whole round trip.
    """

    pkt_seq: int
    flow_id: int
    tuple: FiveTuple
    direction: Direction
    size_bytes: int = 64
    timestamps: Dict[str, int] = field(default_factory=dict)

    def with_tuple(self, ft: FiveTuple) -> "Packet":
        return replace(self, tuple=ft)

    def echo(self) -> "Packet":
        """The receiver's reply: source and destination swapped, travelling inbound."""
        return replace(self, tuple=self.tuple.reversed(), direction=Direction.INCOMING)
