"""
Address spaces, five-tuples and the per-NIC split of the external space.

The gateway sees three spaces: internal (tenant VMs), external (the public NAT
pool) and remote (Internet servers). The external pool is cut into one
contiguous subspace per NIC and every NIC hands out endpoints from its own
subspace only, which keeps allocations globally unique without any cross-NIC
coordination.
"""

import heapq
import ipaddress
from dataclasses import dataclass
from typing import Any, Dict, Hashable, Iterator, List, Optional, Tuple

from hypernat.errors import EmptySpace, NotAllocated, NotInExternalSpace, SubspaceExhausted

MAX_IP = 0xFFFFFFFF
MAX_PORT = 0xFFFF


def ip_to_int(value: str) -> int:
    """Parse a dotted-quad IPv4 address into its host-order integer."""
    return int(ipaddress.IPv4Address(value))


def int_to_ip(value: int) -> str:
    return str(ipaddress.IPv4Address(value))


@dataclass(frozen=True, slots=True, order=True)
class Endpoint:
    """An IPv4 address and port. Sorts by (ip, port); allocation follows ExternalSpace order."""

    ip: int
    port: int

    def __post_init__(self):
        if not 0 <= self.ip <= MAX_IP:
            raise ValueError(f"ip out of range: {self.ip}")
        if not 0 <= self.port <= MAX_PORT:
            raise ValueError(f"port out of range: {self.port}")

    @classmethod
    def parse(cls, text: str) -> "Endpoint":
        ip, _, port = text.rpartition(":")
        return cls(ip_to_int(ip), int(port))

    def __str__(self) -> str:
        return f"{int_to_ip(self.ip)}:{self.port}"


@dataclass(frozen=True, slots=True)
class FiveTuple:
    src: Endpoint
    dst: Endpoint
    proto: int = 6

    def __post_init__(self):
        if not 0 <= self.proto <= 0xFF:
            raise ValueError(f"proto out of range: {self.proto}")

    def reversed(self) -> "FiveTuple":
        """The tuple a reply to this packet carries."""
        return FiveTuple(self.dst, self.src, self.proto)

    def __str__(self) -> str:
        return f"{self.src} -> {self.dst} /{self.proto}"


@dataclass(frozen=True)
class ExternalSpace:
    """
    The external pool E: ``n_ips`` consecutive addresses starting at ``base_ip``,
    each contributing ports ``port_lo..port_hi``.

    Canonical order is port-major: every address at one port before the next
    port, so index ``k`` maps to port ``port_lo + k // n_ips`` on address
    ``base_ip + k % n_ips``.
    """

    base_ip: int
    n_ips: int = 1
    port_lo: int = 0
    port_hi: int = MAX_PORT

    def __post_init__(self):
        if self.n_ips < 1:
            raise ValueError("external space needs at least one address")
        if not 0 <= self.port_lo <= self.port_hi <= MAX_PORT:
            raise ValueError(f"bad port range {self.port_lo}..{self.port_hi}")
        if self.base_ip + self.n_ips - 1 > MAX_IP:
            raise ValueError("external space runs past 255.255.255.255")

    @classmethod
    def from_strings(cls, base_ip: str, n_ips: int, port_lo: int, port_hi: int) -> "ExternalSpace":
        return cls(ip_to_int(base_ip), n_ips, port_lo, port_hi)

    @property
    def ports_per_ip(self) -> int:
        return self.port_hi - self.port_lo + 1

    def __len__(self) -> int:
        return self.n_ips * self.ports_per_ip

    def __contains__(self, ep: object) -> bool:
        if not isinstance(ep, Endpoint):
            return False
        return (
            self.base_ip <= ep.ip < self.base_ip + self.n_ips
            and self.port_lo <= ep.port <= self.port_hi
        )

    def __iter__(self) -> Iterator[Endpoint]:
        for index in range(len(self)):
            yield self.endpoint_at(index)

    def index_of(self, ep: Endpoint) -> int:
        if ep not in self:
            raise NotInExternalSpace(f"{ep} is outside the external space")
        return (ep.port - self.port_lo) * self.n_ips + (ep.ip - self.base_ip)

    def endpoint_at(self, index: int) -> Endpoint:
        if not 0 <= index < len(self):
            raise IndexError(index)
        port_offset, ip_offset = divmod(index, self.n_ips)
        return Endpoint(self.base_ip + ip_offset, self.port_lo + port_offset)

    def describe(self) -> Dict[str, Any]:
        return {
            "base_ip": int_to_ip(self.base_ip),
            "n_ips": self.n_ips,
            "port_lo": self.port_lo,
            "port_hi": self.port_hi,
            "size": len(self),
        }


@dataclass(frozen=True)
class Subspace:
    """Contiguous slice ``[start, stop)`` of the external space owned by one NIC."""

    subspace_id: int
    space: ExternalSpace
    start: int
    stop: int

    def __len__(self) -> int:
        return self.stop - self.start

    def __iter__(self) -> Iterator[Endpoint]:
        for index in range(self.start, self.stop):
            yield self.space.endpoint_at(index)

    def __contains__(self, ep: object) -> bool:
        if not isinstance(ep, Endpoint) or ep not in self.space:
            return False
        return self.start <= self.space.index_of(ep) < self.stop


@dataclass(frozen=True)
class SubspacePlan:
    external_space: ExternalSpace
    n_nics: int
    subspaces: Tuple[Subspace, ...]

    def subspace(self, subspace_id: int) -> Subspace:
        return self.subspaces[subspace_id - 1]

    def owner_of(self, ep: Endpoint) -> int:
        index = self.external_space.index_of(ep)
        size, extra = divmod(len(self.external_space), self.n_nics)
        # the first `extra` subspaces hold size + 1 endpoints each
        boundary = extra * (size + 1)
        if index < boundary:
            return index // (size + 1) + 1
        return extra + (index - boundary) // size + 1

    def to_dict(self) -> Dict[str, Any]:
        return {
            "external_space": self.external_space.describe(),
            "n_nics": self.n_nics,
            "subspaces": [
                {
                    "nic": sub.subspace_id,
                    "first": str(self.external_space.endpoint_at(sub.start)),
                    "last": str(self.external_space.endpoint_at(sub.stop - 1)),
                    "size": len(sub),
                }
                for sub in self.subspaces
            ],
        }


def partition(external_space: ExternalSpace, n: int) -> SubspacePlan:
    """
    Split the external space into ``n`` contiguous, disjoint subspaces.

    Sizes differ by at most one; when ``|E| mod n = r`` the first ``r``
    subspaces take the extra endpoint.

    Raises:
        EmptySpace: If the space has fewer endpoints than ``n``.
    """
    if n < 1:
        raise ValueError(f"need at least one NIC, got {n}")
    total = len(external_space)
    if total < n:
        raise EmptySpace(f"external space of {total} endpoints cannot feed {n} NICs")
    size, extra = divmod(total, n)
    subspaces = []
    start = 0
    for subspace_id in range(1, n + 1):
        stop = start + size + (1 if subspace_id <= extra else 0)
        subspaces.append(Subspace(subspace_id, external_space, start, stop))
        start = stop
    return SubspacePlan(external_space, n, tuple(subspaces))


def owner_of(plan: SubspacePlan, ep: Endpoint) -> int:
    """Return the id of the subspace holding ``ep``."""
    return plan.owner_of(ep)


class SubspaceAllocator:
    """
    Hands out the lowest free endpoint of one subspace.

    Endpoints that were never used are tracked by a cursor and released ones
    by a min-heap, so even a multi-billion endpoint subspace costs nothing
    until it is used.
    """

    def __init__(self, subspace: Subspace):
        self.subspace = subspace
        self.subspace_id = subspace.subspace_id
        self.allocated: Dict[Endpoint, Hashable] = {}
        self._by_flow: Dict[Hashable, Endpoint] = {}
        self._cursor = subspace.start
        self._released: List[int] = []

    @property
    def free_count(self) -> int:
        return len(self.subspace) - len(self.allocated)

    @property
    def free(self) -> List[Endpoint]:
        """Free endpoints in canonical order. Materializes the list; for tests and small spaces."""
        space = self.subspace.space
        indices = sorted(self._released) + list(range(self._cursor, self.subspace.stop))
        return [space.endpoint_at(i) for i in indices]

    def lookup(self, flow: Hashable) -> Optional[Endpoint]:
        return self._by_flow.get(flow)

    def allocate(self, flow: Hashable) -> Endpoint:
        """
        Bind the lowest free endpoint to ``flow``.

        Raises:
            SubspaceExhausted: If every endpoint of the subspace is in use.
        """
        if flow in self._by_flow:
            raise ValueError(f"flow {flow} already holds {self._by_flow[flow]}")
        if self._released:
            index = heapq.heappop(self._released)
        elif self._cursor < self.subspace.stop:
            index = self._cursor
            self._cursor += 1
        else:
            raise SubspaceExhausted(f"subspace {self.subspace_id} has no free endpoint")
        ep = self.subspace.space.endpoint_at(index)
        self.allocated[ep] = flow
        self._by_flow[flow] = ep
        return ep

    def release(self, ep: Endpoint) -> None:
        flow = self.allocated.pop(ep, None)
        if flow is None:
            raise NotAllocated(f"{ep} is not allocated in subspace {self.subspace_id}")
        del self._by_flow[flow]
        heapq.heappush(self._released, self.subspace.space.index_of(ep))


class AddressSpaces:
    """Membership tests for the internal, remote and external spaces."""

    def __init__(self, internal: str, remote: str, external: ExternalSpace):
        self.internal = ipaddress.IPv4Network(internal)
        self.remote = ipaddress.IPv4Network(remote)
        self.external = external
        self._internal_bounds = (int(self.internal.network_address), int(self.internal.broadcast_address))
        self._remote_bounds = (int(self.remote.network_address), int(self.remote.broadcast_address))

    def is_internal(self, ep: Endpoint) -> bool:
        lo, hi = self._internal_bounds
        return lo <= ep.ip <= hi

    def is_remote(self, ep: Endpoint) -> bool:
        lo, hi = self._remote_bounds
        return lo <= ep.ip <= hi

    def is_external(self, ep: Endpoint) -> bool:
        return ep in self.external
