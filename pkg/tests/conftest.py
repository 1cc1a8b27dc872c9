import random

import pytest

from hypernat.addrspace import Endpoint, ExternalSpace, FiveTuple, ip_to_int, partition
from hypernat.hashing import HashConfig
from hypernat.nic import InstallMode, NicState
from hypernat.packet import Direction, Packet
from hypernat.simnet.fabric import FabricConfig
from hypernat.simnet.trace import TraceRecord

INTERNAL_BASE = ip_to_int("10.0.0.0")
REMOTE_BASE = ip_to_int("198.51.100.0")
EXTERNAL_BASE = ip_to_int("203.0.113.0")


def ep(text: str) -> Endpoint:
    return Endpoint.parse(text)


def outgoing(ft: FiveTuple, seq: int = 1, flow: int = 1) -> Packet:
    return Packet(seq, flow, ft, Direction.OUTGOING)


def incoming(ft: FiveTuple, seq: int = 1, flow: int = 1) -> Packet:
    return Packet(seq, flow, ft, Direction.INCOMING)


def random_flow(rng: random.Random) -> FiveTuple:
    return FiveTuple(
        Endpoint(INTERNAL_BASE + rng.randrange(1, 1 << 16), rng.randrange(1024, 65536)),
        Endpoint(REMOTE_BASE + rng.randrange(1, 255), rng.randrange(1, 65536)),
        6,
    )


def make_nics(space: ExternalSpace, n: int, mode: InstallMode = InstallMode.PASSIVE, seed: int = 0):
    plan = partition(space, n)
    hash_cfg = HashConfig(n_nics=n, seed=seed)
    return plan, {i: NicState(i, plan, hash_cfg, mode) for i in range(1, n + 1)}


@pytest.fixture
def cfg() -> FabricConfig:
    return FabricConfig()


@pytest.fixture
def small_space() -> ExternalSpace:
    """One address, ports 40000..40099."""
    return ExternalSpace(EXTERNAL_BASE + 7, 1, 40000, 40099)


@pytest.fixture
def web_flow() -> FiveTuple:
    return FiveTuple(ep("10.0.0.5:1234"), ep("198.51.100.9:80"), 6)


def trace_of(flows, pkts_per_flow: int = 1, gap_ns: int = 1000):
    """Round-robin trace over ``flows`` with a fixed inter-packet gap."""
    records = []
    k = 0
    for _ in range(pkts_per_flow):
        for flow_id, ft in enumerate(flows, start=1):
            records.append(TraceRecord(k * gap_ns, ft, 64, flow_id))
            k += 1
    return records
