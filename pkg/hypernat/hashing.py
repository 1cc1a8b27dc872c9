"""
Flow-to-NIC dispatch, the emulated access switch's ECMP hash.

FNV-1a 64-bit over the seed and the packet's canonical header bytes. The same
function runs at the sender-side switch and at the receiver's echo, and it is
deliberately not symmetric: a connection's outgoing tuple and its return tuple
land on independent NICs.
"""

import struct
from dataclasses import dataclass
from typing import Dict, Literal

from hypernat.addrspace import FiveTuple

_OFFSET_BASIS: Dict[Literal[32, 64], int] = {
    32: 0x811C9DC5,
    64: 0xCBF29CE484222325,
}

_PRIME: Dict[Literal[32, 64], int] = {
    32: 0x01000193,
    64: 0x00000100000001B3,
}

_TUPLE_LAYOUT = struct.Struct("!IHIHB")
_SEED_LAYOUT = struct.Struct("!Q")


def fnv1a(data: bytes, size: Literal[32, 64] = 64) -> int:
    """FNV-1a: xor each byte in, then multiply by the prime, modulo 2**size."""
    mask = (1 << size) - 1
    prime = _PRIME[size]
    h = _OFFSET_BASIS[size]
    for byte in data:
        h ^= byte
        h = (h * prime) & mask
    return h


@dataclass(frozen=True)
class HashConfig:
    n_nics: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.n_nics < 1:
            raise ValueError(f"n_nics must be >= 1, got {self.n_nics}")
        if not 0 <= self.seed < 1 << 64:
            raise ValueError(f"seed must fit in 64 bits, got {self.seed}")


def canonical_bytes(ft: FiveTuple) -> bytes:
    """13 bytes: src ip, src port, dst ip, dst port (big-endian), proto."""
    return _TUPLE_LAYOUT.pack(ft.src.ip, ft.src.port, ft.dst.ip, ft.dst.port, ft.proto)


def flow_hash(ft: FiveTuple, seed: int = 0) -> int:
    return fnv1a(_SEED_LAYOUT.pack(seed) + canonical_bytes(ft))


def assign_nic(ft: FiveTuple, cfg: HashConfig) -> int:
    """NIC id in ``[1, n_nics]`` the switch sends this packet to."""
    if cfg.n_nics == 1:
        return 1
    return 1 + flow_hash(ft, cfg.seed) % cfg.n_nics
