"""
Packet traces: CSV ingestion with validation, and seeded synthetic generation.

CSV layout, one packet per line after the header::

    t_us,src_ip,src_port,dst_ip,dst_port,proto,size_bytes

``t_us`` is decimal microseconds with at most three fractional digits.
"""

import csv
import logging
import os
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from typing import Dict, Iterable, List, Optional, Tuple, Union

import numpy as np

from hypernat.addrspace import AddressSpaces, Endpoint, FiveTuple, ip_to_int, int_to_ip
from hypernat.errors import ParseError, SpaceTooSmall, ValidationError

logger = logging.getLogger(__name__)

TRACE_HEADER = ["t_us", "src_ip", "src_port", "dst_ip", "dst_port", "proto", "size_bytes"]

INTERNAL_PORTS = (1024, 65535)
REMOTE_PORTS = (1, 65535)


@dataclass(frozen=True, slots=True)
class TraceRecord:
    t_ns: int
    tuple: FiveTuple
    size_bytes: int = 64
    flow_id: int = 0

    @property
    def t_us(self) -> float:
        return self.t_ns / 1000


def format_us(t_ns: int) -> str:
    whole, frac = divmod(t_ns, 1000)
    return str(whole) if frac == 0 else f"{whole}.{frac:03d}"


def _parse_us(text: str, line: int) -> int:
    try:
        value = Decimal(text) * 1000
    except InvalidOperation:
        raise ParseError(f"bad timestamp {text!r}", line) from None
    if value != value.to_integral_value() or value < 0:
        raise ParseError(f"timestamp {text!r} is negative or finer than 1 ns", line)
    return int(value)


def _parse_int(text: str, field: str, line: int, hi: int) -> int:
    try:
        value = int(text)
    except ValueError:
        raise ParseError(f"{field} is not an integer: {text!r}", line) from None
    if not 0 <= value <= hi:
        raise ParseError(f"{field} out of range: {value}", line)
    return value


def _parse_ip(text: str, field: str, line: int) -> int:
    try:
        return ip_to_int(text)
    except ValueError:
        raise ParseError(f"{field} is not a dotted-quad IPv4 address: {text!r}", line) from None


def assign_flow_ids(records: Iterable[TraceRecord]) -> List[TraceRecord]:
    """Number distinct tuples 1, 2, ... in order of first appearance."""
    ids: Dict[FiveTuple, int] = {}
    out = []
    for rec in records:
        flow_id = ids.setdefault(rec.tuple, len(ids) + 1)
        out.append(TraceRecord(rec.t_ns, rec.tuple, rec.size_bytes, flow_id))
    return out


def validate_trace(records: List[TraceRecord], spaces: AddressSpaces) -> None:
    """
    Raises:
        ValidationError: On the first record that is out of time order or whose
            addresses are not internal -> remote.
    """
    previous = None
    for index, rec in enumerate(records, start=1):
        if previous is not None and rec.t_ns < previous:
            raise ValidationError(f"record {index} at {format_us(rec.t_ns)}us precedes its predecessor", "sorted")
        if not spaces.is_internal(rec.tuple.src):
            raise ValidationError(f"record {index}: source {rec.tuple.src} is not internal", "src_internal")
        if not spaces.is_remote(rec.tuple.dst):
            raise ValidationError(f"record {index}: destination {rec.tuple.dst} is not remote", "dst_remote")
        previous = rec.t_ns


def load_trace(path: Union[str, os.PathLike], spaces: Optional[AddressSpaces] = None) -> List[TraceRecord]:
    """
    Read and validate a trace CSV.

    Args:
        path: CSV file in the layout documented at module level.
        spaces: Address spaces to validate against; skipped when None.

    Returns:
        Records in file order, with flow ids by first appearance.

    Raises:
        FileNotFoundError: If ``path`` does not exist.
        ParseError: On a malformed line, with its line number.
        ValidationError: On unsorted timestamps or misplaced addresses.
    """
    records = []
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != TRACE_HEADER:
            raise ParseError(f"expected header {','.join(TRACE_HEADER)}", 1)
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != len(TRACE_HEADER):
                raise ParseError(f"expected {len(TRACE_HEADER)} fields, got {len(row)}", line)
            t, src_ip, src_port, dst_ip, dst_port, proto, size = (field.strip() for field in row)
            ft = FiveTuple(
                Endpoint(_parse_ip(src_ip, "src_ip", line), _parse_int(src_port, "src_port", line, 0xFFFF)),
                Endpoint(_parse_ip(dst_ip, "dst_ip", line), _parse_int(dst_port, "dst_port", line, 0xFFFF)),
                _parse_int(proto, "proto", line, 0xFF),
            )
            records.append(TraceRecord(_parse_us(t, line), ft, _parse_int(size, "size_bytes", line, 1 << 31)))

    if spaces is not None:
        validate_trace(records, spaces)
    records = assign_flow_ids(records)
    logger.info("loaded %d packets of %d flows from %s", len(records), len({r.flow_id for r in records}), path)
    return records


def write_trace(path: Union[str, os.PathLike], records: Iterable[TraceRecord]) -> int:
    count = 0
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        for rec in records:
            ft = rec.tuple
            writer.writerow(
                [
                    format_us(rec.t_ns),
                    int_to_ip(ft.src.ip),
                    ft.src.port,
                    int_to_ip(ft.dst.ip),
                    ft.dst.port,
                    ft.proto,
                    rec.size_bytes,
                ]
            )
            count += 1
    return count


def gen_trace(
    n_flows: int,
    pkts_per_flow: int,
    rate_pps: int,
    seed: int,
    spaces: AddressSpaces,
    proto: int = 6,
    size_bytes: int = 64,
    internal_ports: Tuple[int, int] = INTERNAL_PORTS,
    remote_ports: Tuple[int, int] = REMOTE_PORTS,
) -> List[TraceRecord]:
    """
    Synthetic trace of ``n_flows`` distinct internal -> remote tuples.

    Tuples are drawn uniformly with a generator seeded by ``seed``; packets go
    out round-robin over flows (one packet of every flow, then the next round)
    at ``rate_pps`` aggregate, packet ``k`` at ``k / rate_pps`` seconds.

    Raises:
        ValueError: If any count or the rate is not positive.
        SpaceTooSmall: If the spaces hold fewer than ``n_flows`` distinct tuples.
    """
    if n_flows < 1 or pkts_per_flow < 1 or rate_pps <= 0:
        raise ValueError("n_flows, pkts_per_flow and rate_pps must all be positive")

    int_lo, int_hi = int(spaces.internal.network_address), int(spaces.internal.broadcast_address)
    rem_lo, rem_hi = int(spaces.remote.network_address), int(spaces.remote.broadcast_address)
    capacity = (
        (int_hi - int_lo + 1)
        * (internal_ports[1] - internal_ports[0] + 1)
        * (rem_hi - rem_lo + 1)
        * (remote_ports[1] - remote_ports[0] + 1)
    )
    if n_flows > capacity:
        raise SpaceTooSmall(f"{n_flows} flows requested but the spaces hold {capacity} distinct tuples")

    rng = np.random.default_rng(seed)
    tuples: Dict[FiveTuple, None] = {}
    while len(tuples) < n_flows:
        batch = max(n_flows - len(tuples), 16)
        src_ip = rng.integers(int_lo, int_hi, size=batch, endpoint=True)
        src_port = rng.integers(*internal_ports, size=batch, endpoint=True)
        dst_ip = rng.integers(rem_lo, rem_hi, size=batch, endpoint=True)
        dst_port = rng.integers(*remote_ports, size=batch, endpoint=True)
        for a, b, c, d in zip(src_ip.tolist(), src_port.tolist(), dst_ip.tolist(), dst_port.tolist()):
            tuples.setdefault(FiveTuple(Endpoint(a, b), Endpoint(c, d), proto))
            if len(tuples) == n_flows:
                break

    flows = list(tuples)
    records = []
    k = 0
    for _ in range(pkts_per_flow):
        for flow_id, ft in enumerate(flows, start=1):
            records.append(TraceRecord(k * 1_000_000_000 // rate_pps, ft, size_bytes, flow_id))
            k += 1
    logger.info("generated %d packets over %d flows at %d pps (seed %d)", len(records), n_flows, rate_pps, seed)
    return records
