from typing import Literal, Optional

from typing_extensions import TypedDict


class NicCounters(TypedDict):
    """Per-NIC event tallies, reported as-is in the run report."""

    packets_in: int
    rule_creates: int
    fetch_requests: int
    fetch_replies: int
    fetch_misses: int
    installs_sent: int
    installs_received: int
    translated_out: int
    translated_in: int
    drops_exhausted: int
    drops_unknown: int
    drops_active_miss: int


class CoordinatorCounters(TypedDict):
    messages_received: int
    messages_forwarded: int
    unknown_target_drops: int


DropReason = Literal["exhausted", "unknown_connection", "active_miss", "unknown_target"]


def new_nic_counters() -> NicCounters:
    return NicCounters(
        packets_in=0,
        rule_creates=0,
        fetch_requests=0,
        fetch_replies=0,
        fetch_misses=0,
        installs_sent=0,
        installs_received=0,
        translated_out=0,
        translated_in=0,
        drops_exhausted=0,
        drops_unknown=0,
        drops_active_miss=0,
    )


def new_coordinator_counters() -> CoordinatorCounters:
    return CoordinatorCounters(messages_received=0, messages_forwarded=0, unknown_target_drops=0)


def counter_reducer(l: Optional[dict], r: Optional[dict]) -> Optional[dict]:
    """Merge two tallies key by key, summing shared keys."""
    if l is None:
        return r
    elif r is None:
        return l
    else:
        return {key: l.get(key, 0) + r.get(key, 0) for key in dict.fromkeys([*l, *r])}
