"""Event queue for the discrete-event engine: total (time, seq) order on an integer ns clock."""

import heapq
import itertools
from enum import Enum
from typing import Any, Iterator, List, NamedTuple, Tuple


class EventKind(str, Enum):
    ARRIVE_AT_SWITCH = "ArriveAtSwitch"
    ARRIVE_AT_NIC = "ArriveAtNic"
    NIC_SERVICE_DONE = "NicServiceDone"
    RULE_MSG_AT_COORDINATOR = "RuleMsgAtCoordinator"
    RULE_MSG_DELIVERY = "RuleMsgDelivery"
    ARRIVE_AT_RECEIVER = "ArriveAtReceiver"
    RECEIVER_ECHO = "ReceiverEcho"
    RETURN_TO_SENDER = "ReturnToSender"


class Event(NamedTuple):
    time: int
    seq: int
    kind: EventKind
    payload: Tuple[Any, ...]


class EventQueue:
    """Min-heap of events. ``seq`` is unique, so ties never compare payloads."""

    def __init__(self):
        self._heap: List[Event] = []
        self._seq = itertools.count()
        self.now = 0

    def __len__(self) -> int:
        return len(self._heap)

    def __iter__(self) -> Iterator[Event]:
        """Pending events, in no particular order."""
        return iter(self._heap)

    def schedule(self, time: int, kind: EventKind, *payload: Any) -> None:
        if time < self.now:
            raise ValueError(f"cannot schedule {kind.value} at {time} ns, clock is at {self.now} ns")
        heapq.heappush(self._heap, Event(time, next(self._seq), kind, payload))

    def peek_time(self) -> int:
        return self._heap[0].time

    def pop(self) -> Event:
        event = heapq.heappop(self._heap)
        self.now = event.time
        return event
