from hypernat.packet import Direction, Packet
from hypernat.simnet.engine import Event, EventKind, EventQueue
from hypernat.simnet.fabric import FabricConfig, Topology, config_for, us_to_ns
from hypernat.simnet.gateway import (
    ConsistencyAudit,
    ElementCosts,
    EventRow,
    Gateway,
    RunResult,
    TimelineReport,
    create_gateway,
    run,
    saturate,
    saturate_run,
    timeline,
    write_event_log,
)
from hypernat.simnet.trace import TraceRecord, gen_trace, load_trace, validate_trace, write_trace
