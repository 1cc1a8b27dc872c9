from hypernat.addrspace import (
    AddressSpaces,
    Endpoint,
    ExternalSpace,
    FiveTuple,
    SubspaceAllocator,
    SubspacePlan,
    owner_of,
    partition,
)
from hypernat.coordinator import CoordinatorState
from hypernat.errors import HyperNATError
from hypernat.hashing import HashConfig, assign_nic, flow_hash
from hypernat.nic import InstallMode, MessageKind, NatRule, NicState, RuleMessage, translate
