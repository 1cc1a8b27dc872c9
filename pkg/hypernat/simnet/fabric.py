"""Fabric configuration: topology choice, latency and capacity model, address spaces."""

import ipaddress
import logging
from enum import Enum
from typing import Any, Dict, Mapping

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
from typing_extensions import Self

from hypernat.addrspace import AddressSpaces, ExternalSpace
from hypernat.descriptions import CONFIG_HELP
from hypernat.errors import ConfigError
from hypernat.hashing import HashConfig
from hypernat.nic import InstallMode

logger = logging.getLogger(__name__)


class Topology(str, Enum):
    HYPERNAT = "hypernat"
    ONE_NIC = "onenic"
    SERVER_NAT = "servernat"


def us_to_ns(value: float) -> int:
    return round(value * 1000)


def _field(default: Any, name: str, **constraints: Any) -> Any:
    return Field(default, description=CONFIG_HELP[name], **constraints)


class FabricConfig(BaseModel):
    """Every knob of a run. Times are in microseconds; the engine converts to ns once."""

    model_config = ConfigDict(extra="forbid", frozen=True, use_enum_values=False)

    n_nics: int = _field(2, "n_nics", ge=1)
    hash_seed: int = _field(0, "hash_seed", ge=0, lt=1 << 64)
    install_mode: InstallMode = _field(InstallMode.PASSIVE, "install_mode")

    link_us: float = _field(100, "link_us", gt=0)
    nic_service_us: float = _field(1.382, "nic_service_us", gt=0)
    server_service_us: float = _field(0.781, "server_service_us", gt=0)
    nic_lookup_us: float = _field(59, "nic_lookup_us", ge=0)
    server_lookup_us: float = _field(59, "server_lookup_us", ge=0)
    rule_create_us: float = _field(25, "rule_create_us", gt=0)
    rule_create_cost_us: float = _field(0.5, "rule_create_cost_us", ge=0)
    server_rule_create_cost_us: float = _field(0.25, "server_rule_create_cost_us", ge=0)
    rule_msg_cost_us: float = _field(0.5, "rule_msg_cost_us", ge=0)
    coord_hop_us: float = _field(400, "coord_hop_us", gt=0)
    coord_capacity_mps: float = _field(0, "coord_capacity_mps", ge=0)
    fetch_lookup_us: float = _field(141, "fetch_lookup_us", gt=0)
    receiver_us: float = _field(100, "receiver_us", gt=0)
    receiver_dispatch_us: float = _field(2, "receiver_dispatch_us", ge=0)
    sender_rx_us: float = _field(1, "sender_rx_us", ge=0)

    sender_rate_pps: int = _field(800_000, "sender_rate_pps", gt=0)
    drain_us: float = _field(1_000_000, "drain_us", ge=0)
    warmup_fraction: float = _field(0.1, "warmup_fraction", ge=0, lt=1)

    internal_net: str = _field("10.0.0.0/16", "internal_net")
    remote_net: str = _field("198.51.100.0/24", "remote_net")
    external_ip: str = _field("203.0.113.0", "external_ip")
    external_ips: int = _field(4, "external_ips", ge=1)
    external_port_lo: int = _field(1024, "external_port_lo", ge=0, le=65535)
    external_port_hi: int = _field(65535, "external_port_hi", ge=0, le=65535)
    proto: int = _field(6, "proto", ge=0, le=255)
    size_bytes: int = _field(64, "size_bytes", gt=0)

    @field_validator("internal_net", "remote_net")
    @classmethod
    def _valid_network(cls, value: str) -> str:
        ipaddress.IPv4Network(value)
        return value

    @field_validator("external_ip")
    @classmethod
    def _valid_address(cls, value: str) -> str:
        ipaddress.IPv4Address(value)
        return value

    @model_validator(mode="after")
    def _consistent_spaces(self) -> Self:
        if self.external_port_lo > self.external_port_hi:
            raise ValueError("external_port_lo must not exceed external_port_hi")
        internal = ipaddress.IPv4Network(self.internal_net)
        remote = ipaddress.IPv4Network(self.remote_net)
        if internal.overlaps(remote):
            raise ValueError("internal_net and remote_net overlap")
        first = int(ipaddress.IPv4Address(self.external_ip))
        last = first + self.external_ips - 1
        for net in (internal, remote):
            if first <= int(net.broadcast_address) and last >= int(net.network_address):
                raise ValueError(f"external pool overlaps {net}")
        return self

    @classmethod
    def build(cls, values: Mapping[str, Any] = None, **overrides: Any) -> "FabricConfig":
        """
        Validate ``values`` merged with ``overrides``.

        Raises:
            ConfigError: When any key is unknown or out of range.
        """
        merged = {**(values or {}), **overrides}
        try:
            return cls.model_validate(merged)
        except ValidationError as e:
            logger.debug("rejected configuration %s", merged, exc_info=True)
            raise ConfigError(f"invalid fabric configuration: {e}") from e

    def evolve(self, **overrides: Any) -> "FabricConfig":
        return self.build(self.model_dump(), **overrides)

    def ns(self, name: str) -> int:
        return us_to_ns(getattr(self, name))

    def external_space(self) -> ExternalSpace:
        return ExternalSpace.from_strings(
            self.external_ip, self.external_ips, self.external_port_lo, self.external_port_hi
        )

    def address_spaces(self) -> AddressSpaces:
        return AddressSpaces(self.internal_net, self.remote_net, self.external_space())

    def hash_config(self) -> HashConfig:
        return HashConfig(n_nics=self.n_nics, seed=self.hash_seed)

    def echo(self) -> Dict[str, Any]:
        """JSON-ready copy of every key, for report headers."""
        return self.model_dump(mode="json")


def config_for(cfg: FabricConfig, topology: Topology) -> FabricConfig:
    """``cfg`` adjusted to the element count ``topology`` implies (baselines have one)."""
    topology = Topology(topology)
    if topology is Topology.HYPERNAT or cfg.n_nics == 1:
        return cfg
    return cfg.evolve(n_nics=1)
