CALIBRATION_NOTE = """Latency defaults reproduce the measured event timeline of one connection
crossing a two-NIC gateway: link 100us, rule creation 25us, receiver turnaround
100us, receiver port selection 2us, sender receive 1us, lookup 59us. The passive
fetch delay of 1741us is split as four coordinator hops of 400us plus a 141us
owner lookup; the split is a calibration choice, only the sum is measured.
Service times 1.382us (NIC) and 0.781us (server) are 1e6 / 723.7K and
1e6 / 1280.4K, the single-NIC and server saturation rates of the smallest trace."""

CONFIG_HELP = {
    "n_nics": "Number of smartNICs sharing the external space. Default 2 (the evaluated gateway).",
    "hash_seed": "64-bit seed mixed into the ECMP hash at switch and receiver. Default 0.",
    "install_mode": (
        "How return-path NICs learn rules: 'passive' fetches from the owner on the first "
        "incoming miss (default; matches the 1741us second-NIC install), 'active' pushes "
        "the rule from the creator when the return tuple hashes elsewhere."
    ),
    "link_us": "Propagation per cable, us. Default 100 (sender to first NIC arrival).",
    "nic_service_us": "NIC occupancy per packet, us. Default 1.382 = 1e6 / 723.7Kpps.",
    "server_service_us": "Server CPU occupancy per packet (serverNAT baseline), us. Default 0.781 = 1e6 / 1280.4Kpps.",
    "nic_lookup_us": "Traversal latency of a table hit on a NIC, us. Default 59 (steady-state RTT of 621us).",
    "server_lookup_us": "Traversal latency of a table hit on the server, us. Default 59.",
    "rule_create_us": "Latency from first-packet arrival to rule installed on the creating NIC, us. Default 25.",
    "rule_create_cost_us": "Extra NIC occupancy for creating a rule, us. Default 0.5.",
    "server_rule_create_cost_us": "Extra server occupancy for creating a rule, us. Default 0.25.",
    "rule_msg_cost_us": "NIC occupancy to emit or absorb one rule message, us. Default 0.5.",
    "coord_hop_us": "One NIC<->host hop through the coordinator, us. Default 400 (calibration split).",
    "coord_capacity_mps": "Coordinator routing capacity in messages/s; 0 = unlimited (default).",
    "fetch_lookup_us": "Owner-side latency to answer a fetch, us. Default 141 (calibration split).",
    "receiver_us": "Receiver turnaround from packet received to echo sent, us. Default 100.",
    "receiver_dispatch_us": "Receiver hash and port selection before the echo hits the wire, us. Default 2.",
    "sender_rx_us": "Sender receive processing of a returned packet, us. Default 1.",
    "sender_rate_pps": "Aggregate sender rate for generated traces, packets/s. Default 800000.",
    "drain_us": "Simulated time after the last trace packet before the run stops, us. Default 1e6.",
    "warmup_fraction": "Leading fraction of the trace span excluded from throughput. Default 0.1.",
    "internal_net": "Internal (tenant) address space, CIDR. Default 10.0.0.0/16.",
    "remote_net": "Remote (Internet server) address space, CIDR. Default 198.51.100.0/24.",
    "external_ip": "First address of the external NAT pool. Default 203.0.113.0.",
    "external_ips": "Number of consecutive addresses in the external pool. Default 4.",
    "external_port_lo": "Lowest port of every external address. Default 1024.",
    "external_port_hi": "Highest port of every external address. Default 65535.",
    "proto": "IP protocol number of generated flows. Default 6.",
    "size_bytes": "Size of generated packets, bytes (no effect on service time). Default 64.",
}

SIMULATE_DESCRIPTION = """Run one trace through a gateway topology and write report.json plus
rtt_cdf.csv. The report embeds the full configuration and the consistency
check (two-direction consistency and endpoint uniqueness)."""

SWEEP_DESCRIPTION = """Saturation throughput across topologies and flow counts at a fixed total
packet count. One row per (topology, flows) cell with throughput and RTT
percentiles; identical seeds give identical CSVs."""

ANALYZE_DESCRIPTION = """Availability bounds for X simultaneous flows over an external space of
size F split across N NICs: the Markov per-NIC bound, the any-NIC bound
(exact and linear forms), the exact binomial per-NIC tail, and a Monte Carlo
estimate with a Wilson 95% interval."""

GEN_TRACE_DESCRIPTION = """Generate a synthetic trace: distinct flows drawn uniformly from the
internal x remote spaces, packets interleaved round-robin at a fixed rate."""

TIMELINE_DESCRIPTION = """Event timestamps of one connection whose return traffic lands on a
different NIC than its creator: first packet and ACK, then a steady-state
packet and ACK."""

RTT_DESCRIPTION = """RTT distribution of the two-NIC gateway at several sender rates. Writes
one CDF file per rate and a summary of percentiles and tail fraction."""
