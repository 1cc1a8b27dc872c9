import numpy as np
import pytest

from hypernat import analytics
from hypernat.addrspace import FiveTuple
from hypernat.errors import ConfigError, ValidationError
from hypernat.nic import InstallMode
from hypernat.simnet.fabric import Topology, config_for
from hypernat.simnet.gateway import (
    TIMELINE_EVENTS,
    run,
    saturate,
    saturate_run,
    saturation_trace,
    timeline,
    write_event_log,
)
from hypernat.simnet.trace import TraceRecord, gen_trace

from conftest import ep

FIRST_PACKET = {
    "sent": 0,
    "nic_arrival": 100,
    "out_rule_ready": 125,
    "receiver_received": 225,
    "receiver_echo": 325,
    "ack_at_nic": 427,
    "in_rule_ready": 2168,
    "returned": 2269,
}

STEADY_PACKET = {
    "sent": 0,
    "nic_arrival": 100,
    "out_rule_ready": 100,
    "receiver_received": 259,
    "receiver_echo": 359,
    "ack_at_nic": 461,
    "in_rule_ready": 461,
    "returned": 621,
}

PACKET_ORDER = [
    "sent",
    "nic_arrival",
    "out_rule_ready",
    "translated_out",
    "receiver_received",
    "receiver_echo",
    "ack_at_nic",
    "in_rule_ready",
    "translated_in",
    "returned",
]


def small_trace(cfg, flows=200, pkts=3, rate=50_000, seed=3):
    return gen_trace(flows, pkts, rate, seed, cfg.address_spaces())


def test_event_timeline_of_one_connection(cfg):
    report = timeline(cfg)
    assert report.owner_nic != report.return_nic
    assert report.mean["first"] == FIRST_PACKET
    assert report.mean["steady"] == STEADY_PACKET
    assert [row[0] for row in report.rows()] == TIMELINE_EVENTS


def test_timeline_repeats_are_identical(cfg):
    report = timeline(cfg, repeat=3)
    assert report.repeat == 3
    assert all(v == 0 for label in report.std.values() for v in label.values())


def test_timeline_needs_two_nics(cfg):
    with pytest.raises(ConfigError):
        timeline(cfg.evolve(n_nics=1))


def test_timeline_under_another_hash_seed(cfg):
    report = timeline(cfg.evolve(hash_seed=12345))
    assert report.mean["first"]["returned"] == 2269
    assert report.mean["steady"]["returned"] == 621


def test_empty_trace_gives_empty_metrics(cfg):
    result = run(cfg, [])
    m = result.metrics
    assert (m.throughput_pps, m.packets_sent, m.packets_returned, m.packets_in_flight) == (0.0, 0, 0, 0)
    assert m.percentiles == {}
    assert all(v == 0 for counters in result.nic_counters.values() for v in counters.values())
    assert result.audit["passed"]


def test_baseline_with_many_nics_is_a_config_error(cfg):
    trace = small_trace(cfg, flows=2, pkts=1)
    with pytest.raises(ConfigError):
        run(cfg, trace, Topology.SERVER_NAT)
    assert run(config_for(cfg, Topology.SERVER_NAT), trace, Topology.SERVER_NAT).metrics.packets_returned == 2


def test_invalid_trace_rejected(cfg):
    bad = [TraceRecord(0, FiveTuple(ep("203.0.113.0:5000"), ep("198.51.100.9:80"), 6))]
    with pytest.raises(ValidationError):
        run(cfg, bad)


@pytest.mark.parametrize("topology", list(Topology))
def test_consistency_and_every_packet_returns(cfg, topology):
    cfg = config_for(cfg, topology)
    result = run(cfg, small_trace(cfg), topology)
    m = result.metrics
    assert result.audit["passed"], result.audit
    assert result.audit["connections"] == 200
    assert m.packets_sent == m.packets_returned == 600
    assert len(m.rtt_samples_us) == m.packets_returned
    assert m.drops == {}


def test_fetch_counters_on_two_nics(cfg):
    result = run(cfg, small_trace(cfg))
    counters = result.nic_counters
    requests = sum(c["fetch_requests"] for c in counters.values())
    replies = sum(c["fetch_replies"] for c in counters.values())
    assert 0 < requests == replies
    assert sum(c["rule_creates"] for c in counters.values()) == 200
    assert result.coordinator_counters["messages_forwarded"] == 2 * requests
    assert result.audit["violations"]["clone"] == 0


def test_conservation_partition_with_short_drain(cfg):
    short = cfg.evolve(drain_us=300)
    result = run(short, small_trace(short, flows=300, pkts=4, rate=400_000))
    m = result.metrics
    assert m.packets_in_flight > 0
    assert m.packets_sent == m.packets_returned + m.packets_dropped + m.packets_in_flight


def test_timestamps_monotonic_along_each_packet(cfg):
    result = run(cfg, small_trace(cfg, flows=100, pkts=5, rate=300_000), keep_timelines=True)
    assert len(result.timelines) == 500
    for stamps in result.timelines.values():
        times = [stamps[e] for e in PACKET_ORDER if e in stamps]
        assert times == sorted(times)
        assert stamps["returned"] - stamps["sent"] >= 621_000


def test_identical_inputs_give_identical_event_logs(cfg, tmp_path):
    trace = small_trace(cfg, flows=50, pkts=4)
    a = run(cfg, trace, emit_events=True)
    b = run(cfg, trace, emit_events=True)
    assert a.events == b.events
    write_event_log(tmp_path / "a.csv", a.events)
    write_event_log(tmp_path / "b.csv", b.events)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.csv").read_text().splitlines()[0] == "pkt_seq,flow_id,event,kind,t_us"


def test_throughput_recounts_from_event_log(cfg):
    result = run(cfg, small_trace(cfg, flows=100, pkts=20, rate=500_000), emit_events=True)
    m = result.metrics
    assert m.translations_in_window > 0
    assert analytics.recount_throughput(result.events, m.window_start_ns, m.window_end_ns) == pytest.approx(
        m.throughput_pps
    )


def test_active_mode_matches_passive_translations(cfg):
    trace = small_trace(cfg)
    passive = run(cfg, trace)
    active = run(cfg.evolve(install_mode="active", coord_hop_us=1), trace)
    assert active.metrics.drops == {} and passive.metrics.drops == {}
    assert active.audit["passed"] and passive.audit["passed"]
    for nic_id, nic in passive.gateway.nics.items():
        assert active.gateway.nics[nic_id].table.forward == nic.table.forward
        assert active.gateway.nics[nic_id].table.reverse == nic.table.reverse
    installs = sum(c["installs_sent"] for c in active.nic_counters.values())
    assert installs == sum(c["fetch_requests"] for c in passive.nic_counters.values())



def test_active_mode_routes_each_install_once(cfg):
    active = cfg.evolve(install_mode="active", coord_hop_us=1, n_nics=4)
    result = run(active, small_trace(active))
    counters = result.nic_counters.values()
    sent = sum(c["installs_sent"] for c in counters)
    assert 0 < sent <= sum(c["rule_creates"] for c in counters)
    assert result.coordinator_counters["messages_received"] == sent
    assert result.coordinator_counters["messages_forwarded"] == sent
    assert sum(c["installs_received"] for c in counters) == sent

def test_active_mode_with_slow_host_drops_first_returns(cfg):
    result = run(cfg.evolve(install_mode=InstallMode.ACTIVE), small_trace(cfg))
    assert result.metrics.drops["active_miss"] > 0
    assert result.audit["passed"]


def test_exhausted_space_fails_flows_but_stays_consistent(cfg):
    tight = cfg.evolve(external_ips=1, external_port_lo=1024, external_port_hi=1033)
    result = run(tight, small_trace(tight, flows=40, pkts=2))
    m = result.metrics
    assert m.failed_flows >= 30
    assert m.drops["exhausted"] == 2 * m.failed_flows
    assert analytics.served_failure_rate(m) == m.failed_flows / 40
    assert result.audit["passed"]
    assert m.packets_sent == m.packets_returned + m.packets_dropped


def test_host_utilization_reported_for_hypernat(cfg):
    util = run(cfg, small_trace(cfg)).metrics.utilization
    assert set(util) == {"nic1", "nic2", "host"}
    assert util["host"] == 0.0
    server = config_for(cfg, Topology.SERVER_NAT)
    assert set(run(server, small_trace(server), Topology.SERVER_NAT).metrics.utilization) == {"server"}


def test_report_is_json_ready(cfg):
    import json

    report = run(cfg, small_trace(cfg, flows=10, pkts=2)).to_report()
    text = json.dumps(report)
    assert '"hash_seed": 0' in text
    assert report["consistency"]["passed"] is True
    assert [s["size"] for s in report["subspaces"]["subspaces"]] == [129024, 129024]


def test_underload_throughput_matches_offered(cfg):
    measured = saturate(cfg, Topology.HYPERNAT, 100_000, n_flows=100, total_packets=20_000)
    assert measured == pytest.approx(100_000, rel=0.01)


def test_saturation_rejects_non_positive_load(cfg):
    with pytest.raises(ValueError):
        saturation_trace(cfg, 0, 10, 10, 1)


def test_saturation_throughput_ordering(cfg):
    rates = {t: saturate(cfg, t, 2_000_000, n_flows=1000, total_packets=40_000) for t in Topology}
    assert rates[Topology.ONE_NIC] == pytest.approx(723_700, rel=0.02)
    assert rates[Topology.SERVER_NAT] == pytest.approx(1_280_400, rel=0.02)
    assert rates[Topology.HYPERNAT] > rates[Topology.SERVER_NAT] > rates[Topology.ONE_NIC]


def test_throughput_degrades_with_flow_count(cfg):
    no_warmup = cfg.evolve(warmup_fraction=0)
    flows = [300, 1200, 6000]
    rates = {
        t: [saturate(no_warmup, t, 2_000_000, n_flows=n, total_packets=24_000) for n in flows] for t in Topology
    }
    for series in rates.values():
        assert series == sorted(series, reverse=True)
    drop = {t: 1 - rates[t][-1] / rates[t][0] for t in Topology}
    assert drop[Topology.HYPERNAT] > drop[Topology.SERVER_NAT]


def test_rtt_shape_light_versus_heavy_load(cfg):
    light = saturate_run(cfg, Topology.HYPERNAT, 100_000, n_flows=100, total_packets=20_000).metrics
    heavy = saturate_run(cfg, Topology.HYPERNAT, 1_600_000, n_flows=200, total_packets=20_000).metrics
    at_steady = np.mean(np.abs(light.rtt_samples_us - 621) < 5)
    assert at_steady >= 0.95
    assert heavy.percentiles["p99"] > light.percentiles["p99"]
    assert analytics.tail_fraction(heavy.rtt_samples_us, 700) > analytics.tail_fraction(light.rtt_samples_us, 700)


@pytest.mark.slow
@pytest.mark.parametrize("n_flows", [10_000, 50_000, 100_000, 200_000])
def test_consistency_at_trace_scale(cfg, n_flows):
    trace = gen_trace(n_flows, 2, cfg.sender_rate_pps, 7, cfg.address_spaces())
    result = run(cfg, trace)
    assert result.audit["passed"]
    assert result.audit["connections"] == n_flows
    assert result.metrics.failed_flows == 0


@pytest.mark.slow
def test_saturation_ordering_at_full_size(cfg):
    rates = {t: saturate(cfg, t, 2_000_000) for t in Topology}
    assert rates[Topology.ONE_NIC] == pytest.approx(723_700, rel=0.02)
    assert rates[Topology.SERVER_NAT] == pytest.approx(1_280_400, rel=0.02)
    assert rates[Topology.HYPERNAT] > rates[Topology.SERVER_NAT]


@pytest.mark.slow
def test_degradation_across_trace_sizes(cfg):
    flows = [10_000, 50_000, 100_000, 200_000]
    rates = {t: [saturate(cfg, t, 2_000_000, n_flows=n, total_packets=400_000) for n in flows] for t in Topology}
    for series in rates.values():
        assert series == sorted(series, reverse=True)
    assert 1 - rates[Topology.HYPERNAT][-1] / rates[Topology.HYPERNAT][0] > (
        1 - rates[Topology.SERVER_NAT][-1] / rates[Topology.SERVER_NAT][0]
    )
