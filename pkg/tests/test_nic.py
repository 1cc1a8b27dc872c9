import random

import pytest

from hypernat.addrspace import ExternalSpace, FiveTuple
from hypernat.errors import KeyMismatch
from hypernat.hashing import HashConfig, assign_nic
from hypernat.nic import InstallMode, MessageKind, NatRule, NatTable, RuleMessage, translate
from hypernat.packet import Direction

from conftest import EXTERNAL_BASE, ep, incoming, make_nics, outgoing, random_flow


def deliver_all(nics, messages):
    """Route messages to their targets until the system is quiet, FIFO."""
    effects = []
    queue = list(messages)
    while queue:
        msg = queue.pop(0)
        eff = nics[msg.target_nic_id].on_rule_message(msg)
        effects.append(eff)
        queue.extend(eff.messages)
    return effects


def return_of(rule: NatRule) -> FiveTuple:
    return FiveTuple(rule.remote, rule.external, rule.proto)


def test_first_packet_creates_rule_and_translates(small_space, web_flow):
    _, nics = make_nics(small_space, 1)
    eff = nics[1].on_outgoing_packet(outgoing(web_flow))
    assert eff.created is not None
    [tr] = eff.forwarded
    assert tr.after.tuple == FiveTuple(ep("203.0.113.7:40000"), ep("198.51.100.9:80"), 6)
    assert nics[1].table.forward[(web_flow.src, web_flow.dst, 6)] == eff.created
    assert nics[1].counters["rule_creates"] == 1


def test_second_packet_hits(small_space, web_flow):
    _, nics = make_nics(small_space, 1)
    first = nics[1].on_outgoing_packet(outgoing(web_flow, seq=1))
    second = nics[1].on_outgoing_packet(outgoing(web_flow, seq=2))
    assert second.created is None
    assert second.forwarded[0].after.tuple == first.forwarded[0].after.tuple
    assert nics[1].counters["rule_creates"] == 1
    assert nics[1].counters["translated_out"] == 2


def test_exhausted_subspace_drops_and_marks_flow_failed(web_flow):
    space = ExternalSpace(EXTERNAL_BASE, 1, 40000, 40000)
    _, nics = make_nics(space, 1)
    nics[1].on_outgoing_packet(outgoing(web_flow))
    other = FiveTuple(ep("10.0.0.6:1234"), web_flow.dst, 6)
    eff = nics[1].on_outgoing_packet(outgoing(other, seq=2, flow=2))
    assert eff.forwarded == []
    assert eff.dropped[0][1] == "exhausted"
    assert nics[1].counters["drops_exhausted"] == 1
    assert (other.src, other.dst, 6) in nics[1].failed_flows


def test_incoming_at_owner_translates_locally(small_space, web_flow):
    _, nics = make_nics(small_space, 1)
    rule = nics[1].on_outgoing_packet(outgoing(web_flow)).created
    eff = nics[1].on_incoming_packet(incoming(return_of(rule)))
    assert eff.messages == []
    assert eff.forwarded[0].after.tuple.dst == web_flow.src


def test_incoming_miss_fetches_from_owner_then_flushes_fifo(small_space, web_flow):
    _, nics = make_nics(small_space, 2)
    rule = nics[1].on_outgoing_packet(outgoing(web_flow)).created
    back = return_of(rule)

    first = nics[2].on_incoming_packet(incoming(back, seq=1))
    assert first.held and first.forwarded == []
    [request] = first.messages
    assert (request.kind, request.target_nic_id, request.source_nic_id) == (MessageKind.FETCH_REQUEST, 1, 2)

    for seq in (2, 3):
        eff = nics[2].on_incoming_packet(incoming(back, seq=seq))
        assert eff.held and eff.messages == []
    assert nics[2].counters["fetch_requests"] == 1

    [reply_effects, flush] = deliver_all(nics, [request])
    assert reply_effects.messages[0].kind is MessageKind.FETCH_REPLY
    assert reply_effects.messages[0].rule == rule
    assert [tr.before.pkt_seq for tr in flush.forwarded] == [1, 2, 3]
    assert all(tr.after.tuple.dst == web_flow.src for tr in flush.forwarded)
    assert nics[2].pending == {}
    assert nics[2].table.reverse[rule.reverse_key] == rule


def test_unknown_connection_fetch_miss_drops_pending(small_space):
    plan, nics = make_nics(small_space, 2)
    owned_by_1 = plan.subspace(1).space.endpoint_at(plan.subspace(1).start)
    stray = FiveTuple(ep("198.51.100.9:80"), owned_by_1, 6)
    eff = nics[2].on_incoming_packet(incoming(stray))
    [miss_effects, drop_effects] = deliver_all(nics, eff.messages)
    assert miss_effects.messages[0].kind is MessageKind.FETCH_MISS
    assert [reason for _, reason in drop_effects.dropped] == ["unknown_connection"]
    assert nics[2].counters["drops_unknown"] == 1
    assert nics[1].counters["fetch_misses"] == 1
    assert nics[2].pending == {}


def test_incoming_for_own_subspace_without_rule_drops(small_space):
    plan, nics = make_nics(small_space, 2)
    mine = plan.subspace(2).space.endpoint_at(plan.subspace(2).start)
    eff = nics[2].on_incoming_packet(incoming(FiveTuple(ep("198.51.100.9:80"), mine, 6)))
    assert eff.messages == [] and eff.dropped[0][1] == "unknown_connection"


def test_incoming_outside_external_space_drops(small_space):
    _, nics = make_nics(small_space, 2)
    eff = nics[1].on_incoming_packet(incoming(FiveTuple(ep("198.51.100.9:80"), ep("192.0.2.1:5"), 6)))
    assert eff.dropped[0][1] == "unknown_connection"


def test_active_mode_pushes_to_return_nic_and_drops_on_miss(small_space):
    rng = random.Random(4)
    plan, nics = make_nics(small_space, 2, InstallMode.ACTIVE)
    for flow_id in range(1, 40):
        ft = random_flow(rng)
        i = assign_nic(ft, nics[1].hash_cfg)
        eff = nics[i].on_outgoing_packet(outgoing(ft, seq=flow_id, flow=flow_id))
        rule = eff.created
        j = assign_nic(return_of(rule), nics[1].hash_cfg)
        if j == i:
            assert eff.messages == []
            continue
        [install] = eff.messages
        assert (install.kind, install.target_nic_id, install.rule) == (MessageKind.INSTALL, j, rule)
        deliver_all(nics, [install])
        assert nics[j].table.reverse[rule.reverse_key] == rule

    owned_by_1 = plan.subspace(1).space.endpoint_at(plan.subspace(1).stop - 1)
    eff = nics[2].on_incoming_packet(incoming(FiveTuple(ep("198.51.100.9:80"), owned_by_1, 6)))
    assert eff.dropped[0][1] == "active_miss" and eff.messages == []


def test_duplicate_install_is_idempotent(small_space, web_flow):
    _, nics = make_nics(small_space, 2)
    rule = nics[1].on_outgoing_packet(outgoing(web_flow)).created
    msg = RuleMessage(2, MessageKind.INSTALL, source_nic_id=1, rule=rule)
    first = nics[2].on_rule_message(msg)
    snapshot = (dict(nics[2].table.forward), dict(nics[2].table.reverse))
    second = nics[2].on_rule_message(msg)
    assert first.installed == rule and second.installed is None
    assert (nics[2].table.forward, nics[2].table.reverse) == snapshot


def test_conflicting_install_rejected(web_flow):
    table = NatTable()
    a = NatRule(web_flow.src, ep("203.0.113.0:1"), web_flow.dst, 6, 1)
    b = NatRule(web_flow.src, ep("203.0.113.0:2"), web_flow.dst, 6, 1)
    assert table.install(a)
    assert not table.install(a)
    with pytest.raises(ValueError):
        table.install(b)


def test_message_for_other_nic_rejected(small_space, web_flow):
    _, nics = make_nics(small_space, 2)
    rule = nics[1].on_outgoing_packet(outgoing(web_flow)).created
    with pytest.raises(ValueError):
        nics[1].on_rule_message(RuleMessage(2, MessageKind.INSTALL, rule=rule))


def test_rule_message_payload_validation(web_flow):
    with pytest.raises(ValueError):
        RuleMessage(1, MessageKind.FETCH_REPLY)
    with pytest.raises(ValueError):
        RuleMessage(1, MessageKind.FETCH_REQUEST)


def test_translate_round_trip_and_field_preservation(web_flow):
    rule = NatRule(web_flow.src, ep("203.0.113.7:40000"), web_flow.dst, 6, 1)
    pkt = outgoing(web_flow, seq=9, flow=4)
    pkt.size_bytes = 1500
    out = translate(rule, pkt)
    assert (out.pkt_seq, out.flow_id, out.size_bytes, out.direction) == (9, 4, 1500, Direction.OUTGOING)
    back = translate(rule, out.echo())
    assert back.tuple.dst == web_flow.src
    assert back.tuple.src == web_flow.dst


def test_translate_rejects_mismatched_tuple(web_flow):
    rule = NatRule(web_flow.src, ep("203.0.113.7:40000"), web_flow.dst, 6, 1)
    with pytest.raises(KeyMismatch):
        translate(rule, outgoing(FiveTuple(ep("10.0.0.6:1"), web_flow.dst, 6)))
    with pytest.raises(KeyMismatch):
        translate(rule, incoming(FiveTuple(web_flow.dst, ep("203.0.113.7:40001"), 6)))


def run_protocol(seed: int, mode: InstallMode, n_nics: int = 2):
    """Random flows through zero-latency NICs: creates, then returns, then pushes/fetches."""
    rng = random.Random(seed)
    space = ExternalSpace(EXTERNAL_BASE, 1, 1024, 1024 + rng.randint(40, 200))
    plan, nics = make_nics(space, n_nics, mode, seed=seed)
    hash_cfg = HashConfig(n_nics=n_nics, seed=seed)
    flows = list(dict.fromkeys(random_flow(rng) for _ in range(rng.randint(1, 30))))
    translations = {}
    for flow_id, ft in enumerate(flows, start=1):
        eff = nics[assign_nic(ft, hash_cfg)].on_outgoing_packet(outgoing(ft, flow=flow_id))
        deliver_all(nics, eff.messages)
        for tr in eff.forwarded:
            translations.setdefault(flow_id, set()).add(tr.after.tuple.src)
    for flow_id, ft in enumerate(flows, start=1):
        if flow_id not in translations:
            continue
        external = next(iter(translations[flow_id]))
        back = FiveTuple(ft.dst, external, ft.proto)
        eff = nics[assign_nic(back, hash_cfg)].on_incoming_packet(incoming(back, flow=flow_id))
        results = [eff] + deliver_all(nics, eff.messages)
        for e in results:
            for tr in e.forwarded:
                assert tr.after.tuple.dst == ft.src
                translations[flow_id].add(tr.before.tuple.dst)
    return nics, translations


def test_passive_and_active_give_identical_translations():
    for seed in range(1000):
        passive_nics, passive = run_protocol(seed, InstallMode.PASSIVE)
        active_nics, active = run_protocol(seed, InstallMode.ACTIVE)
        assert passive == active
        assert all(len(externals) == 1 for externals in passive.values())
        for i in passive_nics:
            assert passive_nics[i].table.forward == active_nics[i].table.forward
            assert passive_nics[i].table.reverse == active_nics[i].table.reverse


def test_single_outstanding_fetch_and_fifo_flush_randomized():
    for seed in range(1000):
        rng = random.Random(seed)
        space = ExternalSpace(EXTERNAL_BASE, 1, 2000, 2000 + rng.randint(10, 50))
        _, nics = make_nics(space, 2)
        ft = random_flow(rng)
        rule = nics[1].on_outgoing_packet(outgoing(ft)).created
        back = return_of(rule)
        held = rng.randint(1, 8)
        requests = []
        for seq in range(1, held + 1):
            requests.extend(nics[2].on_incoming_packet(incoming(back, seq=seq)).messages)
        assert len(requests) == 1
        assert len(nics[2].pending) == 1
        flush = deliver_all(nics, requests)[-1]
        assert [tr.before.pkt_seq for tr in flush.forwarded] == list(range(1, held + 1))
        assert nics[2].pending == {}


def test_nic_conservation_counts():
    rng = random.Random(8)
    space = ExternalSpace(EXTERNAL_BASE, 1, 1024, 1053)
    plan, nics = make_nics(space, 2)
    hash_cfg = HashConfig(n_nics=2)
    for flow_id in range(1, 60):
        ft = random_flow(rng)
        eff = nics[assign_nic(ft, hash_cfg)].on_outgoing_packet(outgoing(ft, flow=flow_id))
        if eff.forwarded:
            back = FiveTuple(ft.dst, eff.forwarded[0].after.tuple.src, 6)
            deliver_all(nics, nics[assign_nic(back, hash_cfg)].on_incoming_packet(incoming(back, flow=flow_id)).messages)
    for nic in nics.values():
        c = nic.counters
        drops = c["drops_exhausted"] + c["drops_unknown"] + c["drops_active_miss"]
        assert c["packets_in"] == c["translated_out"] + c["translated_in"] + drops + nic.pending_packets
