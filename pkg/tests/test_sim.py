"""End-to-end scenario runs: determinism, faults, audits, the scripted
example flows."""

import pytest

from cbdcsim.errors import ConfigInvalid
from cbdcsim.sim import Harness, LatencyModel, ScenarioConfig, run_scenario


def base_config(**overrides):
    data = {
        "seed": 42,
        "wallets": {"count": 1, "initial_balances": [100]},
        "merchants": {"count": 1},
        "banks": {"count": 1},
        "validators": {"n": 3, "k": 2},
        "cooldown_ticks": 5,
        "latency": {"kind": "fixed", "ticks": 0},
        "drop_rate": 0.0,
        "max_ticks": 60,
        "script": [],
    }
    data.update(overrides)
    return ScenarioConfig.from_dict(data)


PAY_SCRIPT = [
    {"tick": 1, "actor": "w0", "action": "withdraw", "params": {"amount": 37}},
    {"tick": 8, "actor": "m0", "action": "invoice", "params": {"amount": 37}},
    {"tick": 9, "actor": "w0", "action": "pay", "params": {"merchant": "m0"}},
    {"tick": 15, "actor": "m0", "action": "deposit", "params": {}},
]


def test_example_flow_hand_traced():
    # withdraw 37 at t1, cooldown 5, invoice at t8, pay at t9, deposit at t15:
    # the merchant's account must end at exactly 37.
    report, harness = run_scenario(base_config(script=PAY_SCRIPT))
    assert report.payload["payments"] == {"attempted": 1, "succeeded": 1}
    merchant_account = harness.merchant_accounts["m0"][1]
    assert harness.banks["b0"].balance(merchant_account) == 37
    assert report.payload["balances"]["wallets"]["w0"]["total"] == 0
    assert report.all_audits_passed()


def test_same_config_same_digest_and_report():
    first, _ = run_scenario(base_config(script=PAY_SCRIPT))
    second, _ = run_scenario(base_config(script=PAY_SCRIPT))
    assert first.ledger_digest == second.ledger_digest
    assert first.to_canonical_json() == second.to_canonical_json()


def test_different_seed_different_digest():
    a, _ = run_scenario(base_config(script=PAY_SCRIPT))
    b, _ = run_scenario(base_config(seed=43, script=PAY_SCRIPT))
    assert a.ledger_digest != b.ledger_digest


def test_early_pay_is_hot():
    script = [
        {"tick": 1, "actor": "w0", "action": "withdraw", "params": {"amount": 37}},
        {"tick": 2, "actor": "m0", "action": "invoice", "params": {"amount": 37}},
        {"tick": 3, "actor": "w0", "action": "pay", "params": {"merchant": "m0"}},
    ]
    report, _ = run_scenario(base_config(script=script))
    assert report.payload["error_tallies"].get("HotAsset") == 1
    assert report.payload["payments"]["succeeded"] == 0
    assert report.all_audits_passed()


def test_latency_delays_delivery():
    config = base_config(latency={"kind": "fixed", "ticks": 2}, script=PAY_SCRIPT)
    report, harness = run_scenario(config)
    assert report.payload["payments"]["succeeded"] == 1
    spend_entries = [e for e in harness.ledger.entries if e.kind == "Spend"]
    # Submission at t9 plus one wallet->ledger hop of 2 ticks.
    assert all(e.tick >= 11 for e in spend_entries)
    assert report.all_audits_passed()


def test_step_advances_exactly():
    harness = Harness(base_config())
    assert harness.step(1) == 1
    assert harness.step(3) == 4


def test_crash_two_of_three_validators_times_out():
    script = [
        {"tick": 1, "actor": "w0", "action": "withdraw", "params": {"amount": 20}},
        {
            "tick": 2,
            "actor": "sim",
            "action": "inject_fault",
            "params": {"kind": "validator-crash", "targets": ["v1", "v2"], "from_tick": 2, "to_tick": 40},
        },
        {"tick": 8, "actor": "m0", "action": "invoice", "params": {"amount": 20}},
        {"tick": 9, "actor": "w0", "action": "pay", "params": {"merchant": "m0"}},
    ]
    config = base_config(script=script, max_ticks=60)
    report, harness = run_scenario(config)
    assert report.payload["error_tallies"].get("QuorumTimeout") == 1
    assert report.payload["payments"]["succeeded"] == 0
    # Assets were released back to spendable after the timeout.
    assert harness.wallets["w0"].balance()["spendable"] == 20
    assert report.all_audits_passed()


def test_crash_one_of_three_validators_succeeds():
    script = [
        {"tick": 1, "actor": "w0", "action": "withdraw", "params": {"amount": 20}},
        {
            "tick": 2,
            "actor": "sim",
            "action": "inject_fault",
            "params": {"kind": "validator-crash", "targets": ["v1"], "from_tick": 2, "to_tick": 40},
        },
        {"tick": 8, "actor": "m0", "action": "invoice", "params": {"amount": 20}},
        {"tick": 9, "actor": "w0", "action": "pay", "params": {"merchant": "m0"}},
    ]
    report, _ = run_scenario(base_config(script=script))
    assert report.payload["payments"]["succeeded"] == 1
    assert report.all_audits_passed()


def test_partition_window_end_restores_service():
    script = [
        {"tick": 1, "actor": "w0", "action": "withdraw", "params": {"amount": 20}},
        {
            "tick": 2,
            "actor": "sim",
            "action": "inject_fault",
            "params": {"kind": "partition", "targets": ["v1", "v2"], "from_tick": 2, "to_tick": 25},
        },
        {"tick": 8, "actor": "m0", "action": "invoice", "params": {"amount": 20}},
        {"tick": 9, "actor": "w0", "action": "pay", "params": {"merchant": "m0"}},
        {"tick": 30, "actor": "m0", "action": "invoice", "params": {"amount": 20}},
        {"tick": 31, "actor": "w0", "action": "pay", "params": {"merchant": "m0"}},
    ]
    report, _ = run_scenario(base_config(script=script, max_ticks=80))
    assert report.payload["error_tallies"].get("QuorumTimeout") == 1
    assert report.payload["payments"]["succeeded"] == 1
    assert report.all_audits_passed()


def test_double_spend_exactly_one_accepted():
    script = [
        {"tick": 1, "actor": "w0", "action": "withdraw", "params": {"amount": 20}},
        {
            "tick": 9,
            "actor": "w0",
            "action": "double_spend",
            "params": {"merchants": ["m0", "m1"]},
        },
    ]
    config = base_config(merchants={"count": 2}, script=script)
    report, _ = run_scenario(config)
    assert sorted(report.payload["double_spend_outcomes"]) == ["Accepted", "AlreadySpent"]
    assert report.all_audits_passed()


def test_unknown_fault_kind_rejected():
    harness = Harness(base_config())
    with pytest.raises(ConfigInvalid):
        harness.inject_fault("meteor-strike", {}, 1, 5)


def test_config_validation():
    with pytest.raises(ConfigInvalid):
        base_config(validators={"n": 3, "k": 4})
    with pytest.raises(ConfigInvalid):
        base_config(drop_rate=1.5)
    with pytest.raises(ConfigInvalid):
        base_config(script=[{"tick": 0, "actor": "w0", "action": "withdraw", "params": {}}])
    with pytest.raises(ConfigInvalid):
        base_config(script=[{"tick": 1, "actor": "w0", "action": "teleport", "params": {}}])


def test_uniform_latency_draw_bounds():
    model = LatencyModel(kind="uniform", min_ticks=1, max_ticks=3)
    from cbdcsim.rng import master_stream

    stream = master_stream(5).child("latency")
    draws = {model.draw(stream) for _ in range(200)}
    assert draws == {1, 2, 3}


def test_dropped_messages_never_deliver():
    # Full drop rate on validator links: every spend times out.
    script = [
        {"tick": 1, "actor": "w0", "action": "withdraw", "params": {"amount": 20}},
        {"tick": 8, "actor": "m0", "action": "invoice", "params": {"amount": 20}},
        {"tick": 9, "actor": "w0", "action": "pay", "params": {"merchant": "m0"}},
    ]
    report, _ = run_scenario(base_config(drop_rate=1.0, script=script))
    assert report.payload["error_tallies"].get("QuorumTimeout") == 1
    assert report.all_audits_passed()


def test_conservation_holds_through_mid_flight_snapshots():
    config = base_config(
        latency={"kind": "uniform", "min": 0, "max": 2}, script=PAY_SCRIPT
    )
    report, harness = run_scenario(config)
    assert not harness.conservation_failures
    assert report.all_audits_passed()
