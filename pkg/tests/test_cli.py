"""CLI behavior via its entry function and one subprocess smoke test."""

import json
import subprocess
import sys

from cbdcsim.cli import main


def test_run_writes_report_and_ledger(tmp_path):
    config = {
        "seed": 5,
        "wallets": {"count": 1, "initial_balances": [100]},
        "merchants": {"count": 1},
        "banks": {"count": 1},
        "validators": {"n": 3, "k": 2},
        "cooldown_ticks": 3,
        "latency": {"kind": "fixed", "ticks": 1},
        "max_ticks": 60,
        "script": [
            {"tick": 1, "actor": "w0", "action": "withdraw", "params": {"amount": 25}},
            {"tick": 6, "actor": "m0", "action": "invoice", "params": {"amount": 25}},
            {"tick": 7, "actor": "w0", "action": "pay", "params": {"merchant": "m0"}},
            {"tick": 20, "actor": "m0", "action": "deposit", "params": {}},
        ],
    }
    config_path = tmp_path / "scenario.json"
    config_path.write_text(json.dumps(config))
    report_path = tmp_path / "out.json"

    code = main(["run", "--config", str(config_path), "--report", str(report_path)])
    assert code == 0
    report = json.loads(report_path.read_text())
    assert all(a["passed"] for a in report["audits"])

    ledger_path = tmp_path / "out.ledger.jsonl"
    assert ledger_path.exists()
    aml_path = tmp_path / "out.ledger.aml.jsonl"
    assert aml_path.exists()
    assert len(aml_path.read_text().splitlines()) == 1

    assert main(["replay", "--ledger", str(ledger_path)]) == 0

    # Tampering must fail the replay; the first line is the issue batch.
    lines = ledger_path.read_text().splitlines()
    assert '"amount":25' in lines[0]
    lines[0] = lines[0].replace('"amount":25', '"amount":26', 1)
    broken = tmp_path / "broken.jsonl"
    broken.write_text("\n".join(lines) + "\n")
    assert main(["replay", "--ledger", str(broken)]) == 1


def test_seed_override_changes_digest(tmp_path):
    config = {
        "seed": 5,
        "wallets": {"count": 1, "initial_balances": [50]},
        "merchants": {"count": 1},
        "banks": {"count": 1},
        "validators": {"n": 3, "k": 2},
        "max_ticks": 30,
        "cooldown_ticks": 2,
        "script": [
            {"tick": 1, "actor": "w0", "action": "withdraw", "params": {"amount": 20}},
            {"tick": 4, "actor": "m0", "action": "invoice", "params": {"amount": 20}},
            {"tick": 5, "actor": "w0", "action": "pay", "params": {"merchant": "m0"}},
        ],
    }
    config_path = tmp_path / "scenario.json"
    config_path.write_text(json.dumps(config))
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["run", "--config", str(config_path), "--report", str(a)])
    main(["run", "--config", str(config_path), "--report", str(b), "--seed", "6"])
    digest_a = json.loads(a.read_text())["ledger_digest"]
    digest_b = json.loads(b.read_text())["ledger_digest"]
    assert digest_a != digest_b


def test_console_entry_point(tmp_path):
    result = subprocess.run(
        [sys.executable, "-m", "cbdcsim.cli", "run", "--config", "configs/demo_run.json"],
        capture_output=True,
        text=True,
        cwd="/root/pkg",
    )
    assert result.returncode == 0, result.stdout + result.stderr
    assert "[PASS]" in result.stdout
    assert "[FAIL]" not in result.stdout
