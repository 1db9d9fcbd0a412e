"""Command line entry point: run scenarios, serve the gateway, replay logs."""

from __future__ import annotations

import argparse
import dataclasses
import sys
import threading
import time
from pathlib import Path

from .ledger import replay_jsonl
from .sim import Harness, ScenarioConfig, run_scenario


def _cmd_run(args) -> int:
    config = ScenarioConfig.from_json_file(args.config)
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    report, harness = run_scenario(config)

    ledger_path = args.ledger
    if ledger_path is None and args.report is not None:
        ledger_path = str(Path(args.report).with_suffix(".ledger.jsonl"))
    if ledger_path is not None:
        harness.ledger.write_jsonl(ledger_path)
        aml_path = str(Path(ledger_path).with_suffix("")) + ".aml.jsonl"
        _write_aml(harness, aml_path)
        print(f"ledger written to {ledger_path}")
    if args.report is not None:
        report.write(args.report)
        print(f"report written to {args.report}")

    print(f"final tick {report.payload['final_tick']}, "
          f"ledger digest {report.ledger_digest}")
    ok = True
    for audit in report.audits:
        status = "PASS" if audit["passed"] else "FAIL"
        ok = ok and audit["passed"]
        print(f"  [{status}] {audit['name']}: {audit['detail']}")
    return 0 if ok else 1


def _write_aml(harness: Harness, path: str) -> None:
    from .crypto import canonical_json

    with open(path, "w", encoding="utf-8") as fh:
        for bank_id in sorted(harness.banks):
            for row in harness.banks[bank_id].aml_log:
                record = {"bank_id": bank_id} | row.to_json_dict()
                fh.write(canonical_json(record) + "\n")


def _cmd_serve(args) -> int:
    import uvicorn

    from .gateway import create_app

    config = ScenarioConfig.from_json_file(args.config)
    harness = Harness(config)
    app = create_app(harness)

    if args.autotick:
        interval = args.autotick / 1000.0

        def autotick():
            while True:
                time.sleep(interval)
                harness.step(1)

        threading.Thread(target=autotick, daemon=True).start()

    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def _cmd_replay(args) -> int:
    try:
        entries, digest = replay_jsonl(args.ledger)
    except (OSError, ValueError, KeyError) as err:
        print(f"replay failed: {err}")
        return 1
    print(f"replayed {len(entries)} entries, chain verified")
    print(f"ledger digest {digest.hex()}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sandbox",
        description="Deterministic digital cash sandbox: scripted runs, an "
        "interactive HTTP gateway, and ledger replay verification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute a scripted scenario")
    run_p.add_argument("--config", required=True, help="scenario JSON file")
    run_p.add_argument("--seed", type=int, default=None, help="override the seed")
    run_p.add_argument("--report", default=None, help="write the run report here")
    run_p.add_argument("--ledger", default=None, help="write the ledger JSONL here")
    run_p.set_defaults(func=_cmd_run)

    serve_p = sub.add_parser("serve", help="serve the interactive gateway")
    serve_p.add_argument("--config", required=True, help="scenario JSON file")
    serve_p.add_argument("--port", type=int, required=True)
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument(
        "--autotick",
        type=int,
        default=0,
        help="advance the clock every N milliseconds (demos only)",
    )
    serve_p.set_defaults(func=_cmd_serve)

    replay_p = sub.add_parser("replay", help="verify a persisted ledger's hash chain")
    replay_p.add_argument("--ledger", required=True, help="ledger JSONL file")
    replay_p.set_defaults(func=_cmd_replay)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
