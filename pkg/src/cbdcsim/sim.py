"""Deterministic discrete-event harness.

One single-threaded loop drives every actor. All timing is logical ticks;
all randomness comes from named streams derived from the master seed, so a
config reproduces its run byte for byte. Withdrawals and deposits are
synchronous calls between adjacent actors; only the spend path (wallet to
sequencer, sequencer to validators) travels as messages, which is where
latency, drops, partitions, and validator crashes apply.

Spend replies are routed by correlation id, not by sender address, so the
sequencer never learns which wallet submitted a request.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass
from typing import Callable

from .assets import Asset, DEFAULT_DENOMINATIONS, append_transfer, genesis_commitment
from .bank import CONSUMER, MERCHANT, IntermediaryBank
from .crypto import SUPPORTED_BITS, canonical_json, digest_to_int, generate_keypair
from .errors import ConfigInvalid, DomainError
from .ledger import (
    DEFAULT_ACK_TIMEOUT_TICKS,
    DEFAULT_COOLDOWN_TICKS,
    LedgerEntry,
    LedgerNode,
    LogicalClock,
    Pending,
    QuorumCertificate,
    SpendRequest,
    Validator,
    KIND_REDEMPTION,
    KIND_SPEND,
)
from .merchant import DEFAULT_INVOICE_EXPIRY_TICKS, Invoice, MerchantTill
from .mint import MintAuthority
from .rng import RngStream, master_stream
from .wallet import IN_FLIGHT, SPENDABLE, WalletEngine

FAULT_KINDS = ("partition", "drop-spike", "validator-crash")
SCRIPT_ACTIONS = (
    "withdraw",
    "invoice",
    "pay",
    "deposit",
    "double_spend",
    "inject_fault",
)


@dataclass(frozen=True)
class LatencyModel:
    kind: str = "fixed"  # fixed | uniform
    ticks: int = 0
    min_ticks: int = 0
    max_ticks: int = 0

    def draw(self, stream: RngStream) -> int:
        if self.kind == "fixed":
            return self.ticks
        return stream.randrange(self.min_ticks, self.max_ticks + 1)

    @classmethod
    def from_dict(cls, data: dict | None) -> "LatencyModel":
        if not data:
            return cls()
        kind = data.get("kind", "fixed")
        if kind == "fixed":
            return cls(kind="fixed", ticks=int(data.get("ticks", 0)))
        if kind == "uniform":
            return cls(
                kind="uniform",
                min_ticks=int(data.get("min", 0)),
                max_ticks=int(data.get("max", 0)),
            )
        raise ConfigInvalid(f"unknown latency kind {kind!r}")


@dataclass(frozen=True)
class ScriptEvent:
    tick: int
    actor: str
    action: str
    params: dict

    @classmethod
    def from_dict(cls, data: dict) -> "ScriptEvent":
        return cls(
            tick=int(data["tick"]),
            actor=str(data.get("actor", "sim")),
            action=str(data["action"]),
            params=dict(data.get("params", {})),
        )


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int
    wallet_balances: tuple[int, ...] = (100,)
    merchants: int = 1
    banks: int = 1
    validators: int = 3
    quorum: int = 2
    cooldown_ticks: int = DEFAULT_COOLDOWN_TICKS
    ack_timeout_ticks: int = DEFAULT_ACK_TIMEOUT_TICKS
    latency: LatencyModel = LatencyModel()
    drop_rate: float = 0.0
    max_ticks: int = 200
    invoice_expiry_ticks: int = DEFAULT_INVOICE_EXPIRY_TICKS
    denominations: tuple[int, ...] = DEFAULT_DENOMINATIONS
    key_bits: int = 512
    script: tuple[ScriptEvent, ...] = ()

    def validate(self) -> None:
        if self.quorum < 1 or self.quorum > self.validators:
            raise ConfigInvalid("quorum must satisfy 1 <= K <= N")
        if not 0.0 <= self.drop_rate <= 1.0:
            raise ConfigInvalid("drop_rate must lie in [0, 1]")
        if self.key_bits not in SUPPORTED_BITS:
            raise ConfigInvalid(f"key_bits must be one of {SUPPORTED_BITS}")
        if not self.wallet_balances or any(b < 0 for b in self.wallet_balances):
            raise ConfigInvalid("wallet balances must be non-negative")
        if self.merchants < 1 or self.banks < 1:
            raise ConfigInvalid("need at least one merchant and one bank")
        if 1 not in self.denominations:
            raise ConfigInvalid("denomination set must include 1")
        if self.cooldown_ticks < 0 or self.max_ticks < 1:
            raise ConfigInvalid("cooldown_ticks must be >= 0 and max_ticks >= 1")
        for event in self.script:
            if event.tick < 1:
                raise ConfigInvalid("script events must be scheduled at tick >= 1")
            if event.action not in SCRIPT_ACTIONS:
                raise ConfigInvalid(f"unknown script action {event.action!r}")

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        try:
            wallets = data.get("wallets", {"count": 1, "initial_balance": 100})
            if isinstance(wallets, dict):
                if "initial_balances" in wallets:
                    balances = tuple(int(b) for b in wallets["initial_balances"])
                else:
                    balances = (int(wallets.get("initial_balance", 100)),) * int(
                        wallets.get("count", 1)
                    )
            else:
                balances = tuple(int(b) for b in wallets)
            validators = data.get("validators", {"n": 3, "k": 2})
            config = cls(
                seed=int(data["seed"]),
                wallet_balances=balances,
                merchants=int(data.get("merchants", {"count": 1}).get("count", 1))
                if isinstance(data.get("merchants", 1), dict)
                else int(data.get("merchants", 1)),
                banks=int(data.get("banks", {"count": 1}).get("count", 1))
                if isinstance(data.get("banks", 1), dict)
                else int(data.get("banks", 1)),
                validators=int(validators.get("n", 3)),
                quorum=int(validators.get("k", 2)),
                cooldown_ticks=int(data.get("cooldown_ticks", DEFAULT_COOLDOWN_TICKS)),
                ack_timeout_ticks=int(
                    data.get("quorum_timeout_ticks", DEFAULT_ACK_TIMEOUT_TICKS)
                ),
                latency=LatencyModel.from_dict(data.get("latency")),
                drop_rate=float(data.get("drop_rate", 0.0)),
                max_ticks=int(data.get("max_ticks", 200)),
                invoice_expiry_ticks=int(
                    data.get("invoice_expiry_ticks", DEFAULT_INVOICE_EXPIRY_TICKS)
                ),
                denominations=tuple(
                    sorted((int(d) for d in data.get("denominations", DEFAULT_DENOMINATIONS)), reverse=True)
                ),
                key_bits=int(data.get("key_bits", 512)),
                script=tuple(ScriptEvent.from_dict(e) for e in data.get("script", [])),
            )
        except (KeyError, TypeError, ValueError) as err:
            raise ConfigInvalid(f"bad scenario config: {err}") from None
        config.validate()
        return config

    @classmethod
    def from_json_file(cls, path) -> "ScenarioConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class _Fault:
    kind: str
    targets: tuple[str, ...]
    rate: float
    from_tick: int
    to_tick: int  # half-open window [from_tick, to_tick)

    def active(self, tick: int) -> bool:
        return self.from_tick <= tick < self.to_tick


@dataclass
class AuditResult:
    name: str
    passed: bool
    detail: str = ""

    def to_json_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


class RunReport:
    def __init__(self, payload: dict):
        self.payload = payload

    @property
    def audits(self) -> list[dict]:
        return self.payload["audits"]

    def all_audits_passed(self) -> bool:
        return all(a["passed"] for a in self.audits)

    @property
    def ledger_digest(self) -> str:
        return self.payload["ledger_digest"]

    def to_canonical_json(self) -> str:
        return canonical_json(self.payload)

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(self.payload, indent=2, sort_keys=True) + "\n")


class Harness:
    """Builds the actor topology for a config and drives it tick by tick."""

    def __init__(self, config: ScenarioConfig):
        config.validate()
        self.config = config
        self.clock = LogicalClock()
        self.rng = master_stream(config.seed)
        self._queue: list[tuple[int, int, Callable[[], None]]] = []
        self._seq = 0
        self._corr = 0
        self._spend_replies: dict[int, Pending] = {}
        self._link_streams: dict[str, RngStream] = {}
        self.faults: list[_Fault] = []
        self.captured_pay_messages: list[str] = []
        self.revealed_serials: set[str] = set()
        self.revealed_owner_hashes: set[str] = set()
        self.revealed_signatures: set[int] = set()
        self.revealed_commitments: set[int] = set()
        self.event_counts: dict[str, int] = {}
        self.error_tallies: dict[str, int] = {}
        self.cooldown_violations: list[dict] = []
        self.conservation_failures: list[dict] = []
        self.double_spend_outcomes: list[str] = []
        self.payments_attempted = 0
        self.payments_succeeded = 0
        self.deposits_succeeded = 0
        self._build()

    # -- topology -------------------------------------------------------------

    def _build(self) -> None:
        config = self.config
        self.validators = [
            Validator(
                f"v{i}",
                generate_keypair(config.key_bits, self.rng.child(f"validator/v{i}")),
            )
            for i in range(config.validators)
        ]
        self.ledger = LedgerNode(
            validators=self.validators,
            quorum=config.quorum,
            clock=self.clock,
            cooldown_ticks=config.cooldown_ticks,
            ack_timeout_ticks=config.ack_timeout_ticks,
            ack_channel=self._ledger_ack_channel,
            scheduler=self.schedule_call,
        )
        self.mint = MintAuthority(
            denominations=config.denominations,
            rng=self.rng.child("mint"),
            clock=self.clock,
            ledger=self.ledger,
            key_bits=config.key_bits,
        )
        self.ledger.set_mint_keys(self.mint.public_keys())

        self.banks: dict[str, IntermediaryBank] = {}
        for i in range(config.banks):
            bank_id = f"b{i}"
            bank = IntermediaryBank(
                bank_id,
                self.mint,
                self.clock,
                self.rng.child(f"bank/{bank_id}"),
                key_bits=config.key_bits,
            )
            self.mint.register_bank(bank_id, bank.receiving_key.public)
            self.ledger.register_bank(bank_id, bank.receiving_key_hash)
            self.banks[bank_id] = bank

        bank_ids = sorted(self.banks)
        self.tills: dict[str, MerchantTill] = {}
        self.merchant_accounts: dict[str, tuple[str, str]] = {}  # till -> (bank, acct)
        validator_keys = self.ledger.validator_public_keys()
        for i in range(config.merchants):
            merchant_id = f"m{i}"
            till = MerchantTill(
                merchant_id,
                self.clock,
                self.rng.child(f"merchant/{merchant_id}"),
                validator_keys,
                config.quorum,
                invoice_expiry_ticks=config.invoice_expiry_ticks,
                key_bits=config.key_bits,
            )
            bank_id = bank_ids[i % len(bank_ids)]
            account = self.banks[bank_id].open_account(
                MERCHANT, f"registered trader {merchant_id}", 0, merchant_id=merchant_id
            )
            self.tills[merchant_id] = till
            self.merchant_accounts[merchant_id] = (bank_id, account)

        merchant_hashes = {m: t.receiving_key_hash for m, t in self.tills.items()}
        self.wallets: dict[str, WalletEngine] = {}
        self.wallet_accounts: dict[str, tuple[str, str]] = {}
        for i, balance in enumerate(config.wallet_balances):
            wallet_id = f"w{i}"
            bank_id = bank_ids[i % len(bank_ids)]
            account = self.banks[bank_id].open_account(CONSUMER, f"holder {i}", balance)
            wallet = WalletEngine(
                wallet_id=wallet_id,
                bank=self.banks[bank_id],
                linked_account=account,
                clock=self.clock,
                rng=self.rng.child(f"wallet/{wallet_id}"),
                mint_public_keys=self.mint.public_keys(),
                denominations=config.denominations,
                cooldown_ticks=config.cooldown_ticks,
                submit_spend=self._spend_channel(),
                deliver_payment=self._deliver_channel(),
                merchant_key_hashes=merchant_hashes,
                key_bits=config.key_bits,
            )
            self.wallets[wallet_id] = wallet
            self.wallet_accounts[wallet_id] = (bank_id, account)

        self.initial_fiat = sum(config.wallet_balances)
        self._script_by_tick: dict[int, list[ScriptEvent]] = {}
        for event in self.config.script:
            self._script_by_tick.setdefault(event.tick, []).append(event)
        self._last_script_tick = max((e.tick for e in self.config.script), default=0)

    # -- event loop -------------------------------------------------------------

    def schedule_call(self, tick: int, fn: Callable[[], None]) -> None:
        self._seq += 1
        heapq.heappush(self._queue, (tick, self._seq, fn))

    def _drain_current(self) -> None:
        while self._queue and self._queue[0][0] <= self.clock.now:
            _, _, fn = heapq.heappop(self._queue)
            fn()

    def step(self, n_ticks: int = 1) -> int:
        """Advance the clock: deliver due messages, then run this tick's
        scripted actions, letting each one's same-tick cascade finish first
        (the same semantics an interactive caller gets)."""
        for _ in range(n_ticks):
            self.clock.tick()
            self._drain_current()
            for event in self._script_by_tick.get(self.clock.now, ()):
                self._run_script_event(event)
                self._drain_current()
            self._tick_audit()
        return self.clock.now

    def settle(self, pending: Pending, max_extra_ticks: int | None = None) -> None:
        """Complete an interactive operation: drain now, step only if needed."""
        self._drain_current()
        budget = (
            max_extra_ticks
            if max_extra_ticks is not None
            else self.config.ack_timeout_ticks + 5
        )
        while not pending.done and budget > 0:
            self.step(1)
            budget -= 1

    def run(self) -> None:
        while (
            self._queue or self.clock.now < self._last_script_tick
        ) and self.clock.now < self.config.max_ticks:
            self.step(1)

    # -- messaging ---------------------------------------------------------------

    def _link_stream(self, link: str) -> RngStream:
        if link not in self._link_streams:
            self._link_streams[link] = self.rng.child(f"net/{link}")
        return self._link_streams[link]

    def _validator_fault_state(self, validator_id: str) -> tuple[bool, bool, float]:
        crashed = partitioned = False
        spike = 0.0
        for fault in self.faults:
            if not fault.active(self.clock.now):
                continue
            if fault.kind == "validator-crash" and validator_id in fault.targets:
                crashed = True
            elif fault.kind == "partition" and validator_id in fault.targets:
                partitioned = True
            elif fault.kind == "drop-spike":
                spike = max(spike, fault.rate)
        return crashed, partitioned, spike

    def _send_validator_link(
        self, link: str, validator_id: str, fn: Callable[[], None]
    ) -> None:
        stream = self._link_stream(link)
        delay = self.config.latency.draw(stream)
        _, partitioned, spike = self._validator_fault_state(validator_id)
        drop_rate = max(self.config.drop_rate, spike)
        dropped = partitioned or (drop_rate > 0 and stream.uniform() < drop_rate)
        if dropped:
            return
        self.schedule_call(self.clock.now + delay, fn)

    def _send_plain(self, link: str, fn: Callable[[], None]) -> None:
        delay = self.config.latency.draw(self._link_stream(link))
        self.schedule_call(self.clock.now + delay, fn)

    def _ledger_ack_channel(
        self, validator_id: str, round_id: int, entries: list[LedgerEntry]
    ) -> None:
        entry_hashes = [entry.entry_hash for entry in entries]

        def deliver() -> None:
            crashed, _, _ = self._validator_fault_state(validator_id)
            if crashed:
                return
            validator = self.ledger.validators[validator_id]
            signatures = validator.handle_ack_request(entry_hashes)
            if signatures is None:
                return
            self._send_validator_link(
                "validator->ledger",
                validator_id,
                lambda: self.ledger.on_ack_response(round_id, validator_id, signatures),
            )

        self._send_validator_link("ledger->validator", validator_id, deliver)

    def _spend_channel(self) -> Callable[[SpendRequest], Pending]:
        def submit(request: SpendRequest) -> Pending:
            pending = Pending()
            self._corr += 1
            corr = self._corr
            self._spend_replies[corr] = pending
            message = {"kind": "spend_submit", "corr": corr, "request": request.to_json_dict()}
            self.captured_pay_messages.append(canonical_json(message))

            def deliver() -> None:
                self.ledger.submit_spend(
                    SpendRequest.from_json_dict(message["request"]),
                    on_result=lambda done: self._reply_spend(corr, done),
                )

            self._send_plain("wallet->ledger", deliver)
            return pending

        return submit

    def _reply_spend(self, corr: int, done: Pending) -> None:
        def deliver() -> None:
            pending = self._spend_replies.pop(corr, None)
            if pending is None:
                return
            if done.error is not None:
                pending.fail(done.error)
            else:
                pending.resolve(done.value)

        self._send_plain("ledger->wallet", deliver)

    def _deliver_channel(self):
        def deliver(
            merchant_id: str,
            invoice: Invoice,
            assets: list[Asset],
            certificates: list[QuorumCertificate],
        ) -> None:
            payload = {
                "kind": "payment_delivery",
                "invoice": invoice.to_json_dict(),
                "assets": [a.to_json_dict() for a in assets],
                "certificates": [c.to_json_dict() for c in certificates],
            }
            self.captured_pay_messages.append(canonical_json(payload))
            self._register_revealed(assets)
            self.tills[merchant_id].accept_payment(invoice, assets, certificates)

        return deliver

    def _register_revealed(self, assets: list[Asset]) -> None:
        for asset in assets:
            self.revealed_serials.add(asset.serial.hex())
            self.revealed_owner_hashes.add(asset.genesis_owner_hash.hex())
            self.revealed_signatures.add(asset.genesis_signature)
            commitment = genesis_commitment(asset.serial, asset.genesis_owner_hash)
            mint_pk = self.mint.public_keys()[asset.denomination]
            self.revealed_commitments.add(digest_to_int(commitment, mint_pk.modulus))
            for record in asset.history:
                self.revealed_owner_hashes.add(record.to_key_hash.hex())

    # -- scripted/interactive actions ---------------------------------------------

    def _tally_error(self, err: DomainError) -> None:
        self.error_tallies[err.code] = self.error_tallies.get(err.code, 0) + 1

    def _count_event(self, action: str) -> None:
        self.event_counts[action] = self.event_counts.get(action, 0) + 1

    def _run_script_event(self, event: ScriptEvent) -> None:
        try:
            if event.action == "withdraw":
                self.do_withdraw(event.actor, int(event.params["amount"]))
            elif event.action == "invoice":
                self.do_invoice(event.actor, int(event.params["amount"]))
            elif event.action == "pay":
                self.do_pay(
                    event.actor,
                    event.params["merchant"],
                    event.params.get("invoice_id"),
                )
            elif event.action == "deposit":
                self.do_deposit(event.actor)
            elif event.action == "double_spend":
                self.do_double_spend(event.actor, list(event.params["merchants"]))
            elif event.action == "inject_fault":
                self.inject_fault(
                    event.params["kind"],
                    event.params,
                    int(event.params["from_tick"]),
                    int(event.params["to_tick"]),
                )
        except DomainError as err:
            self._tally_error(err)

    def do_withdraw(self, wallet_id: str, amount: int) -> list[Asset]:
        self._count_event("withdraw")
        wallet = self.wallets[wallet_id]
        try:
            issued = wallet.withdraw(amount)
        except DomainError as err:
            self._tally_error(err)
            raise
        self._register_revealed(issued)
        return issued

    def do_invoice(self, merchant_id: str, amount: int) -> Invoice:
        self._count_event("invoice")
        try:
            return self.tills[merchant_id].create_invoice(amount)
        except DomainError as err:
            self._tally_error(err)
            raise

    def do_pay(
        self, wallet_id: str, merchant_id: str, invoice_id: str | None = None
    ) -> Pending:
        self._count_event("pay")
        wallet = self.wallets[wallet_id]
        till = self.tills[merchant_id]
        if invoice_id is not None:
            invoice = till.invoices.get(invoice_id)
            if invoice is None:
                raise ConfigInvalid(f"no invoice {invoice_id!r} at merchant {merchant_id!r}")
        else:
            invoice = till.latest_open_invoice()
            if invoice is None:
                raise ConfigInvalid(f"merchant {merchant_id!r} has no open invoice")
        self.payments_attempted += 1
        pending = wallet.pay(invoice)
        pending.on_done(self._on_payment_done)
        return pending

    def _on_payment_done(self, pending: Pending) -> None:
        if pending.error is not None:
            self._tally_error(pending.error)
        else:
            self.payments_succeeded += 1

    def do_deposit(self, merchant_id: str) -> int:
        self._count_event("deposit")
        till = self.tills[merchant_id]
        bank_id, account = self.merchant_accounts[merchant_id]
        self._register_revealed(till.holdings)
        try:
            credited = till.deposit(self.banks[bank_id], account)
        except DomainError as err:
            self._tally_error(err)
            raise
        if credited:
            self.deposits_succeeded += 1
        return credited

    def do_double_spend(self, wallet_id: str, merchant_ids: list[str]) -> list[Pending]:
        """Adversarial action: fork one cooled asset to several merchants at once."""
        self._count_event("double_spend")
        wallet = self.wallets[wallet_id]
        candidates = [
            h
            for h in wallet.holdings.values()
            if h.state == SPENDABLE
            and self.clock.now >= h.asset.issue_tick + self.config.cooldown_ticks
        ]
        if not candidates:
            raise ConfigInvalid("double_spend needs a cooled spendable asset")
        holding = min(candidates, key=lambda h: (-h.asset.denomination, h.asset.serial))
        holding.state = IN_FLIGHT
        submit = self._spend_channel()
        forks = []
        for merchant_id in merchant_ids:
            till = self.tills[merchant_id]
            invoice = till.create_invoice(holding.asset.denomination)
            ref = (merchant_id, invoice.invoice_id)
            forked = append_transfer(
                holding.asset, till.receiving_key_hash, ref, holding.owner_key
            )
            forks.append((merchant_id, invoice, forked, submit(SpendRequest(forked, ref))))
        state = {"unresolved": len(forks), "won": False}
        for merchant_id, invoice, forked, pending in forks:
            pending.on_done(
                lambda done, m=merchant_id, inv=invoice, a=forked: self._settle_double_spend(
                    wallet, holding, state, m, inv, a, done
                )
            )
        return [pending for _, _, _, pending in forks]

    def _settle_double_spend(self, wallet, holding, state, merchant_id, invoice, asset, done):
        state["unresolved"] -= 1
        if done.error is not None:
            self.double_spend_outcomes.append(done.error.code)
            self._tally_error(done.error)
        else:
            self.double_spend_outcomes.append("Accepted")
            state["won"] = True
            wallet.holdings.pop(holding.asset.serial, None)
            wallet.total_paid += invoice.amount
            self._register_revealed([asset])
            self.tills[merchant_id].accept_payment(invoice, [asset], [done.value])
        if state["unresolved"] == 0 and not state["won"]:
            # No fork committed; the asset is still the wallet's to spend.
            holding.state = SPENDABLE

    def inject_fault(self, kind: str, params: dict, from_tick: int, to_tick: int) -> None:
        if kind not in FAULT_KINDS:
            raise ConfigInvalid(f"unknown fault kind {kind!r}")
        self._count_event("inject_fault")
        self.faults.append(
            _Fault(
                kind=kind,
                targets=tuple(params.get("targets", ())),
                rate=float(params.get("rate", 1.0)),
                from_tick=from_tick,
                to_tick=to_tick,
            )
        )

    # -- audits ---------------------------------------------------------------------

    def _holdings_total(self) -> int:
        return sum(w.holdings_value() for w in self.wallets.values())

    def _unredeemed_total(self) -> int:
        return sum(t.unredeemed_value() for t in self.tills.values())

    def _bank_total(self) -> int:
        return sum(b.total_balances() for b in self.banks.values())

    def _tick_audit(self) -> None:
        total = self._bank_total() + self._holdings_total() + self._unredeemed_total()
        if total != self.initial_fiat:
            self.conservation_failures.append(
                {
                    "tick": self.clock.now,
                    "banks": self._bank_total(),
                    "wallets": self._holdings_total(),
                    "merchants": self._unredeemed_total(),
                    "expected": self.initial_fiat,
                }
            )

    def _final_cooldown_audit(self) -> AuditResult:
        violations = []
        spend_ticks = {
            e.nullifier.hex(): e.tick
            for e in self.ledger.entries
            if e.kind == KIND_SPEND and e.nullifier
        }
        for message in self.captured_pay_messages:
            data = json.loads(message)
            if data.get("kind") != "spend_submit":
                continue
            asset = Asset.from_json_dict(data["request"]["asset"])
            tick = spend_ticks.get(asset.spend_nullifier().hex())
            if tick is None:
                continue
            if tick < asset.issue_tick + self.config.cooldown_ticks:
                violations.append(asset.serial.hex())
        return AuditResult(
            "cooldown",
            not violations,
            f"{len(violations)} committed spends of hot assets",
        )

    def _audit_results(self) -> list[AuditResult]:
        results = []

        results.append(
            AuditResult(
                "conservation",
                not self.conservation_failures,
                f"{len(self.conservation_failures)} tick(s) out of balance",
            )
        )

        mint_outstanding = self.mint.stats()["outstanding_value"]
        circulating = self._holdings_total() + self._unredeemed_total()
        results.append(
            AuditResult(
                "mint-outstanding",
                mint_outstanding == circulating,
                f"outstanding {mint_outstanding} vs circulating {circulating}",
            )
        )

        nullifiers = [e.nullifier for e in self.ledger.entries if e.nullifier]
        results.append(
            AuditResult(
                "no-double-spend",
                len(nullifiers) == len(set(nullifiers)),
                f"{len(nullifiers) - len(set(nullifiers))} duplicate nullifier(s)",
            )
        )

        missing_recipient = [
            e
            for e in self.ledger.entries
            if e.kind in (KIND_SPEND, KIND_REDEMPTION) and not e.recipient_id
        ]
        results.append(
            AuditResult(
                "recipient-transparency",
                not missing_recipient,
                f"{len(missing_recipient)} entries lack a recipient",
            )
        )

        chain_ok = True
        prev = b"\x00" * 32
        for entry in self.ledger.entries:
            if entry.prev_hash != prev or entry.compute_hash() != entry.entry_hash:
                chain_ok = False
                break
            prev = entry.entry_hash
        results.append(AuditResult("hash-chain", chain_ok, "replayed from genesis"))

        results.append(self._final_cooldown_audit())

        # Payer anonymity: nothing the ledger stores, and nothing the wallets
        # sent while paying, names an account, a wallet stream, or a factor.
        entry_blob = canonical_json([e.to_json_dict() for e in self.ledger.entries])
        account_ids = [acct for _, acct in self.wallet_accounts.values()]
        stream_ids = [w.rng.name for w in self.wallets.values()]
        leaks = [
            needle
            for needle in account_ids + stream_ids
            if needle in entry_blob
        ]
        pay_blob = "\n".join(self.captured_pay_messages)
        factor_hexes = [
            format(value, "x")
            for wallet in self.wallets.values()
            for value in wallet.used_factors
        ]
        leaks += [n for n in account_ids + stream_ids if n in pay_blob]
        leaks += [h for h in factor_hexes if h in pay_blob]
        results.append(
            AuditResult("payer-anonymity", not leaks, f"{len(leaks)} byte leak(s)")
        )

        # Mint obliviousness: its whole state never contains a revealed
        # serial, owner hash, unblinded signature, or raw commitment.
        mint_blob = canonical_json(
            {
                "transcript": [
                    [row.bank_id, row.denomination, format(row.blinded_value, "x"), row.tick]
                    for row in self.mint.transcript
                ],
                "issued": self.mint.issued_totals,
                "redeemed": self.mint.redeemed_totals,
            }
        )
        mint_leaks = [s for s in self.revealed_serials if s in mint_blob]
        mint_leaks += [h for h in self.revealed_owner_hashes if h in mint_blob]
        mint_leaks += [
            format(sig, "x")
            for sig in self.revealed_signatures
            if format(sig, "x") in mint_blob
        ]
        transcript_values = {row.blinded_value for row in self.mint.transcript}
        linkage = transcript_values & (self.revealed_signatures | self.revealed_commitments)
        results.append(
            AuditResult(
                "mint-obliviousness",
                not mint_leaks and not linkage,
                f"{len(mint_leaks)} byte leak(s), {len(linkage)} transcript linkage(s)",
            )
        )

        bank_blob = canonical_json(
            [
                {
                    "accounts": {
                        acct: [a.holder_kind, a.balance, a.aml_record]
                        for acct, a in bank.accounts.items()
                    },
                    "aml": [row.to_json_dict() for row in bank.aml_log],
                }
                for bank in self.banks.values()
            ]
        )
        bank_leaks = [s for s in self.revealed_serials if s in bank_blob]
        bank_leaks += [h for h in self.revealed_owner_hashes if h in bank_blob]
        results.append(
            AuditResult(
                "bank-privacy-boundary",
                not bank_leaks,
                f"{len(bank_leaks)} byte leak(s) in bank state",
            )
        )

        aml_rows = sum(len(bank.aml_log) for bank in self.banks.values())
        aml_ok = aml_rows == self.deposits_succeeded and all(
            row.merchant_identity for bank in self.banks.values() for row in bank.aml_log
        )
        results.append(
            AuditResult(
                "aml-completeness",
                aml_ok,
                f"{aml_rows} AML row(s) for {self.deposits_succeeded} merchant credit(s)",
            )
        )

        factors: list[int] = []
        owner_keys: list[bytes] = []
        for wallet in self.wallets.values():
            factors.extend(wallet.used_factors)
            owner_keys.extend(wallet.used_owner_keys)
        results.append(
            AuditResult(
                "fresh-keys",
                len(factors) == len(set(factors)) and len(owner_keys) == len(set(owner_keys)),
                f"{len(factors)} factors, {len(owner_keys)} owner keys",
            )
        )

        losses = [
            wallet_id
            for wallet_id, wallet in self.wallets.items()
            if wallet.holdings_value() != wallet.total_withdrawn - wallet.total_paid
        ]
        results.append(
            AuditResult(
                "wallet-no-loss",
                not losses,
                f"{len(losses)} wallet(s) with unexplained value drift",
            )
        )

        return results

    # -- reporting -----------------------------------------------------------------

    def report(self) -> RunReport:
        audits = [a.to_json_dict() for a in self._audit_results()]
        payload = {
            "seed": self.config.seed,
            "final_tick": self.clock.now,
            "ledger_digest": self.ledger.ledger_digest().hex(),
            "entry_count": len(self.ledger.entries),
            "balances": {
                "banks": {
                    bank_id: {
                        "accounts": {a: acc.balance for a, acc in bank.accounts.items()},
                        "total": bank.total_balances(),
                    }
                    for bank_id, bank in self.banks.items()
                },
                "wallets": {
                    wallet_id: wallet.balance()
                    for wallet_id, wallet in self.wallets.items()
                },
                "merchants": {
                    merchant_id: {
                        "unredeemed": till.unredeemed_value(),
                        "revenue": till.revenue(),
                    }
                    for merchant_id, till in self.tills.items()
                },
            },
            "mint": self.mint.stats(),
            "payments": {
                "attempted": self.payments_attempted,
                "succeeded": self.payments_succeeded,
            },
            "double_spend_outcomes": sorted(self.double_spend_outcomes),
            "event_counts": self.event_counts,
            "error_tallies": self.error_tallies,
            "audits": audits,
        }
        return RunReport(payload)


def run_scenario(config: ScenarioConfig) -> tuple[RunReport, Harness]:
    harness = Harness(config)
    harness.run()
    return harness.report(), harness
