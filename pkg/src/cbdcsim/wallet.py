"""Non-custodial wallet engine.

The wallet holds the only copies of owner secret keys and blinding factors.
Withdrawal builds fresh (serial, keypair, blinding factor) triples per
token so no two assets share linkable material; payment appends transfer
records and submits spend requests, releasing or removing assets only when
the ledger answers. Spend messages never carry the linked bank account, the
wallet's stream name, or any blinding factor.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Callable

from .assets import (
    Asset,
    append_transfer,
    genesis_commitment,
    is_cooled,
    select_tokens,
)
from .bank import IntermediaryBank
from .crypto import (
    BlindingFactor,
    PublicKey,
    SigningKeyPair,
    blind,
    canonical_json,
    generate_keypair,
    make_blinding_factor,
    unblind,
    verify_blind_signature,
)
from .errors import (
    CannotMakeAmount,
    CorruptFile,
    DomainError,
    HotAsset,
    InvalidAmount,
    InvoiceExpired,
    QuorumTimeout,
    VerificationFailed,
)
from .ledger import LogicalClock, Pending, QuorumCertificate, SpendRequest
from .merchant import Invoice
from .rng import RngStream

SCHEMA_TAG = "wallet/v1"

SPENDABLE = "spendable"
IN_FLIGHT = "in_flight"
DEAD = "dead"


@dataclass
class Holding:
    asset: Asset
    owner_key: SigningKeyPair | None
    state: str = SPENDABLE


@dataclass(frozen=True)
class PaymentProof:
    invoice_id: str
    certificates: tuple[QuorumCertificate, ...]

    def to_json_dict(self) -> dict:
        return {
            "invoice_id": self.invoice_id,
            "certificates": [c.to_json_dict() for c in self.certificates],
        }


@dataclass
class _PaymentFlow:
    invoice: Invoice
    serials: list[bytes]
    transferred: dict[bytes, Asset]
    results: dict[bytes, Pending]
    pending: Pending
    expected: int = 0


class WalletEngine:
    def __init__(
        self,
        wallet_id: str,
        bank: IntermediaryBank,
        linked_account: str,
        clock: LogicalClock,
        rng: RngStream,
        mint_public_keys: dict[int, PublicKey],
        denominations: tuple[int, ...],
        cooldown_ticks: int,
        submit_spend: Callable[[SpendRequest], Pending],
        deliver_payment: Callable[[str, Invoice, list[Asset], list[QuorumCertificate]], None],
        merchant_key_hashes: dict[str, bytes],
        key_bits: int = 512,
    ):
        self.wallet_id = wallet_id
        self.bank = bank
        self.linked_account = linked_account
        self.clock = clock
        self.rng = rng
        self.mint_public_keys = dict(mint_public_keys)
        self.denominations = tuple(sorted(denominations, reverse=True))
        self.cooldown_ticks = cooldown_ticks
        self.key_bits = key_bits
        self._submit_spend = submit_spend
        self._deliver_payment = deliver_payment
        self.merchant_key_hashes = merchant_key_hashes
        self.holdings: dict[bytes, Holding] = {}
        self.pending_blinds: list[tuple[bytes, BlindingFactor, SigningKeyPair, int]] = []
        self.used_factors: list[int] = []  # uniqueness audit feed
        self.used_owner_keys: list[bytes] = []
        self.total_withdrawn = 0
        self.total_paid = 0

    # -- withdrawal (bank-mediated issuance) ---------------------------------

    def decompose(self, amount: int) -> list[int]:
        parts = []
        remaining = amount
        for denomination in self.denominations:
            while remaining >= denomination:
                parts.append(denomination)
                remaining -= denomination
        if remaining:
            raise CannotMakeAmount(
                f"denominations {self.denominations} cannot decompose {amount}"
            )
        return parts

    def withdraw(self, amount: int) -> list[Asset]:
        if amount <= 0:
            raise InvalidAmount("withdrawal amount must be positive")
        parts = self.decompose(amount)
        self.pending_blinds = []
        blinded_batch = []
        for denomination in parts:
            serial = self.rng.random_bytes(32)
            owner_key = generate_keypair(self.key_bits, self.rng)
            mint_pk = self.mint_public_keys[denomination]
            factor = make_blinding_factor(mint_pk, self.rng)
            commitment = genesis_commitment(serial, owner_key.public.fingerprint())
            blinded_batch.append((denomination, blind(commitment, factor, mint_pk)))
            self.pending_blinds.append((serial, factor, owner_key, denomination))

        signatures = self.bank.process_withdrawal(
            self.linked_account, amount, blinded_batch
        )

        issued: list[tuple[Asset, SigningKeyPair, BlindingFactor]] = []
        failed = False
        for (serial, factor, owner_key, denomination), signature in zip(
            self.pending_blinds, signatures
        ):
            mint_pk = self.mint_public_keys[denomination]
            unblinded = unblind(signature, factor, mint_pk)
            commitment = genesis_commitment(serial, owner_key.public.fingerprint())
            if not verify_blind_signature(commitment, unblinded, mint_pk):
                failed = True
                break
            asset = Asset(
                serial=serial,
                denomination=denomination,
                genesis_owner_hash=owner_key.public.fingerprint(),
                genesis_signature=unblinded,
                history=(),
                issue_tick=self.clock.now,
            )
            issued.append((asset, owner_key, factor))

        if failed:
            counts: dict[int, int] = {}
            for denomination in parts:
                counts[denomination] = counts.get(denomination, 0) + 1
            self.bank.refund_withdrawal(self.linked_account, amount, counts)
            self.pending_blinds = []
            raise VerificationFailed(
                "a mint signature failed verification; withdrawal rolled back"
            )

        for asset, owner_key, factor in issued:
            self.holdings[asset.serial] = Holding(asset, owner_key)
            self.used_factors.append(factor.value)
            self.used_owner_keys.append(owner_key.public.fingerprint())
        self.pending_blinds = []
        self.total_withdrawn += amount
        return [asset for asset, _, _ in issued]

    # -- payment (spend flow) -------------------------------------------------

    def _spendable_assets(self) -> list[Asset]:
        return [h.asset for h in self.holdings.values() if h.state == SPENDABLE]

    def pay(self, invoice: Invoice, on_result=None) -> Pending:
        pending = Pending()
        if on_result is not None:
            pending.on_done(on_result)
        try:
            selected = self._select_for_invoice(invoice)
        except DomainError as err:
            pending.fail(err)
            return pending

        merchant_hash = self.merchant_key_hashes[invoice.merchant_id]
        ref = (invoice.merchant_id, invoice.invoice_id)
        flow = _PaymentFlow(
            invoice=invoice,
            serials=[],
            transferred={},
            results={},
            pending=pending,
            expected=len(selected),
        )
        for asset in selected:
            holding = self.holdings[asset.serial]
            holding.state = IN_FLIGHT
            flow.serials.append(asset.serial)
            flow.transferred[asset.serial] = append_transfer(
                asset, merchant_hash, ref, holding.owner_key
            )
        for serial in flow.serials:
            request = SpendRequest(flow.transferred[serial], ref)
            result = self._submit_spend(request)
            flow.results[serial] = result
            result.on_done(lambda _done, f=flow: self._on_spend_result(f))
        return pending

    def pay_sync(self, invoice: Invoice) -> PaymentProof:
        return self.pay(invoice).result()

    def _select_for_invoice(self, invoice: Invoice) -> list[Asset]:
        if self.clock.now >= invoice.expiry_tick:
            raise InvoiceExpired(f"invoice {invoice.invoice_id} expired")
        try:
            return select_tokens(
                self._spendable_assets(),
                invoice.amount,
                self.clock.now,
                self.cooldown_ticks,
            )
        except CannotMakeAmount:
            # If ignoring the cooldown would have worked, the money is merely hot.
            uncooled = select_tokens(
                self._spendable_assets(), invoice.amount, self.clock.now, 0
            )
            retry = max(a.issue_tick for a in uncooled) + self.cooldown_ticks
            raise HotAsset("selected funds are still cooling down", retry_tick=retry)

    def _on_spend_result(self, flow: _PaymentFlow) -> None:
        if flow.pending.done or len(flow.results) < flow.expected:
            return
        if not all(r.done for r in flow.results.values()):
            return
        errors = [r.error for r in flow.results.values() if r.error is not None]
        if not errors:
            assets, certificates = [], []
            for serial in flow.serials:
                assets.append(flow.transferred[serial])
                certificates.append(flow.results[serial].value)
                del self.holdings[serial]
            try:
                self._deliver_payment(
                    flow.invoice.merchant_id, flow.invoice, assets, certificates
                )
            except DomainError as err:
                # The spends are committed; value parks here, unusable.
                for serial, asset in zip(flow.serials, assets):
                    self.holdings[serial] = Holding(asset, None, DEAD)
                flow.pending.fail(err)
                return
            self.total_paid += flow.invoice.amount
            flow.pending.resolve(
                PaymentProof(flow.invoice.invoice_id, tuple(certificates))
            )
            return
        for serial in flow.serials:
            if flow.results[serial].error is not None:
                self.holdings[serial].state = SPENDABLE
            else:
                # Committed on-ledger but the payment failed as a whole.
                self.holdings[serial] = Holding(flow.transferred[serial], None, DEAD)
        timeouts = [e for e in errors if isinstance(e, QuorumTimeout)]
        flow.pending.fail(timeouts[0] if timeouts else errors[0])

    # -- balance and persistence ----------------------------------------------

    def balance(self) -> dict:
        total = spendable = hot = 0
        per_denomination: dict[int, int] = {}
        for holding in self.holdings.values():
            value = holding.asset.denomination
            total += value
            per_denomination[value] = per_denomination.get(value, 0) + 1
            if holding.state == SPENDABLE and is_cooled(
                holding.asset, self.clock.now, self.cooldown_ticks
            ):
                spendable += value
            else:
                hot += value
        return {
            "total": total,
            "spendable": spendable,
            "hot": hot,
            "per_denomination": {str(d): per_denomination[d] for d in sorted(per_denomination)},
        }

    def holdings_value(self) -> int:
        return sum(h.asset.denomination for h in self.holdings.values())

    def state_dict(self) -> dict:
        return {
            "schema": SCHEMA_TAG,
            "linked_account": self.linked_account,
            "rng_stream": self.rng.name,
            "holdings": [
                {
                    "asset": h.asset.to_json_dict(),
                    "owner_key": h.owner_key.to_json_dict() if h.owner_key else None,
                    "state": h.state,
                }
                for _, h in sorted(self.holdings.items())
            ],
        }

    def persist(self, path) -> None:
        payload = canonical_json(self.state_dict())
        tmp = f"{path}.tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(payload)
        os.replace(tmp, path)

    @staticmethod
    def load_state(path) -> dict:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as err:
            raise CorruptFile(f"wallet state unreadable: {err}") from None
        if not isinstance(data, dict) or data.get("schema") != SCHEMA_TAG:
            raise CorruptFile("wallet state missing schema tag " + SCHEMA_TAG)
        try:
            for item in data["holdings"]:
                Asset.from_json_dict(item["asset"])
                if item["owner_key"] is not None:
                    SigningKeyPair.from_json_dict(item["owner_key"])
                if item["state"] not in (SPENDABLE, IN_FLIGHT, DEAD):
                    raise KeyError(item["state"])
            data["linked_account"], data["rng_stream"]
        except (KeyError, TypeError, ValueError) as err:
            raise CorruptFile(f"wallet state malformed: {err}") from None
        return data

    def restore(self, path) -> None:
        data = self.load_state(path)
        self.holdings = {}
        for item in data["holdings"]:
            asset = Asset.from_json_dict(item["asset"])
            key = (
                SigningKeyPair.from_json_dict(item["owner_key"])
                if item["owner_key"]
                else None
            )
            self.holdings[asset.serial] = Holding(asset, key, item["state"])
        self.linked_account = data["linked_account"]
