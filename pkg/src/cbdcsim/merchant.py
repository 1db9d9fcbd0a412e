"""Merchant till: invoices, payment acceptance, bank deposits.

The till verifies what it is handed instead of trusting the payer: each
asset's final transfer must name this merchant and this invoice, and each
quorum certificate must carry enough valid validator signatures. Received
assets pile up as unredeemed holdings until deposited at the bank.
"""

from __future__ import annotations

from dataclasses import dataclass

from .assets import Asset, append_transfer
from .bank import IntermediaryBank
from .crypto import PublicKey, SigningKeyPair, generate_keypair
from .errors import (
    AmountMismatch,
    BadCertificate,
    Expired,
    InvalidAmount,
    InvalidAsset,
    WrongInvoice,
)
from .ledger import LogicalClock, QuorumCertificate
from .rng import RngStream

DEFAULT_INVOICE_EXPIRY_TICKS = 20


@dataclass(frozen=True)
class Invoice:
    merchant_id: str
    invoice_id: str
    amount: int
    expiry_tick: int

    def to_json_dict(self) -> dict:
        return {
            "merchant_id": self.merchant_id,
            "invoice_id": self.invoice_id,
            "amount": self.amount,
            "expiry_tick": self.expiry_tick,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "Invoice":
        return cls(
            merchant_id=data["merchant_id"],
            invoice_id=data["invoice_id"],
            amount=int(data["amount"]),
            expiry_tick=int(data["expiry_tick"]),
        )


class MerchantTill:
    def __init__(
        self,
        merchant_id: str,
        clock: LogicalClock,
        rng: RngStream,
        validator_keys: dict[str, PublicKey],
        quorum: int,
        invoice_expiry_ticks: int = DEFAULT_INVOICE_EXPIRY_TICKS,
        key_bits: int = 512,
    ):
        self.merchant_id = merchant_id
        self.clock = clock
        self.validator_keys = dict(validator_keys)
        self.quorum = quorum
        self.invoice_expiry_ticks = invoice_expiry_ticks
        # Merchants are identified recipients; one long-lived receiving key.
        self.receiving_key: SigningKeyPair = generate_keypair(key_bits, rng)
        self.invoices: dict[str, Invoice] = {}
        self.paid_invoices: dict[str, int] = {}
        self.holdings: list[Asset] = []
        self._invoice_counter = 0

    @property
    def receiving_key_hash(self) -> bytes:
        return self.receiving_key.public.fingerprint()

    def create_invoice(self, amount: int) -> Invoice:
        if amount <= 0:
            raise InvalidAmount("invoice amount must be positive")
        self._invoice_counter += 1
        invoice = Invoice(
            merchant_id=self.merchant_id,
            invoice_id=f"{self.merchant_id}-inv-{self._invoice_counter:04d}",
            amount=amount,
            expiry_tick=self.clock.now + self.invoice_expiry_ticks,
        )
        self.invoices[invoice.invoice_id] = invoice
        return invoice

    def latest_open_invoice(self) -> Invoice | None:
        for invoice_id in reversed(list(self.invoices)):
            if invoice_id not in self.paid_invoices:
                return self.invoices[invoice_id]
        return None

    def accept_payment(
        self,
        invoice: Invoice,
        assets: list[Asset],
        certificates: list[QuorumCertificate],
    ) -> None:
        known = self.invoices.get(invoice.invoice_id)
        if known is None or known != invoice:
            raise WrongInvoice("invoice was not issued by this till")
        if invoice.invoice_id in self.paid_invoices:
            raise WrongInvoice("invoice is already paid")
        if self.clock.now >= invoice.expiry_tick:
            raise Expired("invoice expired before payment arrived")
        if len(assets) != len(certificates):
            raise BadCertificate("one certificate per asset is required")
        for asset, certificate in zip(assets, certificates):
            last = asset.history[-1] if asset.history else None
            if last is None or last.to_key_hash != self.receiving_key_hash:
                raise InvalidAsset("asset was not transferred to this merchant")
            if last.invoice_ref != (self.merchant_id, invoice.invoice_id):
                raise WrongInvoice("transfer record names a different invoice")
            if not certificate.verify(self.validator_keys, self.quorum):
                raise BadCertificate("quorum certificate does not verify")
        total = sum(asset.denomination for asset in assets)
        if total != invoice.amount:
            raise AmountMismatch(
                f"assets sum to {total}, invoice asks for {invoice.amount}"
            )
        self.paid_invoices[invoice.invoice_id] = self.clock.now
        self.holdings.extend(assets)

    def unredeemed_value(self) -> int:
        return sum(asset.denomination for asset in self.holdings)

    def deposit(self, bank: IntermediaryBank, account_id: str) -> int:
        """Sign holdings over to the bank and clear them on credit."""
        if not self.holdings:
            return 0
        outgoing = []
        for asset in self.holdings:
            ref = asset.history[-1].invoice_ref
            outgoing.append(
                append_transfer(asset, bank.receiving_key_hash, ref, self.receiving_key)
            )
        credited = bank.deposit_merchant(account_id, outgoing)
        self.holdings.clear()
        return credited

    def revenue(self) -> int:
        total = 0
        for invoice_id in self.paid_invoices:
            total += self.invoices[invoice_id].amount
        return total
