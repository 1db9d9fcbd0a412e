"""Tier-two bank.

Keeps customer fiat accounts, orchestrates withdrawals (debit the account,
relay the blinded batch to the mint, hand signatures back), and takes
merchant deposits with an anti-money-laundering log row per credit. The
bank sees who withdrew and how much, never which tokens: serials, owner
hashes, and unblinded signatures stay out of its state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .assets import Asset
from .crypto import SigningKeyPair, generate_keypair
from .errors import (
    AmountMismatch,
    InsufficientFunds,
    MissingLegalIdentity,
    UnknownAccount,
    WrongRecipient,
)
from .ledger import LogicalClock
from .mint import MintAuthority
from .rng import RngStream

CONSUMER = "consumer"
MERCHANT = "merchant"


@dataclass
class Account:
    account_id: str
    holder_kind: str
    balance: int
    aml_record: str
    merchant_id: str = ""


@dataclass(frozen=True)
class AmlRow:
    merchant_identity: str
    account_id: str
    amount: int
    tick: int
    invoice_ids: tuple[str, ...]

    def to_json_dict(self) -> dict:
        return {
            "merchant_identity": self.merchant_identity,
            "account_id": self.account_id,
            "amount": self.amount,
            "tick": self.tick,
            "invoice_ids": list(self.invoice_ids),
        }


class IntermediaryBank:
    def __init__(
        self,
        bank_id: str,
        mint: MintAuthority,
        clock: LogicalClock,
        rng: RngStream,
        key_bits: int = 512,
    ):
        self.bank_id = bank_id
        self.mint = mint
        self.clock = clock
        # Receiving key for redemption transfers; its hash is public.
        self.receiving_key: SigningKeyPair = generate_keypair(key_bits, rng)
        self.accounts: dict[str, Account] = {}
        self.aml_log: list[AmlRow] = []
        self._account_counter = 0

    @property
    def receiving_key_hash(self) -> bytes:
        return self.receiving_key.public.fingerprint()

    def open_account(
        self,
        holder_kind: str,
        legal_identity: str,
        opening_balance: int,
        merchant_id: str = "",
    ) -> str:
        if opening_balance < 0:
            raise ValueError("opening balance cannot be negative")
        if holder_kind == MERCHANT and not legal_identity:
            raise MissingLegalIdentity("merchant accounts need a legal identity")
        self._account_counter += 1
        account_id = f"{self.bank_id}-acct-{self._account_counter:04d}"
        self.accounts[account_id] = Account(
            account_id, holder_kind, opening_balance, legal_identity, merchant_id
        )
        return account_id

    def balance(self, account_id: str) -> int:
        return self._account(account_id).balance

    def _account(self, account_id: str) -> Account:
        account = self.accounts.get(account_id)
        if account is None:
            raise UnknownAccount(f"no account {account_id!r}")
        return account

    def process_withdrawal(
        self, account_id: str, amount: int, blinded_batch: list[tuple[int, int]]
    ) -> list[int]:
        """Debit the account and relay the blinded batch to the mint.

        The batch items are (denomination, blinded commitment); the bank
        checks the denominations sum to the debited amount and otherwise
        treats the commitments as opaque.
        """
        account = self._account(account_id)
        batch_value = sum(denomination for denomination, _ in blinded_batch)
        if batch_value != amount:
            raise AmountMismatch(
                f"batch denominations sum to {batch_value}, amount is {amount}"
            )
        if amount > account.balance:
            raise InsufficientFunds(
                f"balance {account.balance} cannot cover withdrawal of {amount}"
            )
        account.balance -= amount
        try:
            signatures = self.mint.issue(self.bank_id, blinded_batch)
        except Exception:
            account.balance += amount
            raise
        return signatures

    def refund_withdrawal(
        self, account_id: str, amount: int, denomination_counts: dict[int, int]
    ) -> None:
        """Re-credit a withdrawal whose signatures failed wallet verification."""
        account = self._account(account_id)
        account.balance += amount
        self.mint.void_issue(self.bank_id, denomination_counts)

    def deposit_merchant(self, merchant_account_id: str, assets: list[Asset]) -> int:
        account = self._account(merchant_account_id)
        if account.holder_kind != MERCHANT or not account.aml_record:
            raise MissingLegalIdentity(
                "deposits require a merchant account with a legal identity"
            )
        invoice_ids = []
        for asset in assets:
            ref = asset.history[-1].invoice_ref if asset.history else None
            if ref is None or ref[0] != account.merchant_id:
                raise WrongRecipient(
                    "asset was not paid to the depositing merchant"
                )
            if asset.history[-1].to_key_hash != self.receiving_key_hash:
                raise WrongRecipient("final transfer does not target this bank")
            invoice_ids.append(ref[1])
        credited = self.mint.redeem(self.bank_id, assets)
        account.balance += credited
        self.aml_log.append(
            AmlRow(
                merchant_identity=account.aml_record,
                account_id=merchant_account_id,
                amount=credited,
                tick=self.clock.now,
                invoice_ids=tuple(invoice_ids),
            )
        )
        return credited

    def total_balances(self) -> int:
        return sum(account.balance for account in self.accounts.values())

    def write_aml_jsonl(self, path) -> None:
        from .crypto import canonical_json

        with open(path, "w", encoding="utf-8") as fh:
            for row in self.aml_log:
                fh.write(canonical_json(row.to_json_dict()) + "\n")
