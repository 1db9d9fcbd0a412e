"""Central issuing authority.

Holds one blind-signing key per denomination, serves registered banks only,
and tracks aggregate issuance and redemption counts. It signs blinded
genesis commitments without ever learning serials or owners, and at
redemption it counts value without storing per-token data: the transcript
holds blinded values only.
"""

from __future__ import annotations

from dataclasses import dataclass

from .assets import Asset, verify_asset
from .crypto import PublicKey, SigningKeyPair, blind_sign, generate_keypair
from .errors import (
    AlreadySpent,
    DuplicateBank,
    InvalidAsset,
    UnknownBank,
    UnknownDenomination,
)
from .ledger import LedgerNode, LogicalClock
from .rng import RngStream


@dataclass(frozen=True)
class TranscriptRow:
    bank_id: str
    denomination: int
    blinded_value: int
    tick: int


class MintAuthority:
    def __init__(
        self,
        denominations: tuple[int, ...],
        rng: RngStream,
        clock: LogicalClock,
        ledger: LedgerNode | None = None,
        key_bits: int = 512,
    ):
        self.clock = clock
        self.ledger = ledger
        self.denomination_keys: dict[int, SigningKeyPair] = {
            d: generate_keypair(key_bits, rng) for d in sorted(denominations)
        }
        self.registered_banks: dict[str, PublicKey] = {}
        self.issued_totals: dict[int, int] = {d: 0 for d in self.denomination_keys}
        self.redeemed_totals: dict[int, int] = {d: 0 for d in self.denomination_keys}
        self.transcript: list[TranscriptRow] = []

    def public_keys(self) -> dict[int, PublicKey]:
        return {d: k.public for d, k in self.denomination_keys.items()}

    def register_bank(self, bank_id: str, bank_public_key: PublicKey) -> None:
        if bank_id in self.registered_banks:
            raise DuplicateBank(f"bank {bank_id!r} already registered")
        self.registered_banks[bank_id] = bank_public_key

    def issue(self, bank_id: str, batch: list[tuple[int, int]]) -> list[int]:
        """Blind-sign a batch of (denomination, blinded commitment) items."""
        if bank_id not in self.registered_banks:
            raise UnknownBank(f"bank {bank_id!r} is not registered with the mint")
        for denomination, _ in batch:
            if denomination not in self.denomination_keys:
                raise UnknownDenomination(f"no signing key for denomination {denomination}")
        signatures = []
        counts: dict[int, int] = {}
        for denomination, blinded in batch:
            signatures.append(blind_sign(blinded, self.denomination_keys[denomination]))
            self.transcript.append(
                TranscriptRow(bank_id, denomination, blinded, self.clock.now)
            )
            counts[denomination] = counts.get(denomination, 0) + 1
        for denomination, count in counts.items():
            self.issued_totals[denomination] += count
        if self.ledger is not None:
            self.ledger.register_issue_batch(bank_id, counts)
        return signatures

    def void_issue(self, bank_id: str, denomination_counts: dict[int, int]) -> None:
        """Back out a batch a bank reported as failed before any asset existed."""
        if bank_id not in self.registered_banks:
            raise UnknownBank(f"bank {bank_id!r} is not registered with the mint")
        for denomination, count in denomination_counts.items():
            self.issued_totals[denomination] -= count

    def redeem(self, bank_id: str, assets: list[Asset]) -> int:
        if bank_id not in self.registered_banks:
            raise UnknownBank(f"bank {bank_id!r} is not registered with the mint")
        for asset in assets:
            report = verify_asset(asset, self.public_keys())
            if not report.valid:
                raise InvalidAsset(f"asset fails check {report.first_failure}")
        if self.ledger is not None:
            # Raises AlreadySpent on replay before any total changes.
            self.ledger.register_redemption(bank_id, assets)
        else:
            seen = set()
            for asset in assets:
                null = asset.spend_nullifier()
                if null in seen:
                    raise AlreadySpent("duplicate nullifier in redemption batch")
                seen.add(null)
        credited = 0
        for asset in assets:
            self.redeemed_totals[asset.denomination] += 1
            credited += asset.denomination
        return credited

    def stats(self) -> dict:
        outstanding = {
            d: self.issued_totals[d] - self.redeemed_totals[d]
            for d in self.denomination_keys
        }
        return {
            "issued_totals": dict(self.issued_totals),
            "redeemed_totals": dict(self.redeemed_totals),
            "outstanding": outstanding,
            "outstanding_value": sum(d * c for d, c in outstanding.items()),
        }
