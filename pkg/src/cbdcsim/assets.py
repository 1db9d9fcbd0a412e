"""Self-verifying digital cash tokens.

An asset carries everything needed to prove its own legitimacy: the mint's
blind signature over its genesis commitment plus an append-only chain of
transfer records, each signed by the key that owned the asset at that hop.
Nobody has to keep per-token state to validate one.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .crypto import (
    DIGEST_SIZE,
    PublicKey,
    SigningKeyPair,
    canonical_json,
    hex_to_int,
    int_to_hex,
    sha256,
    sign,
    verify_blind_signature,
    verify_signature,
)
from .errors import CannotMakeAmount, InvalidAsset, WrongOwnerKey

DEFAULT_DENOMINATIONS = (50, 20, 10, 5, 1)

InvoiceRef = tuple[str, str]  # (merchant id, invoice id)


def _invoice_ref_bytes(invoice_ref: InvoiceRef | None) -> bytes:
    if invoice_ref is None:
        return b""
    return canonical_json([invoice_ref[0], invoice_ref[1]]).encode()


def genesis_commitment(serial: bytes, owner_key_hash: bytes) -> bytes:
    if len(serial) != DIGEST_SIZE:
        raise InvalidAsset(f"serial must be {DIGEST_SIZE} bytes")
    return sha256(serial, owner_key_hash)


def transfer_digest(
    serial: bytes, index: int, to_key_hash: bytes, invoice_ref: InvoiceRef | None
) -> bytes:
    return sha256(
        serial, index.to_bytes(8, "big"), to_key_hash, _invoice_ref_bytes(invoice_ref)
    )


def nullifier(serial: bytes, index: int) -> bytes:
    """Spend tag for one hop: H(serial || index as 8-byte big-endian)."""
    if index < 0:
        raise ValueError("transfer index must be non-negative")
    return sha256(serial, index.to_bytes(8, "big"))


@dataclass(frozen=True)
class TransferRecord:
    index: int
    from_public_key: PublicKey
    to_key_hash: bytes
    invoice_ref: InvoiceRef | None
    signature: int

    def to_json_dict(self) -> dict:
        return {
            "index": self.index,
            "from_public_key": self.from_public_key.to_json_dict(),
            "to_key_hash": self.to_key_hash.hex(),
            "invoice_ref": list(self.invoice_ref) if self.invoice_ref else None,
            "signature": int_to_hex(self.signature),
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "TransferRecord":
        ref = data.get("invoice_ref")
        return cls(
            index=int(data["index"]),
            from_public_key=PublicKey.from_json_dict(data["from_public_key"]),
            to_key_hash=bytes.fromhex(data["to_key_hash"]),
            invoice_ref=(ref[0], ref[1]) if ref else None,
            signature=hex_to_int(data["signature"]),
        )


@dataclass(frozen=True)
class Asset:
    serial: bytes
    denomination: int
    genesis_owner_hash: bytes
    genesis_signature: int
    history: tuple[TransferRecord, ...]
    issue_tick: int

    def current_owner_hash(self) -> bytes:
        if self.history:
            return self.history[-1].to_key_hash
        return self.genesis_owner_hash

    def spend_nullifier(self) -> bytes:
        """Nullifier consumed by the most recent transfer."""
        if not self.history:
            raise InvalidAsset("asset has no transfers to nullify")
        return nullifier(self.serial, self.history[-1].index)

    def to_json_dict(self) -> dict:
        return {
            "serial": self.serial.hex(),
            "denomination": self.denomination,
            "genesis_owner_hash": self.genesis_owner_hash.hex(),
            "genesis_signature": int_to_hex(self.genesis_signature),
            "history": [record.to_json_dict() for record in self.history],
            "issue_tick": self.issue_tick,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "Asset":
        return cls(
            serial=bytes.fromhex(data["serial"]),
            denomination=int(data["denomination"]),
            genesis_owner_hash=bytes.fromhex(data["genesis_owner_hash"]),
            genesis_signature=hex_to_int(data["genesis_signature"]),
            history=tuple(
                TransferRecord.from_json_dict(record) for record in data["history"]
            ),
            issue_tick=int(data["issue_tick"]),
        )

    def canonical(self) -> str:
        return canonical_json(self.to_json_dict())


@dataclass(frozen=True)
class VerificationReport:
    valid: bool
    first_failure: str | None = None


def verify_asset(asset: Asset, mint_public_keys: dict[int, PublicKey]) -> VerificationReport:
    """Check an asset using only its own contents plus the mint keys.

    Failure labels, in check order: structure, genesis-signature, index-gap,
    chain-linkage, record-signature.
    """
    if len(asset.serial) != DIGEST_SIZE or asset.denomination <= 0:
        return VerificationReport(False, "structure")
    mint_key = mint_public_keys.get(asset.denomination)
    if mint_key is None:
        return VerificationReport(False, "structure")

    commitment = genesis_commitment(asset.serial, asset.genesis_owner_hash)
    if not verify_blind_signature(commitment, asset.genesis_signature, mint_key):
        return VerificationReport(False, "genesis-signature")

    owner_hash = asset.genesis_owner_hash
    for position, record in enumerate(asset.history):
        if record.index != position:
            return VerificationReport(False, "index-gap")
        if record.from_public_key.fingerprint() != owner_hash:
            return VerificationReport(False, "chain-linkage")
        digest = transfer_digest(
            asset.serial, record.index, record.to_key_hash, record.invoice_ref
        )
        if not verify_signature(digest, record.signature, record.from_public_key):
            return VerificationReport(False, "record-signature")
        owner_hash = record.to_key_hash
    return VerificationReport(True)


def append_transfer(
    asset: Asset,
    to_key_hash: bytes,
    invoice_ref: InvoiceRef | None,
    owner_key: SigningKeyPair,
) -> Asset:
    """Extend the history by one hop. Returns a new asset; input unchanged."""
    if owner_key.public.fingerprint() != asset.current_owner_hash():
        raise WrongOwnerKey("signing key does not match the asset's current owner")
    index = len(asset.history)
    digest = transfer_digest(asset.serial, index, to_key_hash, invoice_ref)
    record = TransferRecord(
        index=index,
        from_public_key=owner_key.public,
        to_key_hash=to_key_hash,
        invoice_ref=invoice_ref,
        signature=sign(digest, owner_key),
    )
    return replace(asset, history=asset.history + (record,))


def is_cooled(asset: Asset, current_tick: int, cooldown_ticks: int) -> bool:
    return current_tick >= asset.issue_tick + cooldown_ticks


def select_tokens(
    holdings: list[Asset],
    amount: int,
    current_tick: int,
    cooldown_ticks: int = 0,
) -> list[Asset]:
    """Pick cooled-down assets whose denominations sum exactly to `amount`.

    Greedy largest-first with backtracking, over holdings sorted by
    denomination descending then serial, so the choice is deterministic.
    """
    if amount <= 0:
        raise CannotMakeAmount("amount must be positive")
    spendable = [a for a in holdings if is_cooled(a, current_tick, cooldown_ticks)]
    spendable.sort(key=lambda a: (-a.denomination, a.serial))

    chosen: list[Asset] = []

    def search(start: int, remaining: int) -> bool:
        if remaining == 0:
            return True
        for i in range(start, len(spendable)):
            asset = spendable[i]
            if asset.denomination > remaining:
                continue
            chosen.append(asset)
            if search(i + 1, remaining - asset.denomination):
                return True
            chosen.pop()
        return False

    if not search(0, amount):
        raise CannotMakeAmount(
            f"no exact combination of spendable tokens makes {amount}"
        )
    return list(chosen)
