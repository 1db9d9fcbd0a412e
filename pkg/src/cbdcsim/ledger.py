"""Permissioned spend registry.

A single sequencer orders all entries into a hash-chained, append-only log
and keeps the nullifier set. Spend entries additionally need K-of-N
validator acknowledgements before they commit; issue batches and
redemptions are registered by banks/mint directly and append immediately.

Spend processing is a strict pipeline: one proposal is in flight at a time,
the rest queue FIFO. A proposal fixes the whole entry (including prev_hash)
up front so validators sign the final entry hash; if a direct append lands
while acks are being collected, the proposal notices the moved head when
its quorum completes and re-proposes on the new head within its original
timeout budget. Entries identify recipients only; there is no payer field
in the schema.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable

from .assets import Asset, InvoiceRef, nullifier, verify_asset
from .crypto import (
    DIGEST_SIZE,
    PublicKey,
    SigningKeyPair,
    ZERO_DIGEST,
    canonical_json,
    hex_to_int,
    int_to_hex,
    sha256,
    sign,
    verify_signature,
)
from .errors import (
    AlreadySpent,
    BadCertificate,
    DomainError,
    HotAsset,
    InvalidAsset,
    QuorumTimeout,
    UnknownBank,
)

KIND_ISSUE_BATCH = "IssueBatch"
KIND_SPEND = "Spend"
KIND_REDEMPTION = "Redemption"

DEFAULT_COOLDOWN_TICKS = 5
DEFAULT_ACK_TIMEOUT_TICKS = 10


class LogicalClock:
    """Monotonic tick counter shared by every actor in a run."""

    def __init__(self, start: int = 0):
        self._now = start

    @property
    def now(self) -> int:
        return self._now

    def tick(self) -> int:
        self._now += 1
        return self._now

    def current_tick(self) -> int:
        return self._now


class Pending:
    """Minimal completion handle for operations that may span ticks."""

    def __init__(self):
        self.done = False
        self.value = None
        self.error: DomainError | None = None
        self._callbacks: list[Callable[["Pending"], None]] = []

    def resolve(self, value) -> None:
        if self.done:
            return
        self.done = True
        self.value = value
        for cb in self._callbacks:
            cb(self)

    def fail(self, error: DomainError) -> None:
        if self.done:
            return
        self.done = True
        self.error = error
        for cb in self._callbacks:
            cb(self)

    def on_done(self, cb: Callable[["Pending"], None]) -> None:
        if self.done:
            cb(self)
        else:
            self._callbacks.append(cb)

    def result(self):
        if not self.done:
            raise RuntimeError("operation still pending; drive the harness")
        if self.error is not None:
            raise self.error
        return self.value


@dataclass(frozen=True)
class LedgerEntry:
    kind: str
    nullifier: bytes | None
    recipient_id: str
    amount: int
    tick: int
    prev_hash: bytes
    entry_hash: bytes = b""

    def hashable_dict(self) -> dict:
        return {
            "kind": self.kind,
            "nullifier": self.nullifier.hex() if self.nullifier else None,
            "recipient_id": self.recipient_id,
            "amount": self.amount,
            "tick": self.tick,
            "prev_hash": self.prev_hash.hex(),
        }

    def compute_hash(self) -> bytes:
        return sha256(canonical_json(self.hashable_dict()).encode())

    def sealed(self) -> "LedgerEntry":
        return LedgerEntry(
            self.kind,
            self.nullifier,
            self.recipient_id,
            self.amount,
            self.tick,
            self.prev_hash,
            self.compute_hash(),
        )

    def to_json_dict(self) -> dict:
        data = self.hashable_dict()
        data["entry_hash"] = self.entry_hash.hex()
        return data

    @classmethod
    def from_json_dict(cls, data: dict) -> "LedgerEntry":
        raw = data.get("nullifier")
        return cls(
            kind=data["kind"],
            nullifier=bytes.fromhex(raw) if raw else None,
            recipient_id=data["recipient_id"],
            amount=int(data["amount"]),
            tick=int(data["tick"]),
            prev_hash=bytes.fromhex(data["prev_hash"]),
            entry_hash=bytes.fromhex(data["entry_hash"]),
        )


@dataclass(frozen=True)
class QuorumCertificate:
    entry_hash: bytes
    acks: tuple[tuple[str, int], ...]  # (validator id, signature over entry_hash)

    def verify(self, validator_keys: dict[str, PublicKey], quorum: int) -> bool:
        seen = set()
        for validator_id, signature in self.acks:
            key = validator_keys.get(validator_id)
            if key is None or validator_id in seen:
                return False
            if not verify_signature(self.entry_hash, signature, key):
                return False
            seen.add(validator_id)
        return len(seen) >= quorum

    def to_json_dict(self) -> dict:
        return {
            "entry_hash": self.entry_hash.hex(),
            "acks": [[vid, int_to_hex(sig)] for vid, sig in self.acks],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "QuorumCertificate":
        return cls(
            entry_hash=bytes.fromhex(data["entry_hash"]),
            acks=tuple((vid, hex_to_int(sig)) for vid, sig in data["acks"]),
        )


@dataclass(frozen=True)
class SpendRequest:
    asset: Asset
    invoice_ref: InvoiceRef

    def to_json_dict(self) -> dict:
        return {
            "asset": self.asset.to_json_dict(),
            "invoice_ref": list(self.invoice_ref),
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "SpendRequest":
        ref = data["invoice_ref"]
        return cls(Asset.from_json_dict(data["asset"]), (ref[0], ref[1]))


class Validator:
    """Ledger replica that countersigns proposed spend entries."""

    def __init__(self, validator_id: str, keypair: SigningKeyPair):
        self.validator_id = validator_id
        self.keypair = keypair
        self.crashed = False

    @property
    def public_key(self) -> PublicKey:
        return self.keypair.public

    def handle_ack_request(self, entry_hashes: list[bytes]) -> list[int] | None:
        if self.crashed:
            return None
        return [sign(entry_hash, self.keypair) for entry_hash in entry_hashes]


@dataclass
class _SpendItem:
    request: SpendRequest
    pending: Pending
    submit_tick: int
    deadline_scheduled: bool = False


@dataclass
class _ActiveRound:
    items: list[_SpendItem]
    round_id: int
    entries: list[LedgerEntry]
    acks: dict[str, list[int]] = field(default_factory=dict)


class LedgerNode:
    """Sequencer plus validator set; the only writer of the log."""

    def __init__(
        self,
        validators: list[Validator],
        quorum: int,
        clock: LogicalClock | None = None,
        cooldown_ticks: int = DEFAULT_COOLDOWN_TICKS,
        ack_timeout_ticks: int = DEFAULT_ACK_TIMEOUT_TICKS,
        mint_public_keys: dict[int, PublicKey] | None = None,
        ack_channel: Callable[[str, int, list[LedgerEntry]], None] | None = None,
        scheduler: Callable[[int, Callable[[], None]], None] | None = None,
    ):
        if quorum > len(validators):
            raise ValueError("quorum cannot exceed the validator count")
        self.validators = {v.validator_id: v for v in validators}
        self.quorum = quorum
        self.clock = clock or LogicalClock()
        self.cooldown_ticks = cooldown_ticks
        self.ack_timeout_ticks = ack_timeout_ticks
        self.mint_public_keys = dict(mint_public_keys or {})
        self._ack_channel = ack_channel
        self._scheduler = scheduler
        self.entries: list[LedgerEntry] = []
        self._spent: dict[bytes, int] = {}
        self._banks: dict[str, bytes] = {}
        self._queue: deque[_SpendItem] = deque()
        self._active: _ActiveRound | None = None
        self._round_counter = 0

    # -- membership and read API -------------------------------------------

    def register_bank(self, bank_id: str, bank_key_hash: bytes) -> None:
        self._banks[bank_id] = bank_key_hash

    def validator_public_keys(self) -> dict[str, PublicKey]:
        return {vid: v.public_key for vid, v in self.validators.items()}

    def set_mint_keys(self, keys: dict[int, PublicKey]) -> None:
        self.mint_public_keys = dict(keys)

    def tick(self) -> int:
        return self.clock.tick()

    def current_tick(self) -> int:
        return self.clock.now

    def ledger_digest(self) -> bytes:
        if not self.entries:
            return ZERO_DIGEST
        return self.entries[-1].entry_hash

    def query_nullifier(self, value: bytes) -> tuple[str, int | None]:
        if value in self._spent:
            return ("Spent", self._spent[value])
        return ("Unspent", None)

    # -- direct appends (issue batches and redemptions) ---------------------

    def _append_entry(
        self, kind: str, null: bytes | None, recipient_id: str, amount: int
    ) -> LedgerEntry:
        entry = LedgerEntry(
            kind=kind,
            nullifier=null,
            recipient_id=recipient_id,
            amount=amount,
            tick=self.clock.now,
            prev_hash=self.ledger_digest(),
        ).sealed()
        self.entries.append(entry)
        if null is not None:
            self._spent[null] = entry.tick
        return entry

    def register_issue_batch(
        self, bank_id: str, denomination_counts: dict[int, int]
    ) -> bytes:
        if bank_id not in self._banks:
            raise UnknownBank(f"bank {bank_id!r} is not registered on the ledger")
        amount = sum(d * c for d, c in denomination_counts.items())
        return self._append_entry(KIND_ISSUE_BATCH, None, bank_id, amount).entry_hash

    def register_redemption(self, bank_id: str, assets: Iterable[Asset]) -> list[bytes]:
        if bank_id not in self._banks:
            raise UnknownBank(f"bank {bank_id!r} is not registered on the ledger")
        bank_key_hash = self._banks[bank_id]
        batch = list(assets)
        pending_nulls = self._active_nullifiers()
        for asset in batch:
            report = verify_asset(asset, self.mint_public_keys)
            if not report.valid:
                raise InvalidAsset(f"redeemed asset fails check {report.first_failure}")
            if not asset.history or asset.history[-1].to_key_hash != bank_key_hash:
                raise InvalidAsset("final transfer does not target the redeeming bank")
            null = asset.spend_nullifier()
            if null in self._spent or null in pending_nulls:
                raise AlreadySpent("redemption nullifier already recorded")
        hashes = []
        for asset in batch:
            entry = self._append_entry(
                KIND_REDEMPTION, asset.spend_nullifier(), bank_id, asset.denomination
            )
            hashes.append(entry.entry_hash)
        return hashes

    # -- spend pipeline ------------------------------------------------------

    def submit_spend(self, request: SpendRequest, on_result=None) -> Pending:
        pending = Pending()
        if on_result is not None:
            pending.on_done(on_result)
        try:
            self._validate_spend(request)
        except DomainError as err:
            pending.fail(err)
            return pending
        item = _SpendItem(
            request=request,
            pending=pending,
            submit_tick=self.clock.now,
        )
        self._queue.append(item)
        self._pump()
        return pending

    def submit_spend_sync(self, request: SpendRequest) -> QuorumCertificate:
        """Loopback-mode convenience: resolve the spend in one call."""
        return self.submit_spend(request).result()

    def _validate_spend(self, request: SpendRequest) -> None:
        asset = request.asset
        report = verify_asset(asset, self.mint_public_keys)
        if not report.valid:
            raise InvalidAsset(f"asset fails check {report.first_failure}")
        if not asset.history:
            raise InvalidAsset("spend request carries an untransferred asset")
        last = asset.history[-1]
        if last.invoice_ref != request.invoice_ref or not request.invoice_ref[0]:
            raise InvalidAsset("final transfer record does not match the invoice")
        if self.clock.now < asset.issue_tick + self.cooldown_ticks:
            raise HotAsset(
                "asset has not cooled down",
                retry_tick=asset.issue_tick + self.cooldown_ticks,
            )
        if asset.spend_nullifier() in self._spent:
            raise AlreadySpent("nullifier already recorded on the ledger")

    def _active_nullifiers(self) -> set[bytes]:
        if self._active is None:
            return set()
        return {entry.nullifier for entry in self._active.entries}

    def _pump(self) -> None:
        """Gather every queued spend into one chained proposal segment.

        Validators countersign the whole segment in a single round trip, so
        a multi-token payment costs one ack round, not one per token.
        """
        if self._active is not None or not self._queue:
            return
        batch: list[_SpendItem] = []
        batch_nulls: set[bytes] = set()
        while self._queue:
            item = self._queue.popleft()
            if item.pending.done:
                continue
            null = item.request.asset.spend_nullifier()
            if null in self._spent or null in batch_nulls:
                item.pending.fail(AlreadySpent("nullifier already recorded on the ledger"))
                continue
            batch.append(item)
            batch_nulls.add(null)
        if batch:
            self._start_round(batch)

    def _build_segment(self, items: list[_SpendItem]) -> list[LedgerEntry]:
        entries = []
        prev = self.ledger_digest()
        for item in items:
            entry = LedgerEntry(
                kind=KIND_SPEND,
                nullifier=item.request.asset.spend_nullifier(),
                recipient_id=item.request.invoice_ref[0],
                amount=item.request.asset.denomination,
                tick=self.clock.now,
                prev_hash=prev,
            ).sealed()
            entries.append(entry)
            prev = entry.entry_hash
        return entries

    def _start_round(self, items: list[_SpendItem]) -> None:
        self._round_counter += 1
        round_id = self._round_counter
        entries = self._build_segment(items)
        self._active = _ActiveRound(items=items, round_id=round_id, entries=entries)
        if self._scheduler is not None:
            # The timeout budget covers the ack round, not time spent queued
            # behind other proposals; re-proposals do not extend it.
            deadline = self.clock.now + self.ack_timeout_ticks
            for item in items:
                if not item.deadline_scheduled:
                    item.deadline_scheduled = True
                    self._scheduler(deadline, lambda i=item: self._on_deadline(i))
        entry_hashes = [entry.entry_hash for entry in entries]
        for validator_id in self.validators:
            if self._ack_channel is not None:
                self._ack_channel(validator_id, round_id, list(entries))
            else:
                signatures = self.validators[validator_id].handle_ack_request(entry_hashes)
                if signatures is not None:
                    self.on_ack_response(round_id, validator_id, signatures)
        if self._ack_channel is None:
            # Loopback: every reachable validator has answered by now.
            active = self._active
            if active is not None and active.round_id == round_id:
                for item in items:
                    self._on_deadline(item)

    def on_ack_response(
        self, round_id: int, validator_id: str, signatures: list[int]
    ) -> None:
        active = self._active
        if active is None or active.round_id != round_id:
            return
        if validator_id not in self.validators or len(signatures) != len(active.entries):
            return
        key = self.validators[validator_id].public_key
        for entry, signature in zip(active.entries, signatures):
            if not verify_signature(entry.entry_hash, signature, key):
                return
        active.acks[validator_id] = list(signatures)
        if len(active.acks) < self.quorum:
            return
        if active.entries[0].prev_hash != self.ledger_digest():
            # Head moved during the ack round; re-propose on the new head.
            items = [item for item in active.items if not item.pending.done]
            self._active = None
            if items:
                self._start_round(items)
            else:
                self._pump()
            return
        self._commit(active)

    def _commit(self, active: _ActiveRound) -> None:
        self._active = None
        for position, (item, entry) in enumerate(zip(active.items, active.entries)):
            self.entries.append(entry)
            self._spent[entry.nullifier] = entry.tick
            certificate = QuorumCertificate(
                entry_hash=entry.entry_hash,
                acks=tuple(
                    (validator_id, signatures[position])
                    for validator_id, signatures in active.acks.items()
                ),
            )
            item.pending.resolve(certificate)
        self._pump()

    def _on_deadline(self, item: _SpendItem) -> None:
        if item.pending.done:
            return
        item.pending.fail(
            QuorumTimeout(
                f"fewer than {self.quorum} acknowledgements within "
                f"{self.ack_timeout_ticks} ticks"
            )
        )
        if self._active is not None and item in self._active.items:
            self._active = None
        self._pump()

    # -- persistence and replay ---------------------------------------------

    def write_jsonl(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for entry in self.entries:
                fh.write(canonical_json(entry.to_json_dict()) + "\n")


def verify_certificate(
    certificate: QuorumCertificate,
    validator_keys: dict[str, PublicKey],
    quorum: int,
) -> None:
    if not certificate.verify(validator_keys, quorum):
        raise BadCertificate("quorum certificate does not verify")


def replay_jsonl(path) -> tuple[list[LedgerEntry], bytes]:
    """Rebuild a persisted log, re-verifying the whole hash chain."""
    import json as _json

    entries: list[LedgerEntry] = []
    prev = ZERO_DIGEST
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            entry = LedgerEntry.from_json_dict(_json.loads(line))
            if entry.prev_hash != prev:
                raise ValueError(f"broken chain link at line {line_no + 1}")
            if entry.compute_hash() != entry.entry_hash:
                raise ValueError(f"entry hash mismatch at line {line_no + 1}")
            if len(entry.entry_hash) != DIGEST_SIZE:
                raise ValueError(f"malformed entry hash at line {line_no + 1}")
            entries.append(entry)
            prev = entry.entry_hash
    return entries, prev if entries else ZERO_DIGEST
