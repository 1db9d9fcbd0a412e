"""Deterministic sandbox for token-based digital cash.

Blind-signature issuance through a two-tier banking structure,
self-verifying assets, a permissioned spend ledger that records recipients
but never payers, and a non-custodial wallet engine, all wired together by
a reproducible discrete-event harness.
"""

from .assets import Asset, TransferRecord, VerificationReport, select_tokens, verify_asset
from .crypto import (
    BlindingFactor,
    PublicKey,
    SigningKeyPair,
    blind,
    blind_sign,
    generate_keypair,
    unblind,
    verify_blind_signature,
)
from .errors import DomainError
from .ledger import LedgerNode, LogicalClock, QuorumCertificate, SpendRequest, Validator
from .merchant import Invoice, MerchantTill
from .mint import MintAuthority
from .sim import Harness, RunReport, ScenarioConfig, run_scenario
from .wallet import PaymentProof, WalletEngine

__version__ = "0.1.0"

__all__ = [
    "Asset",
    "BlindingFactor",
    "DomainError",
    "Harness",
    "Invoice",
    "LedgerNode",
    "LogicalClock",
    "MerchantTill",
    "MintAuthority",
    "PaymentProof",
    "PublicKey",
    "QuorumCertificate",
    "RunReport",
    "ScenarioConfig",
    "SigningKeyPair",
    "SpendRequest",
    "TransferRecord",
    "Validator",
    "VerificationReport",
    "WalletEngine",
    "blind",
    "blind_sign",
    "generate_keypair",
    "run_scenario",
    "select_tokens",
    "unblind",
    "verify_asset",
    "verify_blind_signature",
    "__version__",
]
