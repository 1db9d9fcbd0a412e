"""Domain errors shared by every actor.

Each error carries a stable `code` string; the gateway surfaces these codes
verbatim in HTTP error bodies and the harness tallies them in run reports.
"""

from __future__ import annotations


class DomainError(Exception):
    code = "DomainError"

    def __init__(self, message: str = "", **details):
        super().__init__(message or self.code)
        self.message = message or self.code
        self.details = details

    def to_body(self) -> dict:
        body = {"error_code": self.code, "message": self.message}
        body.update(self.details)
        return body


class UnsupportedBitSize(DomainError):
    code = "UnsupportedBitSize"


class NotCoprime(DomainError):
    code = "NotCoprime"


class OutOfRange(DomainError):
    code = "OutOfRange"


class WrongOwnerKey(DomainError):
    code = "WrongOwnerKey"


class InvalidAsset(DomainError):
    code = "InvalidAsset"


class CannotMakeAmount(DomainError):
    code = "CannotMakeAmount"


class AlreadySpent(DomainError):
    code = "AlreadySpent"


class HotAsset(DomainError):
    code = "HotAsset"


class QuorumTimeout(DomainError):
    code = "QuorumTimeout"


class UnknownBank(DomainError):
    code = "UnknownBank"


class DuplicateBank(DomainError):
    code = "DuplicateBank"


class UnknownDenomination(DomainError):
    code = "UnknownDenomination"


class UnknownAccount(DomainError):
    code = "UnknownAccount"


class InsufficientFunds(DomainError):
    code = "InsufficientFunds"


class AmountMismatch(DomainError):
    code = "AmountMismatch"


class InvalidAmount(DomainError):
    code = "InvalidAmount"


class WrongRecipient(DomainError):
    code = "WrongRecipient"


class MissingLegalIdentity(DomainError):
    code = "MissingLegalIdentity"


class VerificationFailed(DomainError):
    code = "VerificationFailed"


class InvoiceExpired(DomainError):
    code = "InvoiceExpired"


class Expired(DomainError):
    code = "Expired"


class WrongInvoice(DomainError):
    code = "WrongInvoice"


class BadCertificate(DomainError):
    code = "BadCertificate"


class CorruptFile(DomainError):
    code = "CorruptFile"


class ConfigInvalid(DomainError):
    code = "ConfigInvalid"
