"""Shared fixtures: toy keys and a fully wired loopback world.

The loopback world connects wallet, bank, mint, merchant, and ledger with
direct synchronous channels (no harness, no latency), which keeps unit
tests fast and lets spend results resolve within the calling frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import pytest

from cbdcsim.assets import DEFAULT_DENOMINATIONS
from cbdcsim.bank import CONSUMER, IntermediaryBank, MERCHANT
from cbdcsim.crypto import generate_keypair, keypair_from_primes
from cbdcsim.ledger import LedgerNode, LogicalClock, Validator
from cbdcsim.merchant import MerchantTill
from cbdcsim.mint import MintAuthority
from cbdcsim.rng import master_stream
from cbdcsim.wallet import WalletEngine

TOY_P, TOY_Q, TOY_E = 61, 53, 17  # n = 3233, d = 2753


@pytest.fixture
def toy_key():
    return keypair_from_primes(TOY_P, TOY_Q, TOY_E)


@pytest.fixture
def rng():
    return master_stream(1234).child("tests")


@dataclass
class LoopbackWorld:
    clock: LogicalClock
    mint: MintAuthority
    ledger: LedgerNode
    banks: dict
    tills: dict
    wallets: dict
    wallet_accounts: dict
    merchant_accounts: dict

    def cool_off(self, ticks):
        for _ in range(ticks):
            self.clock.tick()


def make_loopback_world(
    seed=7,
    balances=(100,),
    merchants=1,
    validators=3,
    quorum=2,
    cooldown_ticks=5,
    denominations=DEFAULT_DENOMINATIONS,
    key_bits=512,
):
    rng = master_stream(seed)
    clock = LogicalClock()
    validator_actors = [
        Validator(f"v{i}", generate_keypair(key_bits, rng.child(f"validator/v{i}")))
        for i in range(validators)
    ]
    ledger = LedgerNode(
        validators=validator_actors,
        quorum=quorum,
        clock=clock,
        cooldown_ticks=cooldown_ticks,
    )
    mint = MintAuthority(denominations, rng.child("mint"), clock, ledger, key_bits)
    ledger.set_mint_keys(mint.public_keys())

    bank = IntermediaryBank("b0", mint, clock, rng.child("bank/b0"), key_bits)
    mint.register_bank("b0", bank.receiving_key.public)
    ledger.register_bank("b0", bank.receiving_key_hash)

    tills, merchant_accounts = {}, {}
    for i in range(merchants):
        merchant_id = f"m{i}"
        till = MerchantTill(
            merchant_id,
            clock,
            rng.child(f"merchant/{merchant_id}"),
            ledger.validator_public_keys(),
            quorum,
            key_bits=key_bits,
        )
        account = bank.open_account(
            MERCHANT, f"registered trader {merchant_id}", 0, merchant_id=merchant_id
        )
        tills[merchant_id] = till
        merchant_accounts[merchant_id] = account

    merchant_hashes = {m: t.receiving_key_hash for m, t in tills.items()}

    def deliver(merchant_id, invoice, assets, certificates):
        tills[merchant_id].accept_payment(invoice, assets, certificates)

    wallets, wallet_accounts = {}, {}
    for i, balance in enumerate(balances):
        wallet_id = f"w{i}"
        account = bank.open_account(CONSUMER, f"holder {i}", balance)
        wallets[wallet_id] = WalletEngine(
            wallet_id=wallet_id,
            bank=bank,
            linked_account=account,
            clock=clock,
            rng=rng.child(f"wallet/{wallet_id}"),
            mint_public_keys=mint.public_keys(),
            denominations=denominations,
            cooldown_ticks=cooldown_ticks,
            submit_spend=lambda request: ledger.submit_spend(request),
            deliver_payment=deliver,
            merchant_key_hashes=merchant_hashes,
            key_bits=key_bits,
        )
        wallet_accounts[wallet_id] = account

    return LoopbackWorld(
        clock=clock,
        mint=mint,
        ledger=ledger,
        banks={"b0": bank},
        tills=tills,
        wallets=wallets,
        wallet_accounts=wallet_accounts,
        merchant_accounts=merchant_accounts,
    )


@pytest.fixture
def world():
    return make_loopback_world()
