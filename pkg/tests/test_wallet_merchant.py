"""Wallet withdraw/pay/balance/persist and merchant invoice/accept/deposit."""

import pytest

from cbdcsim import crypto
from cbdcsim.errors import (
    AmountMismatch,
    BadCertificate,
    CannotMakeAmount,
    CorruptFile,
    Expired,
    HotAsset,
    InvalidAmount,
    InvoiceExpired,
    VerificationFailed,
    WrongInvoice,
)
from cbdcsim.ledger import QuorumCertificate
from cbdcsim.merchant import Invoice
from cbdcsim.wallet import WalletEngine

from conftest import make_loopback_world


# -- withdraw ----------------------------------------------------------------------


def test_withdraw_builds_verifying_hot_assets(world):
    wallet = world.wallets["w0"]
    issued = wallet.withdraw(37)
    assert sorted(a.denomination for a in issued) == [1, 1, 5, 10, 20]
    balance = wallet.balance()
    assert balance == {
        "total": 37,
        "spendable": 0,
        "hot": 37,
        "per_denomination": {"1": 2, "5": 1, "10": 1, "20": 1},
    }
    from cbdcsim.assets import verify_asset

    for asset in issued:
        assert verify_asset(asset, wallet.mint_public_keys).valid


def test_withdraw_zero_rejected(world):
    with pytest.raises(InvalidAmount):
        world.wallets["w0"].withdraw(0)


def test_withdraw_fresh_material_never_reused(world):
    wallet = world.wallets["w0"]
    wallet.withdraw(23)
    wallet.withdraw(23)
    assert len(set(wallet.used_factors)) == len(wallet.used_factors)
    assert len(set(wallet.used_owner_keys)) == len(wallet.used_owner_keys)


def test_withdraw_rolls_back_on_corrupt_signature(world, monkeypatch):
    wallet = world.wallets["w0"]
    bank = world.banks["b0"]
    account = world.wallet_accounts["w0"]
    real_issue = world.mint.issue

    def corrupt_issue(bank_id, batch):
        signatures = real_issue(bank_id, batch)
        signatures[-1] += 1
        return signatures

    monkeypatch.setattr(world.mint, "issue", corrupt_issue)
    with pytest.raises(VerificationFailed):
        wallet.withdraw(37)
    assert bank.balance(account) == 100
    assert wallet.balance()["total"] == 0
    assert world.mint.stats()["outstanding_value"] == 0


# -- balance over time ----------------------------------------------------------------


def test_balance_cooldown_split(world):
    wallet = world.wallets["w0"]
    wallet.withdraw(37)
    assert wallet.balance()["hot"] == 37
    world.cool_off(5)
    balance = wallet.balance()
    assert balance["spendable"] == 37 and balance["hot"] == 0
    assert balance["spendable"] + balance["hot"] == balance["total"]


# -- pay --------------------------------------------------------------------------------


def test_pay_happy_path(world):
    wallet = world.wallets["w0"]
    till = world.tills["m0"]
    wallet.withdraw(37)
    world.cool_off(6)
    invoice = till.create_invoice(37)
    proof = wallet.pay_sync(invoice)
    assert proof.invoice_id == invoice.invoice_id
    assert len(proof.certificates) == 5
    assert wallet.balance()["total"] == 0
    assert till.unredeemed_value() == 37
    assert invoice.invoice_id in till.paid_invoices
    assert wallet.total_paid == 37


def test_pay_all_hot(world):
    wallet = world.wallets["w0"]
    wallet.withdraw(37)
    invoice = world.tills["m0"].create_invoice(37)
    with pytest.raises(HotAsset) as excinfo:
        wallet.pay_sync(invoice)
    assert excinfo.value.details["retry_tick"] == 5
    # No ledger entries were created by the failed attempt.
    assert all(e.kind != "Spend" for e in world.ledger.entries)


def test_pay_expired_invoice(world):
    wallet = world.wallets["w0"]
    wallet.withdraw(37)
    world.cool_off(6)
    invoice = Invoice("m0", "stale", 37, expiry_tick=world.clock.now)
    with pytest.raises(InvoiceExpired):
        wallet.pay_sync(invoice)
    assert all(e.kind != "Spend" for e in world.ledger.entries)


def test_pay_cannot_make_amount(world):
    wallet = world.wallets["w0"]
    wallet.withdraw(50)
    world.cool_off(6)
    invoice = world.tills["m0"].create_invoice(37)
    with pytest.raises(CannotMakeAmount):
        wallet.pay_sync(invoice)


def test_pay_exact_subset_spends_only_needed(world):
    wallet = world.wallets["w0"]
    wallet.withdraw(87)  # 50 20 10 5 1 1
    world.cool_off(6)
    invoice = world.tills["m0"].create_invoice(37)
    wallet.pay_sync(invoice)
    assert wallet.balance()["total"] == 50


# -- merchant till --------------------------------------------------------------------------


def test_invoice_fields_and_uniqueness(world):
    till = world.tills["m0"]
    a = till.create_invoice(37)
    b = till.create_invoice(37)
    assert a.amount == 37
    assert a.invoice_id != b.invoice_id
    assert a.expiry_tick == world.clock.now + 20
    with pytest.raises(InvalidAmount):
        till.create_invoice(0)


def test_accept_rejects_thin_certificate(world):
    wallet = world.wallets["w0"]
    till = world.tills["m0"]
    wallet.withdraw(10)
    world.cool_off(6)
    invoice = till.create_invoice(10)

    captured = {}
    original_accept = till.accept_payment

    def intercept(inv, assets, certificates):
        thin = [QuorumCertificate(c.entry_hash, c.acks[:1]) for c in certificates]
        captured["args"] = (inv, assets, thin)
        return original_accept(inv, assets, thin)

    till.accept_payment = intercept
    with pytest.raises(BadCertificate):
        wallet.pay_sync(invoice)
    till.accept_payment = original_accept
    assert invoice.invoice_id not in till.paid_invoices


def test_accept_rejects_wrong_invoice(world):
    till = world.tills["m0"]
    foreign = Invoice("m0", "not-mine", 10, expiry_tick=999)
    with pytest.raises(WrongInvoice):
        till.accept_payment(foreign, [], [])


def test_accept_rejects_amount_mismatch(world):
    wallet = world.wallets["w0"]
    till = world.tills["m0"]
    wallet.withdraw(11)
    world.cool_off(6)
    invoice = till.create_invoice(11)

    original_accept = till.accept_payment

    def drop_one(inv, assets, certificates):
        return original_accept(inv, assets[:-1], certificates[:-1])

    till.accept_payment = drop_one
    with pytest.raises(AmountMismatch):
        wallet.pay_sync(invoice)


def test_accept_rejects_double_payment_of_invoice(world):
    world2 = make_loopback_world(seed=19, balances=(100, 100))
    w0, w1 = world2.wallets["w0"], world2.wallets["w1"]
    till = world2.tills["m0"]
    w0.withdraw(10)
    w1.withdraw(10)
    world2.cool_off(6)
    invoice = till.create_invoice(10)
    w0.pay_sync(invoice)
    with pytest.raises(WrongInvoice):
        w1.pay_sync(invoice)


def test_accept_rejects_expired_at_arrival(world):
    till = world.tills["m0"]
    invoice = till.create_invoice(10)
    world.cool_off(25)
    with pytest.raises(Expired):
        till.accept_payment(invoice, [], [])


def test_empty_deposit_is_noop(world):
    till = world.tills["m0"]
    assert till.deposit(world.banks["b0"], world.merchant_accounts["m0"]) == 0


def test_merchant_revenue_matches_deposits(world):
    wallet = world.wallets["w0"]
    till = world.tills["m0"]
    wallet.withdraw(20)
    wallet.withdraw(30)
    world.cool_off(6)
    for amount in (20, 30):
        invoice = till.create_invoice(amount)
        wallet.pay_sync(invoice)
    credited = till.deposit(world.banks["b0"], world.merchant_accounts["m0"])
    assert credited == 50 == till.revenue()
    assert world.banks["b0"].balance(world.merchant_accounts["m0"]) == 50


# -- persistence ------------------------------------------------------------------------------


def test_persist_load_roundtrip(world, tmp_path):
    wallet = world.wallets["w0"]
    wallet.withdraw(37)
    path = tmp_path / "wallet.json"
    wallet.persist(path)
    loaded = WalletEngine.load_state(path)
    assert loaded == wallet.state_dict()
    # Restoring into an engine reproduces the same file byte for byte.
    wallet.restore(path)
    again = tmp_path / "again.json"
    wallet.persist(again)
    assert path.read_bytes() == again.read_bytes()


def test_persist_empty_wallet_roundtrip(world, tmp_path):
    wallet = world.wallets["w0"]
    path = tmp_path / "wallet.json"
    wallet.persist(path)
    assert WalletEngine.load_state(path) == wallet.state_dict()


def test_truncated_state_rejected(world, tmp_path):
    wallet = world.wallets["w0"]
    wallet.withdraw(37)
    path = tmp_path / "wallet.json"
    wallet.persist(path)
    data = path.read_bytes()
    path.write_bytes(data[: len(data) // 2])
    with pytest.raises(CorruptFile):
        WalletEngine.load_state(path)


def test_wrong_schema_rejected(world, tmp_path):
    path = tmp_path / "wallet.json"
    path.write_text('{"schema": "wallet/v0", "holdings": []}')
    with pytest.raises(CorruptFile):
        WalletEngine.load_state(path)
