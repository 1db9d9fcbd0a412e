"""HTTP facade over an interactive harness.

Thin by design: every endpoint calls the same harness actions a scripted
scenario would, then settles any pending work, so an endpoint sequence and
the equivalent script produce the same ledger. A lock funnels all domain
work onto the single-threaded harness; the gateway itself keeps no state.
"""

from __future__ import annotations

import threading

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .errors import DomainError
from .merchant import Invoice
from .sim import Harness


class AmountBody(BaseModel):
    amount: int


class PayBody(BaseModel):
    invoice: dict


class StepBody(BaseModel):
    ticks: int = 1


def create_app(harness: Harness) -> FastAPI:
    app = FastAPI(title="cbdc sandbox gateway")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    lock = threading.Lock()
    app.state.harness = harness

    @app.exception_handler(DomainError)
    async def domain_error_handler(_request, err: DomainError):
        return JSONResponse(status_code=400, content=err.to_body())

    def not_found(kind: str, name: str) -> JSONResponse:
        return JSONResponse(
            status_code=404,
            content={"error_code": f"Unknown{kind}", "message": f"no {kind.lower()} {name!r}"},
        )

    @app.get("/wallets/{wallet_id}/balance")
    def wallet_balance(wallet_id: str):
        with lock:
            wallet = harness.wallets.get(wallet_id)
            if wallet is None:
                return not_found("Wallet", wallet_id)
            return wallet.balance()

    @app.post("/wallets/{wallet_id}/withdraw")
    def wallet_withdraw(wallet_id: str, body: AmountBody):
        with lock:
            if wallet_id not in harness.wallets:
                return not_found("Wallet", wallet_id)
            issued = harness.do_withdraw(wallet_id, body.amount)
            return {
                "amount": sum(a.denomination for a in issued),
                "denominations": [a.denomination for a in issued],
                "balance": harness.wallets[wallet_id].balance(),
            }

    @app.post("/merchants/{merchant_id}/invoices")
    def merchant_invoice(merchant_id: str, body: AmountBody):
        with lock:
            if merchant_id not in harness.tills:
                return not_found("Merchant", merchant_id)
            invoice = harness.do_invoice(merchant_id, body.amount)
            return invoice.to_json_dict()

    @app.post("/wallets/{wallet_id}/pay")
    def wallet_pay(wallet_id: str, body: PayBody):
        with lock:
            if wallet_id not in harness.wallets:
                return not_found("Wallet", wallet_id)
            invoice = Invoice.from_json_dict(body.invoice)
            pending = harness.do_pay(wallet_id, invoice.merchant_id, invoice.invoice_id)
            harness.settle(pending)
            proof = pending.result()  # raises the DomainError on failure
            return {
                "proof": proof.to_json_dict(),
                "balance": harness.wallets[wallet_id].balance(),
            }

    @app.post("/merchants/{merchant_id}/deposit")
    def merchant_deposit(merchant_id: str):
        with lock:
            if merchant_id not in harness.tills:
                return not_found("Merchant", merchant_id)
            credited = harness.do_deposit(merchant_id)
            return {"credited": credited}

    @app.get("/ledger/head")
    def ledger_head():
        with lock:
            return {
                "digest": harness.ledger.ledger_digest().hex(),
                "tick": harness.clock.now,
                "entries": len(harness.ledger.entries),
            }

    @app.post("/sim/step")
    def sim_step(body: StepBody):
        with lock:
            if body.ticks < 1 or body.ticks > 10_000:
                return JSONResponse(
                    status_code=400,
                    content={
                        "error_code": "ConfigInvalid",
                        "message": "ticks must be between 1 and 10000",
                    },
                )
            return {"tick": harness.step(body.ticks)}

    @app.get("/mint/stats")
    def mint_stats():
        with lock:
            stats = harness.mint.stats()
            return {
                "issued_totals": {str(k): v for k, v in stats["issued_totals"].items()},
                "redeemed_totals": {str(k): v for k, v in stats["redeemed_totals"].items()},
                "outstanding": {str(k): v for k, v in stats["outstanding"].items()},
                "outstanding_value": stats["outstanding_value"],
            }

    return app
