"""Shared fixtures: catalog, temp store, scripted model backends."""

from __future__ import annotations

import time
from datetime import datetime, timezone

import pytest

from cyri.catalog import load_catalog
from cyri.gateway import CompletionResult, Gateway
from cyri.ingest import EmailRecord
from cyri.intel import Enricher, StubIntelClient
from cyri.pipeline import Pipeline
from cyri.store import Store, StoredEmailBundle

PHISHING_BODY = (
    "Dear Customer,\n\n"
    "We detected an unusual sign-in attempt on your account from a new device.\n"
    "Your account will be locked within 24 hours unless you confirm your identity.\n"
    "Confirm your identity now at http://account-verify-center.net/confirm to keep"
    " your account active.\n\n"
    "Account Security Team"
)

PHISHING_REPORT = """This email is Almost certainly phishing (95%)

- Detailed Explanation: This email pressures you with a deadline and pushes you to click a verification link. The sender is not in your contact list, which increases the risk.

- 'List of features found': [Urgency (Scarcity); Call to Action]

- 'Analysis': Urgency (Scarcity): 'Your account will be locked within 24 hours'. A hard deadline is used to rush your decision.
Call to Action: 'Confirm your identity now'. You are pushed to act through the attacker's link.

- Countermeasures:
- Do not click the link; open your account through the official site instead.
- Report this email as phishing to your provider.
"""

SAFE_REPORT = """This email is Almost certainly safe (95%)

- Detailed Explanation: This is a routine work update from a colleague you know. Nothing in it asks you for credentials or urges immediate action.

- 'List of features found': [clear language; relevant work context]

- 'Analysis':

- Countermeasures:
- No action needed.
"""

CONVERSATION_REPLY = (
    "The sender's address does not match the claimed organization, which is a"
    " strong warning sign. Do not click the link."
)


class ScriptedBackend:
    """Model backend double: answers via a prompt -> text function."""

    def __init__(self, responder=None, latency_ms: int = 1):
        self.responder = responder or (lambda prompt: PHISHING_REPORT)
        self.latency_ms = latency_ms
        self.calls: list[str] = []

    def complete(self, req):
        self.calls.append(req.prompt)
        text = self.responder(req.prompt)
        return CompletionResult(text=text, finished=True,
                                latency_ms=self.latency_ms)


def make_email(message_id: str = "<msg-1@example.com>",
               sender: str = "alerts@account-verify-center.net",
               subject: str = "Action required: unusual sign-in",
               body: str = PHISHING_BODY,
               in_contacts: bool = False,
               received_at: datetime | None = None) -> EmailRecord:
    return EmailRecord(
        message_id=message_id,
        sender_name="Account Security",
        sender_address=sender,
        subject=subject,
        body_text=body,
        body_html=None,
        received_at=received_at or datetime(2026, 1, 12, 9, 30,
                                            tzinfo=timezone.utc),
        sender_in_contacts=in_contacts,
        source="file",
    )


@pytest.fixture(scope="session")
def catalog():
    return load_catalog()


@pytest.fixture
def store(tmp_path):
    return Store(str(tmp_path / "data"))


@pytest.fixture
def scripted_backend():
    return ScriptedBackend()


@pytest.fixture
def gateway(scripted_backend):
    return Gateway(scripted_backend)


@pytest.fixture
def enricher():
    return Enricher(StubIntelClient(denylist=["account-verify-center.net"]))


@pytest.fixture
def pipeline(store, gateway, enricher, catalog):
    return Pipeline(store, gateway, enricher, catalog,
                    model_name="test-model")
