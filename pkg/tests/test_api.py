"""HTTP API surface: routes, payloads, and the uniform error envelope."""

import socket

import pytest
from fastapi.testclient import TestClient

from cyri.api import check_bind, create_app
from cyri.conversation import ConversationManager
from cyri.errors import BadConfig, PortInUse
from cyri.gateway import Gateway
from cyri.ingest import ContactList
from cyri.store import email_id
from tests.conftest import (CONVERSATION_REPLY, PHISHING_BODY,
                            ScriptedBackend)

ERROR_KEYS = {"schema_version", "code", "stage", "message"}


@pytest.fixture
def client(store, pipeline, catalog):
    conv_backend = ScriptedBackend(lambda prompt: CONVERSATION_REPLY)
    conversation = ConversationManager(store, Gateway(conv_backend),
                                       model_name="test-model")
    contacts = ContactList.from_addresses(["priya@example.com"])
    app = create_app(store, pipeline, conversation, catalog, contacts)
    return TestClient(app)


def ingest(client, **overrides):
    payload = {
        "message_id": "<api-1@example.com>",
        "sender_address": "alerts@account-verify-center.net",
        "sender_name": "Account Security",
        "subject": "Action required",
        "body_text": PHISHING_BODY,
        "received_at": "2026-01-12T09:30:00+00:00",
    }
    payload.update(overrides)
    return client.post("/ingest", json=payload)


# ----------------------------------------------------------------- basics

def test_health(client):
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json() == {"schema_version": 1, "status": "ok"}


def test_catalog_endpoint(client, catalog):
    body = client.get("/catalog").json()
    assert body["schema_version"] == 1
    features = body["features"]
    assert len(features) == 21
    first = features[0]
    assert first["name"] == "Authority/Impersonation of Trusted Entities"
    assert first["weight"] == 0.6
    assert isinstance(first["aliases"], list)
    assert [f["name"] for f in features] == list(catalog.names())


# ----------------------------------------------------------------- ingest

def test_ingest_creates_then_detects_duplicate(client, store):
    first = ingest(client)
    assert first.status_code == 201
    body = first.json()
    assert body["created"] is True
    assert body["message_id"] == "<api-1@example.com>"
    assert body["id"] == email_id("<api-1@example.com>")
    assert store.get("<api-1@example.com>") is not None

    again = ingest(client)
    assert again.status_code == 200
    assert again.json()["created"] is False


def test_ingest_synthesizes_stable_id(client):
    first = ingest(client, message_id=None)
    assert first.status_code == 201
    mid = first.json()["message_id"]
    assert mid.startswith("synth-")
    assert len(mid) == len("synth-") + 16
    # Identical payload hashes to the same id: duplicate, not a new email.
    again = ingest(client, message_id=None)
    assert again.status_code == 200
    assert again.json()["message_id"] == mid


def test_ingest_rejects_bad_address(client):
    response = ingest(client, sender_address="not-an-address")
    assert response.status_code == 400
    body = response.json()
    assert set(body) == ERROR_KEYS
    assert body["code"] == "malformed_message"
    assert body["stage"] == "ingest"


def test_ingest_requires_some_body(client):
    response = ingest(client, body_text="", body_html=None)
    assert response.status_code == 400
    assert response.json()["code"] == "empty_body"


def test_ingest_rejects_unparseable_timestamp(client):
    response = ingest(client, received_at="the twelfth of January")
    assert response.status_code == 400
    assert response.json()["code"] == "malformed_message"


def test_ingest_normalizes_received_at_to_utc(client):
    response = ingest(client, received_at="2026-01-12T12:30:00+02:00")
    eid = response.json()["id"]
    email = client.get(f"/emails/{eid}").json()
    assert email["received_at"] == "2026-01-12T10:30:00+00:00"


def test_ingest_flags_contacts(client):
    response = ingest(client, sender_address="priya@example.com",
                      message_id="<from-priya@example.com>")
    eid = response.json()["id"]
    assert client.get(f"/emails/{eid}").json()["sender_in_contacts"] is True


# ---------------------------------------------------------------- listing

def test_list_emails_sorted_newest_first(client):
    ingest(client, message_id="<old@example.com>",
           received_at="2026-01-12T08:00:00+00:00")
    ingest(client, message_id="<new@example.com>",
           received_at="2026-01-12T15:00:00+00:00")
    body = client.get("/emails").json()
    assert body["schema_version"] == 1
    ids = [e["message_id"] for e in body["emails"]]
    assert ids == ["<new@example.com>", "<old@example.com>"]
    summary = body["emails"][0]
    assert summary["analyzed"] is False
    assert summary["verdict"] is None
    assert summary["id"] == email_id("<new@example.com>")


def test_list_emails_date_filter(client):
    ingest(client, message_id="<jan12@example.com>",
           received_at="2026-01-12T08:00:00+00:00")
    ingest(client, message_id="<jan13@example.com>",
           received_at="2026-01-13T08:00:00+00:00")
    emails = client.get("/emails", params={"date": "2026-01-12"}).json()["emails"]
    assert [e["message_id"] for e in emails] == ["<jan12@example.com>"]
    assert client.get("/emails", params={"date": "2026-01-14"}).json()["emails"] == []


def test_list_emails_bad_date(client):
    response = client.get("/emails", params={"date": "12/01/2026"})
    assert response.status_code == 400
    assert response.json()["code"] == "bad_config"


# ------------------------------------------------------------- single get

def test_get_email_by_public_id_and_message_id(client):
    eid = ingest(client).json()["id"]
    by_id = client.get(f"/emails/{eid}").json()
    assert by_id["body_text"] == PHISHING_BODY
    assert by_id["excluded_features"] == []
    by_mid = client.get("/emails/<api-1@example.com>").json()
    assert by_mid["id"] == eid


def test_get_email_not_found(client):
    response = client.get("/emails/ffffffffffffffff")
    assert response.status_code == 404
    body = response.json()
    assert body["code"] == "not_found"
    assert body["schema_version"] == 1


# ---------------------------------------------------------------- analyze

def test_analysis_404_before_analyze(client):
    eid = ingest(client).json()["id"]
    response = client.get(f"/emails/{eid}/analysis")
    assert response.status_code == 404
    assert "POST /analyze" in response.json()["message"]


def test_analyze_then_get_analysis(client):
    eid = ingest(client).json()["id"]
    response = client.post(f"/emails/{eid}/analyze", json={})
    assert response.status_code == 200
    body = response.json()
    assert body["cached"] is False
    assert body["analysis"]["verdict"]["label"] == "phishing"
    assert body["analysis"]["verdict"]["percentage"] == 95
    assert body["intensity"]["hue"] == "red"
    assert body["intensity"]["intensity"] == pytest.approx(0.97)

    fetched = client.get(f"/emails/{eid}/analysis").json()
    assert fetched["analysis"] == body["analysis"]
    assert fetched["id"] == eid

    listed = client.get("/emails").json()["emails"][0]
    assert listed["analyzed"] is True
    assert listed["verdict"]["percentage"] == 95


def test_analyze_twice_is_cached(client):
    eid = ingest(client).json()["id"]
    client.post(f"/emails/{eid}/analyze", json={})
    second = client.post(f"/emails/{eid}/analyze", json={}).json()
    assert second["cached"] is True


def test_reanalyze_forces_fresh_run(client, scripted_backend):
    eid = ingest(client).json()["id"]
    client.post(f"/emails/{eid}/analyze", json={})
    response = client.post(f"/emails/{eid}/reanalyze", json={})
    assert response.json()["cached"] is False
    assert len(scripted_backend.calls) == 2


def test_analyze_with_exclusions(client, scripted_backend):
    eid = ingest(client).json()["id"]
    response = client.post(f"/emails/{eid}/analyze",
                           json={"excluded_features": ["Reciprocation"]})
    assert response.status_code == 200
    assert response.json()["excluded_features"] == ["Reciprocation"]
    assert "Reciprocation" not in scripted_backend.calls[0]


def test_analyze_unknown_feature(client):
    eid = ingest(client).json()["id"]
    response = client.post(f"/emails/{eid}/analyze",
                           json={"excluded_features": ["Quantum Hacking"]})
    assert response.status_code == 400
    body = response.json()
    assert body["code"] == "unknown_feature"
    assert set(body) == ERROR_KEYS


def test_analyze_unknown_email(client):
    response = client.post("/emails/ffffffffffffffff/analyze", json={})
    assert response.status_code == 404


def test_analysis_reports_in_progress(client, pipeline, monkeypatch):
    eid = ingest(client).json()["id"]
    monkeypatch.setattr(pipeline, "is_inflight", lambda mid: True)
    response = client.get(f"/emails/{eid}/analysis")
    assert response.status_code == 202
    body = response.json()
    assert body["status"] == "in_progress"
    assert body["poll"] == f"/emails/{eid}/analysis"
    assert client.post(f"/emails/{eid}/analyze", json={}).status_code == 202


# ------------------------------------------------------------------ query

def test_query_requires_analysis(client):
    eid = ingest(client).json()["id"]
    response = client.post(f"/emails/{eid}/query", json={"text": "hi"})
    assert response.status_code == 409
    assert response.json()["code"] == "no_analysis"


def test_query_grows_thread(client):
    eid = ingest(client).json()["id"]
    client.post(f"/emails/{eid}/analyze", json={})

    first = client.post(f"/emails/{eid}/query",
                        json={"text": "What should I do?"})
    assert first.status_code == 200
    body = first.json()
    assert body["reply"] == CONVERSATION_REPLY
    assert [t["role"] for t in body["thread"]["turns"]] == ["user",
                                                            "assistant"]

    second = client.post(f"/emails/{eid}/query", json={"text": "Thanks"})
    assert len(second.json()["thread"]["turns"]) == 4

    thread = client.get(f"/emails/{eid}/thread").json()["thread"]
    assert len(thread["turns"]) == 4
    assert thread["turns"][0]["text"] == "What should I do?"


def test_thread_empty_before_any_query(client):
    eid = ingest(client).json()["id"]
    body = client.get(f"/emails/{eid}/thread").json()
    assert body["thread"]["turns"] == []


def test_query_blank_text_rejected(client):
    eid = ingest(client).json()["id"]
    client.post(f"/emails/{eid}/analyze", json={})
    response = client.post(f"/emails/{eid}/query", json={"text": "   "})
    assert response.status_code == 400
    assert response.json()["code"] == "context_invalid"


# ------------------------------------------------------------- bind check

def test_check_bind_loopback_ok():
    check_bind("127.0.0.1", 0)


def test_check_bind_rejects_nonlocal_by_default():
    with pytest.raises(BadConfig):
        check_bind("0.0.0.0", 0)


def test_check_bind_nonlocal_with_override():
    check_bind("0.0.0.0", 0, allow_nonlocal=True)


def test_check_bind_port_in_use():
    holder = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        holder.bind(("127.0.0.1", 0))
        holder.listen(1)
        port = holder.getsockname()[1]
        with pytest.raises(PortInUse):
            check_bind("127.0.0.1", port)
    finally:
        holder.close()
