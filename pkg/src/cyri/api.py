"""Local HTTP API: the seam between the pipeline and the UI.

All state lives in the store; handlers are thin adapters. Every success
response carries the bundle schema_version; errors render uniformly as
{code, stage, message}. The service binds to loopback unless explicitly
overridden in config.
"""

from __future__ import annotations

import hashlib
import json
import re
import socket
from datetime import datetime, timezone
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import errors as err
from .catalog import FeatureCatalog
from .conversation import ConversationManager
from .ingest import ContactList, EmailRecord, check_contacts, normalize_address
from .pipeline import Pipeline
from .store import SCHEMA_VERSION, Store, StoredEmailBundle, email_id

_STATUS_BY_ERROR = {
    err.MalformedMessage: 400,
    err.EmptyBody: 400,
    err.ContextInvalid: 400,
    err.UnknownFeature: 400,
    err.OutOfRange: 400,
    err.BadConfig: 400,
    err.NoAnalysis: 409,
    err.ConfigMissing: 503,
    err.GatewayError: 503,
    err.BackendUnreachable: 502,
    err.FixtureMissing: 502,
    err.TruncatedOutput: 502,
    err.Timeout: 504,
    err.ParseError: 502,
    err.CorruptRecord: 500,
    err.SchemaVersionError: 500,
}


def _snake(name: str) -> str:
    return re.sub(r"(?<!^)(?=[A-Z])", "_", name).lower()


def _error_body(exc: err.CyriError) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "code": _snake(type(exc).__name__),
        "stage": exc.stage,
        "message": str(exc),
    }


def _error_status(exc: err.CyriError) -> int:
    for klass in type(exc).__mro__:
        if klass in _STATUS_BY_ERROR:
            return _STATUS_BY_ERROR[klass]
    return 500


class IngestPayload(BaseModel):
    sender_address: str
    message_id: Optional[str] = None
    sender_name: str = ""
    subject: str = ""
    body_text: str = ""
    body_html: Optional[str] = None
    received_at: Optional[str] = None


class AnalyzePayload(BaseModel):
    excluded_features: list[str] = []


class QueryPayload(BaseModel):
    text: str


def _email_summary(bundle: StoredEmailBundle) -> dict:
    email = bundle.email
    verdict = bundle.analysis.verdict.to_dict() if bundle.analysis else None
    return {
        "id": email_id(email.message_id),
        "message_id": email.message_id,
        "sender_name": email.sender_name,
        "sender_address": email.sender_address,
        "subject": email.subject,
        "received_at": email.received_at.isoformat(),
        "sender_in_contacts": email.sender_in_contacts,
        "analyzed": bundle.analysis is not None,
        "verdict": verdict,
    }


def _synthesize_http_id(payload: IngestPayload) -> str:
    blob = json.dumps(payload.model_dump(), sort_keys=True, ensure_ascii=False)
    return "synth-" + hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def create_app(store: Store, pipeline: Pipeline,
               conversation: ConversationManager, catalog: FeatureCatalog,
               contacts: Optional[ContactList] = None) -> FastAPI:
    app = FastAPI(title="cyri", docs_url=None, redoc_url=None)

    @app.exception_handler(err.CyriError)
    async def _cyri_error(request: Request, exc: err.CyriError):
        return JSONResponse(status_code=_error_status(exc), content=_error_body(exc))

    def _resolve(eid: str) -> StoredEmailBundle:
        """Accept the public id or a raw message_id."""
        bundle = store.get_by_id(eid)
        if bundle is None:
            bundle = store.get(eid)
        if bundle is None:
            raise err.StoreError(f"no email {eid!r}")
        return bundle

    def _not_found(message: str) -> JSONResponse:
        return JSONResponse(status_code=404, content={
            "schema_version": SCHEMA_VERSION,
            "code": "not_found",
            "stage": "api",
            "message": message,
        })

    def _in_progress(eid: str) -> JSONResponse:
        return JSONResponse(status_code=202, content={
            "schema_version": SCHEMA_VERSION,
            "status": "in_progress",
            "poll": f"/emails/{eid}/analysis",
        })

    def _analysis_body(bundle: StoredEmailBundle) -> dict:
        report = bundle.analysis
        signal = pipeline.intensity(report)
        return {
            "schema_version": SCHEMA_VERSION,
            "id": email_id(bundle.email.message_id),
            "analysis": report.to_dict(),
            "intensity": {
                "hue": signal.hue,
                "intensity": signal.intensity,
                "percentage": signal.percentage,
                "feature_score": signal.feature_score,
            },
            "excluded_features": list(bundle.excluded_features),
        }

    @app.get("/health")
    def health():
        return {"schema_version": SCHEMA_VERSION, "status": "ok"}

    @app.get("/catalog")
    def get_catalog():
        return {
            "schema_version": SCHEMA_VERSION,
            "features": [
                {
                    "name": f.canonical_name,
                    "description": f.description,
                    "examples": list(f.examples),
                    "weight": f.weight,
                    "aliases": list(f.aliases),
                }
                for f in catalog.features
            ],
        }

    @app.post("/ingest")
    def ingest(payload: IngestPayload):
        address = normalize_address(payload.sender_address)
        if address.count("@") != 1:
            raise err.MalformedMessage(f"unusable sender address {payload.sender_address!r}")
        message_id = payload.message_id or _synthesize_http_id(payload)
        existing = store.get(message_id)
        if existing is not None:
            return JSONResponse(status_code=200, content={
                "schema_version": SCHEMA_VERSION,
                "id": email_id(message_id),
                "message_id": message_id,
                "created": False,
            })
        if payload.received_at:
            try:
                received = datetime.fromisoformat(payload.received_at)
            except ValueError as exc:
                raise err.MalformedMessage(f"bad received_at: {exc}") from exc
            if received.tzinfo is None:
                received = received.replace(tzinfo=timezone.utc)
            received = received.astimezone(timezone.utc).replace(microsecond=0)
        else:
            received = datetime.now(timezone.utc).replace(microsecond=0)
        if not payload.body_text and not payload.body_html:
            raise err.EmptyBody("body_text or body_html required")
        record = EmailRecord(
            message_id=message_id,
            sender_name=payload.sender_name,
            sender_address=address,
            subject=payload.subject,
            body_text=payload.body_text,
            body_html=payload.body_html,
            received_at=received,
            sender_in_contacts=bool(contacts and check_contacts(address, contacts)),
            source="http",
        )
        eid = store.put(StoredEmailBundle(email=record))
        return JSONResponse(status_code=201, content={
            "schema_version": SCHEMA_VERSION,
            "id": eid,
            "message_id": message_id,
            "created": True,
        })

    @app.get("/emails")
    def list_emails(date: Optional[str] = None):
        if date is not None:
            try:
                day = datetime.strptime(date, "%Y-%m-%d").date()
            except ValueError as exc:
                raise err.BadConfig(f"date must be YYYY-MM-DD: {date!r}") from exc
            bundles = store.list_by_date(day)
        else:
            bundles = sorted(store.iter_bundles(),
                             key=lambda b: b.email.received_at, reverse=True)
        return {
            "schema_version": SCHEMA_VERSION,
            "emails": [_email_summary(b) for b in bundles],
        }

    @app.get("/emails/{eid}")
    def get_email(eid: str):
        try:
            bundle = _resolve(eid)
        except err.StoreError:
            return _not_found(f"no email {eid!r}")
        body = _email_summary(bundle)
        body["body_text"] = bundle.email.body_text
        body["body_html"] = bundle.email.body_html
        body["schema_version"] = SCHEMA_VERSION
        body["excluded_features"] = list(bundle.excluded_features)
        return body

    @app.get("/emails/{eid}/analysis")
    def get_analysis(eid: str):
        try:
            bundle = _resolve(eid)
        except err.StoreError:
            return _not_found(f"no email {eid!r}")
        if pipeline.is_inflight(bundle.email.message_id):
            return _in_progress(email_id(bundle.email.message_id))
        if bundle.analysis is None:
            return _not_found("no analysis yet; POST /analyze first")
        return _analysis_body(bundle)

    def _run_analysis(eid: str, payload: AnalyzePayload, force: bool):
        try:
            bundle = _resolve(eid)
        except err.StoreError:
            return _not_found(f"no email {eid!r}")
        mid = bundle.email.message_id
        if pipeline.is_inflight(mid):
            return _in_progress(email_id(mid))
        report, cached = pipeline.analyze(
            mid, excluded_features=payload.excluded_features, force=force)
        body = _analysis_body(store.get(mid))
        body["cached"] = cached
        return body

    @app.post("/emails/{eid}/analyze")
    def analyze(eid: str, payload: AnalyzePayload = AnalyzePayload()):
        return _run_analysis(eid, payload, force=False)

    @app.post("/emails/{eid}/reanalyze")
    def reanalyze(eid: str, payload: AnalyzePayload = AnalyzePayload()):
        return _run_analysis(eid, payload, force=True)

    @app.post("/emails/{eid}/query")
    def query(eid: str, payload: QueryPayload):
        try:
            bundle = _resolve(eid)
        except err.StoreError:
            return _not_found(f"no email {eid!r}")
        reply = conversation.ask(bundle.email.message_id, payload.text)
        thread = conversation.get_thread(bundle.email.message_id)
        return {
            "schema_version": SCHEMA_VERSION,
            "reply": reply,
            "thread": thread.to_dict() if thread else None,
        }

    @app.get("/emails/{eid}/thread")
    def get_thread(eid: str):
        try:
            bundle = _resolve(eid)
        except err.StoreError:
            return _not_found(f"no email {eid!r}")
        thread = bundle.thread
        return {
            "schema_version": SCHEMA_VERSION,
            "thread": thread.to_dict() if thread else {
                "message_id": bundle.email.message_id, "turns": [],
            },
        }

    return app


LOOPBACK_HOSTS = ("127.0.0.1", "localhost", "::1")


def check_bind(host: str, port: int, allow_nonlocal: bool = False) -> None:
    """Refuse non-loopback binds without the override; probe the port."""
    if host not in LOOPBACK_HOSTS and not allow_nonlocal:
        raise err.BadConfig(
            f"refusing to bind {host!r}: set allow_nonlocal=true to expose the service"
        )
    family = socket.AF_INET6 if ":" in host else socket.AF_INET
    probe = socket.socket(family, socket.SOCK_STREAM)
    try:
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind((host, port))
    except OSError as exc:
        raise err.PortInUse(f"cannot bind {host}:{port}: {exc}") from exc
    finally:
        probe.close()
