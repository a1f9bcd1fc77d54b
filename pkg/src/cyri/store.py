"""Durable local persistence: one JSON bundle per email.

Layout: <data_dir>/<email id>/bundle.json where the id is a hash of the
message_id (filesystem-safe, doubles as the public API id). Writes go
through write-temp-then-rename with an fsync, so a crash at any point
leaves either the previous or the new version, never a torn file.
Unreadable bundles are quarantined to bundle.json.bad and listing
continues. Unknown schema versions are refused, not migrated.

Everything stays under the one data directory; nothing is written
anywhere else.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from dataclasses import dataclass, field, replace
from datetime import date, tzinfo
from typing import Iterator, Optional

from .conversation import ConversationThread
from .errors import CorruptRecord, SchemaVersionError
from .ingest import EmailRecord
from .report_parser import AnalysisReport

SCHEMA_VERSION = 1

BUNDLE_NAME = "bundle.json"


def email_id(message_id: str) -> str:
    """Filesystem-safe public id for an email (hash of its message_id)."""
    return hashlib.sha256(message_id.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class StoredEmailBundle:
    email: EmailRecord
    analysis: Optional[AnalysisReport] = None
    analysis_prompt: Optional[str] = None  # rendered prompt, conversation context
    template_hashes: dict = field(default_factory=dict)
    excluded_features: tuple[str, ...] = ()
    thread: Optional[ConversationThread] = None
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        if self.thread is not None and self.analysis is None:
            raise ValueError("a thread requires an analysis")

    def with_analysis(self, analysis: AnalysisReport, analysis_prompt: str,
                      template_hashes: dict,
                      excluded_features: tuple[str, ...]) -> "StoredEmailBundle":
        return replace(
            self,
            analysis=analysis,
            analysis_prompt=analysis_prompt,
            template_hashes=dict(template_hashes),
            excluded_features=tuple(excluded_features),
        )

    def with_thread(self, thread: ConversationThread) -> "StoredEmailBundle":
        return replace(self, thread=thread)

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "email": self.email.to_dict(),
            "analysis": self.analysis.to_dict() if self.analysis else None,
            "analysis_prompt": self.analysis_prompt,
            "template_hashes": dict(self.template_hashes),
            "excluded_features": list(self.excluded_features),
            "thread": self.thread.to_dict() if self.thread else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "StoredEmailBundle":
        return cls(
            email=EmailRecord.from_dict(data["email"]),
            analysis=AnalysisReport.from_dict(data["analysis"]) if data.get("analysis") else None,
            analysis_prompt=data.get("analysis_prompt"),
            template_hashes=dict(data.get("template_hashes", {})),
            excluded_features=tuple(data.get("excluded_features", ())),
            thread=ConversationThread.from_dict(data["thread"]) if data.get("thread") else None,
            schema_version=int(data.get("schema_version", 0)),
        )


class Store:
    """Bundle storage with per-email write locks and atomic replace."""

    def __init__(self, data_dir: str, tz: Optional[tzinfo] = None):
        self.data_dir = data_dir
        self.tz = tz  # None: system local time
        os.makedirs(data_dir, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def _lock_for(self, eid: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(eid, threading.Lock())

    def _bundle_path(self, eid: str) -> str:
        return os.path.join(self.data_dir, eid, BUNDLE_NAME)

    def put(self, bundle: StoredEmailBundle) -> str:
        """Persist atomically; returns the email's public id."""
        eid = email_id(bundle.email.message_id)
        path = self._bundle_path(eid)
        payload = json.dumps(bundle.to_dict(), ensure_ascii=False, indent=2)
        with self._lock_for(eid):
            os.makedirs(os.path.dirname(path), exist_ok=True)
            tmp = path + f".tmp-{os.getpid()}-{threading.get_ident()}"
            try:
                with open(tmp, "w", encoding="utf-8") as fh:
                    fh.write(payload)
                    fh.flush()
                    os.fsync(fh.fileno())
                os.replace(tmp, path)
            finally:
                if os.path.exists(tmp):
                    os.unlink(tmp)
        return eid

    def _quarantine(self, path: str) -> None:
        try:
            os.replace(path, path + ".bad")
        except OSError:
            pass

    def _load(self, path: str) -> StoredEmailBundle:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except FileNotFoundError:
            raise
        except (OSError, ValueError) as exc:
            self._quarantine(path)
            raise CorruptRecord(f"{path}: {exc}") from exc
        version = data.get("schema_version")
        if version != SCHEMA_VERSION:
            # Refuse rather than guess: the file is intact, we just do not
            # understand it. No quarantine.
            raise SchemaVersionError(
                f"{path}: schema_version {version!r}, supported {SCHEMA_VERSION}"
            )
        try:
            return StoredEmailBundle.from_dict(data)
        except (KeyError, TypeError, ValueError) as exc:
            self._quarantine(path)
            raise CorruptRecord(f"{path}: {exc}") from exc

    def get(self, message_id: str) -> Optional[StoredEmailBundle]:
        return self.get_by_id(email_id(message_id))

    def get_by_id(self, eid: str) -> Optional[StoredEmailBundle]:
        path = self._bundle_path(eid)
        try:
            return self._load(path)
        except FileNotFoundError:
            return None

    def iter_bundles(self) -> Iterator[StoredEmailBundle]:
        """All readable bundles; corrupt or alien-schema ones are skipped."""
        try:
            entries = sorted(os.listdir(self.data_dir))
        except OSError:
            return
        for entry in entries:
            path = self._bundle_path(entry)
            if not os.path.isfile(path):
                continue
            try:
                yield self._load(path)
            except (CorruptRecord, SchemaVersionError):
                continue

    def list_by_date(self, day: date) -> list[StoredEmailBundle]:
        """Bundles received on the given civil date, newest first."""
        hits = []
        for bundle in self.iter_bundles():
            local = bundle.email.received_at.astimezone(self.tz)
            if local.date() == day:
                hits.append(bundle)
        hits.sort(key=lambda b: b.email.received_at, reverse=True)
        return hits
