"""Email ingestion: .eml parsing, contact list, directory watching.

Three channels feed the pipeline: single files, a watched maildir-style
directory, and HTTP payloads (handled in the API layer, which builds
EmailRecord values directly). Parsing is pure; the watcher is the only
stateful piece.
"""

from __future__ import annotations

import email
import email.policy
import hashlib
import html
import html.parser
import os
import re
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from email.message import EmailMessage
from email.utils import parseaddr, parsedate_to_datetime
from typing import Callable, Optional

from .errors import EmptyBody, MalformedMessage

_BLOCK_TAGS = {
    "p", "div", "br", "li", "ul", "ol", "tr", "table", "h1", "h2", "h3",
    "h4", "h5", "h6", "blockquote", "pre", "section", "article", "header",
    "footer", "hr",
}


class _TextExtractor(html.parser.HTMLParser):
    """Tag stripper: block elements become newlines, script/style dropped."""

    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.chunks: list[str] = []
        self._skip_depth = 0

    def handle_starttag(self, tag, attrs):
        if tag in ("script", "style"):
            self._skip_depth += 1
        elif tag in _BLOCK_TAGS:
            self.chunks.append("\n")

    def handle_endtag(self, tag):
        if tag in ("script", "style") and self._skip_depth:
            self._skip_depth -= 1
        elif tag in _BLOCK_TAGS:
            self.chunks.append("\n")

    def handle_data(self, data):
        if not self._skip_depth:
            self.chunks.append(data)


def html_to_text(markup: str) -> str:
    """Plain-text rendering of an HTML body. No CSS/JS evaluation."""
    extractor = _TextExtractor()
    try:
        extractor.feed(markup)
        extractor.close()
    except Exception:
        # Last resort for pathological markup: drop anything tag-shaped.
        return html.unescape(re.sub(r"<[^>]*>", " ", markup)).strip()
    text = "".join(extractor.chunks)
    text = re.sub(r"[ \t]+", " ", text)
    text = re.sub(r" ?\n ?", "\n", text)
    text = re.sub(r"\n{3,}", "\n\n", text)
    return text.strip()


def normalize_address(raw: str) -> str:
    return raw.strip().lower()


@dataclass(frozen=True)
class EmailRecord:
    """One ingested email, the unit everything downstream operates on."""

    message_id: str
    sender_name: str
    sender_address: str
    subject: str
    body_text: str
    body_html: Optional[str]
    received_at: datetime  # UTC, seconds precision
    sender_in_contacts: bool
    source: str  # file | directory_watch | http

    def __post_init__(self):
        if not self.message_id:
            raise ValueError("message_id must be non-empty")
        if self.sender_address.count("@") != 1:
            raise ValueError(f"sender_address {self.sender_address!r} needs exactly one '@'")
        if self.body_html is None and not self.body_text:
            raise ValueError("body_text required when body_html is absent")

    def to_dict(self) -> dict:
        return {
            "message_id": self.message_id,
            "sender_name": self.sender_name,
            "sender_address": self.sender_address,
            "subject": self.subject,
            "body_text": self.body_text,
            "body_html": self.body_html,
            "received_at": self.received_at.isoformat(),
            "sender_in_contacts": self.sender_in_contacts,
            "source": self.source,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EmailRecord":
        return cls(
            message_id=data["message_id"],
            sender_name=data.get("sender_name", ""),
            sender_address=data["sender_address"],
            subject=data.get("subject", ""),
            body_text=data.get("body_text", ""),
            body_html=data.get("body_html"),
            received_at=datetime.fromisoformat(data["received_at"]),
            sender_in_contacts=bool(data.get("sender_in_contacts", False)),
            source=data.get("source", "http"),
        )


class ContactList:
    """Set of trusted addresses, loaded from a newline-delimited file.

    Reloads automatically when the file's mtime changes. Addresses are
    normalized (lowercase, trimmed); blank lines and # comments skipped.
    """

    def __init__(self, path: Optional[str] = None):
        self._path = path
        self._mtime: Optional[float] = None
        self._addresses: frozenset[str] = frozenset()
        self._lock = threading.Lock()
        if path is not None:
            self._reload()

    @classmethod
    def from_addresses(cls, addresses) -> "ContactList":
        cl = cls(path=None)
        cl._addresses = frozenset(normalize_address(a) for a in addresses)
        return cl

    def _reload(self) -> None:
        try:
            with open(self._path, "r", encoding="utf-8") as fh:
                lines = fh.read().splitlines()
            self._mtime = os.path.getmtime(self._path)
        except OSError:
            self._addresses = frozenset()
            self._mtime = None
            return
        entries = set()
        for line in lines:
            line = line.strip()
            if line and not line.startswith("#"):
                entries.add(normalize_address(line))
        self._addresses = frozenset(entries)

    def _maybe_reload(self) -> None:
        if self._path is None:
            return
        try:
            mtime = os.path.getmtime(self._path)
        except OSError:
            mtime = None
        if mtime != self._mtime:
            with self._lock:
                self._reload()

    @property
    def addresses(self) -> frozenset[str]:
        self._maybe_reload()
        return self._addresses

    def __contains__(self, address: str) -> bool:
        return normalize_address(address) in self.addresses

    def __len__(self) -> int:
        return len(self.addresses)


def check_contacts(sender_address: str, contacts: ContactList) -> bool:
    """True iff the (normalized) address is in the contact list."""
    return sender_address in contacts


def _synthesize_message_id(raw: bytes) -> str:
    return "synth-" + hashlib.sha256(raw).hexdigest()[:16]


def _pick_bodies(msg: EmailMessage) -> tuple[str, Optional[str]]:
    """(body_text, body_html) with text/plain preferred for the text view."""
    text_part = msg.get_body(preferencelist=("plain",))
    html_part = msg.get_body(preferencelist=("html",))
    body_text = ""
    body_html = None
    if text_part is not None:
        body_text = text_part.get_content()
    if html_part is not None:
        body_html = html_part.get_content()
    if not body_text.strip() and body_html:
        body_text = html_to_text(body_html)
    return body_text, body_html


def parse_eml(raw: bytes, source: str = "file",
              contacts: Optional[ContactList] = None) -> EmailRecord:
    """Parse RFC-822/MIME bytes into an EmailRecord.

    Headers are decoded (including encoded-words), multipart bodies
    flattened. A missing Message-ID is synthesized from a content hash so
    the record still has a stable dedup key.
    """
    try:
        msg = email.message_from_bytes(raw, policy=email.policy.default)
    except Exception as exc:
        raise MalformedMessage(str(exc)) from exc
    if not msg.keys():
        raise MalformedMessage("no headers found")

    try:
        body_text, body_html = _pick_bodies(msg)
    except Exception as exc:
        raise MalformedMessage(f"undecodable body: {exc}") from exc
    if not body_text.strip() and not (body_html or "").strip():
        raise EmptyBody("message has no text or html part")

    sender_name, sender_address = parseaddr(str(msg.get("From", "")))
    sender_address = normalize_address(sender_address)
    if sender_address.count("@") != 1:
        raise MalformedMessage(f"unusable From address: {msg.get('From')!r}")

    message_id = (msg.get("Message-ID") or "").strip().strip("<>")
    if not message_id:
        message_id = _synthesize_message_id(raw)

    received_at = None
    date_header = msg.get("Date")
    if date_header:
        try:
            received_at = parsedate_to_datetime(date_header)
        except (TypeError, ValueError):
            received_at = None
    if received_at is None:
        received_at = datetime.now(timezone.utc)
    if received_at.tzinfo is None:
        received_at = received_at.replace(tzinfo=timezone.utc)
    received_at = received_at.astimezone(timezone.utc).replace(microsecond=0)

    in_contacts = check_contacts(sender_address, contacts) if contacts else False

    return EmailRecord(
        message_id=message_id,
        sender_name=sender_name,
        sender_address=sender_address,
        subject=str(msg.get("Subject", "")),
        body_text=body_text,
        body_html=body_html,
        received_at=received_at,
        sender_in_contacts=in_contacts,
        source=source,
    )


class DirectoryWatcher:
    """Polls a directory for new .eml files and hands records to a callback.

    Already-seen filenames are remembered for the lifetime of the watcher;
    files that fail to parse are reported through on_error and not retried.
    """

    def __init__(self, watch_dir: str, on_record: Callable[[EmailRecord], None],
                 contacts: Optional[ContactList] = None,
                 poll_interval_secs: float = 5.0,
                 on_error: Optional[Callable[[str, Exception], None]] = None):
        self.watch_dir = watch_dir
        self.poll_interval_secs = poll_interval_secs
        self._on_record = on_record
        self._on_error = on_error
        self._contacts = contacts
        self._seen: set[str] = set()
        self._stop = threading.Event()
        self._thread: Optional[threading.Thread] = None

    def scan_once(self) -> int:
        """One polling pass; returns how many new files were ingested."""
        try:
            names = sorted(os.listdir(self.watch_dir))
        except OSError:
            return 0
        count = 0
        for name in names:
            if not name.endswith(".eml") or name in self._seen:
                continue
            self._seen.add(name)
            path = os.path.join(self.watch_dir, name)
            try:
                with open(path, "rb") as fh:
                    record = parse_eml(fh.read(), source="directory_watch",
                                       contacts=self._contacts)
                self._on_record(record)
                count += 1
            except Exception as exc:
                if self._on_error:
                    self._on_error(path, exc)
        return count

    def _run(self) -> None:
        while not self._stop.is_set():
            self.scan_once()
            self._stop.wait(self.poll_interval_secs)

    def start(self) -> None:
        if self._thread is not None:
            return
        self._thread = threading.Thread(target=self._run, daemon=True,
                                        name="cyri-watcher")
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=5)
            self._thread = None
