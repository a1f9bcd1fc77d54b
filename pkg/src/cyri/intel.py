"""Threat-intel enrichment: URL extraction and link/domain reputation.

Two services are consulted: a link-safety service (Safe Browsing v4
threatMatches wire shape) for body links, and a domain-abuse service
(abuseConfidenceScore 0-100) for every distinct domain including the
sender's. Each service has three bindings: live HTTP, recorded replay,
and a static denylist stub, so tests and offline runs never touch the
network.

Outages degrade, never block: failed lookups yield "unchecked" findings
and a degraded flag, and the pipeline carries on.
"""

from __future__ import annotations

import html.parser
import json
import re
import threading
import time
from dataclasses import dataclass, field
from typing import Iterable, Optional
from urllib.parse import urlsplit

from .errors import ConfigMissing

SAFE_BROWSING_URL = "https://safebrowsing.googleapis.com/v4/threatMatches:find"
ABUSE_CHECK_URL = "https://api.abuseipdb.com/api/v2/check"
THREAT_TYPES = (
    "MALWARE",
    "SOCIAL_ENGINEERING",
    "UNWANTED_SOFTWARE",
    "POTENTIALLY_HARMFUL_APPLICATION",
)

#: Abuse confidence at or above this marks a domain finding as a threat.
ABUSE_THREAT_THRESHOLD = 50

_URL_RE = re.compile(r"https?://[^\s<>\"']+")
_TRAILING_PUNCT = ".,;:!?)]}’”"


@dataclass(frozen=True)
class Verdict:
    kind: str  # clean | threat | unchecked
    threat_types: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {"kind": self.kind, "threat_types": list(self.threat_types)}

    @classmethod
    def from_dict(cls, data: dict) -> "Verdict":
        return cls(data["kind"], tuple(data.get("threat_types", ())))


CLEAN = Verdict("clean")
UNCHECKED = Verdict("unchecked")


@dataclass(frozen=True)
class UrlFinding:
    url: str
    domain: str  # registrable host, lowercased, no scheme/path
    origin: str  # sender_domain | body_link
    verdict: Verdict
    abuse_confidence: Optional[int] = None

    def __post_init__(self):
        if self.abuse_confidence is not None and not 0 <= self.abuse_confidence <= 100:
            raise ValueError(f"abuse_confidence {self.abuse_confidence} outside 0-100")

    def to_dict(self) -> dict:
        return {
            "url": self.url,
            "domain": self.domain,
            "origin": self.origin,
            "verdict": self.verdict.to_dict(),
            "abuse_confidence": self.abuse_confidence,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "UrlFinding":
        return cls(
            url=data["url"],
            domain=data["domain"],
            origin=data["origin"],
            verdict=Verdict.from_dict(data["verdict"]),
            abuse_confidence=data.get("abuse_confidence"),
        )


@dataclass(frozen=True)
class ThreatIntelBundle:
    findings: tuple[UrlFinding, ...]
    safe_browsing_summary: str
    abuse_summary: str
    degraded: bool

    def to_dict(self) -> dict:
        return {
            "findings": [f.to_dict() for f in self.findings],
            "safe_browsing_summary": self.safe_browsing_summary,
            "abuse_summary": self.abuse_summary,
            "degraded": self.degraded,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ThreatIntelBundle":
        return cls(
            findings=tuple(UrlFinding.from_dict(f) for f in data.get("findings", ())),
            safe_browsing_summary=data["safe_browsing_summary"],
            abuse_summary=data["abuse_summary"],
            degraded=bool(data.get("degraded", False)),
        )


class _HrefCollector(html.parser.HTMLParser):
    def __init__(self) -> None:
        super().__init__()
        self.hrefs: list[str] = []

    def handle_starttag(self, tag, attrs):
        if tag == "a":
            for key, value in attrs:
                if key == "href" and value:
                    self.hrefs.append(value)


def _clean_url(url: str) -> str:
    return url.rstrip(_TRAILING_PUNCT)


def extract_urls(body_text: str, body_html: Optional[str] = None) -> list[str]:
    """All http/https URLs, text tokens first then HTML anchor hrefs.

    First-appearance order, duplicates removed.
    """
    seen: dict[str, None] = {}
    for match in _URL_RE.finditer(body_text or ""):
        seen.setdefault(_clean_url(match.group(0)))
    if body_html:
        collector = _HrefCollector()
        try:
            collector.feed(body_html)
            collector.close()
        except Exception:
            pass
        for href in collector.hrefs:
            if href.lower().startswith(("http://", "https://")):
                seen.setdefault(_clean_url(href))
    return list(seen)


def domain_of(url: str) -> str:
    """Full registrable host of a URL, lowercased; no public-suffix logic."""
    host = urlsplit(url).hostname
    return (host or "").lower()


class TTLCache:
    """Small synchronized TTL cache; clock injectable for tests."""

    def __init__(self, ttl_secs: float = 3600.0, clock=time.monotonic):
        self.ttl_secs = ttl_secs
        self._clock = clock
        self._lock = threading.Lock()
        self._entries: dict[str, tuple[float, object]] = {}

    def get(self, key: str):
        """(hit, value); expired entries count as misses and are dropped."""
        now = self._clock()
        with self._lock:
            entry = self._entries.get(key)
            if entry is None:
                return False, None
            stored_at, value = entry
            if now - stored_at >= self.ttl_secs:
                del self._entries[key]
                return False, None
            return True, value

    def put(self, key: str, value) -> None:
        with self._lock:
            self._entries[key] = (self._clock(), value)


class LiveIntelClient:
    """HTTP bindings for the two reputation services."""

    def __init__(self, sb_key: str, abuse_key: str,
                 sb_url: str = SAFE_BROWSING_URL,
                 abuse_url: str = ABUSE_CHECK_URL,
                 timeout_secs: float = 10.0):
        if not sb_key or not abuse_key:
            raise ConfigMissing("threat-intel API keys not configured")
        self._sb_key = sb_key
        self._abuse_key = abuse_key
        self._sb_url = sb_url
        self._abuse_url = abuse_url
        self._timeout = timeout_secs

    def check_urls(self, urls: list[str]) -> dict[str, list[str]]:
        import requests

        body = {
            "client": {"clientId": "cyri", "clientVersion": "0.1.0"},
            "threatInfo": {
                "threatTypes": list(THREAT_TYPES),
                "platformTypes": ["ANY_PLATFORM"],
                "threatEntryTypes": ["URL"],
                "threatEntries": [{"url": u} for u in urls],
            },
        }
        resp = requests.post(self._sb_url, params={"key": self._sb_key},
                             json=body, timeout=self._timeout)
        resp.raise_for_status()
        result: dict[str, list[str]] = {u: [] for u in urls}
        for match in resp.json().get("matches", []):
            url = match.get("threat", {}).get("url")
            threat_type = match.get("threatType")
            if url in result and threat_type and threat_type not in result[url]:
                result[url].append(threat_type)
        return result

    def check_domain(self, domain: str) -> int:
        import requests

        # The abuse service is queried per-domain, not per-IP; we do no
        # DNS resolution here.
        resp = requests.get(
            self._abuse_url,
            params={"domain": domain, "maxAgeInDays": 90},
            headers={"Key": self._abuse_key, "Accept": "application/json"},
            timeout=self._timeout,
        )
        resp.raise_for_status()
        return int(resp.json()["data"]["abuseConfidenceScore"])


class ReplayIntelClient:
    """Serves recorded responses from a JSON fixture.

    Fixture shape: {"safe_browsing": {url: [threat types]},
                    "abuse": {domain: confidence}}.
    A lookup with no recorded entry raises, which surfaces as a degraded
    (unchecked) finding.
    """

    def __init__(self, fixture_path: str):
        with open(fixture_path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        self._sb: dict[str, list[str]] = data.get("safe_browsing", {})
        self._abuse: dict[str, int] = data.get("abuse", {})

    def check_urls(self, urls: list[str]) -> dict[str, list[str]]:
        missing = [u for u in urls if u not in self._sb]
        if missing:
            raise KeyError(f"no recorded link-safety response for {missing}")
        return {u: list(self._sb[u]) for u in urls}

    def check_domain(self, domain: str) -> int:
        if domain not in self._abuse:
            raise KeyError(f"no recorded abuse response for {domain!r}")
        return int(self._abuse[domain])


class StubIntelClient:
    """Static denylist binding; counts requests so tests can assert caching."""

    def __init__(self, denylist: Iterable[str] = ()):
        self.denylist = {d.lower() for d in denylist}
        self.url_requests = 0
        self.domain_requests = 0

    def check_urls(self, urls: list[str]) -> dict[str, list[str]]:
        self.url_requests += 1
        return {
            u: (["SOCIAL_ENGINEERING"] if domain_of(u) in self.denylist else [])
            for u in urls
        }

    def check_domain(self, domain: str) -> int:
        self.domain_requests += 1
        return 100 if domain.lower() in self.denylist else 0


def make_client(mode: str, sb_key: str = "", abuse_key: str = "",
                replay_path: str = "", denylist: Iterable[str] = (),
                **live_kwargs):
    """Build the client binding named by mode: live | replay | stub."""
    if mode == "live":
        return LiveIntelClient(sb_key, abuse_key, **live_kwargs)
    if mode == "replay":
        if not replay_path:
            raise ConfigMissing("replay mode needs a fixture path")
        return ReplayIntelClient(replay_path)
    if mode == "stub":
        return StubIntelClient(denylist)
    raise ConfigMissing(f"unknown threat-intel mode {mode!r}")


def _origin_phrase(origin: str) -> str:
    return "the sender's domain" if origin == "sender_domain" else "a link present in the email"


def _drop_final_period(text: str) -> str:
    # The prompt template puts its own "." after each summary slot.
    return text[:-1] if text.endswith(".") else text


def render_safe_browsing_summary(findings: tuple[UrlFinding, ...]) -> str:
    """Deterministic text for the link-safety slot of the analysis prompt."""
    links = [f for f in findings if f.origin == "body_link"]
    if not links:
        return "No links found in the email body; no threats found"
    flagged = [f for f in links if f.verdict.kind == "threat"]
    unchecked = [f for f in links if f.verdict.kind == "unchecked"]
    lines = []
    if flagged:
        for f in flagged:
            lines.append(
                f"{f.url} is flagged as {', '.join(f.verdict.threat_types)}"
                " (link present in the email)."
            )
    else:
        lines.append(f"Checked {len(links)} link(s); no threats found.")
    if unchecked:
        lines.append(
            f"{len(unchecked)} link(s) could not be checked (service unavailable)."
        )
    return _drop_final_period("\n".join(lines))


def render_abuse_summary(findings: tuple[UrlFinding, ...]) -> str:
    """Deterministic text for the domain-abuse slot; one line per domain."""
    lines = []
    seen: set[str] = set()
    for f in findings:
        if f.domain in seen:
            continue
        seen.add(f.domain)
        where = _origin_phrase(f.origin)
        if f.abuse_confidence is None:
            lines.append(f"{f.domain} ({where}): could not be checked (service unavailable).")
        elif f.abuse_confidence >= ABUSE_THREAT_THRESHOLD:
            lines.append(
                f"{f.domain} ({where}): flagged as malicious with abuse"
                f" confidence score {f.abuse_confidence}/100."
            )
        else:
            lines.append(
                f"{f.domain} ({where}): no threats found"
                f" (abuse confidence score {f.abuse_confidence})."
            )
    if not lines:
        return "No domains to check"
    return _drop_final_period("\n".join(lines))


class Enricher:
    """Runs lookups through a client binding with a shared TTL cache."""

    def __init__(self, client, cache_ttl_secs: float = 3600.0, clock=time.monotonic):
        self._client = client
        self._cache = TTLCache(ttl_secs=cache_ttl_secs, clock=clock)

    def _url_verdicts(self, urls: list[str]) -> tuple[dict[str, Verdict], bool]:
        verdicts: dict[str, Verdict] = {}
        pending = []
        for url in urls:
            hit, value = self._cache.get("sb:" + url)
            if hit:
                verdicts[url] = value
            else:
                pending.append(url)
        degraded = False
        if pending:
            try:
                results = self._client.check_urls(pending)
            except Exception:
                degraded = True
                results = None
            if results is None:
                for url in pending:
                    verdicts[url] = UNCHECKED
            else:
                for url in pending:
                    types = results.get(url, [])
                    verdict = Verdict("threat", tuple(types)) if types else CLEAN
                    self._cache.put("sb:" + url, verdict)
                    verdicts[url] = verdict
        return verdicts, degraded

    def _abuse_score(self, domain: str) -> tuple[Optional[int], bool]:
        hit, value = self._cache.get("abuse:" + domain)
        if hit:
            return value, False
        try:
            score = int(self._client.check_domain(domain))
        except Exception:
            return None, True
        self._cache.put("abuse:" + domain, score)
        return score, False

    def lookup_links(self, urls: list[str], sender_domain: str) -> ThreatIntelBundle:
        """Check body links and all distinct domains; sender finding first."""
        sender_domain = (sender_domain or "").lower()
        degraded = False

        verdicts, sb_degraded = self._url_verdicts(list(urls))
        degraded = degraded or sb_degraded

        scores: dict[str, Optional[int]] = {}
        ordered_domains = []
        if sender_domain:
            ordered_domains.append(sender_domain)
        for url in urls:
            dom = domain_of(url)
            if dom and dom not in ordered_domains:
                ordered_domains.append(dom)
        for dom in ordered_domains:
            score, abuse_degraded = self._abuse_score(dom)
            scores[dom] = score
            degraded = degraded or abuse_degraded

        findings: list[UrlFinding] = []
        if sender_domain:
            score = scores.get(sender_domain)
            if score is None:
                verdict = UNCHECKED
            elif score >= ABUSE_THREAT_THRESHOLD:
                verdict = Verdict("threat", ("DOMAIN_ABUSE",))
            else:
                verdict = CLEAN
            findings.append(UrlFinding(
                url=sender_domain, domain=sender_domain,
                origin="sender_domain", verdict=verdict,
                abuse_confidence=score,
            ))
        for url in urls:
            dom = domain_of(url)
            findings.append(UrlFinding(
                url=url, domain=dom, origin="body_link",
                verdict=verdicts.get(url, UNCHECKED),
                abuse_confidence=scores.get(dom),
            ))

        bundle_findings = tuple(findings)
        return ThreatIntelBundle(
            findings=bundle_findings,
            safe_browsing_summary=render_safe_browsing_summary(bundle_findings),
            abuse_summary=render_abuse_summary(bundle_findings),
            degraded=degraded,
        )
