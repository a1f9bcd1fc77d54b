"""Parses model analysis text into a typed report.

The model is instructed to emit a fixed shape: a verdict line, then the
sections "Detailed Explanation", "List of features found", "Analysis"
and "Countermeasures". Small local models drift in punctuation and
markdown, so parsing runs in a tolerant mode by default; strict mode
(tolerant=False) accepts only the instructed spellings. Tolerance only
ever adds fields relative to strict on the same input, never removes.

Repairs and anomalies (unknown features, unlocated spans, category
conflicts) are recorded in report.warnings instead of failing the parse.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Optional

from .catalog import UNKNOWN, FeatureCatalog
from .errors import NoVerdictLine, PercentOutOfRange
from .scoring import categorize, feature_score

SECTION_KEYS = ("explanation", "features", "analysis", "countermeasures")

_SECTION_NAMES = {
    "explanation": "Detailed Explanation",
    "features": "List of features found",
    "analysis": "Analysis",
    "countermeasures": "Countermeasures",
}

#: Decoration characters models wrap around headers: bullets, markdown,
#: quotes (straight and curly).
_DECOR = " \t-*#>_'\"‘’“”"

_VERDICT_RE = re.compile(
    r"This email is\s+(?P<words>[^()]*?)\s*\(\s*(?P<pct>\d{1,3}(?:\.\d+)?)\s*%\s*\)",
    re.IGNORECASE,
)

_QUOTE_PAIRS = (
    ("'", "'"),
    ('"', '"'),
    ("‘", "’"),
    ("“", "”"),
)

_WS_RE = re.compile(r"\s+")

_TRANSLATE_QUOTES = str.maketrans({
    "‘": "'", "’": "'", "“": '"', "”": '"',
})


@dataclass(frozen=True)
class Verdict:
    label: str  # phishing | safe
    percentage: int
    category: str

    def __post_init__(self):
        if self.label not in ("phishing", "safe"):
            raise ValueError(f"bad verdict label {self.label!r}")
        if self.category != categorize(self.percentage):
            raise ValueError(
                f"category {self.category!r} inconsistent with {self.percentage}%"
            )

    def to_dict(self) -> dict:
        return {"label": self.label, "percentage": self.percentage,
                "category": self.category}

    @classmethod
    def from_dict(cls, data: dict) -> "Verdict":
        return cls(data["label"], int(data["percentage"]), data["category"])


@dataclass(frozen=True)
class FeatureFinding:
    feature: str  # canonical catalog name
    quoted_span: str
    rationale: str
    span_location: Optional[tuple[int, int]]  # codepoint offsets into body_text
    match_quality: str  # exact | normalized | unlocated

    def to_dict(self) -> dict:
        return {
            "feature": self.feature,
            "quoted_span": self.quoted_span,
            "rationale": self.rationale,
            "span_location": list(self.span_location) if self.span_location else None,
            "match_quality": self.match_quality,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FeatureFinding":
        loc = data.get("span_location")
        return cls(
            feature=data["feature"],
            quoted_span=data.get("quoted_span", ""),
            rationale=data.get("rationale", ""),
            span_location=tuple(loc) if loc else None,
            match_quality=data.get("match_quality", "unlocated"),
        )


@dataclass(frozen=True)
class AnalysisReport:
    verdict: Verdict
    explanation: str
    features_found: tuple[str, ...]
    findings: tuple[FeatureFinding, ...]
    countermeasures: tuple[str, ...]
    feature_score: float
    raw_output: str
    warnings: tuple[str, ...]
    prompt_hash: str
    created_at: str  # ISO-8601 UTC

    def __post_init__(self):
        found = set(self.features_found)
        for finding in self.findings:
            if finding.feature not in found:
                raise ValueError(
                    f"finding for {finding.feature!r} not in features_found"
                )
        if self.verdict.label == "safe" and self.features_found:
            raise ValueError("safe report must not carry catalog features")

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "verdict": self.verdict.to_dict(),
            "explanation": self.explanation,
            "features_found": list(self.features_found),
            "findings": [f.to_dict() for f in self.findings],
            "countermeasures": list(self.countermeasures),
            "feature_score": self.feature_score,
            "raw_output": self.raw_output,
            "warnings": list(self.warnings),
            "prompt_hash": self.prompt_hash,
            "created_at": self.created_at,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AnalysisReport":
        return cls(
            verdict=Verdict.from_dict(data["verdict"]),
            explanation=data.get("explanation", ""),
            features_found=tuple(data.get("features_found", ())),
            findings=tuple(FeatureFinding.from_dict(f) for f in data.get("findings", ())),
            countermeasures=tuple(data.get("countermeasures", ())),
            feature_score=float(data.get("feature_score", 0.0)),
            raw_output=data.get("raw_output", ""),
            warnings=tuple(data.get("warnings", ())),
            prompt_hash=data.get("prompt_hash", ""),
            created_at=data.get("created_at", ""),
        )


def _normalize_for_match(text: str) -> tuple[str, list[int]]:
    """Collapse whitespace and unify quotes; keep a map to original offsets.

    Returns (normalized text, list mapping each normalized char to its
    original codepoint index).
    """
    out: list[str] = []
    index: list[int] = []
    pending_space = False
    for i, ch in enumerate(text):
        if ch.isspace():
            pending_space = bool(out)
            continue
        if pending_space:
            out.append(" ")
            # A collapsed space points at the first following solid char.
            index.append(i)
            pending_space = False
        out.append(ch.translate(_TRANSLATE_QUOTES))
        index.append(i)
    return "".join(out), index


def locate_span(quoted_span: str, body_text: str):
    """Find a quoted excerpt in the email body.

    Exact substring wins (first occurrence); otherwise a match unique
    after whitespace/quote normalization counts as normalized; anything
    else is unlocated. Offsets are codepoint indexes into body_text.
    """
    if not quoted_span:
        return None, "unlocated"
    pos = body_text.find(quoted_span)
    if pos >= 0:
        return (pos, pos + len(quoted_span)), "exact"

    norm_needle, _ = _normalize_for_match(quoted_span)
    norm_hay, index = _normalize_for_match(body_text)
    if not norm_needle:
        return None, "unlocated"
    hits = []
    start = 0
    while True:
        hit = norm_hay.find(norm_needle, start)
        if hit < 0:
            break
        hits.append(hit)
        start = hit + 1
    if len(hits) != 1:
        return None, "unlocated"
    hit = hits[0]
    first = index[hit]
    last = index[hit + len(norm_needle) - 1]
    return (first, last + 1), "normalized"


def _strip_decor(text: str) -> str:
    return text.strip(_DECOR + ":")


def _match_header(line: str, tolerant: bool):
    """(section_key, inline_remainder) when the line is a section header."""
    stripped = line.strip()
    for key, name in _SECTION_NAMES.items():
        if tolerant:
            lead = stripped.lstrip(_DECOR)
            if not lead.lower().startswith(name.lower()):
                continue
            rest = lead[len(name):]
        else:
            # Strict: optional "- " bullet, optional single quotes, exact case.
            lead = stripped
            if lead.startswith("- "):
                lead = lead[2:]
            if lead.startswith("'") :
                lead = lead[1:]
            if not lead.startswith(name):
                continue
            rest = lead[len(name):]
            if rest.startswith("'"):
                rest = rest[1:]
        # The name must be the whole head of the line: next comes only
        # decoration and an optional colon, else it is prose.
        boundary = rest.lstrip("'\"‘’“”*_ \t")
        if boundary and not boundary.startswith(":"):
            continue
        inline = boundary[1:].strip() if boundary.startswith(":") else ""
        return key, inline
    return None


def _split_sections(lines: list[str], tolerant: bool) -> dict[str, str]:
    sections: dict[str, list[str]] = {}
    current: Optional[str] = None
    for line in lines:
        header = _match_header(line, tolerant)
        if header is not None:
            key, inline = header
            current = key
            sections.setdefault(key, [])
            if inline:
                sections[key].append(inline)
            continue
        if current is not None:
            sections.setdefault(current, []).append(line)
    return {k: "\n".join(v).strip() for k, v in sections.items()}


def _parse_verdict_line(raw: str, tolerant: bool):
    """Scan the first 10 lines for the instructed verdict pattern."""
    for line in raw.splitlines()[:10]:
        match = _VERDICT_RE.search(line)
        if match is None:
            continue
        if not tolerant and "This email is" not in line:
            continue
        words = match.group("words").lower()
        if "phishing" in words:
            label = "phishing"
        elif "safe" in words:
            label = "safe"
        else:
            continue
        pct = int(round(float(match.group("pct"))))
        if pct > 100:
            raise PercentOutOfRange(f"{match.group('pct')}% outside 0-100")
        stated = None
        if "almost certainly" in words:
            stated = "almost_certainly"
        elif "unlikely" in words:
            stated = "unlikely"
        elif "possibly" in words:
            stated = "possibly"
        elif "likely" in words:
            stated = "likely"
        return label, pct, stated
    raise NoVerdictLine("no verdict pattern in the first 10 lines")


def _split_feature_items(section: str, tolerant: bool) -> list[str]:
    text = section.strip()
    if not text:
        return []
    bracket = re.search(r"\[(?P<inner>.*?)\]", text, re.DOTALL)
    if bracket:
        inner = bracket.group("inner")
        return [item.strip() for item in inner.split(";") if item.strip()]
    if not tolerant:
        return []
    if ";" in text:
        return [item.strip() for item in text.split(";") if item.strip()]
    items = []
    for line in text.splitlines():
        line = line.strip().lstrip("-*• \t").strip()
        if line:
            items.append(line)
    return items


_FINDING_RE = re.compile(
    r"^(?P<name>[^:\n]{1,120}?)\s*:\s*(?P<rest>.*)$"
)


def _extract_quote(text: str):
    """First quoted run in text -> (span, rationale_after) or None."""
    for opener, closer in _QUOTE_PAIRS:
        start = text.find(opener)
        if start < 0:
            continue
        end = text.find(closer, start + 1)
        if end < 0:
            continue
        span = text[start + 1:end]
        rationale = text[end + 1:].lstrip(" .").strip()
        return span, rationale
    return None


def _parse_findings(section: str, tolerant: bool) -> list[tuple[str, str, str]]:
    """(raw_name, quoted_span, rationale) triples from the Analysis section."""
    items: list[tuple[str, str, str]] = []
    for line in section.splitlines():
        stripped = line.strip().lstrip("-*• \t")
        stripped = stripped.replace("**", "") if tolerant else stripped
        match = _FINDING_RE.match(stripped)
        if match is None or not match.group("rest").strip():
            # Continuation prose extends the previous rationale.
            if items and stripped:
                name, span, rationale = items[-1]
                items[-1] = (name, span, (rationale + " " + stripped).strip())
            continue
        name = _strip_decor(match.group("name"))
        rest = match.group("rest").strip()
        quoted = _extract_quote(rest)
        if quoted is None:
            if not tolerant:
                continue
            items.append((name, "", rest))
        else:
            items.append((name, quoted[0], quoted[1]))
    return items


def _parse_countermeasures(section: str) -> list[str]:
    out = []
    for line in section.splitlines():
        line = line.strip().lstrip("-*• \t")
        line = re.sub(r"^\d+[.)]\s*", "", line).strip()
        if line:
            out.append(line)
    return out


def parse_report(raw: str, body_text: str, catalog: FeatureCatalog,
                 tolerant: bool = True, prompt_hash: str = "") -> AnalysisReport:
    """Parse raw model output into an AnalysisReport.

    Never raises on drift the tolerant rules can absorb; the only hard
    failures are a missing verdict line and an out-of-range percentage.
    """
    warnings: list[str] = []
    label, pct, stated = _parse_verdict_line(raw, tolerant)
    category = categorize(pct)
    if stated is not None and stated != category:
        warnings.append(
            f"category '{stated}' conflicts with {pct}%; using percentage"
        )
    verdict = Verdict(label=label, percentage=pct, category=category)

    sections = _split_sections(raw.splitlines(), tolerant)
    explanation = sections.get("explanation", "")

    features_found: list[str] = []
    for item in _split_feature_items(sections.get("features", ""), tolerant):
        name = catalog.normalize_name(item)
        if name == UNKNOWN:
            # Safe emails legitimately list safe characteristics here, so
            # non-catalog items are only suspicious on a phishing verdict.
            if label == "phishing":
                warnings.append(f"unknown feature ignored: {item}")
            continue
        if name not in features_found:
            features_found.append(name)
    if label == "safe" and features_found:
        warnings.append(
            "catalog features listed for a safe email were cleared: "
            + "; ".join(features_found)
        )
        features_found = []

    findings: list[FeatureFinding] = []
    for raw_name, span, rationale in _parse_findings(sections.get("analysis", ""), tolerant):
        name = catalog.normalize_name(raw_name)
        if name == UNKNOWN:
            warnings.append(f"finding for unknown feature ignored: {raw_name}")
            continue
        if name not in features_found:
            warnings.append(
                f"finding for {name} not in the features list; dropped"
            )
            continue
        location, quality = locate_span(span, body_text)
        if quality == "unlocated":
            warnings.append(f"span for {name} not located in the email body")
        findings.append(FeatureFinding(
            feature=name,
            quoted_span=span,
            rationale=rationale,
            span_location=location,
            match_quality=quality,
        ))

    score = feature_score(features_found, catalog)
    return AnalysisReport(
        verdict=verdict,
        explanation=explanation,
        features_found=tuple(features_found),
        findings=tuple(findings),
        countermeasures=tuple(_parse_countermeasures(sections.get("countermeasures", ""))),
        feature_score=score,
        raw_output=raw,
        warnings=tuple(warnings),
        prompt_hash=prompt_hash,
        created_at=datetime.now(timezone.utc).replace(microsecond=0).isoformat(),
    )
