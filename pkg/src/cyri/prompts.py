"""Prompt rendering for email analysis and follow-up conversation.

The two templates live as external text files with {name} slots and are
rendered byte-reproducibly: equal contexts give byte-identical prompts.
Golden tests pin the full rendered output, so any template edit is a
deliberate, visible change.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional, Sequence

from .catalog import FeatureCatalog, load_catalog
from .errors import ContextInvalid, NoAnalysis

TRUSTED_CONTACT = "trusted_contact"
NOT_IN_CONTACTS = "not_in_contacts"

#: Verbatim renderings of the sender-trust slot.
IS_SAFE_PHRASES = {
    TRUSTED_CONTACT: "present in the recipient's contact list and is trusted by the recipient",
    NOT_IN_CONTACTS: "not present in the recipient's contact list",
}

#: Text substituted for a threat-intel slot whose lookup never happened.
UNAVAILABLE_TEXT = "Result unavailable - treat as unchecked"

EMPTY_HISTORY_TEXT = "(no prior turns)"

_ROLE_LABELS = {"user": "User:", "assistant": "AI:"}


def _read_template(name: str) -> str:
    path = resources.files("cyri").joinpath("templates").joinpath(name)
    return path.read_text(encoding="utf-8")


def _template_bytes(name: str) -> bytes:
    path = resources.files("cyri").joinpath("templates").joinpath(name)
    return path.read_bytes()


def template_hashes() -> dict[str, str]:
    """sha256 of each template file, stored with analyses for provenance."""
    return {
        "analysis_prompt": hashlib.sha256(_template_bytes("analysis_prompt.txt")).hexdigest(),
        "conversation_prompt": hashlib.sha256(_template_bytes("conversation_prompt.txt")).hexdigest(),
    }


def load_few_shot() -> dict:
    """Bundled few-shot examples: exactly 3 safe emails and 1 phishing."""
    path = resources.files("cyri").joinpath("data/few_shot.json")
    data = json.loads(path.read_text(encoding="utf-8"))
    if len(data.get("safe", [])) != 3 or not data.get("phishing"):
        raise ContextInvalid("few-shot data must hold 3 safe examples and 1 phishing")
    return data


@dataclass(frozen=True)
class AnalysisPromptContext:
    email_subject: str
    email_body: str
    sender_email: str
    safe_browsing_output: Optional[str]
    abuse_ipdb_output: Optional[str]
    is_safe: str  # trusted_contact | not_in_contacts
    excluded_features: frozenset[str] = frozenset()

    def __post_init__(self):
        if self.is_safe not in IS_SAFE_PHRASES:
            raise ContextInvalid(f"is_safe must be one of {sorted(IS_SAFE_PHRASES)}")
        if not self.sender_email:
            raise ContextInvalid("sender_email is required")


@dataclass(frozen=True)
class ConversationTurn:
    role: str  # user | assistant
    text: str

    def __post_init__(self):
        if self.role not in _ROLE_LABELS:
            raise ContextInvalid(f"unknown turn role {self.role!r}")


@dataclass(frozen=True)
class ConversationPromptContext:
    last_user_query: str
    initial_prompt: str
    analysis: str
    history: tuple[ConversationTurn, ...] = ()
    elided: bool = False  # older turns dropped to fit the prompt budget


def render_features_block(catalog: FeatureCatalog,
                          excluded: frozenset[str] = frozenset()) -> str:
    """The {features} slot: every kept feature with description and examples."""
    lines = []
    for feat in catalog.features:
        if feat.canonical_name in excluded:
            continue
        examples = "; ".join(f'"{e}"' for e in feat.examples)
        lines.append(f"- {feat.canonical_name}: {feat.description}")
        lines.append(f"  Examples: {examples}")
    return "\n".join(lines)


def render_feature_names(catalog: FeatureCatalog,
                         excluded: frozenset[str] = frozenset()) -> str:
    return "\n".join(n for n in catalog.names() if n not in excluded)


def render_feature_weights(catalog: FeatureCatalog,
                           excluded: frozenset[str] = frozenset()) -> str:
    lines = []
    for feat in catalog.features:
        if feat.canonical_name in excluded:
            continue
        lines.append(f"{feat.canonical_name}: {feat.weight:g};")
    return "\n".join(lines)


def build_analysis_prompt(ctx: AnalysisPromptContext,
                          catalog: Optional[FeatureCatalog] = None,
                          few_shot: Optional[dict] = None) -> str:
    """Render the full email-analysis prompt from typed context."""
    catalog = catalog or load_catalog()
    few_shot = few_shot or load_few_shot()
    excluded = frozenset(ctx.excluded_features)

    email_block = f"Subject: {ctx.email_subject}\n\n{ctx.email_body}"
    bindings = {
        "email": email_block,
        "sender_email": ctx.sender_email,
        "google_safe_browsing_output": ctx.safe_browsing_output or UNAVAILABLE_TEXT,
        "abuse_ipdb_output": ctx.abuse_ipdb_output or UNAVAILABLE_TEXT,
        "isSafeOutput": IS_SAFE_PHRASES[ctx.is_safe],
        "features": render_features_block(catalog, excluded),
        "list_features_names": render_feature_names(catalog, excluded),
        "feature_weights": render_feature_weights(catalog, excluded),
        "example_safe1": few_shot["safe"][0],
        "example_safe2": few_shot["safe"][1],
        "example_safe3": few_shot["safe"][2],
        "example_phishing": few_shot["phishing"],
    }
    template = _read_template("analysis_prompt.txt")
    try:
        return template.format(**bindings)
    except (KeyError, IndexError) as exc:
        raise ContextInvalid(f"template slot not bound: {exc}") from exc


def render_history(history: Sequence[ConversationTurn], elided: bool = False) -> str:
    if not history:
        return EMPTY_HISTORY_TEXT
    lines = [f"{_ROLE_LABELS[t.role]} {t.text}" for t in history]
    if elided:
        lines.insert(0, "(earlier turns elided)")
    return "\n".join(lines)


def build_conversation_prompt(ctx: ConversationPromptContext) -> str:
    """Render the follow-up conversation prompt; needs an existing analysis."""
    if not ctx.analysis or not ctx.analysis.strip():
        raise NoAnalysis("conversation requires a prior analysis")
    if not ctx.last_user_query:
        raise ContextInvalid("last_user_query is required")
    bindings = {
        "last_user_query": ctx.last_user_query,
        "initial_prompt": ctx.initial_prompt,
        "analysis": ctx.analysis,
        "conversation_history": render_history(ctx.history, ctx.elided),
    }
    template = _read_template("conversation_prompt.txt")
    try:
        return template.format(**bindings)
    except (KeyError, IndexError) as exc:
        raise ContextInvalid(f"template slot not bound: {exc}") from exc
