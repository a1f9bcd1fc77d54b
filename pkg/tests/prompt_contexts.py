"""Context builders shared by the prompt golden tests and the acceptance run.

These mirror scripts/make_fixtures.py. If a value changes here it must
change there too, and the goldens must be regenerated and re-reviewed.
"""

from __future__ import annotations

from datetime import datetime, timezone
from pathlib import Path

from cyri.catalog import load_catalog
from cyri.ingest import EmailRecord, parse_eml
from cyri.intel import Enricher, StubIntelClient, extract_urls
from cyri.prompts import (NOT_IN_CONTACTS, TRUSTED_CONTACT,
                          AnalysisPromptContext, ConversationPromptContext,
                          ConversationTurn, build_analysis_prompt,
                          load_few_shot)

FIXTURES = Path(__file__).resolve().parent / "fixtures"

TRUSTED_EMAIL = EmailRecord(
    message_id="budget-followup-2026@example.com",
    sender_name="Priya Sharma",
    sender_address="priya@example.com",
    subject="Budget review follow-up",
    body_text=(
        "Hi Alex,\n"
        "\n"
        "Thanks for walking through the Q2 numbers today. I updated the\n"
        "spreadsheet with the revised travel estimates and flagged two line\n"
        "items for Finance. Can you confirm the hardware total before Friday?\n"
        "\n"
        "Best,\n"
        "Priya"
    ),
    body_html=None,
    received_at=datetime(2026, 1, 12, 14, 0, tzinfo=timezone.utc),
    sender_in_contacts=True,
    source="file",
)


def load_e1() -> EmailRecord:
    raw = (FIXTURES / "emails" / "E1.eml").read_bytes()
    return parse_eml(raw, source="file")


def render_analysis(email: EmailRecord, denylist=(),
                    excluded=frozenset()) -> str:
    """Render the analysis prompt the same way the pipeline does."""
    catalog = load_catalog()
    few_shot = load_few_shot()
    enricher = Enricher(StubIntelClient(denylist=denylist))
    urls = extract_urls(email.body_text, email.body_html)
    sender_domain = email.sender_address.split("@", 1)[1]
    intel = enricher.lookup_links(urls, sender_domain)
    ctx = AnalysisPromptContext(
        email_subject=email.subject,
        email_body=email.body_text,
        sender_email=email.sender_address,
        safe_browsing_output=intel.safe_browsing_summary,
        abuse_ipdb_output=intel.abuse_summary,
        is_safe=TRUSTED_CONTACT if email.sender_in_contacts else NOT_IN_CONTACTS,
        excluded_features=excluded,
    )
    return build_analysis_prompt(ctx, catalog, few_shot)


def conversation_context(analysis: str) -> ConversationPromptContext:
    return ConversationPromptContext(
        last_user_query="What should I do with this email?",
        initial_prompt="(analysis instructions shown to the model, abridged"
                       " for this fixture)",
        analysis=analysis,
        history=(
            ConversationTurn("user", "Why is the sender suspicious?"),
            ConversationTurn("assistant",
                             "The domain amazon-account-services.net has no"
                             " relation to amazon.com."),
        ),
        elided=False,
    )
