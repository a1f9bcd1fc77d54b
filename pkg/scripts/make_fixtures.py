#!/usr/bin/env python3
"""Regenerates the committed test fixtures under tests/fixtures/.

Outputs are deterministic: prompt goldens, model-output replay
transcripts keyed by prompt hash, the frozen single-email report, the
toy evaluation dataset, and the recorded backend request body. Run after
any template, catalog, or few-shot change and review the diff.

Usage: python3 scripts/make_fixtures.py
"""

from __future__ import annotations

import json
from datetime import datetime, timezone
from pathlib import Path

from cyri.catalog import load_catalog
from cyri.gateway import CompletionRequest, LiveBackend, prompt_hash
from cyri.ingest import EmailRecord, parse_eml
from cyri.intel import Enricher, StubIntelClient, extract_urls
from cyri.prompts import (NOT_IN_CONTACTS, TRUSTED_CONTACT,
                          AnalysisPromptContext, ConversationPromptContext,
                          ConversationTurn, build_analysis_prompt,
                          build_conversation_prompt, load_few_shot)
from cyri.report_parser import parse_report

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "tests" / "fixtures"

E1_EML = b"""\
From: "Amazon Support" <security@amazon-account-services.net>
To: alex@example.com
Subject: Action required: unusual sign-in detected
Date: Mon, 12 Jan 2026 09:30:00 +0000
Message-ID: <e1-20260112-0001@amazon-account-services.net>
MIME-Version: 1.0
Content-Type: text/plain; charset=utf-8

Dear Customer,

We detected an unusual sign-in attempt on your Amazon account from a new device.
Your account will be locked within 24 hours unless you confirm your identity.
Confirm your identity now at http://amazon-account-services.net/verify to keep
your account active.

If you do not act, access to your orders and payment methods will be suspended.

Amazon Account Services
"""

E1_OUTPUT = """This email is Almost certainly phishing (96%)

- Detailed Explanation: This message claims to come from Amazon, but the sender address uses the unrelated domain amazon-account-services.net, which is a classic impersonation move. It pressures you with a 24-hour deadline, pushes you to click a verification link, and threatens to cut off access to your orders and payment methods if you do not comply. Legitimate providers do not ask you to confirm your identity through links like this.

- 'List of features found': [Authority/Impersonation of Trusted Entities; Urgency (Scarcity); Call to Action; Undesirable Consequences]

- 'Analysis': Authority/Impersonation of Trusted Entities: 'Amazon Account Services'. The message poses as Amazon while the sending domain has no relation to amazon.com.
Urgency (Scarcity): 'Your account will be locked within 24 hours'. A short deadline is used to rush you into acting without thinking.
Call to Action: 'Confirm your identity now'. You are told to click a link and hand over identity details right away.
Undesirable Consequences: 'access to your orders and payment methods will be suspended'. It threatens you with losing access if you do not obey.

- Countermeasures:
- Do not click the link; if you are unsure, open amazon.com directly in your browser and check your account there.
- Report the message as phishing to your email provider and delete it.
"""

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

CONVERSATION_ANALYSIS = E1_OUTPUT

TOY_RECORDS = [
    {
        "id": "T1",
        "sender_name": "IT Helpdesk",
        "sender_address": "support@mail-quota-fix.net",
        "subject": "Your mailbox will be deactivated",
        "body_text": (
            "Dear user,\n"
            "\n"
            "Your mailbox storage is full and your account will be deactivated"
            " within 12 hours.\n"
            "Verify your mailbox now at http://mail-quota-fix.net/renew to"
            " keep receiving messages.\n"
            "\n"
            "IT Helpdesk"
        ),
        "gold_label": "phishing",
        "gold_features": ["Urgency (Scarcity)", "Call to Action"],
    },
    {
        "id": "T2",
        "sender_name": "Billing Department",
        "sender_address": "billing@billing-resolve-center.com",
        "subject": "Final notice: invoice 8841 overdue",
        "body_text": (
            "Hello,\n"
            "\n"
            "Our records show invoice 8841 is overdue. If payment is not"
            " received today, your service will be terminated and a late fee"
            " of $250 will be applied.\n"
            "Pay at http://billing-resolve-center.com/pay\n"
            "\n"
            "Billing Department"
        ),
        "gold_label": "phishing",
        "gold_features": ["Undesirable Consequences"],
    },
    {
        "id": "T3",
        "sender_name": "Microsoft Support",
        "sender_address": "support@ms-alerts-desk.com",
        "subject": "Microsoft security alert",
        "body_text": (
            "Dear Customer,\n"
            "\n"
            "This is Microsoft Support. We found a problem with your Windows"
            " license. Call our certified technicians at 1-800-555-0147 to"
            " fix it.\n"
            "\n"
            "Microsoft Support Team"
        ),
        "gold_label": "phishing",
        "gold_features": ["Authority/Impersonation of Trusted Entities"],
    },
    {
        "id": "T4",
        "sender_name": "Maria",
        "sender_address": "maria@community-helpers.org",
        "subject": "Helping hands needed",
        "body_text": (
            "Dear friend,\n"
            "\n"
            "I am reaching out on behalf of a family that lost their home in"
            " a fire. Any small donation helps them rebuild. Please send what"
            " you can to the account below.\n"
            "\n"
            "With gratitude,\n"
            "Maria"
        ),
        "gold_label": "phishing",
        "gold_features": ["Appeal to Empathy/Altruism"],
    },
    {
        "id": "T5",
        "sender_name": "Sam Rivera",
        "sender_address": "sam@example.com",
        "subject": "Notes from today's design review",
        "body_text": (
            "Hi team,\n"
            "\n"
            "Thanks for joining the design review. Action items are in the"
            " shared doc; next check-in is Tuesday.\n"
            "\n"
            "Cheers,\n"
            "Sam"
        ),
        "gold_label": "safe",
        "gold_features": [],
    },
    {
        "id": "T6",
        "sender_name": "Trails & Text",
        "sender_address": "news@trailsandtext.com",
        "subject": "Your March newsletter",
        "body_text": (
            "Hello Alex,\n"
            "\n"
            "Here is your monthly digest: three new articles on container"
            " security and an invite to our community call next Thursday."
            " Read them on our blog at https://blog.trailsandtext.com/march\n"
            "\n"
            "The Trails & Text Team"
        ),
        "gold_label": "safe",
        "gold_features": [],
    },
]

TOY_OUTPUTS = {
    "T1": """This email is Almost certainly phishing (95%)

- Detailed Explanation: This message manufactures a storage emergency and a 12-hour countdown to push you onto an unfamiliar renewal link. Real mail providers do not deactivate accounts this way.

- 'List of features found': [Urgency (Scarcity); Call to Action]

- 'Analysis': Urgency (Scarcity): 'your account will be deactivated within 12 hours'. The countdown exists to keep you from checking with IT first.
Call to Action: 'Verify your mailbox now'. You are steered straight to the attacker's link.

- Countermeasures:
- Do not click the link; check your mailbox quota through your provider's own settings page.
- Report the message to your IT team.
""",
    "T2": """This email is Likely phishing (75%)

- Detailed Explanation: The message threatens termination and a made-up late fee to scare you into paying through an unverified site. Invoice numbers alone prove nothing.

- 'List of features found': [Undesirable Consequences; Call to Action]

- 'Analysis': Undesirable Consequences: 'your service will be terminated and a late fee of $250 will be applied'. The threatened penalties are the pressure device.
Call to Action: 'Pay at http://billing-resolve-center.com/pay'. You are steered to a payment page you cannot verify.

- Countermeasures:
- Check the invoice against your own records and pay only through the channel you normally use.
- Contact the vendor through a known phone number if in doubt.
""",
    "T3": """This email is Almost certainly phishing (92%)

- Detailed Explanation: This message impersonates a large vendor and routes you to a phone number instead of any official support channel. The sender domain has no relation to the company it claims to be.

- 'List of features found': [Authority/Impersonation of Trusted Entities]

- 'Analysis': Authority/Impersonation of Trusted Entities: 'This is Microsoft Support'. The claimed identity does not match the sending domain ms-alerts-desk.com.

- Countermeasures:
- Do not call the number; look up the vendor's support line yourself if you are concerned.
- Delete the message.
""",
    "T4": """This email is Likely safe (75%)

- Detailed Explanation: This reads like a personal appeal from an acquaintance. It asks for a voluntary donation rather than credentials, and contains no links or pressure tactics.

- 'List of features found': [personal tone; no links or attachments; no credential request]

- 'Analysis':

- Countermeasures:
- If you want to help, donate through a charity you can verify independently.
""",
    "T5": """This email is Almost certainly safe (95%)

- Detailed Explanation: A short internal follow-up about a meeting you attended, with no links, no requests, and a sender your team knows.

- 'List of features found': [routine work update; recognizable sender; no requests for information]

- 'Analysis':

- Countermeasures:
- No action needed.
""",
    "T6": """This email is Likely safe (85%)

- Detailed Explanation: This is a newsletter you appear to be subscribed to. The single link points at the sender's own blog and nothing asks for information or urgent action.

- 'List of features found': [expected newsletter; consistent sender domain; no urgency]

- 'Analysis':

- Countermeasures:
- Unsubscribe through the official link if you no longer want these.
""",
}


def render_prompt(email: EmailRecord, denylist=(), excluded=frozenset()):
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


def write(path: Path, data) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, bytes):
        path.write_bytes(data)
    else:
        path.write_text(data, encoding="utf-8")
    print(f"wrote {path.relative_to(ROOT)}")


def main() -> None:
    goldens = FIXTURES / "goldens"
    replay = FIXTURES / "replay"
    emails = FIXTURES / "emails"
    toy = FIXTURES / "toy_eval"

    # Replay files are keyed by prompt hash, so stale ones never get
    # overwritten; clear the directory instead.
    if replay.is_dir():
        for old in replay.glob("*.txt"):
            old.unlink()

    # Single-email fixture, its scripted model output, and the frozen report.
    write(emails / "E1.eml", E1_EML)
    e1 = parse_eml(E1_EML, source="file")
    e1_prompt = render_prompt(e1)
    write(replay / (prompt_hash(e1_prompt) + ".txt"), E1_OUTPUT)
    report = parse_report(E1_OUTPUT, e1.body_text, load_catalog(),
                          tolerant=True, prompt_hash=prompt_hash(e1_prompt))
    frozen = report.to_dict()
    # Reports are compared modulo created_at; pin it so the fixture's
    # bytes stay stable across regenerations.
    frozen["created_at"] = "2026-01-12T09:30:00+00:00"
    write(goldens / "R1.json",
          json.dumps(frozen, ensure_ascii=False, indent=2) + "\n")

    # Rendered-prompt goldens for the three pinned contexts.
    write(goldens / "analysis_prompt_trusted_contact.txt",
          render_prompt(TRUSTED_EMAIL))
    write(goldens / "analysis_prompt_threat_hit.txt",
          render_prompt(e1, denylist=("amazon-account-services.net",)))
    write(goldens / "analysis_prompt_feature_excluded.txt",
          render_prompt(e1, excluded=frozenset({"Reciprocation"})))

    # Conversation prompt golden.
    conv = ConversationPromptContext(
        last_user_query="What should I do with this email?",
        initial_prompt="(analysis instructions shown to the model, abridged"
                       " for this fixture)",
        analysis=CONVERSATION_ANALYSIS,
        history=(
            ConversationTurn("user", "Why is the sender suspicious?"),
            ConversationTurn("assistant",
                             "The domain amazon-account-services.net has no"
                             " relation to amazon.com."),
        ),
        elided=False,
    )
    write(goldens / "conversation_prompt.txt", build_conversation_prompt(conv))

    # Toy evaluation dataset plus one scripted output per record.
    lines = [json.dumps(rec, ensure_ascii=False) for rec in TOY_RECORDS]
    write(toy / "toy.jsonl", "\n".join(lines) + "\n")
    for index, rec in enumerate(TOY_RECORDS):
        email = EmailRecord(
            message_id=rec["id"],
            sender_name=rec["sender_name"],
            sender_address=rec["sender_address"],
            subject=rec["subject"],
            body_text=rec["body_text"],
            body_html=None,
            received_at=datetime(2026, 1, 12, tzinfo=timezone.utc),
            sender_in_contacts=False,
            source="file",
        )
        prompt = render_prompt(email)
        write(replay / (prompt_hash(prompt) + ".txt"), TOY_OUTPUTS[rec["id"]])

    # Recorded backend request body for one fixed completion request.
    backend = LiveBackend("http://127.0.0.1:8080/v1")
    req = CompletionRequest(prompt="Analyze this email.", max_tokens=64,
                            temperature=0.0, model_name="local-llm",
                            request_id="fixture")
    write(goldens / "gateway_request.json",
          json.dumps(backend.request_body(req), ensure_ascii=False,
                     indent=2) + "\n")


if __name__ == "__main__":
    main()
