"""Cyri: local-first phishing triage around a locally hosted LLM.

Emails are ingested, enriched with link/domain reputation, analyzed by
the model through a fixed prompt, parsed into a typed report with
feature findings and located spans, scored, stored locally, and served
to the companion UI over a loopback HTTP API.
"""

from .catalog import FeatureCatalog, SemanticFeature, load_catalog, normalize_name
from .config import Config, load_config
from .errors import CyriError
from .evaluation import MetricsReport, compute_metrics, run_eval
from .ingest import ContactList, EmailRecord, check_contacts, parse_eml
from .intel import Enricher, ThreatIntelBundle, UrlFinding, extract_urls
from .pipeline import Pipeline
from .prompts import (
    AnalysisPromptContext,
    ConversationPromptContext,
    build_analysis_prompt,
    build_conversation_prompt,
)
from .report_parser import AnalysisReport, FeatureFinding, Verdict, parse_report
from .scoring import categorize, feature_score, ui_intensity
from .store import Store, StoredEmailBundle

__version__ = "0.1.0"

__all__ = [
    "AnalysisPromptContext",
    "AnalysisReport",
    "Config",
    "ContactList",
    "ConversationPromptContext",
    "CyriError",
    "EmailRecord",
    "Enricher",
    "FeatureCatalog",
    "FeatureFinding",
    "MetricsReport",
    "Pipeline",
    "SemanticFeature",
    "Store",
    "StoredEmailBundle",
    "ThreatIntelBundle",
    "UrlFinding",
    "Verdict",
    "build_analysis_prompt",
    "build_conversation_prompt",
    "categorize",
    "check_contacts",
    "compute_metrics",
    "extract_urls",
    "feature_score",
    "load_catalog",
    "load_config",
    "normalize_name",
    "parse_eml",
    "parse_report",
    "run_eval",
    "ui_intensity",
]
