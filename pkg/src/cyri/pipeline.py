"""The per-email analysis pipeline.

analyze() runs enrichment -> prompt -> model -> parser -> scoring and
persists the result on the email's bundle. Repeat requests with the same
exclusions return the stored report; concurrent requests for the same
email coalesce onto one in-flight run.
"""

from __future__ import annotations

import threading
import uuid
from concurrent.futures import Future
from typing import Optional

from .catalog import UNKNOWN, FeatureCatalog
from .errors import ContextInvalid, TruncatedOutput, UnknownFeature
from .gateway import ANALYSIS_TEMPERATURE, CompletionRequest, prompt_hash
from .intel import Enricher, extract_urls
from .prompts import (
    NOT_IN_CONTACTS,
    TRUSTED_CONTACT,
    AnalysisPromptContext,
    build_analysis_prompt,
    load_few_shot,
    template_hashes,
)
from .report_parser import AnalysisReport, parse_report
from .scoring import IntensitySignal, ui_intensity
from .store import Store, StoredEmailBundle

DEFAULT_ANALYSIS_TOKENS = 2048


class Pipeline:
    def __init__(self, store: Store, gateway, enricher: Enricher,
                 catalog: FeatureCatalog, model_name: str,
                 max_tokens: int = DEFAULT_ANALYSIS_TOKENS,
                 tolerant_parse: bool = True,
                 intensity_coeffs: tuple[float, float] = (0.5, 0.5)):
        self._store = store
        self._gateway = gateway
        self._enricher = enricher
        self._catalog = catalog
        self._model_name = model_name
        self._max_tokens = max_tokens
        self._tolerant = tolerant_parse
        self._intensity_coeffs = intensity_coeffs
        self._few_shot = load_few_shot()
        self._inflight: dict[str, Future] = {}
        self._inflight_guard = threading.Lock()

    def _normalize_exclusions(self, excluded_features) -> frozenset[str]:
        names = set()
        for raw in excluded_features or ():
            name = self._catalog.normalize_name(raw)
            if name == UNKNOWN:
                raise UnknownFeature(raw)
            names.add(name)
        if names >= set(self._catalog.names()):
            raise ContextInvalid("cannot analyze with every feature excluded")
        return frozenset(names)

    def build_prompt(self, bundle: StoredEmailBundle,
                     excluded: frozenset[str]) -> str:
        email = bundle.email
        urls = extract_urls(email.body_text, email.body_html)
        sender_domain = email.sender_address.split("@", 1)[1]
        intel = self._enricher.lookup_links(urls, sender_domain)
        ctx = AnalysisPromptContext(
            email_subject=email.subject,
            email_body=email.body_text,
            sender_email=email.sender_address,
            safe_browsing_output=intel.safe_browsing_summary,
            abuse_ipdb_output=intel.abuse_summary,
            is_safe=TRUSTED_CONTACT if email.sender_in_contacts else NOT_IN_CONTACTS,
            excluded_features=excluded,
        )
        return build_analysis_prompt(ctx, self._catalog, self._few_shot)

    def _complete(self, prompt: str) -> str:
        req = CompletionRequest(
            prompt=prompt,
            max_tokens=self._max_tokens,
            temperature=ANALYSIS_TEMPERATURE,
            model_name=self._model_name,
            request_id=str(uuid.uuid4()),
        )
        try:
            return self._gateway.complete(req).text
        except TruncatedOutput:
            # One retry with double the budget; a second cutoff propagates.
            retry = CompletionRequest(
                prompt=prompt,
                max_tokens=self._max_tokens * 2,
                temperature=ANALYSIS_TEMPERATURE,
                model_name=self._model_name,
                request_id=req.request_id,
            )
            return self._gateway.complete(retry).text

    def analyze_record(self, email, excluded_features=()) -> AnalysisReport:
        """Stateless analysis of an EmailRecord; nothing persisted."""
        excluded = self._normalize_exclusions(excluded_features)
        bundle = StoredEmailBundle(email=email)
        prompt = self.build_prompt(bundle, excluded)
        raw = self._complete(prompt)
        return parse_report(raw, email.body_text, self._catalog,
                            tolerant=self._tolerant,
                            prompt_hash=prompt_hash(prompt))

    def _run(self, bundle: StoredEmailBundle,
             excluded: frozenset[str]) -> AnalysisReport:
        prompt = self.build_prompt(bundle, excluded)
        raw = self._complete(prompt)
        report = parse_report(raw, bundle.email.body_text, self._catalog,
                              tolerant=self._tolerant,
                              prompt_hash=prompt_hash(prompt))
        updated = bundle.with_analysis(
            analysis=report,
            analysis_prompt=prompt,
            template_hashes=template_hashes(),
            excluded_features=tuple(sorted(excluded)),
        )
        self._store.put(updated)
        return report

    def is_inflight(self, message_id: str) -> bool:
        with self._inflight_guard:
            return message_id in self._inflight

    def analyze(self, message_id: str, excluded_features=(),
                force: bool = False) -> tuple[AnalysisReport, bool]:
        """(report, cached). Joins an in-flight run for the same email."""
        excluded = self._normalize_exclusions(excluded_features)
        bundle = self._store.get(message_id)
        if bundle is None:
            raise KeyError(f"no stored email {message_id!r}")
        if (bundle.analysis is not None and not force
                and set(bundle.excluded_features) == excluded):
            return bundle.analysis, True

        with self._inflight_guard:
            existing = self._inflight.get(message_id)
            if existing is not None:
                future = existing
                owner = False
            else:
                future = Future()
                self._inflight[message_id] = future
                owner = True
        if not owner:
            return future.result(), False
        try:
            report = self._run(bundle, excluded)
            future.set_result(report)
            return report, False
        except BaseException as exc:
            future.set_exception(exc)
            raise
        finally:
            with self._inflight_guard:
                self._inflight.pop(message_id, None)

    def intensity(self, report: AnalysisReport) -> IntensitySignal:
        percent_coeff, feature_coeff = self._intensity_coeffs
        return ui_intensity(report.verdict.label, report.verdict.percentage,
                            report.feature_score,
                            percent_coeff=percent_coeff,
                            feature_coeff=feature_coeff)
