"""Operator command line.

Subcommands: serve, analyze, eval, catalog, ingest. Exit codes: 0 for
success (a phishing verdict is data, not a failure), 1 for usage errors,
2 for pipeline errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

from .catalog import load_catalog
from .config import Config, load_config
from .conversation import ConversationManager
from .errors import BadConfig, CyriError
from .evaluation import format_table, load_dataset, run_eval
from .gateway import Gateway, LiveBackend, ReplayBackend
from .ingest import ContactList, parse_eml
from .intel import Enricher, make_client
from .pipeline import Pipeline
from .store import Store, StoredEmailBundle


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; this tool reserves 2 for pipeline
    failures, so usage problems exit 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_runtime(config: Config):
    """Wire the full stack from config; returns the live components."""
    store = Store(config.data_dir, tz=config.tzinfo())

    if config.gateway_mode == "replay":
        if not config.replay_dir:
            raise BadConfig("gateway_mode=replay needs replay_dir")
        backend = ReplayBackend(config.replay_dir)
    elif config.gateway_mode == "live":
        backend = LiveBackend(config.model_base_url, config.model_api_key,
                              timeout_secs=config.model_timeout_secs)
    else:
        raise BadConfig(f"unknown gateway_mode {config.gateway_mode!r}")
    gateway = Gateway(backend, queue_depth=config.queue_depth)

    client = make_client(
        config.intel_mode,
        sb_key=config.sb_key,
        abuse_key=config.abuse_key,
        replay_path=config.intel_replay_path,
        denylist=config.denylist(),
    )
    enricher = Enricher(client, cache_ttl_secs=config.intel_cache_ttl_secs)

    catalog = load_catalog()
    pipeline = Pipeline(
        store, gateway, enricher, catalog,
        model_name=config.model_name,
        max_tokens=config.model_max_tokens,
        tolerant_parse=config.tolerant_parse,
        intensity_coeffs=(config.intensity_percent_coeff,
                          config.intensity_feature_coeff),
    )
    conversation = ConversationManager(
        store, gateway, model_name=config.model_name,
        prompt_char_budget=config.prompt_char_budget,
    )
    contacts = ContactList(config.contacts_path) if config.contacts_path else None
    return store, gateway, enricher, pipeline, conversation, catalog, contacts


def _config_from_args(args) -> Config:
    overrides = {}
    for key in ("gateway_mode", "replay_dir", "data_dir", "intel_mode",
                "host", "port"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    return load_config(path=getattr(args, "config", None), overrides=overrides)


def _print_report(report, as_json: bool) -> None:
    if as_json:
        print(json.dumps(report.to_dict(), ensure_ascii=False, indent=2))
        return
    v = report.verdict
    print(f"Verdict: {v.label} ({v.percentage}%, {v.category})")
    print(f"Feature score: {report.feature_score:.4f}")
    if report.features_found:
        print("Features found:")
        for name in report.features_found:
            print(f"  - {name}")
    for finding in report.findings:
        where = finding.span_location or "unlocated"
        print(f"  {finding.feature}: {finding.quoted_span!r} @ {where}")
    if report.countermeasures:
        print("Countermeasures:")
        for item in report.countermeasures:
            print(f"  - {item}")
    if report.warnings:
        print("Warnings:")
        for warning in report.warnings:
            print(f"  ! {warning}")


def _cmd_serve(args) -> int:
    import uvicorn

    from .api import check_bind, create_app

    config = _config_from_args(args)
    store, _, _, pipeline, conversation, catalog, contacts = build_runtime(config)
    check_bind(config.host, config.port, config.allow_nonlocal)
    app = create_app(store, pipeline, conversation, catalog, contacts)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
    return 0


def _cmd_analyze(args) -> int:
    config = _config_from_args(args)
    _, _, _, pipeline, _, _, contacts = build_runtime(config)
    try:
        with open(args.path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        print(f"error [ingest]: {exc}", file=sys.stderr)
        return 2
    record = parse_eml(raw, source="file", contacts=contacts)
    report = pipeline.analyze_record(record, excluded_features=args.exclude or ())
    _print_report(report, args.json)
    return 0


def _cmd_eval(args) -> int:
    overrides = {}
    if args.mode:
        overrides["gateway_mode"] = args.mode
    for key in ("replay_dir", "intel_mode"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    config = load_config(path=args.config, overrides=overrides)
    _, _, _, pipeline, _, catalog, _ = build_runtime(config)
    records, load_errors = load_dataset(args.dataset, catalog)
    results_path = args.results or (args.dataset + ".results.jsonl")
    metrics = run_eval(
        records, pipeline, catalog,
        results_path=results_path,
        load_errors=load_errors,
        bin_thresholds=(config.eval_bin_high, config.eval_bin_medium),
    )
    print(format_table(metrics))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(metrics.to_dict(), fh, ensure_ascii=False, indent=2)
        print(f"report written to {args.out}")
    print(f"results written to {results_path}")
    return 0


def _cmd_catalog(args) -> int:
    catalog = load_catalog()
    if args.action == "list":
        for feat in catalog.features:
            print(f"{feat.canonical_name}\t{feat.weight:g}")
    return 0


def _cmd_ingest(args) -> int:
    import os

    config = _config_from_args(args)
    store, _, _, _, _, _, contacts = build_runtime(config)
    try:
        names = sorted(os.listdir(args.dir))
    except OSError as exc:
        print(f"error [ingest]: {exc}", file=sys.stderr)
        return 2
    stored = failed = 0
    for name in names:
        if not name.endswith(".eml"):
            continue
        path = os.path.join(args.dir, name)
        try:
            with open(path, "rb") as fh:
                record = parse_eml(fh.read(), source="file", contacts=contacts)
            if store.get(record.message_id) is None:
                store.put(StoredEmailBundle(email=record))
                stored += 1
        except Exception as exc:
            print(f"skipped {name}: {exc}", file=sys.stderr)
            failed += 1
    print(f"ingested {stored} email(s), skipped {failed}")
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="cyri", description="local phishing triage engine")
    parser.add_argument("--config", help="config file path (or set CYRI_CONFIG)")
    sub = parser.add_subparsers(dest="command", required=True)

    p_serve = sub.add_parser("serve", help="run the local HTTP API")
    p_serve.add_argument("--host")
    p_serve.add_argument("--port", type=int)
    p_serve.add_argument("--data-dir", dest="data_dir")
    p_serve.set_defaults(func=_cmd_serve)

    p_an = sub.add_parser("analyze", help="analyze one .eml file")
    p_an.add_argument("path")
    p_an.add_argument("--json", action="store_true", help="machine-readable output")
    p_an.add_argument("--exclude", action="append", metavar="FEATURE",
                      help="exclude a catalog feature (repeatable)")
    p_an.add_argument("--gateway-mode", dest="gateway_mode", choices=["live", "replay"])
    p_an.add_argument("--replay-dir", dest="replay_dir")
    p_an.add_argument("--intel-mode", dest="intel_mode",
                      choices=["live", "replay", "stub"])
    p_an.set_defaults(func=_cmd_analyze)

    p_ev = sub.add_parser("eval", help="run a labeled dataset")
    p_ev.add_argument("dataset")
    p_ev.add_argument("--mode", choices=["live", "replay"])
    p_ev.add_argument("--replay-dir", dest="replay_dir")
    p_ev.add_argument("--intel-mode", dest="intel_mode",
                      choices=["live", "replay", "stub"])
    p_ev.add_argument("--out", help="write the JSON report here")
    p_ev.add_argument("--results", help="per-record JSONL results path")
    p_ev.set_defaults(func=_cmd_eval)

    p_cat = sub.add_parser("catalog", help="inspect the feature catalog")
    p_cat.add_argument("action", choices=["list"])
    p_cat.set_defaults(func=_cmd_catalog)

    p_in = sub.add_parser("ingest", help="bulk-ingest a directory of .eml files")
    p_in.add_argument("dir")
    p_in.add_argument("--data-dir", dest="data_dir")
    p_in.set_defaults(func=_cmd_ingest)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except CyriError as exc:
        print(f"error [{exc.stage}]: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error [io]: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
