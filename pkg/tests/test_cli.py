"""Command-line interface: exit codes, output shapes, replay-driven runs."""

import json
import shutil

import pytest

from cyri.cli import main
from tests.prompt_contexts import FIXTURES

REPLAY_FLAGS = ["--gateway-mode", "replay",
                "--replay-dir", str(FIXTURES / "replay"),
                "--intel-mode", "stub"]


@pytest.fixture(autouse=True)
def in_tmp_dir(tmp_path, monkeypatch):
    """The default data_dir is relative; keep stores out of the repo."""
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("CYRI_CONFIG", raising=False)


def test_catalog_list(capsys):
    assert main(["catalog", "list"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 21
    assert lines[0] == "Authority/Impersonation of Trusted Entities\t0.6"
    assert lines[1] == "Instant Gratification (False promise of reward)\t0.9"
    assert "Urgency (Scarcity)\t0.9" in lines
    assert all("\t" in line for line in lines)


def test_analyze_json_matches_frozen_report(capsys):
    eml = str(FIXTURES / "emails" / "E1.eml")
    assert main(["analyze", eml, "--json"] + REPLAY_FLAGS) == 0
    produced = json.loads(capsys.readouterr().out)
    frozen = json.loads(
        (FIXTURES / "goldens" / "R1.json").read_text(encoding="utf-8"))
    # created_at is the analysis wall-clock time; everything else is frozen.
    produced.pop("created_at")
    frozen.pop("created_at")
    assert produced == frozen


def test_analyze_text_output(capsys):
    eml = str(FIXTURES / "emails" / "E1.eml")
    assert main(["analyze", eml] + REPLAY_FLAGS) == 0
    out = capsys.readouterr().out
    assert "Verdict: phishing (96%, almost_certainly)" in out
    assert "Features found:" in out
    assert "Authority/Impersonation of Trusted Entities" in out
    assert "Countermeasures:" in out


def test_analyze_missing_file_is_pipeline_error(capsys):
    code = main(["analyze", "no-such.eml"] + REPLAY_FLAGS)
    assert code == 2
    assert capsys.readouterr().err.startswith("error [ingest]:")


def test_analyze_without_fixture_fails_at_gateway(tmp_path, capsys):
    empty = tmp_path / "empty-replay"
    empty.mkdir()
    code = main(["analyze", str(FIXTURES / "emails" / "E1.eml"),
                 "--gateway-mode", "replay", "--replay-dir", str(empty),
                 "--intel-mode", "stub"])
    assert code == 2
    assert capsys.readouterr().err.startswith("error [gateway]:")


def test_replay_mode_without_dir_is_config_error(capsys):
    code = main(["analyze", str(FIXTURES / "emails" / "E1.eml"),
                 "--gateway-mode", "replay", "--intel-mode", "stub"])
    assert code == 2
    assert capsys.readouterr().err.startswith("error [config]:")


def test_usage_errors_exit_one(capsys):
    assert main([]) == 1
    assert main(["frobnicate"]) == 1
    assert main(["analyze"]) == 1  # missing path
    assert main(["eval", "x", "--mode", "warp"]) == 1
    capsys.readouterr()  # drain usage text


def test_eval_toy_dataset(tmp_path, capsys):
    results = tmp_path / "res.jsonl"
    report = tmp_path / "report.json"
    code = main(["eval", str(FIXTURES / "toy_eval" / "toy.jsonl"),
                 "--mode", "replay", "--replay-dir", str(FIXTURES / "replay"),
                 "--intel-mode", "stub",
                 "--results", str(results), "--out", str(report)])
    assert code == 0
    out = capsys.readouterr().out
    assert "Phishing" in out and "Safe" in out and "Accuracy" in out
    assert "0.833" in out  # 5 of 6 correct
    assert "Appeal to Empathy/Altruism: 0.000 (low)" in out
    assert f"results written to {results}" in out
    assert f"report written to {report}" in out

    written = json.loads(report.read_text(encoding="utf-8"))
    assert written["confusion"] == {"tp": 3, "fp": 0, "fn": 1, "tn": 2}
    assert len(results.read_text().splitlines()) == 6


def test_eval_default_results_path(tmp_path, capsys):
    dataset = tmp_path / "toy.jsonl"
    shutil.copy(FIXTURES / "toy_eval" / "toy.jsonl", dataset)
    code = main(["eval", str(dataset),
                 "--mode", "replay", "--replay-dir", str(FIXTURES / "replay"),
                 "--intel-mode", "stub"])
    assert code == 0
    sidecar = tmp_path / "toy.jsonl.results.jsonl"
    assert sidecar.exists()
    assert f"results written to {sidecar}" in capsys.readouterr().out


def write_eml(path, message_id, subject):
    path.write_bytes(
        b"From: Sender <sender@example.com>\r\n"
        b"To: you@example.com\r\n"
        b"Subject: " + subject.encode() + b"\r\n"
        b"Date: Mon, 12 Jan 2026 09:30:00 +0000\r\n"
        b"Message-ID: <" + message_id.encode() + b">\r\n"
        b"\r\nBody text.\r\n")


def test_ingest_directory_dedups(tmp_path, capsys):
    inbox = tmp_path / "inbox"
    inbox.mkdir()
    write_eml(inbox / "a.eml", "a@example.com", "first")
    write_eml(inbox / "b.eml", "b@example.com", "second")
    (inbox / "broken.eml").write_bytes(b"not an email at all")
    (inbox / "notes.txt").write_text("ignored")
    data = str(tmp_path / "data")

    assert main(["ingest", str(inbox), "--data-dir", data]) == 0
    captured = capsys.readouterr()
    assert "ingested 2 email(s), skipped 1" in captured.out
    assert "skipped broken.eml:" in captured.err

    # second pass finds both already stored
    assert main(["ingest", str(inbox), "--data-dir", data]) == 0
    assert "ingested 0 email(s), skipped 1" in capsys.readouterr().out


def test_ingest_missing_directory(capsys):
    assert main(["ingest", "definitely-absent-dir"]) == 2
    assert capsys.readouterr().err.startswith("error [ingest]:")
