"""End-to-end smoke check against a real served instance.

Boots `cyri serve` in replay mode on a scratch data dir, then drives the
documented happy path over actual HTTP: ingest the sample email, analyze
it against the frozen completion, ask a follow-up question, and read the
thread back. Exits non-zero on the first mismatch.

The follow-up reply is recorded into the scratch replay dir up front by
rendering the exact conversation prompt the server will build; this keeps
the whole run offline and deterministic.
"""

import json
import pathlib
import subprocess
import sys
import tempfile
import time

import requests

ROOT = pathlib.Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "tests" / "fixtures"
PORT = 8761
BASE = f"http://127.0.0.1:{PORT}"
REPLY = "Delete it and report it to your security team."


def wait_for_health(timeout=15.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        try:
            if requests.get(f"{BASE}/health", timeout=1).status_code == 200:
                return
        except requests.ConnectionError:
            time.sleep(0.1)
    raise RuntimeError("server never became healthy")


def check(label, got, want):
    if got != want:
        raise AssertionError(f"{label}: got {got!r}, want {want!r}")
    print(f"ok: {label}")


def main():
    sys.path.insert(0, str(ROOT / "src"))
    from cyri.conversation import ConversationManager
    from cyri.gateway import prompt_hash
    from cyri.ingest import parse_eml
    from cyri.store import Store

    tmp = pathlib.Path(tempfile.mkdtemp(prefix="cyri-smoke-"))
    replay = tmp / "replay"
    replay.mkdir()
    for fixture in (FIXTURES / "replay").glob("*.txt"):
        (replay / fixture.name).write_bytes(fixture.read_bytes())
    data_dir = tmp / "data"
    config = tmp / "cyri.conf"
    config.write_text(
        f"gateway_mode = replay\n"
        f"replay_dir = {replay}\n"
        f"intel_mode = stub\n"
        f"data_dir = {data_dir}\n"
        f"port = {PORT}\n",
        encoding="utf-8")

    email = parse_eml((FIXTURES / "emails" / "E1.eml").read_bytes(),
                      source="file")
    frozen = json.loads((FIXTURES / "goldens" / "R1.json").read_text())

    server = subprocess.Popen(
        [sys.executable, "-m", "cyri.cli", "--config", str(config), "serve"],
        stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL)
    try:
        wait_for_health()

        r = requests.post(f"{BASE}/ingest", json={
            "message_id": email.message_id,
            "sender_name": email.sender_name,
            "sender_address": email.sender_address,
            "subject": email.subject,
            "body_text": email.body_text,
            "received_at": email.received_at.isoformat(),
        })
        check("ingest status", r.status_code, 201)
        eid = r.json()["id"]

        r = requests.get(f"{BASE}/emails/{eid}/analysis")
        check("analysis before analyze", r.status_code, 404)

        r = requests.post(f"{BASE}/emails/{eid}/analyze", json={})
        check("analyze status", r.status_code, 200)
        report = r.json()["analysis"]
        check("verdict", report["verdict"], frozen["verdict"])
        check("features", report["features_found"], frozen["features_found"])
        check("feature score", report["feature_score"],
              frozen["feature_score"])

        # Record the reply the server will ask for, then ask for it.
        bundle = Store(str(data_dir)).get(email.message_id)
        prompt = ConversationManager(
            Store(str(data_dir)), None, model_name="unused").build_prompt(
                bundle, "What should I do with this email?")
        (replay / (prompt_hash(prompt) + ".txt")).write_text(
            REPLY, encoding="utf-8")

        r = requests.post(f"{BASE}/emails/{eid}/query",
                          json={"text": "What should I do with this email?"})
        check("query status", r.status_code, 200)
        check("query reply", r.json()["reply"], REPLY)

        r = requests.get(f"{BASE}/emails/{eid}/thread")
        turns = r.json()["thread"]["turns"]
        check("thread length", len(turns), 2)
        check("thread roles", [t["role"] for t in turns],
              ["user", "assistant"])
        print("smoke check passed")
        return 0
    finally:
        server.terminate()
        server.wait(timeout=10)


if __name__ == "__main__":
    sys.exit(main())
