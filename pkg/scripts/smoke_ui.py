"""End-to-end check of the web UI modules against a real served instance.

Stages the same replay-mode server as smoke_http.py, ingests and analyzes
one phishing and one safe email over HTTP, then hands off to the compiled
frontend (frontend/scripts/drive.mjs) which selects both emails, verifies
the verdict tints, toggles a highlight, and asks a follow-up question.

Requires `npm run build` in frontend/ first.
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
PORT = 8762
BASE = f"http://127.0.0.1:{PORT}"
QUERY = "What should I do with this email?"
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


def ingest(record):
    r = requests.post(f"{BASE}/ingest", json=record)
    r.raise_for_status()
    return r.json()["id"]


def main():
    sys.path.insert(0, str(ROOT / "src"))
    from cyri.conversation import ConversationManager
    from cyri.gateway import prompt_hash
    from cyri.ingest import parse_eml
    from cyri.store import Store

    dist = ROOT / "frontend" / "dist" / "controller.js"
    if not dist.exists():
        print("frontend not built; run `npm run build` in frontend/ first",
              file=sys.stderr)
        return 2

    tmp = pathlib.Path(tempfile.mkdtemp(prefix="cyri-ui-smoke-"))
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
    safe = next(
        json.loads(line)
        for line in (FIXTURES / "toy_eval" / "toy.jsonl").read_text(
            encoding="utf-8").splitlines()
        if json.loads(line)["gold_label"] == "safe")

    server = subprocess.Popen(
        [sys.executable, "-m", "cyri.cli", "--config", str(config), "serve"],
        stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL)
    try:
        wait_for_health()

        phishing_id = ingest({
            "message_id": email.message_id,
            "sender_name": email.sender_name,
            "sender_address": email.sender_address,
            "subject": email.subject,
            "body_text": email.body_text,
            "received_at": email.received_at.isoformat(),
        })
        safe_id = ingest({
            "sender_name": safe["sender_name"],
            "sender_address": safe["sender_address"],
            "subject": safe["subject"],
            "body_text": safe["body_text"],
        })
        for eid in (phishing_id, safe_id):
            r = requests.post(f"{BASE}/emails/{eid}/analyze", json={})
            r.raise_for_status()

        # Record the follow-up reply the server will look for.
        store = Store(str(data_dir))
        bundle = store.get(email.message_id)
        prompt = ConversationManager(
            store, None, model_name="unused").build_prompt(bundle, QUERY)
        (replay / (prompt_hash(prompt) + ".txt")).write_text(
            REPLY, encoding="utf-8")

        drive = subprocess.run(
            ["node", str(ROOT / "frontend" / "scripts" / "drive.mjs"),
             BASE, phishing_id, safe_id, QUERY, REPLY])
        return drive.returncode
    finally:
        server.terminate()
        server.wait(timeout=10)


if __name__ == "__main__":
    sys.exit(main())
