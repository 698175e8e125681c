"""Server persistence: append-only JSONL event log plus a JSON snapshot of
mutable state.

The event log is the source of truth for everything derivable (alerts come
from replaying it through the detection pipeline); the snapshot carries what
is not derivable: users, agent credentials, assets, alert triage overlays
(status/assignee/notes), manual alerts, response records, and the world
ledger. Recovery = load snapshot, replay log.
"""

from __future__ import annotations

import json
import os
import secrets
import threading
from pathlib import Path
from typing import Iterator

EVENT_LOG = "events.jsonl"
SNAPSHOT = "snapshot.json"
AUDIT_LOG = "audit.jsonl"
SECRET_FILE = "server_secret"


class ServerStore:
    """File-backed store; all mutation goes through the owning state lock."""

    def __init__(self, data_dir: str | Path):
        self.dir = Path(data_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self._log_path = self.dir / EVENT_LOG
        self._snapshot_path = self.dir / SNAPSHOT
        self._audit_path = self.dir / AUDIT_LOG
        self._log_lock = threading.Lock()

        # Mutable, snapshot-persisted state.
        self.users: dict[str, dict] = {}
        self.agents: dict[str, dict] = {}
        self.assets: dict[str, dict] = {}
        self.alert_overlays: dict[str, dict] = {}
        self.manual_alerts: list[dict] = []
        self.actions: dict[str, dict] = {}
        self.pending_actions: dict[str, dict] = {}
        self.ledger_snapshot: dict = {}
        self.load_snapshot()

    # -- server secret -----------------------------------------------------

    def jwt_secret(self) -> bytes:
        path = self.dir / SECRET_FILE
        if path.exists():
            return bytes.fromhex(path.read_text().strip())
        secret = secrets.token_bytes(32)
        path.write_text(secret.hex())
        try:
            os.chmod(path, 0o600)
        except OSError:
            pass
        return secret

    # -- event log ---------------------------------------------------------

    def append_log(self, entry: dict) -> None:
        line = json.dumps(entry, separators=(",", ":"))
        with self._log_lock:
            with open(self._log_path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()

    def iter_log(self) -> Iterator[dict]:
        if not self._log_path.exists():
            return
        with open(self._log_path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    yield json.loads(line)

    def log_size_bytes(self) -> int:
        return self._log_path.stat().st_size if self._log_path.exists() else 0

    def read_log_bytes(self) -> bytes:
        return self._log_path.read_bytes() if self._log_path.exists() else b""

    # -- audit log ---------------------------------------------------------

    def append_audit(self, entry: dict) -> None:
        with open(self._audit_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry, separators=(",", ":")) + "\n")

    # -- snapshot ----------------------------------------------------------

    def save_snapshot(self) -> None:
        doc = {
            "users": self.users,
            "agents": self.agents,
            "assets": self.assets,
            "alert_overlays": self.alert_overlays,
            "manual_alerts": self.manual_alerts,
            "actions": self.actions,
            "pending_actions": self.pending_actions,
            "ledger": self.ledger_snapshot,
        }
        tmp = self._snapshot_path.with_suffix(".tmp")
        tmp.write_text(json.dumps(doc, indent=1), encoding="utf-8")
        tmp.replace(self._snapshot_path)

    def load_snapshot(self) -> None:
        if not self._snapshot_path.exists():
            return
        doc = json.loads(self._snapshot_path.read_text(encoding="utf-8"))
        self.users = doc.get("users", {})
        self.agents = doc.get("agents", {})
        self.assets = doc.get("assets", {})
        self.alert_overlays = doc.get("alert_overlays", {})
        self.manual_alerts = doc.get("manual_alerts", [])
        self.actions = doc.get("actions", {})
        self.pending_actions = doc.get("pending_actions", {})
        self.ledger_snapshot = doc.get("ledger", {})
