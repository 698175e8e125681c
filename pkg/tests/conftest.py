from __future__ import annotations

import itertools
import json
from datetime import datetime, timedelta, timezone
from importlib import resources

import pytest

from edrkit.events import ProcessRef, SystemEvent
from edrkit.ingest import load_noise_rules
from edrkit.rules import load_bundled_rules
from edrkit.taxonomy import load_bundled_taxonomy

BASE_TS = datetime(2025, 3, 17, 9, 0, 0, tzinfo=timezone.utc)

_ids = itertools.count(1)


def make_event(offset: float = 0.0, category: str = "process",
               action: str = "create", obj: str = "C:\\Windows\\notepad.exe",
               agent_id: str = "agent-01", pid: int = 1234, ppid: int = 1200,
               image: str = "C:\\Windows\\notepad.exe", cmdline: str = "notepad.exe",
               user: str = "alice", signed: bool = True, elevated: bool = False,
               bytes_in: int = 0, bytes_out: int = 0, label: str | None = None,
               event_id: str | None = None, severity_hint: str | None = None) -> SystemEvent:
    return SystemEvent(
        id=event_id or f"ev-{next(_ids):06d}",
        ts=BASE_TS + timedelta(seconds=offset),
        agent_id=agent_id,
        category=category,
        action=action,
        subject=ProcessRef(pid=pid, ppid=ppid, image=image, cmdline=cmdline,
                           user=user, signed=signed, elevated=elevated),
        object=obj,
        bytes_in=bytes_in,
        bytes_out=bytes_out,
        severity_hint=severity_hint,
        label=label,
    )


@pytest.fixture(scope="session")
def taxonomy():
    return load_bundled_taxonomy()


@pytest.fixture(scope="session")
def ruleset(taxonomy):
    return load_bundled_rules(taxonomy)


@pytest.fixture(scope="session")
def noise_rules():
    text = resources.files("edrkit.data").joinpath("noise_rules.json").read_text("utf-8")
    return load_noise_rules(json.loads(text))
