"""Deterministic synthetic event source with labeled attack scenarios.

Scenarios: ``baseline`` (benign only), ``credential_theft``, ``ransomware``,
``beacon``. For a fixed seed the output is byte-identical across runs.
Exactly ``round(n * anomaly_frac)`` events carry technique labels; attack
events form coherent multi-step sequences that the bundled correlation rules
can follow, while benign traffic stays clear of every bundled signature.

The ground-truth ``label`` field is harness metadata only; nothing in the
detection path reads it.
"""

from __future__ import annotations

import heapq
import random
import uuid
from datetime import datetime, timezone
from typing import Iterator

from .events import ProcessRef, SystemEvent

SCENARIOS = ("baseline", "credential_theft", "ransomware", "beacon")

# Fixed origin keeps synthetic corpora reproducible across wall-clock time.
DEFAULT_START = datetime(2025, 3, 17, 9, 0, 0, tzinfo=timezone.utc)

MEAN_GAP_SECONDS = 0.25

# Object of the bundled chatty-telemetry noise rule; emitted periodically so
# replays exercise the noise counters.
CHATTY_TELEMETRY_KEY = (
    "HKLM\\SOFTWARE\\Microsoft\\Windows\\CurrentVersion\\Telemetry\\Heartbeat"
)

_USERS = ("alice", "bob", "carol", "dave")
_SRC_HOSTS = ("WS-01.corp", "WS-02.corp", "WS-03.corp", "VPN-GW.corp")
_BENIGN_PROCS = (
    ("C:\\Windows\\System32\\notepad.exe", "notepad.exe {doc}"),
    ("C:\\Program Files\\Google\\Chrome\\Application\\chrome.exe", "chrome.exe --type=renderer"),
    ("C:\\Program Files\\Microsoft Office\\root\\Office16\\WINWORD.EXE", "winword.exe /n {doc}"),
    ("C:\\Program Files\\Microsoft Office\\root\\Office16\\EXCEL.EXE", "excel.exe {doc}"),
    ("C:\\Windows\\System32\\svchost.exe", "svchost.exe -k netsvcs -p"),
    ("C:\\Program Files\\Microsoft Teams\\current\\Teams.exe", "teams.exe --system-initiated"),
    ("C:\\Windows\\explorer.exe", "explorer.exe"),
)
_BENIGN_DOC_EXT = (".docx", ".xlsx", ".pdf", ".txt", ".pptx")
_BENIGN_DSTS = (
    "10.0.0.5:445", "10.0.0.12:443", "10.0.0.2:53",
    "151.101.1.69:443", "142.250.74.36:443", "104.16.132.229:443",
    "20.190.160.14:443", "13.107.42.14:443",
)
_BENIGN_REG_KEYS = (
    "HKCU\\Software\\Microsoft\\Windows\\CurrentVersion\\Explorer\\Advanced",
    "HKLM\\SOFTWARE\\Microsoft\\Windows NT\\CurrentVersion",
    "HKCU\\Software\\Microsoft\\Office\\16.0\\Word\\Options",
    "HKLM\\SYSTEM\\CurrentControlSet\\Control\\Session Manager\\Environment",
)
_BENIGN_SERVICES = ("Spooler", "BITS", "wuauserv", "Dnscache")


def _event_id(rng: random.Random) -> str:
    return str(uuid.UUID(int=rng.getrandbits(128), version=4))


def _ts(base_epoch: float, offset: float) -> datetime:
    # Quantized to milliseconds so JSONL round-trips preserve order exactly.
    return datetime.fromtimestamp(round(base_epoch + offset, 3), tz=timezone.utc)


class _BenignFactory:
    """Weighted benign event mix; every 89th event repeats the previous dedup
    key (exercises dedup) and every 97th touches the chatty telemetry key
    (exercises noise filtering)."""

    def __init__(self, rng: random.Random, agent_id: str, base_epoch: float):
        self.rng = rng
        self.agent_id = agent_id
        self.base_epoch = base_epoch
        self.counter = 0
        self.last_key: tuple | None = None

    def make(self, offset: float) -> SystemEvent:
        rng = self.rng
        self.counter += 1
        i = self.counter

        if i % 97 == 0:
            return self._base(offset, "registry", "read", CHATTY_TELEMETRY_KEY,
                              self._proc("C:\\Windows\\System32\\svchost.exe",
                                         "svchost.exe -k utcsvc", "SYSTEM"))
        if i % 89 == 0 and self.last_key is not None:
            category, action, obj, subject = self.last_key
            return self._base(offset, category, action, obj, subject)

        roll = rng.random()
        user = rng.choice(_USERS)
        if roll < 0.25:
            image, cmd = rng.choice(_BENIGN_PROCS)
            doc = f"C:\\Users\\{user}\\Documents\\notes_{rng.randrange(500)}{rng.choice(_BENIGN_DOC_EXT)}"
            subject = ProcessRef(
                pid=rng.randrange(1000, 30000), ppid=1200, image=image,
                cmdline=cmd.format(doc=doc), user=user, signed=True,
                elevated=(rng.random() < 0.03),
            )
            e = self._base(offset, "process", "create", image, subject)
        elif roll < 0.50:
            action = rng.choice(("create", "modify", "read", "delete"))
            obj = f"C:\\Users\\{user}\\Documents\\work_{rng.randrange(2000)}{rng.choice(_BENIGN_DOC_EXT)}"
            e = self._base(offset, "file", action, obj, self._proc(
                "C:\\Program Files\\Microsoft Office\\root\\Office16\\WINWORD.EXE",
                "winword.exe", user))
        elif roll < 0.70:
            dst = rng.choice(_BENIGN_DSTS)
            action = "dns" if dst.endswith(":53") else "connect"
            e = self._base(offset, "network", action, dst, self._proc(
                "C:\\Program Files\\Google\\Chrome\\Application\\chrome.exe",
                "chrome.exe", user),
                bytes_in=rng.randrange(500, 40000), bytes_out=rng.randrange(200, 8000))
        elif roll < 0.85:
            action = "read" if rng.random() < 0.7 else "set_value"
            obj = rng.choice(_BENIGN_REG_KEYS)
            e = self._base(offset, "registry", action, obj, self._proc(
                "C:\\Windows\\explorer.exe", "explorer.exe", user))
        elif roll < 0.95:
            failed = rng.random() < 0.05
            action = "logon_failed" if failed else rng.choice(("logon", "logoff"))
            e = self._base(offset, "user", action, rng.choice(_SRC_HOSTS),
                           self._proc("C:\\Windows\\System32\\lsass.exe", "lsass.exe", user))
        else:
            e = self._base(offset, "service", rng.choice(("start", "stop")),
                           rng.choice(_BENIGN_SERVICES),
                           self._proc("C:\\Windows\\System32\\services.exe",
                                      "services.exe", "SYSTEM"))
        self.last_key = (e.category, e.action, e.object, e.subject)
        return e

    def _proc(self, image: str, cmdline: str, user: str) -> ProcessRef:
        return ProcessRef(pid=self.rng.randrange(1000, 30000), ppid=1200,
                          image=image, cmdline=cmdline, user=user,
                          signed=True, elevated=False)

    def _base(self, offset: float, category: str, action: str, obj: str,
              subject: ProcessRef, bytes_in: int = 0, bytes_out: int = 0) -> SystemEvent:
        if category != "network":
            bytes_in = bytes_out = 0
        return SystemEvent(
            id=_event_id(self.rng), ts=_ts(self.base_epoch, offset),
            agent_id=self.agent_id, category=category, action=action,
            subject=subject, object=obj, bytes_in=bytes_in, bytes_out=bytes_out,
            label="benign",
        )


def _credential_theft_steps(rng: random.Random, agent_id: str, base_epoch: float,
                            start: float, instance: int, user: str) -> list[SystemEvent]:
    pid = rng.randrange(4000, 9000)
    temp = f"C:\\Users\\{user}\\AppData\\Local\\Temp"
    steps = [
        ("process", "create", "C:\\Windows\\System32\\WindowsPowerShell\\v1.0\\powershell.exe",
         ProcessRef(pid=pid, ppid=1200,
                    image="C:\\Windows\\System32\\WindowsPowerShell\\v1.0\\powershell.exe",
                    cmdline="powershell.exe -nop -w hidden -enc SQBFAFgAIAAoAE4AZQB3AC0ATwBiAGoA",
                    user=user, signed=True, elevated=False),
         "T1059.001", 0, 0),
        ("process", "create", f"{temp}\\mimikatz.exe",
         ProcessRef(pid=pid + 1, ppid=pid, image=f"{temp}\\mimikatz.exe",
                    cmdline='mimikatz.exe "sekurlsa::logonpasswords" exit',
                    user=user, signed=False, elevated=True),
         "T1003.001", 0, 0),
        ("file", "create", f"{temp}\\lsass_{instance}.dmp",
         ProcessRef(pid=pid + 1, ppid=pid, image=f"{temp}\\mimikatz.exe",
                    cmdline="mimikatz.exe", user=user, signed=False, elevated=True),
         "T1003", 0, 0),
        ("registry", "set_value",
         f"HKLM\\SOFTWARE\\Microsoft\\Windows\\CurrentVersion\\Run\\svc_update_{instance}",
         ProcessRef(pid=pid + 1, ppid=pid, image=f"{temp}\\mimikatz.exe",
                    cmdline="mimikatz.exe", user=user, signed=False, elevated=True),
         "T1547.001", 0, 0),
        ("network", "connect", "203.0.113.77:4443",
         ProcessRef(pid=pid + 1, ppid=pid, image=f"{temp}\\mimikatz.exe",
                    cmdline="mimikatz.exe", user=user, signed=False, elevated=True),
         "T1041", 1200, 2_621_440),
    ]
    return _materialize(rng, agent_id, base_epoch, start, steps, gap_lo=2.0, gap_hi=4.0)


def _ransomware_steps(rng: random.Random, agent_id: str, base_epoch: float,
                      start: float, instance: int, user: str) -> list[SystemEvent]:
    pid = rng.randrange(4000, 9000)
    cryptor = f"C:\\Users\\{user}\\AppData\\Local\\Temp\\cryptor_{instance}.exe"
    docs = f"C:\\Users\\{user}\\Documents"
    actor = ProcessRef(pid=pid + 1, ppid=pid, image=cryptor, cmdline=f"cryptor_{instance}.exe -run",
                       user=user, signed=False, elevated=True)
    steps = [
        ("process", "create", "C:\\Windows\\System32\\cmd.exe",
         ProcessRef(pid=pid, ppid=1200, image="C:\\Windows\\System32\\cmd.exe",
                    cmdline="cmd.exe /c vssadmin delete shadows /all /quiet",
                    user=user, signed=True, elevated=True),
         "T1490", 0, 0),
        ("process", "create", cryptor,
         ProcessRef(pid=pid + 1, ppid=pid, image=cryptor,
                    cmdline=f"cryptor_{instance}.exe -run", user=user,
                    signed=False, elevated=True),
         "T1204.002", 0, 0),
        ("file", "modify", f"{docs}\\report_{instance}_a.docx.locked", actor, "T1486", 0, 0),
        ("file", "modify", f"{docs}\\budget_{instance}_b.xlsx.locked", actor, "T1486", 0, 0),
        ("file", "create", f"{docs}\\README_DECRYPT_{instance}.txt", actor, "T1486", 0, 0),
    ]
    return _materialize(rng, agent_id, base_epoch, start, steps, gap_lo=1.5, gap_hi=3.0)


def _beacon_steps(rng: random.Random, agent_id: str, base_epoch: float,
                  start: float, instance: int, user: str) -> list[SystemEvent]:
    pid = rng.randrange(4000, 9000)
    implant = f"C:\\Users\\{user}\\AppData\\Roaming\\winupdate_{instance % 7}.exe"
    actor = ProcessRef(pid=pid, ppid=1200, image=implant,
                       cmdline=f"winupdate_{instance % 7}.exe --check",
                       user=user, signed=False, elevated=False)
    steps = [
        ("network", "connect", "198.51.100.99:4444", actor, "T1071", 256, 512)
        for _ in range(5)
    ]
    events = []
    offset = start
    for idx, (category, action, obj, subject, label, b_in, b_out) in enumerate(steps):
        if idx:
            offset += 10.0 + rng.uniform(-0.2, 0.2)
        events.append(SystemEvent(
            id=_event_id(rng), ts=_ts(base_epoch, offset), agent_id=agent_id,
            category=category, action=action, subject=subject, object=obj,
            bytes_in=b_in, bytes_out=b_out, label=label,
        ))
    return events


def _materialize(rng: random.Random, agent_id: str, base_epoch: float, start: float,
                 steps: list[tuple], gap_lo: float, gap_hi: float) -> list[SystemEvent]:
    events = []
    offset = start
    for idx, (category, action, obj, subject, label, b_in, b_out) in enumerate(steps):
        if idx:
            offset += rng.uniform(gap_lo, gap_hi)
        events.append(SystemEvent(
            id=_event_id(rng), ts=_ts(base_epoch, offset), agent_id=agent_id,
            category=category, action=action, subject=subject, object=obj,
            bytes_in=b_in, bytes_out=b_out, label=label,
        ))
    return events


_STEP_BUILDERS = {
    "credential_theft": _credential_theft_steps,
    "ransomware": _ransomware_steps,
    "beacon": _beacon_steps,
}
_STEPS_PER_INSTANCE = 5


def synth_source(scenario: str, n: int, anomaly_frac: float, seed: int,
                 agent_id: str = "agent-01",
                 start: datetime = DEFAULT_START) -> Iterator[SystemEvent]:
    """Yield n labeled events in timestamp order, deterministic for the seed.

    Exactly round(n * anomaly_frac) events are technique-labeled; the rest
    are labeled "benign". Raises ValueError for unknown scenarios, fractions
    outside [0, 1], or a baseline scenario asked to contain attacks.
    """
    if scenario not in SCENARIOS:
        raise ValueError(f"unknown scenario {scenario!r}; expected one of {SCENARIOS}")
    if not 0.0 <= anomaly_frac <= 1.0:
        raise ValueError("anomaly_frac must lie in [0, 1]")
    if n < 0:
        raise ValueError("n must be non-negative")

    k = round(n * anomaly_frac)
    if scenario == "baseline" and k > 0:
        raise ValueError("baseline scenario has no attack steps; anomaly_frac must round to 0")

    rng = random.Random(seed)
    base_epoch = start.timestamp()
    n_benign = n - k
    est_span = max(60.0, n * MEAN_GAP_SECONDS)

    # Attack instances are generated first so benign generation can stream.
    attack_events: list[SystemEvent] = []
    if k:
        builder = _STEP_BUILDERS[scenario]
        n_instances = (k + _STEPS_PER_INSTANCE - 1) // _STEPS_PER_INSTANCE
        produced = 0
        for instance in range(n_instances):
            lo = min(30.0, est_span / 4)
            start_off = rng.uniform(lo, max(lo + 1.0, est_span - 60.0))
            user = rng.choice(_USERS)
            steps = builder(rng, agent_id, base_epoch, start_off, instance, user)
            take = min(len(steps), k - produced)
            attack_events.extend(steps[:take])
            produced += take
        attack_events.sort(key=lambda e: (e.ts_epoch, e.id))

    def benign_stream() -> Iterator[SystemEvent]:
        factory = _BenignFactory(rng, agent_id, base_epoch)
        offset = 0.0
        for _ in range(n_benign):
            offset += rng.expovariate(1.0 / MEAN_GAP_SECONDS)
            yield factory.make(offset)

    yield from heapq.merge(benign_stream(), iter(attack_events),
                           key=lambda e: (e.ts_epoch, e.id))
