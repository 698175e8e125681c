"""Fixed 45-slot feature extraction over a window of endpoint events.

The schema is frozen: six feature groups (process 10, file 8, network 9,
registry 6, user/session 6, temporal 6) in the order listed in
FEATURE_NAMES. Count features are min-max scaled into [0, 1] by the
documented per-feature caps below; ratio/entropy features are already
bounded. Every value is finite and in [0, 1] for any input window.

Normalization caps (per 60 s window, configurable via FeatureCaps):

    count_cap        100        generic activity counts and unique counts
    bytes_cap        10 MiB     summed network byte counters
    cmdline_len_cap  512        mean command-line length
    depth_cap        10         process tree depth
    small_count_cap  10         account creations, privilege changes
    hosts_cap        20         distinct logon source hosts
    rate_cap         100        events per second (mean and per-second max)
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass

import numpy as np

from .events import SystemEvent

FEATURE_NAMES: tuple[str, ...] = (
    # process group (10)
    "proc_new_count",
    "proc_unique_images",
    "proc_suspicious_parent_count",
    "cmdline_len_mean",
    "cmdline_entropy_mean",
    "proc_elevated_count",
    "proc_unsigned_count",
    "proc_from_temp_count",
    "proc_short_lived_count",
    "proc_tree_depth_max",
    # file group (8)
    "file_create_count",
    "file_modify_count",
    "file_delete_count",
    "file_exec_ext_writes",
    "file_high_entropy_writes",
    "file_sensitive_path_touches",
    "file_rename_burst",
    "file_unique_dirs",
    # network group (9)
    "net_conn_count",
    "net_unique_dst_ips",
    "net_unique_dst_ports",
    "net_bytes_out",
    "net_bytes_in",
    "net_beacon_regularity",
    "net_dns_count",
    "net_rare_port_count",
    "net_external_ratio",
    # registry group (6)
    "reg_set_count",
    "reg_delete_count",
    "reg_run_key_writes",
    "reg_service_key_writes",
    "reg_unique_keys",
    "reg_persistence_path_touches",
    # user/session group (6)
    "logon_count",
    "failed_logon_count",
    "users_created",
    "priv_change_count",
    "off_hours_events",
    "distinct_src_hosts",
    # temporal group (6)
    "events_per_sec_mean",
    "events_per_sec_max",
    "burstiness",
    "inter_event_time_var",
    "active_categories",
    "window_span_sec",
)

FEATURE_COUNT = len(FEATURE_NAMES)  # 45
FEATURE_INDEX = {name: i for i, name in enumerate(FEATURE_NAMES)}

# Slots that are monotone counts under superset windows (see module tests).
COUNT_FEATURE_NAMES: tuple[str, ...] = (
    "proc_new_count", "proc_unique_images", "proc_suspicious_parent_count",
    "proc_elevated_count", "proc_unsigned_count", "proc_from_temp_count",
    "proc_short_lived_count", "proc_tree_depth_max",
    "file_create_count", "file_modify_count", "file_delete_count",
    "file_exec_ext_writes", "file_high_entropy_writes",
    "file_sensitive_path_touches", "file_rename_burst", "file_unique_dirs",
    "net_conn_count", "net_unique_dst_ips", "net_unique_dst_ports",
    "net_bytes_out", "net_bytes_in", "net_dns_count", "net_rare_port_count",
    "reg_set_count", "reg_delete_count", "reg_run_key_writes",
    "reg_service_key_writes", "reg_unique_keys", "reg_persistence_path_touches",
    "logon_count", "failed_logon_count", "users_created", "priv_change_count",
    "off_hours_events", "distinct_src_hosts",
    "events_per_sec_max", "active_categories", "window_span_sec",
)

EXEC_EXTENSIONS = (".exe", ".dll", ".ps1", ".bat", ".cmd", ".vbs", ".js", ".scr", ".sys")
ENCRYPTED_EXTENSIONS = (".enc", ".locked", ".crypt", ".crypted", ".cry", ".zzz", ".lockbit")
SENSITIVE_PATH_MARKERS = (
    "\\config\\sam", "/etc/shadow", "/etc/passwd", "ntds.dit", "id_rsa",
    "\\lsass", "wallet.dat", "\\credentials", "\\protect\\",
)
TEMP_PATH_MARKERS = ("\\temp\\", "/tmp/", "%temp%", "\\appdata\\local\\temp")
PERSISTENCE_KEY_MARKERS = (
    "\\currentversion\\run", "winlogon\\shell", "winlogon\\userinit",
    "image file execution options", "\\taskcache", "currentcontrolset\\services",
)
COMMON_PORTS = frozenset({
    "80", "443", "53", "22", "25", "110", "143", "445", "3389",
    "8080", "8443", "123", "389", "636", "21", "993", "995",
})
# Document/browser hosts whose child shells indicate suspicious spawning.
LURE_PARENT_IMAGES = frozenset({
    "winword.exe", "excel.exe", "powerpnt.exe", "outlook.exe", "acrord32.exe",
    "chrome.exe", "firefox.exe", "msedge.exe", "iexplore.exe",
})
SHELL_CHILD_IMAGES = frozenset({
    "cmd.exe", "powershell.exe", "pwsh.exe", "wscript.exe", "cscript.exe",
    "mshta.exe", "rundll32.exe", "regsvr32.exe", "bitsadmin.exe", "certutil.exe",
})

_LOG2_256 = 8.0


@dataclass(frozen=True)
class FeatureCaps:
    count_cap: int = 100
    bytes_cap: int = 10 * 1024 * 1024
    cmdline_len_cap: int = 512
    depth_cap: int = 10
    small_count_cap: int = 10
    hosts_cap: int = 20
    rate_cap: float = 100.0
    off_hours_start: int = 0   # agent-local hour, inclusive
    off_hours_end: int = 6     # exclusive
    tz_offset_minutes: int = 0


DEFAULT_CAPS = FeatureCaps()


@dataclass(frozen=True)
class FeatureVector:
    """45 ordered real values in [0, 1] summarizing one agent window."""

    values: np.ndarray
    window_id: str = ""
    agent_id: str = ""

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.shape != (FEATURE_COUNT,):
            raise ValueError(f"feature vector must have {FEATURE_COUNT} values, got {arr.shape}")
        object.__setattr__(self, "values", arr)

    def as_dict(self) -> dict[str, float]:
        return {name: float(v) for name, v in zip(FEATURE_NAMES, self.values)}


def shannon_entropy(data: str | bytes) -> float:
    """Byte-level Shannon entropy normalized by log2(256) into [0, 1]."""
    if isinstance(data, str):
        data = data.encode("utf-8", "replace")
    n = len(data)
    if n == 0:
        return 0.0
    counts = Counter(data)
    h = -sum((c / n) * math.log2(c / n) for c in counts.values())
    return min(1.0, h / _LOG2_256)


def _basename(path: str) -> str:
    return path.replace("\\", "/").rsplit("/", 1)[-1].lower()


def _dirname(path: str) -> str:
    norm = path.replace("\\", "/")
    idx = norm.rfind("/")
    return norm[:idx].lower() if idx >= 0 else ""


def _split_host_port(obj: str) -> tuple[str, str]:
    host, _, port = obj.rpartition(":")
    if not host:
        return obj, ""
    return host, port


def is_external_host(host: str) -> bool:
    """Heuristic RFC 1918 / loopback check on a dotted-quad or name."""
    if not host or host == "localhost" or host.startswith(("127.", "10.", "192.168.", "0.", "fe80", "::")):
        return False
    if host.startswith("172."):
        parts = host.split(".")
        if len(parts) >= 2 and parts[1].isdigit() and 16 <= int(parts[1]) <= 31:
            return False
    return True


def _pstd(values: list[float]) -> float:
    n = len(values)
    if n == 0:
        return 0.0
    mean = sum(values) / n
    return math.sqrt(sum((v - mean) ** 2 for v in values) / n)


def _max_burst(times: list[float], burst_window: float = 10.0) -> int:
    """Maximum number of timestamps inside any rolling burst_window."""
    if not times:
        return 0
    times = sorted(times)
    best, lo = 1, 0
    for hi in range(len(times)):
        while times[hi] - times[lo] > burst_window:
            lo += 1
        best = max(best, hi - lo + 1)
    return best


def extract_features(
    events: list[SystemEvent],
    window_seconds: float = 60.0,
    caps: FeatureCaps = DEFAULT_CAPS,
    window_id: str = "",
    agent_id: str = "",
) -> FeatureVector:
    """Compute the 45-slot vector for one agent's window of events.

    Events are stably sorted by (ts, id), so the result is permutation
    invariant for equal timestamps. An empty window yields all zeros.
    Mixed agent ids raise ValueError.
    """
    if window_seconds <= 0:
        raise ValueError("window_seconds must be positive")
    if not events:
        return FeatureVector(np.zeros(FEATURE_COUNT), window_id=window_id, agent_id=agent_id)

    agents = {e.agent_id for e in events}
    if len(agents) > 1:
        raise ValueError(f"window mixes agent ids: {sorted(agents)}")
    agent_id = agent_id or next(iter(agents))

    events = sorted(events, key=lambda e: (e.ts_epoch, e.id))
    v = np.zeros(FEATURE_COUNT)
    ccap = float(caps.count_cap)

    proc_images: set[str] = set()
    pid_images: dict[int, set[str]] = defaultdict(set)
    pid_created: set[int] = set()
    pid_terminated: set[int] = set()
    proc_creates: list[SystemEvent] = []
    cmd_lens: list[int] = []
    cmd_entropies: list[float] = []
    elevated = unsigned = from_temp = 0

    file_counts = Counter()
    exec_writes = enc_writes = sensitive = 0
    rename_times: list[float] = []
    file_dirs: set[str] = set()

    conn_times_by_dst: dict[str, list[float]] = defaultdict(list)
    dst_ips: set[str] = set()
    dst_ports: set[str] = set()
    conn_count = dns_count = rare_port = external = 0
    bytes_in_total = bytes_out_total = 0

    reg_set = reg_del = run_writes = service_writes = persistence = 0
    reg_keys: set[str] = set()

    logons = failed_logons = created_users = priv_changes = 0
    src_hosts: set[str] = set()

    off_hours = 0
    off_lo, off_hi = caps.off_hours_start, caps.off_hours_end
    tz_shift = caps.tz_offset_minutes * 60

    for e in events:
        local_hour = int(((e.ts_epoch + tz_shift) % 86400) // 3600)
        if off_lo <= local_hour < off_hi:
            off_hours += 1

        if e.category == "process":
            pid_images[e.subject.pid].add(_basename(e.subject.image))
            if e.action == "create":
                proc_creates.append(e)
                proc_images.add(e.subject.image.lower())
                pid_created.add(e.subject.pid)
                cmd_lens.append(len(e.subject.cmdline))
                cmd_entropies.append(shannon_entropy(e.subject.cmdline))
                if e.subject.elevated:
                    elevated += 1
                if not e.subject.signed:
                    unsigned += 1
                image_l = e.subject.image.lower()
                if any(m in image_l for m in TEMP_PATH_MARKERS):
                    from_temp += 1
            elif e.action == "terminate":
                pid_terminated.add(e.subject.pid)

        elif e.category == "file":
            file_counts[e.action] += 1
            obj_l = e.object.lower()
            if e.action in ("create", "modify", "rename"):
                if obj_l.endswith(EXEC_EXTENSIONS):
                    exec_writes += 1
                if obj_l.endswith(ENCRYPTED_EXTENSIONS):
                    enc_writes += 1
            if any(m in obj_l for m in SENSITIVE_PATH_MARKERS):
                sensitive += 1
            if e.action == "rename":
                rename_times.append(e.ts_epoch)
            file_dirs.add(_dirname(e.object))

        elif e.category == "network":
            bytes_in_total += e.bytes_in
            bytes_out_total += e.bytes_out
            if e.action == "connect":
                conn_count += 1
                host, port = _split_host_port(e.object)
                dst_ips.add(host)
                dst_ports.add(port)
                conn_times_by_dst[e.object].append(e.ts_epoch)
                if port and port not in COMMON_PORTS:
                    rare_port += 1
                if is_external_host(host):
                    external += 1
            elif e.action == "dns":
                dns_count += 1

        elif e.category == "registry":
            key_l = e.object.lower()
            reg_keys.add(key_l)
            if e.action == "set_value":
                reg_set += 1
            elif e.action in ("delete_value", "delete_key"):
                reg_del += 1
            if e.action in ("set_value", "create_key"):
                if "\\currentversion\\run" in key_l:
                    run_writes += 1
                if "\\services\\" in key_l:
                    service_writes += 1
                if any(m in key_l for m in PERSISTENCE_KEY_MARKERS):
                    persistence += 1

        elif e.category == "user":
            if e.action == "logon":
                logons += 1
                if e.object:
                    src_hosts.add(e.object.lower())
            elif e.action == "logon_failed":
                failed_logons += 1
                if e.object:
                    src_hosts.add(e.object.lower())
            elif e.action == "user_create":
                created_users += 1
            elif e.action == "priv_change":
                priv_changes += 1

    # process group
    suspicious_parents = 0
    for e in proc_creates:
        if _basename(e.subject.image) in SHELL_CHILD_IMAGES:
            parents = pid_images.get(e.subject.ppid, ())
            if any(img in LURE_PARENT_IMAGES for img in parents):
                suspicious_parents += 1

    depth_max = 0
    if proc_creates:
        parent_of = {e.subject.pid: e.subject.ppid for e in proc_creates}
        for pid in parent_of:
            depth, node, seen = 1, pid, {pid}
            while node in parent_of and parent_of[node] in parent_of and parent_of[node] not in seen:
                node = parent_of[node]
                seen.add(node)
                depth += 1
            depth_max = max(depth_max, depth)

    v[0] = min(1.0, len(proc_creates) / ccap)
    v[1] = min(1.0, len(proc_images) / ccap)
    v[2] = min(1.0, suspicious_parents / ccap)
    v[3] = min(1.0, (sum(cmd_lens) / len(cmd_lens)) / caps.cmdline_len_cap) if cmd_lens else 0.0
    v[4] = sum(cmd_entropies) / len(cmd_entropies) if cmd_entropies else 0.0
    v[5] = min(1.0, elevated / ccap)
    v[6] = min(1.0, unsigned / ccap)
    v[7] = min(1.0, from_temp / ccap)
    v[8] = min(1.0, len(pid_created & pid_terminated) / ccap)
    v[9] = min(1.0, depth_max / caps.depth_cap)

    # file group
    v[10] = min(1.0, file_counts["create"] / ccap)
    v[11] = min(1.0, file_counts["modify"] / ccap)
    v[12] = min(1.0, file_counts["delete"] / ccap)
    v[13] = min(1.0, exec_writes / ccap)
    v[14] = min(1.0, enc_writes / ccap)
    v[15] = min(1.0, sensitive / ccap)
    v[16] = min(1.0, _max_burst(rename_times) / ccap)
    v[17] = min(1.0, len(file_dirs) / ccap)

    # network group
    v[18] = min(1.0, conn_count / ccap)
    v[19] = min(1.0, len(dst_ips) / ccap)
    v[20] = min(1.0, len(dst_ports) / ccap)
    v[21] = min(1.0, bytes_out_total / caps.bytes_cap)
    v[22] = min(1.0, bytes_in_total / caps.bytes_cap)
    regularity = 0.0
    if conn_times_by_dst:
        dst, times = max(conn_times_by_dst.items(), key=lambda kv: (len(kv[1]), kv[0]))
        if len(times) >= 3:
            times = sorted(times)
            gaps = [b - a for a, b in zip(times, times[1:])]
            mean_gap = sum(gaps) / len(gaps)
            if mean_gap > 0:
                regularity = max(0.0, 1.0 - _pstd(gaps) / mean_gap)
    v[23] = regularity
    v[24] = min(1.0, dns_count / ccap)
    v[25] = min(1.0, rare_port / ccap)
    v[26] = external / conn_count if conn_count else 0.0

    # registry group
    v[27] = min(1.0, reg_set / ccap)
    v[28] = min(1.0, reg_del / ccap)
    v[29] = min(1.0, run_writes / ccap)
    v[30] = min(1.0, service_writes / ccap)
    v[31] = min(1.0, len(reg_keys) / ccap)
    v[32] = min(1.0, persistence / ccap)

    # user/session group
    v[33] = min(1.0, logons / ccap)
    v[34] = min(1.0, failed_logons / ccap)
    v[35] = min(1.0, created_users / caps.small_count_cap)
    v[36] = min(1.0, priv_changes / caps.small_count_cap)
    v[37] = min(1.0, off_hours / ccap)
    v[38] = min(1.0, len(src_hosts) / caps.hosts_cap)

    # temporal group
    first, last = events[0].ts_epoch, events[-1].ts_epoch
    span = max(last - first, 0.0)
    n = len(events)
    v[39] = min(1.0, (n / max(span, 1.0)) / caps.rate_cap)

    buckets = Counter(int(e.ts_epoch) for e in events)
    v[40] = min(1.0, max(buckets.values()) / caps.rate_cap)

    n_buckets = int(last) - int(first) + 1
    mu = n / n_buckets
    sum_sq = sum(c * c for c in buckets.values())
    sigma = math.sqrt(max(0.0, sum_sq / n_buckets - mu * mu))
    v[41] = ((sigma - mu) / (sigma + mu) + 1.0) / 2.0 if (sigma + mu) > 0 else 0.0

    if n >= 3:
        gaps = [b.ts_epoch - a.ts_epoch for a, b in zip(events, events[1:])]
        s, m = _pstd(gaps), sum(gaps) / len(gaps)
        v[42] = s / (s + m) if (s + m) > 0 else 0.0

    v[43] = len({e.category for e in events}) / 6.0
    v[44] = min(1.0, span / window_seconds)

    if not window_id:
        window_id = f"{agent_id}:{int(first)}"
    return FeatureVector(v, window_id=window_id, agent_id=agent_id)
