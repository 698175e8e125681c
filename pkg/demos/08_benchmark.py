"""Pipeline throughput and detection-to-response latency measurement.

Drives the full local pipeline (noise filter, dedup, windows, all four
engines, risk scoring, policy response) unthrottled over synthetic traffic.
The engineering floor is 1,000 events/second with p50 response under two
seconds; a CLI equivalent is `edrkit bench --n 100000`.
"""

from edrkit.harness import run_bench

report = run_bench(n_events=20_000, seed=7, scenario="credential_theft",
                   anomaly_frac=0.02)

print(f"events processed : {report.n_events:,}")
print(f"duration         : {report.duration_seconds:.2f} s")
print(f"throughput       : {report.events_per_second:,.0f} events/s")
print(f"latency p50      : {report.latency_ms['p50']:.2f} ms "
      f"({report.latency_samples} detection-to-response samples)")
print(f"latency p95/p99  : {report.latency_ms['p95']:.2f} / "
      f"{report.latency_ms['p99']:.2f} ms")
print(f"alerts raised    : {report.alerts}")
print("pipeline counters:")
for key, value in report.counters.items():
    print(f"  {key:18s} {value:,}")
