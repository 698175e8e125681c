// Forensic timeline: chronological events for one asset with detection
// highlights. An event is highlighted when some alert's evidence includes
// its id; filtering within the fetched page happens client-side, deeper
// history comes through paged event queries.

import type { Alert, EventRecord } from "../types.js";

export interface TimelineEntry {
  event: EventRecord;
  highlighted: boolean;
  alertIds: string[];
}

export function buildTimeline(events: EventRecord[],
                              alerts: Alert[]): TimelineEntry[] {
  const evidenceIndex = new Map<string, string[]>();
  for (const alert of alerts) {
    for (const eid of alert.evidence_ids) {
      const bucket = evidenceIndex.get(eid);
      if (bucket) bucket.push(alert.id);
      else evidenceIndex.set(eid, [alert.id]);
    }
  }
  return [...events]
    .sort((a, b) => Date.parse(a.ts) - Date.parse(b.ts))
    .map((event) => ({
      event,
      highlighted: evidenceIndex.has(event.id),
      alertIds: evidenceIndex.get(event.id) ?? [],
    }));
}

export function filterTimeline(entries: TimelineEntry[],
                               filter: { category?: string;
                                         highlightedOnly?: boolean }): TimelineEntry[] {
  return entries.filter((entry) => {
    if (filter.category && entry.event.category !== filter.category) return false;
    if (filter.highlightedOnly && !entry.highlighted) return false;
    return true;
  });
}
