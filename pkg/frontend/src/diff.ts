// Parameter diff rows for the update panel: old -> new per key, with
// warning highlighting. Values render byte-for-byte from the journal.

import { JournalEntry } from "./types.js";

export interface DiffRow {
  key: string;
  before: number | null;
  after: number;
  changed: boolean;
  warned: boolean;
}

export function diffRows(entry: JournalEntry, previous: Record<string, number> | null): DiffRow[] {
  const rows: DiffRow[] = [];
  const keys = Object.keys(entry.update).sort();
  for (const key of keys) {
    const after = entry.applied[key] ?? entry.update[key];
    const before = previous !== null && key in previous ? previous[key] : null;
    rows.push({
      key,
      before,
      after,
      changed: before === null || before !== after,
      warned: entry.warnings.some((w) => w.includes(key)),
    });
  }
  return rows;
}

export function formatValue(value: number | null): string {
  if (value === null) return "-";
  return Number.isInteger(value) ? value.toString() : String(value);
}

export function formatDiff(rows: DiffRow[]): string {
  return rows
    .map((row) => `${row.key}: ${formatValue(row.before)} -> ${formatValue(row.after)}${row.warned ? " !" : ""}`)
    .join(", ");
}
