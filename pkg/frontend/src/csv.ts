/**
 * Readers for the simulator's emitted CSV schemas.
 *
 * trace.csv    — one row per integrator step; numeric columns plus a `mode`
 *                tag; the `g` column is empty while the observability window
 *                is still filling (parsed as NaN).
 * switches.csv — one row per mode transition plus a final `none_final` row
 *                marking the mode active at the horizon.
 */

import { readFileSync } from "fs";

export interface Trace {
  /** column values by header name; non-numeric cells become NaN */
  columns: Map<string, number[]>;
  /** the `mode` tag column, kept as strings */
  mode: string[];
  length: number;
}

export interface SwitchEvent {
  k: number;
  time: number;
  newMode: string;
  trigger: string;
}

export function parseCsv(text: string): { header: string[]; rows: string[][] } {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new Error("empty CSV");
  }
  const header = lines[0].split(",");
  const rows = lines.slice(1).map((line) => line.split(","));
  for (const row of rows) {
    if (row.length !== header.length) {
      throw new Error(`CSV row has ${row.length} cells, header has ${header.length}`);
    }
  }
  return { header, rows };
}

export function readTrace(path: string, required: string[]): Trace {
  const { header, rows } = parseCsv(readFileSync(path, "utf-8"));
  const missing = required.filter((name) => !header.includes(name));
  if (missing.length > 0) {
    throw new Error(`trace schema mismatch: missing columns ${missing.join(", ")}`);
  }
  const columns = new Map<string, number[]>();
  for (const name of header) {
    if (name === "mode") continue;
    const idx = header.indexOf(name);
    columns.set(
      name,
      rows.map((row) => (row[idx] === "" ? NaN : Number(row[idx]))),
    );
  }
  const modeIdx = header.indexOf("mode");
  const mode = modeIdx >= 0 ? rows.map((row) => row[modeIdx]) : rows.map(() => "");
  return { columns, mode, length: rows.length };
}

export function readSwitches(path: string): SwitchEvent[] {
  const { header, rows } = parseCsv(readFileSync(path, "utf-8"));
  const expected = ["k", "t_k", "new_mode", "trigger"];
  const missing = expected.filter((name) => !header.includes(name));
  if (missing.length > 0) {
    throw new Error(`switches schema mismatch: missing columns ${missing.join(", ")}`);
  }
  const at = (name: string) => header.indexOf(name);
  return rows.map((row) => ({
    k: Number(row[at("k")]),
    time: Number(row[at("t_k")]),
    newMode: row[at("new_mode")],
    trigger: row[at("trigger")],
  }));
}

/** Transitions actually realized (the trailing horizon marker is not one). */
export function realizedSwitches(events: SwitchEvent[]): SwitchEvent[] {
  return events.filter((ev) => ev.trigger !== "none_final");
}
