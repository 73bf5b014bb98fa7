/** Editing view helpers: spec text validation feedback, signal widget
 * descriptions derived from binds, and inspector table rendering. All pure;
 * main.ts wires them to the DOM. */

import { ApiError } from "./api.js";
import type { Row, SignalSpec, SpecDocument } from "./types.js";

export interface ValidationMessage {
  path: string;
  message: string;
}

export function parseSpecText(text: string): { spec?: SpecDocument; error?: ValidationMessage } {
  try {
    return { spec: JSON.parse(text) as SpecDocument };
  } catch (err) {
    return { error: { path: "$", message: `not valid JSON: ${(err as Error).message}` } };
  }
}

/** Map an API failure to the inline message shown next to the editor. */
export function validationMessage(err: unknown): ValidationMessage {
  if (err instanceof ApiError) {
    return { path: err.body.path ?? "$", message: err.body.message };
  }
  return { path: "$", message: String(err) };
}

export type WidgetKind = "slider" | "radio" | "select" | "text";

export interface Widget {
  kind: WidgetKind;
  signal: string;
  value: number | string | boolean;
  min?: number;
  max?: number;
  step?: number;
  options?: (number | string)[];
}

/** One interactive widget per bound signal, straight from the binds. */
export function widgetsFor(signals: SignalSpec[] | undefined): Widget[] {
  const out: Widget[] = [];
  for (const s of signals ?? []) {
    if (!s.bind) continue;
    if (s.bind.input === "range") {
      out.push({
        kind: "slider",
        signal: s.name,
        value: s.value,
        min: s.bind.min,
        max: s.bind.max,
        step: s.bind.step,
      });
    } else if (s.bind.input === "radio" || s.bind.input === "select") {
      out.push({ kind: s.bind.input, signal: s.name, value: s.value, options: s.bind.options ?? [] });
    } else if (s.bind.input === "text") {
      out.push({ kind: "text", signal: s.name, value: s.value });
    }
  }
  return out;
}

function esc(v: unknown): string {
  return String(v ?? "").replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

/** Inspector tab: dataset rows as a plain HTML table. */
export function renderRowsTable(rows: Row[], cap = 200): string {
  if (!rows.length) return "<p class='muted'>(empty)</p>";
  const cols = Object.keys(rows[0]);
  const head = cols.map((c) => `<th>${esc(c)}</th>`).join("");
  const body = rows
    .slice(0, cap)
    .map((r) => `<tr>${cols.map((c) => `<td>${r[c] === null ? "∅" : esc(r[c])}</td>`).join("")}</tr>`)
    .join("");
  const more = rows.length > cap ? `<p class='muted'>showing ${cap} of ${rows.length} rows</p>` : "";
  return `<table><thead><tr>${head}</tr></thead><tbody>${body}</tbody></table>${more}`;
}
