/** Sink rows -> chart.js configurations. The engine's job ends at data;
 * rendering is delegated to chart.js, so this module only shapes configs. */

import type { MarkSpec, Row } from "./types.js";

const PALETTE = ["#4c78a8", "#f58518", "#54a24b", "#e45756", "#72b7b2", "#b279a2", "#eeca3b"];

export interface Chartish {
  type: string;
  data: { labels?: unknown[]; datasets: { label: string; data: unknown[]; [k: string]: unknown }[] };
  options: Record<string, unknown>;
}

function num(v: unknown): number {
  return typeof v === "number" ? v : Number(v ?? 0);
}

/** Interval bars (rect marks with x/x2, e.g. histograms). */
function rectConfig(mark: MarkSpec, rows: Row[]): Chartish {
  const { x, x2, y } = mark.encoding;
  const sorted = [...rows].sort((a, b) => num(a[x]) - num(b[x]));
  return {
    type: "bar",
    data: {
      datasets: [
        {
          label: y,
          data: sorted.map((r) => ({ x: [num(r[x]), num(r[x2 ?? x])], y: num(r[y]) })),
          backgroundColor: PALETTE[0],
          borderWidth: 0,
          barPercentage: 1.0,
          categoryPercentage: 1.0,
        },
      ],
    },
    options: {
      parsing: false,
      scales: { x: { type: "linear", offset: false }, y: { beginAtZero: true } },
      plugins: { legend: { display: false } },
      animation: false,
    },
  };
}

/** Stacked areas (area marks with y/y2 and a color channel). */
function areaConfig(mark: MarkSpec, rows: Row[]): Chartish {
  const { x, y, y2, color } = mark.encoding;
  const series = color ? [...new Set(rows.map((r) => String(r[color])))].sort() : ["value"];
  const xs = [...new Set(rows.map((r) => num(r[x])))].sort((a, b) => a - b);
  const datasets = series.map((s, i) => {
    const mine = rows.filter((r) => !color || String(r[color]) === s);
    const byX = new Map(mine.map((r) => [num(r[x]), r]));
    return {
      label: s,
      data: xs.map((xv) => {
        const row = byX.get(xv);
        return row ? num(row[y2 ?? y]) - num(row[y]) : 0;
      }),
      backgroundColor: PALETTE[i % PALETTE.length],
      fill: true,
      stack: "stack",
    };
  });
  return {
    type: "line",
    data: { labels: xs, datasets },
    options: {
      scales: { y: { stacked: true, beginAtZero: true } },
      elements: { point: { radius: 0 } },
      animation: false,
    },
  };
}

function genericConfig(mark: MarkSpec, rows: Row[]): Chartish {
  const channels = Object.values(mark.encoding);
  const x = channels[0];
  const y = channels[1] ?? channels[0];
  return {
    type: "scatter",
    data: {
      datasets: [
        {
          label: mark.from.data,
          data: rows.map((r) => ({ x: num(r[x]), y: num(r[y]) })),
          backgroundColor: PALETTE[0],
        },
      ],
    },
    options: { animation: false },
  };
}

export function chartConfig(mark: MarkSpec, rows: Row[]): Chartish {
  if (mark.type === "rect" && mark.encoding.x && mark.encoding.y) return rectConfig(mark, rows);
  if ((mark.type === "area" || mark.type === "line") && mark.encoding.y2) return areaConfig(mark, rows);
  return genericConfig(mark, rows);
}
