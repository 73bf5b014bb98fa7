/** Stacked timing bars: one bar per executed plan, segments in the fixed
 * order server, network, client (bottom to top) with fixed colors. Every
 * number comes from the /timings payload; nothing is re-derived. */

import type { Timing } from "./types.js";

export const SEGMENT_ORDER = ["server", "network", "client"] as const;
export type SegmentPart = (typeof SEGMENT_ORDER)[number];

export const SEGMENT_COLORS: Record<SegmentPart, string> = {
  server: "#4c78a8",
  network: "#e45756",
  client: "#f58518",
};

export const LABEL_TITLES: Record<string, string> = {
  baseline: "Vega alone",
  recommended: "recommended",
  custom: "custom",
};

export interface BarSegment {
  part: SegmentPart;
  value_ms: number;
  y: number;
  height: number;
  color: string;
}

export interface TimingBar {
  seq: number;
  label: string;
  total_ms: number;
  x: number;
  segments: BarSegment[];
}

export interface TimingBarModel {
  bars: TimingBar[];
  width: number;
  height: number;
  scale: number; // px per ms
}

export const BAR_W = 42;
export const BAR_GAP = 26;
const PAD = 12;
const AXIS = 22;

export function timingBars(timings: Timing[], maxBarPx = 160): TimingBarModel {
  const maxTotal = Math.max(...timings.map((t) => t.total_ms), 0);
  const scale = maxTotal > 0 ? maxBarPx / maxTotal : 0;
  const bars: TimingBar[] = timings.map((t, i) => {
    const values: Record<SegmentPart, number> = {
      server: t.server_ms,
      network: t.network_ms,
      client: t.client_ms,
    };
    let yTop = PAD + maxBarPx;
    const segments: BarSegment[] = SEGMENT_ORDER.map((part) => {
      const h = values[part] * scale;
      yTop -= h;
      return { part, value_ms: values[part], y: yTop, height: h, color: SEGMENT_COLORS[part] };
    });
    return {
      seq: t.seq,
      label: t.label,
      total_ms: t.total_ms,
      x: PAD + i * (BAR_W + BAR_GAP),
      segments,
    };
  });
  return {
    bars,
    width: PAD * 2 + timings.length * (BAR_W + BAR_GAP),
    height: PAD * 2 + maxBarPx + AXIS,
    scale,
  };
}

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function renderBarsSvg(model: TimingBarModel): string {
  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${model.width} ${model.height}" width="${model.width}" height="${model.height}">`,
  );
  for (const bar of model.bars) {
    for (const seg of bar.segments) {
      if (seg.height <= 0) continue;
      parts.push(
        `<rect class="bar-seg" data-part="${seg.part}" x="${bar.x}" y="${seg.y}" width="${BAR_W}" ` +
          `height="${seg.height}" fill="${seg.color}"><title>${seg.part}: ${seg.value_ms.toFixed(1)} ms</title></rect>`,
      );
    }
    const base = model.bars[0];
    const labelY = PAD + 160 + 12;
    parts.push(
      `<text x="${bar.x + BAR_W / 2}" y="${labelY}" font-size="10" text-anchor="middle">${esc(
        LABEL_TITLES[bar.label] ?? bar.label,
      )}</text>`,
    );
    parts.push(
      `<text x="${bar.x + BAR_W / 2}" y="${labelY + 11}" font-size="9" fill="#666" text-anchor="middle">${bar.total_ms.toFixed(
        0,
      )} ms</text>`,
    );
    void base;
  }
  parts.push("</svg>");
  return parts.join("");
}
