/** DOM bootstrap: wires the editing view (left) and performance view
 * (right) to the controllers. Buttons disable while a mutation is in
 * flight, matching the server's per-session FIFO. */

import { Chart, registerables } from "chart.js";

import { ApiClient } from "./api.js";
import { renderBarsSvg, SEGMENT_COLORS } from "./bars.js";
import { chartConfig } from "./chart.js";
import { parseSpecText, renderRowsTable, validationMessage, widgetsFor, type Widget } from "./editor.js";
import { PerfController } from "./perf.js";
import { renderPlanSvg } from "./planview.js";
import type { MarkSpec, Row, SessionCreated, SpecDocument } from "./types.js";

import censusSpec from "../../src/vegaplus/gallery/census.json";
import flightsSpec from "../../src/vegaplus/gallery/flights.json";

Chart.register(...registerables);

const api = new ApiClient();
const perf = new PerfController(api);

const $ = <T extends HTMLElement>(id: string): T => document.getElementById(id) as T;

let currentSpec: SpecDocument | null = null;
let currentSinks: Record<string, Row[]> = {};
let chart: Chart | null = null;
let busy = false;

const GALLERY: Record<string, SpecDocument> = {
  flights: flightsSpec as unknown as SpecDocument,
  census: censusSpec as unknown as SpecDocument,
};

function setBusy(b: boolean) {
  busy = b;
  document.querySelectorAll("button, input, select").forEach((el) => {
    (el as HTMLButtonElement).disabled = b;
  });
}

function showError(path: string, message: string) {
  const box = $("#validation".slice(1));
  box.textContent = `${path}: ${message}`;
  box.classList.add("error");
}

function clearError() {
  const box = $("#validation".slice(1));
  box.textContent = "";
  box.classList.remove("error");
}

function toast(message: string) {
  const el = $("#toast".slice(1));
  el.textContent = message;
  el.classList.add("visible");
  setTimeout(() => el.classList.remove("visible"), 4000);
}

async function applySpec() {
  const parsed = parseSpecText(($("#spec-editor".slice(1)) as HTMLTextAreaElement).value);
  if (parsed.error || !parsed.spec) {
    showError(parsed.error?.path ?? "$", parsed.error?.message ?? "invalid spec");
    return;
  }
  clearError();
  setBusy(true);
  try {
    const created = await api.createSession(parsed.spec, perf.network.latency_ms ? perf.network : undefined);
    adoptSession(parsed.spec, created);
  } catch (err) {
    const v = validationMessage(err);
    showError(v.path, v.message);
  } finally {
    setBusy(false);
  }
}

function adoptSession(spec: SpecDocument, created: SessionCreated) {
  currentSpec = spec;
  currentSinks = created.sinks;
  perf.adopt(spec, created);
  renderWidgets(spec);
  renderChart();
  renderInspector();
  renderPerf();
}

function renderWidgets(spec: SpecDocument) {
  const host = $("#widgets".slice(1));
  host.innerHTML = "";
  for (const w of widgetsFor(spec.signals)) {
    host.appendChild(widgetElement(w));
  }
}

function widgetElement(w: Widget): HTMLElement {
  const wrap = document.createElement("label");
  wrap.className = "widget";
  wrap.append(`${w.signal}: `);
  const send = (value: number | string | boolean) => void postSignal(w.signal, value);
  if (w.kind === "slider") {
    const input = document.createElement("input");
    input.type = "range";
    input.min = String(w.min ?? 0);
    input.max = String(w.max ?? 100);
    input.step = String(w.step ?? 1);
    input.value = String(w.value);
    input.addEventListener("change", () => send(Number(input.value)));
    wrap.appendChild(input);
  } else if (w.kind === "radio" || w.kind === "select") {
    const select = document.createElement("select");
    for (const opt of w.options ?? []) {
      const o = document.createElement("option");
      o.value = String(opt);
      o.textContent = String(opt);
      if (opt === w.value) o.selected = true;
      select.appendChild(o);
    }
    select.addEventListener("change", () => {
      const raw = (w.options ?? []).find((o) => String(o) === select.value);
      send(raw ?? select.value);
    });
    wrap.appendChild(select);
  } else {
    const input = document.createElement("input");
    input.type = "text";
    input.placeholder = "regex";
    input.value = String(w.value);
    input.addEventListener("change", () => send(input.value));
    wrap.appendChild(input);
  }
  return wrap;
}

async function postSignal(name: string, value: number | string | boolean) {
  if (!perf.state || busy) return;
  setBusy(true);
  try {
    const res = await api.postSignal(perf.state.sessionId, name, value);
    currentSinks = { ...currentSinks, ...res.sinks };
    perf.state.timings.push(res.timing);
    renderChart();
    renderInspector();
    renderPerf();
  } catch (err) {
    toast(validationMessage(err).message);
  } finally {
    setBusy(false);
  }
}

function renderChart() {
  if (!currentSpec) return;
  const marks = (currentSpec.marks ?? []) as MarkSpec[];
  const mark = marks[0];
  const canvas = $("#chart".slice(1)) as HTMLCanvasElement;
  if (!mark || !currentSinks[mark.from.data]) {
    chart?.destroy();
    chart = null;
    return;
  }
  const config = chartConfig(mark, currentSinks[mark.from.data]);
  chart?.destroy();
  chart = new Chart(canvas, config as never);
}

async function renderInspector() {
  if (!perf.state || !currentSpec) return;
  const select = $("#inspect-dataset".slice(1)) as HTMLSelectElement;
  const names = (currentSpec.data as { name: string }[]).map((d) => d.name);
  if (select.options.length !== names.length) {
    select.innerHTML = names.map((n) => `<option>${n}</option>`).join("");
  }
  const name = select.value || names[names.length - 1];
  try {
    const rows = await api.getDatasetRows(perf.state.sessionId, name, 200);
    $("#inspector".slice(1)).innerHTML = renderRowsTable(rows);
  } catch {
    $("#inspector".slice(1)).innerHTML = "<p class='muted'>(not available)</p>";
  }
}

function renderPerf() {
  if (!perf.state) return;
  const planHost = $("#plan".slice(1));
  planHost.innerHTML = renderPlanSvg(perf.planView());
  planHost.querySelectorAll(".plan-node").forEach((el) => {
    const id = Number((el as SVGGElement).dataset.nodeId);
    const kind = (el as SVGGElement).dataset.kind;
    if (kind === "signal") return;
    el.addEventListener("click", () => void toggleNode(id));
  });
  $("#bars".slice(1)).innerHTML = renderBarsSvg(perf.barsView());
  const est = perf.state.plan.estimate;
  $("#estimate".slice(1)).textContent =
    `estimate: server ${est.server_ms.toFixed(1)} ms + transfer ${est.transfer_ms.toFixed(1)} ms ` +
    `+ client ${est.client_ms.toFixed(1)} ms = ${est.total_ms.toFixed(1)} ms`;
}

async function toggleNode(nodeId: number) {
  if (busy) return;
  setBusy(true);
  try {
    const state = await perf.toggle(nodeId);
    if (state.toast) toast(state.toast);
    renderPerf();
  } finally {
    setBusy(false);
  }
}

async function applyLatency() {
  if (!currentSpec || busy) return;
  const latency = Number(($("#latency".slice(1)) as HTMLInputElement).value);
  const bandwidth = Number(($("#bandwidth".slice(1)) as HTMLInputElement).value);
  setBusy(true);
  try {
    const state = await perf.setNetwork({ latency_ms: latency, bandwidth_mbps: bandwidth });
    currentSinks = {};
    adoptSession(currentSpec, {
      session_id: state.sessionId,
      plan: state.plan,
      candidates: {},
      sinks: currentSinks,
      timings: state.timings,
    });
    await renderInspector();
  } catch (err) {
    toast(validationMessage(err).message);
  } finally {
    setBusy(false);
  }
}

function loadGallery(name: string) {
  const spec = GALLERY[name];
  ($("#spec-editor".slice(1)) as HTMLTextAreaElement).value = JSON.stringify(spec, null, 2);
  void applySpec();
}

function legend(): string {
  return Object.entries(SEGMENT_COLORS)
    .map(([part, color]) => `<span class="chip" style="background:${color}"></span>${part}`)
    .join(" ");
}

window.addEventListener("DOMContentLoaded", () => {
  $("#apply".slice(1)).addEventListener("click", () => void applySpec());
  $("#latency-apply".slice(1)).addEventListener("click", () => void applyLatency());
  $("#inspect-dataset".slice(1)).addEventListener("change", () => void renderInspector());
  $("#gallery-flights".slice(1)).addEventListener("click", () => loadGallery("flights"));
  $("#gallery-census".slice(1)).addEventListener("click", () => loadGallery("census"));
  $("#bar-legend".slice(1)).innerHTML = legend();
  loadGallery("flights");
});
